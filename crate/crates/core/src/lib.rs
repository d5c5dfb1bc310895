pub mod analysis;
pub mod diff;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod qp;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};

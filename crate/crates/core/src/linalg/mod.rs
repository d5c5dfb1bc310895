//! Sparse storage and the symmetric factorization shared by the solver and
//! the sensitivity code.

pub mod ldl;
pub mod sparse;

pub use ldl::{condition_estimate, solve_refined, NumericLdl, PivotPolicy, RefinedSolve, SymbolicLdl, SymmetricEntries};
pub use sparse::{dot, norm_inf, CsrMatrix, Triplets};

//! Primal-dual solution of the assembled QP and unit-commitment resolution.

mod ipm;
pub mod kkt;
mod uc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DemandSchedule, DEFAULT_REG, DEFAULT_VOLL};
use crate::qp::{instantiate, ParametricQP, QPInstance};

pub use kkt::{dependent_rows, residuals_of, row_dependencies, Dependency, ReducedKkt, Residuals};
pub use uc::{solve_uc, UcSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UcMode {
    /// Every UC generator must already carry a commitment.
    Fixed,
    /// Relax, round periods with output above half the minimum, re-solve.
    #[default]
    HeuristicRounding,
    /// Enumerate all commitment patterns (at most 2^20).
    Exhaustive,
}

impl std::str::FromStr for UcMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(UcMode::Fixed),
            "heuristic" | "heuristic_rounding" | "heuristic-rounding" => Ok(UcMode::HeuristicRounding),
            "exhaustive" => Ok(UcMode::Exhaustive),
            other => Err(format!("unknown UC mode `{other}` (fixed, heuristic, exhaustive)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on every KKT residual block at an optimal status.
    pub tol: f64,
    pub max_iter: usize,
    pub reg: f64,
    pub voll: f64,
    pub uc_mode: UcMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            reg: DEFAULT_REG,
            voll: DEFAULT_VOLL,
            uc_mode: UcMode::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Numerical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimalDualSolution {
    pub x: Vec<f64>,
    /// Equality multipliers. With the sign convention
    /// `Hx + q + A_eqᵀν + A_inᵀλ = 0`, the balance-row entries are the
    /// negated nodal prices; see [`PrimalDualSolution::lmp`].
    pub nu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub status: Status,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Whether the final point came from the active-set polish step.
    pub polished: bool,
}

impl PrimalDualSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Nodal prices `∂cost/∂d_{t,i}` in $/MWh, as `[t][node]`:
    /// `−(B_Dᵀν + H_Dᵀλ)`.
    pub fn lmp(&self, pqp: &ParametricQP) -> Vec<Vec<f64>> {
        let mut g = pqp.b_d.tr_mul_vec(&self.nu);
        pqp.h_d.tr_mul_vec_acc(1.0, &self.lambda, &mut g);
        g.chunks(pqp.n_nodes).map(|c| c.iter().map(|v| -v).collect()).collect()
    }

    pub fn schedule(&self, pqp: &ParametricQP) -> Vec<Vec<f64>> {
        pqp.layout.schedule(&self.x)
    }
}

/// Solves one QP instance with the interior-point method, finishing with an
/// active-set polish when it certifies the residual contract.
pub fn solve(inst: &QPInstance<'_>, opts: &SolverOptions) -> PrimalDualSolution {
    ipm::solve(inst, opts)
}

/// Convenience wrapper: instantiate at `demand` and solve, failing unless
/// the status is optimal.
pub fn solve_at(pqp: &ParametricQP, demand: &DemandSchedule, opts: &SolverOptions) -> Result<PrimalDualSolution> {
    let inst = instantiate(pqp, demand)?;
    let sol = solve(&inst, opts);
    match sol.status {
        Status::Optimal => Ok(sol),
        s => Err(Error::Solver(format!(
            "status {s:?} after {} iterations, residuals {:?}",
            sol.iterations, sol.residuals
        ))),
    }
}

/// Residual blocks of the KKT conditions at `demand`, computed independently
/// of the solver's bookkeeping.
pub fn kkt_residuals(pqp: &ParametricQP, demand: &DemandSchedule, sol: &PrimalDualSolution) -> Result<Residuals> {
    if sol.x.len() != pqp.n_x() || sol.nu.len() != pqp.n_eq() || sol.lambda.len() != pqp.n_in() {
        return Err(Error::Dimension("solution does not match QP dimensions".into()));
    }
    let inst = instantiate(pqp, demand)?;
    Ok(residuals_of(&inst, &sol.x, &sol.nu, &sol.lambda))
}

/// `primal objective − dual objective` at a KKT point.
pub fn duality_gap(inst: &QPInstance<'_>, sol: &PrimalDualSolution) -> f64 {
    let pqp = inst.pqp;
    let hx = pqp.h_mul(&sol.x);
    let xhx: f64 = hx.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
    let primal = 0.5 * xhx + pqp.q.iter().zip(&sol.x).map(|(a, b)| a * b).sum::<f64>();
    let dual = -0.5 * xhx
        - inst.b_eq.iter().zip(&sol.nu).map(|(a, b)| a * b).sum::<f64>()
        - inst.h_in.iter().zip(&sol.lambda).map(|(a, b)| a * b).sum::<f64>();
    primal - dual
}

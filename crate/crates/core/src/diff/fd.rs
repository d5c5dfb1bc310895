//! Central finite differences of total emissions, the oracle for the
//! implicit-differentiation LMEs.

use rayon::prelude::*;

use super::emissions;
use crate::error::{Error, Result};
use crate::grid::{DemandSchedule, Network};
use crate::qp::{assemble, instantiate_stacked};
use crate::linalg::norm_inf;
use crate::solver::{solve, SolverOptions, Status};

/// Tolerance of the re-solves behind each difference quotient.
pub const FD_SOLVE_TOL: f64 = 1e-10;

/// `(E(D + ε e_ti) − E(D − ε e_ti)) / 2ε` for every period and node, with
/// `2·T·n` full re-solves. Commitments in `net` must already be fixed.
///
/// At the re-solve tolerance the complementarity block is checked relative
/// to the largest multiplier; see [`Residuals::within_scaled`].
///
/// [`Residuals::within_scaled`]: crate::solver::Residuals::within_scaled
pub fn finite_difference_lmes(
    net: &Network,
    demand: &DemandSchedule,
    eps: f64,
    opts: &SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    if !(eps > 0.0) {
        return Err(Error::Dimension(format!("finite-difference step must be positive, got {eps}")));
    }
    demand.check_against(net)?;
    let pqp = assemble(net)?;
    let opts = opts.with_tol(FD_SOLVE_TOL);
    let (horizon, n) = (demand.horizon(), demand.n_nodes());
    let base = demand.stacked();

    let total_at = |k: usize, sign: f64| -> Result<f64> {
        let mut d = base.clone();
        d[k] += sign * eps;
        let inst = instantiate_stacked(&pqp, &d);
        let sol = solve(&inst, &opts);
        // Accept rounding-level complementarity on large multipliers.
        let accepted = sol.status == Status::Optimal
            || (sol.polished && sol.residuals.within_scaled(FD_SOLVE_TOL, norm_inf(&sol.lambda)));
        if !accepted {
            return Err(Error::FiniteDifference {
                period: k / n,
                node: k % n,
                sign: if sign > 0.0 { '+' } else { '-' },
                reason: format!("status {:?}, residuals {:?}", sol.status, sol.residuals),
            });
        }
        Ok(emissions(&pqp, &sol).total)
    };

    let flat: Vec<f64> = (0..horizon * n)
        .into_par_iter()
        .map(|k| Ok((total_at(k, 1.0)? - total_at(k, -1.0)?) / (2.0 * eps)))
        .collect::<Result<_>>()?;
    Ok(flat.chunks(n).map(|c| c.to_vec()).collect())
}

//! Locational marginal emissions by implicit differentiation of the KKT
//! conditions at an optimal dispatch.
//!
//! With `y = (x, ν, μ_A)` the unknowns of the equality-constrained system on
//! the binding rows `A`, the KKT map `K(D, y) = 0` has Jacobians
//!
//! ```text
//! J_y K = [ H     A_eqᵀ  A_Aᵀ ]      J_D K = [  0       ]
//!         [ A_eq  0      0    ]              [ −B_D     ]
//!         [ A_A   0      0    ]              [ −(H_D)_A ]
//! ```
//!
//! and the gradient of total emissions `E = vᵀx` is `Λ = −(J_D K)ᵀ w` with
//! `(J_y K)ᵀ w = v`: a single adjoint solve.

mod fd;
mod restriction;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DemandSchedule;
use crate::linalg::{norm_inf, CsrMatrix, Triplets};
use crate::qp::{instantiate, ParametricQP};
use crate::solver::{dependent_rows, row_dependencies, PrimalDualSolution, ReducedKkt};

pub use fd::finite_difference_lmes;
pub use restriction::{static_approximation, static_restriction, StaticLmes};

/// Total and per-period emissions of a dispatch, tCO₂.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emissions {
    pub total: f64,
    pub per_period: Vec<f64>,
}

pub fn emissions(pqp: &ParametricQP, sol: &PrimalDualSolution) -> Emissions {
    emissions_of(pqp, &sol.x)
}

pub fn emissions_of(pqp: &ParametricQP, x: &[f64]) -> Emissions {
    let layout = &pqp.layout;
    let per_period: Vec<f64> = (0..layout.horizon)
        .map(|t| {
            (0..layout.n_devices())
                .map(|j| {
                    let i = layout.output_index(j, t);
                    pqp.emis_vec[i] * x[i]
                })
                .sum::<f64>()
                * pqp.period_hours
        })
        .collect();
    Emissions {
        total: per_period.iter().sum(),
        per_period,
    }
}

/// Partition of the inequality rows at a KKT point.
///
/// `active` holds binding rows with a multiplier above `τ_λ`; `degenerate`
/// holds binding rows whose multiplier is below it. The two together are the
/// rows held tight when differentiating.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub active: Vec<usize>,
    pub inactive: Vec<usize>,
    pub degenerate: Vec<usize>,
    pub tau_slack: f64,
    pub tau_lambda: f64,
}

impl ActiveSet {
    /// Binding rows (active and degenerate), in index order.
    pub fn binding(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.active.iter().chain(&self.degenerate).copied().collect();
        rows.sort_unstable();
        rows
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }
}

/// Default classification threshold `1e-6·(1 + scale)`, where `scale` is the
/// larger of `‖x‖∞` and the largest nodal price.
pub fn default_threshold(pqp: &ParametricQP, sol: &PrimalDualSolution) -> f64 {
    let price = sol.lmp(pqp).iter().flatten().fold(0.0f64, |m, p| m.max(p.abs()));
    1e-6 * (1.0 + norm_inf(&sol.x).max(price))
}

pub fn classify_active_set(
    pqp: &ParametricQP,
    demand: &DemandSchedule,
    sol: &PrimalDualSolution,
    tau_slack: Option<f64>,
    tau_lambda: Option<f64>,
) -> Result<ActiveSet> {
    let inst = instantiate(pqp, demand)?;
    let default = default_threshold(pqp, sol);
    let tau_s = tau_slack.unwrap_or(default);
    let tau_l = tau_lambda.unwrap_or(default);
    let gx = pqp.a_in.mul_vec(&sol.x);
    let mut set = ActiveSet {
        tau_slack: tau_s,
        tau_lambda: tau_l,
        ..Default::default()
    };
    for i in 0..pqp.n_in() {
        let slack = inst.h_in[i] - gx[i];
        if slack > tau_s {
            set.inactive.push(i);
        } else if sol.lambda[i] > tau_l {
            set.active.push(i);
        } else {
            set.degenerate.push(i);
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianForm {
    /// Equality-constrained system on the binding rows; symmetric.
    Reduced,
    /// All inequality rows with complementarity rows
    /// `λ_i (A_in x − h_in)_i = 0`; unsymmetric.
    Complementarity,
}

/// `J_y K` and `J_D K` at a KKT point. In reduced form, `rows` lists the
/// inequality rows in the multiplier block, in order.
#[derive(Debug, Clone)]
pub struct KktJacobians {
    pub form: JacobianForm,
    pub jx: CsrMatrix,
    pub jd: CsrMatrix,
    pub rows: Vec<usize>,
    pub n_x: usize,
}

fn row_labels(pqp: &ParametricQP, stacked: &[usize], rows: &[usize]) -> Vec<String> {
    stacked
        .iter()
        .map(|&k| {
            if k < pqp.n_eq() {
                format!("eq {k}: {:?}", pqp.eq_tags[k])
            } else {
                let r = rows[k - pqp.n_eq()];
                format!("in {r}: {:?}", pqp.in_tags[r])
            }
        })
        .collect()
}

pub fn build_kkt_jacobians(
    pqp: &ParametricQP,
    demand: &DemandSchedule,
    sol: &PrimalDualSolution,
    aset: &ActiveSet,
    form: JacobianForm,
) -> Result<KktJacobians> {
    let inst = instantiate(pqp, demand)?;
    let (n_x, n_eq, n_in) = (pqp.n_x(), pqp.n_eq(), pqp.n_in());
    let nd = pqp.n_demand();
    match form {
        JacobianForm::Reduced => {
            let rows = aset.binding();
            let dep = dependent_rows(pqp, &rows);
            if !dep.is_empty() {
                return Err(Error::SingularJacobian {
                    rows: row_labels(pqp, &dep, &rows),
                });
            }
            let dim = n_x + n_eq + rows.len();
            let mut jx = Triplets::new(dim, dim);
            let mut jd = Triplets::new(dim, nd);
            for (i, &h) in pqp.h_diag.iter().enumerate() {
                jx.push(i, i, h);
            }
            for (r, c, v) in pqp.a_eq.iter() {
                jx.push(n_x + r, c, v);
                jx.push(c, n_x + r, v);
            }
            for (r, c, v) in pqp.b_d.iter() {
                jd.push(n_x + r, c, -v);
            }
            for (k, &r) in rows.iter().enumerate() {
                for (c, v) in pqp.a_in.row(r) {
                    jx.push(n_x + n_eq + k, c, v);
                    jx.push(c, n_x + n_eq + k, v);
                }
                for (c, v) in pqp.h_d.row(r) {
                    jd.push(n_x + n_eq + k, c, -v);
                }
            }
            Ok(KktJacobians {
                form,
                jx: jx.to_csr(),
                jd: jd.to_csr(),
                rows,
                n_x,
            })
        }
        JacobianForm::Complementarity => {
            let dim = n_x + n_eq + n_in;
            let mut jx = Triplets::new(dim, dim);
            let mut jd = Triplets::new(dim, nd);
            for (i, &h) in pqp.h_diag.iter().enumerate() {
                jx.push(i, i, h);
            }
            for (r, c, v) in pqp.a_eq.iter() {
                jx.push(n_x + r, c, v);
                jx.push(c, n_x + r, v);
            }
            for (r, c, v) in pqp.b_d.iter() {
                jd.push(n_x + r, c, -v);
            }
            let gx = pqp.a_in.mul_vec(&sol.x);
            for r in 0..n_in {
                let row = n_x + n_eq + r;
                let lam = sol.lambda[r];
                for (c, v) in pqp.a_in.row(r) {
                    jx.push(c, row, v);
                    jx.push(row, c, lam * v);
                }
                jx.push(row, row, gx[r] - inst.h_in[r]);
                for (c, v) in pqp.h_d.row(r) {
                    jd.push(row, c, -lam * v);
                }
            }
            Ok(KktJacobians {
                form,
                jx: jx.to_csr(),
                jd: jd.to_csr(),
                rows: (0..n_in).collect(),
                n_x,
            })
        }
    }
}

/// Classification thresholds; `None` uses [`default_threshold`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LmeOptions {
    pub tau_slack: Option<f64>,
    pub tau_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmeResult {
    /// `Λ[t][i]`, tCO₂/MWh.
    pub lambda: Vec<Vec<f64>>,
    pub emissions_total: f64,
    pub emissions_per_period: Vec<f64>,
    /// Set when a binding row kept in the system has a near-zero multiplier,
    /// a dependent binding row is not implied by the others for every demand
    /// perturbation, or the adjoint solve misses its tolerance. `lambda` is
    /// then a one-sided value.
    pub degenerate: bool,
    pub condition_estimate: f64,
    /// `‖J wᵀ − v‖∞ / ‖v‖∞` of the adjoint solve.
    pub ift_residual: f64,
    pub n_active: usize,
    pub n_degenerate: usize,
    /// Binding rows left out of the system because they depend on stronger
    /// ones.
    pub dropped_rows: Vec<String>,
}

/// Relative tolerance on the adjoint-solve residual.
pub const IFT_TOL: f64 = 1e-8;

pub fn compute_lmes(
    pqp: &ParametricQP,
    demand: &DemandSchedule,
    sol: &PrimalDualSolution,
    opts: &LmeOptions,
) -> Result<LmeResult> {
    if !sol.is_optimal() {
        return Err(Error::Solver(format!("LMEs need an optimal dispatch, got {:?}", sol.status)));
    }
    let aset = classify_active_set(pqp, demand, sol, opts.tau_slack, opts.tau_lambda)?;
    let (n_x, n_eq) = (pqp.n_x(), pqp.n_eq());
    // Binding rows ordered by multiplier, strongest first; a row implied by
    // stronger ones is left out of the system.
    let mut ordered = aset.binding();
    ordered.sort_by(|&a, &b| sol.lambda[b].total_cmp(&sol.lambda[a]).then(a.cmp(&b)));
    let deps = row_dependencies(pqp, &ordered);
    let dropped: Vec<usize> = deps.iter().filter(|d| d.index >= n_eq).map(|d| ordered[d.index - n_eq]).collect();
    let kept: Vec<usize> = ordered.iter().copied().filter(|r| !dropped.contains(r)).collect();
    // One-sided cases: a weakly binding row that stays in the system, or a
    // dependent row whose demand coefficients do not follow the others.
    let weak_kept = kept.iter().any(|&r| sol.lambda[r] <= aset.tau_lambda);
    let inconsistent = deps.iter().any(|d| !d.consistent || d.index < n_eq);

    let kkt = ReducedKkt::build(pqp, &kept);
    let mut v = vec![0.0; kkt.dim()];
    for (vi, e) in v.iter_mut().zip(&pqp.emis_vec) {
        *vi = e * pqp.period_hours;
    }
    let v_norm = norm_inf(&v);
    let (w, ift_residual) = if v_norm == 0.0 {
        (vec![0.0; kkt.dim()], 0.0)
    } else {
        let w = kkt.solve(&v).x;
        let jw = kkt.matvec(&w);
        let r = jw.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (w, r / v_norm)
    };

    let mut grad = pqp.b_d.tr_mul_vec(&w[n_x..n_x + n_eq]);
    for (k, &r) in kept.iter().enumerate() {
        let wk = w[n_x + n_eq + k];
        for (c, hv) in pqp.h_d.row(r) {
            grad[c] += hv * wk;
        }
    }
    let em = emissions(pqp, sol);
    Ok(LmeResult {
        lambda: grad.chunks(pqp.n_nodes).map(|c| c.to_vec()).collect(),
        emissions_total: em.total,
        emissions_per_period: em.per_period,
        degenerate: weak_kept || inconsistent || !(ift_residual <= IFT_TOL),
        condition_estimate: kkt.condition_estimate(),
        ift_residual,
        n_active: aset.active.len(),
        n_degenerate: aset.degenerate.len(),
        dropped_rows: dropped.iter().map(|&r| format!("in {r}: {:?}", pqp.in_tags[r])).collect(),
    })
}

/// Uniform `±amplitude` MW noise on every demand entry; a deterministic way
/// to step off a degenerate point.
pub fn jitter_demand(demand: &DemandSchedule, amplitude: f64, seed: u64) -> DemandSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = demand.clone();
    for t in 0..demand.horizon() {
        for i in 0..demand.n_nodes() {
            let e: f64 = rng.gen_range(-amplitude..=amplitude);
            out.set(t, i, demand.get(t, i) + e);
        }
    }
    out
}

#[cfg(test)]
mod tests;

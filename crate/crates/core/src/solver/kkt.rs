//! Equality-constrained KKT systems on a chosen set of inequality rows, and
//! the residual blocks of the full KKT conditions.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::linalg::{
    condition_estimate, norm_inf, solve_refined, NumericLdl, PivotPolicy, RefinedSolve, SymbolicLdl,
    SymmetricEntries,
};
use crate::qp::{ParametricQP, QPInstance};

/// Norms of the four KKT residual blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖Hx + q + A_eqᵀν + A_inᵀλ‖∞`
    pub stationarity: f64,
    /// `‖A_eq x − b_eq‖∞`
    pub primal_eq: f64,
    /// `max(0, max(A_in x − h_in))`
    pub primal_in: f64,
    /// `‖λ ∘ (A_in x − h_in)‖∞`
    pub comp_slack: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal_eq).max(self.primal_in).max(self.comp_slack)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }

    /// [`Residuals::within`] with the complementarity bound scaled by the
    /// largest multiplier, `tol · max(1, lambda_max)`.
    pub fn within_scaled(&self, tol: f64, lambda_max: f64) -> bool {
        self.stationarity <= tol
            && self.primal_eq <= tol
            && self.primal_in <= tol
            && self.comp_slack <= tol * lambda_max.max(1.0)
    }
}

/// Recomputes the residual blocks from scratch for `(x, ν, λ)`.
pub fn residuals_of(inst: &QPInstance<'_>, x: &[f64], nu: &[f64], lam: &[f64]) -> Residuals {
    let pqp = inst.pqp;
    let mut grad = pqp.h_mul(x);
    for (g, q) in grad.iter_mut().zip(&pqp.q) {
        *g += q;
    }
    pqp.a_eq.tr_mul_vec_acc(1.0, nu, &mut grad);
    pqp.a_in.tr_mul_vec_acc(1.0, lam, &mut grad);

    let ax = pqp.a_eq.mul_vec(x);
    let primal_eq = ax.iter().zip(&inst.b_eq).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let gx = pqp.a_in.mul_vec(x);
    let mut primal_in = 0.0f64;
    let mut comp_slack = 0.0f64;
    for ((g, h), l) in gx.iter().zip(&inst.h_in).zip(lam) {
        let viol = g - h;
        primal_in = primal_in.max(viol);
        comp_slack = comp_slack.max((l * viol).abs());
    }
    Residuals {
        stationarity: norm_inf(&grad),
        primal_eq,
        primal_in,
        comp_slack,
    }
}

/// The symmetric system
///
/// ```text
/// [ H     A_eqᵀ  A_Sᵀ ] [ x ]
/// [ A_eq  0      0    ] [ ν ]
/// [ A_S   0      0    ] [ μ ]
/// ```
///
/// for a subset `S` of the inequality rows. It is both the Newton matrix of
/// the active-set polish step and the KKT Jacobian differentiated for LMEs.
pub struct ReducedKkt {
    pub n_x: usize,
    pub n_eq: usize,
    pub rows: Vec<usize>,
    op: SymmetricEntries,
    symbolic: SymbolicLdl,
    numeric: NumericLdl,
}

/// Static regularization used when factoring reduced KKT matrices; accuracy
/// against the exact matrix is recovered by iterative refinement.
pub const KKT_STATIC_REG: f64 = 1e-9;

impl ReducedKkt {
    pub fn build(pqp: &ParametricQP, rows: &[usize]) -> Self {
        let n_x = pqp.n_x();
        let n_eq = pqp.n_eq();
        let dim = n_x + n_eq + rows.len();
        let mut op = SymmetricEntries::new(dim);
        for (i, &h) in pqp.h_diag.iter().enumerate() {
            op.push(i, i, h);
        }
        for (r, c, v) in pqp.a_eq.iter() {
            op.push(n_x + r, c, v);
        }
        for (k, &r) in rows.iter().enumerate() {
            for (c, v) in pqp.a_in.row(r) {
                op.push(n_x + n_eq + k, c, v);
            }
        }
        let symbolic = SymbolicLdl::analyze(dim, &op.pos);
        let signs: Vec<f64> = (0..dim).map(|i| if i < n_x { 1.0 } else { -1.0 }).collect();
        let shift: Vec<f64> = signs.iter().map(|s| s * KKT_STATIC_REG).collect();
        let numeric = symbolic.factor(&op.val, &shift, &signs, PivotPolicy::default());
        ReducedKkt {
            n_x,
            n_eq,
            rows: rows.to_vec(),
            op,
            symbolic,
            numeric,
        }
    }

    pub fn dim(&self) -> usize {
        self.op.n
    }

    /// Solves `K y = rhs` (K is symmetric, so this is also the adjoint solve).
    pub fn solve(&self, rhs: &[f64]) -> RefinedSolve {
        solve_refined(&self.symbolic, &self.numeric, &self.op, rhs, 1e-13, 60)
    }

    pub fn matvec(&self, y: &[f64]) -> Vec<f64> {
        self.op.matvec(y)
    }

    pub fn condition_estimate(&self) -> f64 {
        condition_estimate(&self.symbolic, &self.numeric, &self.op)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.op.to_dense()
    }
}

/// Rows of `[A_eq; A_in[rows]]` that are linear combinations of earlier
/// rows, found by sparse forward elimination. Returned as indices into the
/// stacked list (equalities first).
pub fn dependent_rows(pqp: &ParametricQP, rows: &[usize]) -> Vec<usize> {
    row_dependencies(pqp, rows).into_iter().map(|d| d.index).collect()
}

/// A stacked row that is a combination of earlier rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dependency {
    /// Index into the stacked list `[A_eq; A_in[rows]]`.
    pub index: usize,
    /// Whether the same combination of the rows' demand coefficients
    /// (`B_D`, `H_D`) also vanishes. If so the row stays tight whenever the
    /// others do, for every demand perturbation; if not, it can only stay
    /// tight in one direction.
    pub consistent: bool,
}

/// Like [`dependent_rows`], also reporting whether each dependent row is
/// consistent under demand perturbations.
pub fn row_dependencies(pqp: &ParametricQP, rows: &[usize]) -> Vec<Dependency> {
    let n_x = pqp.n_x();
    // Each row carries its demand coefficients in columns n_x.. so the
    // elimination tracks them alongside.
    let stacked = (0..pqp.n_eq())
        .map(|r| (pqp.a_eq.row(r).collect::<Vec<_>>(), pqp.b_d.row(r).collect::<Vec<_>>()))
        .chain(
            rows.iter()
                .map(|&r| (pqp.a_in.row(r).collect::<Vec<_>>(), pqp.h_d.row(r).collect::<Vec<_>>())),
        );
    let mut pivots: HashMap<usize, BTreeMap<usize, f64>> = HashMap::new();
    let mut out = Vec::new();
    for (k, (a, d)) in stacked.enumerate() {
        let scale = a.iter().chain(&d).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let drop = 1e-10 * scale.max(1e-300);
        let mut r: BTreeMap<usize, f64> = a
            .into_iter()
            .chain(d.into_iter().map(|(c, v)| (n_x + c, v)))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        loop {
            r.retain(|_, v| v.abs() > drop);
            let lead = r.iter().next().map(|(&c, &v)| (c, v)).filter(|(c, _)| *c < n_x);
            let Some((lead, lv)) = lead else {
                out.push(Dependency {
                    index: k,
                    consistent: r.is_empty(),
                });
                break;
            };
            match pivots.get(&lead) {
                Some(p) => {
                    let f = lv / p[&lead];
                    for (&c, &pv) in p {
                        *r.entry(c).or_insert(0.0) -= f * pv;
                    }
                    r.remove(&lead);
                }
                None => {
                    pivots.insert(lead, r);
                    break;
                }
            }
        }
    }
    out
}

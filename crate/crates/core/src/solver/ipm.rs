//! Mehrotra predictor-corrector interior-point method on
//! `min ½xᵀHx + qᵀx  s.t.  A x = b,  G x + s = h,  s ≥ 0`,
//! followed by an active-set polish that solves the equality-constrained
//! KKT system on the identified active rows.

use log::debug;

use super::kkt::{dependent_rows, residuals_of, ReducedKkt, Residuals};
use super::{PrimalDualSolution, SolverOptions, Status};
use crate::linalg::{norm_inf, solve_refined, PivotPolicy, SymbolicLdl, SymmetricEntries};
use crate::qp::{ParametricQP, QPInstance};

const STEP_FRACTION: f64 = 0.99;
const W_FLOOR: f64 = 1e-14;
const W_CEIL: f64 = 1e14;
const STATIC_REG: f64 = 1e-9;
const STAGNATION_ITERS: usize = 25;

/// Augmented Newton system `[[H, Aᵀ, Gᵀ], [A, 0, 0], [G, 0, −W]]` with a
/// fixed pattern; only the `−W` block changes between iterations.
struct Newton {
    op: SymmetricEntries,
    symbolic: SymbolicLdl,
    w_slots: Vec<usize>,
    signs: Vec<f64>,
    shift: Vec<f64>,
}

impl Newton {
    fn new(inst: &QPInstance<'_>) -> Self {
        let pqp = inst.pqp;
        let (n_x, n_eq, n_in) = (pqp.n_x(), pqp.n_eq(), pqp.n_in());
        let dim = n_x + n_eq + n_in;
        let mut op = SymmetricEntries::new(dim);
        for (i, &h) in pqp.h_diag.iter().enumerate() {
            op.push(i, i, h);
        }
        for (r, c, v) in pqp.a_eq.iter() {
            op.push(n_x + r, c, v);
        }
        for (r, c, v) in pqp.a_in.iter() {
            op.push(n_x + n_eq + r, c, v);
        }
        let mut w_slots = Vec::with_capacity(n_in);
        for r in 0..n_in {
            w_slots.push(op.val.len());
            op.push(n_x + n_eq + r, n_x + n_eq + r, -1.0);
        }
        let symbolic = SymbolicLdl::analyze(dim, &op.pos);
        let signs: Vec<f64> = (0..dim).map(|i| if i < n_x { 1.0 } else { -1.0 }).collect();
        let shift = signs.iter().map(|s| s * STATIC_REG).collect();
        Newton {
            op,
            symbolic,
            w_slots,
            signs,
            shift,
        }
    }

    fn set_w(&mut self, w: &[f64]) {
        for (&slot, &wi) in self.w_slots.iter().zip(w) {
            self.op.val[slot] = -wi.clamp(W_FLOOR, W_CEIL);
        }
    }

    /// Factors the current matrix and returns a solver closure.
    fn factor(&self) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
        let numeric = self.symbolic.factor(&self.op.val, &self.shift, &self.signs, PivotPolicy::default());
        move |rhs: &[f64]| solve_refined(&self.symbolic, &numeric, &self.op, rhs, 1e-13, 8).x
    }
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .fold(1.0f64 / STEP_FRACTION, |a, (v, d)| a.min(-v / d))
}

pub(super) fn solve(inst: &QPInstance<'_>, opts: &SolverOptions) -> PrimalDualSolution {
    let pqp = inst.pqp;
    let (n_x, n_eq, m) = (pqp.n_x(), pqp.n_eq(), pqp.n_in());
    let tol = opts.tol;

    if m == 0 {
        return match polish(inst, &[], &[], tol) {
            Some((x, nu, lambda, residuals)) => PrimalDualSolution {
                status: polished_status(&residuals, &lambda, tol),
                x,
                nu,
                lambda,
                residuals,
                iterations: 0,
                polished: true,
            },
            None => failure(inst, Status::Numerical, 0),
        };
    }

    let mut newton = Newton::new(inst);

    // Starting point: least-squares-like solve with W = I, then shift the
    // slacks and multipliers into the positive orthant.
    newton.set_w(&vec![1.0; m]);
    let (mut x, mut nu, mut z, mut s) = {
        let solve = newton.factor();
        let mut rhs: Vec<f64> = pqp.q.iter().map(|q| -q).collect();
        rhs.extend_from_slice(&inst.b_eq);
        rhs.extend_from_slice(&inst.h_in);
        let y = solve(&rhs);
        let x = y[..n_x].to_vec();
        let nu = y[n_x..n_x + n_eq].to_vec();
        let gx = pqp.a_in.mul_vec(&x);
        let mut s: Vec<f64> = inst.h_in.iter().zip(&gx).map(|(h, g)| h - g).collect();
        let mut z: Vec<f64> = y[n_x + n_eq..].to_vec();
        for v in [&mut s, &mut z] {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            if lo <= 0.0 {
                v.iter_mut().for_each(|e| *e += 1.0 - lo);
            }
        }
        (x, nu, z, s)
    };

    let scale = 1.0 + norm_inf(&pqp.q).max(norm_inf(&inst.h_in)).max(norm_inf(&inst.b_eq));
    let mut last_polish: Option<Vec<usize>> = None;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let mut stalls = 0;
    // Best merit at the last 10% improvement, and when it happened.
    let mut progress = (f64::INFINITY, 0usize);

    for iter in 1..=opts.max_iter {
        // Residuals of the slack form.
        let mut rd = pqp.h_mul(&x);
        for (r, q) in rd.iter_mut().zip(&pqp.q) {
            *r += q;
        }
        pqp.a_eq.tr_mul_vec_acc(1.0, &nu, &mut rd);
        pqp.a_in.tr_mul_vec_acc(1.0, &z, &mut rd);
        let mut rp = pqp.a_eq.mul_vec(&x);
        for (r, b) in rp.iter_mut().zip(&inst.b_eq) {
            *r -= b;
        }
        let mut ri = pqp.a_in.mul_vec(&x);
        for ((r, s), h) in ri.iter_mut().zip(&s).zip(&inst.h_in) {
            *r += s - h;
        }
        let mu = s.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() / m as f64;

        let plain = residuals_of(inst, &x, &nu, &z);
        let merit = plain.max();
        if best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((merit, x.clone(), nu.clone(), z.clone()));
        }
        if merit < 0.9 * progress.0 {
            progress = (merit, iter);
        } else if iter - progress.1 >= STAGNATION_ITERS && !plain.within(tol) {
            // No progress; a primal residual that will not close means no
            // feasible point.
            let primal = plain.primal_eq.max(plain.primal_in);
            let status = if primal > 1e-6 * scale { Status::Infeasible } else { Status::Numerical };
            debug!("stagnated at iteration {iter}: primal residual {primal:e}");
            return finish_best(inst, best, status, iter);
        }

        // Polish once the central path is close to the boundary.
        if mu <= 1e-5 * scale {
            let active: Vec<usize> = (0..m).filter(|&i| z[i] > s[i]).collect();
            if last_polish.as_ref() != Some(&active) {
                if let Some((px, pnu, plam, res)) = polish(inst, &active, &z, tol) {
                    debug!("polished after {iter} iterations, {} active rows", active.len());
                    return PrimalDualSolution {
                        status: polished_status(&res, &plam, tol),
                        x: px,
                        nu: pnu,
                        lambda: plam,
                        residuals: res,
                        iterations: iter,
                        polished: true,
                    };
                }
                last_polish = Some(active);
            }
        }
        if plain.within(tol) && mu <= tol {
            return PrimalDualSolution {
                x,
                nu,
                lambda: z,
                status: Status::Optimal,
                residuals: plain,
                iterations: iter,
                polished: false,
            };
        }

        let w: Vec<f64> = s.iter().zip(&z).map(|(s, z)| s / z).collect();
        newton.set_w(&w);
        let solve = newton.factor();

        let direction = |rc: &[f64]| {
            let mut rhs: Vec<f64> = rd.iter().map(|r| -r).collect();
            rhs.extend(rp.iter().map(|r| -r));
            rhs.extend((0..m).map(|i| -ri[i] + rc[i] / z[i]));
            let y = solve(&rhs);
            let dx = y[..n_x].to_vec();
            let dnu = y[n_x..n_x + n_eq].to_vec();
            let dz = y[n_x + n_eq..].to_vec();
            let ds: Vec<f64> = (0..m).map(|i| (-rc[i] - s[i] * dz[i]) / z[i]).collect();
            (dx, dnu, dz, ds)
        };

        // Predictor.
        let rc_aff: Vec<f64> = s.iter().zip(&z).map(|(a, b)| a * b).collect();
        let (_, _, dz_a, ds_a) = direction(&rc_aff);
        let alpha_a = max_step(&s, &ds_a).min(max_step(&z, &dz_a)).min(1.0);
        let mu_aff = (0..m)
            .map(|i| (s[i] + alpha_a * ds_a[i]) * (z[i] + alpha_a * dz_a[i]))
            .sum::<f64>()
            / m as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc: Vec<f64> = (0..m)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let (dx, dnu, dz, ds) = direction(&rc);
        let alpha = (STEP_FRACTION * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);

        for (v, d) in x.iter_mut().zip(&dx) {
            *v += alpha * d;
        }
        for (v, d) in nu.iter_mut().zip(&dnu) {
            *v += alpha * d;
        }
        for (v, d) in z.iter_mut().zip(&dz) {
            *v += alpha * d;
        }
        for (v, d) in s.iter_mut().zip(&ds) {
            *v += alpha * d;
        }
        if !x.iter().chain(&z).chain(&nu).all(|v| v.is_finite()) {
            return failure(inst, Status::Numerical, iter);
        }

        stalls = if alpha < 1e-8 { stalls + 1 } else { 0 };
        if stalls >= 5 || norm_inf(&z) > 1e13 * scale {
            let status = if norm_inf(&z) > 1e10 * scale && norm_inf(&ri) > tol {
                Status::Infeasible
            } else {
                Status::Numerical
            };
            debug!("stopping at iteration {iter}: alpha {alpha:e}, |z| {:e}", norm_inf(&z));
            return finish_best(inst, best, status, iter);
        }
    }
    finish_best(inst, best, Status::Numerical, opts.max_iter)
}

fn finish_best(
    inst: &QPInstance<'_>,
    best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)>,
    status: Status,
    iterations: usize,
) -> PrimalDualSolution {
    match best {
        Some((_, x, nu, lambda)) => PrimalDualSolution {
            residuals: residuals_of(inst, &x, &nu, &lambda),
            x,
            nu,
            lambda,
            status,
            iterations,
            polished: false,
        },
        None => failure(inst, status, iterations),
    }
}

fn failure(inst: &QPInstance<'_>, status: Status, iterations: usize) -> PrimalDualSolution {
    let pqp = inst.pqp;
    let x = vec![0.0; pqp.n_x()];
    let nu = vec![0.0; pqp.n_eq()];
    let lambda = vec![0.0; pqp.n_in()];
    PrimalDualSolution {
        residuals: residuals_of(inst, &x, &nu, &lambda),
        x,
        nu,
        lambda,
        status,
        iterations,
        polished: false,
    }
}

type Polished = (Vec<f64>, Vec<f64>, Vec<f64>, Residuals);

/// Drops linearly dependent rows from `rows`, keeping those with the larger
/// multiplier estimate `weight` first. Under primal degeneracy the weakest
/// binding constraint is released, so the device that is cheapest to move
/// becomes marginal.
fn independent_rows(pqp: &ParametricQP, rows: &[usize], weight: &[f64]) -> Vec<usize> {
    let mut ordered = rows.to_vec();
    if !weight.is_empty() {
        ordered.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
    }
    let dep = dependent_rows(pqp, &ordered);
    let n_eq = pqp.n_eq();
    ordered
        .iter()
        .enumerate()
        .filter(|(k, _)| dep.binary_search(&(n_eq + k)).is_err())
        .map(|(_, &r)| r)
        .collect()
}

/// Complementarity of a polished point is `λ_i` times a rounding-level
/// slack, so with large multipliers (congestion priced at the value of lost
/// load) an absolute bound can sit below floating-point resolution. The
/// polish accepts `‖λ ∘ (Gx − h)‖∞ ≤ tol · max(1, ‖λ‖∞)`; only points that
/// also meet the absolute bound are reported optimal.
fn within_scaled(res: &Residuals, lambda: &[f64], tol: f64) -> bool {
    res.within_scaled(tol, norm_inf(lambda))
}

fn polished_status(res: &Residuals, lambda: &[f64], tol: f64) -> Status {
    if res.within(tol) {
        Status::Optimal
    } else {
        debug_assert!(within_scaled(res, lambda, tol));
        Status::Numerical
    }
}

/// Solves the equality-constrained KKT system with `active` rows held tight
/// and accepts it if the multipliers are dual feasible, inactive rows stay
/// feasible and the residuals pass [`within_scaled`].
fn polish(inst: &QPInstance<'_>, active: &[usize], z: &[f64], tol: f64) -> Option<Polished> {
    let mut active = active.to_vec();
    // A few primal-dual active-set corrections: release rows with negative
    // multipliers, add rows the trial point violates.
    for _ in 0..POLISH_ROUNDS {
        let (x, nu, lambda, kept) = polish_step(inst, &active, z);
        let negative: Vec<usize> = kept.iter().copied().filter(|&r| lambda[r] < -tol).collect();
        let gx = inst.pqp.a_in.mul_vec(&x);
        let violated: Vec<usize> = (0..gx.len())
            .filter(|&r| gx[r] - inst.h_in[r] > tol && !kept.contains(&r))
            .collect();
        if negative.is_empty() && violated.is_empty() {
            let lambda: Vec<f64> = lambda.into_iter().map(|l| l.max(0.0)).collect();
            let res = residuals_of(inst, &x, &nu, &lambda);
            return within_scaled(&res, &lambda, tol).then_some((x, nu, lambda, res));
        }
        active.retain(|r| !negative.contains(r));
        active.extend(violated);
        active.sort_unstable();
    }
    None
}

const POLISH_ROUNDS: usize = 6;

fn polish_step(inst: &QPInstance<'_>, active: &[usize], z: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<usize>) {
    let pqp = inst.pqp;
    let (n_x, n_eq) = (pqp.n_x(), pqp.n_eq());
    let kept = independent_rows(pqp, active, z);
    let kkt = ReducedKkt::build(pqp, &kept);
    let mut rhs: Vec<f64> = pqp.q.iter().map(|q| -q).collect();
    rhs.extend_from_slice(&inst.b_eq);
    rhs.extend(kept.iter().map(|&r| inst.h_in[r]));
    let y = kkt.solve(&rhs).x;
    let mut x = y[..n_x].to_vec();
    // Put variables exactly on their active bounds.
    for &r in &kept {
        if pqp.a_in.row_nnz(r) == 1 {
            let (c, v) = pqp.a_in.row(r).next().expect("one entry");
            x[c] = inst.h_in[r] / v;
        }
    }
    let nu = y[n_x..n_x + n_eq].to_vec();
    let mut lambda = vec![0.0; pqp.n_in()];
    for (k, &r) in kept.iter().enumerate() {
        lambda[r] = y[n_x + n_eq + k];
    }
    (x, nu, lambda, kept)
}

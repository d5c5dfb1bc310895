//! Sparse LDLᵀ factorization for symmetric quasi-definite and indefinite KKT
//! matrices.
//!
//! The factorization is split the usual way: [`SymbolicLdl::analyze`] computes a
//! fill-reducing ordering (approximate minimum degree), the elimination tree and
//! the column counts of `L` once per sparsity pattern; [`SymbolicLdl::factor`]
//! then runs an up-looking numeric factorization for any set of values on that
//! pattern. This is what lets the interior-point loop refactor its Newton
//! matrix every iteration without re-running the ordering.
//!
//! Pivots are static: every diagonal entry has an expected sign (`+1` for
//! primal rows, `-1` for multiplier rows). A pivot whose sign is wrong or whose
//! magnitude is below `pivot_eps` is replaced by `sign * pivot_reg` and its
//! index recorded, so singular systems still produce a (regularized) factor
//! and callers can decide what to do with it. Accuracy with respect to the
//! unregularized matrix is restored by [`solve_refined`].

use log::trace;

use super::sparse::norm_inf;

const NONE: usize = usize::MAX;

/// Fill-reducing ordering and elimination-tree data for one sparsity pattern.
#[derive(Debug, Clone)]
pub struct SymbolicLdl {
    n: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    /// Permuted upper-triangular CSC pattern.
    ap: Vec<usize>,
    ai: Vec<usize>,
    /// For each input entry, its slot in the permuted value array.
    entry_slot: Vec<usize>,
    /// Slot of each (original-index) diagonal entry.
    diag_slot: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct PivotPolicy {
    pub pivot_eps: f64,
    pub pivot_reg: f64,
}

impl Default for PivotPolicy {
    fn default() -> Self {
        PivotPolicy {
            pivot_eps: 1e-13,
            pivot_reg: 1e-8,
        }
    }
}

/// Numeric factor `P K Pᵀ = L D Lᵀ`.
#[derive(Debug, Clone)]
pub struct NumericLdl {
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    /// Original indices whose pivots had to be replaced.
    regularized: Vec<usize>,
}

impl SymbolicLdl {
    /// `entries` lists the structurally nonzero positions of a symmetric matrix;
    /// either triangle may be given and duplicates are allowed. The diagonal is
    /// always included.
    pub fn analyze(n: usize, entries: &[(usize, usize)]) -> Self {
        // Upper-triangular pattern in original numbering, for the ordering.
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(j);
        }
        for &(i, j) in entries {
            assert!(i < n && j < n, "entry ({i},{j}) outside {n}x{n}");
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            cols[c].push(r);
        }
        for col in cols.iter_mut() {
            col.sort_unstable();
            col.dedup();
        }

        let perm = if n == 0 {
            Vec::new()
        } else {
            let mut a_p = Vec::with_capacity(n + 1);
            let mut a_i = Vec::new();
            a_p.push(0usize);
            for col in &cols {
                a_i.extend_from_slice(col);
                a_p.push(a_i.len());
            }
            match amd::order(n, &a_p, &a_i, &amd::Control::default()) {
                Ok((p, _, _)) => p,
                Err(status) => {
                    log::warn!("AMD ordering failed ({status:?}); using natural order");
                    (0..n).collect()
                }
            }
        };
        let mut pinv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }

        // Permuted upper pattern; input entry -> (col, row) in permuted space.
        let permuted = |i: usize, j: usize| {
            let (pi, pj) = (pinv[i], pinv[j]);
            if pi <= pj {
                (pj, pi)
            } else {
                (pi, pj)
            }
        };
        let mut pcols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, col) in cols.iter().enumerate() {
            for &i in col {
                let (c, r) = permuted(i, j);
                pcols[c].push(r);
            }
        }
        let mut ap = Vec::with_capacity(n + 1);
        let mut ai = Vec::new();
        ap.push(0);
        for col in pcols.iter_mut() {
            col.sort_unstable();
            col.dedup();
            ai.extend_from_slice(col);
            ap.push(ai.len());
        }
        let slot = |c: usize, r: usize| -> usize {
            let span = ap[c]..ap[c + 1];
            ap[c] + ai[span].binary_search(&r).expect("entry present in pattern")
        };
        let entry_slot = entries
            .iter()
            .map(|&(i, j)| {
                let (c, r) = permuted(i, j);
                slot(c, r)
            })
            .collect();
        let diag_slot = (0..n).map(|i| slot(pinv[i], pinv[i])).collect();

        let (etree, lnz) = elimination_tree(n, &ap, &ai);
        let mut lp = Vec::with_capacity(n + 1);
        lp.push(0);
        for k in 0..n {
            lp.push(lp[k] + lnz[k]);
        }
        trace!("ldl analyze: n = {n}, nnz(A) = {}, nnz(L) = {}", ai.len(), lp[n]);

        SymbolicLdl {
            n,
            perm,
            ap,
            ai,
            entry_slot,
            diag_slot,
            etree,
            lp,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    /// Factors the matrix with `values[e]` at input entry `e` plus
    /// `diag_shift[i]` on each diagonal. `signs[i]` is the expected pivot sign.
    pub fn factor(
        &self,
        values: &[f64],
        diag_shift: &[f64],
        signs: &[f64],
        policy: PivotPolicy,
    ) -> NumericLdl {
        let n = self.n;
        assert_eq!(values.len(), self.entry_slot.len());
        assert_eq!(diag_shift.len(), n);
        assert_eq!(signs.len(), n);

        let mut ax = vec![0.0; self.ai.len()];
        for (&s, &v) in self.entry_slot.iter().zip(values) {
            ax[s] += v;
        }
        for (i, &s) in self.diag_slot.iter().enumerate() {
            ax[s] += diag_shift[i];
        }
        let psign: Vec<f64> = self.perm.iter().map(|&p| signs[p]).collect();

        let nnz_l = self.lp[n];
        let mut li = vec![0usize; nnz_l];
        let mut lx = vec![0.0; nnz_l];
        let mut d = vec![0.0; n];
        let mut dinv = vec![0.0; n];
        let mut regularized = Vec::new();

        let mut y_vals = vec![0.0; n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut next_in_col = self.lp[..n].to_vec();

        for k in 0..n {
            let mut nnz_y = 0;
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    d[k] = ax[p];
                    continue;
                }
                y_vals[b] = ax[p];
                if y_used[b] {
                    continue;
                }
                // Reach of b in the elimination tree, stopped at marked nodes.
                let mut top = 0;
                let mut i = b;
                while i != NONE && i < k && !y_used[i] {
                    y_used[i] = true;
                    stack[top] = i;
                    top += 1;
                    i = self.etree[i];
                }
                while top > 0 {
                    top -= 1;
                    y_idx[nnz_y] = stack[top];
                    nnz_y += 1;
                }
            }

            for t in (0..nnz_y).rev() {
                let c = y_idx[t];
                let yc = y_vals[c];
                let end = next_in_col[c];
                for q in self.lp[c]..end {
                    y_vals[li[q]] -= lx[q] * yc;
                }
                li[end] = k;
                let l = yc * dinv[c];
                lx[end] = l;
                d[k] -= yc * l;
                next_in_col[c] += 1;
                y_vals[c] = 0.0;
                y_used[c] = false;
            }

            if !(psign[k] * d[k] > policy.pivot_eps) {
                regularized.push(self.perm[k]);
                d[k] = psign[k] * policy.pivot_reg;
            }
            dinv[k] = 1.0 / d[k];
        }

        NumericLdl {
            li,
            lx,
            d,
            dinv,
            regularized,
        }
    }

    /// Solves `L D Lᵀ` (in original numbering) in place.
    pub fn solve_in_place(&self, num: &NumericLdl, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let yi = y[i];
            if yi != 0.0 {
                for q in self.lp[i]..self.lp[i + 1] {
                    y[num.li[q]] -= num.lx[q] * yi;
                }
            }
        }
        for (yi, di) in y.iter_mut().zip(&num.dinv) {
            *yi *= di;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for q in self.lp[i]..self.lp[i + 1] {
                s -= num.lx[q] * y[num.li[q]];
            }
            y[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }
}

impl NumericLdl {
    pub fn regularized_pivots(&self) -> &[usize] {
        &self.regularized
    }

    /// Ratio of largest to smallest pivot magnitude, a cheap lower-quality
    /// conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        let (lo, hi) = self
            .d
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d.abs()), hi.max(d.abs())));
        if self.d.is_empty() {
            1.0
        } else {
            hi / lo
        }
    }

    /// Count of negative pivots (inertia check for quasi-definite systems).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|d| **d < 0.0).count()
    }
}

fn elimination_tree(n: usize, ap: &[usize], ai: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut etree = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    let mut flag = vec![NONE; n];
    for j in 0..n {
        flag[j] = j;
        for &r in &ai[ap[j]..ap[j + 1]] {
            let mut i = r;
            if i >= j {
                continue;
            }
            while flag[i] != j {
                if etree[i] == NONE {
                    etree[i] = j;
                }
                lnz[i] += 1;
                flag[i] = j;
                i = etree[i];
            }
        }
    }
    (etree, lnz)
}

/// Symmetric matrix given by entry list: each off-diagonal entry stands for
/// both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone)]
pub struct SymmetricEntries {
    pub n: usize,
    pub pos: Vec<(usize, usize)>,
    pub val: Vec<f64>,
}

impl SymmetricEntries {
    pub fn new(n: usize) -> Self {
        SymmetricEntries {
            n,
            pos: Vec::new(),
            val: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.pos.push((i, j));
        self.val.push(v);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (&(i, j), &v) in self.pos.iter().zip(&self.val) {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    /// Induced 1-norm (max column sum).
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (&(i, j), &v) in self.pos.iter().zip(&self.val) {
            col[j] += v.abs();
            if i != j {
                col[i] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (&(i, j), &v) in self.pos.iter().zip(&self.val) {
            m[i][j] += v;
            if i != j {
                m[j][i] += v;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct RefinedSolve {
    pub x: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `K x = b` with the (possibly regularized) factor of `K` as a
/// preconditioner, iterating on the true residual `b - K x` until
/// `‖r‖∞ ≤ rtol · max(1, ‖b‖∞)`.
pub fn solve_refined(
    symbolic: &SymbolicLdl,
    factor: &NumericLdl,
    op: &SymmetricEntries,
    b: &[f64],
    rtol: f64,
    max_refine: usize,
) -> RefinedSolve {
    let target = rtol * norm_inf(b).max(1.0);
    let mut x = b.to_vec();
    symbolic.solve_in_place(factor, &mut x);
    let mut r = residual(op, &x, b);
    let mut rn = norm_inf(&r);
    let mut iterations = 0;
    while rn > target && iterations < max_refine {
        symbolic.solve_in_place(factor, &mut r);
        let trial: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + b).collect();
        let r_new = residual(op, &trial, b);
        let rn_new = norm_inf(&r_new);
        iterations += 1;
        if !(rn_new < rn) {
            break;
        }
        x = trial;
        r = r_new;
        rn = rn_new;
    }
    RefinedSolve {
        converged: rn <= target,
        x,
        residual_inf: rn,
        iterations,
    }
}

fn residual(op: &SymmetricEntries, x: &[f64], b: &[f64]) -> Vec<f64> {
    let kx = op.matvec(x);
    b.iter().zip(&kx).map(|(b, k)| b - k).collect()
}

/// Hager's estimate of `‖K⁻¹‖₁` times `‖K‖₁` for symmetric `K`.
pub fn condition_estimate(symbolic: &SymbolicLdl, factor: &NumericLdl, op: &SymmetricEntries) -> f64 {
    let n = op.n;
    if n == 0 {
        return 1.0;
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let mut y = x.clone();
        symbolic.solve_in_place(factor, &mut y);
        est = y.iter().map(|v| v.abs()).sum::<f64>();
        let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
        symbolic.solve_in_place(factor, &mut z);
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[jmax] = 1.0;
    }
    est * op.norm1()
}

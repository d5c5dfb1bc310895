//! Lowering of a [`Network`] over its horizon into one parametric QP
//!
//! ```text
//! minimize    ½ xᵀ H x + qᵀ x
//! subject to  A_eq x = b_eq0 + B_D · vec(D)
//!             A_in x ≤ h_in0 + H_D · vec(D)
//! ```
//!
//! where `vec(D)` stacks the demand period by period (`t * n + i`).
//!
//! Primal layout, device by device in network order: a generator owns `T`
//! output variables; a storage unit owns `T` outputs, then `T` states of
//! charge, `T` charge and `T` discharge variables.
//!
//! Equality rows: one power-balance row per period, then each device's block
//! (pinned outputs for generators; SoC dynamics, output split and optional
//! terminal row for storage). Inequality rows: line flows (period-major, each
//! rated line contributing a forward then a reverse row), then each device's
//! block (upper/lower output bounds per period, ramp pairs, storage bounds).
//! All inequalities are one-sided `≤`, so every multiplier is `≥ 0`.

use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DemandSchedule, Device, Network, TerminalSoc};
use crate::linalg::{CsrMatrix, Triplets};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DeviceSlice {
    Generator { output: Range<usize> },
    Storage {
        output: Range<usize>,
        soc: Range<usize>,
        charge: Range<usize>,
        discharge: Range<usize>,
    },
}

impl DeviceSlice {
    pub fn output(&self) -> &Range<usize> {
        match self {
            DeviceSlice::Generator { output } | DeviceSlice::Storage { output, .. } => output,
        }
    }

    pub fn span(&self) -> Range<usize> {
        match self {
            DeviceSlice::Generator { output } => output.clone(),
            DeviceSlice::Storage { output, discharge, .. } => output.start..discharge.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableLayout {
    pub horizon: usize,
    pub devices: Vec<DeviceSlice>,
    pub n_x: usize,
}

impl VariableLayout {
    fn build(net: &Network) -> Self {
        let horizon = net.horizon;
        let mut next = 0;
        let mut take = |len: usize| {
            let r = next..next + len;
            next += len;
            r
        };
        let devices = net
            .devices
            .iter()
            .map(|d| match d {
                Device::Storage(_) => DeviceSlice::Storage {
                    output: take(horizon),
                    soc: take(horizon),
                    charge: take(horizon),
                    discharge: take(horizon),
                },
                _ => DeviceSlice::Generator { output: take(horizon) },
            })
            .collect();
        VariableLayout {
            horizon,
            devices,
            n_x: next,
        }
    }

    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    /// Primal index of the output of `device` in period `t`.
    pub fn output_index(&self, device: usize, t: usize) -> usize {
        assert!(t < self.horizon);
        self.devices[device].output().start + t
    }

    /// Device schedules `G[t][j]` read out of a primal vector.
    pub fn schedule(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.horizon)
            .map(|t| (0..self.n_devices()).map(|j| x[self.output_index(j, t)]).collect())
            .collect()
    }

    /// Writes `G[t][j]` into the output coordinates of `x`.
    pub fn scatter(&self, schedule: &[Vec<f64>], x: &mut [f64]) {
        for (t, row) in schedule.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                x[self.output_index(j, t)] = g;
            }
        }
    }
}

/// What a constraint row encodes, for diagnostics and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowTag {
    Balance { t: usize },
    Flow { t: usize, line: usize, reverse: bool },
    Upper { device: usize, t: usize },
    Lower { device: usize, t: usize },
    Pinned { device: usize, t: usize },
    RampUp { device: usize, t: usize },
    RampDown { device: usize, t: usize },
    SocUpper { device: usize, t: usize },
    SocLower { device: usize, t: usize },
    ChargeUpper { device: usize, t: usize },
    ChargeLower { device: usize, t: usize },
    DischargeUpper { device: usize, t: usize },
    DischargeLower { device: usize, t: usize },
    SocDynamics { device: usize, t: usize },
    OutputSplit { device: usize, t: usize },
    TerminalSoc { device: usize },
}

#[derive(Debug, Clone)]
pub struct ParametricQP {
    /// Diagonal of `H` is stored separately because all device costs are
    /// separable; `h` is kept as a matrix for callers that want one.
    pub h_diag: Vec<f64>,
    pub q: Vec<f64>,
    pub a_eq: CsrMatrix,
    pub b_eq0: Vec<f64>,
    pub b_d: CsrMatrix,
    pub a_in: CsrMatrix,
    pub h_in0: Vec<f64>,
    pub h_d: CsrMatrix,
    pub layout: VariableLayout,
    /// tCO₂/MWh on each output variable, zero on storage internals.
    pub emis_vec: Vec<f64>,
    pub eq_tags: Vec<RowTag>,
    pub in_tags: Vec<RowTag>,
    pub n_nodes: usize,
    pub period_hours: f64,
}

impl ParametricQP {
    pub fn n_x(&self) -> usize {
        self.layout.n_x
    }

    pub fn n_eq(&self) -> usize {
        self.a_eq.rows()
    }

    pub fn n_in(&self) -> usize {
        self.a_in.rows()
    }

    pub fn horizon(&self) -> usize {
        self.layout.horizon
    }

    /// Length of `vec(D)`.
    pub fn n_demand(&self) -> usize {
        self.horizon() * self.n_nodes
    }

    pub fn h_matrix(&self) -> CsrMatrix {
        let e: Vec<_> = self.h_diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        CsrMatrix::from_triplets(self.n_x(), self.n_x(), &e)
    }

    /// `H x`
    pub fn h_mul(&self, x: &[f64]) -> Vec<f64> {
        self.h_diag.iter().zip(x).map(|(h, x)| h * x).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.h_diag
            .iter()
            .zip(&self.q)
            .zip(x)
            .map(|((h, q), x)| 0.5 * h * x * x + q * x)
            .sum()
    }

    /// Text dump in `section row col value` triplet form.
    pub fn dump_triplets(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# parametric QP: min 1/2 x'Hx + q'x s.t. Aeq x = beq0 + BD d, Ain x <= hin0 + HD d");
        let _ = writeln!(s, "dims {} {} {} {}", self.n_x(), self.n_eq(), self.n_in(), self.n_demand());
        for (i, v) in self.h_diag.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(s, "H {i} {i} {v:e}");
            }
        }
        let vecs: [(&str, &[f64]); 4] =
            [("q", &self.q), ("beq0", &self.b_eq0), ("hin0", &self.h_in0), ("emis", &self.emis_vec)];
        let mats: [(&str, &CsrMatrix); 4] =
            [("Aeq", &self.a_eq), ("BD", &self.b_d), ("Ain", &self.a_in), ("HD", &self.h_d)];
        for (name, v) in vecs {
            for (i, x) in v.iter().enumerate() {
                if *x != 0.0 {
                    let _ = writeln!(s, "{name} {i} {x:e}");
                }
            }
        }
        for (name, m) in mats {
            for (r, c, v) in m.iter() {
                let _ = writeln!(s, "{name} {r} {c} {v:e}");
            }
        }
        s
    }
}

/// A concrete QP at one demand value. Matrices are borrowed from the
/// parametric form.
#[derive(Debug, Clone)]
pub struct QPInstance<'a> {
    pub pqp: &'a ParametricQP,
    pub b_eq: Vec<f64>,
    pub h_in: Vec<f64>,
}

pub fn instantiate<'a>(pqp: &'a ParametricQP, demand: &DemandSchedule) -> Result<QPInstance<'a>> {
    let d = demand.stacked();
    if demand.horizon() != pqp.horizon() || demand.n_nodes() != pqp.n_nodes {
        return Err(Error::Dimension(format!(
            "demand is {}x{}, QP expects {}x{}",
            demand.horizon(),
            demand.n_nodes(),
            pqp.horizon(),
            pqp.n_nodes
        )));
    }
    Ok(instantiate_stacked(pqp, &d))
}

pub(crate) fn instantiate_stacked<'a>(pqp: &'a ParametricQP, d: &[f64]) -> QPInstance<'a> {
    let mut b_eq = pqp.b_eq0.clone();
    pqp.b_d.mul_vec_acc(1.0, d, &mut b_eq);
    let mut h_in = pqp.h_in0.clone();
    pqp.h_d.mul_vec_acc(1.0, d, &mut h_in);
    QPInstance { pqp, b_eq, h_in }
}

struct RowSink {
    a: Triplets,
    rhs: Vec<f64>,
    dem: Vec<(usize, usize, f64)>,
    tags: Vec<RowTag>,
}

impl RowSink {
    fn new(n_x: usize) -> Self {
        RowSink {
            a: Triplets::new(0, n_x),
            rhs: Vec::new(),
            dem: Vec::new(),
            tags: Vec::new(),
        }
    }

    fn row<I: IntoIterator<Item = (usize, f64)>>(&mut self, tag: RowTag, coeffs: I, rhs: f64) -> usize {
        let r = self.a.push_row(coeffs);
        self.rhs.push(rhs);
        self.tags.push(tag);
        r
    }

    fn finish(self, n_demand: usize) -> (CsrMatrix, Vec<f64>, CsrMatrix, Vec<RowTag>) {
        let rows = self.rhs.len();
        let a = self.a.to_csr();
        let d = CsrMatrix::from_triplets(rows, n_demand, &self.dem);
        (a, self.rhs, d, self.tags)
    }
}

/// Builds the parametric QP. Unit-commitment generators must carry a fixed
/// commitment.
pub fn assemble(net: &Network) -> Result<ParametricQP> {
    crate::grid::validate_network(net).into_result()?;
    for (j, d) in net.devices.iter().enumerate() {
        if let Device::UcGenerator { commitment: None, .. } = d {
            return Err(Error::UnresolvedCommitment { device: j });
        }
    }

    let horizon = net.horizon;
    let n = net.n_nodes;
    let n_demand = horizon * n;
    let layout = VariableLayout::build(net);
    let n_x = layout.n_x;
    let reg = net.regularization;

    let mut h_diag = vec![0.0; n_x];
    let mut q = vec![0.0; n_x];
    let mut emis_vec = vec![0.0; n_x];

    let mut eq = RowSink::new(n_x);
    let mut ineq = RowSink::new(n_x);

    for t in 0..horizon {
        let r = eq.row(
            RowTag::Balance { t },
            (0..layout.n_devices()).map(|j| (layout.output_index(j, t), 1.0)),
            0.0,
        );
        for i in 0..n {
            eq.dem.push((r, t * n + i, 1.0));
        }
    }

    let ptdf = net.ptdf_matrix()?;
    let limits = net.line_limits();
    let nodes = net.device_node_map();
    for t in 0..horizon {
        for (l, row) in ptdf.iter().enumerate() {
            let u = limits[l];
            if !u.is_finite() {
                continue;
            }
            let coeffs: Vec<(usize, f64)> = nodes
                .iter()
                .enumerate()
                .filter(|(_, &node)| row[node] != 0.0)
                .map(|(j, &node)| (layout.output_index(j, t), row[node]))
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            for reverse in [false, true] {
                let s = if reverse { -1.0 } else { 1.0 };
                // s·F(B g_t − d_t) ≤ u
                let r = ineq.row(
                    RowTag::Flow { t, line: l, reverse },
                    coeffs.iter().map(|&(c, v)| (c, s * v)),
                    u,
                );
                for (i, &f) in row.iter().enumerate() {
                    if f != 0.0 {
                        ineq.dem.push((r, t * n + i, s * f));
                    }
                }
            }
        }
    }

    for (j, dev) in net.devices.iter().enumerate() {
        let slice = &layout.devices[j];
        match dev {
            Device::StaticGenerator(g) | Device::RampGenerator { generator: g, .. } | Device::UcGenerator { generator: g, .. } => {
                let commitment = match dev {
                    Device::UcGenerator { commitment, .. } => commitment.as_deref(),
                    _ => None,
                };
                let min_fraction = match dev {
                    Device::UcGenerator { min_output_fraction, .. } => *min_output_fraction,
                    _ => 0.0,
                };
                for t in 0..horizon {
                    let x = layout.output_index(j, t);
                    h_diag[x] = 2.0 * g.cost_quad.max(reg);
                    q[x] = g.cost_lin;
                    emis_vec[x] = g.emis_rate;

                    let (lo, hi) = match commitment {
                        Some(c) if !c[t] => (0.0, 0.0),
                        Some(_) => {
                            let hi = g.g_max.at(t);
                            (g.g_min.at(t).max(min_fraction * hi), hi)
                        }
                        None => (g.g_min.at(t), g.g_max.at(t)),
                    };
                    if lo == hi {
                        eq.row(RowTag::Pinned { device: j, t }, [(x, 1.0)], lo);
                        continue;
                    }
                    if hi.is_finite() {
                        ineq.row(RowTag::Upper { device: j, t }, [(x, 1.0)], hi);
                    }
                    ineq.row(RowTag::Lower { device: j, t }, [(x, -1.0)], -lo);
                }
                if let Device::RampGenerator { ramp, .. } = dev {
                    for t in 0..horizon.saturating_sub(1) {
                        let (a, b) = (layout.output_index(j, t), layout.output_index(j, t + 1));
                        ineq.row(RowTag::RampUp { device: j, t }, [(b, 1.0), (a, -1.0)], *ramp);
                        ineq.row(RowTag::RampDown { device: j, t }, [(a, 1.0), (b, -1.0)], *ramp);
                    }
                }
            }
            Device::Storage(s) => {
                let DeviceSlice::Storage {
                    output,
                    soc,
                    charge,
                    discharge,
                } = slice
                else {
                    unreachable!("storage layout")
                };
                for x in slice.span() {
                    h_diag[x] = 2.0 * reg;
                }
                let eta = s.efficiency;
                for t in 0..horizon {
                    // s_t − s_{t−1} − η γ_t + δ_t / η = s₀·[t = 0]
                    let mut coeffs = vec![(soc.start + t, 1.0), (charge.start + t, -eta), (discharge.start + t, 1.0 / eta)];
                    if t > 0 {
                        coeffs.push((soc.start + t - 1, -1.0));
                    }
                    let rhs = if t == 0 { s.initial_soc } else { 0.0 };
                    eq.row(RowTag::SocDynamics { device: j, t }, coeffs, rhs);
                }
                for t in 0..horizon {
                    // g_t − δ_t + γ_t = 0
                    eq.row(
                        RowTag::OutputSplit { device: j, t },
                        [(output.start + t, 1.0), (discharge.start + t, -1.0), (charge.start + t, 1.0)],
                        0.0,
                    );
                }
                let last = soc.start + horizon - 1;
                match s.terminal_soc {
                    TerminalSoc::Free => {}
                    TerminalSoc::EqualToInitial => {
                        eq.row(RowTag::TerminalSoc { device: j }, [(last, 1.0)], s.initial_soc);
                    }
                    TerminalSoc::Fixed(v) => {
                        eq.row(RowTag::TerminalSoc { device: j }, [(last, 1.0)], v);
                    }
                }
                for t in 0..horizon {
                    let (xs, xc, xd) = (soc.start + t, charge.start + t, discharge.start + t);
                    ineq.row(RowTag::SocUpper { device: j, t }, [(xs, 1.0)], s.capacity);
                    ineq.row(RowTag::SocLower { device: j, t }, [(xs, -1.0)], 0.0);
                    ineq.row(RowTag::ChargeUpper { device: j, t }, [(xc, 1.0)], s.power);
                    ineq.row(RowTag::ChargeLower { device: j, t }, [(xc, -1.0)], 0.0);
                    ineq.row(RowTag::DischargeUpper { device: j, t }, [(xd, 1.0)], s.power);
                    ineq.row(RowTag::DischargeLower { device: j, t }, [(xd, -1.0)], 0.0);
                }
            }
        }
    }

    let (a_eq, b_eq0, b_d, eq_tags) = eq.finish(n_demand);
    let (a_in, h_in0, h_d, in_tags) = ineq.finish(n_demand);

    Ok(ParametricQP {
        h_diag,
        q,
        a_eq,
        b_eq0,
        b_d,
        a_in,
        h_in0,
        h_d,
        layout,
        emis_vec,
        eq_tags,
        in_tags,
        n_nodes: n,
        period_hours: net.period_hours,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Generator, Line, Storage};

    fn toy() -> Network {
        Network::new(1, 2)
            .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 500.0)))
            .with_device(Device::StaticGenerator(Generator::new(0, vec![10.0, 0.0], 0.1, 0.0)))
            .with_device(Device::Storage(Storage::new(0, 10.0, 10.0, 1.0)))
    }

    #[test]
    fn single_generator_counts() {
        let net = Network::new(1, 1).with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.0)));
        let qp = assemble(&net).unwrap();
        assert_eq!((qp.n_x(), qp.n_eq(), qp.n_in()), (1, 1, 2));
    }

    #[test]
    fn toy_counts_enumerated_by_hand() {
        // Variables: gas (2) + solar (2) + battery g, s, γ, δ (4 × 2) = 12.
        // Equalities: 2 balance + 1 pinned solar output (capacity 0 in
        // period 2) + 2 SoC dynamics + 2 output split = 7; s₀ is folded
        // into the first dynamics row.
        // Inequalities: gas 2×2 + solar 1×2 + battery 6×2 = 18.
        let qp = assemble(&toy()).unwrap();
        assert_eq!(qp.n_x(), 12);
        assert_eq!(qp.n_eq(), 7);
        assert_eq!(qp.n_in(), 18);
        let dyn_rows = qp.eq_tags.iter().filter(|t| matches!(t, RowTag::SocDynamics { .. })).count();
        let split_rows = qp.eq_tags.iter().filter(|t| matches!(t, RowTag::OutputSplit { .. })).count();
        assert_eq!((dyn_rows, split_rows), (2, 2));
    }

    #[test]
    fn toy_demand_sets_balance_rows() {
        let qp = assemble(&toy()).unwrap();
        let d = DemandSchedule::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let inst = instantiate(&qp, &d).unwrap();
        assert_eq!(&inst.b_eq[..2], &[1.0, 1.0]);
    }

    #[test]
    fn demand_map_is_affine() {
        let net = Network::new(2, 2)
            .with_line(Line::new(0, 1, 1.0, 3.0))
            .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.0)))
            .with_device(Device::StaticGenerator(Generator::new(1, 10.0, 2.0, 0.0)));
        let qp = assemble(&net).unwrap();
        let zero = instantiate(&qp, &DemandSchedule::zeros(2, 2)).unwrap();
        assert_eq!(zero.b_eq, qp.b_eq0);
        assert_eq!(zero.h_in, qp.h_in0);
        let d1 = DemandSchedule::new(vec![vec![1.0, 2.0], vec![0.5, -1.0]]).unwrap();
        let d2 = DemandSchedule::new(vec![vec![2.0, 4.0], vec![1.0, -2.0]]).unwrap();
        let i1 = instantiate(&qp, &d1).unwrap();
        let i2 = instantiate(&qp, &d2).unwrap();
        for r in 0..qp.n_eq() {
            assert_eq!(i2.b_eq[r] - qp.b_eq0[r], 2.0 * (i1.b_eq[r] - qp.b_eq0[r]));
        }
    }

    #[test]
    fn demand_columns_follow_problem_structure() {
        let net = Network::new(3, 2)
            .with_line(Line::new(0, 1, 1.0, 3.0))
            .with_line(Line::new(1, 2, 2.0, 3.0))
            .with_line(Line::new(0, 2, 1.0, 3.0))
            .with_device(Device::StaticGenerator(Generator::new(0, 10.0, 1.0, 0.0)))
            .with_device(Device::StaticGenerator(Generator::new(1, 10.0, 2.0, 0.0)));
        let f = net.ptdf_matrix().unwrap();
        let qp = assemble(&net).unwrap();
        for t in 0..2 {
            for i in 0..3 {
                let col = t * 3 + i;
                let bd = qp.b_d.column_dense(col);
                let nz: Vec<_> = bd.iter().enumerate().filter(|(_, v)| **v != 0.0).collect();
                assert_eq!(nz.len(), 1);
                assert_eq!(qp.eq_tags[nz[0].0], RowTag::Balance { t });
                assert_eq!(*nz[0].1, 1.0);

                let hd = qp.h_d.column_dense(col);
                for (r, tag) in qp.in_tags.iter().enumerate() {
                    match *tag {
                        RowTag::Flow { t: tt, line, reverse } if tt == t => {
                            let s = if reverse { -1.0 } else { 1.0 };
                            assert_eq!(hd[r], s * f[line][i]);
                        }
                        _ => assert_eq!(hd[r], 0.0),
                    }
                }
            }
        }
    }

    #[test]
    fn layout_round_trip() {
        let qp = assemble(&toy()).unwrap();
        let g = vec![vec![0.5, 1.5, -2.0], vec![3.0, 0.0, 7.0]];
        let mut x = vec![f64::NAN; qp.n_x()];
        qp.layout.scatter(&g, &mut x);
        assert_eq!(qp.layout.schedule(&x), g);
        let mut seen = vec![false; qp.n_x()];
        for s in &qp.layout.devices {
            for i in s.span() {
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn toy_dispatch_is_feasible() {
        let qp = assemble(&toy()).unwrap();
        let d = DemandSchedule::new(vec![vec![1.0], vec![1.0]]).unwrap();
        let inst = instantiate(&qp, &d).unwrap();
        let mut x = vec![0.0; qp.n_x()];
        qp.layout.scatter(&[vec![0.0, 2.0, -1.0], vec![0.0, 0.0, 1.0]], &mut x);
        let DeviceSlice::Storage { soc, charge, discharge, .. } = &qp.layout.devices[2] else { panic!() };
        x[soc.start] = 1.0;
        x[soc.start + 1] = 0.0;
        x[charge.start] = 1.0;
        x[discharge.start + 1] = 1.0;
        let eq = qp.a_eq.mul_vec(&x);
        for (a, b) in eq.iter().zip(&inst.b_eq) {
            assert!((a - b).abs() <= 1e-12);
        }
        let ineq = qp.a_in.mul_vec(&x);
        assert!(ineq.iter().zip(&inst.h_in).all(|(a, b)| a <= b));
    }

    #[test]
    fn hessian_is_psd_diagonal() {
        let mut net = toy();
        net.regularization = 1e-6;
        let qp = assemble(&net).unwrap();
        let h = qp.h_matrix();
        assert!(h.is_symmetric(0.0));
        assert!(qp.h_diag.iter().all(|v| *v >= -1e-10));
    }

    #[test]
    fn unresolved_commitment_is_rejected() {
        let net = Network::new(1, 1).with_device(Device::UcGenerator {
            generator: Generator::new(0, 10.0, 1.0, 1.0),
            min_output_fraction: 0.4,
            commitment: None,
        });
        assert!(matches!(assemble(&net), Err(Error::UnresolvedCommitment { device: 0 })));
    }

    #[test]
    fn fixed_commitment_rows() {
        let net = Network::new(1, 2).with_device(Device::UcGenerator {
            generator: Generator::new(0, 10.0, 1.0, 1.0),
            min_output_fraction: 0.4,
            commitment: Some(vec![true, false]),
        });
        let qp = assemble(&net).unwrap();
        // Period 0: upper 10 and lower 4; period 1: pinned at zero.
        assert_eq!(qp.n_in(), 2);
        assert_eq!(qp.h_in0, vec![10.0, -4.0]);
        assert_eq!(qp.eq_tags[2], RowTag::Pinned { device: 0, t: 1 });
        assert_eq!(qp.b_eq0[2], 0.0);
    }

    #[test]
    fn triplet_dump_lists_every_block() {
        let qp = assemble(&toy()).unwrap();
        let dump = qp.dump_triplets();
        assert!(dump.contains("dims 12 7 18 2"));
        for section in ["q ", "Aeq ", "BD ", "Ain ", "hin0 ", "emis "] {
            assert!(dump.lines().any(|l| l.starts_with(section)), "{section}");
        }
    }
}

//! Network, device and demand types, their validation, PTDF construction and
//! the feasibility/uniqueness augmentation applied before assembly.
//!
//! Units are fixed throughout: MW for power, MWh for energy, $ for cost and
//! tCO₂ for emissions. Costs are per period-hour, so a generator running at
//! `g` MW for one period of `period_hours` hours costs
//! `(a g² + b g) · period_hours`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{PivotPolicy, SymbolicLdl};

/// A per-period quantity given either as one constant or as a full series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Series(Vec<f64>),
}

impl Profile {
    pub fn at(&self, t: usize) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::Series(s) => s[t],
        }
    }

    fn len_ok(&self, horizon: usize) -> bool {
        match self {
            Profile::Constant(_) => true,
            Profile::Series(s) => s.len() == horizon,
        }
    }

    fn truncate(&mut self, horizon: usize) {
        if let Profile::Series(s) = self {
            s.truncate(horizon);
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            Profile::Constant(v) => Box::new(std::iter::once(*v)),
            Profile::Series(s) => Box::new(s.iter().copied()),
        }
    }
}

impl From<f64> for Profile {
    fn from(v: f64) -> Self {
        Profile::Constant(v)
    }
}

impl From<Vec<f64>> for Profile {
    fn from(v: Vec<f64>) -> Self {
        Profile::Series(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub susceptance: f64,
    /// Thermal limit in MW; `None` means the line is never congested.
    #[serde(default)]
    pub rating: Option<f64>,
}

impl Line {
    pub fn new(from: usize, to: usize, susceptance: f64, rating: f64) -> Self {
        Line {
            from,
            to,
            susceptance,
            rating: Some(rating),
        }
    }

    pub fn unlimited(from: usize, to: usize, susceptance: f64) -> Self {
        Line {
            from,
            to,
            susceptance,
            rating: None,
        }
    }
}

/// Quadratic-cost generator with per-period output bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub node: usize,
    #[serde(default = "zero_profile")]
    pub g_min: Profile,
    pub g_max: Profile,
    /// `a` in `a g² + b g`, $/MW²h.
    #[serde(default)]
    pub cost_quad: f64,
    /// `b` in `a g² + b g`, $/MWh.
    #[serde(default)]
    pub cost_lin: f64,
    /// tCO₂/MWh.
    #[serde(default)]
    pub emis_rate: f64,
    /// Marks the curtailment generators added by [`ensure_feasible_and_unique`].
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub curtailment: bool,
}

fn zero_profile() -> Profile {
    Profile::Constant(0.0)
}

impl Generator {
    pub fn new(node: usize, g_max: impl Into<Profile>, cost_lin: f64, emis_rate: f64) -> Self {
        Generator {
            name: None,
            node,
            g_min: zero_profile(),
            g_max: g_max.into(),
            cost_quad: 0.0,
            cost_lin,
            emis_rate,
            curtailment: false,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn with_quad(mut self, a: f64) -> Self {
        self.cost_quad = a;
        self
    }

    pub fn with_min(mut self, g_min: impl Into<Profile>) -> Self {
        self.g_min = g_min.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TerminalSoc {
    #[default]
    Free,
    EqualToInitial,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub node: usize,
    /// MWh.
    pub capacity: f64,
    /// Maximum charge and discharge rate, MW.
    pub power: f64,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub initial_soc: f64,
    #[serde(default)]
    pub terminal_soc: TerminalSoc,
}

fn one() -> f64 {
    1.0
}

impl Storage {
    pub fn new(node: usize, capacity: f64, power: f64, efficiency: f64) -> Self {
        Storage {
            name: None,
            node,
            capacity,
            power,
            efficiency,
            initial_soc: 0.0,
            terminal_soc: TerminalSoc::Free,
        }
    }
}

pub const DEFAULT_MIN_OUTPUT_FRACTION: f64 = 0.4;

fn default_min_fraction() -> f64 {
    DEFAULT_MIN_OUTPUT_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Device {
    StaticGenerator(Generator),
    RampGenerator {
        #[serde(flatten)]
        generator: Generator,
        /// MW per period.
        ramp: f64,
    },
    Storage(Storage),
    UcGenerator {
        #[serde(flatten)]
        generator: Generator,
        #[serde(default = "default_min_fraction")]
        min_output_fraction: f64,
        /// `Some` pins the on/off state per period.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        commitment: Option<Vec<bool>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceKind {
    StaticGenerator,
    RampGenerator,
    Storage,
    UcGenerator,
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeviceKind::StaticGenerator => "static_generator",
            DeviceKind::RampGenerator => "ramp_generator",
            DeviceKind::Storage => "storage",
            DeviceKind::UcGenerator => "uc_generator",
        };
        f.write_str(s)
    }
}

impl Device {
    pub fn kind(&self) -> DeviceKind {
        match self {
            Device::StaticGenerator(_) => DeviceKind::StaticGenerator,
            Device::RampGenerator { .. } => DeviceKind::RampGenerator,
            Device::Storage(_) => DeviceKind::Storage,
            Device::UcGenerator { .. } => DeviceKind::UcGenerator,
        }
    }

    pub fn node(&self) -> usize {
        match self {
            Device::Storage(s) => s.node,
            _ => self.generator().expect("generator").node,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Device::Storage(s) => s.name.as_deref(),
            _ => self.generator().and_then(|g| g.name.as_deref()),
        }
    }

    pub fn generator(&self) -> Option<&Generator> {
        match self {
            Device::StaticGenerator(g) => Some(g),
            Device::RampGenerator { generator, .. } | Device::UcGenerator { generator, .. } => Some(generator),
            Device::Storage(_) => None,
        }
    }

    fn generator_mut(&mut self) -> Option<&mut Generator> {
        match self {
            Device::StaticGenerator(g) => Some(g),
            Device::RampGenerator { generator, .. } | Device::UcGenerator { generator, .. } => Some(generator),
            Device::Storage(_) => None,
        }
    }

    pub fn emis_rate(&self) -> f64 {
        self.generator().map_or(0.0, |g| g.emis_rate)
    }

    /// Devices whose feasible outputs couple periods. UC generators are
    /// period-separable once their commitment is fixed.
    pub fn is_dynamic(&self) -> bool {
        matches!(self, Device::RampGenerator { .. } | Device::Storage(_))
    }

    pub fn is_curtailment(&self) -> bool {
        self.generator().is_some_and(|g| g.curtailment)
    }

    pub fn label(&self, index: usize) -> String {
        match self.name() {
            Some(n) => n.to_string(),
            None => format!("{}_{index}", self.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub n_nodes: usize,
    /// Node that absorbs PTDF injections; defaults to the last node.
    #[serde(default)]
    pub slack: Option<usize>,
    #[serde(default)]
    pub lines: Vec<Line>,
    /// `m × n` PTDF. Computed from the lines when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptdf: Option<Vec<Vec<f64>>>,
    pub devices: Vec<Device>,
    pub horizon: usize,
    #[serde(default = "one")]
    pub period_hours: f64,
    /// Quadratic regularization applied by assembly to storage internals;
    /// set by [`ensure_feasible_and_unique`].
    #[serde(default)]
    pub regularization: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Network {
    pub fn new(n_nodes: usize, horizon: usize) -> Self {
        Network {
            n_nodes,
            slack: None,
            lines: Vec::new(),
            ptdf: None,
            devices: Vec::new(),
            horizon,
            period_hours: 1.0,
            regularization: 0.0,
            description: None,
        }
    }

    pub fn slack_node(&self) -> usize {
        self.slack.unwrap_or(self.n_nodes.saturating_sub(1))
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn with_device(mut self, d: Device) -> Self {
        self.devices.push(d);
        self
    }

    pub fn with_line(mut self, l: Line) -> Self {
        self.lines.push(l);
        self.ptdf = None;
        self
    }

    /// Fills in the PTDF from the line data if none was supplied.
    pub fn with_computed_ptdf(mut self) -> Result<Self> {
        if self.ptdf.is_none() {
            self.ptdf = Some(compute_ptdf(&self.lines, self.n_nodes, self.slack_node())?);
        }
        Ok(self)
    }

    /// The PTDF, computing it on the fly when not stored.
    pub fn ptdf_matrix(&self) -> Result<Vec<Vec<f64>>> {
        match &self.ptdf {
            Some(f) => Ok(f.clone()),
            None => compute_ptdf(&self.lines, self.n_nodes, self.slack_node()),
        }
    }

    pub fn line_limits(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.rating.unwrap_or(f64::INFINITY)).collect()
    }

    /// Drops every line rating, which removes all flow constraints.
    pub fn uncongested(mut self) -> Self {
        for l in &mut self.lines {
            l.rating = None;
        }
        self
    }

    pub fn device_node_map(&self) -> Vec<usize> {
        self.devices.iter().map(Device::node).collect()
    }

    pub fn has_dynamic_devices(&self) -> bool {
        self.devices.iter().any(Device::is_dynamic)
    }

    /// The first `horizon` periods. Series profiles and commitments are cut;
    /// storage keeps its terminal condition, now applied at the new end.
    pub fn truncated(&self, horizon: usize) -> Result<Network> {
        if horizon == 0 || horizon > self.horizon {
            return Err(Error::Dimension(format!(
                "cannot cut a {}-period network to {horizon} periods",
                self.horizon
            )));
        }
        let mut out = self.clone();
        out.horizon = horizon;
        for dev in &mut out.devices {
            if let Device::UcGenerator {
                commitment: Some(c), ..
            } = dev
            {
                c.truncate(horizon);
            }
            if let Some(g) = dev.generator_mut() {
                g.g_min.truncate(horizon);
                g.g_max.truncate(horizon);
            }
        }
        Ok(out)
    }
}

/// Nodal demand, `values[t][i]` in MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSchedule {
    values: Vec<Vec<f64>>,
}

impl DemandSchedule {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("demand rows have unequal lengths".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("demand contains non-finite values".into()));
        }
        Ok(DemandSchedule { values })
    }

    pub fn zeros(horizon: usize, n_nodes: usize) -> Self {
        DemandSchedule {
            values: vec![vec![0.0; n_nodes]; horizon],
        }
    }

    /// Builds a schedule from the stacked vector `vec(D)` (period-major).
    pub fn from_stacked(horizon: usize, n_nodes: usize, stacked: &[f64]) -> Result<Self> {
        if stacked.len() != horizon * n_nodes {
            return Err(Error::Dimension(format!(
                "stacked demand has {} entries, expected {}",
                stacked.len(),
                horizon * n_nodes
            )));
        }
        Self::new(stacked.chunks(n_nodes.max(1)).map(<[f64]>::to_vec).collect())
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t][i]
    }

    pub fn set(&mut self, t: usize, i: usize, v: f64) {
        self.values[t][i] = v;
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// The first `horizon` periods.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > self.horizon() {
            return Err(Error::Dimension(format!(
                "cannot cut {} demand periods to {horizon}",
                self.horizon()
            )));
        }
        Ok(DemandSchedule {
            values: self.values[..horizon].to_vec(),
        })
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn check_against(&self, net: &Network) -> Result<()> {
        if self.horizon() != net.horizon || self.n_nodes() != net.n_nodes {
            return Err(Error::Dimension(format!(
                "demand is {}x{}, network expects {}x{}",
                self.horizon(),
                self.n_nodes(),
                net.horizon,
                net.n_nodes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msg = self.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            Err(Error::InvalidNetwork(msg))
        }
    }
}

pub fn validate_network(net: &Network) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = net.n_nodes;
    let horizon = net.horizon;

    if n == 0 {
        rep.push("n_nodes", "network needs at least one node");
    }
    if horizon == 0 {
        rep.push("horizon", "horizon must be at least one period");
    }
    if !(net.period_hours > 0.0 && net.period_hours.is_finite()) {
        rep.push("period_hours", "period length must be positive and finite");
    }
    if !(net.regularization >= 0.0 && net.regularization.is_finite()) {
        rep.push("regularization", "regularization must be non-negative");
    }
    if net.slack_node() >= n.max(1) {
        rep.push("slack", format!("slack node {} outside [0, {n})", net.slack_node()));
    }

    for (l, line) in net.lines.iter().enumerate() {
        let p = format!("lines[{l}]");
        if line.from >= n || line.to >= n {
            rep.push(&p, format!("endpoint outside node bounds [0, {n})"));
        }
        if line.from == line.to {
            rep.push(&p, "line connects a node to itself");
        }
        if !(line.susceptance > 0.0 && line.susceptance.is_finite()) {
            rep.push(&p, "susceptance must be positive and finite");
        }
        if let Some(r) = line.rating {
            if !(r > 0.0 && r.is_finite()) {
                rep.push(&p, "rating must be positive and finite");
            }
        }
    }

    if let Some(f) = &net.ptdf {
        if f.len() != net.lines.len() {
            rep.push("ptdf", format!("has {} rows, expected one per line ({})", f.len(), net.lines.len()));
        }
        for (l, row) in f.iter().enumerate() {
            if row.len() != n {
                rep.push(format!("ptdf[{l}]"), format!("has {} columns, expected {n}", row.len()));
            } else {
                if row.iter().any(|v| !v.is_finite()) {
                    rep.push(format!("ptdf[{l}]"), "contains non-finite entries");
                }
                if net.slack_node() < n && row[net.slack_node()] != 0.0 {
                    rep.push(format!("ptdf[{l}]"), "slack column must be zero");
                }
            }
        }
    }

    for (j, dev) in net.devices.iter().enumerate() {
        let p = format!("devices[{j}]");
        if dev.node() >= n {
            rep.push(&p, format!("node index {} outside node bounds [0, {n})", dev.node()));
        }
        if let Some(g) = dev.generator() {
            validate_generator(&mut rep, &p, g, horizon);
        }
        match dev {
            Device::RampGenerator { ramp, .. } => {
                if !(*ramp > 0.0) || ramp.is_nan() {
                    rep.push(&p, "ramp rate must be positive");
                }
            }
            Device::Storage(s) => {
                if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
                    rep.push(&p, format!("efficiency {} outside (0, 1]", s.efficiency));
                }
                if !(s.capacity > 0.0 && s.capacity.is_finite()) {
                    rep.push(&p, "capacity must be positive and finite");
                }
                if !(s.power > 0.0 && s.power.is_finite()) {
                    rep.push(&p, "power rating must be positive and finite");
                }
                if !(s.initial_soc >= 0.0 && s.initial_soc <= s.capacity) {
                    rep.push(&p, "initial state of charge outside [0, capacity]");
                }
                if let TerminalSoc::Fixed(v) = s.terminal_soc {
                    if !(v >= 0.0 && v <= s.capacity) {
                        rep.push(&p, "terminal state of charge outside [0, capacity]");
                    }
                }
            }
            Device::UcGenerator {
                min_output_fraction,
                commitment,
                ..
            } => {
                if !(*min_output_fraction > 0.0 && *min_output_fraction <= 1.0) {
                    rep.push(&p, "min_output_fraction outside (0, 1]");
                }
                if let Some(c) = commitment {
                    if c.len() != horizon {
                        rep.push(&p, format!("commitment has {} entries, expected {horizon}", c.len()));
                    }
                }
            }
            Device::StaticGenerator(_) => {}
        }
    }
    rep
}

fn validate_generator(rep: &mut ValidationReport, p: &str, g: &Generator, horizon: usize) {
    if !g.g_min.len_ok(horizon) || !g.g_max.len_ok(horizon) {
        rep.push(p, format!("output bounds must have {horizon} entries"));
        return;
    }
    if g.g_min.values().any(|v| !v.is_finite()) || g.g_max.values().any(f64::is_nan) {
        rep.push(p, "output bounds must be numbers (g_min finite)");
        return;
    }
    if (0..horizon).any(|t| g.g_min.at(t) > g.g_max.at(t)) {
        rep.push(p, "g_min exceeds g_max");
    }
    if g.g_max.values().any(|v| v == f64::NEG_INFINITY) {
        rep.push(p, "g_max cannot be -inf");
    }
    if !(g.cost_quad >= 0.0 && g.cost_quad.is_finite()) {
        rep.push(p, "quadratic cost must be non-negative");
    }
    if !g.cost_lin.is_finite() {
        rep.push(p, "linear cost must be finite");
    }
    if !g.emis_rate.is_finite() {
        rep.push(p, "emissions rate must be finite");
    }
}

/// Power transfer distribution factors from line susceptances.
///
/// Entry `[l][i]` is the flow on line `l` (positive from `from` to `to`)
/// caused by injecting 1 MW at node `i` and withdrawing it at `slack`.
pub fn compute_ptdf(lines: &[Line], n_nodes: usize, slack: usize) -> Result<Vec<Vec<f64>>> {
    if slack >= n_nodes {
        return Err(Error::InvalidNetwork(format!("slack node {slack} outside [0, {n_nodes})")));
    }
    for l in lines {
        if l.from >= n_nodes || l.to >= n_nodes || l.from == l.to || !(l.susceptance > 0.0) {
            return Err(Error::InvalidNetwork(format!("malformed line {}-{}", l.from, l.to)));
        }
    }

    let mut adj = vec![Vec::new(); n_nodes];
    for l in lines {
        adj[l.from].push(l.to);
        adj[l.to].push(l.from);
    }
    let mut seen = vec![false; n_nodes];
    let mut queue = VecDeque::from([slack]);
    seen[slack] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    let isolated: Vec<usize> = (0..n_nodes).filter(|&i| !seen[i]).collect();
    if !isolated.is_empty() {
        return Err(Error::Disconnected { slack, isolated });
    }

    // Reduced Laplacian with the slack row/column removed.
    let reduced = |i: usize| if i < slack { Some(i) } else if i > slack { Some(i - 1) } else { None };
    let dim = n_nodes - 1;
    let mut entries = crate::linalg::SymmetricEntries::new(dim);
    for l in lines {
        let b = l.susceptance;
        match (reduced(l.from), reduced(l.to)) {
            (Some(a), Some(c)) => {
                entries.push(a, a, b);
                entries.push(c, c, b);
                entries.push(a, c, -b);
            }
            (Some(a), None) | (None, Some(a)) => entries.push(a, a, b),
            (None, None) => unreachable!(),
        }
    }
    let sym = SymbolicLdl::analyze(dim, &entries.pos);
    let num = sym.factor(&entries.val, &vec![0.0; dim], &vec![1.0; dim], PivotPolicy::default());

    let mut ptdf = vec![vec![0.0; n_nodes]; lines.len()];
    for i in 0..n_nodes {
        let Some(ri) = reduced(i) else { continue };
        let mut rhs = vec![0.0; dim];
        rhs[ri] = 1.0;
        let theta = crate::linalg::solve_refined(&sym, &num, &entries, &rhs, 1e-15, 5).x;
        let angle = |node: usize| reduced(node).map_or(0.0, |r| theta[r]);
        for (l, line) in lines.iter().enumerate() {
            ptdf[l][i] = line.susceptance * (angle(line.from) - angle(line.to));
        }
    }
    Ok(ptdf)
}

#[derive(Debug, Clone, Copy)]
pub struct AugmentOptions {
    /// Cost of curtailed demand, $/MWh.
    pub voll: f64,
    /// Floor for every quadratic cost coefficient, $/MW²h.
    pub reg: f64,
}

pub const DEFAULT_VOLL: f64 = 10_000.0;
pub const DEFAULT_REG: f64 = 1e-6;

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            voll: DEFAULT_VOLL,
            reg: DEFAULT_REG,
        }
    }
}

/// Adds an uncapacitated, emission-free curtailment generator at every node
/// (feasibility) and floors all quadratic costs at `reg` (uniqueness).
/// Applying it twice gives the same network as applying it once.
pub fn ensure_feasible_and_unique(net: &Network, opts: AugmentOptions) -> Network {
    let mut out = net.clone();
    for dev in out.devices.iter_mut() {
        if let Some(g) = dev.generator_mut() {
            g.cost_quad = g.cost_quad.max(opts.reg);
        }
    }
    let mut covered = vec![false; out.n_nodes];
    for dev in &out.devices {
        if dev.is_curtailment() && dev.node() < covered.len() {
            covered[dev.node()] = true;
        }
    }
    for (node, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
        out.devices.push(Device::StaticGenerator(Generator {
            name: Some(format!("curtailment_{node}")),
            node,
            g_min: Profile::Constant(0.0),
            g_max: Profile::Constant(f64::INFINITY),
            cost_quad: opts.reg,
            cost_lin: opts.voll,
            emis_rate: 0.0,
            curtailment: true,
        }));
    }
    out.regularization = out.regularization.max(opts.reg);
    out
}

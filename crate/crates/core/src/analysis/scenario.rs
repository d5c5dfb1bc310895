//! One end-to-end run: load, augment, dispatch, differentiate, compare.

use std::path::PathBuf;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::io::{device_header, read_demand, read_network};
use super::metrics::{rms_deviation, smooth_columns, window_rms, DEFAULT_DAY_LEN};
use crate::diff::{compute_lmes, finite_difference_lmes, jitter_demand, static_approximation, LmeOptions, LmeResult};
use crate::error::{Error, Result};
use crate::grid::{ensure_feasible_and_unique, validate_network, AugmentOptions, DemandSchedule, Device, Network};
use crate::solver::{solve_uc, Residuals, SolverOptions, Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub network: PathBuf,
    pub demand: PathBuf,
    /// Keep only the first periods of the network and demand.
    pub horizon: Option<usize>,
    pub solver: SolverOptions,
    pub lme: LmeOptions,
    pub static_lme: bool,
    /// Central-difference step (MW) for the oracle check, if wanted.
    pub fd_eps: Option<f64>,
    pub day_len: usize,
    /// Seed for `jitter`.
    pub seed: u64,
    /// Uniform demand noise amplitude in MW; zero leaves demand untouched.
    pub jitter: f64,
    /// Rolling-window fraction for an extra smoothed copy of the LMEs.
    pub smooth: Option<f64>,
}

impl ScenarioConfig {
    pub fn new(network: impl Into<PathBuf>, demand: impl Into<PathBuf>) -> Self {
        ScenarioConfig {
            network: network.into(),
            demand: demand.into(),
            horizon: None,
            solver: SolverOptions::default(),
            lme: LmeOptions::default(),
            static_lme: true,
            fd_eps: None,
            day_len: DEFAULT_DAY_LEN,
            seed: 0,
            jitter: 0.0,
            smooth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionsSummary {
    pub total: f64,
    pub per_period: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub day_len: usize,
    /// Median `|dynamic LME|`; `None` when zero, in which case only the
    /// absolute figures are reported.
    pub median: Option<f64>,
    pub rms_deviation_normalized: Option<f64>,
    /// `[node][day]`, normalized by `median`.
    pub per_node_rms_normalized: Option<Vec<Vec<f64>>>,
    /// `[node][day]`, tCO₂/MWh.
    pub per_node_rms: Vec<Vec<f64>>,
    pub rms_deviation_absolute: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub status: Status,
    pub iterations: usize,
    pub residuals: Residuals,
    pub polished: bool,
    /// Seconds spent in dispatch (including commitment search).
    pub dispatch_time: f64,
    pub lme_time: f64,
    pub static_time: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyInfo {
    pub degenerate: bool,
    pub n_active: usize,
    pub n_degenerate: usize,
    pub dropped_rows: Vec<String>,
    pub ift_residual: f64,
    pub condition_estimate: f64,
}

impl From<&LmeResult> for DegeneracyInfo {
    fn from(l: &LmeResult) -> Self {
        DegeneracyInfo {
            degenerate: l.degenerate,
            n_active: l.n_active,
            n_degenerate: l.n_degenerate,
            dropped_rows: l.dropped_rows.clone(),
            ift_residual: l.ift_residual,
            condition_estimate: l.condition_estimate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdCheck {
    pub eps: f64,
    pub lme_fd: Vec<Vec<f64>>,
    pub max_abs_gap: f64,
    /// `max |IFT − FD| / max(1, max |FD|)`.
    pub max_rel_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub description: Option<String>,
    pub n_nodes: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Column labels of `dispatch`, including the curtailment devices added
    /// by augmentation.
    pub devices: Vec<String>,
    /// Commitments chosen for UC generators, by device index.
    pub commitments: Vec<(usize, Vec<bool>)>,
    /// `[t][device]`, MW.
    pub dispatch: Vec<Vec<f64>>,
    /// `[t][node]`, $/MWh.
    pub lmp: Vec<Vec<f64>>,
    pub emissions: EmissionsSummary,
    /// `[t][node]`, tCO₂/MWh.
    pub lme_dynamic: Vec<Vec<f64>>,
    pub lme_static: Option<Vec<Vec<f64>>>,
    pub lme_dynamic_smoothed: Option<Vec<Vec<f64>>>,
    pub metrics: Option<Metrics>,
    pub solver_stats: SolverStats,
    pub degeneracy: DegeneracyInfo,
    pub static_degeneracy: Option<DegeneracyInfo>,
    pub fd_check: Option<FdCheck>,
}

impl ScenarioReport {
    /// Whether either LME set is only one-sided.
    pub fn is_degenerate(&self) -> bool {
        self.degeneracy.degenerate || self.static_degeneracy.as_ref().is_some_and(|d| d.degenerate)
    }
}

/// Day-window comparison of two `[t][node]` LME series.
pub fn compare(lme_static: &[Vec<f64>], lme_dynamic: &[Vec<f64>], day_len: usize) -> Result<Metrics> {
    let raw = window_rms(lme_static, lme_dynamic, day_len)?;
    let (median, normalized, per_node) = match rms_deviation(lme_static, lme_dynamic, day_len) {
        Ok(r) => (Some(r.median), Some(r.mean_normalized), Some(r.per_node_per_day)),
        Err(Error::ZeroMedian) => {
            warn!("median |LME| is zero; reporting the absolute deviation only");
            (None, None, None)
        }
        Err(e) => return Err(e),
    };
    Ok(Metrics {
        day_len,
        median,
        rms_deviation_normalized: normalized,
        per_node_rms_normalized: per_node,
        rms_deviation_absolute: raw.mean(),
        per_node_rms: raw.rms,
    })
}

/// Loads, validates and (optionally) cuts the inputs named in `config`.
pub fn load_inputs(config: &ScenarioConfig) -> Result<(Network, DemandSchedule)> {
    let net = read_network(&config.network)?;
    validate_network(&net).into_result().map_err(|e| Error::Input {
        path: config.network.clone(),
        message: e.to_string(),
    })?;
    let demand = read_demand(&config.demand, Some(net.n_nodes))?;
    match config.horizon {
        Some(h) => Ok((net.truncated(h)?, demand.truncated(h)?)),
        None => {
            demand.check_against(&net)?;
            Ok((net, demand))
        }
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let (net, demand) = load_inputs(config)?;
    run_scenario_with(&net, &demand, config)
}

/// Runs the pipeline on in-memory inputs; the paths in `config` are unused.
pub fn run_scenario_with(net: &Network, demand: &DemandSchedule, config: &ScenarioConfig) -> Result<ScenarioReport> {
    let start = Instant::now();
    validate_network(net).into_result()?;
    demand.check_against(net)?;
    let demand = if config.jitter > 0.0 {
        jitter_demand(demand, config.jitter, config.seed)
    } else {
        demand.clone()
    };
    let opts = &config.solver;
    let augmented = ensure_feasible_and_unique(
        net,
        AugmentOptions {
            voll: opts.voll,
            reg: opts.reg,
        },
    );

    let uc = solve_uc(&augmented, &demand, opts)?;
    let dispatch_time = start.elapsed().as_secs_f64();
    info!("dispatch solved in {dispatch_time:.3} s ({} iterations)", uc.solution.iterations);

    let t0 = Instant::now();
    let lme = compute_lmes(&uc.qp, &demand, &uc.solution, &config.lme)?;
    let lme_time = t0.elapsed().as_secs_f64();
    if lme.degenerate {
        warn!("dynamic LMEs are one-sided at a degenerate point");
    }

    let t0 = Instant::now();
    let stat = if config.static_lme {
        Some(static_approximation(&uc.network, &demand, &uc.qp, &uc.solution, opts, &config.lme)?)
    } else {
        None
    };
    let static_time = t0.elapsed().as_secs_f64();

    let metrics = match &stat {
        Some(s) => Some(compare(&s.lme.lambda, &lme.lambda, config.day_len)?),
        None => None,
    };

    let fd_check = match config.fd_eps {
        Some(eps) => {
            let fd = finite_difference_lmes(&uc.network, &demand, eps, opts)?;
            let scale = fd.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            let max_abs_gap = fd
                .iter()
                .flatten()
                .zip(lme.lambda.iter().flatten())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            Some(FdCheck {
                eps,
                lme_fd: fd,
                max_abs_gap,
                max_rel_gap: max_abs_gap / scale,
            })
        }
        None => None,
    };

    let lme_dynamic_smoothed = config.smooth.map(|f| smooth_columns(&lme.lambda, f)).transpose()?;
    let commitments = uc
        .network
        .devices
        .iter()
        .enumerate()
        .filter_map(|(j, d)| match d {
            Device::UcGenerator {
                commitment: Some(c), ..
            } => Some((j, c.clone())),
            _ => None,
        })
        .collect();
    let sol = &uc.solution;
    Ok(ScenarioReport {
        description: net.description.clone(),
        n_nodes: net.n_nodes,
        horizon: net.horizon,
        seed: config.seed,
        devices: device_header(&uc.network),
        commitments,
        dispatch: sol.schedule(&uc.qp),
        lmp: sol.lmp(&uc.qp),
        emissions: EmissionsSummary {
            total: lme.emissions_total,
            per_period: lme.emissions_per_period.clone(),
        },
        lme_dynamic: lme.lambda.clone(),
        lme_static: stat.as_ref().map(|s| s.lme.lambda.clone()),
        lme_dynamic_smoothed,
        metrics,
        solver_stats: SolverStats {
            status: sol.status,
            iterations: sol.iterations,
            residuals: sol.residuals,
            polished: sol.polished,
            dispatch_time,
            lme_time,
            static_time,
            wall_time: start.elapsed().as_secs_f64(),
        },
        degeneracy: DegeneracyInfo::from(&lme),
        static_degeneracy: stat.as_ref().map(|s| DegeneracyInfo::from(&s.lme)),
        fd_check,
    })
}

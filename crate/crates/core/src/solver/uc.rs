//! Resolving unit-commitment decisions before the continuous solve.

use log::{debug, warn};
use rayon::prelude::*;

use super::{solve_at, PrimalDualSolution, SolverOptions, UcMode};
use crate::error::{Error, Result};
use crate::grid::{DemandSchedule, Device, Network};
use crate::qp::{assemble, ParametricQP};

/// Largest number of binary decisions the exhaustive search enumerates.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// A network whose UC generators all carry a commitment, with its QP and
/// optimal solution.
#[derive(Debug, Clone)]
pub struct UcSolution {
    pub network: Network,
    pub qp: ParametricQP,
    pub solution: PrimalDualSolution,
}

fn uc_devices(net: &Network) -> Vec<usize> {
    net.devices
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, Device::UcGenerator { .. }))
        .map(|(j, _)| j)
        .collect()
}

fn with_commitments(net: &Network, devices: &[usize], patterns: &[Vec<bool>]) -> Network {
    let mut out = net.clone();
    for (&j, p) in devices.iter().zip(patterns) {
        if let Device::UcGenerator { commitment, .. } = &mut out.devices[j] {
            *commitment = Some(p.clone());
        }
    }
    out
}

fn solve_fixed(net: Network, demand: &DemandSchedule, opts: &SolverOptions) -> Result<UcSolution> {
    let qp = assemble(&net)?;
    let solution = solve_at(&qp, demand, opts)?;
    Ok(UcSolution {
        network: net,
        qp,
        solution,
    })
}

/// Fixes every UC commitment according to `opts.uc_mode` and solves the
/// resulting QP. Networks without UC generators are solved directly.
pub fn solve_uc(net: &Network, demand: &DemandSchedule, opts: &SolverOptions) -> Result<UcSolution> {
    demand.check_against(net)?;
    let uc = uc_devices(net);
    let unresolved: Vec<usize> = uc
        .iter()
        .copied()
        .filter(|&j| matches!(&net.devices[j], Device::UcGenerator { commitment: None, .. }))
        .collect();
    if unresolved.is_empty() {
        return solve_fixed(net.clone(), demand, opts);
    }
    match opts.uc_mode {
        UcMode::Fixed => Err(Error::UnresolvedCommitment { device: unresolved[0] }),
        UcMode::HeuristicRounding => heuristic(net, demand, opts, &unresolved),
        UcMode::Exhaustive => exhaustive(net, demand, opts, &unresolved),
    }
}

fn heuristic(net: &Network, demand: &DemandSchedule, opts: &SolverOptions, devices: &[usize]) -> Result<UcSolution> {
    let horizon = net.horizon;
    // Relaxation: always on, minimum output dropped.
    let mut relaxed = net.clone();
    for &j in devices {
        let mut g = net.devices[j].generator().expect("UC generator").clone();
        g.g_min = 0.0.into();
        relaxed.devices[j] = Device::StaticGenerator(g);
    }
    let rqp = assemble(&relaxed)?;
    let rsol = solve_at(&rqp, demand, opts)?;
    let g = rsol.schedule(&rqp);
    let pattern = |full: bool| -> Vec<Vec<bool>> {
        devices
            .iter()
            .map(|&j| {
                let Device::UcGenerator {
                    generator,
                    min_output_fraction,
                    ..
                } = &net.devices[j]
                else {
                    unreachable!()
                };
                (0..horizon)
                    .map(|t| {
                        let floor = min_output_fraction * generator.g_max.at(t);
                        if full {
                            g[t][j] >= floor.max(generator.g_min.at(t)) * (1.0 - 1e-9) - 1e-9
                        } else {
                            g[t][j] >= 0.5 * floor
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let loose = pattern(false);
    debug!("heuristic commitment: {loose:?}");
    match solve_fixed(with_commitments(net, devices, &loose), demand, opts) {
        Ok(sol) => Ok(sol),
        Err(e) => {
            // Committing only where the relaxed point already meets the
            // minimum keeps that point feasible, with curtailment absorbing
            // the decommitted output.
            let strict = pattern(true);
            if strict == loose {
                return Err(e);
            }
            warn!("rounded commitment failed ({e}); retrying with units on only at full minimum output");
            solve_fixed(with_commitments(net, devices, &strict), demand, opts)
        }
    }
}

fn exhaustive(net: &Network, demand: &DemandSchedule, opts: &SolverOptions, devices: &[usize]) -> Result<UcSolution> {
    let horizon = net.horizon;
    let bits = horizon * devices.len();
    if bits > EXHAUSTIVE_LIMIT {
        return Err(Error::CombinatorialGuard {
            patterns_log2: bits,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let decode = |code: usize| -> Vec<Vec<bool>> {
        (0..devices.len())
            .map(|k| (0..horizon).map(|t| code >> (k * horizon + t) & 1 == 1).collect())
            .collect()
    };
    let best = (0..1usize << bits)
        .into_par_iter()
        .filter_map(|code| {
            let candidate = with_commitments(net, devices, &decode(code));
            let qp = assemble(&candidate).ok()?;
            let sol = solve_at(&qp, demand, opts).ok()?;
            Some((qp.objective(&sol.x), code))
        })
        // Lowest cost; ties go to the lowest pattern index.
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match best {
        Some((cost, code)) => {
            debug!("exhaustive commitment: pattern {code} with cost {cost}");
            solve_fixed(with_commitments(net, devices, &decode(code)), demand, opts)
        }
        None => {
            warn!("no commitment pattern admits a feasible dispatch");
            Err(Error::Solver("every commitment pattern is infeasible".into()))
        }
    }
}

//! The static restriction: dynamic devices pinned at their optimal
//! schedules, which removes every constraint coupling periods.

use super::{compute_lmes, LmeOptions, LmeResult};
use crate::error::{Error, Result};
use crate::grid::{DemandSchedule, Device, Generator, Network, Profile};
use crate::qp::{assemble, ParametricQP};
use crate::solver::{solve_at, PrimalDualSolution, SolverOptions};

/// Replaces each storage unit and ramp-limited generator with a generator
/// whose output is fixed to its schedule in `sol`. UC generators keep their
/// (already fixed) commitment and stay period-separable.
pub fn static_restriction(net: &Network, pqp: &ParametricQP, sol: &PrimalDualSolution) -> Network {
    let schedule = sol.schedule(pqp);
    let mut out = net.clone();
    for (j, device) in net.devices.iter().enumerate() {
        if !device.is_dynamic() {
            continue;
        }
        let pinned = Profile::Series(schedule.iter().map(|row| row[j]).collect());
        let generator = match device {
            Device::RampGenerator { generator, .. } => Generator {
                g_min: pinned.clone(),
                g_max: pinned,
                ..generator.clone()
            },
            Device::Storage(s) => Generator {
                name: s.name.clone(),
                ..Generator::new(s.node, pinned.clone(), 0.0, 0.0).with_min(pinned)
            },
            _ => unreachable!("only ramp generators and storage are dynamic"),
        };
        out.devices[j] = Device::StaticGenerator(generator);
    }
    out
}

#[derive(Debug, Clone)]
pub struct StaticLmes {
    pub lme: LmeResult,
    pub network: Network,
    pub qp: ParametricQP,
    pub solution: PrimalDualSolution,
}

/// LMEs of the static restriction around the dynamic optimum `sol`.
pub fn static_approximation(
    net: &Network,
    demand: &DemandSchedule,
    pqp: &ParametricQP,
    sol: &PrimalDualSolution,
    opts: &SolverOptions,
    lme_opts: &LmeOptions,
) -> Result<StaticLmes> {
    let network = static_restriction(net, pqp, sol);
    let qp = assemble(&network)?;
    let solution = solve_at(&qp, demand, opts).map_err(|e| Error::StaticRestriction(e.to_string()))?;
    let (g_dyn, g_static) = (sol.schedule(pqp), solution.schedule(&qp));
    for (j, device) in net.devices.iter().enumerate() {
        if !device.is_dynamic() {
            continue;
        }
        for t in 0..net.horizon {
            let drift = (g_dyn[t][j] - g_static[t][j]).abs();
            if drift > opts.tol.max(1e-9) * (1.0 + g_dyn[t][j].abs()) {
                return Err(Error::StaticRestriction(format!(
                    "device {j} period {t}: pinned {} re-solved to {}",
                    g_dyn[t][j], g_static[t][j]
                )));
            }
        }
    }
    let lme = compute_lmes(&qp, demand, &solution, lme_opts)?;
    Ok(StaticLmes {
        lme,
        network,
        qp,
        solution,
    })
}

//! Resolving on/off decisions before differentiation: heuristic rounding
//! against exhaustive search on a small instance.

use marginal_emissions::diff::{compute_lmes, LmeOptions};
use marginal_emissions::grid::{ensure_feasible_and_unique, AugmentOptions, DemandSchedule, Device, Generator, Network};
use marginal_emissions::solver::{solve_uc, SolverOptions, UcMode};

fn main() -> marginal_emissions::Result<()> {
    let net = Network::new(1, 4)
        .with_device(Device::UcGenerator {
            generator: Generator::new(0, 50.0, 15.0, 1.0).with_quad(0.01).named("coal"),
            min_output_fraction: 0.5,
            commitment: None,
        })
        .with_device(Device::StaticGenerator(Generator::new(0, 60.0, 35.0, 0.45).with_quad(0.02).named("gas")));
    let net = ensure_feasible_and_unique(&net, AugmentOptions::default());
    let demand = DemandSchedule::new(vec![vec![10.0], vec![30.0], vec![55.0], vec![20.0]])?;

    for mode in [UcMode::HeuristicRounding, UcMode::Exhaustive] {
        let opts = SolverOptions {
            uc_mode: mode,
            ..Default::default()
        };
        let out = solve_uc(&net, &demand, &opts)?;
        let Device::UcGenerator { commitment, .. } = &out.network.devices[0] else {
            unreachable!()
        };
        let lme = compute_lmes(&out.qp, &demand, &out.solution, &LmeOptions::default())?;
        println!("{mode:?}");
        println!("  commitment {:?}", commitment.as_deref().unwrap_or_default());
        println!("  cost {:.2}", out.qp.objective(&out.solution.x));
        println!("  LMEs {:?}", lme.lambda.iter().map(|r| r[0]).collect::<Vec<_>>());
    }
    Ok(())
}

//! Sweeping demand on one bus: the LME steps through the emission rates of
//! the units in merit order.

use marginal_emissions::diff::{compute_lmes, LmeOptions};
use marginal_emissions::grid::{ensure_feasible_and_unique, AugmentOptions, DemandSchedule, Device, Generator, Network};
use marginal_emissions::qp::assemble;
use marginal_emissions::solver::{solve_at, SolverOptions};

fn main() -> marginal_emissions::Result<()> {
    let units = [("hydro", 5.0, 0.0), ("coal", 20.0, 1.0), ("gas", 35.0, 0.45), ("oil", 80.0, 0.8)];
    let mut net = Network::new(1, 1);
    for (name, cost, rate) in units {
        net = net.with_device(Device::StaticGenerator(Generator::new(0, 10.0, cost, rate).named(name)));
    }
    let net = ensure_feasible_and_unique(&net, AugmentOptions::default());
    let qp = assemble(&net)?;
    println!("demand  LME    LMP");
    for d in [2.0, 8.0, 13.0, 19.0, 25.0, 33.0, 38.0] {
        let demand = DemandSchedule::new(vec![vec![d]])?;
        let sol = solve_at(&qp, &demand, &SolverOptions::default())?;
        let lme = compute_lmes(&qp, &demand, &sol, &LmeOptions::default())?;
        println!("{d:6.1}  {:.3}  {:6.2}", lme.lambda[0][0], sol.lmp(&qp)[0][0]);
    }
    Ok(())
}

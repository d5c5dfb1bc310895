//! Two buses joined by one rated line. Once the line binds, each side has
//! its own marginal unit and the nodal LMEs split.

use marginal_emissions::diff::{compute_lmes, LmeOptions};
use marginal_emissions::grid::{
    ensure_feasible_and_unique, AugmentOptions, DemandSchedule, Device, Generator, Line, Network,
};
use marginal_emissions::qp::assemble;
use marginal_emissions::solver::{solve_at, SolverOptions};

fn main() -> marginal_emissions::Result<()> {
    let net = Network::new(2, 1)
        .with_line(Line::new(0, 1, 10.0, 25.0))
        .with_device(Device::StaticGenerator(Generator::new(0, 100.0, 20.0, 1.0).with_quad(0.01).named("coal")))
        .with_device(Device::StaticGenerator(Generator::new(1, 100.0, 40.0, 0.4).with_quad(0.02).named("gas")))
        .with_computed_ptdf()?;
    let net = ensure_feasible_and_unique(&net, AugmentOptions::default());
    println!("PTDF {:?}", net.ptdf_matrix()?);
    let qp = assemble(&net)?;
    for load in [10.0, 20.0, 40.0] {
        let demand = DemandSchedule::new(vec![vec![5.0, load]])?;
        let sol = solve_at(&qp, &demand, &SolverOptions::default())?;
        let lme = compute_lmes(&qp, &demand, &sol, &LmeOptions::default())?;
        let g = &sol.schedule(&qp)[0];
        println!(
            "load at bus 1 {load:4.0}: coal {:5.1}, gas {:5.1}, LMP {:?}, LME {:?}",
            g[0],
            g[1],
            sol.lmp(&qp)[0],
            lme.lambda[0]
        );
    }
    Ok(())
}

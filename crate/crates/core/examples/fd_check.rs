//! Implicit LMEs against central finite differences on random networks.

use marginal_emissions::diff::{compute_lmes, finite_difference_lmes, LmeOptions};
use marginal_emissions::grid::{ensure_feasible_and_unique, AugmentOptions};
use marginal_emissions::qp::assemble;
use marginal_emissions::solver::{solve_at, SolverOptions};
use marginal_emissions::synthetic::{random_instance, RandomSpec};

fn main() -> marginal_emissions::Result<()> {
    let opts = SolverOptions::default();
    for seed in 0..8 {
        let (net, demand) = random_instance(seed, &RandomSpec::default());
        let net = ensure_feasible_and_unique(&net, AugmentOptions::default());
        let qp = assemble(&net)?;
        let sol = solve_at(&qp, &demand, &opts)?;
        let lme = compute_lmes(&qp, &demand, &sol, &LmeOptions::default())?;
        let fd = finite_difference_lmes(&net, &demand, 1e-3, &opts)?;
        let gap = lme
            .lambda
            .iter()
            .flatten()
            .zip(fd.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        println!(
            "seed {seed}: {} nodes x {} periods, max |IFT - FD| {gap:.2e}{}",
            net.n_nodes,
            net.horizon,
            if lme.degenerate { " (degenerate point)" } else { "" }
        );
    }
    Ok(())
}

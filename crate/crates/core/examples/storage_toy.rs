//! The one-node, two-period battery example: the dynamic model sees that
//! extra demand in either period is met by stored solar, while the static
//! view of period 2 sees only gas.

use marginal_emissions::diff::{compute_lmes, static_approximation, LmeOptions};
use marginal_emissions::grid::{ensure_feasible_and_unique, AugmentOptions};
use marginal_emissions::qp::assemble;
use marginal_emissions::solver::{solve_at, SolverOptions};
use marginal_emissions::synthetic::storage_toy;

fn main() -> marginal_emissions::Result<()> {
    let (net, demand) = storage_toy();
    let net = ensure_feasible_and_unique(&net, AugmentOptions::default());
    let qp = assemble(&net)?;
    let opts = SolverOptions::default();
    let sol = solve_at(&qp, &demand, &opts)?;

    for (t, g) in sol.schedule(&qp).iter().enumerate() {
        println!("period {t}: gas {:6.3}  solar {:6.3}  battery {:6.3}", g[0], g[1], g[2]);
    }
    let dynamic = compute_lmes(&qp, &demand, &sol, &LmeOptions::default())?;
    let stat = static_approximation(&net, &demand, &qp, &sol, &opts, &LmeOptions::default())?;
    println!("dynamic LMEs {:?}", dynamic.lambda);
    println!("static LMEs  {:?}", stat.lme.lambda);
    if dynamic.degenerate || stat.lme.degenerate {
        println!("(one-sided: linear costs leave ties at this point)");
    }
    Ok(())
}

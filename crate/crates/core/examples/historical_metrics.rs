//! Metrics for comparing model LMEs with observed emission changes.

use marginal_emissions::analysis::metrics::HISTORICAL_EPS;
use marginal_emissions::analysis::{historical_lme_series, normalized_abs_error, rolling_mean};

fn main() -> marginal_emissions::Result<()> {
    // Hour-to-hour changes in system emissions (tCO2) and demand (MWh).
    let d_emis = [12.0, -4.5, 30.0, 0.2, -18.0, 9.0];
    let d_load = [15.0, -6.0, 40.0, 0.0, -25.0, 10.0];
    let observed = historical_lme_series(&d_emis, &d_load, HISTORICAL_EPS)?;
    let model = [0.75, 0.75, 0.8, 0.45, 0.7, 0.9];
    println!("observed {observed:.3?}");
    println!("smoothed {:.3?}", rolling_mean(&observed, 0.5)?);
    println!("normalized error {:.3?}", normalized_abs_error(&model, &observed)?);
    Ok(())
}

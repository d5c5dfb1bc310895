//! A day on a three-bus ring with two batteries. Storage links periods, so
//! the dynamic LMEs depart from the static ones; without storage they agree.

use marginal_emissions::analysis::{run_scenario_with, ScenarioConfig};
use marginal_emissions::synthetic::storage_heavy;

fn main() -> marginal_emissions::Result<()> {
    let cfg = ScenarioConfig::new("", "");
    for with_storage in [true, false] {
        let (net, demand) = storage_heavy(with_storage);
        let r = run_scenario_with(&net, &demand, &cfg)?;
        println!("storage: {with_storage}");
        println!(" hour  dynamic  static");
        let stat = r.lme_static.as_ref().expect("static LMEs requested");
        for t in (0..24).step_by(3) {
            println!("  {t:2}   {:.4}   {:.4}", r.lme_dynamic[t][0], stat[t][0]);
        }
        let m = r.metrics.as_ref().expect("metrics");
        println!(" mean normalized RMS deviation {:.4}\n", m.rms_deviation_normalized.unwrap_or(f64::NAN));
    }
    Ok(())
}

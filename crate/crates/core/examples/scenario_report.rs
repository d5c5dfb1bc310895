//! File-driven run: read the bundled two-node fixture, produce the full
//! report and write the CSV/JSON outputs to a temporary directory.

use std::path::Path;

use marginal_emissions::analysis::io::{node_header, write_matrix_csv};
use marginal_emissions::analysis::{run_scenario, ScenarioConfig};

fn main() -> marginal_emissions::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/two_node");
    let cfg = ScenarioConfig {
        fd_eps: Some(1e-3),
        day_len: 3,
        ..ScenarioConfig::new(dir.join("network.json"), dir.join("demand.csv"))
    };
    let report = run_scenario(&cfg)?;

    let out = std::env::temp_dir().join("lme-scenario-report");
    std::fs::create_dir_all(&out)?;
    write_matrix_csv(&out.join("lme.csv"), &node_header(report.n_nodes), &report.lme_dynamic)?;
    write_matrix_csv(&out.join("dispatch.csv"), &report.devices, &report.dispatch)?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;

    println!("devices {:?}", report.devices);
    println!("total emissions {:.3} tCO2", report.emissions.total);
    println!("dynamic LMEs {:?}", report.lme_dynamic);
    if let Some(fd) = &report.fd_check {
        println!("max relative FD gap {:.1e}", fd.max_rel_gap);
    }
    println!("outputs in {}", out.display());
    Ok(())
}

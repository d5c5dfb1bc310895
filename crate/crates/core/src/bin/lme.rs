use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use marginal_emissions::analysis::io::{device_header, node_header, read_demand, read_network, write_matrix_csv};
use marginal_emissions::analysis::{run_scenario, ScenarioConfig, ScenarioReport};
use marginal_emissions::grid::{validate_network, DEFAULT_REG};
use marginal_emissions::solver::{SolverOptions, UcMode};
use marginal_emissions::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_DEGENERATE: u8 = 4;

/// Dispatch and locational marginal emissions for DC power networks.
#[derive(Parser)]
#[command(name = "lme", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file (and optionally a demand file) without solving.
    Validate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        demand: Option<PathBuf>,
    },
    /// Solve the dispatch; writes dispatch.csv.
    Dispatch(Common),
    /// Dynamic LMEs; writes lme.csv and dispatch.csv.
    Lme(Common),
    /// LMEs of the static restriction; writes lme_static.csv and dispatch.csv.
    StaticLme(Common),
    /// Static vs dynamic LMEs and their RMS deviation.
    Compare(Common),
    /// Implicit LMEs against central finite differences; writes lme.csv and lme_fd.csv.
    FdCheck(Common),
    /// Everything: lme.csv, lme_static.csv, dispatch.csv and report.json.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    demand: PathBuf,
    /// Use only the first N periods.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// KKT residual tolerance of the dispatch solve.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Floor on quadratic cost coefficients, $/MW²h.
    #[arg(long, default_value_t = DEFAULT_REG)]
    reg: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniform demand noise in MW, drawn from --seed.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// fixed, heuristic or exhaustive.
    #[arg(long, default_value = "heuristic")]
    uc_mode: UcMode,
    #[arg(long, default_value_t = 1e-3)]
    fd_eps: f64,
    /// Periods per day window for the RMS comparison.
    #[arg(long, default_value_t = 24)]
    day_len: usize,
    /// Rolling-window fraction for a smoothed copy of the dynamic LMEs.
    #[arg(long)]
    smooth: Option<f64>,
}

impl Common {
    fn config(&self) -> ScenarioConfig {
        ScenarioConfig {
            horizon: self.horizon,
            solver: SolverOptions {
                tol: self.tol,
                reg: self.reg,
                uc_mode: self.uc_mode,
                ..Default::default()
            },
            day_len: self.day_len,
            seed: self.seed,
            jitter: self.jitter,
            smooth: self.smooth,
            static_lme: false,
            ..ScenarioConfig::new(&self.network, &self.demand)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver(_) | Error::SingularJacobian { .. } | Error::FiniteDifference { .. } | Error::StaticRestriction(_) => {
            EXIT_SOLVER
        }
        _ => EXIT_DATA,
    }
}

fn write_outputs(out: &Path, r: &ScenarioReport, files: &[&str]) -> marginal_emissions::Result<()> {
    fs::create_dir_all(out)?;
    let nodes = node_header(r.n_nodes);
    for &f in files {
        let path = out.join(f);
        match f {
            "dispatch.csv" => write_matrix_csv(&path, &r.devices, &r.dispatch)?,
            "lme.csv" => write_matrix_csv(&path, &nodes, &r.lme_dynamic)?,
            "lme_static.csv" => {
                if let Some(s) = &r.lme_static {
                    write_matrix_csv(&path, &nodes, s)?
                }
            }
            "lme_fd.csv" => {
                if let Some(fd) = &r.fd_check {
                    write_matrix_csv(&path, &nodes, &fd.lme_fd)?
                }
            }
            "lme_smoothed.csv" => {
                if let Some(s) = &r.lme_dynamic_smoothed {
                    write_matrix_csv(&path, &nodes, s)?
                }
            }
            "report.json" => fs::write(&path, serde_json::to_string_pretty(r)?)?,
            other => unreachable!("unknown output {other}"),
        }
    }
    Ok(())
}

fn validate(network: &Path, demand: Option<&Path>) -> Result<(), Error> {
    let net = read_network(network)?;
    let rep = validate_network(&net);
    for v in &rep.violations {
        println!("{}: {v}", network.display());
    }
    rep.into_result()?;
    let devices = device_header(&net);
    println!(
        "network ok: {} nodes, {} lines, {} devices, {} periods",
        net.n_nodes,
        net.lines.len(),
        devices.len(),
        net.horizon
    );
    if let Some(d) = demand {
        let demand = read_demand(d, Some(net.n_nodes))?;
        demand.check_against(&net)?;
        println!("demand ok: {} periods", demand.horizon());
    }
    Ok(())
}

fn print_summary(r: &ScenarioReport) {
    let s = &r.solver_stats;
    println!(
        "status {:?}, {} iterations, max KKT residual {:.2e}, {:.3} s",
        s.status,
        s.iterations,
        s.residuals.max(),
        s.wall_time
    );
    println!("total emissions {:.6} tCO2", r.emissions.total);
}

fn run(cli: Cli) -> Result<u8, Error> {
    let (common, files, check_degenerate): (&Common, &[&str], bool) = match &cli.command {
        Command::Validate { network, demand } => {
            validate(network, demand.as_deref())?;
            return Ok(0);
        }
        Command::Dispatch(c) => (c, &["dispatch.csv"], false),
        Command::Lme(c) => (c, &["dispatch.csv", "lme.csv", "lme_smoothed.csv"], true),
        Command::StaticLme(c) => (c, &["dispatch.csv", "lme_static.csv"], true),
        Command::Compare(c) => (c, &["lme.csv", "lme_static.csv"], true),
        Command::FdCheck(c) => (c, &["lme.csv", "lme_fd.csv"], true),
        Command::Report(c) => (
            c,
            &["dispatch.csv", "lme.csv", "lme_static.csv", "lme_smoothed.csv", "report.json"],
            true,
        ),
    };
    let mut cfg = common.config();
    match &cli.command {
        Command::StaticLme(_) | Command::Compare(_) | Command::Report(_) => cfg.static_lme = true,
        Command::FdCheck(_) => cfg.fd_eps = Some(common.fd_eps),
        _ => {}
    }
    let report = run_scenario(&cfg)?;
    write_outputs(&common.out, &report, files)?;
    print_summary(&report);
    if let Some(m) = &report.metrics {
        match m.rms_deviation_normalized {
            Some(v) => println!("mean normalized RMS deviation {v:.6} (median |LME| {:.6})", m.median.unwrap_or(0.0)),
            None => println!("median |LME| is zero; mean absolute RMS deviation {:.6} tCO2/MWh", m.rms_deviation_absolute),
        }
    }
    if let Some(fd) = &report.fd_check {
        println!("finite differences (eps {}): max abs gap {:.3e}, max rel gap {:.3e}", fd.eps, fd.max_abs_gap, fd.max_rel_gap);
    }
    if check_degenerate && report.is_degenerate() {
        eprintln!("warning: degenerate active set; LMEs are one-sided (outputs written)");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

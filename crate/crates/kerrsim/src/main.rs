//! Command-line interface for the cavity-array steady-state engine.

use clap::{Args, Parser, Subcommand};
use kerrsim::observables::ObservableRecord;
use kerrsim::runner::config::RunConfig;
use kerrsim::runner::{output, sweep};
use kerrsim::spin_ref::{self, SpinXYParams};
use kerrsim::steady_state;
use kerrsim::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "kerrsim", version, about = "Steady states of driven dissipative Kerr cavity arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep points.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Single-threaded, byte-reproducible outputs.
    #[arg(long)]
    deterministic: bool,
    /// Configuration overrides, dotted key paths (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Steady-state method, overriding the configuration file.
    #[arg(long, value_parser = ["direct", "iterative", "evolve"])]
    solver: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single parameter point.
    Run(Common),
    /// Sweep the two-photon pump amplitude.
    Sweep(Common),
    /// Sweep the one-photon drive magnitude.
    Response(Common),
    /// Cutoff-convergence study at fixed parameters.
    Converge(Common),
    /// Classical Ising and XY spin-model oracles.
    Spinref(Common),
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    if common.deterministic {
        faer::set_global_parallelism(faer::Par::Seq);
    }
    RunConfig::from_file(
        &common.config,
        &common.overrides,
        common.solver.as_deref(),
        common.workers,
        common.deterministic,
    )
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn emit(
    common: &Common,
    cfg: &RunConfig,
    command: &str,
    records: &[ObservableRecord],
    convergence: Option<kerrsim::steady_state::ConvergenceReport>,
) -> Result<()> {
    ensure_out_dir(&common.out)?;
    output::write_csv(&common.out.join("records.csv"), records, cfg.lattice.n_sites)?;
    let mut summary = output::RunSummary::new(command, &cfg.echo, records);
    summary.deterministic = cfg.deterministic;
    summary.convergence = convergence;
    output::write_summary_json(&common.out.join("summary.json"), &summary)?;
    Ok(())
}

/// Exit 3 when no point of the run converged.
fn check_all_points(records: &[ObservableRecord]) -> Result<()> {
    if !records.is_empty() && records.iter().all(|r| !r.status.starts_with("ok")) {
        return Err(Error::NonConvergence(
            "no sweep point produced a converged solution".into(),
        ));
    }
    Ok(())
}

fn cmd_run(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let axis = cfg.params.pump_g.re;
    let (record, _) = sweep::evaluate_point(&cfg, &cfg.params.clone(), axis, None);
    println!(
        "G/gamma = {axis}: occupancy = {:?}, S = {:.6}, residual = {:.3e}, status = {}",
        record.mean_occupancy, record.entropy, record.residual, record.status
    );
    let records = vec![record];
    emit(common, &cfg, "run", &records, None)?;
    check_all_points(&records)
}

fn cmd_sweep(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let records = sweep::run_sweep(&cfg)?;
    for r in &records {
        println!(
            "axis = {:>10.4}: S = {:.6}, g1 = {}, status = {}",
            r.axis_value,
            r.entropy,
            r.g1.map_or("undefined".to_string(), |g| format!("{:.6}{:+.6}i", g.re, g.im)),
            r.status
        );
    }
    emit(common, &cfg, "sweep", &records, None)?;
    check_all_points(&records)
}

fn cmd_response(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let records = sweep::run_drive_response(&cfg)?;
    for r in &records {
        println!(
            "|F|/gamma = {:>10.4}: |<a1>| = {:.6}, status = {}",
            r.axis_value,
            r.induced_coherence.norm(),
            r.status
        );
    }
    emit(common, &cfg, "response", &records, None)?;
    check_all_points(&records)
}

fn cmd_converge(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let (result, report) = steady_state::converge_cutoffs(
        &cfg.lattice,
        &cfg.params,
        &cfg.solver,
        &cfg.schedule,
        cfg.observable_tol,
    )?;
    println!("{:>6} {:>6} {:>6} {:>14} {:>12} {:>12} {:>12}", "n_max", "n_tot", "dim", "occupancy", "g1_re", "entropy", "residual");
    for level in &report.levels {
        println!(
            "{:>6} {:>6} {:>6} {:>14.8} {:>12.6} {:>12.6} {:>12.3e}",
            level.trunc.n_max_per_mode,
            level.trunc.n_max_total,
            level.dim,
            level.total_occupancy,
            level.g1_re,
            level.entropy,
            level.residual
        );
    }
    println!(
        "observables {} at tolerance {:.1e}",
        if report.observables_converged { "converged" } else { "NOT converged" },
        report.observable_tol
    );
    let axis = cfg.params.pump_g.re;
    let record = build_final_record(&cfg, axis, &result);
    let records = vec![record];
    emit(common, &cfg, "converge", &records, Some(report.clone()))?;
    if !report.observables_converged {
        return Err(Error::NonConvergence(
            "cutoff schedule exhausted before observables converged".into(),
        ));
    }
    check_all_points(&records)
}

fn build_final_record(
    cfg: &RunConfig,
    axis: f64,
    result: &steady_state::SteadyStateResult,
) -> ObservableRecord {
    // reuse the point pipeline by warm-starting from the converged state at
    // its own basis: a no-op solve would be wasteful, so assemble directly
    let (record, _) = sweep::evaluate_point_from_state(cfg, &cfg.params, axis, result);
    record
}

fn cmd_spinref(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let spec = cfg
        .spinref
        .clone()
        .ok_or_else(|| Error::Config("no [spinref] section in configuration".into()))?;
    ensure_out_dir(&common.out)?;
    let path = common.out.join("spinref.json");
    let text = match spec.kind.as_str() {
        "ising" => {
            let r = spin_ref::ising_brute_force(spec.n_spins, &spec.bonds, spec.j_ising, spec.h_field)?;
            println!(
                "ising: E0 = {}, degeneracy = {}, correlation = {:.6}, magnetization = {:.6}",
                r.ground_energy, r.degeneracy, r.pair_correlation, r.magnetization
            );
            serde_json::to_string_pretty(&r)
        }
        "xy" => {
            let p = SpinXYParams {
                n_spins: spec.n_spins,
                bonds: spec.bonds.clone(),
                h_z: spec.h_z,
                j_xy: spec.j_xy,
                eta_x: spec.eta_x,
                eta_y: spec.eta_y,
            };
            let g = spin_ref::xy_ground_state(&p)?;
            println!(
                "xy: E0 = {:.8}, ground degeneracy = {}, <sxsx> = {:.6}, <sysy> = {:.6}, <sz> = {:.6}",
                g.energy,
                g.ground_basis.len(),
                g.corr_xx,
                g.corr_yy,
                g.sz
            );
            #[derive(serde::Serialize)]
            struct XYOut {
                energy: f64,
                ground_degeneracy: usize,
                corr_xx: f64,
                corr_yy: f64,
                sz: f64,
                spectrum_low: Vec<f64>,
            }
            serde_json::to_string_pretty(&XYOut {
                energy: g.energy,
                ground_degeneracy: g.ground_basis.len(),
                corr_xx: g.corr_xx,
                corr_yy: g.corr_yy,
                sz: g.sz,
                spectrum_low: g.spectrum.iter().take(16).copied().collect(),
            })
        }
        other => {
            return Err(Error::Config(format!(
                "spinref kind must be \"ising\" or \"xy\", got \"{other}\""
            )))
        }
    }
    .map_err(|e| Error::Config(format!("spinref serialization failed: {e}")))?;
    std::fs::write(&path, text + "\n").map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::Response(c) => cmd_response(c),
        Command::Converge(c) => cmd_converge(c),
        Command::Spinref(c) => cmd_spinref(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

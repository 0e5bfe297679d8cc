use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nsdi::config::{Profile, RunConfig};
use nsdi::report::{emit_report, ScanTable};
use nsdi::runner::{prepare, run_scan, run_single, RunStatus, StageError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PHYSICS: u8 = 3;
const EXIT_PARTIAL_SCAN: u8 = 4;

#[derive(Parser)]
#[command(name = "nsdi", version, about = "1D helium double-ionization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid profile; overrides the config file
    #[arg(long)]
    profile: Option<Profile>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory; overrides the config file
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the ground state and write a snapshot
    Relax(Common),
    /// Run one configuration
    Run(Common),
    /// Run every (intensity, chirp) point of the scan section
    Scan(Common),
    /// Summarize a scan directory
    Report(Common),
}

enum Failure {
    Validation(anyhow::Error),
    Physics(anyhow::Error),
    Partial(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Physics(e)
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.into())
        } else {
            Failure::Physics(e.into())
        }
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Failure::Validation(anyhow::anyhow!("--config is required")))?;
    let mut cfg = RunConfig::load(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Validation)?;
    if let Some(p) = common.profile {
        cfg.set_profile(p);
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.clone());
    cfg.output = out.clone();
    Ok((cfg, out))
}

fn relax(common: &Common) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let prep = nsdi::par::with_workers(common.workers, || prepare(&cfg))?;
    std::fs::create_dir_all(&out).context("creating output directory")?;
    let f = std::fs::File::create(out.join("ground_state.wf")).context("creating snapshot")?;
    prep.psi0
        .write_snapshot(std::io::BufWriter::new(f))
        .context("writing snapshot")?;
    let summary = serde_json::json!({
        "energy": prep.energy,
        "iterations": prep.iterations,
        "L": prep.grid.half_width(),
        "Nx": prep.grid.n(),
        "exchange_residual": prep.psi0.exchange_residual(),
    });
    std::fs::write(out.join("relax.json"), serde_json::to_string_pretty(&summary).context("json")? + "\n")
        .context("writing relax.json")?;
    println!("E0 = {:.6} a.u. after {} iterations", prep.energy, prep.iterations);
    Ok(())
}

fn run(common: &Common) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    let cfg = cfg.at_point(cfg.pulse.intensity_w_cm2, cfg.pulse.chirp_sign);
    let outcome = nsdi::par::with_workers(common.workers, || -> Result<_, Failure> {
        let prep = prepare(&cfg)?;
        Ok(run_single(&cfg, &prep, &out).context("writing artifacts")?)
    })?;
    let m = &outcome.manifest;
    if let Some((stage, msg)) = &outcome.failure {
        return Err(Failure::Physics(anyhow::anyhow!("{stage} stage: {msg}")));
    }
    if let Some(o) = &outcome.observables {
        println!(
            "DI {:.4e}  SI {:.4e}  S {:.5} nats  1/purity {:.5}  FWHM {}",
            o.di_yield,
            o.si_yield,
            o.entropy_nats,
            o.inverse_purity,
            o.fwhm_rad.map_or("undefined".into(), |f| format!("{f:.4} rad"))
        );
    }
    if m.status == RunStatus::Degraded {
        for h in m.health.iter().filter(|h| !h.pass) {
            eprintln!("health check {} failed: {:e} > {:e}", h.name, h.value, h.limit);
        }
    }
    println!("wrote {} ({:.1} s)", out.display(), m.wall_time_s);
    Ok(())
}

fn scan(common: &Common) -> Result<(), Failure> {
    let (cfg, out) = load(common)?;
    if cfg.scan_points().len() < 2 {
        return Err(Failure::Validation(anyhow::anyhow!("a scan needs at least two points")));
    }
    let outcome = run_scan(&cfg, &out, common.workers)?;
    println!(
        "{} points ({} reused), {} failed; table in {}",
        outcome.rows.len(),
        outcome.reused,
        outcome.failures.len(),
        out.join("scan.csv").display()
    );
    if outcome.failures.is_empty() {
        return Ok(());
    }
    let summary = outcome
        .failures
        .iter()
        .map(|(s, i, m)| format!("  chirp {s:+}, {i:e} W/cm²: {m}"))
        .collect::<Vec<_>>()
        .join("\n");
    Err(Failure::Partial(summary))
}

fn report(common: &Common) -> Result<(), Failure> {
    let dir: PathBuf = match (&common.out, &common.config) {
        (Some(d), _) => d.clone(),
        (None, Some(_)) => load(common)?.1,
        (None, None) => return Err(Failure::Validation(anyhow::anyhow!("--out or --config is required"))),
    };
    let dir = dir.as_path();
    let table = ScanTable::load(dir)
        .with_context(|| format!("reading scan table in {}", dir.display()))
        .map_err(Failure::Validation)?;
    let text = emit_report(&table);
    std::fs::write(dir.join("report.md"), &text).context("writing report.md")?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Relax(c) => relax(c),
        Command::Run(c) => run(c),
        Command::Scan(c) => scan(c),
        Command::Report(c) => report(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("validation error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Physics(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_PHYSICS)
        }
        Err(Failure::Partial(summary)) => {
            eprintln!("scan finished with failures:\n{summary}");
            ExitCode::from(EXIT_PARTIAL_SCAN)
        }
    }
}

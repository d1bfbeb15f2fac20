use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use extphase::cli::{exit_code, run, Command, Context, Outcome, Overrides, PlotArgs, Scenario};
use extphase::{Error, Result};

#[derive(Parser)]
#[command(name = "extphase", version, about = "Extended phase space dynamics, invariants and propagators")]
struct Cli {
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Reduced and extended trajectories (trajectory.csv, extended.csv)
    Integrate(Common),
    /// Auxiliary solution and Lewis invariant drift (ermakov.csv, invariant_drift.csv)
    Ermakov(Common),
    /// Solved transform coefficients (transform.json, transform_report.json)
    Transform(Common),
    /// Direct and factorized kernels (direct.krnl, factorized.krnl, comparison.csv)
    Propagate(Common),
    /// Full verification suite (report.json, report.txt)
    Verify(Common),
    /// Plot-ready CSV series
    Plot(PlotCmd),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Trajectory integrator tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Kernel time slices
    #[arg(long)]
    slices: Option<usize>,
    /// Kernel grid points
    #[arg(long)]
    points: Option<usize>,
    /// Seed of the random sample points
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PlotCmd {
    #[command(flatten)]
    common: Common,
    /// invariant-drift, kernel-column or factorization-error
    #[arg(long)]
    kind: String,
    /// Column index for kernel-column (default: middle)
    #[arg(long)]
    column: Option<usize>,
    /// Kernel file for kernel-column
    #[arg(long)]
    artifact: Option<PathBuf>,
}

fn setup_threads() -> Result<()> {
    let Ok(v) = std::env::var("EXTPHASE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Input(format!("EXTPHASE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<Outcome> {
    setup_threads()?;
    let (cmd, common, plot) = match cli.cmd {
        Sub::Integrate(c) => (Command::Integrate, c, PlotArgs::default()),
        Sub::Ermakov(c) => (Command::Ermakov, c, PlotArgs::default()),
        Sub::Transform(c) => (Command::Transform, c, PlotArgs::default()),
        Sub::Propagate(c) => (Command::Propagate, c, PlotArgs::default()),
        Sub::Verify(c) => (Command::Verify, c, PlotArgs::default()),
        Sub::Plot(p) => (Command::Plot, p.common, PlotArgs { kind: p.kind, column: p.column, artifact: p.artifact }),
    };
    let sc = Scenario::load(&common.scenario)?;
    let ov = Overrides { tol: common.tol, hbar: common.hbar, slices: common.slices, points: common.points, seed: common.seed };
    let ctx = Context::new(sc, &ov)?;
    let outcome = run(cmd, &ctx, &common.out, &plot)?;
    if let Some(rep) = &outcome.report {
        let mut table = Vec::new();
        rep.write_table(&mut table)?;
        print!("{}", String::from_utf8_lossy(&table));
    }
    for f in &outcome.files {
        log::info!("wrote {}", f.display());
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error: {first}");
            return ExitCode::from(1);
        }
    };
    let r = execute(cli);
    if let Err(e) = &r {
        eprintln!("error: {}", e.to_string().replace('\n', " "));
    }
    ExitCode::from(exit_code(&r) as u8)
}

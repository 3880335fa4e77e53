//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed check, 2 configuration error, 3 blow-up.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::grid::Grid;
use crate::integrate::Scheme;
use crate::verify;

use super::config::{RawConfig, RunConfig};
use super::manufactured::{manufactured_profile, manufactured_run, ManufacturedSolution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fchs", version, about = "Fractional-viscosity Camassa-Holm pseudo-spectral solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configuration, writing diagnostics and checkpoints.
    Run(RunArgs),
    /// Run the identity and property checks.
    Verify,
    /// Manufactured-solution convergence study.
    Convergence(ConvergenceArgs),
    /// Run a configuration over a grid of (s, alpha) values.
    Sweep(SweepArgs),
}

/// Every config key as a `--key value` flag; flags override the file.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long = "n_points")]
    n_points: Option<String>,
    #[arg(long = "box_length")]
    box_length: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long = "t_end")]
    t_end: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "band_min")]
    band_min: Option<String>,
    #[arg(long = "band_max")]
    band_max: Option<String>,
    #[arg(long = "out_dir")]
    out_dir: Option<String>,
    #[arg(long = "checkpoint_stride")]
    checkpoint_stride: Option<String>,
    #[arg(long = "diag_stride")]
    diag_stride: Option<String>,
}

impl ConfigArgs {
    fn raw(&self) -> Result<RawConfig, Error> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::from_path(path)?,
            None => RawConfig::default(),
        };
        let flags = [
            ("dim", &self.dim),
            ("n_points", &self.n_points),
            ("box_length", &self.box_length),
            ("s", &self.s),
            ("nu", &self.nu),
            ("alpha", &self.alpha),
            ("scheme", &self.scheme),
            ("dt", &self.dt),
            ("cfl", &self.cfl),
            ("t_end", &self.t_end),
            ("scenario", &self.scenario),
            ("amplitude", &self.amplitude),
            ("seed", &self.seed),
            ("band_min", &self.band_min),
            ("band_max", &self.band_max),
            ("out_dir", &self.out_dir),
            ("checkpoint_stride", &self.checkpoint_stride),
            ("diag_stride", &self.diag_stride),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        Ok(raw)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Continue from a checkpoint written by an earlier run of the same configuration.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Decreasing step sizes, comma separated. Defaults depend on the scheme.
    #[arg(long, value_delimiter = ',')]
    dts: Vec<f64>,
    /// Decay rate of the target solution.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Weight of the secondary mode added to the Taylor–Green profile.
    #[arg(long, default_value_t = 0.5)]
    secondary: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long = "s_values", value_delimiter = ',')]
    s_values: Vec<f64>,
    #[arg(long = "alpha_values", value_delimiter = ',')]
    alpha_values: Vec<f64>,
}

/// Maps a library error onto the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::InvalidGrid(_)
        | Error::InvalidParameter(_)
        | Error::Checkpoint(_) => EXIT_CONFIG,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        _ => EXIT_FAILED,
    }
}

/// Parses `argv` (program name first) and runs the chosen subcommand.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify => Ok(verify_all()),
        Command::Convergence(args) => convergence(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(args: RunArgs) -> Result<i32, Error> {
    let cfg = RunConfig::from_raw(&args.config.raw()?)?;
    let out = super::execute(&cfg, args.resume.as_deref())?;
    println!(
        "dt = {:?}; {} diagnostics rows written to {}",
        out.dt,
        out.records.len(),
        out.diagnostics_path.display()
    );
    if let Some(b) = out.blow_up {
        eprintln!(
            "blow-up at t = {}: {} = {:e}; last checkpoint: {}",
            b.t,
            b.quantity,
            b.value,
            b.checkpoint.display()
        );
        return Ok(EXIT_BLOWUP);
    }
    if let Some(last) = out.checkpoints.last() {
        println!("final checkpoint: {}", last.display());
    }
    Ok(EXIT_OK)
}

fn verify_all() -> i32 {
    let checks = verify::run_suite();
    let mut failed = 0;
    for c in &checks {
        println!("{c}");
        failed += usize::from(!c.passed);
    }
    println!("{} checks, {failed} failed", checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn convergence(args: ConvergenceArgs) -> Result<i32, Error> {
    let mut raw = args.config.raw()?;
    let scheme: Scheme = raw.get("scheme").unwrap_or("if_rk4").parse()?;
    let dts = if args.dts.is_empty() {
        match scheme {
            Scheme::IfRk4 => vec![0.1, 0.05, 0.025],
            Scheme::IfEuler => vec![0.02, 0.01, 0.005],
        }
    } else {
        args.dts.clone()
    };
    // The study picks its own steps; fill the run-level keys it does not use.
    if raw.get("dt").is_none() && raw.get("cfl").is_none() {
        raw.set("dt", &format!("{:?}", dts[0]))?;
    }
    if raw.get("t_end").is_none() {
        raw.set("t_end", "1.0")?;
    }
    let cfg = RunConfig::from_raw(&raw)?;
    let grid = Grid::new(cfg.grid);
    let solution = ManufacturedSolution::new(
        &grid,
        &cfg.params,
        manufactured_profile(&grid, args.secondary),
        args.lambda,
    );
    let report = manufactured_run(&grid, &cfg.params, cfg.scheme, &solution, cfg.t_end, &dts)?;
    for (dt, err) in report.dts.iter().zip(&report.errors) {
        println!("dt = {dt:e}  error = {err:e}");
    }
    let nominal = f64::from(cfg.scheme.order());
    let ok = (report.order - nominal).abs() <= 0.25;
    println!(
        "{}: measured order {:.3} (nominal {nominal}) {}",
        cfg.scheme,
        report.order,
        if ok { "PASS" } else { "FAIL" }
    );
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

fn sweep(args: SweepArgs) -> Result<i32, Error> {
    let cfg = RunConfig::from_raw(&args.config.raw()?)?;
    let points = super::sweep(&cfg, &args.s_values, &args.alpha_values)?;
    let mut code = EXIT_OK;
    for p in &points {
        match &p.outcome {
            Ok(out) => match &out.blow_up {
                None => println!(
                    "s = {} alpha = {}: {}",
                    p.s,
                    p.alpha,
                    out.diagnostics_path.display()
                ),
                Some(b) => {
                    println!(
                        "s = {} alpha = {}: blow-up at t = {} (last checkpoint {})",
                        p.s,
                        p.alpha,
                        b.t,
                        b.checkpoint.display()
                    );
                    code = code.max(EXIT_BLOWUP);
                }
            },
            Err(e) => {
                println!("s = {} alpha = {}: error: {e}", p.s, p.alpha);
                code = code.max(exit_code(e));
            }
        }
    }
    println!("{} runs", points.len());
    Ok(code)
}

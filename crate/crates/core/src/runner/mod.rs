//! Driving runs from a configuration: initial data, time stepping,
//! diagnostics and checkpoint files, and parameter sweeps.

pub mod cli;
pub mod config;
pub mod manufactured;
pub mod scenarios;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::checkpoint;
use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsRecorder, EnergyLedger};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrate::{integrate, suggest_dt, IntegratorConfig};
use crate::rhs::{RhsOptions, SimState};

use config::{RunConfig, StepControl};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FINAL_CHECKPOINT: &str = "final.fchs";
pub const BLOWUP_CHECKPOINT: &str = "last_good.fchs";

/// Where and how a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpReport {
    pub t: f64,
    pub quantity: &'static str,
    pub value: f64,
    /// Checkpoint of the last finite state.
    pub checkpoint: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dt: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub diagnostics_path: PathBuf,
    /// Checkpoints in the order written; the last is the final state on success.
    pub checkpoints: Vec<PathBuf>,
    pub final_state: Option<SimState>,
    pub blow_up: Option<BlowUpReport>,
}

pub fn checkpoint_name(step: usize) -> String {
    format!("checkpoint_{step:06}.fchs")
}

/// Ledger sidecar written next to each checkpoint so a resumed run continues
/// the energy budget instead of restarting it.
fn ledger_path(ckpt: &Path) -> PathBuf {
    let mut p = ckpt.as_os_str().to_owned();
    p.push(".ledger");
    PathBuf::from(p)
}

fn write_ledger(path: &Path, e0: f64, ledger: &EnergyLedger) -> Result<()> {
    let &(t, e, d) = ledger.samples().last().expect("ledger has samples");
    let text = format!(
        "{e0:?} {:?}\n{t:?} {e:?} {d:?}\n",
        ledger.dissipation_integral()
    );
    fs::write(path, text)?;
    Ok(())
}

fn read_ledger(path: &Path) -> Result<(f64, EnergyLedger)> {
    let text = fs::read_to_string(path)?;
    let nums: Vec<f64> = text
        .split_whitespace()
        .map(|w| w.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::config(format!("bad ledger file {}: {e}", path.display())))?;
    if nums.len() != 5 {
        return Err(Error::config(format!(
            "bad ledger file {}: expected 5 numbers, found {}",
            path.display(),
            nums.len()
        )));
    }
    Ok((nums[0], EnergyLedger::from_parts(nums[1], (nums[2], nums[3], nums[4]))))
}

/// Loads a checkpoint for `cfg`, rejecting one written for another grid or
/// parameter set.
pub fn load_resume_state(cfg: &RunConfig, path: &Path) -> Result<(SimState, DiagnosticsRecorder)> {
    let (state, params, spec) = checkpoint::restore_from_path(path)?;
    if spec != cfg.grid {
        return Err(Error::config(format!(
            "checkpoint grid {spec} does not match configured grid {}",
            cfg.grid
        )));
    }
    if params != cfg.params {
        return Err(Error::config(format!(
            "checkpoint parameters {params:?} do not match configured {:?}",
            cfg.params
        )));
    }
    let side = ledger_path(path);
    let recorder = if side.exists() {
        let (e0, ledger) = read_ledger(&side)?;
        DiagnosticsRecorder::resume(cfg.params, ledger, e0)
    } else {
        DiagnosticsRecorder::new(cfg.params)
    };
    Ok((state, recorder))
}

/// Runs `cfg`, writing `diagnostics.csv`, periodic and final checkpoints
/// into `cfg.out_dir`. A blow-up is reported in the outcome, not as an
/// error; its last finite state is saved as `last_good.fchs`.
pub fn execute(cfg: &RunConfig, resume: Option<&Path>) -> Result<RunOutcome> {
    let grid = Grid::new(cfg.grid);
    let (state0, mut recorder) = match resume {
        Some(path) => load_resume_state(cfg, path)?,
        None => {
            let v0 = scenarios::make_initial_data(cfg.scenario, &grid, &cfg.scenario_params)
                .map_err(|e| Error::config(e.to_string()))?;
            (SimState::new(0.0, v0), DiagnosticsRecorder::new(cfg.params))
        }
    };
    let dt = match cfg.step {
        StepControl::Dt(dt) => dt,
        StepControl::Cfl(c) => suggest_dt(&state0, &cfg.params, &grid, c)?,
    };
    let span = cfg.t_end - state0.t();
    let dt = if span > 0.0 { dt.min(span) } else { dt };
    let icfg = IntegratorConfig::new(cfg.scheme, dt, cfg.t_end.max(state0.t()), 1)
        .map_err(|e| Error::config(e.to_string()))?;

    fs::create_dir_all(&cfg.out_dir)?;
    let mut checkpoints = Vec::new();
    let mut io_error: Option<Error> = None;
    let result = integrate(
        state0,
        &cfg.params,
        &grid,
        &icfg,
        RhsOptions::default(),
        |state, step| {
            if step % cfg.diag_stride == 0 {
                recorder.sample(&grid, state);
            }
            if cfg.checkpoint_stride > 0 && step > 0 && step % cfg.checkpoint_stride == 0 {
                let path = cfg.out_dir.join(checkpoint_name(step));
                let saved = checkpoint::store_to_path(state, &cfg.params, &grid, &path)
                    .map_err(Error::from)
                    .and_then(|_| {
                        write_ledger(
                            &ledger_path(&path),
                            recorder.initial_energy().unwrap_or(0.0),
                            recorder.ledger(),
                        )
                    });
                match saved {
                    Ok(()) => checkpoints.push(path),
                    Err(e) => {
                        io_error.get_or_insert(e);
                    }
                }
            }
        },
    );
    if let Some(e) = io_error {
        return Err(e);
    }

    let (final_state, blow_up) = match result {
        Ok(state) => {
            if recorder.records().last().map(|r| r.t) != Some(state.t()) {
                recorder.sample(&grid, &state);
            }
            let path = cfg.out_dir.join(FINAL_CHECKPOINT);
            checkpoint::store_to_path(&state, &cfg.params, &grid, &path)?;
            checkpoints.push(path);
            (Some(state), None)
        }
        Err(Error::BlowUp {
            t,
            quantity,
            value,
            last_good,
        }) => {
            let path = cfg.out_dir.join(BLOWUP_CHECKPOINT);
            if let Some(last) = &last_good {
                checkpoint::store_to_path(last, &cfg.params, &grid, &path)?;
                checkpoints.push(path.clone());
            }
            (
                None,
                Some(BlowUpReport {
                    t,
                    quantity,
                    value,
                    checkpoint: path,
                }),
            )
        }
        Err(e) => return Err(e),
    };

    let diagnostics_path = cfg.out_dir.join(DIAGNOSTICS_FILE);
    let records = recorder.into_records();
    diagnostics::emit_csv(&records, BufWriter::new(File::create(&diagnostics_path)?))?;
    Ok(RunOutcome {
        dt,
        records,
        diagnostics_path,
        checkpoints,
        final_state,
        blow_up,
    })
}

/// One parameter point of a sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub s: f64,
    pub alpha: f64,
    pub out_dir: PathBuf,
    pub outcome: Result<RunOutcome>,
}

/// Runs `base` at every `(s, α)` in `s_values × alpha_values`, in parallel,
/// each into its own subdirectory of `base.out_dir`. An empty list stands for
/// the base value; both empty means no runs. Every point is validated before
/// any run starts.
pub fn sweep(base: &RunConfig, s_values: &[f64], alpha_values: &[f64]) -> Result<Vec<SweepPoint>> {
    if s_values.is_empty() && alpha_values.is_empty() {
        return Ok(Vec::new());
    }
    let base_s = [base.params.s()];
    let base_a = [base.params.alpha()];
    let ss = if s_values.is_empty() { &base_s[..] } else { s_values };
    let aa = if alpha_values.is_empty() { &base_a[..] } else { alpha_values };
    let mut configs = Vec::new();
    for &s in ss {
        for &a in aa {
            let mut c = base.with_params(s, a)?;
            c.out_dir = base.out_dir.join(format!("s{s}_alpha{a}"));
            configs.push((s, a, c));
        }
    }
    Ok(configs
        .into_par_iter()
        .map(|(s, alpha, c)| SweepPoint {
            s,
            alpha,
            outcome: execute(&c, None),
            out_dir: c.out_dir,
        })
        .collect())
}

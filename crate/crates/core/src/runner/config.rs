//! `key = value` run configuration. `#` starts a comment; blank lines are
//! ignored; unknown or repeated keys are errors. Command-line flags are
//! applied on top of the file through [`RawConfig::set`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fractional::PhysParams;
use crate::grid::GridSpec;
use crate::integrate::Scheme;

use super::scenarios::{Scenario, ScenarioParams};

pub const KEYS: &[&str] = &[
    "dim",
    "n_points",
    "box_length",
    "s",
    "nu",
    "alpha",
    "scheme",
    "dt",
    "cfl",
    "t_end",
    "scenario",
    "amplitude",
    "seed",
    "band_min",
    "band_max",
    "out_dir",
    "checkpoint_stride",
    "diag_stride",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// Source line, `None` for values set from the command line.
    line: Option<usize>,
}

/// Unvalidated key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn err_at(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = RawConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let lineno = Some(i + 1);
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err_at(lineno, format!("expected `key = value`, found `{line}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(err_at(lineno, format!("expected `key = value`, found `{line}`")));
            }
            if !KEYS.contains(&key) {
                return Err(err_at(lineno, format!("unknown key `{key}`")));
            }
            if let Some(prev) = out.entries.get(key) {
                return Err(err_at(
                    lineno,
                    format!(
                        "key `{key}` repeated (first set on line {})",
                        prev.line.unwrap_or(0)
                    ),
                ));
            }
            out.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: lineno,
                },
            );
        }
        Ok(out)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Overrides (or adds) a key, as a command-line flag does.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::config(format!("unknown key `{key}`")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line: None,
            },
        );
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|e| e.line)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| err_at(e.line, format!("bad value `{}` for `{key}`: {err}", e.value))),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?
            .ok_or_else(|| Error::config(format!("missing required key `{key}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    Dt(f64),
    /// Step chosen once from the initial state by the CFL rule.
    Cfl(f64),
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: PhysParams,
    pub scheme: Scheme,
    pub step: StepControl,
    pub t_end: f64,
    pub scenario: Scenario,
    pub scenario_params: ScenarioParams,
    pub out_dir: PathBuf,
    /// Steps between periodic checkpoints; 0 keeps only the final one.
    pub checkpoint_stride: usize,
    /// Steps between diagnostics rows.
    pub diag_stride: usize,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let at = |key: &str| raw.line(key);

        let dim: usize = raw.parsed("dim")?.unwrap_or(2);
        if dim != 2 && dim != 3 {
            return Err(err_at(at("dim"), format!("dim must be 2 or 3, got {dim}")));
        }
        let n: usize = raw.parsed("n_points")?.unwrap_or(64);
        if n < 8 || n % 2 != 0 {
            return Err(err_at(
                at("n_points"),
                format!("n_points must be even and >= 8, got {n}"),
            ));
        }
        let l: f64 = raw.parsed("box_length")?.unwrap_or(2.0 * PI);
        if !(l.is_finite() && l > 0.0) {
            return Err(err_at(
                at("box_length"),
                format!("box_length must be positive, got {l}"),
            ));
        }
        let grid = GridSpec::new(dim, n, l)?;

        let s: f64 = raw.required("s")?;
        let lower = dim as f64 / 4.0;
        if !(s >= lower && s < 1.0) {
            return Err(err_at(
                at("s"),
                format!("s must satisfy dim/4 <= s < 1 (here {lower} <= s < 1), got {s}"),
            ));
        }
        let nu: f64 = raw.required("nu")?;
        if !(nu.is_finite() && nu > 0.0) {
            return Err(err_at(at("nu"), format!("nu must be > 0, got {nu}")));
        }
        let alpha: f64 = raw.required("alpha")?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(err_at(at("alpha"), format!("alpha must be >= 0, got {alpha}")));
        }
        let params = PhysParams::new(s, nu, alpha, dim)?;

        let scheme = match raw.get("scheme") {
            None => Scheme::IfRk4,
            Some(v) => v.parse().map_err(|_| {
                err_at(
                    at("scheme"),
                    format!("unknown scheme `{v}` (expected if_rk4 or if_euler)"),
                )
            })?,
        };

        let step = match (raw.parsed::<f64>("dt")?, raw.parsed::<f64>("cfl")?) {
            (Some(dt), None) => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(err_at(at("dt"), format!("dt must be > 0, got {dt}")));
                }
                StepControl::Dt(dt)
            }
            (None, Some(c)) => {
                if !(c > 0.0 && c <= 1.0) {
                    return Err(err_at(at("cfl"), format!("cfl must lie in (0, 1], got {c}")));
                }
                StepControl::Cfl(c)
            }
            (Some(_), Some(_)) => {
                return Err(err_at(
                    at("cfl").or(at("dt")),
                    "exactly one of dt and cfl may be given, found both",
                ))
            }
            (None, None) => return Err(Error::config("exactly one of dt and cfl is required")),
        };

        let t_end: f64 = raw.required("t_end")?;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(err_at(at("t_end"), format!("t_end must be >= 0, got {t_end}")));
        }
        if let StepControl::Dt(dt) = step {
            if t_end > 0.0 && dt > t_end {
                return Err(err_at(at("dt"), format!("dt = {dt} exceeds t_end = {t_end}")));
            }
        }

        let scenario = match raw.get("scenario") {
            None => Scenario::TaylorGreen,
            Some(v) => v.parse().map_err(|e: Error| match e {
                Error::Config { message, .. } => err_at(at("scenario"), message),
                other => other,
            })?,
        };
        let defaults = ScenarioParams::default();
        let amplitude: f64 = raw.parsed("amplitude")?.unwrap_or(defaults.amplitude);
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(err_at(
                at("amplitude"),
                format!("amplitude must be finite and >= 0, got {amplitude}"),
            ));
        }
        let seed: u64 = raw.parsed("seed")?.unwrap_or(defaults.seed);
        let band_min: f64 = raw.parsed("band_min")?.unwrap_or(defaults.band_min);
        let band_max: f64 = raw.parsed("band_max")?.unwrap_or(defaults.band_max);
        if !(band_min >= 0.0 && band_max >= band_min && band_max.is_finite()) {
            return Err(err_at(
                at("band_max").or(at("band_min")),
                format!("band limits must satisfy 0 <= band_min <= band_max, got [{band_min}, {band_max}]"),
            ));
        }

        let out_dir = PathBuf::from(raw.get("out_dir").unwrap_or("out"));
        let checkpoint_stride: usize = raw.parsed("checkpoint_stride")?.unwrap_or(0);
        let diag_stride: usize = raw.parsed("diag_stride")?.unwrap_or(1);
        if diag_stride == 0 {
            return Err(err_at(at("diag_stride"), "diag_stride must be >= 1"));
        }
        if checkpoint_stride % diag_stride != 0 {
            return Err(err_at(
                at("checkpoint_stride"),
                format!(
                    "checkpoint_stride ({checkpoint_stride}) must be a multiple of diag_stride ({diag_stride})"
                ),
            ));
        }

        Ok(Self {
            grid,
            params,
            scheme,
            step,
            t_end,
            scenario,
            scenario_params: ScenarioParams {
                amplitude,
                seed,
                band_min,
                band_max,
            },
            out_dir,
            checkpoint_stride,
            diag_stride,
        })
    }

    /// Same run at another `(s, α)`, validated against the grid dimension.
    pub fn with_params(&self, s: f64, alpha: f64) -> Result<Self> {
        let dim = self.grid.dim();
        let params = PhysParams::new(s, self.params.nu(), alpha, dim)
            .map_err(|e| Error::config(e.to_string()))?;
        Ok(Self {
            params,
            ..self.clone()
        })
    }
}

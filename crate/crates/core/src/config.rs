//! Run configuration: a small sectioned `key = value` grammar with `#`
//! comments. Parsing is strict (unknown or duplicate keys are rejected with
//! their line number) and `parse(serialize(c)) == c` exactly.

use std::collections::HashSet;

use crate::error::{CoreError, Result};
use crate::grid::GridConfig;
use crate::homogeneous::{Scheme, StepperConfig};
use crate::initial_data::{PerturbationKind, PerturbationSpec};
use crate::params::PhysParams;
use crate::splitting::{DiagnosticsConfig, SplittingSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physics: PhysParams,
    pub grid: GridConfig,
    pub schedule: SplittingSchedule,
    pub stepper: StepperConfig,
    pub barrier_delta: f64,
    pub barrier_c1: f64,
    pub barrier_q: f64,
    pub perturbation: PerturbationSpec,
    pub diagnostics: DiagnosticsConfig,
    pub output_dir: String,
    /// Set during parsing when `gamma + 2s` leaves `[0, 2]`; recorded, not
    /// fatal.
    pub regime_warning: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physics: PhysParams::hard_potential_defaults(),
            grid: GridConfig {
                velocity_radius: 5.0,
                velocity_n: 6,
                space_n: 1,
                spatial_dims: 0,
            },
            schedule: SplittingSchedule::new(1.0, 20).expect("static default"),
            stepper: StepperConfig {
                dt: 5e-4,
                ..StepperConfig::default()
            },
            barrier_delta: 1e-3,
            barrier_c1: 2.0,
            barrier_q: 8.0,
            perturbation: PerturbationSpec::default(),
            diagnostics: DiagnosticsConfig::default(),
            output_dir: "out".into(),
            regime_warning: false,
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> CoreError {
    CoreError::Config {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(line, format!("cannot parse value `{value}` for key `{key}`")))
}

fn parse_bool(value: &str, line: usize, key: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(err(
            line,
            format!("expected true/false for key `{key}`, got `{value}`"),
        )),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut section = String::new();
    let mut seen: HashSet<String> = HashSet::new();
    // rebuilt at the end so the validated invariants hold
    let mut horizon = cfg.schedule.horizon;
    let mut intervals = cfg.schedule.n_intervals;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header"))?
                .trim();
            section = name.to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        let full = format!("{section}.{key}");
        if !seen.insert(full.clone()) {
            return Err(err(line_no, format!("duplicate key `{full}`")));
        }
        match full.as_str() {
            "physics.gamma" => cfg.physics.gamma = parse_num(value, line_no, key)?,
            "physics.s" => cfg.physics.s = parse_num(value, line_no, key)?,
            "physics.kernel_const" => cfg.physics.kernel_const = parse_num(value, line_no, key)?,
            "grid.velocity_radius" => cfg.grid.velocity_radius = parse_num(value, line_no, key)?,
            "grid.velocity_n" => cfg.grid.velocity_n = parse_num(value, line_no, key)?,
            "grid.space_n" => cfg.grid.space_n = parse_num(value, line_no, key)?,
            "grid.spatial_dims" => cfg.grid.spatial_dims = parse_num(value, line_no, key)?,
            "schedule.horizon" => horizon = parse_num(value, line_no, key)?,
            "schedule.intervals" => intervals = parse_num(value, line_no, key)?,
            "stepper.scheme" => {
                cfg.stepper.scheme = match value {
                    "euler" => Scheme::ExplicitEuler,
                    "rk4" => Scheme::Rk4,
                    _ => return Err(err(line_no, format!("unknown scheme `{value}`"))),
                }
            }
            "stepper.dt" => cfg.stepper.dt = parse_num(value, line_no, key)?,
            "stepper.max_dt_factor" => cfg.stepper.max_dt_factor = parse_num(value, line_no, key)?,
            "stepper.conserve" => cfg.stepper.conserve = parse_bool(value, line_no, key)?,
            "stepper.guard_q" => cfg.stepper.guard_q = parse_num(value, line_no, key)?,
            "barrier.delta" => cfg.barrier_delta = parse_num(value, line_no, key)?,
            "barrier.c1" => cfg.barrier_c1 = parse_num(value, line_no, key)?,
            "barrier.q" => cfg.barrier_q = parse_num(value, line_no, key)?,
            "perturbation.kind" => {
                cfg.perturbation.kind = match value {
                    "separable" => PerturbationKind::SeparableSmooth,
                    "fourier" => PerturbationKind::RandomFourier,
                    "indicator" => PerturbationKind::RoughIndicator,
                    _ => return Err(err(line_no, format!("unknown perturbation kind `{value}`"))),
                }
            }
            "perturbation.amplitude" => {
                cfg.perturbation.amplitude = parse_num(value, line_no, key)?
            }
            "perturbation.q" => cfg.perturbation.q = parse_num(value, line_no, key)?,
            "perturbation.spatial_modes" => {
                cfg.perturbation.spatial_modes = parse_num(value, line_no, key)?
            }
            "perturbation.seed" => cfg.perturbation.seed = parse_num(value, line_no, key)?,
            "diagnostics.norm_every" => {
                cfg.diagnostics.norm_every = parse_num(value, line_no, key)?
            }
            "diagnostics.suite_every" => {
                cfg.diagnostics.suite_every = parse_num(value, line_no, key)?
            }
            "diagnostics.suite_samples" => {
                cfg.diagnostics.suite_samples = parse_num(value, line_no, key)?
            }
            "diagnostics.track_qs" => {
                let mut qs = Vec::new();
                for part in value.split(',') {
                    qs.push(parse_num(part.trim(), line_no, key)?);
                }
                cfg.diagnostics.track_qs = qs;
            }
            "diagnostics.mollifier_scale" => {
                cfg.diagnostics.mollifier_scale = if value == "step" {
                    None
                } else {
                    Some(parse_num(value, line_no, key)?)
                }
            }
            "diagnostics.snapshot_every" => {
                cfg.diagnostics.snapshot_every = parse_num(value, line_no, key)?
            }
            "output.dir" => cfg.output_dir = value.to_string(),
            _ => return Err(err(line_no, format!("unknown key `{full}`"))),
        }
    }

    cfg.schedule = SplittingSchedule::new(horizon, intervals)
        .map_err(|e| err(0, format!("invalid schedule: {e}")))?;
    cfg.regime_warning = !cfg.physics.regime_ok();
    Ok(cfg)
}

pub fn serialize_config(cfg: &RunConfig) -> String {
    let scheme = match cfg.stepper.scheme {
        Scheme::ExplicitEuler => "euler",
        Scheme::Rk4 => "rk4",
    };
    let kind = match cfg.perturbation.kind {
        PerturbationKind::SeparableSmooth => "separable",
        PerturbationKind::RandomFourier => "fourier",
        PerturbationKind::RoughIndicator => "indicator",
    };
    let track_qs = cfg
        .diagnostics
        .track_qs
        .iter()
        .map(|q| q.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    let moll = match cfg.diagnostics.mollifier_scale {
        None => "step".to_string(),
        Some(v) => v.to_string(),
    };
    format!(
        "[physics]\n\
         gamma = {}\n\
         s = {}\n\
         kernel_const = {}\n\
         \n\
         [grid]\n\
         velocity_radius = {}\n\
         velocity_n = {}\n\
         space_n = {}\n\
         spatial_dims = {}\n\
         \n\
         [schedule]\n\
         horizon = {}\n\
         intervals = {}\n\
         \n\
         [stepper]\n\
         scheme = {scheme}\n\
         dt = {}\n\
         max_dt_factor = {}\n\
         conserve = {}\n\
         guard_q = {}\n\
         \n\
         [barrier]\n\
         delta = {}\n\
         c1 = {}\n\
         q = {}\n\
         \n\
         [perturbation]\n\
         kind = {kind}\n\
         amplitude = {}\n\
         q = {}\n\
         spatial_modes = {}\n\
         seed = {}\n\
         \n\
         [diagnostics]\n\
         norm_every = {}\n\
         suite_every = {}\n\
         suite_samples = {}\n\
         track_qs = {track_qs}\n\
         mollifier_scale = {moll}\n\
         snapshot_every = {}\n\
         \n\
         [output]\n\
         dir = {}\n",
        cfg.physics.gamma,
        cfg.physics.s,
        cfg.physics.kernel_const,
        cfg.grid.velocity_radius,
        cfg.grid.velocity_n,
        cfg.grid.space_n,
        cfg.grid.spatial_dims,
        cfg.schedule.horizon,
        cfg.schedule.n_intervals,
        cfg.stepper.dt,
        cfg.stepper.max_dt_factor,
        cfg.stepper.conserve,
        cfg.stepper.guard_q,
        cfg.barrier_delta,
        cfg.barrier_c1,
        cfg.barrier_q,
        cfg.perturbation.amplitude,
        cfg.perturbation.q,
        cfg.perturbation.spatial_modes,
        cfg.perturbation.seed,
        cfg.diagnostics.norm_every,
        cfg.diagnostics.suite_every,
        cfg.diagnostics.suite_samples,
        cfg.diagnostics.snapshot_every,
        cfg.output_dir,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults_with_regime_ok() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert!(!cfg.regime_warning); // gamma + 2s = 2 is inside [0, 2]
    }

    #[test]
    fn roundtrip_is_identity() {
        let text = "
[physics]
gamma = 0.5      # hard potential, milder
s = 0.625

[grid]
velocity_radius = 4.5
velocity_n = 8
space_n = 16
spatial_dims = 1

[schedule]
horizon = 0.25
intervals = 10

[stepper]
scheme = euler
dt = 0.00025
conserve = false

[barrier]
delta = 0.01

[perturbation]
kind = fourier
seed = 42

[diagnostics]
track_qs = 8, 10.5
mollifier_scale = 0.125

[output]
dir = results/a
";
        let cfg = parse_config(text).unwrap();
        let cfg2 = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn default_serialization_roundtrips_too() {
        let cfg = RunConfig::default();
        assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn regime_violation_is_a_warning_not_an_error() {
        let cfg = parse_config("[physics]\ngamma = 2\ns = 0.9\n").unwrap();
        assert!(cfg.regime_warning); // gamma + 2s = 3.8
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let errv = parse_config("[physics]\ngamma = 1\nbogus = 3\n").unwrap_err();
        match errv {
            CoreError::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("physics.bogus"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_rejected_with_key_and_line() {
        let errv = parse_config("[barrier]\ndelta = 1e-3\ndelta = 1e-2\n").unwrap_err();
        match errv {
            CoreError::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("barrier.delta"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn type_mismatch_rejected_with_line() {
        let errv = parse_config("[stepper]\ndt = fast\n").unwrap_err();
        assert!(matches!(errv, CoreError::Config { line: 2, .. }));
    }

    #[test]
    fn odd_interval_count_rejected() {
        assert!(parse_config("[schedule]\nintervals = 7\n").is_err());
    }
}

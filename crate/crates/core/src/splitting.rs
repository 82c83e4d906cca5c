//! The splitting construction: partition `[0, T]` into `N` equal intervals,
//! alternate collision and transport substeps starting with collision, and
//! mollify in space at each odd partition point. The trajectory is kept
//! left-continuous: the snapshot labeled with an odd `t_i` is the
//! pre-mollification limit.

use crate::collision::CollisionOperator;
use crate::diagnostics::{
    barrier_margin, hydro_fields, lemma_suite, weighted_sup, BarrierSpec, GWeight, HydroMoments,
};
use crate::error::{CoreError, Result};
use crate::field::DistributionField;
use crate::grid::SpaceGrid;
use crate::homogeneous::{collision_step, StepperConfig};
use crate::initial_data::MomentProjector;
use crate::transport::{mollify, MollifierSpec, TransportOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubstepKind {
    Collision,
    Transport,
}

/// Equal partition of `[0, T]` into an even number of intervals with
/// `t_i = i h`; odd intervals are collision, even intervals transport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingSchedule {
    pub horizon: f64,
    pub n_intervals: usize,
    pub h: f64,
}

impl SplittingSchedule {
    pub fn new(horizon: f64, n_intervals: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(CoreError::InvalidParameter(
                "schedule horizon must be positive".into(),
            ));
        }
        if n_intervals < 2 || n_intervals % 2 != 0 {
            return Err(CoreError::InvalidParameter(format!(
                "schedule needs an even number of intervals >= 2, got {n_intervals}"
            )));
        }
        Ok(Self {
            horizon,
            n_intervals,
            h: horizon / n_intervals as f64,
        })
    }

    /// Kind of the interval `[t_{i-1}, t_i)` for `i` in `1..=n_intervals`.
    pub fn kind(&self, i: usize) -> SubstepKind {
        if i % 2 == 1 {
            SubstepKind::Collision
        } else {
            SubstepKind::Transport
        }
    }

    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    BarrierViolated,
    BlowUpGuard,
}

/// Position of a trajectory inside its schedule.
#[derive(Debug, Clone)]
pub struct RunState {
    pub field: DistributionField,
    pub schedule: SplittingSchedule,
    /// Substeps completed; the time stamp is `position * schedule.h`.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Record a norm/hydro row every this many substeps (0 disables rows
    /// beyond the initial one).
    pub norm_every: usize,
    /// Run the full inequality suite every this many substeps (0 disables;
    /// it is far more expensive than the norm rows).
    pub suite_every: usize,
    pub suite_samples: usize,
    /// Decay exponents tracked by the weighted sup.
    pub track_qs: Vec<f64>,
    /// Mollification scale; `None` locks it to the splitting step `h`.
    pub mollifier_scale: Option<f64>,
    /// Keep a snapshot every this many substeps in addition to the
    /// left-continuous ones at odd partition points (0 keeps only those).
    pub snapshot_every: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            norm_every: 1,
            suite_every: 0,
            suite_samples: 25,
            track_qs: vec![8.0],
            mollifier_scale: None,
            snapshot_every: 0,
        }
    }
}

/// One diagnostics sample along the trajectory. The hydrodynamic moments are
/// averaged over the unit torus.
#[derive(Debug, Clone)]
pub struct DiagRow {
    pub time: f64,
    pub kind: Option<SubstepKind>,
    pub hydro: HydroMoments,
    pub sups: Vec<(f64, f64)>,
    pub barrier_margin: f64,
    pub fitted: Vec<(&'static str, f64)>,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagRow>,
    /// Per odd partition point: `(t_i, sup |mollified - f|)`.
    pub jumps: Vec<(f64, f64)>,
    pub stop: StopReason,
    pub stop_detail: Option<String>,
    pub stop_time: f64,
}

/// Mollification jumps of a finished (or aborted) run, one entry per odd
/// partition point reached.
pub fn jump_discontinuity_log(report: &DiagnosticsReport) -> &[(f64, f64)] {
    &report.jumps
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Left-continuous snapshots at the odd partition points (plus any extra
    /// cadence-selected ones), in time order.
    pub snapshots: Vec<DistributionField>,
    pub state: RunState,
    pub report: DiagnosticsReport,
}

fn spatial_mean(fields: &[HydroMoments]) -> HydroMoments {
    let n = fields.len() as f64;
    let mut out = HydroMoments::default();
    for h in fields {
        out.mass += h.mass;
        for a in 0..3 {
            out.momentum[a] += h.momentum[a];
        }
        out.energy += h.energy;
        out.entropy += h.entropy;
        out.negativity_mass += h.negativity_mass;
    }
    out.mass /= n;
    for a in 0..3 {
        out.momentum[a] /= n;
    }
    out.energy /= n;
    out.entropy /= n;
    out.negativity_mass /= n;
    out
}

/// Execute the alternation from `t = 0`.
pub fn run(
    op: &CollisionOperator,
    space: &SpaceGrid,
    f0: &DistributionField,
    schedule: &SplittingSchedule,
    stepper: &StepperConfig,
    barrier: &BarrierSpec,
    diag: &DiagnosticsConfig,
) -> Result<RunOutput> {
    let state = RunState {
        field: f0.clone(),
        schedule: *schedule,
        position: 0,
    };
    run_from(op, space, state, stepper, barrier, diag)
}

/// Continue a trajectory from a saved state under a longer schedule with the
/// same step size. The alternation must resume on a collision interval, so
/// the saved position has to be even.
pub fn resume(
    op: &CollisionOperator,
    space: &SpaceGrid,
    state: RunState,
    extended: &SplittingSchedule,
    stepper: &StepperConfig,
    barrier: &BarrierSpec,
    diag: &DiagnosticsConfig,
) -> Result<RunOutput> {
    if state.position % 2 != 0 {
        return Err(CoreError::ParityMismatch(format!(
            "cannot resume mid-pair: saved position {} is odd",
            state.position
        )));
    }
    let rel = (extended.h - state.schedule.h).abs();
    if rel > 1e-12 * state.schedule.h {
        return Err(CoreError::ParityMismatch(format!(
            "extension step {} does not match saved step {}",
            extended.h, state.schedule.h
        )));
    }
    if extended.n_intervals < state.position {
        return Err(CoreError::InvalidParameter(
            "extension ends before the saved position".into(),
        ));
    }
    let state = RunState {
        schedule: *extended,
        ..state
    };
    run_from(op, space, state, stepper, barrier, diag)
}

fn run_from(
    op: &CollisionOperator,
    space: &SpaceGrid,
    mut state: RunState,
    stepper: &StepperConfig,
    barrier: &BarrierSpec,
    diag: &DiagnosticsConfig,
) -> Result<RunOutput> {
    barrier.validate()?;
    stepper.validate()?;
    state.field.matches(space, &op.grid)?;
    let schedule = state.schedule;
    let g = GWeight::new(barrier.q)?;
    let projector = MomentProjector::new(&op.grid)?;
    let transport = TransportOperator::new(space, &op.grid);
    let moll_spec = MollifierSpec::new(diag.mollifier_scale.unwrap_or(schedule.h))?;

    let mut snapshots = Vec::new();
    let mut rows = Vec::new();
    let mut jumps = Vec::new();
    let mut stop = StopReason::Completed;
    let mut stop_detail = None;

    let make_row = |field: &DistributionField,
                    t: f64,
                    kind: Option<SubstepKind>,
                    with_suite: bool|
     -> Result<DiagRow> {
        let fitted = if with_suite {
            lemma_suite(op, diag.suite_samples)?
                .into_iter()
                .map(|r| (r.name, r.fitted_constant))
                .collect()
        } else {
            Vec::new()
        };
        Ok(DiagRow {
            time: t,
            kind,
            hydro: spatial_mean(&hydro_fields(field, &op.grid)),
            sups: diag
                .track_qs
                .iter()
                .map(|&q| (q, weighted_sup(field, &op.grid, q, None)))
                .collect(),
            barrier_margin: barrier_margin(field, &op.grid, t, barrier, &g).0,
            fitted,
        })
    };

    state.field.time_stamp = schedule.t(state.position);
    let first = make_row(&state.field, state.field.time_stamp, None, false)?;
    let start_margin = first.barrier_margin;
    rows.push(first);
    if start_margin < 0.0 {
        stop = StopReason::BarrierViolated;
        stop_detail = Some(format!(
            "barrier margin {start_margin:.3e} already negative at the start"
        ));
    }

    'steps: while stop == StopReason::Completed && state.position < schedule.n_intervals {
        let i = state.position + 1;
        let kind = schedule.kind(i);
        let t_end = schedule.t(i);
        match kind {
            SubstepKind::Collision => {
                let projector_ref = stepper.conserve.then_some(&projector);
                for xi in 0..state.field.n_space {
                    let slice = state.field.slice(xi);
                    match collision_step(op, projector_ref, slice, stepper, schedule.h) {
                        Ok((next, _)) => state.field.slice_mut(xi).copy_from_slice(&next),
                        Err(e @ (CoreError::BlowUp(_) | CoreError::NonFinite(_))) => {
                            stop = StopReason::BlowUpGuard;
                            stop_detail = Some(e.to_string());
                            break 'steps;
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            SubstepKind::Transport => {
                state.field = transport.transport_step(&state.field, schedule.h)?;
            }
        }
        state.field.time_stamp = t_end;
        state.position = i;

        // the left-continuous snapshot precedes the mollification
        let at_odd = i % 2 == 1;
        if at_odd || (diag.snapshot_every > 0 && i % diag.snapshot_every == 0) {
            snapshots.push(state.field.clone());
        }
        if at_odd {
            let mollified = mollify(&state.field, space, &moll_spec);
            let jump = mollified
                .values
                .iter()
                .zip(&state.field.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            jumps.push((t_end, jump));
            state.field = mollified;
            state.field.time_stamp = t_end;
        }

        let record = diag.norm_every > 0 && i % diag.norm_every == 0;
        let with_suite = diag.suite_every > 0 && i % diag.suite_every == 0;
        let mut margin = None;
        if record || with_suite || i == schedule.n_intervals {
            let row = make_row(&state.field, t_end, Some(kind), with_suite)?;
            margin = Some(row.barrier_margin);
            rows.push(row);
        }
        let margin = margin
            .unwrap_or_else(|| barrier_margin(&state.field, &op.grid, t_end, barrier, &g).0);
        if margin < 0.0 {
            stop = StopReason::BarrierViolated;
            stop_detail = Some(format!("barrier margin {margin:.3e} at t = {t_end:.6}"));
            break;
        }
    }

    let report = DiagnosticsReport {
        rows,
        jumps,
        stop,
        stop_detail,
        stop_time: state.field.time_stamp,
    };
    Ok(RunOutput {
        snapshots,
        state,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::QuadratureSpec;
    use crate::grid::VelocityGrid;
    use crate::params::PhysParams;

    fn setup(spatial_dims: usize, n_x: usize) -> (CollisionOperator, SpaceGrid) {
        let grid = VelocityGrid::new(5.0, 6).unwrap();
        let params = PhysParams::hard_potential_defaults();
        let op = CollisionOperator::new(&grid, &params, &QuadratureSpec::default()).unwrap();
        let space = SpaceGrid::new(n_x, spatial_dims).unwrap();
        (op, space)
    }

    fn barrier() -> BarrierSpec {
        BarrierSpec {
            delta: 1e-2,
            c1: 1.0,
            q: 8.0,
        }
    }

    #[test]
    fn schedule_rejects_odd_or_small_counts() {
        assert!(SplittingSchedule::new(1.0, 3).is_err());
        assert!(SplittingSchedule::new(1.0, 0).is_err());
        assert!(SplittingSchedule::new(-1.0, 4).is_err());
        let s = SplittingSchedule::new(1.0, 4).unwrap();
        assert_eq!(s.kind(1), SubstepKind::Collision);
        assert_eq!(s.kind(2), SubstepKind::Transport);
        assert_eq!(s.kind(3), SubstepKind::Collision);
        assert!((s.t(4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_data_stays_zero_through_the_alternation() {
        let (op, space) = setup(1, 4);
        let f0 = DistributionField::zeros(&space, &op.grid);
        let schedule = SplittingSchedule::new(0.2, 4).unwrap();
        let stepper = StepperConfig {
            dt: 5e-4,
            ..StepperConfig::default()
        };
        let out = run(
            &op,
            &space,
            &f0,
            &schedule,
            &stepper,
            &barrier(),
            &DiagnosticsConfig::default(),
        )
        .unwrap();
        assert_eq!(out.report.stop, StopReason::Completed);
        assert!(out.state.field.values.iter().all(|&v| v == 0.0));
        assert!(out.report.jumps.iter().all(|&(_, j)| j == 0.0));
        // one jump per odd partition point
        assert_eq!(out.report.jumps.len(), schedule.n_intervals / 2);
        assert_eq!(out.snapshots.len(), schedule.n_intervals / 2);
    }

    #[test]
    fn minimal_schedule_is_one_collision_then_one_transport() {
        let (op, space) = setup(1, 4);
        let f0 = DistributionField::zeros(&space, &op.grid);
        let schedule = SplittingSchedule::new(0.1, 2).unwrap();
        let stepper = StepperConfig {
            dt: 5e-4,
            ..StepperConfig::default()
        };
        let out = run(
            &op,
            &space,
            &f0,
            &schedule,
            &stepper,
            &barrier(),
            &DiagnosticsConfig::default(),
        )
        .unwrap();
        let kinds: Vec<_> = out.report.rows.iter().filter_map(|r| r.kind).collect();
        assert_eq!(kinds, vec![SubstepKind::Collision, SubstepKind::Transport]);
        assert_eq!(out.report.jumps.len(), 1);
    }

    #[test]
    fn resume_with_zero_extension_is_the_identity() {
        let (op, space) = setup(0, 1);
        let f0 = DistributionField::zeros(&space, &op.grid);
        let schedule = SplittingSchedule::new(0.1, 2).unwrap();
        let stepper = StepperConfig {
            dt: 5e-4,
            ..StepperConfig::default()
        };
        let out = run(
            &op,
            &space,
            &f0,
            &schedule,
            &stepper,
            &barrier(),
            &DiagnosticsConfig::default(),
        )
        .unwrap();
        let resumed = resume(
            &op,
            &space,
            out.state.clone(),
            &schedule,
            &stepper,
            &barrier(),
            &DiagnosticsConfig::default(),
        )
        .unwrap();
        assert_eq!(resumed.state.position, out.state.position);
        assert_eq!(resumed.state.field.values, out.state.field.values);
    }

    #[test]
    fn resume_rejects_odd_parity() {
        let (op, space) = setup(0, 1);
        let f0 = DistributionField::zeros(&space, &op.grid);
        let schedule = SplittingSchedule::new(0.2, 4).unwrap();
        let state = RunState {
            field: f0,
            schedule,
            position: 1,
        };
        let stepper = StepperConfig::default();
        let err = resume(
            &op,
            &space,
            state,
            &schedule,
            &stepper,
            &barrier(),
            &DiagnosticsConfig::default(),
        );
        assert!(matches!(err, Err(CoreError::ParityMismatch(_))));
    }

    #[test]
    fn barrier_violation_stops_early_with_a_report() {
        let (op, space) = setup(0, 1);
        let mut f0 = DistributionField::zeros(&space, &op.grid);
        // start far above a tiny barrier so the very first check trips
        for v in f0.values.iter_mut() {
            *v = 1e-3;
        }
        let schedule = SplittingSchedule::new(0.01, 2).unwrap();
        let stepper = StepperConfig {
            dt: 5e-4,
            ..StepperConfig::default()
        };
        let tiny = BarrierSpec {
            delta: 1e-9,
            c1: 1.0,
            q: 8.0,
        };
        let out = run(
            &op,
            &space,
            &f0,
            &schedule,
            &stepper,
            &tiny,
            &DiagnosticsConfig::default(),
        )
        .unwrap();
        assert_eq!(out.report.stop, StopReason::BarrierViolated);
        assert!(out.state.position < schedule.n_intervals);
        assert!(out.report.stop_detail.is_some());
    }
}

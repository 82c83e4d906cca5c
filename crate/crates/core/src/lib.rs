//! Deterministic solver for the non-cutoff Boltzmann equation near a
//! Maxwellian equilibrium, together with a diagnostics harness that checks
//! the operator identities, kernel bounds, barrier propagation, and trend to
//! equilibrium along the computed trajectories.
//!
//! The solver alternates space-homogeneous collision substeps with exact
//! spectral transport substeps on the torus, applying a spatial mollification
//! at the odd partition points.

pub mod collision;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod homogeneous;
pub mod initial_data;
pub mod io;
pub mod params;
pub mod splitting;
pub mod transport;
pub mod util;

pub use collision::{CollisionOperator, Density, QuadratureSpec};
pub use config::{parse_config, serialize_config, RunConfig};
pub use diagnostics::{BarrierSpec, GWeight, InequalityReport, TrendReport};
pub use error::{CoreError, Result};
pub use field::{bracket_weight, maxwellian, DecayEnvelope, DistributionField};
pub use grid::{build_grids, GridConfig, SpaceGrid, VelocityGrid};
pub use homogeneous::{Scheme, StepperConfig};
pub use initial_data::{MomentProjector, PerturbationKind, PerturbationSpec};
pub use io::SnapshotHeader;
pub use params::PhysParams;
pub use splitting::{
    DiagnosticsConfig, DiagnosticsReport, RunOutput, RunState, SplittingSchedule, StopReason,
};
pub use transport::{MollifierSpec, TransportOperator};

//! Command-line driver: configured runs, the inequality suite, snapshot
//! inspection, continuation, and a self-contained selftest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bsplit_core::collision::{CollisionOperator, QuadratureSpec};
use bsplit_core::config::{parse_config, serialize_config, RunConfig};
use bsplit_core::diagnostics::{
    barrier_margin, cancellation_check, check_quadrature_default, equilibration_monitor,
    hydro_slice, lemma_suite, weighted_sup, BarrierSpec, GWeight,
};
use bsplit_core::collision::Density;
use bsplit_core::grid::build_grids;
use bsplit_core::initial_data::make_perturbation;
use bsplit_core::io::{
    emit_charts, emit_csv, read_snapshot, write_snapshot, SnapshotHeader,
};
use bsplit_core::splitting::{self, RunState, SplittingSchedule, StopReason};
use bsplit_core::{DistributionField, SpaceGrid, VelocityGrid};

#[derive(Parser)]
#[command(name = "bsplit", about = "splitting solver for the near-Maxwellian Boltzmann equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a configured splitting run and emit CSV, charts, and snapshots
    Run { config: PathBuf },
    /// Evaluate the inequality verification suite at the configured grid
    VerifyLemmas { config: PathBuf },
    /// Print the header and basic diagnostics of a snapshot file
    Diagnose { snapshot: PathBuf },
    /// Continue a saved run under the (longer) configured schedule
    Resume { snapshot: PathBuf, config: PathBuf },
    /// Deterministic built-in example suite; requires no input files
    Selftest,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config } => cmd_run(&config),
        Command::VerifyLemmas { config } => cmd_verify(&config),
        Command::Diagnose { snapshot } => cmd_diagnose(&snapshot),
        Command::Resume { snapshot, config } => cmd_resume(&snapshot, &config),
        Command::Selftest => cmd_selftest(),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let cfg = parse_config(&text)?;
    if cfg.regime_warning {
        eprintln!(
            "warning: gamma + 2s = {} leaves the hard-potential regime [0, 2]",
            cfg.physics.gamma + 2.0 * cfg.physics.s
        );
    }
    Ok(cfg)
}

struct Setup {
    op: CollisionOperator,
    space: SpaceGrid,
    barrier: BarrierSpec,
    out_dir: PathBuf,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let (velocity, space) = build_grids(&cfg.grid)?;
    let op = CollisionOperator::new(&velocity, &cfg.physics, &QuadratureSpec::default())?;
    let out_dir = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out_dir)?;
    Ok(Setup {
        op,
        space,
        barrier: BarrierSpec {
            delta: cfg.barrier_delta,
            c1: cfg.barrier_c1,
            q: cfg.barrier_q,
        },
        out_dir,
    })
}

fn header_for(cfg: &RunConfig, state: &RunState) -> SnapshotHeader {
    SnapshotHeader {
        spatial_dims: cfg.grid.spatial_dims as u32,
        space_n: cfg.grid.space_n as u32,
        velocity_radius: cfg.grid.velocity_radius,
        velocity_n: cfg.grid.velocity_n as u32,
        gamma: cfg.physics.gamma,
        s: cfg.physics.s,
        q: cfg.barrier_q,
        time_stamp: state.field.time_stamp,
        position: state.position as u64,
        parity: (state.position % 2) as u8,
    }
}

fn emit_outputs(cfg: &RunConfig, s: &Setup, out: &splitting::RunOutput) -> Result<()> {
    emit_csv(
        &s.out_dir.join("diagnostics.csv"),
        &out.report.rows,
        &cfg.diagnostics.track_qs,
    )?;
    emit_charts(&s.out_dir, &out.report.rows)?;
    write_snapshot(
        &s.out_dir.join("state_final.bsnap"),
        &header_for(cfg, &out.state),
        &out.state.field,
    )?;
    fs::write(s.out_dir.join("config_used.cfg"), serialize_config(cfg))?;
    println!(
        "finished at t = {} after {} substeps: {:?}{}",
        out.state.field.time_stamp,
        out.state.position,
        out.report.stop,
        out.report
            .stop_detail
            .as_deref()
            .map(|d| format!(" ({d})"))
            .unwrap_or_default()
    );
    if out.report.stop == StopReason::Completed {
        let series: Vec<(f64, f64)> = out
            .report
            .rows
            .iter()
            .filter_map(|r| r.sups.first().map(|&(_, sup)| (r.time, sup)))
            .collect();
        if let Ok(trend) = equilibration_monitor(&series) {
            println!(
                "decay trend: fitted p = {:.3}, monotone fraction {:.2}",
                trend.fitted_p, trend.monotone_fraction
            );
        }
    }
    println!("outputs in {}", s.out_dir.display());
    Ok(())
}

fn cmd_run(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let s = setup(&cfg)?;
    let f0 = make_perturbation(&cfg.perturbation, &s.op.grid, &s.space)?;
    let out = splitting::run(
        &s.op,
        &s.space,
        &f0,
        &cfg.schedule,
        &cfg.stepper,
        &s.barrier,
        &cfg.diagnostics,
    )?;
    emit_outputs(&cfg, &s, &out)
}

fn cmd_resume(snapshot: &Path, config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let s = setup(&cfg)?;
    let (header, field) = read_snapshot(snapshot)?;
    if header.velocity_n != cfg.grid.velocity_n as u32
        || header.spatial_dims != cfg.grid.spatial_dims as u32
        || header.space_n != cfg.grid.space_n as u32
        || header.velocity_radius != cfg.grid.velocity_radius
    {
        bail!(
            "snapshot grid (dims {}, n_x {}, R {}, n {}) does not match the config",
            header.spatial_dims,
            header.space_n,
            header.velocity_radius,
            header.velocity_n
        );
    }
    let state = RunState {
        field,
        schedule: cfg.schedule,
        position: header.position as usize,
    };
    let out = splitting::resume(
        &s.op,
        &s.space,
        state,
        &cfg.schedule,
        &cfg.stepper,
        &s.barrier,
        &cfg.diagnostics,
    )?;
    emit_outputs(&cfg, &s, &out)
}

fn cmd_verify(config: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let s = setup(&cfg)?;
    let reports = lemma_suite(&s.op, cfg.diagnostics.suite_samples)?;
    let mut all_pass = true;
    for r in &reports {
        all_pass &= r.pass;
        println!(
            "{:<22} samples {:3}  fitted {:.6e}  worst {:.6e}  {}",
            r.name,
            r.samples,
            r.fitted_constant,
            r.worst_ratio,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    // cancellation identity at the refined check quadrature, pure Maxwellian
    let dens = Density::maxwellian_only(&s.op.grid);
    let spec = check_quadrature_default();
    let mut worst = 0.0f64;
    for v in [[0.375, 0.375, 0.375], [1.875, 0.375, -0.375], [0.375, 1.125, 2.625]] {
        worst = worst.max(cancellation_check(&s.op, &dens, v, &spec).rel_err);
    }
    println!("cancellation_identity  worst rel err {worst:.4e} at refined quadrature");
    if !all_pass {
        eprintln!("note: unstable fitted constants above (suite still completed)");
    }
    Ok(())
}

fn cmd_diagnose(snapshot: &Path) -> Result<()> {
    let (header, field) = read_snapshot(snapshot)?;
    let velocity = VelocityGrid::new(header.velocity_radius, header.velocity_n as usize)?;
    println!(
        "snapshot: t = {}, position {} (parity {}), gamma {}, s {}, q {}",
        header.time_stamp, header.position, header.parity, header.gamma, header.s, header.q
    );
    println!(
        "grids: velocity R {} n {}, spatial dims {} n_x {}",
        header.velocity_radius, header.velocity_n, header.spatial_dims, header.space_n
    );
    field.check_finite()?;
    let q = header.q;
    let sup = weighted_sup(&field, &velocity, q, None);
    println!("sup <v>^{q} |f| = {sup:.6e}");
    let mut mass = (f64::INFINITY, f64::NEG_INFINITY);
    let mut energy = f64::NEG_INFINITY;
    let mut entropy = f64::NEG_INFINITY;
    let mut negativity = 0.0f64;
    for xi in 0..field.n_space {
        let h = hydro_slice(&velocity, field.slice(xi));
        mass = (mass.0.min(h.mass), mass.1.max(h.mass));
        energy = energy.max(h.energy);
        entropy = entropy.max(h.entropy);
        negativity = negativity.max(h.negativity_mass);
    }
    println!(
        "hydro over x: mass in [{:.6}, {:.6}], max energy {:.6}, max entropy {:.6}, max negativity mass {:.3e}",
        mass.0, mass.1, energy, entropy, negativity
    );
    let barrier = BarrierSpec {
        delta: sup.max(1e-12) * 2.0,
        c1: 1.0,
        q,
    };
    let g = GWeight::new(q)?;
    let (margin, node) = barrier_margin(&field, &velocity, 0.0, &barrier, &g);
    println!(
        "margin vs. a fresh barrier at delta = 2 sup: {margin:.6e} (argmin flat node {node})"
    );
    Ok(())
}

fn check(name: &str, ok: bool, detail: String, failures: &mut usize) {
    if !ok {
        *failures += 1;
    }
    println!("{} {name}: {detail}", if ok { "pass" } else { "FAIL" });
}

fn cmd_selftest() -> Result<()> {
    use bsplit_core::homogeneous::{collision_step, StepperConfig};
    use bsplit_core::params::PhysParams;

    let mut failures = 0usize;
    let params = PhysParams::hard_potential_defaults();
    let velocity = VelocityGrid::new(5.0, 6)?;
    let space = SpaceGrid::new(4, 1)?;
    let op = CollisionOperator::new(&velocity, &params, &QuadratureSpec::default())?;

    // equilibrium is a fixed point of the full alternation
    let f0 = DistributionField::zeros(&space, &velocity);
    let schedule = SplittingSchedule::new(0.1, 4)?;
    let stepper = StepperConfig {
        dt: 5e-4,
        ..StepperConfig::default()
    };
    let barrier = BarrierSpec {
        delta: 1e-2,
        c1: 1.0,
        q: 8.0,
    };
    let out = splitting::run(
        &op,
        &space,
        &f0,
        &schedule,
        &stepper,
        &barrier,
        &Default::default(),
    )?;
    check(
        "equilibrium_invariant",
        out.state.field.values.iter().all(|&v| v == 0.0)
            && out.report.stop == StopReason::Completed,
        format!("max |f(T)| = {:.3e}", out.state.field.max_abs()),
        &mut failures,
    );

    // determinism: bit-identical repeat
    let again = splitting::run(
        &op,
        &space,
        &f0,
        &schedule,
        &stepper,
        &barrier,
        &Default::default(),
    )?;
    check(
        "determinism",
        again.state.field.values == out.state.field.values,
        "identical trajectory on repeat".into(),
        &mut failures,
    );

    // hydro oracles at equilibrium
    let h = hydro_slice(&velocity, f0.slice(0));
    check(
        "hydro_oracles",
        (h.mass - 1.0).abs() < 1e-2 && (h.energy - 3.0).abs() < 0.1,
        format!("mass {:.4}, energy {:.4}", h.mass, h.energy),
        &mut failures,
    );

    // entropy non-increasing across a collision substep for projected data
    use bsplit_core::initial_data::{MomentProjector, PerturbationSpec};
    let spec = PerturbationSpec {
        amplitude: 1e-2,
        ..PerturbationSpec::default()
    };
    let pert = make_perturbation(&spec, &velocity, &SpaceGrid::new(1, 0)?)?;
    let f = pert.slice(0).to_vec();
    let projector = MomentProjector::new(&velocity)?;
    let before = hydro_slice(&velocity, &f).entropy;
    let (after_f, _) = collision_step(&op, Some(&projector), &f, &stepper, 0.01)?;
    let after = hydro_slice(&velocity, &after_f).entropy;
    check(
        "entropy_monotone_substep",
        after <= before + 1e-6,
        format!("{before:.6} -> {after:.6}"),
        &mut failures,
    );

    // synthetic power-law recovery by the trend monitor
    let series: Vec<(f64, f64)> = (1..=30)
        .map(|i| {
            let t = 0.2 * i as f64;
            (t, 5.0 * t.powi(-2))
        })
        .collect();
    let trend = equilibration_monitor(&series)?;
    check(
        "trend_fit",
        (trend.fitted_p - 2.0).abs() < 0.1,
        format!("fitted p = {:.3}", trend.fitted_p),
        &mut failures,
    );

    // snapshot roundtrip
    let header = SnapshotHeader {
        spatial_dims: 1,
        space_n: 4,
        velocity_radius: 5.0,
        velocity_n: 6,
        gamma: params.gamma,
        s: params.s,
        q: 8.0,
        time_stamp: out.state.field.time_stamp,
        position: out.state.position as u64,
        parity: (out.state.position % 2) as u8,
    };
    let bytes = bsplit_core::io::snapshot_bytes(&header, &out.state.field);
    let (h2, f2) = bsplit_core::io::parse_snapshot(&bytes)?;
    check(
        "snapshot_roundtrip",
        h2 == header && f2.values == out.state.field.values,
        format!("{} bytes", bytes.len()),
        &mut failures,
    );

    if failures > 0 {
        bail!("{failures} selftest check(s) failed");
    }
    Ok(())
}

//! Command orchestration shared by the executable and the tests.

use std::f64::consts::PI;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{
    BcChoice, CoefficientChoice, ForcingChoice, GammaChoice, ImplicitnessChoice, ModeChoice, NoiseKind, OutputFormat,
    RequiredFlag, SimConfigFile, ThetaInit, ThetaUpdateChoice, VInit,
};
use crate::diagnostics::{aggregate_records, DiagnosticsRecord};
use crate::domain::{eval_on_grid, make_grid, Grid, HVecField, ScalarField};
use crate::error::{HydroError, Result};
use crate::io::{write_aggregate_csv, write_diagnostics_row, write_json, write_snapshot, CSV_HEADER};
use crate::noise::{check_assumptions, AssumptionReport, BrownianDriver, KraichnanParams, NoiseBasis};
use crate::operators::hydrostatic_project;
use crate::physics::ForcingSpec;
use crate::stepper::{
    run, CoefficientSource, Implicitness, NoiseMode, RunOptions, SimState, Stepper, StepperConfig, ThetaBc, ThetaUpdate,
};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Config = 1,
    Assumption = 2,
    Blowup = 3,
    Verify = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Assumption violations map to 2, everything else a run can fail
    /// with before stepping maps to 1.
    pub fn of_error(e: &HydroError) -> Self {
        match e {
            HydroError::Assumption(_) => ExitStatus::Assumption,
            _ => ExitStatus::Config,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SimulateOptions {
    pub allow_nonparabolic: bool,
    /// Replaces `ensemble.base_seed`.
    pub seed: Option<u64>,
}

/// Noise basis described by the `[noise]` section, including the
/// `target_nu` rescaling and the `gamma` choice.
pub fn build_basis(cfg: &SimConfigFile, grid: &Arc<Grid>) -> Result<NoiseBasis> {
    let n = &cfg.noise;
    let mut basis = match n.kind {
        NoiseKind::Zero => NoiseBasis::zero(grid, cfg.n_modes())?,
        NoiseKind::Constant => {
            let m = cfg.n_modes();
            let pad = |v: &Vec<[f64; 3]>| if v.is_empty() { vec![[0.0; 3]; m] } else { v.clone() };
            NoiseBasis::constant(grid, &pad(&n.phi), &pad(&n.psi))?
        }
        NoiseKind::Kraichnan => {
            let p = KraichnanParams {
                n_modes: cfg.n_modes(),
                decay: n.decay,
                sigma: n.sigma,
                psi_sigma: n.psi_sigma.unwrap_or(n.sigma),
                vertical: n.vertical,
                seed: n.seed,
            };
            NoiseBasis::kraichnan(grid, &p)?
        }
    };
    if let Some(target) = n.target_nu {
        let nu = check_assumptions(&basis, n.delta).nu();
        if nu == 0.0 {
            if target != 0.0 {
                return Err(HydroError::InvalidNoise("cannot rescale a zero basis to a positive target_nu".into()));
            }
        } else {
            // ν is quadratic in the amplitude.
            basis = basis.scaled((target / nu).sqrt());
        }
    }
    if n.gamma == GammaChoice::FromPhi {
        basis = basis.with_gamma_from_phi(0.5)?;
    }
    let flags = basis.flags();
    for f in &n.flags {
        let (ok, name) = match f {
            RequiredFlag::PhiHX3Independent => (flags.phi_h_x3_independent, "phi_h_x3_independent"),
            RequiredFlag::Phi3VanishesOnBoundary => (flags.phi3_vanishes_on_boundary, "phi3_vanishes_on_boundary"),
            RequiredFlag::Psi3VanishesOnBoundary => (flags.psi3_vanishes_on_boundary, "psi3_vanishes_on_boundary"),
        };
        if !ok {
            return Err(HydroError::Assumption(format!("required noise flag {name} does not hold")));
        }
    }
    Ok(basis)
}

pub fn build_grid(cfg: &SimConfigFile) -> Result<Arc<Grid>> {
    make_grid(cfg.grid.nx, cfg.grid.ny, cfg.grid.nz, cfg.grid.h)
}

pub fn build_stepper(cfg: &SimConfigFile, basis: NoiseBasis, base_seed: u64) -> Result<Stepper> {
    let p = &cfg.physics;
    let dt = cfg.time.dt;
    let mut sc = StepperConfig::new(dt, p.alpha)
        .with_mode(match p.mode {
            ModeChoice::Ito => NoiseMode::Ito,
            ModeChoice::StratonovichCorrected => NoiseMode::StratonovichCorrected,
            ModeChoice::StratonovichHeun => NoiseMode::StratonovichHeun,
        })
        .with_bc(match p.bc_theta {
            BcChoice::WeakRobin => ThetaBc::WeakRobin(p.alpha),
            BcChoice::StrongRobin => ThetaBc::StrongRobin(p.alpha),
        })
        .with_implicitness(match p.implicitness {
            ImplicitnessChoice::Imex => Implicitness::Imex,
            ImplicitnessChoice::FullyExplicit => Implicitness::FullyExplicit,
        })
        .with_theta_update(match p.theta_update {
            ThetaUpdateChoice::Stencil => ThetaUpdate::Stencil,
            ThetaUpdateChoice::Variational => ThetaUpdate::Variational,
        })
        .with_coefficients(match p.coefficients {
            CoefficientChoice::Identity => CoefficientSource::Identity,
            CoefficientChoice::Strat => CoefficientSource::StratDerived,
        });
    if p.kappa != 1.0 {
        sc = sc.with_kappa(ScalarField::constant(basis.grid(), p.kappa));
    }
    let forcing = match p.forcing {
        ForcingChoice::Zero => ForcingSpec::zero(),
        ForcingChoice::Coriolis => ForcingSpec::coriolis(p.k0),
        ForcingChoice::LinearDamping => ForcingSpec::linear_damping(p.damping),
    };
    let driver = BrownianDriver::new(base_seed, basis.n_modes(), dt)?;
    Stepper::new(sc, basis, forcing, driver)
}

/// Initial state from `[initial]`; every trajectory starts from it.
pub fn initial_state(cfg: &SimConfigFile, grid: &Arc<Grid>) -> Result<SimState> {
    let h = grid.h();
    let cz = move |x3: f64| (PI * (x3 + h) / h).cos();
    let i = &cfg.initial;
    let v = match i.v {
        VInit::Zero => HVecField::zeros(grid),
        VInit::Eigenmode => HVecField::from_fns(grid, move |_, x2, x3| x2.sin() * cz(x3), |_, _, _| 0.0)?,
        VInit::Smooth => hydrostatic_project(&HVecField::from_fns(
            grid,
            move |x1, x2, x3| x2.cos() + 0.5 * (x1 + x2).sin() * cz(x3),
            move |x1, _, x3| 0.5 * x1.cos() * (1.0 + x3 / h),
        )?),
    }
    .scale(i.v_amplitude);
    let k = f64::from(i.theta_wavenumber);
    let theta = match i.theta {
        ThetaInit::Zero => ScalarField::zeros(grid),
        ThetaInit::CosX1 => eval_on_grid(grid, move |x1, _, _| (k * x1).cos())?,
        ThetaInit::Eigenmode => eval_on_grid(grid, move |_, _, x3| cz(x3))?,
        ThetaInit::Smooth => eval_on_grid(grid, move |x1, x2, x3| (x1 - x2).cos() * cz(x3) + 0.5 * x1.sin())?,
    }
    .scale(i.theta_amplitude);
    SimState::new(v, theta, 0)
}

/// Basis and assumption report for `check-noise`; the exit status follows
/// the simulation gate.
pub fn check_noise(cfg: &SimConfigFile, out: &mut dyn Write) -> Result<(AssumptionReport, ExitStatus)> {
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg, &grid)?;
    let report = check_assumptions(&basis, cfg.noise.delta);
    writeln!(out, "{report}")?;
    let status = if report.pass() { ExitStatus::Ok } else { ExitStatus::Assumption };
    Ok((report, status))
}

/// Files written by [`simulate`].
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub diagnostics_csv: Option<PathBuf>,
    pub ensemble_csv: Option<PathBuf>,
    pub report_json: Option<PathBuf>,
    pub snapshots: Vec<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub status: ExitStatus,
    pub report: AssumptionReport,
    /// Trajectories whose monitor flagged.
    pub flagged: Vec<u64>,
    pub records: Vec<Vec<DiagnosticsRecord>>,
    pub artifacts: Artifacts,
}

struct TrajectoryResult {
    records: Vec<DiagnosticsRecord>,
    flagged: bool,
    /// `(step, bytes)` of every snapshot taken.
    snapshots: Vec<(u64, Vec<u8>)>,
}

/// Run the configured ensemble on the current rayon pool and write the
/// artifacts into `cfg.output.dir`, resolved against `base_dir`.
///
/// The assumption report is printed first. A failing parabolicity gate
/// returns [`ExitStatus::Assumption`] without stepping unless
/// `allow_nonparabolic` is set. Output is written by this thread in
/// trajectory order after all workers finish.
pub fn simulate(
    cfg: &SimConfigFile,
    base_dir: &Path,
    opts: &SimulateOptions,
    log: &mut dyn Write,
) -> Result<SimulateOutcome> {
    let grid = build_grid(cfg)?;
    let basis = build_basis(cfg, &grid)?;
    let report = check_assumptions(&basis, cfg.noise.delta);
    writeln!(log, "{report}")?;
    if !report.pass() {
        if opts.allow_nonparabolic {
            writeln!(log, "warning: parabolicity fails (nu = {:.6}); continuing as requested", report.nu())?;
        } else {
            writeln!(log, "refusing to run: parabolicity fails (nu = {:.6} >= 2)", report.nu())?;
            return Ok(SimulateOutcome {
                status: ExitStatus::Assumption,
                report,
                flagged: Vec::new(),
                records: Vec::new(),
                artifacts: Artifacts::default(),
            });
        }
    }
    let seed = opts.seed.unwrap_or(cfg.ensemble.base_seed);
    let stepper = build_stepper(cfg, basis, seed)?;
    let ics = initial_state(cfg, &grid)?;

    let mut ropts = RunOptions::new(cfg.time.n_steps).with_cadence(cfg.time.diag_cadence).with_horizon(cfg.horizon());
    if let Some(th) = cfg.time.blowup_threshold {
        ropts = ropts.with_threshold(th);
    }
    let want_snap = cfg.wants(OutputFormat::Snapshot);
    let every = cfg.output.snapshots_every;
    let n_steps = cfg.time.n_steps;

    let results: Vec<TrajectoryResult> = (0..cfg.ensemble.n_traj)
        .into_par_iter()
        .map(|k| -> Result<TrajectoryResult> {
            let mut s = ics.clone();
            s.trajectory_index = k;
            let mut snaps = Vec::new();
            let mut snap_err = None;
            let out = run(&stepper, s, &ropts, |st, _| {
                let due = (every > 0 && st.step_index % every == 0) || st.step_index == n_steps;
                if want_snap && due && st.is_finite() && snaps.last().map(|(s, _)| *s) != Some(st.step_index) {
                    let mut buf = Vec::new();
                    match write_snapshot(&mut buf, st) {
                        Ok(()) => snaps.push((st.step_index, buf)),
                        Err(e) => snap_err = Some(e),
                    }
                }
            })?;
            if let Some(e) = snap_err {
                return Err(e);
            }
            if want_snap && snaps.last().map(|(s, _)| *s) != Some(out.final_state.step_index) {
                let mut buf = Vec::new();
                write_snapshot(&mut buf, &out.final_state)?;
                snaps.push((out.final_state.step_index, buf));
            }
            let flagged = out.flagged();
            let mut records = out.records;
            for r in &mut records {
                r.traj = k;
            }
            Ok(TrajectoryResult { records, flagged, snapshots: snaps })
        })
        .collect::<Result<_>>()?;

    let dir = base_dir.join(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    let mut artifacts = Artifacts::default();
    let report_path = dir.join("assumptions.json");
    write_json(&mut BufWriter::new(fs::File::create(&report_path)?), &report)?;
    artifacts.report_json = Some(report_path);

    let records: Vec<Vec<DiagnosticsRecord>> = results.iter().map(|r| r.records.clone()).collect();
    if cfg.wants(OutputFormat::Csv) {
        let path = dir.join("diagnostics.csv");
        let mut w = BufWriter::new(fs::File::create(&path)?);
        writeln!(w, "{CSV_HEADER}")?;
        for r in records.iter().flatten() {
            write_diagnostics_row(&mut w, r)?;
        }
        w.flush()?;
        artifacts.diagnostics_csv = Some(path);

        let path = dir.join("ensemble.csv");
        let mut w = BufWriter::new(fs::File::create(&path)?);
        write_aggregate_csv(&mut w, &aggregate_records(&records))?;
        w.flush()?;
        artifacts.ensemble_csv = Some(path);
    }
    if want_snap {
        let sdir = dir.join("snapshots");
        fs::create_dir_all(&sdir)?;
        for (k, r) in results.iter().enumerate() {
            for (step, bytes) in &r.snapshots {
                let path = sdir.join(format!("traj{k:05}_step{step:09}.bin"));
                fs::write(&path, bytes)?;
                artifacts.snapshots.push(path);
            }
        }
    }

    let flagged: Vec<u64> = results.iter().enumerate().filter(|(_, r)| r.flagged).map(|(k, _)| k as u64).collect();
    let status = if flagged.is_empty() {
        writeln!(log, "completed {} trajectories, no blow-up flag", results.len())?;
        ExitStatus::Ok
    } else {
        for &k in &flagged {
            if let Some(r) = records[k as usize].iter().find(|r| r.blowup_flag) {
                writeln!(
                    log,
                    "numerical blow-up flag: trajectory {k} at t = {} (functional {:e})",
                    r.t,
                    r.blowup_functional()
                )?;
            }
        }
        ExitStatus::Blowup
    };
    Ok(SimulateOutcome { status, report, flagged, records, artifacts })
}

/// Run `f` on a rayon pool of `threads` workers (all cores for `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| HydroError::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Load, run and map errors to exit statuses, printing errors to `log`.
pub fn simulate_path(path: &Path, opts: &SimulateOptions, log: &mut dyn Write) -> ExitStatus {
    let cfg = match SimConfigFile::load(path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(log, "error: {}: {e}", path.display());
            return ExitStatus::Config;
        }
    };
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    match simulate(&cfg, base, opts, log) {
        Ok(o) => o.status,
        Err(e) => {
            let _ = writeln!(log, "error: {e}");
            ExitStatus::of_error(&e)
        }
    }
}

/// Counterpart of [`simulate_path`] for `check-noise`.
pub fn check_noise_path(path: &Path, log: &mut dyn Write) -> ExitStatus {
    let result = SimConfigFile::load(path).and_then(|cfg| check_noise(&cfg, log));
    match result {
        Ok((_, s)) => s,
        Err(e) => {
            let _ = writeln!(log, "error: {}: {e}", path.display());
            ExitStatus::of_error(&e)
        }
    }
}

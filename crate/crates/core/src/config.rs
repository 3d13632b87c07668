//! INI-style run configuration.
//!
//! Sections are `[grid] [time] [noise] [physics] [ensemble] [output]
//! [initial]`. Lines are `key = value`; `#` starts a comment. Unknown
//! sections, unknown keys and repeated keys are errors. Every key is
//! optional and falls back to the default documented on its field.
//!
//! Units: lengths are in the torus units (period `2π` horizontally), times
//! in the model time unit, so `dt` and `horizon` are times, `alpha` and `k0`
//! are inverse length and inverse time respectively, and noise amplitudes
//! carry units of length per square-root time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{HydroError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSection {
    /// Horizontal points along x₁ (default 16).
    pub nx: usize,
    /// Horizontal points along x₂ (default 16).
    pub ny: usize,
    /// Vertical nodes including both walls (default 17).
    pub nz: usize,
    /// Layer depth, length (default 1).
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSection {
    /// Step size, time (default 1e-3).
    pub dt: f64,
    /// Number of steps (default 1000).
    pub n_steps: u64,
    /// Record diagnostics every this many steps (default 1).
    pub diag_cadence: u64,
    /// Blow-up monitor horizon, time (default: end of run).
    pub horizon: Option<f64>,
    /// Blow-up threshold on `𝒩₁(v) + 𝒩₀(θ)` (default `1e6·(initial + 1)`).
    pub blowup_threshold: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Zero,
    /// Spatially constant modes given by `phi` and `psi`.
    Constant,
    Kraichnan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaChoice {
    Zero,
    /// `γₙ = ½∇_H φₙ`.
    FromPhi,
}

/// Structural flags a configuration may demand of its basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RequiredFlag {
    PhiHX3Independent,
    Phi3VanishesOnBoundary,
    Psi3VanishesOnBoundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSection {
    /// `zero | constant | kraichnan` (default zero).
    pub kind: NoiseKind,
    /// Mode count `N` (default 1; implied by `phi`/`psi` for constant noise).
    pub n_modes: Option<usize>,
    /// Kraichnan spectral decay exponent `s`, dimensionless (default 3).
    pub decay: f64,
    /// Kraichnan amplitude of `φ`, length per √time (default 1).
    pub sigma: f64,
    /// Kraichnan amplitude of `ψ` (default `sigma`).
    pub psi_sigma: Option<f64>,
    /// Relative amplitude of the vertical component `φ³` (default 0).
    pub vertical: f64,
    /// Seed of the random basis synthesis (default 0).
    pub seed: u64,
    /// Integrability margin δ in `L^{3+δ}` (default 0.1).
    pub delta: f64,
    /// Comma-separated structural flags that must hold (default none).
    pub flags: Vec<RequiredFlag>,
    /// Constant `φ` modes, `a,b,c; a,b,c; ...` (default none).
    pub phi: Vec<[f64; 3]>,
    /// Constant `ψ` modes, same syntax.
    pub psi: Vec<[f64; 3]>,
    /// `zero | from_phi` (default zero).
    pub gamma: GammaChoice,
    /// Rescale the basis so its parabolicity constant equals this value.
    pub target_nu: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeChoice {
    Ito,
    StratonovichCorrected,
    StratonovichHeun,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcChoice {
    WeakRobin,
    StrongRobin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForcingChoice {
    Zero,
    Coriolis,
    LinearDamping,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicitnessChoice {
    Imex,
    FullyExplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaUpdateChoice {
    Stencil,
    Variational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefficientChoice {
    Identity,
    /// Leading coefficients derived from the noise (`a = a_φ`, `a_ψ`).
    Strat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicsSection {
    /// `ito | stratonovich_corrected | stratonovich_heun` (default ito).
    pub mode: ModeChoice,
    /// `weak_robin | strong_robin` (default weak_robin).
    pub bc_theta: BcChoice,
    /// Robin coefficient, inverse length (default 0).
    pub alpha: f64,
    /// Buoyancy coefficient, dimensionless (default 1).
    pub kappa: f64,
    /// `zero | coriolis | linear_damping` (default coriolis).
    pub forcing: ForcingChoice,
    /// Coriolis parameter, inverse time (default 1).
    pub k0: f64,
    /// Damping rate for `linear_damping`, inverse time (default 0).
    pub damping: f64,
    /// `imex | fully_explicit` (default imex).
    pub implicitness: ImplicitnessChoice,
    /// `stencil | variational` (default stencil).
    pub theta_update: ThetaUpdateChoice,
    /// `identity | strat` (default identity).
    pub coefficients: CoefficientChoice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSection {
    /// Number of trajectories (default 1).
    pub n_traj: u64,
    /// Seed of the Brownian increments (default 0).
    pub base_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Snapshot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSection {
    /// Output directory, relative paths resolve against the config file
    /// (default `out`).
    pub dir: PathBuf,
    /// Snapshot every this many steps; 0 writes only the final state
    /// (default 0).
    pub snapshots_every: u64,
    /// Comma-separated subset of `csv, snapshot` (default csv).
    pub formats: Vec<OutputFormat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VInit {
    Zero,
    /// `(sin x₂·cos(π(x₃+h)/h), 0)`.
    Eigenmode,
    /// A projected combination of low modes.
    Smooth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaInit {
    Zero,
    /// `cos(k x₁)` with `k = theta_wavenumber`.
    CosX1,
    /// `cos(π(x₃+h)/h)`.
    Eigenmode,
    Smooth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialSection {
    /// `zero | eigenmode | smooth` (default smooth).
    pub v: VInit,
    /// `zero | cos_x1 | eigenmode | smooth` (default smooth).
    pub theta: ThetaInit,
    /// Velocity amplitude, length per time (default 1).
    pub v_amplitude: f64,
    /// Temperature amplitude (default 1).
    pub theta_amplitude: f64,
    /// Wavenumber of `cos_x1` (default 1).
    pub theta_wavenumber: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfigFile {
    pub grid: GridSection,
    pub time: TimeSection,
    pub noise: NoiseSection,
    pub physics: PhysicsSection,
    pub ensemble: EnsembleSection,
    pub output: OutputSection,
    pub initial: InitialSection,
}

impl Default for SimConfigFile {
    fn default() -> Self {
        SimConfigFile {
            grid: GridSection { nx: 16, ny: 16, nz: 17, h: 1.0 },
            time: TimeSection { dt: 1e-3, n_steps: 1000, diag_cadence: 1, horizon: None, blowup_threshold: None },
            noise: NoiseSection {
                kind: NoiseKind::Zero,
                n_modes: None,
                decay: 3.0,
                sigma: 1.0,
                psi_sigma: None,
                vertical: 0.0,
                seed: 0,
                delta: 0.1,
                flags: Vec::new(),
                phi: Vec::new(),
                psi: Vec::new(),
                gamma: GammaChoice::Zero,
                target_nu: None,
            },
            physics: PhysicsSection {
                mode: ModeChoice::Ito,
                bc_theta: BcChoice::WeakRobin,
                alpha: 0.0,
                kappa: 1.0,
                forcing: ForcingChoice::Coriolis,
                k0: 1.0,
                damping: 0.0,
                implicitness: ImplicitnessChoice::Imex,
                theta_update: ThetaUpdateChoice::Stencil,
                coefficients: CoefficientChoice::Identity,
            },
            ensemble: EnsembleSection { n_traj: 1, base_seed: 0 },
            output: OutputSection { dir: PathBuf::from("out"), snapshots_every: 0, formats: vec![OutputFormat::Csv] },
            initial: InitialSection { v: VInit::Smooth, theta: ThetaInit::Smooth, v_amplitude: 1.0, theta_amplitude: 1.0, theta_wavenumber: 1 },
        }
    }
}

const SECTIONS: [&str; 7] = ["grid", "time", "noise", "physics", "ensemble", "output", "initial"];

struct Entry {
    value: String,
    line: usize,
}

/// Raw `section.key → value` table; keys are consumed as they are read so
/// leftovers can be reported.
struct Table {
    entries: BTreeMap<(String, String), Entry>,
    last_line: usize,
}

fn err(line: usize, msg: impl Into<String>) -> HydroError {
    HydroError::Config { line, msg: msg.into() }
}

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        let mut last_line = 0;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            last_line = line;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| err(line, format!("expected key = value, got '{body}'")))?;
            let sec = section.clone().ok_or_else(|| err(line, "key outside of any section"))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(err(line, "empty key"));
            }
            let value = v.trim().to_string();
            if let Some(prev) = entries.insert((sec.clone(), key.clone()), Entry { value, line }) {
                return Err(err(line, format!("duplicate key {sec}.{key} (first set on line {})", prev.line)));
            }
        }
        Ok(Table { entries, last_line })
    }

    fn take<T>(&mut self, sec: &str, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.entries.remove(&(sec.to_string(), key.to_string())) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|m| err(e.line, format!("{sec}.{key}: {m}"))),
        }
    }

    fn set<T>(&mut self, sec: &str, key: &str, slot: &mut T, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<()> {
        if let Some(v) = self.take(sec, key, parse)? {
            *slot = v;
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some(((s, k), e)) => Err(err(e.line, format!("unknown key {k} in [{s}]"))),
        }
    }
}

fn num<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|_| format!("cannot parse '{s}' as a number"))
}

fn finite(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(s)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn choice<T: Copy>(options: &'static [(&'static str, T)]) -> impl Fn(&str) -> std::result::Result<T, String> {
    move |s| {
        options.iter().find(|(n, _)| *n == s).map(|(_, v)| *v).ok_or_else(|| {
            let names: Vec<_> = options.iter().map(|(n, _)| *n).collect();
            format!("'{s}' is not one of {}", names.join(" | "))
        })
    }
}

fn list<T>(item: impl Fn(&str) -> std::result::Result<T, String>) -> impl Fn(&str) -> std::result::Result<Vec<T>, String> {
    move |s| s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(&item).collect()
}

fn modes(s: &str) -> std::result::Result<Vec<[f64; 3]>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|m| {
            let parts = m.split(',').map(|p| finite(p.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
            <[f64; 3]>::try_from(parts).map_err(|p| format!("mode '{m}' has {} components, expected 3", p.len()))
        })
        .collect()
}

impl SimConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::parse(text)?;
        let mut c = SimConfigFile::default();
        let end = t.last_line;

        t.set("grid", "nx", &mut c.grid.nx, num)?;
        t.set("grid", "ny", &mut c.grid.ny, num)?;
        t.set("grid", "nz", &mut c.grid.nz, num)?;
        t.set("grid", "h", &mut c.grid.h, finite)?;

        t.set("time", "dt", &mut c.time.dt, finite)?;
        t.set("time", "n_steps", &mut c.time.n_steps, num)?;
        t.set("time", "diag_cadence", &mut c.time.diag_cadence, num)?;
        c.time.horizon = t.take("time", "horizon", finite)?;
        c.time.blowup_threshold = t.take("time", "blowup_threshold", finite)?;

        let n = &mut c.noise;
        t.set(
            "noise",
            "kind",
            &mut n.kind,
            choice(&[("zero", NoiseKind::Zero), ("constant", NoiseKind::Constant), ("kraichnan", NoiseKind::Kraichnan)]),
        )?;
        n.n_modes = t.take("noise", "N", num)?;
        t.set("noise", "s", &mut n.decay, finite)?;
        t.set("noise", "sigma", &mut n.sigma, finite)?;
        n.psi_sigma = t.take("noise", "psi_sigma", finite)?;
        t.set("noise", "vertical", &mut n.vertical, finite)?;
        t.set("noise", "seed", &mut n.seed, num)?;
        t.set("noise", "delta", &mut n.delta, finite)?;
        t.set(
            "noise",
            "flags",
            &mut n.flags,
            list(choice(&[
                ("phi_h_x3_independent", RequiredFlag::PhiHX3Independent),
                ("phi3_vanishes_on_boundary", RequiredFlag::Phi3VanishesOnBoundary),
                ("psi3_vanishes_on_boundary", RequiredFlag::Psi3VanishesOnBoundary),
            ])),
        )?;
        t.set("noise", "phi", &mut n.phi, modes)?;
        t.set("noise", "psi", &mut n.psi, modes)?;
        t.set("noise", "gamma", &mut n.gamma, choice(&[("zero", GammaChoice::Zero), ("from_phi", GammaChoice::FromPhi)]))?;
        n.target_nu = t.take("noise", "target_nu", finite)?;

        let p = &mut c.physics;
        t.set(
            "physics",
            "mode",
            &mut p.mode,
            choice(&[
                ("ito", ModeChoice::Ito),
                ("stratonovich_corrected", ModeChoice::StratonovichCorrected),
                ("stratonovich_heun", ModeChoice::StratonovichHeun),
            ]),
        )?;
        t.set(
            "physics",
            "bc_theta",
            &mut p.bc_theta,
            choice(&[("weak_robin", BcChoice::WeakRobin), ("strong_robin", BcChoice::StrongRobin)]),
        )?;
        t.set("physics", "alpha", &mut p.alpha, finite)?;
        t.set("physics", "kappa", &mut p.kappa, finite)?;
        t.set(
            "physics",
            "forcing",
            &mut p.forcing,
            choice(&[
                ("zero", ForcingChoice::Zero),
                ("coriolis", ForcingChoice::Coriolis),
                ("linear_damping", ForcingChoice::LinearDamping),
            ]),
        )?;
        t.set("physics", "k0", &mut p.k0, finite)?;
        t.set("physics", "damping", &mut p.damping, finite)?;
        t.set(
            "physics",
            "implicitness",
            &mut p.implicitness,
            choice(&[("imex", ImplicitnessChoice::Imex), ("fully_explicit", ImplicitnessChoice::FullyExplicit)]),
        )?;
        t.set(
            "physics",
            "theta_update",
            &mut p.theta_update,
            choice(&[("stencil", ThetaUpdateChoice::Stencil), ("variational", ThetaUpdateChoice::Variational)]),
        )?;
        t.set(
            "physics",
            "coefficients",
            &mut p.coefficients,
            choice(&[("identity", CoefficientChoice::Identity), ("strat", CoefficientChoice::Strat)]),
        )?;

        t.set("ensemble", "n_traj", &mut c.ensemble.n_traj, num)?;
        t.set("ensemble", "base_seed", &mut c.ensemble.base_seed, num)?;

        t.set("output", "dir", &mut c.output.dir, |s| Ok(PathBuf::from(s)))?;
        t.set("output", "snapshots_every", &mut c.output.snapshots_every, num)?;
        t.set(
            "output",
            "formats",
            &mut c.output.formats,
            list(choice(&[("csv", OutputFormat::Csv), ("snapshot", OutputFormat::Snapshot)])),
        )?;

        let i = &mut c.initial;
        t.set(
            "initial",
            "v",
            &mut i.v,
            choice(&[("zero", VInit::Zero), ("eigenmode", VInit::Eigenmode), ("smooth", VInit::Smooth)]),
        )?;
        t.set(
            "initial",
            "theta",
            &mut i.theta,
            choice(&[
                ("zero", ThetaInit::Zero),
                ("cos_x1", ThetaInit::CosX1),
                ("eigenmode", ThetaInit::Eigenmode),
                ("smooth", ThetaInit::Smooth),
            ]),
        )?;
        t.set("initial", "v_amplitude", &mut i.v_amplitude, finite)?;
        t.set("initial", "theta_amplitude", &mut i.theta_amplitude, finite)?;
        t.set("initial", "theta_wavenumber", &mut i.theta_wavenumber, num)?;

        t.finish()?;
        c.validate(end)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Cross-field checks; errors point at the end of the file.
    fn validate(&self, line: usize) -> Result<()> {
        let bad = |m: &str| Err(err(line, m));
        if self.time.dt <= 0.0 {
            return bad("time.dt must be positive");
        }
        if self.time.diag_cadence == 0 {
            return bad("time.diag_cadence must be at least 1");
        }
        if self.grid.h <= 0.0 {
            return bad("grid.h must be positive");
        }
        if self.physics.alpha < 0.0 {
            return bad("physics.alpha must be non-negative");
        }
        if self.ensemble.n_traj == 0 {
            return bad("ensemble.n_traj must be at least 1");
        }
        if self.noise.delta <= 0.0 {
            return bad("noise.delta must be positive");
        }
        if self.noise.n_modes == Some(0) {
            return bad("noise.N must be at least 1");
        }
        if let Some(nu) = self.noise.target_nu {
            if nu < 0.0 {
                return bad("noise.target_nu must be non-negative");
            }
        }
        match self.noise.kind {
            NoiseKind::Constant => {
                let m = self.noise.phi.len().max(self.noise.psi.len());
                if m == 0 {
                    return bad("constant noise needs phi or psi modes");
                }
                for (name, l) in [("phi", self.noise.phi.len()), ("psi", self.noise.psi.len())] {
                    if l != 0 && l != m {
                        return bad(&format!("noise.{name} has {l} modes, expected {m}"));
                    }
                }
                if let Some(n) = self.noise.n_modes {
                    if n != m {
                        return bad(&format!("noise.N = {n} but {m} constant modes are given"));
                    }
                }
            }
            _ => {
                if !self.noise.phi.is_empty() || !self.noise.psi.is_empty() {
                    return bad("noise.phi and noise.psi are only used with kind = constant");
                }
            }
        }
        Ok(())
    }

    /// Mode count of the configured basis.
    pub fn n_modes(&self) -> usize {
        match self.noise.kind {
            NoiseKind::Constant => self.noise.phi.len().max(self.noise.psi.len()),
            _ => self.noise.n_modes.unwrap_or(1),
        }
    }

    /// Monitor horizon, defaulting to the end of the run.
    pub fn horizon(&self) -> f64 {
        self.time.horizon.unwrap_or(self.time.dt * self.time.n_steps as f64)
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.output.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = SimConfigFile::parse("# nothing\n\n").unwrap();
        assert_eq!(c, SimConfigFile::default());
        assert_eq!(c.physics.kappa, 1.0);
        assert_eq!(c.physics.forcing, ForcingChoice::Coriolis);
        assert_eq!(c.noise.kind, NoiseKind::Zero);
    }

    #[test]
    fn full_file_round_trips_values() {
        let text = "\
[grid]
nx = 8
ny = 12   # trailing comment
nz = 9
h = 0.5
[time]
dt = 5e-4
n_steps = 200
diag_cadence = 10
horizon = 0.05
[noise]
kind = constant
phi = 1, 0, 0 ; 0, 0.5, 0
psi = 0.5,0,0; 0,0,0
gamma = from_phi
flags = phi_h_x3_independent, psi3_vanishes_on_boundary
[physics]
mode = stratonovich_heun
bc_theta = strong_robin
alpha = 0.25
forcing = zero
[ensemble]
n_traj = 4
base_seed = 99
[output]
dir = runs/a
formats = csv, snapshot
[initial]
theta = cos_x1
v = zero
";
        let c = SimConfigFile::parse(text).unwrap();
        assert_eq!((c.grid.nx, c.grid.ny, c.grid.nz, c.grid.h), (8, 12, 9, 0.5));
        assert_eq!(c.time.diag_cadence, 10);
        assert_eq!(c.horizon(), 0.05);
        assert_eq!(c.noise.phi, vec![[1.0, 0.0, 0.0], [0.0, 0.5, 0.0]]);
        assert_eq!(c.n_modes(), 2);
        assert_eq!(c.noise.flags.len(), 2);
        assert_eq!(c.physics.mode, ModeChoice::StratonovichHeun);
        assert_eq!(c.physics.bc_theta, BcChoice::StrongRobin);
        assert_eq!(c.ensemble.base_seed, 99);
        assert!(c.wants(OutputFormat::Snapshot));
        assert_eq!(c.initial.theta, ThetaInit::CosX1);
    }

    fn line_of(text: &str) -> usize {
        match SimConfigFile::parse(text) {
            Err(HydroError::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected_with_lines() {
        assert_eq!(line_of("[grid]\nnx = 8\nnxx = 9\n"), 3);
        assert_eq!(line_of("[grid]\n[solver]\n"), 2);
        assert_eq!(line_of("nx = 8\n"), 1);
        assert_eq!(line_of("[grid]\nnx = 8\nnx = 9\n"), 3);
        assert_eq!(line_of("[grid]\nnx = eight\n"), 2);
        assert_eq!(line_of("[physics]\nmode = magic\n"), 2);
        assert_eq!(line_of("[time]\ndt = inf\n"), 2);
        assert_eq!(line_of("[grid]\nnx 8\n"), 2);
    }

    #[test]
    fn cross_field_checks() {
        assert!(SimConfigFile::parse("[time]\ndt = -1\n").is_err());
        assert!(SimConfigFile::parse("[noise]\nkind = constant\n").is_err());
        assert!(SimConfigFile::parse("[noise]\nkind = constant\nphi = 1,0,0\npsi = 1,0,0;0,0,0\n").is_err());
        assert!(SimConfigFile::parse("[noise]\nphi = 1,0,0\n").is_err());
        assert!(SimConfigFile::parse("[noise]\nkind = constant\nphi = 1,0\n").is_err());
        assert!(SimConfigFile::parse("[ensemble]\nn_traj = 0\n").is_err());
    }
}

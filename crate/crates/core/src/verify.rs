//! Residual and oracle suites behind `hydrostat verify`.
//!
//! Each suite returns named checks with the measured value, the bound it
//! is held to and a verdict. The building blocks are public so the test
//! suites can reuse them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{identity_residuals, kadlec_discrete, mean_se};
use crate::domain::{eval_on_grid, h1_norm_sq_vec, inner, l2_norm_vec, make_grid, HVecField, ScalarField};
use crate::error::{HydroError, Result};
use crate::noise::{strat_coefficients, BrownianDriver, NoiseBasis};
use crate::operators::{
    div_horizontal_2d, hydrostatic_project, kadlec_residual, top_gradient, vertical_average_vec, Hessian, VerticalBc,
};
use crate::physics::{composed_correction_v, strat_correction_v, ForcingSpec};
use crate::stepper::{run_ensemble, NoiseMode, RunOptions, SimState, Stepper, StepperConfig};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Check { name: name.into(), value, tolerance, pass: value < tolerance, detail }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Check { name: name.into(), value, tolerance, pass: value >= tolerance, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.pass { "pass" } else { "FAIL" };
        write!(f, "{v} {} = {:.6e} (bound {:.3e}) {}", self.name, self.value, self.tolerance, self.detail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Projection,
    Kadlec,
    Cancellation,
    Strat,
    Energy,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Projection, Suite::Kadlec, Suite::Cancellation, Suite::Strat, Suite::Energy];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Projection => "projection",
            Suite::Kadlec => "kadlec",
            Suite::Cancellation => "cancellation",
            Suite::Strat => "strat",
            Suite::Energy => "energy",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = HydroError;

    fn from_str(s: &str) -> Result<Self> {
        [Suite::Projection, Suite::Kadlec, Suite::Cancellation, Suite::Strat, Suite::Energy, Suite::All]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HydroError::InvalidConfig(format!("unknown suite '{s}'")))
    }
}

/// Parse `8x8x9,16x16x17`.
pub fn parse_grids(s: &str) -> Result<Vec<(usize, usize, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let p: Vec<usize> = t
                .split('x')
                .map(|n| n.parse().map_err(|_| HydroError::InvalidConfig(format!("bad grid '{t}'"))))
                .collect::<Result<_>>()?;
            match p[..] {
                [a, b, c] => Ok((a, b, c)),
                _ => Err(HydroError::InvalidConfig(format!("grid '{t}' must be NXxNYxNZ"))),
            }
        })
        .collect()
}

/// Base-2 logarithms of successive error ratios.
pub fn observed_orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

// ---------------------------------------------------------------- projection

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ProjectionStats {
    /// Largest `‖ℙℙf − ℙf‖ / ‖f‖`.
    pub idempotency: f64,
    /// Largest `‖ℙf‖ / ‖f‖`.
    pub contraction: f64,
    /// Largest `‖div_H (ℙf)‾‖ / ‖f‖_{H¹}`.
    pub divergence: f64,
}

/// Random smooth horizontal field: low Fourier modes in x_H with random
/// amplitudes, each carrying a random combination of vertical profiles.
pub fn random_smooth_field(grid: &std::sync::Arc<crate::Grid>, rng: &mut ChaCha8Rng) -> Result<HVecField> {
    let h = grid.h();
    let kmax = ((grid.nx().min(grid.ny()) / 3) as i32).clamp(1, 4);
    let mut comp = || {
        let mut terms = Vec::new();
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                let a: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                terms.push((f64::from(k1), f64::from(k2), a, p));
            }
        }
        eval_on_grid(grid, move |x1, x2, x3| {
            let z = (x3 + h) / h;
            terms
                .iter()
                .map(|(k1, k2, a, p)| {
                    let ph = k1 * x1 + k2 * x2;
                    (a[0] * ph.cos() + a[1] * ph.sin()) * (p[0] + p[1] * (PI * z).cos() + p[2] * z * z)
                })
                .sum()
        })
    };
    let c1 = comp()?;
    let c2 = comp()?;
    HVecField::new(c1, c2)
}

pub fn projection_stats(dims: (usize, usize, usize), n_fields: usize, seed: u64) -> Result<ProjectionStats> {
    let g = make_grid(dims.0, dims.1, dims.2, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ProjectionStats::default();
    for _ in 0..n_fields {
        let f = random_smooth_field(&g, &mut rng)?;
        let nf = l2_norm_vec(&f);
        let p = hydrostatic_project(&f);
        let pp = hydrostatic_project(&p);
        s.idempotency = s.idempotency.max(l2_norm_vec(&pp.sub(&p)) / nf);
        s.contraction = s.contraction.max(l2_norm_vec(&p) / nf);
        let (a, b) = vertical_average_vec(&p);
        let div = div_horizontal_2d(&a, &b).l2_norm_sq().sqrt();
        let h1 = (l2_norm_vec(&f).powi(2) + h1_norm_sq_vec(&f)).sqrt();
        s.divergence = s.divergence.max(div / h1);
    }
    Ok(s)
}

pub fn projection_suite(grids: &[(usize, usize, usize)]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &d in grids {
        let s = projection_stats(d, 100, 2024)?;
        let tag = format!("@{}x{}x{}", d.0, d.1, d.2);
        out.push(Check::below(&format!("projection_idempotency{tag}"), s.idempotency, 1e-12, "100 random fields".into()));
        out.push(Check::below(&format!("projection_contraction{tag}"), s.contraction, 1.0 + 1e-12, String::new()));
        out.push(Check::below(&format!("projection_divergence{tag}"), s.divergence, 1e-10, "relative to H1 norm".into()));
    }
    Ok(out)
}

// -------------------------------------------------------------------- kadlec

/// Relative residual for `f = cos x₁ cos 2x₂ cos(π(x₃+h)/h)` with the
/// Hessian evaluated in closed form (`β = 0`).
pub fn kadlec_symbolic_neumann(dims: (usize, usize, usize)) -> Result<f64> {
    let h = 1.0;
    let g = make_grid(dims.0, dims.1, dims.2, h)?;
    let q = PI / h;
    let c = move |z: f64| (q * (z + h)).cos();
    let s = move |z: f64| (q * (z + h)).sin();
    let hess = Hessian::from_fn(&g, |x1, x2, z| {
        let (a, b) = (x1.cos(), (2.0 * x2).cos());
        let (da, db) = (-x1.sin(), -2.0 * (2.0 * x2).sin());
        [-a * b * c(z), da * db * c(z), -q * da * b * s(z), -4.0 * a * b * c(z), -q * a * db * s(z), -q * q * a * b * c(z)]
    })?;
    let top = eval_on_grid(&g, |x1, x2, _| x1.cos() * (2.0 * x2).cos() * c(0.0))?;
    Ok(kadlec_residual(&hess, &top_gradient(&top), 0.0).relative)
}

/// Discrete relative residuals for a Robin-compatible field (`β = 1`,
/// `h = 1`): `f = cos x₁·(cos(π(x₃+1)) + (x₃+1)²/3)`, which satisfies
/// `∂₃f = 0` at the bottom and `∂₃f + f = 0` at the top.
pub fn kadlec_robin_residuals(nx: usize, nzs: &[usize]) -> Result<Vec<f64>> {
    let profile = |z: f64| (PI * (z + 1.0)).cos() + (z + 1.0).powi(2) / 3.0;
    nzs.iter()
        .map(|&nz| {
            let g = make_grid(nx, nx, nz, 1.0)?;
            let f = eval_on_grid(&g, |x1, _, z| x1.cos() * profile(z))?;
            Ok(kadlec_discrete(&f, 1.0, VerticalBc::Robin(1.0)).relative)
        })
        .collect()
}

pub fn kadlec_suite(grids: &[(usize, usize, usize)]) -> Result<Vec<Check>> {
    let sym_grid = grids.iter().copied().max_by_key(|d| d.2).unwrap_or((32, 32, 33));
    let r0 = kadlec_symbolic_neumann(sym_grid)?;
    let mut out = vec![Check::below(
        "kadlec_beta0_symbolic",
        r0,
        1e-6,
        format!("@{}x{}x{}", sym_grid.0, sym_grid.1, sym_grid.2),
    )];
    let mut nzs: Vec<usize> = grids.iter().map(|d| d.2).collect();
    nzs.sort_unstable();
    nzs.dedup();
    if nzs.len() < 2 {
        nzs = vec![17, 33];
    }
    let errs = kadlec_robin_residuals(8, &nzs)?;
    let ord = observed_orders(&errs);
    let worst = ord.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Check::at_least("kadlec_beta1_order", worst, 1.9, format!("nz {nzs:?} residuals {}", fmt_list(&errs))));
    Ok(out)
}

// -------------------------------------------------------------- cancellation

/// Constrained smooth `v`: a stream-function part plus a potential part
/// with zero vertical mean, plus an x₃-dependent shear.
pub fn cancellation_fields(dims: (usize, usize, usize)) -> Result<SimState> {
    let h = 1.0;
    let g = make_grid(dims.0, dims.1, dims.2, h)?;
    let cz = move |z: f64| (PI * (z + h) / h).cos();
    let v = HVecField::from_fns(
        &g,
        move |x1, x2, z| {
            let psi_y = -x1.sin() * x2.sin() - 2.0 * (2.0 * x2).sin();
            let chi_x = -(x1 + x2).sin() + 2.0 * (2.0 * x1).cos();
            -psi_y + chi_x * cz(z) + 0.3 * z * z
        },
        move |x1, x2, z| {
            let psi_x = x1.cos() * x2.cos();
            let chi_y = -(x1 + x2).sin();
            psi_x + chi_y * cz(z)
        },
    )?;
    let th = eval_on_grid(&g, |x1, x2, z| {
        (x1 - x2).cos() * z.exp() + (x2 + 0.3).cos() * z * z + (x1 + 0.7).sin() * (z + 1.0).powi(3)
    })?;
    SimState::new(v, th, 0)
}

/// `(cancellation_v, cancellation_theta)` on each grid.
pub fn cancellation_residuals(grids: &[(usize, usize, usize)]) -> Result<Vec<(f64, f64)>> {
    grids
        .iter()
        .map(|&d| {
            let s = cancellation_fields(d)?;
            let r = identity_residuals(&s, &NoiseBasis::zero(s.grid(), 1)?);
            Ok((r["cancellation_v"], r["cancellation_theta"]))
        })
        .collect()
}

pub fn cancellation_suite(grids: &[(usize, usize, usize)]) -> Result<Vec<Check>> {
    let grids = if grids.len() < 2 { vec![(8, 8, 9), (16, 16, 17), (32, 32, 33)] } else { grids.to_vec() };
    let res = cancellation_residuals(&grids)?;
    let mut out = Vec::new();
    for (name, pick) in [("cancellation_v_order", 0), ("cancellation_theta_order", 1)] {
        let errs: Vec<f64> = res.iter().map(|r| if pick == 0 { r.0 } else { r.1 }).collect();
        let worst = observed_orders(&errs).into_iter().fold(f64::INFINITY, f64::min);
        out.push(Check::at_least(name, worst, 1.9, format!("residuals {}", fmt_list(&errs))));
    }
    Ok(out)
}

// --------------------------------------------------------------- θ-only toy

/// Ensemble statistics of the linear temperature toy.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ToyStats {
    pub n_traj: usize,
    pub dt: f64,
    /// Mean and standard error of `‖θ_T‖²`.
    pub mean_sq: f64,
    pub se_sq: f64,
    /// Mean and standard error of the energy-balance residual.
    pub residual: f64,
    pub residual_se: f64,
}

/// Linear temperature equation `dθ = Δθ dt + (ψ·∇)θ ∘dB` (or `dB` in Itô
/// mode) with `ψ = (c, 0, 0)`, `v ≡ 0`, no buoyancy, `θ₀ = cos x₁`, on an
/// 8×8×5 grid.
pub fn theta_toy(c: f64, dt: f64, t_final: f64, n_traj: usize, mode: NoiseMode, seed: u64) -> Result<ToyStats> {
    let g = make_grid(8, 8, 5, 1.0)?;
    let basis = NoiseBasis::constant(&g, &[[0.0; 3]], &[[c, 0.0, 0.0]])?;
    let driver = BrownianDriver::new(seed, 1, dt)?;
    let cfg = StepperConfig::new(dt, 0.0).with_mode(mode).with_kappa(ScalarField::zeros(&g));
    let stepper = Stepper::new(cfg, basis, ForcingSpec::zero(), driver)?;
    let theta0 = eval_on_grid(&g, |x1, _, _| x1.cos())?;
    let ics = SimState::new(HVecField::zeros(&g), theta0, 0)?;
    let n_steps = (t_final / dt).round() as u64;
    let opts = RunOptions::new(n_steps)
        .with_cadence(n_steps.max(1))
        .with_energy_balance(true)
        .with_threshold(f64::INFINITY);
    let outs = run_ensemble(&stepper, |_| Ok(ics.clone()), 0..n_traj as u64, &opts)?;
    let sq: Vec<f64> = outs.iter().map(|o| inner(&o.final_state.theta, &o.final_state.theta)).collect();
    let res: Vec<f64> = outs.iter().map(|o| o.records.last().map_or(f64::NAN, |r| r.energy.residual())).collect();
    let (mean_sq, se_sq) = mean_se(&sq);
    let (residual, residual_se) = mean_se(&res);
    Ok(ToyStats { n_traj, dt, mean_sq, se_sq, residual, residual_se })
}

pub fn strat_suite(n_traj: usize) -> Result<Vec<Check>> {
    let (c, dt, t) = (0.5, 5e-4, 0.1);
    let corr = theta_toy(c, dt, t, n_traj, NoiseMode::StratonovichCorrected, 7)?;
    let heun = theta_toy(c, dt, t, n_traj, NoiseMode::StratonovichHeun, 7)?;
    let gap = (corr.mean_sq - heun.mean_sq).abs();
    let se = corr.se_sq.hypot(heun.se_sq);
    let mut out = vec![Check::below(
        "strat_vs_heun_gap_over_3se",
        gap / (3.0 * se),
        1.0 + f64::EPSILON,
        format!("corrected {:.8} heun {:.8} se {:.3e} ({n_traj} trajectories)", corr.mean_sq, heun.mean_sq, se),
    )];

    let g = make_grid(16, 16, 5, 1.0)?;
    let basis = crate::noise::make_kraichnan_basis(&g, 4, 3.0, 0.6, 9)?;
    let s = strat_coefficients(&basis);
    let v = HVecField::from_fns(&g, |x1, x2, x3| (x1 + x2).sin() * (1.0 + x3), |x1, _, _| x1.cos())?;
    let got = hydrostatic_project(&strat_correction_v(&v, &s, &basis)?);
    let want = hydrostatic_project(&composed_correction_v(&v, &basis));
    out.push(Check::below(
        "strat_v_correction_vs_composition",
        l2_norm_vec(&got.sub(&want)) / l2_norm_vec(&want),
        1e-10,
        "Kraichnan basis, 4 modes".into(),
    ));
    Ok(out)
}

/// Itô toy at `dt` and `dt/2`.
pub fn energy_pair(n_traj: usize, dt: f64) -> Result<(ToyStats, ToyStats)> {
    let a = theta_toy(0.5, dt, 0.1, n_traj, NoiseMode::Ito, 11)?;
    let b = theta_toy(0.5, dt / 2.0, 0.1, n_traj, NoiseMode::Ito, 11)?;
    Ok((a, b))
}

pub fn energy_suite(n_traj: usize) -> Result<Vec<Check>> {
    let (a, b) = energy_pair(n_traj, 5e-4)?;
    let bound = 0.6 * a.residual.abs() + 3.0 * b.residual_se;
    let detail = format!("R(dt) = {:.4e} ± {:.1e}, R(dt/2) = {:.4e} ± {:.1e}", a.residual, a.residual_se, b.residual, b.residual_se);
    Ok(vec![
        Check::below("energy_residual_halving", b.residual.abs(), bound, detail.clone()),
        Check::below("energy_residual_decreasing", b.residual.abs(), a.residual.abs(), detail),
    ])
}

/// Run `suite` (or every suite for [`Suite::All`]). `grids` overrides
/// the default resolutions where a suite uses them; `n_traj` sizes the
/// ensemble suites.
pub fn run_suite(suite: Suite, grids: &[(usize, usize, usize)], n_traj: usize) -> Result<Vec<SuiteReport>> {
    let list: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    list.into_iter()
        .map(|s| {
            let start = Instant::now();
            let checks = match s {
                Suite::Projection => projection_suite(if grids.is_empty() { &[(16, 16, 9)] } else { grids })?,
                Suite::Kadlec => kadlec_suite(if grids.is_empty() { &[(32, 32, 33), (32, 32, 17)] } else { grids })?,
                Suite::Cancellation => cancellation_suite(grids)?,
                Suite::Strat => strat_suite(n_traj)?,
                Suite::Energy => energy_suite(n_traj)?,
                Suite::All => unreachable!(),
            };
            Ok(SuiteReport { suite: s.name().into(), checks, seconds: start.elapsed().as_secs_f64() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lists_parse() {
        assert_eq!(parse_grids("8x8x9, 16x16x17").unwrap(), vec![(8, 8, 9), (16, 16, 17)]);
        assert!(parse_grids("8x8").is_err());
        assert!(parse_grids("axbxc").is_err());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn orders_of_exact_halving() {
        assert_eq!(observed_orders(&[4.0, 1.0, 0.25]), vec![2.0, 2.0]);
    }

    #[test]
    fn small_projection_run() {
        let s = projection_stats((8, 8, 5), 3, 1).unwrap();
        assert!(s.idempotency < 1e-12 && s.contraction <= 1.0 + 1e-12 && s.divergence < 1e-10);
    }
}

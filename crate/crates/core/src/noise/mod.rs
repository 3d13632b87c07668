//! Transport-noise coefficient families `φₙ`, `ψₙ`, `γₙ`, their
//! admissibility checks, the Itô–Stratonovich coefficient algebra and the
//! counter-based Brownian driver.

mod assumptions;
mod driver;
mod strat;

pub use assumptions::{check_assumptions, AssumptionReport, PARABOLICITY_LIMIT};
pub use driver::{mix64, sample_increments, trajectory_seed, BrownianDriver};
pub use strat::{strat_coefficients, StratCoefficients};

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::domain::{Grid, ScalarField};
use crate::error::{HydroError, Result};
use crate::operators::{d1, d2, trace_bottom, trace_top};

/// Structural properties detected exactly at construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct NoiseFlags {
    /// `φₙ¹, φₙ²` and all `γₙ` are constant along every vertical column.
    pub phi_h_x3_independent: bool,
    /// `φₙ³ = 0` on the top and bottom slices.
    pub phi3_vanishes_on_boundary: bool,
    /// `ψₙ³ = 0` on the top and bottom slices.
    pub psi3_vanishes_on_boundary: bool,
}

/// `N` retained noise modes. Mode `n` carries a velocity advector `φₙ`, a
/// temperature advector `ψₙ` and the 2×2 turbulent-pressure weights `γₙ`.
#[derive(Clone, Debug)]
pub struct NoiseBasis {
    grid: Arc<Grid>,
    phi: Vec<[ScalarField; 3]>,
    psi: Vec<[ScalarField; 3]>,
    gamma: Vec<[[ScalarField; 2]; 2]>,
    flags: NoiseFlags,
}

/// Parameters of the random Fourier synthesis in [`NoiseBasis::kraichnan`].
#[derive(Clone, Debug, PartialEq)]
pub struct KraichnanParams {
    pub n_modes: usize,
    /// Spectral decay exponent `s`; amplitudes scale like `|k|^{−s}`.
    pub decay: f64,
    /// Amplitude of `φ`.
    pub sigma: f64,
    /// Amplitude of `ψ` (independent draws).
    pub psi_sigma: f64,
    /// Relative amplitude of a vertical component `φ³ ∝ sin(π(x₃+h)/h)`.
    /// Zero keeps the advecting field horizontal.
    pub vertical: f64,
    pub seed: u64,
}

impl KraichnanParams {
    pub fn new(n_modes: usize, decay: f64, sigma: f64, seed: u64) -> Self {
        KraichnanParams { n_modes, decay, sigma, psi_sigma: sigma, vertical: 0.0, seed }
    }
}

fn zero3(grid: &Arc<Grid>) -> [ScalarField; 3] {
    let z = ScalarField::zeros(grid);
    [z.clone(), z.clone(), z]
}

fn zero22(grid: &Arc<Grid>) -> [[ScalarField; 2]; 2] {
    let z = ScalarField::zeros(grid);
    [[z.clone(), z.clone()], [z.clone(), z]]
}

fn vanishes_on_walls(f: &ScalarField) -> bool {
    trace_top(f).values().iter().all(|&v| v == 0.0) && trace_bottom(f).values().iter().all(|&v| v == 0.0)
}

impl NoiseBasis {
    /// Validate shapes and finiteness, then detect the structural flags.
    pub fn from_fields(
        grid: &Arc<Grid>,
        phi: Vec<[ScalarField; 3]>,
        psi: Vec<[ScalarField; 3]>,
        gamma: Vec<[[ScalarField; 2]; 2]>,
    ) -> Result<Self> {
        let n = phi.len();
        if n == 0 {
            return Err(HydroError::InvalidNoise("at least one mode is required".into()));
        }
        if psi.len() != n || gamma.len() != n {
            return Err(HydroError::InvalidNoise(format!(
                "mode count mismatch: {} φ, {} ψ, {} γ",
                n,
                psi.len(),
                gamma.len()
            )));
        }
        let all = phi
            .iter()
            .flatten()
            .chain(psi.iter().flatten())
            .chain(gamma.iter().flatten().flatten());
        for f in all {
            if !f.grid().same_shape(grid) {
                return Err(HydroError::ShapeMismatch("noise field on a different grid".into()));
            }
            f.check_finite("noise coefficient")?;
        }
        let flags = NoiseFlags {
            phi_h_x3_independent: phi.iter().all(|p| p[0].is_x3_independent() && p[1].is_x3_independent())
                && gamma.iter().flatten().flatten().all(|g| g.is_x3_independent()),
            phi3_vanishes_on_boundary: phi.iter().all(|p| vanishes_on_walls(&p[2])),
            psi3_vanishes_on_boundary: psi.iter().all(|p| vanishes_on_walls(&p[2])),
        };
        Ok(NoiseBasis { grid: grid.clone(), phi, psi, gamma, flags })
    }

    /// `N` identically zero modes.
    pub fn zero(grid: &Arc<Grid>, n_modes: usize) -> Result<Self> {
        Self::from_fields(
            grid,
            vec![zero3(grid); n_modes],
            vec![zero3(grid); n_modes],
            vec![zero22(grid); n_modes],
        )
    }

    /// Spatially constant modes; `phi` and `psi` must have equal length
    /// and `γ = 0`.
    pub fn constant(grid: &Arc<Grid>, phi: &[[f64; 3]], psi: &[[f64; 3]]) -> Result<Self> {
        if phi.len() != psi.len() {
            return Err(HydroError::InvalidNoise("φ and ψ need the same number of modes".into()));
        }
        let lift = |c: &[f64; 3]| -> [ScalarField; 3] { std::array::from_fn(|m| ScalarField::constant(grid, c[m])) };
        Self::from_fields(
            grid,
            phi.iter().map(lift).collect(),
            psi.iter().map(lift).collect(),
            vec![zero22(grid); phi.len()],
        )
    }

    /// Random Fourier synthesis of a horizontally divergence-free
    /// advecting field with amplitudes `σ|k|^{−s}ξ`, `ξ ~ N(0, 1)`.
    ///
    /// Wavevectors are taken from the half plane in order of increasing
    /// `|k|`; each contributes a cosine and a sine mode with direction
    /// `k^⊥/|k|`. The horizontal components do not depend on x₃.
    pub fn kraichnan(grid: &Arc<Grid>, p: &KraichnanParams) -> Result<Self> {
        if !(p.decay > 2.5) {
            return Err(HydroError::InvalidNoise(format!(
                "spectral decay s must exceed 5/2 (got {})",
                p.decay
            )));
        }
        if p.n_modes == 0 {
            return Err(HydroError::InvalidNoise("at least one mode is required".into()));
        }
        if !(p.sigma >= 0.0 && p.psi_sigma >= 0.0 && p.sigma.is_finite() && p.psi_sigma.is_finite()) {
            return Err(HydroError::InvalidNoise("amplitudes must be finite and non-negative".into()));
        }
        let kmax_x = (grid.nx() / 2) as i64 - 1;
        let kmax_y = (grid.ny() / 2) as i64 - 1;
        let mut waves: Vec<(i64, i64)> = Vec::new();
        for kx in 0..=kmax_x {
            for ky in -kmax_y..=kmax_y {
                if kx > 0 || ky > 0 {
                    waves.push((kx, ky));
                }
            }
        }
        waves.sort_by_key(|&(kx, ky)| (kx * kx + ky * ky, kx, ky));
        let needed = p.n_modes.div_ceil(2);
        if needed > waves.len() {
            return Err(HydroError::InvalidNoise(format!(
                "{} modes need {} wavevectors but the grid resolves only {}",
                p.n_modes,
                needed,
                waves.len()
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut phi = Vec::with_capacity(p.n_modes);
        let mut psi = Vec::with_capacity(p.n_modes);
        let nz = grid.nz();
        for n in 0..p.n_modes {
            let (kx, ky) = waves[n / 2];
            let sine = n % 2 == 1;
            let kn = ((kx * kx + ky * ky) as f64).sqrt();
            let (ex, ey) = (-(ky as f64) / kn, kx as f64 / kn);
            let base = kn.powf(-p.decay);
            let a_phi = p.sigma * base * draw();
            let a_vert = p.sigma * base * p.vertical * draw();
            let a_psi = p.psi_sigma * base * draw();
            let a_psi_vert = p.psi_sigma * base * p.vertical * draw();
            let synth = |amp_h: f64, amp_v: f64| -> [ScalarField; 3] {
                let mut c = [
                    Vec::with_capacity(grid.n_points()),
                    Vec::with_capacity(grid.n_points()),
                    Vec::with_capacity(grid.n_points()),
                ];
                for i in 0..grid.nx() {
                    for j in 0..grid.ny() {
                        let phase = kx as f64 * grid.x1(i) + ky as f64 * grid.x2(j);
                        let wave = if sine { phase.sin() } else { phase.cos() };
                        for k in 0..nz {
                            c[0].push(amp_h * ex * wave);
                            c[1].push(amp_h * ey * wave);
                            let prof = if k == 0 || k + 1 == nz {
                                0.0
                            } else {
                                (PI * (grid.x3(k) + grid.h()) / grid.h()).sin()
                            };
                            c[2].push(amp_v * prof * wave);
                        }
                    }
                }
                c.map(|v| ScalarField::from_raw(grid, v))
            };
            phi.push(synth(a_phi, a_vert));
            psi.push(synth(a_psi, a_psi_vert));
        }
        Self::from_fields(grid, phi, psi, vec![zero22(grid); p.n_modes])
    }

    /// Multiply every coefficient field by `λ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let s3 = |f: &[ScalarField; 3]| f.clone().map(|c| c.scale(lambda));
        NoiseBasis {
            grid: self.grid.clone(),
            phi: self.phi.iter().map(s3).collect(),
            psi: self.psi.iter().map(s3).collect(),
            gamma: self
                .gamma
                .iter()
                .map(|g| g.clone().map(|row| row.map(|c| c.scale(lambda))))
                .collect(),
            flags: self.flags,
        }
    }

    /// Replace the turbulent-pressure weights.
    pub fn with_gamma(&self, gamma: Vec<[[ScalarField; 2]; 2]>) -> Result<Self> {
        Self::from_fields(&self.grid, self.phi.clone(), self.psi.clone(), gamma)
    }

    /// `γₙ^{ℓ,m} = scale·∂_ℓ φₙ^m`, the weights under which the
    /// turbulent-pressure term reproduces the Stratonovich pressure
    /// correction (use `scale = 1/2`).
    pub fn with_gamma_from_phi(&self, scale: f64) -> Result<Self> {
        let gamma = self
            .phi
            .iter()
            .map(|p| {
                let d = |l: usize, m: usize| {
                    let f = if l == 0 { d1(&p[m]) } else { d2(&p[m]) };
                    f.scale(scale)
                };
                [[d(0, 0), d(0, 1)], [d(1, 0), d(1, 1)]]
            })
            .collect();
        self.with_gamma(gamma)
    }

    /// Replace `ψ` (e.g. to drive only the temperature).
    pub fn with_psi(&self, psi: Vec<[ScalarField; 3]>) -> Result<Self> {
        Self::from_fields(&self.grid, self.phi.clone(), psi, self.gamma.clone())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self, n: usize) -> &[ScalarField; 3] {
        &self.phi[n]
    }

    pub fn psi(&self, n: usize) -> &[ScalarField; 3] {
        &self.psi[n]
    }

    pub fn gamma(&self, n: usize) -> &[[ScalarField; 2]; 2] {
        &self.gamma[n]
    }

    pub fn flags(&self) -> NoiseFlags {
        self.flags
    }

    pub fn phi_is_zero(&self) -> bool {
        self.phi.iter().flatten().all(|f| f.max_abs() == 0.0)
    }

    pub fn psi_is_zero(&self) -> bool {
        self.psi.iter().flatten().all(|f| f.max_abs() == 0.0)
    }

    pub fn gamma_is_zero(&self) -> bool {
        self.gamma.iter().flatten().flatten().all(|f| f.max_abs() == 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.phi_is_zero() && self.psi_is_zero() && self.gamma_is_zero()
    }
}

/// Kraichnan basis with `ψ` drawn at the same amplitude as `φ`.
pub fn make_kraichnan_basis(grid: &Arc<Grid>, n_modes: usize, decay: f64, sigma: f64, seed: u64) -> Result<NoiseBasis> {
    NoiseBasis::kraichnan(grid, &KraichnanParams::new(n_modes, decay, sigma, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;
    use crate::operators::div_h;
    use crate::domain::HVecField;

    #[test]
    fn kraichnan_is_deterministic_and_divergence_free() {
        let g = make_grid(16, 16, 9, 1.0).unwrap();
        let a = make_kraichnan_basis(&g, 6, 3.0, 0.7, 42).unwrap();
        let b = make_kraichnan_basis(&g, 6, 3.0, 0.7, 42).unwrap();
        for n in 0..6 {
            for m in 0..3 {
                assert_eq!(a.phi(n)[m].values(), b.phi(n)[m].values());
            }
            let u = HVecField::new(a.phi(n)[0].clone(), a.phi(n)[1].clone()).unwrap();
            assert!(div_h(&u).max_abs() < 1e-12);
        }
        let flags = a.flags();
        assert!(flags.phi_h_x3_independent && flags.phi3_vanishes_on_boundary && flags.psi3_vanishes_on_boundary);
        let c = make_kraichnan_basis(&g, 6, 3.0, 0.7, 43).unwrap();
        assert_ne!(a.phi(0)[0].values(), c.phi(0)[0].values());
    }

    #[test]
    fn kraichnan_vertical_component_vanishes_on_walls() {
        let g = make_grid(8, 8, 9, 2.0).unwrap();
        let mut p = KraichnanParams::new(4, 3.0, 1.0, 7);
        p.vertical = 0.5;
        let b = NoiseBasis::kraichnan(&g, &p).unwrap();
        assert!(b.flags().phi3_vanishes_on_boundary);
        assert!(b.phi(0)[2].max_abs() > 0.0);
    }

    #[test]
    fn kraichnan_rejects_rough_spectra_and_overflow() {
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let err = make_kraichnan_basis(&g, 2, 2.5, 1.0, 0).unwrap_err();
        assert!(err.to_string().contains("5/2"));
        assert!(make_kraichnan_basis(&g, 1000, 3.0, 1.0, 0).is_err());
        assert!(make_kraichnan_basis(&g, 0, 3.0, 1.0, 0).is_err());
    }

    #[test]
    fn zero_sigma_gives_zero_basis() {
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let b = make_kraichnan_basis(&g, 1, 3.0, 0.0, 5).unwrap();
        assert!(b.is_zero());
    }

    #[test]
    fn flags_detect_vertical_structure() {
        let g = make_grid(4, 4, 5, 1.0).unwrap();
        let dep = crate::domain::eval_on_grid(&g, |_, _, x3| x3).unwrap();
        let z = ScalarField::zeros(&g);
        let b = NoiseBasis::from_fields(
            &g,
            vec![[dep.clone(), z.clone(), dep.clone()]],
            vec![[z.clone(), z.clone(), z.clone()]],
            vec![zero22(&g)],
        )
        .unwrap();
        assert!(!b.flags().phi_h_x3_independent);
        assert!(!b.flags().phi3_vanishes_on_boundary);
        assert!(b.flags().psi3_vanishes_on_boundary);
    }

    #[test]
    fn mode_count_mismatch_rejected() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        assert!(NoiseBasis::from_fields(&g, vec![zero3(&g)], vec![], vec![zero22(&g)]).is_err());
        assert!(NoiseBasis::constant(&g, &[[1.0, 0.0, 0.0]], &[]).is_err());
    }
}

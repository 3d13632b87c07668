//! Horizontal Helmholtz decomposition on 𝕋² and the hydrostatic projection
//! `ℙf = f − ℚ_H[f̄]` on the cylinder.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::{forward_h, inverse_h, vertical_average_vec};
use crate::domain::{Grid, HVecField, HorizontalField};

/// Output of [`helmholtz_h`]: `f = div_free + grad_part`, `grad_part = ∇Ψ`.
#[derive(Clone, Debug)]
pub struct HelmholtzParts {
    pub div_free: (HorizontalField, HorizontalField),
    pub grad_part: (HorizontalField, HorizontalField),
    /// Zero-mean potential Ψ.
    pub potential: HorizontalField,
}

/// Per-mode inverse Laplacian multipliers. Modes whose derivative
/// wavenumber vanishes (the mean and the pure Nyquist modes) carry no
/// gradient part and are never divided.
#[derive(Clone, Debug)]
pub struct ProjectionWorkspace {
    grid: Arc<Grid>,
    inv_k2: Vec<f64>,
    zero_mode: Vec<bool>,
}

impl ProjectionWorkspace {
    pub fn new(grid: &Arc<Grid>) -> Self {
        let ny = grid.ny();
        let mut inv_k2 = vec![0.0; grid.n_horizontal()];
        let mut zero_mode = vec![false; grid.n_horizontal()];
        for p in 0..grid.n_horizontal() {
            let k2 = grid.kx(p / ny).powi(2) + grid.ky(p % ny).powi(2);
            if k2 == 0.0 {
                zero_mode[p] = true;
            } else {
                inv_k2[p] = 1.0 / k2;
            }
        }
        ProjectionWorkspace { grid: grid.clone(), inv_k2, zero_mode }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// True for modes flagged by the zero-mean constraint.
    pub fn is_zero_mode(&self, i: usize, j: usize) -> bool {
        self.zero_mode[i * self.grid.ny() + j]
    }

    /// Spectra of `Ψ` and `∇Ψ` for a horizontal pair.
    fn solve(&self, f1: &HorizontalField, f2: &HorizontalField) -> [Vec<Complex64>; 3] {
        let g = &self.grid;
        let ny = g.ny();
        let a = forward_h(f1);
        let b = forward_h(f2);
        let n = g.n_horizontal();
        let mut psi = vec![super::ZERO; n];
        let mut q1 = vec![super::ZERO; n];
        let mut q2 = vec![super::ZERO; n];
        for p in 0..n {
            if self.zero_mode[p] {
                continue;
            }
            let (kx, ky) = (g.kx(p / ny), g.ky(p % ny));
            // −|k|² Ψ̂ = i k·f̂
            let kf = a[p] * kx + b[p] * ky;
            psi[p] = Complex64::new(0.0, -1.0) * kf * self.inv_k2[p];
            let r = kf * self.inv_k2[p];
            q1[p] = r * kx;
            q2[p] = r * ky;
        }
        [psi, q1, q2]
    }

    /// Zero-mean potential `Ψ_f` with `Δ_H Ψ = div_H f`.
    pub fn potential(&self, f1: &HorizontalField, f2: &HorizontalField) -> HorizontalField {
        let [psi, _, _] = self.solve(f1, f2);
        inverse_h(&self.grid, psi)
    }

    pub fn helmholtz(&self, f1: &HorizontalField, f2: &HorizontalField) -> HelmholtzParts {
        let [psi, q1, q2] = self.solve(f1, f2);
        let g1 = inverse_h(&self.grid, q1);
        let g2 = inverse_h(&self.grid, q2);
        HelmholtzParts {
            div_free: (f1.sub(&g1), f2.sub(&g2)),
            grad_part: (g1, g2),
            potential: inverse_h(&self.grid, psi),
        }
    }

    /// `ℚf = ℚ_H[f̄]`, an x₃-independent horizontal pair.
    pub fn q(&self, f: &HVecField) -> (HorizontalField, HorizontalField) {
        let (m1, m2) = vertical_average_vec(f);
        let [_, q1, q2] = self.solve(&m1, &m2);
        (inverse_h(&self.grid, q1), inverse_h(&self.grid, q2))
    }

    /// `ℚf` together with its potential (the turbulent pressure when `f`
    /// is a transport-noise term).
    pub fn q_with_potential(&self, f: &HVecField) -> ((HorizontalField, HorizontalField), HorizontalField) {
        let (m1, m2) = vertical_average_vec(f);
        let [psi, q1, q2] = self.solve(&m1, &m2);
        (
            (inverse_h(&self.grid, q1), inverse_h(&self.grid, q2)),
            inverse_h(&self.grid, psi),
        )
    }

    /// `ℙf = f − lift(ℚf)`
    pub fn project(&self, f: &HVecField) -> HVecField {
        let (q1, q2) = self.q(f);
        HVecField::from_parts(f.c1().sub(&q1.lift()), f.c2().sub(&q2.lift()))
    }
}

/// Horizontal Helmholtz decomposition of a pair on 𝕋².
pub fn helmholtz_h(f1: &HorizontalField, f2: &HorizontalField) -> HelmholtzParts {
    ProjectionWorkspace::new(f1.grid()).helmholtz(f1, f2)
}

/// `ℙf`
pub fn hydrostatic_project(f: &HVecField) -> HVecField {
    ProjectionWorkspace::new(f.grid()).project(f)
}

/// `ℚf`
pub fn hydrostatic_q(f: &HVecField) -> (HorizontalField, HorizontalField) {
    ProjectionWorkspace::new(f.grid()).q(f)
}

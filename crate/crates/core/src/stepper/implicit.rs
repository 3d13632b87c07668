//! Per-mode vertical tridiagonal solves for `(I − dt Δ)u = r`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::domain::{Grid, ScalarField};
use crate::operators::{forward, inverse};

/// Vertical discretization of the implicit operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerticalScheme {
    /// Ghost-node stencil: Neumann at the bottom, Robin `∂₃u + αu = 0` at
    /// the top (`α = 0` gives Neumann).
    Stencil { alpha: f64 },
    /// Piecewise-linear Galerkin with consistent mass matrix; the Robin
    /// term enters as the boundary integral `α u(0) φ(0)`.
    ConsistentMass { alpha: f64 },
}

/// Factorized operators `(1 + dt|k|²)M − dt D₂` for every horizontal mode.
#[derive(Clone, Debug)]
pub struct ImplicitSolver {
    grid: Arc<Grid>,
    scheme: VerticalScheme,
    dt: f64,
    /// Sub-diagonal per row (shared by all modes up to the `|k|²` shift,
    /// stored per mode for simplicity).
    lower: Vec<f64>,
    /// Thomas super-diagonal factors `c'ₖ`.
    upper: Vec<f64>,
    /// Reciprocal pivots.
    pivot: Vec<f64>,
}

/// Rows `(a, b, c)` of the tridiagonal operator for `|k|² = k2`.
fn rows(nz: usize, dz: f64, dt: f64, k2: f64, scheme: VerticalScheme) -> Vec<(f64, f64, f64)> {
    let n = nz - 1;
    match scheme {
        VerticalScheme::Stencil { alpha } => {
            let s = dt / (dz * dz);
            let d = 1.0 + dt * k2;
            (0..nz)
                .map(|k| {
                    if k == 0 {
                        (0.0, d + 2.0 * s, -2.0 * s)
                    } else if k == n {
                        (-2.0 * s, d + 2.0 * s + 2.0 * dt * alpha / dz, 0.0)
                    } else {
                        (-s, d + 2.0 * s, -s)
                    }
                })
                .collect()
        }
        VerticalScheme::ConsistentMass { alpha } => {
            let m = 1.0 + dt * k2;
            let s = dt / dz;
            let (m_off, m_end, m_mid) = (m * dz / 6.0, m * dz / 3.0, 2.0 * m * dz / 3.0);
            (0..nz)
                .map(|k| {
                    if k == 0 {
                        (0.0, m_end + s, m_off - s)
                    } else if k == n {
                        (m_off - s, m_end + s + dt * alpha, 0.0)
                    } else {
                        (m_off - s, m_mid + 2.0 * s, m_off - s)
                    }
                })
                .collect()
        }
    }
}

/// `Mr` for the consistent mass matrix (without the `|k|²` factor).
fn apply_mass(col: &mut [Complex64], dz: f64) {
    let n = col.len();
    let src = col.to_vec();
    for k in 0..n {
        let mid = if k == 0 || k == n - 1 { dz / 3.0 } else { 2.0 * dz / 3.0 };
        let mut acc = src[k] * mid;
        if k > 0 {
            acc += src[k - 1] * (dz / 6.0);
        }
        if k + 1 < n {
            acc += src[k + 1] * (dz / 6.0);
        }
        col[k] = acc;
    }
}

impl ImplicitSolver {
    pub fn new(grid: &Arc<Grid>, dt: f64, scheme: VerticalScheme) -> Self {
        let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
        let nh = nx * ny;
        let mut lower = vec![0.0; nh * nz];
        let mut upper = vec![0.0; nh * nz];
        let mut pivot = vec![0.0; nh * nz];
        for i in 0..nx {
            for j in 0..ny {
                let k2 = grid.kx(i).powi(2) + grid.ky(j).powi(2);
                let r = rows(nz, grid.dz(), dt, k2, scheme);
                let base = (i * ny + j) * nz;
                let mut c_prev = 0.0;
                for (k, &(a, b, c)) in r.iter().enumerate() {
                    let p = 1.0 / (b - a * c_prev);
                    lower[base + k] = a;
                    pivot[base + k] = p;
                    c_prev = c * p;
                    upper[base + k] = c_prev;
                }
            }
        }
        ImplicitSolver { grid: grid.clone(), scheme, dt, lower, upper, pivot }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> VerticalScheme {
        self.scheme
    }

    /// Solve for `u` given the right-hand side `r` in physical space.
    pub fn solve(&self, rhs: &ScalarField) -> ScalarField {
        let g = &self.grid;
        let (nx, ny, nz) = (g.nx(), g.ny(), g.nz());
        let nh = nx * ny;
        let mut spec = forward(rhs);
        let mut col = vec![Complex64::new(0.0, 0.0); nz];
        for m in 0..nh {
            for (k, c) in col.iter_mut().enumerate() {
                *c = spec[k * nh + m];
            }
            if let VerticalScheme::ConsistentMass { .. } = self.scheme {
                apply_mass(&mut col, g.dz());
            }
            let base = m * nz;
            let mut prev = Complex64::new(0.0, 0.0);
            for k in 0..nz {
                prev = (col[k] - prev * self.lower[base + k]) * self.pivot[base + k];
                col[k] = prev;
            }
            for k in (0..nz - 1).rev() {
                let next = col[k + 1];
                col[k] -= next * self.upper[base + k];
            }
            for (k, c) in col.iter().enumerate() {
                spec[k * nh + m] = *c;
            }
        }
        inverse(g, spec)
    }
}

//! Spatial operators: spectral horizontal derivatives, second-order vertical
//! differences, vertical integrals and averages, traces, and the hydrostatic
//! projections.

mod kadlec;
mod projection;

pub use kadlec::{kadlec_ii_terms, kadlec_residual, top_gradient, Hessian, KadlecIiTerms, KadlecTerms};
pub use projection::{
    helmholtz_h, hydrostatic_project, hydrostatic_q, HelmholtzParts, ProjectionWorkspace,
};

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::domain::{Grid, HVecField, HorizontalField, ScalarField};
use crate::error::{HydroError, Result};

/// Vertical closure used by second-order vertical differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerticalBc {
    /// `∂₃f = 0` at both walls (mirror ghost nodes).
    Neumann,
    /// `∂₃f = 0` at the bottom and `∂₃f + αf = 0` at the top.
    Robin(f64),
    /// No boundary condition; one-sided second-order stencils.
    Free,
}

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Level-major spectrum of a cylinder field: index `k·nx·ny + i·ny + j`.
pub(crate) fn forward(f: &ScalarField) -> Vec<Complex64> {
    let g = f.grid();
    let (nz, nxy) = (g.nz(), g.n_horizontal());
    let mut buf = vec![ZERO; g.n_points()];
    for (p, col) in f.values().chunks(nz).enumerate() {
        for (k, &v) in col.iter().enumerate() {
            buf[k * nxy + p] = Complex64::new(v, 0.0);
        }
    }
    g.fft2_forward(&mut buf);
    buf
}

/// Inverse of [`forward`]; the imaginary part is discarded.
pub(crate) fn inverse(grid: &Arc<Grid>, mut buf: Vec<Complex64>) -> ScalarField {
    let (nz, nxy) = (grid.nz(), grid.n_horizontal());
    grid.fft2_inverse(&mut buf);
    let mut values = vec![0.0; grid.n_points()];
    for (p, col) in values.chunks_mut(nz).enumerate() {
        for (k, v) in col.iter_mut().enumerate() {
            *v = buf[k * nxy + p].re;
        }
    }
    ScalarField::from_raw(grid, values)
}

pub(crate) fn forward_h(f: &HorizontalField) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    f.grid().fft2_forward(&mut buf);
    buf
}

pub(crate) fn inverse_h(grid: &Arc<Grid>, mut buf: Vec<Complex64>) -> HorizontalField {
    grid.fft2_inverse(&mut buf);
    HorizontalField::from_raw(grid, buf.iter().map(|c| c.re).collect())
}

/// Multiply every level of a spectrum by `m(i, j)` in place.
pub(crate) fn multiply_levels(grid: &Grid, buf: &mut [Complex64], m: impl Fn(usize, usize) -> Complex64) {
    let ny = grid.ny();
    let mult: Vec<Complex64> = (0..grid.n_horizontal()).map(|p| m(p / ny, p % ny)).collect();
    for level in buf.chunks_mut(grid.n_horizontal()) {
        level.iter_mut().zip(&mult).for_each(|(c, &w)| *c *= w);
    }
}

fn apply_multiplier(f: &ScalarField, m: impl Fn(usize, usize) -> Complex64) -> ScalarField {
    let g = f.grid();
    let mut spec = forward(f);
    multiply_levels(g, &mut spec, m);
    inverse(g, spec)
}

/// `∂₁f`
pub fn d1(f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    apply_multiplier(f, |i, _| Complex64::new(0.0, g.kx(i)))
}

/// `∂₂f`
pub fn d2(f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    apply_multiplier(f, |_, j| Complex64::new(0.0, g.ky(j)))
}

/// `∇_H f = (∂₁f, ∂₂f)`
pub fn grad_h(f: &ScalarField) -> HVecField {
    let g = f.grid();
    let spec = forward(f);
    let mut s1 = spec.clone();
    let mut s2 = spec;
    multiply_levels(g, &mut s1, |i, _| Complex64::new(0.0, g.kx(i)));
    multiply_levels(g, &mut s2, |_, j| Complex64::new(0.0, g.ky(j)));
    HVecField::from_parts(inverse(g, s1), inverse(g, s2))
}

/// `div_H u = ∂₁u¹ + ∂₂u²`
pub fn div_h(u: &HVecField) -> ScalarField {
    let g = u.grid();
    let mut s1 = forward(u.c1());
    let s2 = forward(u.c2());
    let nxy = g.n_horizontal();
    let ny = g.ny();
    for (n, (a, b)) in s1.iter_mut().zip(&s2).enumerate() {
        let p = n % nxy;
        let (i, j) = (p / ny, p % ny);
        *a = Complex64::new(0.0, g.kx(i)) * *a + Complex64::new(0.0, g.ky(j)) * *b;
    }
    inverse(g, s1)
}

/// `Δ_H f`
pub fn laplace_h(f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    apply_multiplier(f, |i, j| Complex64::new(-(g.kx(i).powi(2) + g.ky(j).powi(2)), 0.0))
}

/// Apply a column operator to every vertical column.
fn map_columns(f: &ScalarField, op: impl Fn(&[f64], &mut [f64])) -> ScalarField {
    let nz = f.grid().nz();
    let mut out = vec![0.0; f.values().len()];
    for (src, dst) in f.values().chunks(nz).zip(out.chunks_mut(nz)) {
        op(src, dst);
    }
    ScalarField::from_raw(f.grid(), out)
}

pub(crate) fn d3_column(c: &[f64], out: &mut [f64], dz: f64) {
    let n = c.len();
    out[0] = (-3.0 * c[0] + 4.0 * c[1] - c[2]) / (2.0 * dz);
    for k in 1..n - 1 {
        out[k] = (c[k + 1] - c[k - 1]) / (2.0 * dz);
    }
    out[n - 1] = (3.0 * c[n - 1] - 4.0 * c[n - 2] + c[n - 3]) / (2.0 * dz);
}

pub(crate) fn d33_column(c: &[f64], out: &mut [f64], dz: f64, bc: VerticalBc) {
    let n = c.len();
    let dz2 = dz * dz;
    for k in 1..n - 1 {
        out[k] = ((c[k + 1] - c[k]) - (c[k] - c[k - 1])) / dz2;
    }
    let free_end = |a: f64, b: f64, c2: f64, d: Option<f64>| -> f64 {
        match d {
            Some(d) => (2.0 * a - 5.0 * b + 4.0 * c2 - d) / dz2,
            None => (a - 2.0 * b + c2) / dz2,
        }
    };
    match bc {
        VerticalBc::Neumann => {
            out[0] = (2.0 * c[1] - 2.0 * c[0]) / dz2;
            out[n - 1] = (2.0 * c[n - 2] - 2.0 * c[n - 1]) / dz2;
        }
        VerticalBc::Robin(alpha) => {
            out[0] = (2.0 * c[1] - 2.0 * c[0]) / dz2;
            out[n - 1] = (2.0 * c[n - 2] - 2.0 * c[n - 1] - 2.0 * dz * alpha * c[n - 1]) / dz2;
        }
        VerticalBc::Free => {
            let (d_lo, d_hi) = if n >= 4 { (Some(c[3]), Some(c[n - 4])) } else { (None, None) };
            out[0] = free_end(c[0], c[1], c[2], d_lo);
            out[n - 1] = free_end(c[n - 1], c[n - 2], c[n - 3], d_hi);
        }
    }
}

/// `∂₃f`: centered in the interior, one-sided second order at the walls.
pub fn d3(f: &ScalarField) -> ScalarField {
    let dz = f.grid().dz();
    map_columns(f, |c, o| d3_column(c, o, dz))
}

/// `∂²₃₃f` with ghost values chosen by `bc`.
pub fn d33(f: &ScalarField, bc: VerticalBc) -> ScalarField {
    let dz = f.grid().dz();
    map_columns(f, |c, o| d33_column(c, o, dz, bc))
}

/// `Δf = Δ_H f + ∂²₃₃f`
pub fn laplace(f: &ScalarField, bc: VerticalBc) -> ScalarField {
    let mut out = laplace_h(f);
    out.axpy(1.0, &d33(f, bc));
    out
}

/// Componentwise Laplacian of a velocity field. Velocities obey Neumann
/// conditions, so a Robin closure with nonzero α is rejected.
pub fn laplace_vec(u: &HVecField, bc: VerticalBc) -> Result<HVecField> {
    if matches!(bc, VerticalBc::Robin(a) if a != 0.0) {
        return Err(HydroError::RobinOnVector);
    }
    Ok(HVecField::from_parts(laplace(u.c1(), bc), laplace(u.c2(), bc)))
}

/// Keep horizontal modes with `3|k| ≤ n` in both directions (2/3 rule).
pub fn dealias(f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    apply_multiplier(f, |i, j| if dealias_keep(&g, i, j) { Complex64::new(1.0, 0.0) } else { ZERO })
}

#[inline]
pub(crate) fn dealias_keep(g: &Grid, i: usize, j: usize) -> bool {
    let (kx, ky) = g.wavenumber(i, j);
    3 * kx.unsigned_abs() as usize <= g.nx() && 3 * ky.unsigned_abs() as usize <= g.ny()
}

/// Trapezoidal vertical mean `(1/h)∫_{−h}^0 f dζ`.
pub fn vertical_average(f: &ScalarField) -> HorizontalField {
    let g = f.grid();
    let nz = g.nz();
    let values = f
        .values()
        .chunks(nz)
        .map(|col| col.iter().enumerate().map(|(k, v)| g.vertical_weight(k) * v).sum::<f64>() / g.h())
        .collect();
    HorizontalField::from_raw(g, values)
}

/// Vertical mean of both velocity components.
pub fn vertical_average_vec(u: &HVecField) -> (HorizontalField, HorizontalField) {
    (vertical_average(u.c1()), vertical_average(u.c2()))
}

/// `ṽ = v − v̄`
pub fn fluctuation(v: &HVecField) -> HVecField {
    let (m1, m2) = vertical_average_vec(v);
    HVecField::from_parts(v.c1().sub(&m1.lift()), v.c2().sub(&m2.lift()))
}

/// `∫_{−h}^{x₃} f dζ` by the cumulative trapezoid rule, zero at the bottom.
pub fn cumulative_integral(f: &ScalarField) -> ScalarField {
    let dz = f.grid().dz();
    map_columns(f, |c, o| {
        o[0] = 0.0;
        for k in 1..c.len() {
            o[k] = o[k - 1] + 0.5 * dz * (c[k - 1] + c[k]);
        }
    })
}

/// `w(v) = −∫_{−h}^{x₃} div_H v dζ`
pub fn w_of_v(v: &HVecField) -> ScalarField {
    cumulative_integral(&div_h(v)).scale(-1.0)
}

fn slice_at(f: &ScalarField, k: usize) -> HorizontalField {
    let nz = f.grid().nz();
    HorizontalField::from_raw(f.grid(), f.values().chunks(nz).map(|c| c[k]).collect())
}

/// `f(·, 0)`
pub fn trace_top(f: &ScalarField) -> HorizontalField {
    slice_at(f, f.grid().nz() - 1)
}

/// `f(·, −h)`
pub fn trace_bottom(f: &ScalarField) -> HorizontalField {
    slice_at(f, 0)
}

fn apply_multiplier_h(f: &HorizontalField, m: impl Fn(usize, usize) -> Complex64) -> HorizontalField {
    let g = f.grid();
    let mut spec = forward_h(f);
    let ny = g.ny();
    spec.iter_mut().enumerate().for_each(|(p, c)| *c *= m(p / ny, p % ny));
    inverse_h(g, spec)
}

/// Gradient of a field on 𝕋².
pub fn grad_horizontal_2d(f: &HorizontalField) -> (HorizontalField, HorizontalField) {
    let g = f.grid().clone();
    (
        apply_multiplier_h(f, |i, _| Complex64::new(0.0, g.kx(i))),
        apply_multiplier_h(f, |_, j| Complex64::new(0.0, g.ky(j))),
    )
}

/// `(∂₁₁f, ∂₁₂f, ∂₂₂f)` of a field on 𝕋².
pub fn hessian_horizontal_2d(f: &HorizontalField) -> (HorizontalField, HorizontalField, HorizontalField) {
    let g = f.grid().clone();
    (
        apply_multiplier_h(f, |i, _| Complex64::new(-g.kx(i) * g.kx(i), 0.0)),
        apply_multiplier_h(f, |i, j| Complex64::new(-g.kx(i) * g.ky(j), 0.0)),
        apply_multiplier_h(f, |_, j| Complex64::new(-g.ky(j) * g.ky(j), 0.0)),
    )
}

/// `∂₁a + ∂₂b` on 𝕋².
pub fn div_horizontal_2d(a: &HorizontalField, b: &HorizontalField) -> HorizontalField {
    let g = a.grid();
    let mut sa = forward_h(a);
    let sb = forward_h(b);
    let ny = g.ny();
    for (p, (x, y)) in sa.iter_mut().zip(&sb).enumerate() {
        *x = Complex64::new(0.0, g.kx(p / ny)) * *x + Complex64::new(0.0, g.ky(p % ny)) * *y;
    }
    inverse_h(g, sa)
}

//! Second-derivative bookkeeping and the Kadlec integral identities.
//!
//! A [`Hessian`] can come from closed-form derivatives of a test function
//! or from the discrete stencils of this module. The residual functions
//! only see the six second derivatives, so the same code measures both
//! quadrature error alone and the full discretization error.

use std::sync::Arc;

use super::{d1, d2, d3, d33, grad_horizontal_2d, trace_top, VerticalBc};
use crate::domain::{eval_on_grid, inner, Grid, HorizontalField, ScalarField, SymTensorField};
use crate::error::Result;

/// The six independent second derivatives of a scalar field.
#[derive(Clone, Debug)]
pub struct Hessian {
    pub d11: ScalarField,
    pub d12: ScalarField,
    pub d13: ScalarField,
    pub d22: ScalarField,
    pub d23: ScalarField,
    pub d33: ScalarField,
}

impl Hessian {
    /// Discrete Hessian: spectral in x₁, x₂; mixed terms are `∂ᵢ` of the
    /// vertical difference and `∂²₃₃` uses the ghost closure `bc`.
    pub fn from_field(f: &ScalarField, bc: VerticalBc) -> Self {
        let f1 = d1(f);
        let f2 = d2(f);
        let f3 = d3(f);
        Hessian {
            d11: d1(&f1),
            d12: d2(&f1),
            d13: d1(&f3),
            d22: d2(&f2),
            d23: d2(&f3),
            d33: d33(f, bc),
        }
    }

    /// Hessian sampled from closed-form second derivatives returned as
    /// `[∂₁₁, ∂₁₂, ∂₁₃, ∂₂₂, ∂₂₃, ∂₃₃]`.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [f64; 6]) -> Result<Self> {
        Ok(Hessian {
            d11: eval_on_grid(grid, |a, b, c| f(a, b, c)[0])?,
            d12: eval_on_grid(grid, |a, b, c| f(a, b, c)[1])?,
            d13: eval_on_grid(grid, |a, b, c| f(a, b, c)[2])?,
            d22: eval_on_grid(grid, |a, b, c| f(a, b, c)[3])?,
            d23: eval_on_grid(grid, |a, b, c| f(a, b, c)[4])?,
            d33: eval_on_grid(grid, |a, b, c| f(a, b, c)[5])?,
        })
    }

    /// Entry `∂²ᵢⱼ` for `i, j ∈ {0, 1, 2}`.
    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        match (i.min(j), i.max(j)) {
            (0, 0) => &self.d11,
            (0, 1) => &self.d12,
            (0, 2) => &self.d13,
            (1, 1) => &self.d22,
            (1, 2) => &self.d23,
            (2, 2) => &self.d33,
            _ => panic!("Hessian index ({i}, {j}) out of range"),
        }
    }

    /// `Σᵢⱼ ‖∂²ᵢⱼf‖²_{L²}`
    pub fn frobenius_sq(&self) -> f64 {
        let sq = |f: &ScalarField| inner(f, f);
        sq(&self.d11) + sq(&self.d22) + sq(&self.d33) + 2.0 * (sq(&self.d12) + sq(&self.d13) + sq(&self.d23))
    }

    /// Trace of the Hessian.
    pub fn laplacian(&self) -> ScalarField {
        let mut out = self.d11.add(&self.d22);
        out.axpy(1.0, &self.d33);
        out
    }
}

/// Terms of `Σ‖∂²ᵢⱼf‖² − ‖Δf‖² + 2β‖∇_H f(·,0)‖²`.
#[derive(Clone, Copy, Debug)]
pub struct KadlecTerms {
    pub hessian_sq: f64,
    pub laplacian_sq: f64,
    pub boundary_sq: f64,
    pub residual: f64,
    /// `|residual| / ‖Δf‖²`
    pub relative: f64,
}

/// Horizontal gradient of the top trace of `f`.
pub fn top_gradient(f: &ScalarField) -> (HorizontalField, HorizontalField) {
    grad_horizontal_2d(&trace_top(f))
}

/// Evaluate the Kadlec identity for a field with `∂₃f(·,−h) = 0` and
/// `∂₃f(·,0) + βf(·,0) = 0`; `top_grad` is `∇_H f(·,0)`.
pub fn kadlec_residual(hess: &Hessian, top_grad: &(HorizontalField, HorizontalField), beta: f64) -> KadlecTerms {
    let hessian_sq = hess.frobenius_sq();
    let lap = hess.laplacian();
    let laplacian_sq = inner(&lap, &lap);
    let boundary_sq = top_grad.0.l2_norm_sq() + top_grad.1.l2_norm_sq();
    let residual = hessian_sq - laplacian_sq + 2.0 * beta * boundary_sq;
    KadlecTerms {
        hessian_sq,
        laplacian_sq,
        boundary_sq,
        residual,
        relative: residual.abs() / laplacian_sq,
    }
}

/// Both sides of the variable-coefficient Kadlec inequality:
/// `lhs = Σᵢⱼₖ ∫ aⁱʲ ∂ᵢₖf ∂ⱼₖf`, `principal = Σᵢⱼ ∫ aⁱʲ ∂ᵢⱼf Δf`.
#[derive(Clone, Copy, Debug)]
pub struct KadlecIiTerms {
    pub lhs: f64,
    pub principal: f64,
    pub l2_sq: f64,
}

impl KadlecIiTerms {
    /// Smallest `C ≥ 0` with `lhs ≤ (1 + ε)·principal + C‖f‖²`.
    pub fn required_constant(&self, eps: f64) -> f64 {
        ((self.lhs - (1.0 + eps) * self.principal) / self.l2_sq).max(0.0)
    }
}

pub fn kadlec_ii_terms(hess: &Hessian, a: &SymTensorField, f: &ScalarField) -> KadlecIiTerms {
    let lap = hess.laplacian();
    let mut lhs = 0.0;
    let mut principal = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let aij = a.get(i, j);
            for k in 0..3 {
                lhs += inner(&aij.mul(hess.get(i, k)), hess.get(j, k));
            }
            principal += inner(&aij.mul(hess.get(i, j)), &lap);
        }
    }
    KadlecIiTerms { lhs, principal, l2_sq: inner(f, f) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn symbolic_neumann_field_closes_to_roundoff() {
        let h = 1.0;
        let g = make_grid(16, 16, 17, h).unwrap();
        let c = PI / h;
        let hess = Hessian::from_fn(&g, |x1, _, x3| {
            let (ca, sa) = (x1.cos(), x1.sin());
            let (cz, sz) = ((c * (x3 + h)).cos(), (c * (x3 + h)).sin());
            [-ca * cz, 0.0, c * sa * sz, 0.0, 0.0, -c * c * ca * cz]
        })
        .unwrap();
        let zero = (HorizontalField::zeros(&g), HorizontalField::zeros(&g));
        let t = kadlec_residual(&hess, &zero, 0.0);
        assert!(t.relative < 1e-12, "{t:?}");
    }

    #[test]
    fn discrete_hessian_matches_symbolic() {
        let g = make_grid(16, 16, 65, 1.0).unwrap();
        let f = eval_on_grid(&g, |x1, x2, x3| (x1 + x2).sin() * x3 * x3).unwrap();
        let hd = Hessian::from_field(&f, VerticalBc::Free);
        let hs = Hessian::from_fn(&g, |x1, x2, x3| {
            let s = (x1 + x2).sin();
            let c = (x1 + x2).cos();
            [-s * x3 * x3, -s * x3 * x3, 2.0 * c * x3, -s * x3 * x3, 2.0 * c * x3, 2.0 * s]
        })
        .unwrap();
        for (i, j) in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert!(hd.get(i, j).sub(hs.get(i, j)).max_abs() < 1e-9, "entry {i}{j}");
        }
    }

    #[test]
    fn kadlec_ii_identity_coefficients_reduce_to_kadlec() {
        let g = make_grid(8, 8, 9, 1.0).unwrap();
        let f = eval_on_grid(&g, |x1, x2, x3| x1.cos() * x2.sin() * (PI * (x3 + 1.0)).cos()).unwrap();
        let hess = Hessian::from_field(&f, VerticalBc::Neumann);
        let t = kadlec_ii_terms(&hess, &SymTensorField::identity(&g), &f);
        let lap = hess.laplacian();
        assert!((t.lhs - hess.frobenius_sq()).abs() < 1e-10 * t.lhs);
        assert!((t.principal - inner(&lap, &lap)).abs() < 1e-10 * t.principal);
    }
}

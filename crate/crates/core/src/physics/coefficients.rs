//! Variable viscosity/conductivity coefficients and their validation.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::{Grid, ScalarField, SymTensorField};
use crate::error::{HydroError, Result};
use crate::noise::{NoiseBasis, StratCoefficients};
use crate::operators::{trace_bottom, trace_top};

/// Coefficients of `ℒ_v = Σaᵥⁱʲ∂ᵢⱼ + Σbᵥʲ∂ⱼ` and
/// `ℒ_θ = Σ∂ᵢ(a_θⁱʲ∂ⱼ·) + Σb_θʲ∂ⱼ`, the Robin constant and the buoyancy
/// weight `κ`.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub a_v: SymTensorField,
    pub a_theta: SymTensorField,
    pub b_v: [ScalarField; 3],
    pub b_theta: [ScalarField; 3],
    pub alpha: f64,
    pub kappa: ScalarField,
}

/// Measured margins from [`CoefficientSet::validate`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoefficientReport {
    /// Smallest eigenvalue of `aᵥ − ½Σφφᵀ` over the grid.
    pub margin_v: f64,
    /// Smallest eigenvalue of `a_θ − ½Σψψᵀ` over the grid.
    pub margin_theta: f64,
}

fn zeros3(grid: &Arc<Grid>) -> [ScalarField; 3] {
    std::array::from_fn(|_| ScalarField::zeros(grid))
}

fn noise_moment(basis: &NoiseBasis, psi: bool) -> SymTensorField {
    let mut m = SymTensorField::zeros(basis.grid());
    for n in 0..basis.n_modes() {
        let c = if psi { basis.psi(n) } else { basis.phi(n) };
        for i in 0..3 {
            for j in i..3 {
                m.get_mut(i, j).add_product(0.5, &c[i], &c[j]);
            }
        }
    }
    m
}

impl CoefficientSet {
    /// `a = I`, `b = 0`, `κ = 1`.
    pub fn identity(grid: &Arc<Grid>, alpha: f64) -> Self {
        CoefficientSet {
            a_v: SymTensorField::identity(grid),
            a_theta: SymTensorField::identity(grid),
            b_v: zeros3(grid),
            b_theta: zeros3(grid),
            alpha,
            kappa: ScalarField::constant(grid, 1.0),
        }
    }

    /// `aᵥ = a_φ`, `a_θ = a_ψ`, `b` from the Stratonovich drifts, `κ = 1`.
    pub fn from_strat(strat: &StratCoefficients, alpha: f64) -> Self {
        CoefficientSet {
            a_v: strat.a_phi.clone(),
            a_theta: strat.a_psi.clone(),
            b_v: strat.b_v.clone(),
            b_theta: strat.b_theta.clone(),
            alpha,
            kappa: ScalarField::constant(strat.a_phi.grid(), 1.0),
        }
    }

    pub fn with_kappa(mut self, kappa: ScalarField) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.kappa.grid()
    }

    pub fn v_is_identity(&self) -> bool {
        self.a_v.is_identity() && self.b_v.iter().all(|b| b.max_abs() == 0.0)
    }

    pub fn theta_is_identity(&self) -> bool {
        self.a_theta.is_identity() && self.b_theta.iter().all(|b| b.max_abs() == 0.0)
    }

    /// Check finiteness, the conormal boundary structure
    /// `a_θ^{3j} = 0` (j = 1, 2) on both walls, and ellipticity of
    /// `a − ½Σφφᵀ` (resp. `ψ`) against `basis`.
    pub fn validate(&self, basis: &NoiseBasis) -> Result<CoefficientReport> {
        let grid = self.grid();
        let fields = self.b_v.iter().chain(&self.b_theta).chain(std::iter::once(&self.kappa));
        for f in fields {
            if !f.grid().same_shape(grid) {
                return Err(HydroError::ShapeMismatch("coefficient fields on different grids".into()));
            }
            f.check_finite("coefficient")?;
        }
        if !self.a_v.is_finite() || !self.a_theta.is_finite() || !self.alpha.is_finite() {
            return Err(HydroError::InvalidCoefficients("non-finite diffusion coefficient".into()));
        }
        for j in 0..2 {
            let a = self.a_theta.get(2, j);
            let top = trace_top(a).max_abs();
            let bottom = trace_bottom(a).max_abs();
            if top != 0.0 || bottom != 0.0 {
                return Err(HydroError::InvalidCoefficients(format!(
                    "a_theta^(3,{}) must vanish on the top and bottom walls (max {:e})",
                    j + 1,
                    top.max(bottom)
                )));
            }
        }
        let margin_v = self.a_v.sub(&noise_moment(basis, false)).min_eigenvalue();
        let margin_theta = self.a_theta.sub(&noise_moment(basis, true)).min_eigenvalue();
        if !(margin_v > 0.0 && margin_theta > 0.0) {
            return Err(HydroError::InvalidCoefficients(format!(
                "ellipticity margin not positive (v: {margin_v:e}, theta: {margin_theta:e})"
            )));
        }
        Ok(CoefficientReport { margin_v, margin_theta })
    }
}

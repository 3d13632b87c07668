//! Deterministic forcings `F_v`, `F_θ` and per-mode noise forcings `G`.

use serde::Serialize;

use crate::domain::{inner, l2_norm, l2_norm_vec, HVecField, ScalarField};
use crate::error::{HydroError, Result};

#[derive(Clone, Debug)]
pub enum ForcingKind {
    Zero,
    /// `F_v = (k₀v², −k₀v¹)`, `F_θ = 0`.
    Coriolis { k0: f64 },
    /// `F_v = −c·v`, `F_θ = −c·θ`.
    LinearDamping { c: f64 },
    /// State-independent tabulated fields.
    Tabulated { f_v: HVecField, f_theta: ScalarField },
}

/// Forcing terms of both equations plus optional per-mode `G` fields.
#[derive(Clone, Debug)]
pub struct ForcingSpec {
    pub kind: ForcingKind,
    /// `G_{v,n}`; empty means zero for every mode.
    pub g_v: Vec<HVecField>,
    /// `G_{θ,n}`; empty means zero for every mode.
    pub g_theta: Vec<ScalarField>,
    /// Optional budget field `Ξ` for the growth audit.
    pub xi: Option<ScalarField>,
}

/// Result of [`ForcingSpec::growth_audit`].
#[derive(Clone, Debug, Serialize)]
pub struct GrowthAudit {
    pub f_v_l2: f64,
    pub f_theta_l2: f64,
    pub v_l2: f64,
    pub theta_l2: f64,
    pub xi_l2: f64,
    /// Largest pointwise ratio `|F(x)| / (Ξ(x) + |v(x)| + |θ(x)|)`.
    pub max_pointwise_ratio: f64,
    /// Growth constant when it is known in closed form.
    pub constant: Option<f64>,
    /// `‖F‖ ≤ C(‖Ξ‖ + ‖v‖ + ‖θ‖)` when `C` is known.
    pub within_bound: Option<bool>,
}

impl ForcingSpec {
    fn with_kind(kind: ForcingKind) -> Self {
        ForcingSpec { kind, g_v: Vec::new(), g_theta: Vec::new(), xi: None }
    }

    pub fn zero() -> Self {
        Self::with_kind(ForcingKind::Zero)
    }

    pub fn coriolis(k0: f64) -> Self {
        Self::with_kind(ForcingKind::Coriolis { k0 })
    }

    pub fn linear_damping(c: f64) -> Self {
        Self::with_kind(ForcingKind::LinearDamping { c })
    }

    pub fn tabulated(f_v: HVecField, f_theta: ScalarField) -> Result<Self> {
        if !f_v.grid().same_shape(f_theta.grid()) {
            return Err(HydroError::ShapeMismatch("tabulated forcings on different grids".into()));
        }
        Ok(Self::with_kind(ForcingKind::Tabulated { f_v, f_theta }))
    }

    /// Attach per-mode noise forcings; either list may be empty.
    pub fn with_g(mut self, g_v: Vec<HVecField>, g_theta: Vec<ScalarField>) -> Self {
        self.g_v = g_v;
        self.g_theta = g_theta;
        self
    }

    pub fn with_xi(mut self, xi: ScalarField) -> Self {
        self.xi = Some(xi);
        self
    }

    /// Check that the `G` lists are empty or match the noise mode count.
    pub fn check_modes(&self, n_modes: usize) -> Result<()> {
        for (name, len) in [("G_v", self.g_v.len()), ("G_theta", self.g_theta.len())] {
            if len != 0 && len != n_modes {
                return Err(HydroError::InvalidConfig(format!(
                    "{name} has {len} modes but the noise basis has {n_modes}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ForcingKind::Zero) && self.g_v.is_empty() && self.g_theta.is_empty()
    }

    /// `F_v(v, θ)`. The strong-weak setting has no `∇θ` dependence; the
    /// strong-strong variant [`ForcingSpec::f_v_strong`] accepts it.
    pub fn f_v(&self, v: &HVecField, _theta: &ScalarField) -> HVecField {
        match &self.kind {
            ForcingKind::Zero => HVecField::zeros(v.grid()),
            ForcingKind::Coriolis { k0 } => HVecField::from_parts(v.c2().scale(*k0), v.c1().scale(-*k0)),
            ForcingKind::LinearDamping { c } => v.scale(-*c),
            ForcingKind::Tabulated { f_v, .. } => f_v.clone(),
        }
    }

    /// `F_v(v, θ, ∇θ)`; the shipped forcings ignore the gradient.
    pub fn f_v_strong(&self, v: &HVecField, theta: &ScalarField, _grad_theta: &[ScalarField; 3]) -> HVecField {
        self.f_v(v, theta)
    }

    pub fn f_theta(&self, _v: &HVecField, theta: &ScalarField) -> ScalarField {
        match &self.kind {
            ForcingKind::Zero | ForcingKind::Coriolis { .. } => ScalarField::zeros(theta.grid()),
            ForcingKind::LinearDamping { c } => theta.scale(-*c),
            ForcingKind::Tabulated { f_theta, .. } => f_theta.clone(),
        }
    }

    pub fn g_v(&self, n: usize) -> Option<&HVecField> {
        self.g_v.get(n)
    }

    pub fn g_theta(&self, n: usize) -> Option<&ScalarField> {
        self.g_theta.get(n)
    }

    /// Growth constant `C` of `|F| ≤ C(Ξ + |v| + |θ|)` when known.
    pub fn growth_constant(&self) -> Option<f64> {
        match &self.kind {
            ForcingKind::Zero => Some(0.0),
            ForcingKind::Coriolis { k0 } => Some(k0.abs()),
            ForcingKind::LinearDamping { c } => Some(c.abs()),
            ForcingKind::Tabulated { .. } => None,
        }
    }

    pub fn growth_audit(&self, v: &HVecField, theta: &ScalarField) -> GrowthAudit {
        let fv = self.f_v(v, theta);
        let ft = self.f_theta(v, theta);
        let np = theta.grid().n_points();
        let mut ratio = 0.0_f64;
        for p in 0..np {
            let f = (fv.c1().values()[p].powi(2) + fv.c2().values()[p].powi(2) + ft.values()[p].powi(2)).sqrt();
            let xi = self.xi.as_ref().map_or(0.0, |x| x.values()[p].abs());
            let s = xi + v.c1().values()[p].hypot(v.c2().values()[p]) + theta.values()[p].abs();
            if f > 0.0 {
                ratio = ratio.max(if s > 0.0 { f / s } else { f64::INFINITY });
            }
        }
        let f_v_l2 = l2_norm_vec(&fv);
        let f_theta_l2 = l2_norm(&ft);
        let v_l2 = l2_norm_vec(v);
        let theta_l2 = l2_norm(theta);
        let xi_l2 = self.xi.as_ref().map_or(0.0, |x| inner(x, x).sqrt());
        let constant = self.growth_constant();
        let within_bound = constant.map(|c| {
            let total = f_v_l2.hypot(f_theta_l2);
            total <= c * (xi_l2 + v_l2 + theta_l2) * (1.0 + 1e-12)
        });
        GrowthAudit { f_v_l2, f_theta_l2, v_l2, theta_l2, xi_l2, max_pointwise_ratio: ratio, constant, within_bound }
    }
}

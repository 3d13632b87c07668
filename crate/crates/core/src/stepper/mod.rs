//! IMEX Euler–Maruyama and Heun time stepping of the coupled `(v, θ)`
//! system.
//!
//! Each step forms the explicit right-hand side (transport, buoyancy
//! coupling, forcing, turbulent pressure, coefficient corrections and the
//! noise increments), solves `(I − dt Δ)` column by column in Fourier
//! space and applies the hydrostatic projection once to the new velocity.

mod implicit;
mod run;

pub use implicit::{ImplicitSolver, VerticalScheme};
pub use run::{run, run_ensemble, RunOptions, RunOutput};

use std::sync::Arc;

use crate::domain::{h1_norm_sq_vec, Grid, HVecField, ScalarField};
use crate::error::{HydroError, Result};
use crate::noise::{strat_coefficients, BrownianDriver, NoiseBasis, StratCoefficients};
use crate::operators::{laplace, laplace_vec, vertical_average_vec, ProjectionWorkspace, VerticalBc};
use crate::physics::{
    apply_lv, apply_ltheta_strong, j_kappa, nonlinear_theta, nonlinear_theta_conservative, nonlinear_v, p_gamma,
    strat_correction_theta, strat_correction_v, transport_theta, transport_v, CoefficientSet, ForcingSpec,
};

/// Tolerance on `‖div_H v̄‖ / ‖v‖_{H¹}` after projection.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMode {
    Ito,
    /// Itô stepping with the conversion drift added explicitly.
    StratonovichCorrected,
    /// Predictor–corrector on the noise terms.
    StratonovichHeun,
}

/// Temperature boundary treatment. Both impose `∂₃θ = 0` at the bottom and
/// `∂₃θ + αθ = 0` at the top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaBc {
    /// Transport in conservative form, the pointwise counterpart of the
    /// weak formulation.
    WeakRobin(f64),
    /// Transport in advective form on the strong Robin stencil.
    StrongRobin(f64),
}

impl ThetaBc {
    pub fn alpha(&self) -> f64 {
        match *self {
            ThetaBc::WeakRobin(a) | ThetaBc::StrongRobin(a) => a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Implicitness {
    Imex,
    FullyExplicit,
}

/// How the temperature update is discretized vertically in weak mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaUpdate {
    /// Ghost-node stencil.
    Stencil,
    /// Piecewise-linear Galerkin solve with consistent mass.
    Variational,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum CoefficientSource {
    Identity,
    Custom(CoefficientSet),
    /// `a_φ`, `a_ψ`, `b_v`, `b_θ` from the active noise basis.
    StratDerived,
}

#[derive(Clone, Debug)]
pub struct StepperConfig {
    pub dt: f64,
    pub mode: NoiseMode,
    pub bc_theta: ThetaBc,
    pub implicitness: Implicitness,
    pub coefficients: CoefficientSource,
    pub theta_update: ThetaUpdate,
    /// Overrides the buoyancy weight of the coefficient source.
    pub kappa: Option<ScalarField>,
}

impl StepperConfig {
    /// Itô, weak Robin with `α`, IMEX, identity coefficients, `κ = 1`.
    pub fn new(dt: f64, alpha: f64) -> Self {
        StepperConfig {
            dt,
            mode: NoiseMode::Ito,
            bc_theta: ThetaBc::WeakRobin(alpha),
            implicitness: Implicitness::Imex,
            coefficients: CoefficientSource::Identity,
            theta_update: ThetaUpdate::Stencil,
            kappa: None,
        }
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_bc(mut self, bc: ThetaBc) -> Self {
        self.bc_theta = bc;
        self
    }

    pub fn with_implicitness(mut self, i: Implicitness) -> Self {
        self.implicitness = i;
        self
    }

    pub fn with_coefficients(mut self, c: CoefficientSource) -> Self {
        self.coefficients = c;
        self
    }

    pub fn with_theta_update(mut self, u: ThetaUpdate) -> Self {
        self.theta_update = u;
        self
    }

    pub fn with_kappa(mut self, kappa: ScalarField) -> Self {
        self.kappa = Some(kappa);
        self
    }
}

/// One trajectory's state at `t = step_index · dt`.
#[derive(Clone, Debug)]
pub struct SimState {
    pub v: HVecField,
    pub theta: ScalarField,
    pub t: f64,
    pub step_index: u64,
    pub trajectory_index: u64,
}

impl SimState {
    pub fn new(v: HVecField, theta: ScalarField, trajectory_index: u64) -> Result<Self> {
        if !v.grid().same_shape(theta.grid()) {
            return Err(HydroError::ShapeMismatch("v and theta on different grids".into()));
        }
        v.c1().check_finite("v1")?;
        v.c2().check_finite("v2")?;
        theta.check_finite("theta")?;
        Ok(SimState { v, theta, t: 0.0, step_index: 0, trajectory_index })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.theta.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.theta.is_finite()
    }
}

/// `‖div_H v̄‖_{L²(𝕋²)} / ‖v‖_{H¹}`, zero for `v = 0`.
pub fn constraint_residual(v: &HVecField) -> f64 {
    let (a, b) = vertical_average_vec(v);
    let div = crate::operators::div_horizontal_2d(&a, &b).l2_norm_sq().sqrt();
    if div == 0.0 {
        return 0.0;
    }
    div / h1_norm_sq_vec(v).sqrt()
}

/// A fully resolved stepper: coefficient fields, Stratonovich algebra,
/// projection workspace and factorized implicit operators.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: Arc<Grid>,
    config: StepperConfig,
    basis: NoiseBasis,
    strat: Option<StratCoefficients>,
    coeffs: CoefficientSet,
    forcing: ForcingSpec,
    driver: BrownianDriver,
    ws: ProjectionWorkspace,
    solver_v: Option<ImplicitSolver>,
    solver_theta: Option<ImplicitSolver>,
    noise_active: bool,
}

impl Stepper {
    pub fn new(config: StepperConfig, basis: NoiseBasis, forcing: ForcingSpec, driver: BrownianDriver) -> Result<Self> {
        Self::with_strat(config, basis, None, forcing, driver)
    }

    /// As [`Stepper::new`], reusing precomputed Stratonovich coefficients.
    pub fn with_strat(
        config: StepperConfig,
        basis: NoiseBasis,
        strat: Option<StratCoefficients>,
        forcing: ForcingSpec,
        driver: BrownianDriver,
    ) -> Result<Self> {
        let grid = basis.grid().clone();
        if !(config.dt > 0.0 && config.dt.is_finite()) {
            return Err(HydroError::InvalidConfig(format!("dt must be positive (got {})", config.dt)));
        }
        if driver.dt() != config.dt {
            return Err(HydroError::InvalidConfig(format!(
                "driver dt {} differs from stepper dt {}",
                driver.dt(),
                config.dt
            )));
        }
        if driver.n_modes() != basis.n_modes() {
            return Err(HydroError::InvalidConfig(format!(
                "driver has {} modes, basis has {}",
                driver.n_modes(),
                basis.n_modes()
            )));
        }
        let alpha = config.bc_theta.alpha();
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(HydroError::InvalidConfig(format!("Robin constant must be finite and ≥ 0 (got {alpha})")));
        }
        forcing.check_modes(basis.n_modes())?;
        let stratonovich = config.mode != NoiseMode::Ito;
        if stratonovich && !basis.flags().phi_h_x3_independent {
            return Err(HydroError::Assumption(
                "Stratonovich modes need phi^1, phi^2 and gamma independent of x3".into(),
            ));
        }
        if config.implicitness == Implicitness::FullyExplicit && config.theta_update == ThetaUpdate::Variational {
            return Err(HydroError::InvalidConfig("the variational update needs the implicit solve".into()));
        }
        let needs_strat = stratonovich || matches!(config.coefficients, CoefficientSource::StratDerived);
        let strat = match strat {
            Some(s) => Some(s),
            None if needs_strat => Some(strat_coefficients(&basis)),
            None => None,
        };
        let mut coeffs = match &config.coefficients {
            CoefficientSource::Identity => CoefficientSet::identity(&grid, alpha),
            CoefficientSource::Custom(c) => {
                c.validate(&basis)?;
                c.clone()
            }
            CoefficientSource::StratDerived => {
                CoefficientSet::from_strat(strat.as_ref().expect("computed above"), alpha)
            }
        };
        coeffs.alpha = alpha;
        if let Some(k) = &config.kappa {
            k.check_finite("kappa")?;
            coeffs.kappa = k.clone();
        }
        let (solver_v, solver_theta) = match config.implicitness {
            Implicitness::Imex => {
                let theta_scheme = match (config.bc_theta, config.theta_update) {
                    (ThetaBc::WeakRobin(a), ThetaUpdate::Variational) => VerticalScheme::ConsistentMass { alpha: a },
                    _ => VerticalScheme::Stencil { alpha },
                };
                (
                    Some(ImplicitSolver::new(&grid, config.dt, VerticalScheme::Stencil { alpha: 0.0 })),
                    Some(ImplicitSolver::new(&grid, config.dt, theta_scheme)),
                )
            }
            Implicitness::FullyExplicit => (None, None),
        };
        let noise_active = !basis.is_zero() || !forcing.g_v.is_empty() || !forcing.g_theta.is_empty();
        Ok(Stepper {
            ws: ProjectionWorkspace::new(&grid),
            grid,
            config,
            basis,
            strat,
            coeffs,
            forcing,
            driver,
            solver_v,
            solver_theta,
            noise_active,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    pub fn basis(&self) -> &NoiseBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn forcing(&self) -> &ForcingSpec {
        &self.forcing
    }

    pub fn driver(&self) -> &BrownianDriver {
        &self.driver
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    fn theta_bc(&self) -> VerticalBc {
        VerticalBc::Robin(self.coeffs.alpha)
    }

    /// Deterministic explicit drift, excluding the implicit Laplacian.
    fn drift(&self, v: &HVecField, theta: &ScalarField) -> Result<(HVecField, ScalarField)> {
        // Both transport terms are bilinear in v.
        let v_zero = v.max_abs() == 0.0;
        let mut dv = if v_zero { HVecField::zeros(&self.grid) } else { nonlinear_v(v).scale(-1.0) };
        dv.axpy(1.0, &j_kappa(theta, &self.coeffs.kappa));
        dv.axpy(1.0, &self.forcing.f_v(v, theta));
        let mut dth = match self.config.bc_theta {
            _ if v_zero => ScalarField::zeros(&self.grid),
            ThetaBc::WeakRobin(_) => nonlinear_theta_conservative(v, theta).scale(-1.0),
            ThetaBc::StrongRobin(_) => nonlinear_theta(v, theta).scale(-1.0),
        };
        dth.axpy(1.0, &self.forcing.f_theta(v, theta));

        if !self.coeffs.v_is_identity() {
            dv.axpy(1.0, &apply_lv(v, &self.coeffs).sub(&laplace_vec(v, VerticalBc::Neumann)?));
        }
        if !self.coeffs.theta_is_identity() {
            dth.axpy(1.0, &apply_ltheta_strong(theta, &self.coeffs).sub(&laplace(theta, self.theta_bc())));
        }
        if self.config.implicitness == Implicitness::FullyExplicit {
            dv.axpy(1.0, &laplace_vec(v, VerticalBc::Neumann)?);
            dth.axpy(1.0, &laplace(theta, self.theta_bc()));
        }
        match self.config.mode {
            NoiseMode::Ito => {
                if !self.basis.gamma_is_zero() {
                    dv.axpy(1.0, &p_gamma(v, &self.basis, &self.forcing.g_v));
                }
            }
            NoiseMode::StratonovichCorrected => {
                let strat = self.strat.as_ref().expect("Stratonovich coefficients are resolved at construction");
                dv.axpy(1.0, &strat_correction_v(v, strat, &self.basis)?);
                dth.axpy(1.0, &strat_correction_theta(theta, strat, &self.basis, self.theta_bc())?);
            }
            NoiseMode::StratonovichHeun => {}
        }
        Ok((dv, dth))
    }

    /// `Σₙ ΔBₙ [(φₙ·∇)v + G_{v,n}]` and `Σₙ ΔBₙ [(ψₙ·∇)θ + G_{θ,n}]`,
    /// before projection.
    fn noise(&self, v: &HVecField, theta: &ScalarField, db: &[f64]) -> (HVecField, ScalarField) {
        let mut nv = HVecField::zeros(&self.grid);
        let mut nt = ScalarField::zeros(&self.grid);
        for (n, &b) in db.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            let mut tv = transport_v(self.basis.phi(n), v);
            if let Some(g) = self.forcing.g_v(n) {
                tv.axpy(1.0, g);
            }
            nv.axpy(b, &tv);
            let mut tt = transport_theta(self.basis.psi(n), theta);
            if let Some(g) = self.forcing.g_theta(n) {
                tt.axpy(1.0, g);
            }
            nt.axpy(b, &tt);
        }
        (nv, nt)
    }

    /// Implicit solve and projection of an assembled right-hand side.
    fn finish(&self, rv: HVecField, rth: ScalarField, state: &SimState) -> Result<SimState> {
        let (v_new, theta_new) = match (&self.solver_v, &self.solver_theta) {
            (Some(sv), Some(st)) => (rv.map_components(|c| sv.solve(c)), st.solve(&rth)),
            _ => (rv, rth),
        };
        let v_new = self.ws.project(&v_new);
        let step_index = state.step_index + 1;
        let t = step_index as f64 * self.config.dt;
        if !v_new.is_finite() || !theta_new.is_finite() {
            return Err(HydroError::NonFinite { step: step_index, t });
        }
        let residual = constraint_residual(&v_new);
        if residual > CONSTRAINT_TOLERANCE {
            return Err(HydroError::ConstraintDrift { step: step_index, residual });
        }
        Ok(SimState { v: v_new, theta: theta_new, t, step_index, trajectory_index: state.trajectory_index })
    }

    fn increments(&self, state: &SimState) -> Option<Vec<f64>> {
        self.noise_active
            .then(|| self.driver.sample_increments(state.trajectory_index, state.step_index))
    }

    fn euler_maruyama(
        &self,
        state: &SimState,
        drift: &(HVecField, ScalarField),
        db: Option<&[f64]>,
    ) -> Result<SimState> {
        let dt = self.config.dt;
        let mut rv = state.v.clone();
        rv.axpy(dt, &drift.0);
        let mut rth = state.theta.clone();
        rth.axpy(dt, &drift.1);
        if let Some(db) = db {
            let (nv, nt) = self.noise(&state.v, &state.theta, db);
            rv.axpy(1.0, &nv);
            rth.axpy(1.0, &nt);
        }
        self.finish(rv, rth, state)
    }

    /// IMEX Euler–Maruyama step (also used by the corrected Stratonovich
    /// mode, whose drift carries the conversion terms).
    pub fn step_ito(&self, state: &SimState) -> Result<SimState> {
        let drift = self.drift(&state.v, &state.theta)?;
        let db = self.increments(state);
        self.euler_maruyama(state, &drift, db.as_deref())
    }

    /// Heun step: the Euler–Maruyama predictor `ỹ`, then the noise
    /// re-evaluated as `½[B(yₙ) + B(ỹ)]ΔB` with the same increments.
    pub fn step_stratonovich_heun(&self, state: &SimState) -> Result<SimState> {
        let drift = self.drift(&state.v, &state.theta)?;
        let Some(db) = self.increments(state) else {
            return self.euler_maruyama(state, &drift, None);
        };
        let predictor = self.euler_maruyama(state, &drift, Some(&db))?;
        self.heun_corrector(state, &predictor, &drift, &db)
    }

    fn heun_corrector(
        &self,
        state: &SimState,
        predictor: &SimState,
        drift: &(HVecField, ScalarField),
        db: &[f64],
    ) -> Result<SimState> {
        let dt = self.config.dt;
        let (nv0, nt0) = self.noise(&state.v, &state.theta, db);
        let (nv1, nt1) = self.noise(&predictor.v, &predictor.theta, db);
        let mut rv = state.v.clone();
        rv.axpy(dt, &drift.0);
        rv.axpy(0.5, &nv0);
        rv.axpy(0.5, &nv1);
        let mut rth = state.theta.clone();
        rth.axpy(dt, &drift.1);
        rth.axpy(0.5, &nt0);
        rth.axpy(0.5, &nt1);
        self.finish(rv, rth, state)
    }

    /// Predictor of the Heun step, exposed for inspection.
    pub fn heun_predictor(&self, state: &SimState) -> Result<SimState> {
        let drift = self.drift(&state.v, &state.theta)?;
        let db = self.increments(state);
        self.euler_maruyama(state, &drift, db.as_deref())
    }

    /// Advance one step in the configured mode.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        match self.config.mode {
            NoiseMode::Ito | NoiseMode::StratonovichCorrected => self.step_ito(state),
            NoiseMode::StratonovichHeun => self.step_stratonovich_heun(state),
        }
    }
}

/// One IMEX Euler–Maruyama step. Builds the stepper each call; use
/// [`Stepper`] directly for repeated steps.
pub fn step_ito(
    state: &SimState,
    config: &StepperConfig,
    basis: &NoiseBasis,
    strat: Option<&StratCoefficients>,
    forcing: &ForcingSpec,
    driver: &BrownianDriver,
) -> Result<SimState> {
    let mut config = config.clone();
    if config.mode == NoiseMode::StratonovichHeun {
        config.mode = NoiseMode::StratonovichCorrected;
    }
    Stepper::with_strat(config, basis.clone(), strat.cloned(), forcing.clone(), *driver)?.step_ito(state)
}

/// One Heun step; see [`Stepper::step_stratonovich_heun`].
pub fn step_stratonovich_heun(
    state: &SimState,
    config: &StepperConfig,
    basis: &NoiseBasis,
    forcing: &ForcingSpec,
    driver: &BrownianDriver,
) -> Result<SimState> {
    let config = config.clone().with_mode(NoiseMode::StratonovichHeun);
    Stepper::new(config, basis.clone(), forcing.clone(), *driver)?.step_stratonovich_heun(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{eval_on_grid, l2_norm, l2_norm_vec, make_grid};
    use crate::operators::hydrostatic_project;
    use std::f64::consts::PI;

    fn setup(n: usize, nz: usize, dt: f64, basis: Option<NoiseBasis>) -> Stepper {
        let g = make_grid(n, n, nz, 1.0).unwrap();
        let basis = basis.unwrap_or_else(|| NoiseBasis::zero(&g, 1).unwrap());
        let driver = BrownianDriver::new(5, basis.n_modes(), dt).unwrap();
        Stepper::new(StepperConfig::new(dt, 0.0), basis, ForcingSpec::zero(), driver).unwrap()
    }

    #[test]
    fn eigenmode_decays_at_discrete_rate() {
        let dt = 1e-3;
        let s = setup(16, 17, dt, None);
        let g = s.grid().clone();
        let dz = g.dz();
        let v = HVecField::from_fns(&g, |_, x2, x3| x2.sin() * (PI * (x3 + 1.0)).cos(), |_, _, _| 0.0).unwrap();
        let lambda = 1.0 + 4.0 / (dz * dz) * (PI * dz / 2.0).sin().powi(2);
        let mut st = SimState::new(v.clone(), ScalarField::zeros(&g), 0).unwrap();
        for _ in 0..100 {
            st = s.step(&st).unwrap();
        }
        // One implicit step multiplies by exactly 1/(1 + λdt).
        let want = v.scale((1.0 + lambda * dt).powi(-100));
        assert!(st.v.sub(&want).max_abs() < 1e-12);
        let continuous = (-lambda * st.t).exp();
        assert!((l2_norm_vec(&st.v) / l2_norm_vec(&v) - continuous).abs() < 2.0 * lambda * lambda * dt * st.t);
    }

    #[test]
    fn one_step_buoyancy_taylor() {
        // The remainder is second order in dt; its constant grows like
        // 1/Δz because J_κθ₀ is linear in x₃ and meets the Neumann walls.
        let mut errs = Vec::new();
        for dt in [2e-4, 1e-4] {
            let s = setup(16, 9, dt, None);
            let g = s.grid().clone();
            let th = eval_on_grid(&g, |x1, _, _| x1.cos()).unwrap();
            let st = SimState::new(HVecField::zeros(&g), th.clone(), 0).unwrap();
            let next = s.step(&st).unwrap();
            let want = hydrostatic_project(&j_kappa(&th, &ScalarField::constant(&g, 1.0))).scale(dt);
            let err = next.v.sub(&want).max_abs();
            assert!(err < 100.0 * dt * dt, "{err}");
            errs.push(err);
        }
        assert!((errs[0] / errs[1]).log2() > 1.9, "{errs:?}");
    }

    #[test]
    fn heun_equals_ito_without_noise() {
        let dt = 1e-3;
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let v = hydrostatic_project(&HVecField::from_fns(&g, |x1, x2, x3| (x1 + x2).sin() * x3, |x1, _, _| x1.cos()).unwrap());
        let th = eval_on_grid(&g, |x1, _, x3| x1.sin() + x3 * x3).unwrap();
        let st = SimState::new(v, th, 0).unwrap();
        let b = NoiseBasis::zero(&g, 2).unwrap();
        let d = BrownianDriver::new(1, 2, dt).unwrap();
        let cfg = StepperConfig::new(dt, 0.5);
        let a = step_ito(&st, &cfg, &b, None, &ForcingSpec::coriolis(1.0), &d).unwrap();
        let h = step_stratonovich_heun(&st, &cfg, &b, &ForcingSpec::coriolis(1.0), &d).unwrap();
        assert_eq!(a.v.c1().values(), h.v.c1().values());
        assert_eq!(a.theta.values(), h.theta.values());
    }

    #[test]
    fn heun_predictor_is_euler_maruyama() {
        let dt = 1e-3;
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let b = NoiseBasis::constant(&g, &[[0.3, 0.1, 0.0]], &[[0.5, 0.0, 0.0]]).unwrap();
        let d = BrownianDriver::new(3, 1, dt).unwrap();
        let th = eval_on_grid(&g, |x1, x2, _| x1.cos() * x2.sin()).unwrap();
        let st = SimState::new(HVecField::zeros(&g), th, 4).unwrap();
        let heun = Stepper::new(StepperConfig::new(dt, 0.0).with_mode(NoiseMode::StratonovichHeun), b.clone(), ForcingSpec::zero(), d).unwrap();
        let ito = Stepper::new(StepperConfig::new(dt, 0.0), b, ForcingSpec::zero(), d).unwrap();
        let p = heun.heun_predictor(&st).unwrap();
        let e = ito.step_ito(&st).unwrap();
        assert_eq!(p.theta.values(), e.theta.values());
        assert_ne!(heun.step(&st).unwrap().theta.values(), e.theta.values());
    }

    #[test]
    fn stratonovich_rejects_x3_dependent_phi() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let z = ScalarField::zeros(&g);
        let p = eval_on_grid(&g, |_, _, x3| x3).unwrap();
        let zz = || [[z.clone(), z.clone()], [z.clone(), z.clone()]];
        let b = NoiseBasis::from_fields(&g, vec![[p, z.clone(), z.clone()]], vec![[z.clone(), z.clone(), z.clone()]], vec![zz()]).unwrap();
        let d = BrownianDriver::new(1, 1, 0.1).unwrap();
        let cfg = StepperConfig::new(0.1, 0.0).with_mode(NoiseMode::StratonovichHeun);
        assert!(matches!(Stepper::new(cfg, b, ForcingSpec::zero(), d), Err(HydroError::Assumption(_))));
    }

    #[test]
    fn robin_damps_theta_energy() {
        let dt = 1e-3;
        for bc in [ThetaBc::WeakRobin(2.0), ThetaBc::StrongRobin(2.0)] {
            for upd in [ThetaUpdate::Stencil, ThetaUpdate::Variational] {
                let g = make_grid(8, 8, 9, 1.0).unwrap();
                let b = NoiseBasis::zero(&g, 1).unwrap();
                let d = BrownianDriver::new(1, 1, dt).unwrap();
                let cfg = StepperConfig::new(dt, 0.0).with_bc(bc).with_theta_update(upd);
                let s = Stepper::new(cfg, b, ForcingSpec::zero(), d).unwrap();
                let mut st = SimState::new(HVecField::zeros(&g), ScalarField::constant(&g, 1.0), 0).unwrap();
                let mut prev = l2_norm(&st.theta);
                for _ in 0..20 {
                    st = s.step(&st).unwrap();
                    let e = l2_norm(&st.theta);
                    assert!(e < prev);
                    prev = e;
                }
            }
        }
    }

    #[test]
    fn fully_explicit_matches_imex_to_first_order() {
        let g = make_grid(8, 8, 9, 1.0).unwrap();
        let v0 = HVecField::from_fns(&g, |_, x2, x3| x2.sin() * (PI * (x3 + 1.0)).cos(), |_, _, _| 0.0).unwrap();
        let mut gaps = Vec::new();
        for dt in [2e-4, 1e-4] {
            let b = NoiseBasis::zero(&g, 1).unwrap();
            let d = BrownianDriver::new(1, 1, dt).unwrap();
            let imex = Stepper::new(StepperConfig::new(dt, 0.0), b.clone(), ForcingSpec::zero(), d).unwrap();
            let expl = Stepper::new(StepperConfig::new(dt, 0.0).with_implicitness(Implicitness::FullyExplicit), b, ForcingSpec::zero(), d).unwrap();
            let mut a = SimState::new(v0.clone(), ScalarField::zeros(&g), 0).unwrap();
            let mut e = a.clone();
            for _ in 0..(0.01 / dt).round() as usize {
                a = imex.step(&a).unwrap();
                e = expl.step(&e).unwrap();
            }
            gaps.push(a.v.sub(&e.v).max_abs());
        }
        assert!((gaps[0] / gaps[1] - 2.0).abs() < 0.2, "{gaps:?}");
    }
}

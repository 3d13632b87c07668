//! Running norms, the `X`/`Y` functionals, the blow-up monitor and
//! identity residuals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::domain::{
    h1_norm_sq, hk_norm_sq_vec, hk_norm_sq_with, inner, inner_vec, integrate, l2_norm, l2_norm_vec, HVecField,
    HorizontalField, ScalarField,
};
use crate::noise::NoiseBasis;
use crate::operators::{
    d3, fluctuation, grad_h, hydrostatic_project, kadlec_residual, top_gradient, trace_top, vertical_average,
    vertical_average_vec, Hessian, KadlecTerms, VerticalBc,
};
use crate::physics::{nonlinear_theta, nonlinear_v, p_gamma_phi, transport_theta, weak_form_pairing};
use crate::stepper::{constraint_residual, SimState};

/// Running supremum and time integral behind each `𝒩ₖ`.
///
/// Slots: `[𝒩₀(v), 𝒩₁(v), 𝒩₀(θ), 𝒩₁(θ)]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NormAccumulator {
    pub sup: [f64; 4],
    pub integral: [f64; 4],
    /// `‖·‖²_{H^{k+1}}` at the previous record, for the trapezoid rule.
    pub last_integrand: [f64; 4],
}

/// Partial sums of the temperature `L²` balance, accumulated with the
/// left-point rule once per step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyPartials {
    pub theta0_sq: f64,
    pub theta_sq: f64,
    /// `2∫‖∇θ‖² + 2α∫‖θ(·,0)‖²`
    pub dissipation: f64,
    /// `Σₙ∫‖(ψₙ·∇)θ‖²`
    pub noise: f64,
}

impl EnergyPartials {
    pub fn start(theta: &ScalarField) -> Self {
        let e = inner(theta, theta);
        EnergyPartials { theta0_sq: e, theta_sq: e, dissipation: 0.0, noise: 0.0 }
    }

    /// `‖θ_t‖² + dissipation − noise − ‖θ₀‖²`
    pub fn residual(&self) -> f64 {
        self.theta_sq + self.dissipation - self.noise - self.theta0_sq
    }

    /// Add the left-point contribution of the interval `[t, t + dt]`.
    pub fn accumulate(&mut self, theta: &ScalarField, basis: &NoiseBasis, alpha: f64, dt: f64) {
        let (diss, noise) = energy_rates(theta, basis, alpha);
        self.dissipation += dt * diss;
        self.noise += dt * noise;
    }
}

/// `(2‖∇θ‖² + 2α‖θ(·,0)‖², Σₙ‖(ψₙ·∇)θ‖²)`
pub fn energy_rates(theta: &ScalarField, basis: &NoiseBasis, alpha: f64) -> (f64, f64) {
    let diss = 2.0 * robin_energy(theta, alpha);
    let mut noise = 0.0;
    if !basis.psi_is_zero() {
        for n in 0..basis.n_modes() {
            let t = transport_theta(basis.psi(n), theta);
            noise += inner(&t, &t);
        }
    }
    (diss, noise)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub traj: u64,
    pub step: u64,
    pub t: f64,
    pub n0_v: f64,
    pub n1_v: f64,
    pub n0_theta: f64,
    pub n1_theta: f64,
    pub x: f64,
    pub y: f64,
    pub robin_energy: f64,
    pub l4_tilde: f64,
    pub constraint_residual: f64,
    pub energy: EnergyPartials,
    /// Set on the record that terminates a run flagged by the monitor.
    /// Flags are numerical; they make no claim about the continuum
    /// solution.
    pub blowup_flag: bool,
    pub acc: NormAccumulator,
}

impl DiagnosticsRecord {
    /// Functional watched by the blow-up monitor, `𝒩₁(t; v) + 𝒩₀(t; θ)`.
    pub fn blowup_functional(&self) -> f64 {
        self.n1_v + self.n0_theta
    }

    /// Terminator for a state that became non-finite.
    pub fn non_finite(prev: &DiagnosticsRecord, step: u64, t: f64) -> Self {
        DiagnosticsRecord {
            step,
            t,
            n0_v: f64::INFINITY,
            n1_v: f64::INFINITY,
            n0_theta: f64::INFINITY,
            n1_theta: f64::INFINITY,
            x: f64::NAN,
            y: f64::NAN,
            robin_energy: f64::NAN,
            l4_tilde: f64::NAN,
            constraint_residual: f64::NAN,
            blowup_flag: true,
            ..*prev
        }
    }
}

/// `[‖v‖², ‖v‖²_{H¹}, ‖v‖²_{H²}, ‖θ‖², ‖θ‖²_{H¹}, ‖θ‖²_{H²}]` with the
/// solver's vertical closures.
fn sobolev_norms(state: &SimState, alpha: f64) -> [f64; 6] {
    let v = &state.v;
    let th = &state.theta;
    [
        inner_vec(v, v),
        hk_norm_sq_vec(v, 1, VerticalBc::Neumann),
        hk_norm_sq_vec(v, 2, VerticalBc::Neumann),
        inner(th, th),
        h1_norm_sq(th),
        hk_norm_sq_with(th, 2, VerticalBc::Robin(alpha)),
    ]
}

/// New record from `state`. `dt` is the time since `prev`; the time
/// integrals use the trapezoid rule between records and the suprema run
/// over recorded times only. Energy partial sums are carried over from
/// `prev` unchanged.
pub fn update_norms(state: &SimState, prev: Option<&DiagnosticsRecord>, dt: f64, alpha: f64) -> DiagnosticsRecord {
    let n = sobolev_norms(state, alpha);
    let current = [n[0], n[1], n[3], n[4]];
    let integrand = [n[1], n[2], n[4], n[5]];
    let mut acc = NormAccumulator::default();
    match prev {
        Some(p) => {
            for s in 0..4 {
                acc.sup[s] = p.acc.sup[s].max(current[s]);
                acc.integral[s] = p.acc.integral[s] + 0.5 * dt * (p.acc.last_integrand[s] + integrand[s]);
            }
        }
        None => acc.sup = current,
    }
    acc.last_integrand = integrand;
    let total = |s: usize| acc.sup[s] + acc.integral[s];
    let (x, y) = xy_functionals(&state.v);
    let mut energy = prev.map_or_else(|| EnergyPartials::start(&state.theta), |p| p.energy);
    energy.theta_sq = n[3];
    DiagnosticsRecord {
        traj: state.trajectory_index,
        step: state.step_index,
        t: state.t,
        n0_v: total(0),
        n1_v: total(1),
        n0_theta: total(2),
        n1_theta: total(3),
        x,
        y,
        robin_energy: robin_energy(&state.theta, alpha),
        l4_tilde: l4_tilde(&state.v),
        constraint_residual: constraint_residual(&state.v),
        energy,
        blowup_flag: false,
        acc,
    }
}

/// `F_α(θ) = ‖∇θ‖²_{L²} + α‖θ(·,0)‖²_{L²(𝕋²)}`
pub fn robin_energy(theta: &ScalarField, alpha: f64) -> f64 {
    let g = grad_h(theta);
    let g3 = d3(theta);
    let grad_sq = inner_vec(&g, &g) + inner(&g3, &g3);
    if alpha == 0.0 {
        return grad_sq;
    }
    grad_sq + alpha * trace_top(theta).l2_norm_sq()
}

/// `∫|ṽ|⁴`
pub fn l4_tilde(v: &HVecField) -> f64 {
    let vt = fluctuation(v);
    let m = vt.norm_sq_pointwise();
    inner(&m, &m)
}

/// `X` and `Y` from the barotropic part `v̄` and the fluctuation `ṽ`.
pub fn xy_from_parts(vbar: &(HorizontalField, HorizontalField), vtilde: &HVecField) -> (f64, f64) {
    let x_bar = vbar.0.hk_norm_sq(1) + vbar.1.hk_norm_sq(1);
    let y_bar = vbar.0.hk_norm_sq(2) + vbar.1.hk_norm_sq(2);
    let mut d3_sq = 0.0;
    let mut grad_d3_sq = 0.0;
    let mut grad_tilde_sq = ScalarField::zeros(vtilde.grid());
    for m in 0..2 {
        let c = vtilde.component(m);
        let h = Hessian::from_field(c, VerticalBc::Neumann);
        let f3 = d3(c);
        d3_sq += inner(&f3, &f3);
        grad_d3_sq += inner(&h.d13, &h.d13) + inner(&h.d23, &h.d23) + inner(&h.d33, &h.d33);
        let g = grad_h(c);
        grad_tilde_sq.add_product(1.0, g.c1(), g.c1());
        grad_tilde_sq.add_product(1.0, g.c2(), g.c2());
        grad_tilde_sq.add_product(1.0, &f3, &f3);
    }
    let m = vtilde.norm_sq_pointwise();
    let x = x_bar + d3_sq + inner(&m, &m);
    let y = y_bar + grad_d3_sq + integrate(&m.mul(&grad_tilde_sq));
    (x, y)
}

/// `X = ‖v̄‖²_{H¹(𝕋²)} + ‖∂₃v‖² + ‖ṽ‖⁴_{L⁴}`,
/// `Y = ‖v̄‖²_{H²(𝕋²)} + ‖∇∂₃v‖² + ‖|ṽ||∇ṽ|‖²`.
pub fn xy_functionals(v: &HVecField) -> (f64, f64) {
    xy_from_parts(&vertical_average_vec(v), &fluctuation(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MonitorStatus {
    Continue,
    Flag { t: f64, value: f64 },
}

/// Flag when `𝒩₁(t; v) + 𝒩₀(t; θ)` exceeds `threshold` or is not finite,
/// for records with `t ≤ horizon`.
pub fn blowup_monitor(record: &DiagnosticsRecord, threshold: f64, horizon: f64) -> MonitorStatus {
    let value = record.blowup_functional();
    if record.t <= horizon && (!value.is_finite() || value > threshold) {
        MonitorStatus::Flag { t: record.t, value }
    } else {
        MonitorStatus::Continue
    }
}

/// Default threshold `10⁶ (𝒩₁(0; v) + 𝒩₀(0; θ) + 1)`.
pub fn default_threshold(initial: &DiagnosticsRecord) -> f64 {
    1e6 * (initial.blowup_functional() + 1.0)
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Fixed smooth test function for the weak/strong pairing gap.
pub fn pairing_test_function(grid: &std::sync::Arc<crate::domain::Grid>) -> ScalarField {
    let h = grid.h();
    crate::domain::eval_on_grid(grid, |x1, x2, x3| {
        (x1 + 0.3).cos() * (2.0 * x2).sin() * (std::f64::consts::PI * x3 / h).cos() + (x1 - x2).sin()
    })
    .expect("closed-form test function is finite")
}

/// Dimensionless residuals of the identities the discretization should
/// satisfy up to truncation error:
///
/// - `cancellation_v = |∫((v·∇)v + w∂₃v)·v| / (‖N(v)‖‖v‖)`
/// - `cancellation_theta`, the same for `θ`
/// - `weak_strong_gap`, strong transport paired with a fixed test function
///   against the weak functional
/// - `projection_idempotency = ‖ℙℙv − ℙv‖ / ‖v‖`
/// - `p_gamma_x3_locality`, deviation of `𝒫_{γ,φ}v` from its vertical
///   average (only when the basis is x₃-independent and `γ ≠ 0`)
pub fn identity_residuals(state: &SimState, basis: &NoiseBasis) -> BTreeMap<String, f64> {
    let v = &state.v;
    let th = &state.theta;
    let mut out = BTreeMap::new();

    let nv = nonlinear_v(v);
    out.insert("cancellation_v".into(), ratio(inner_vec(&nv, v).abs(), l2_norm_vec(&nv) * l2_norm_vec(v)));

    let nt = nonlinear_theta(v, th);
    out.insert("cancellation_theta".into(), ratio(inner(&nt, th).abs(), l2_norm(&nt) * l2_norm(th)));

    let test = pairing_test_function(th.grid());
    let gap = (inner(&nt, &test) - weak_form_pairing(v, th, &test)).abs();
    out.insert("weak_strong_gap".into(), ratio(gap, l2_norm(&nt).max(f64::MIN_POSITIVE) * l2_norm(&test)));

    let p = hydrostatic_project(v);
    let pp = hydrostatic_project(&p);
    out.insert("projection_idempotency".into(), ratio(l2_norm_vec(&pp.sub(&p)), l2_norm_vec(v)));

    if basis.flags().phi_h_x3_independent && !basis.gamma_is_zero() {
        let pg = p_gamma_phi(v, basis);
        let dev = |c: &ScalarField| c.sub(&vertical_average(c).lift());
        let num = l2_norm(&dev(pg.c1())).hypot(l2_norm(&dev(pg.c2())));
        out.insert("p_gamma_x3_locality".into(), ratio(num, l2_norm_vec(&pg)));
    }
    out
}

/// Kadlec identity from the discrete Hessian of `f` with closure `bc`;
/// `beta` is the Robin constant of `f`.
pub fn kadlec_discrete(f: &ScalarField, beta: f64, bc: VerticalBc) -> KadlecTerms {
    kadlec_residual(&Hessian::from_field(f, bc), &top_gradient(f), beta)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ensemble mean and standard error of the main record columns at one
/// recorded time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub t: f64,
    pub n_traj: usize,
    pub n_flagged: usize,
    pub columns: Vec<(&'static str, f64, f64)>,
}

pub const AGGREGATE_COLUMNS: [&str; 8] =
    ["N0_v", "N1_v", "N0_theta", "N1_theta", "X", "Y", "robin_energy", "energy_residual"];

fn columns_of(r: &DiagnosticsRecord) -> [f64; 8] {
    [r.n0_v, r.n1_v, r.n0_theta, r.n1_theta, r.x, r.y, r.robin_energy, r.energy.residual()]
}

/// Reduce per-trajectory record streams row by row. Row `i` uses every
/// trajectory that has at least `i + 1` records; the time is taken from
/// the first such trajectory.
pub fn aggregate_records(streams: &[Vec<DiagnosticsRecord>]) -> Vec<AggregateRow> {
    let len = streams.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let rows: Vec<&DiagnosticsRecord> = streams.iter().filter_map(|s| s.get(i)).collect();
            let columns = AGGREGATE_COLUMNS
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let vals: Vec<f64> = rows.iter().map(|r| columns_of(r)[c]).collect();
                    let (m, se) = mean_se(&vals);
                    (*name, m, se)
                })
                .collect();
            AggregateRow {
                t: rows[0].t,
                n_traj: rows.len(),
                n_flagged: rows.iter().filter(|r| r.blowup_flag).count(),
                columns,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{eval_on_grid, make_grid};
    use std::f64::consts::PI;

    fn state(v: HVecField, th: ScalarField, t: f64) -> SimState {
        let mut s = SimState::new(v, th, 0).unwrap();
        s.t = t;
        s
    }

    #[test]
    fn constant_field_norms_are_exact() {
        let g = make_grid(8, 8, 9, 1.0).unwrap();
        let v = HVecField::from_fns(&g, |x1, _, x3| x1.sin() * x3, |_, _, _| 0.0).unwrap();
        let th = eval_on_grid(&g, |_, x2, _| x2.cos()).unwrap();
        let mut rec = update_norms(&state(v.clone(), th.clone(), 0.0), None, 0.0, 0.0);
        for k in 1..=10 {
            let t = 0.1 * k as f64;
            rec = update_norms(&state(v.clone(), th.clone(), t), Some(&rec), 0.1, 0.0);
        }
        let want = inner_vec(&v, &v) + 1.0 * hk_norm_sq_vec(&v, 1, VerticalBc::Neumann);
        assert!((rec.n0_v - want).abs() < 1e-12 * want);
        let want = inner(&th, &th) + h1_norm_sq(&th);
        assert!((rec.n0_theta - want).abs() < 1e-12 * want);
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_state_gives_zeros() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let rec = update_norms(&state(HVecField::zeros(&g), ScalarField::zeros(&g), 0.0), None, 0.0, 1.0);
        assert_eq!(rec.n0_v + rec.n1_v + rec.n0_theta + rec.n1_theta + rec.x + rec.y, 0.0);
        assert_eq!(blowup_monitor(&rec, 1.0, 10.0), MonitorStatus::Continue);
        assert!(matches!(blowup_monitor(&rec, -1.0, 10.0), MonitorStatus::Flag { .. }));
    }

    #[test]
    fn threshold_zero_flags_nonzero_ics() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let th = ScalarField::constant(&g, 0.1);
        let rec = update_norms(&state(HVecField::zeros(&g), th, 0.0), None, 0.0, 0.0);
        assert_eq!(blowup_monitor(&rec, 0.0, 1.0), MonitorStatus::Flag { t: 0.0, value: rec.blowup_functional() });
    }

    #[test]
    fn robin_energy_alpha_zero() {
        let g = make_grid(8, 8, 9, 1.0).unwrap();
        let th = eval_on_grid(&g, |x1, _, x3| x1.sin() * x3.exp()).unwrap();
        let g3 = d3(&th);
        let gh = grad_h(&th);
        assert_eq!(robin_energy(&th, 0.0), inner_vec(&gh, &gh) + inner(&g3, &g3));
        assert!(robin_energy(&th, 1.0) > robin_energy(&th, 0.0));
    }

    #[test]
    fn xy_x3_independent_and_zero() {
        let g = make_grid(16, 16, 9, 1.0).unwrap();
        assert_eq!(xy_functionals(&HVecField::zeros(&g)), (0.0, 0.0));
        let v = HVecField::from_fns(&g, |_, x2, _| x2.sin(), |x1, _, _| x1.cos()).unwrap();
        let (x, _) = xy_functionals(&v);
        let (a, b) = vertical_average_vec(&v);
        assert!((x - (a.hk_norm_sq(1) + b.hk_norm_sq(1))).abs() < 1e-10 * x);
    }

    #[test]
    fn xy_manufactured_profile() {
        let h = 1.0;
        let mut errs = Vec::new();
        for nz in [17, 33, 65] {
            let g = make_grid(16, 16, nz, h).unwrap();
            let v = HVecField::from_fns(&g, |x1, _, x3| x1.sin() * (PI * (x3 + h) / h).cos(), |_, _, _| 0.0).unwrap();
            let (x, y) = xy_functionals(&v);
            let p2 = PI * PI;
            let x_want = p2 * p2 / h + (1.5 * p2) * (3.0 * h / 8.0);
            let y_want = (p2 / (h * h)) * 2.0 * p2 * h / 2.0
                + (p2 / (h * h)).powi(2) * 2.0 * p2 * h / 2.0
                + (p2 / 2.0) * (3.0 * h / 8.0)
                + (p2 / (h * h)) * (1.5 * p2) * (h / 8.0);
            errs.push(((x - x_want) / x_want).abs().max(((y - y_want) / y_want).abs()));
        }
        assert!(errs[2] < 1e-3, "{errs:?}");
        assert!(errs[0] / errs[2] > 10.0, "{errs:?}");
    }

    #[test]
    fn xy_split_matches_reconstruction() {
        let g = make_grid(16, 16, 9, 1.0).unwrap();
        let v = HVecField::from_fns(&g, |x1, x2, x3| (x1 + x2).sin() + x3 * x1.cos(), |_, x2, x3| x2.cos() * x3 * x3).unwrap();
        let bar = vertical_average_vec(&v);
        let tilde = fluctuation(&v);
        let rebuilt = HVecField::new(bar.0.lift().add(tilde.c1()), bar.1.lift().add(tilde.c2())).unwrap();
        let (x1, y1) = xy_from_parts(&bar, &tilde);
        let (x2, y2) = xy_functionals(&rebuilt);
        assert!((x1 - x2).abs() < 1e-12 * x1 && (y1 - y2).abs() < 1e-12 * y1);
    }

    #[test]
    fn projected_field_is_idempotent() {
        let g = make_grid(16, 16, 9, 1.0).unwrap();
        let v = HVecField::from_fns(&g, |x1, x2, x3| (x1 * 2.0).cos() + x2.sin() * x3, |x1, x2, _| (x1 + x2).cos()).unwrap();
        let th = eval_on_grid(&g, |x1, _, x3| x1.sin() * x3).unwrap();
        let r = identity_residuals(&state(v, th, 0.0), &NoiseBasis::zero(&g, 1).unwrap());
        assert!(r["projection_idempotency"] < 1e-12);
        assert!(!r.contains_key("p_gamma_x3_locality"));
    }

    #[test]
    fn kadlec_neumann_cosine_symbolic() {
        let g = make_grid(32, 32, 33, 1.0).unwrap();
        // f = cos x₁ cos 2x₂ cos(π(x₃+1))
        let c = |z: f64| (PI * (z + 1.0)).cos();
        let s = |z: f64| (PI * (z + 1.0)).sin();
        let hess = Hessian::from_fn(&g, |x1, x2, z| {
            let (a, b) = (x1.cos(), (2.0 * x2).cos());
            let (da, db) = (-x1.sin(), -2.0 * (2.0 * x2).sin());
            [-a * b * c(z), da * db * c(z), -PI * da * b * s(z), -4.0 * a * b * c(z), -PI * a * db * s(z), -PI * PI * a * b * c(z)]
        })
        .unwrap();
        let top = eval_on_grid(&g, |x1, x2, _| x1.cos() * (2.0 * x2).cos() * c(0.0)).unwrap();
        let k = kadlec_residual(&hess, &top_gradient(&top), 0.0);
        assert!(k.relative < 1e-12, "{k:?}");
        let f = eval_on_grid(&g, |x1, x2, z| x1.cos() * (2.0 * x2).cos() * c(z)).unwrap();
        let d = kadlec_discrete(&f, 0.0, VerticalBc::Neumann);
        assert!(d.relative < 1e-2);
    }
}

//! Right-hand-side terms of the coupled velocity/temperature system.
//!
//! Sign conventions: [`nonlinear_v`] and [`nonlinear_theta`] return the
//! transport terms that are *subtracted* from the right-hand side; every
//! other term is returned with the sign it carries on the right-hand side.

mod coefficients;
mod forcing;
mod stratonovich;

pub use coefficients::{CoefficientReport, CoefficientSet};
pub use forcing::{ForcingKind, ForcingSpec, GrowthAudit};
pub use stratonovich::{composed_correction_theta, composed_correction_v, strat_correction_theta, strat_correction_v};

use crate::domain::{inner, integrate, HVecField, HorizontalField, ScalarField, SymTensorField};
use crate::noise::NoiseBasis;
use crate::operators::{
    cumulative_integral, d1, d2, d3, d33, dealias, grad_h, laplace, laplace_vec, trace_top, w_of_v,
    Hessian, ProjectionWorkspace, VerticalBc,
};

/// `[∂₁f, ∂₂f, ∂₃f]`
pub fn grad3(f: &ScalarField) -> [ScalarField; 3] {
    let g = grad_h(f);
    let (a, b) = g.into_components();
    [a, b, d3(f)]
}

/// `(u·∇_H)f + w ∂₃f` from precomputed pieces.
fn advect(u: &HVecField, w: &ScalarField, grad: &[ScalarField; 3]) -> ScalarField {
    let mut out = u.c1().mul(&grad[0]);
    out.add_product(1.0, u.c2(), &grad[1]);
    out.add_product(1.0, w, &grad[2]);
    out
}

/// `(v·∇_H)v + w(v)∂₃v`, inputs and output filtered by the 2/3 rule.
pub fn nonlinear_v(v: &HVecField) -> HVecField {
    let vd = v.map_components(dealias);
    let w = w_of_v(&vd);
    let n1 = advect(&vd, &w, &grad3(vd.c1()));
    let n2 = advect(&vd, &w, &grad3(vd.c2()));
    HVecField::from_parts(dealias(&n1), dealias(&n2))
}

/// Advective form `(v·∇_H)θ + w(v)∂₃θ` (dealiased).
pub fn nonlinear_theta(v: &HVecField, theta: &ScalarField) -> ScalarField {
    let vd = v.map_components(dealias);
    let td = dealias(theta);
    let w = w_of_v(&vd);
    dealias(&advect(&vd, &w, &grad3(&td)))
}

/// Conservative form `div_H(vθ) + ∂₃(w(v)θ)`, the pointwise counterpart of
/// the variational transport functional (dealiased).
pub fn nonlinear_theta_conservative(v: &HVecField, theta: &ScalarField) -> ScalarField {
    let vd = v.map_components(dealias);
    let td = dealias(theta);
    let w = w_of_v(&vd);
    let mut out = d1(&vd.c1().mul(&td));
    out.axpy(1.0, &d2(&vd.c2().mul(&td)));
    out.axpy(1.0, &d3(&w.mul(&td)));
    dealias(&out)
}

/// `𝒯_θ(φ) = −∫(θ v·∇_Hφ + θ w(v) ∂₃φ) dx`
pub fn weak_form_pairing(v: &HVecField, theta: &ScalarField, test: &ScalarField) -> f64 {
    let w = w_of_v(v);
    let g = grad3(test);
    let mut integrand = theta.mul(&advect(v, &w, &g));
    integrand = integrand.scale(-1.0);
    integrate(&integrand)
}

/// `𝒥_κθ = ∇_H ∫_{−h}^{x₃} κθ dζ`
pub fn j_kappa(theta: &ScalarField, kappa: &ScalarField) -> HVecField {
    grad_h(&cumulative_integral(&kappa.mul(theta)))
}

/// `(φ·∇)v` for one mode.
pub fn transport_v(phi: &[ScalarField; 3], v: &HVecField) -> HVecField {
    let t = |c: &ScalarField| {
        let g = grad3(c);
        let mut out = phi[0].mul(&g[0]);
        out.add_product(1.0, &phi[1], &g[1]);
        out.add_product(1.0, &phi[2], &g[2]);
        out
    };
    HVecField::from_parts(t(v.c1()), t(v.c2()))
}

/// `(ψ·∇)θ` for one mode.
pub fn transport_theta(psi: &[ScalarField; 3], theta: &ScalarField) -> ScalarField {
    let g = grad3(theta);
    let mut out = psi[0].mul(&g[0]);
    out.add_product(1.0, &psi[1], &g[1]);
    out.add_product(1.0, &psi[2], &g[2]);
    out
}

fn contract_gamma(gamma: &[[ScalarField; 2]; 2], q: &(HorizontalField, HorizontalField), out: &mut HVecField) {
    let (q1, q2) = (q.0.lift(), q.1.lift());
    let mut o1 = out.c1().clone();
    let mut o2 = out.c2().clone();
    o1.add_product(1.0, &gamma[0][0], &q1);
    o1.add_product(1.0, &gamma[0][1], &q2);
    o2.add_product(1.0, &gamma[1][0], &q1);
    o2.add_product(1.0, &gamma[1][1], &q2);
    *out = HVecField::from_parts(o1, o2);
}

/// `𝒫_γ v = (ΣₙΣₘ γₙ^{ℓ,m} (ℚ[(φₙ·∇)v + G_{v,n}])^m)_ℓ`; `g` may be empty.
pub fn p_gamma(v: &HVecField, basis: &NoiseBasis, g: &[HVecField]) -> HVecField {
    let ws = ProjectionWorkspace::new(v.grid());
    let mut out = HVecField::zeros(v.grid());
    for n in 0..basis.n_modes() {
        let gamma = basis.gamma(n);
        if gamma.iter().flatten().all(|f| f.max_abs() == 0.0) {
            continue;
        }
        let mut term = transport_v(basis.phi(n), v);
        if let Some(gn) = g.get(n) {
            term.axpy(1.0, gn);
        }
        contract_gamma(gamma, &ws.q(&term), &mut out);
    }
    out
}

/// `𝒫_{γ,φ}v`, the part of `𝒫_γ` linear in `v`.
pub fn p_gamma_phi(v: &HVecField, basis: &NoiseBasis) -> HVecField {
    p_gamma(v, basis, &[])
}

/// `𝒫_{γ,G}`, the part of `𝒫_γ` coming from the `G` fields alone.
pub fn p_gamma_g(g: &[HVecField], basis: &NoiseBasis) -> HVecField {
    let grid = basis.grid();
    let ws = ProjectionWorkspace::new(grid);
    let mut out = HVecField::zeros(grid);
    for (n, gn) in g.iter().enumerate().take(basis.n_modes()) {
        contract_gamma(basis.gamma(n), &ws.q(gn), &mut out);
    }
    out
}

/// Turbulent pressures `P̃ₙ` (zero mean) with `∇_H P̃ₙ = ℚ[(φₙ·∇)v + G_{v,n}]`.
pub fn turbulent_pressures(v: &HVecField, basis: &NoiseBasis, g: &[HVecField]) -> Vec<HorizontalField> {
    let ws = ProjectionWorkspace::new(v.grid());
    (0..basis.n_modes())
        .map(|n| {
            let mut term = transport_v(basis.phi(n), v);
            if let Some(gn) = g.get(n) {
                term.axpy(1.0, gn);
            }
            ws.q_with_potential(&term).1
        })
        .collect()
}

/// Per-mode velocity noise coefficients `ℙ[(φₙ·∇)v + G_{v,n}]`.
pub fn stochastic_diffusion_v(v: &HVecField, basis: &NoiseBasis, g: &[HVecField]) -> Vec<HVecField> {
    let ws = ProjectionWorkspace::new(v.grid());
    (0..basis.n_modes())
        .map(|n| {
            let mut term = transport_v(basis.phi(n), v);
            if let Some(gn) = g.get(n) {
                term.axpy(1.0, gn);
            }
            ws.project(&term)
        })
        .collect()
}

/// Per-mode temperature noise coefficients `(ψₙ·∇)θ + G_{θ,n}`.
pub fn stochastic_diffusion_theta(theta: &ScalarField, basis: &NoiseBasis, g: &[ScalarField]) -> Vec<ScalarField> {
    (0..basis.n_modes())
        .map(|n| {
            let mut term = transport_theta(basis.psi(n), theta);
            if let Some(gn) = g.get(n) {
                term.axpy(1.0, gn);
            }
            term
        })
        .collect()
}

/// `Σᵢⱼ aⁱʲ∂ᵢⱼf + Σⱼ bʲ∂ⱼf` with `∂²₃₃` closed by `bc`.
pub fn non_divergence_operator(f: &ScalarField, a: &SymTensorField, b: &[ScalarField; 3], bc: VerticalBc) -> ScalarField {
    let hess = Hessian::from_field(f, bc);
    let mut out = ScalarField::zeros(f.grid());
    for i in 0..3 {
        out.add_product(1.0, a.get(i, i), hess.get(i, i));
        for j in i + 1..3 {
            out.add_product(2.0, a.get(i, j), hess.get(i, j));
        }
    }
    if b.iter().any(|c| c.max_abs() != 0.0) {
        let g = grad3(f);
        for j in 0..3 {
            out.add_product(1.0, &b[j], &g[j]);
        }
    }
    out
}

/// Flux-form `∂₃(a ∂₃f)` with midpoint-averaged coefficients and the same
/// ghost closures as [`d33`].
fn vertical_flux_form(f: &ScalarField, a: &ScalarField, bc: VerticalBc) -> ScalarField {
    if let VerticalBc::Free = bc {
        return d3(&a.mul(&d3(f)));
    }
    let g = f.grid();
    let (nz, dz) = (g.nz(), g.dz());
    let dz2 = dz * dz;
    let alpha = match bc {
        VerticalBc::Robin(al) => al,
        _ => 0.0,
    };
    let mut out = vec![0.0; g.n_points()];
    for ((c, ac), o) in f.values().chunks(nz).zip(a.values().chunks(nz)).zip(out.chunks_mut(nz)) {
        let half = |k: usize| 0.5 * (ac[k] + ac[k + 1]);
        for k in 1..nz - 1 {
            o[k] = (half(k) * (c[k + 1] - c[k]) - half(k - 1) * (c[k] - c[k - 1])) / dz2;
        }
        o[0] = 2.0 * half(0) * (c[1] - c[0]) / dz2;
        let n = nz - 1;
        o[n] = half(n - 1) * (2.0 * c[n - 1] - 2.0 * c[n] - 2.0 * dz * alpha * c[n]) / dz2;
    }
    ScalarField::from_raw(g, out)
}

/// `Σᵢⱼ ∂ᵢ(aⁱʲ∂ⱼf) + Σⱼ bʲ∂ⱼf`; the `∂₃(a³³∂₃f)` part is in flux form with
/// ghost closure `bc`.
pub fn divergence_operator(f: &ScalarField, a: &SymTensorField, b: &[ScalarField; 3], bc: VerticalBc) -> ScalarField {
    let g = grad3(f);
    let flux = |i: usize, skip33: bool| -> ScalarField {
        let mut q = ScalarField::zeros(f.grid());
        for j in 0..3 {
            if skip33 && j == 2 {
                continue;
            }
            q.add_product(1.0, a.get(i, j), &g[j]);
        }
        q
    };
    let mut out = d1(&flux(0, false));
    out.axpy(1.0, &d2(&flux(1, false)));
    out.axpy(1.0, &d3(&flux(2, true)));
    out.axpy(1.0, &vertical_flux_form(f, a.get(2, 2), bc));
    if b.iter().any(|c| c.max_abs() != 0.0) {
        for j in 0..3 {
            out.add_product(1.0, &b[j], &g[j]);
        }
    }
    out
}

/// `ℒ_v v` with Neumann walls. Identity coefficients reduce to
/// [`laplace_vec`] exactly.
pub fn apply_lv(v: &HVecField, coeffs: &CoefficientSet) -> HVecField {
    if coeffs.v_is_identity() {
        return laplace_vec(v, VerticalBc::Neumann).expect("Neumann closure is valid for vectors");
    }
    v.map_components(|c| non_divergence_operator(c, &coeffs.a_v, &coeffs.b_v, VerticalBc::Neumann))
}

/// Strong `ℒ_θθ` with the Robin ghost closure. Identity coefficients
/// reduce to [`laplace`] exactly.
pub fn apply_ltheta_strong(theta: &ScalarField, coeffs: &CoefficientSet) -> ScalarField {
    let bc = VerticalBc::Robin(coeffs.alpha);
    if coeffs.theta_is_identity() {
        return laplace(theta, bc);
    }
    divergence_operator(theta, &coeffs.a_theta, &coeffs.b_theta, bc)
}

/// Weak pairing `⟨ℒ_θ^w θ, φ⟩ = −∫a∇θ·∇φ − α∫a³³θφ(·,0) + ∫(b·∇θ)φ`.
pub fn apply_ltheta_weak_residual(theta: &ScalarField, coeffs: &CoefficientSet, test: &ScalarField) -> f64 {
    let gt = grad3(theta);
    let gp = grad3(test);
    let mut total = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            total -= inner(&coeffs.a_theta.get(i, j).mul(&gt[j]), &gp[i]);
        }
        total += inner(&coeffs.b_theta[i].mul(&gt[i]), test);
    }
    let top = trace_top(&coeffs.a_theta.get(2, 2).mul(theta).mul(test));
    total - coeffs.alpha * top.integral()
}

/// `∂²₃₃` closures used by the solver, re-exported for diagnostics.
pub fn vertical_second_derivative(f: &ScalarField, bc: VerticalBc) -> ScalarField {
    d33(f, bc)
}

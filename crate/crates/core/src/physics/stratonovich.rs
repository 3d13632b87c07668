//! Itô drifts that convert Stratonovich transport noise.

use super::{divergence_operator, non_divergence_operator, p_gamma, transport_v};
use crate::domain::{HVecField, ScalarField, SymTensorField};
use crate::error::{HydroError, Result};
use crate::noise::{NoiseBasis, StratCoefficients};
use crate::operators::{ProjectionWorkspace, VerticalBc};

fn require_flags(basis: &NoiseBasis) -> Result<()> {
    if !basis.flags().phi_h_x3_independent {
        return Err(HydroError::Assumption(
            "Stratonovich conversion needs phi^1, phi^2 and gamma independent of x3".into(),
        ));
    }
    Ok(())
}

/// `div((a_ψ − I)∇θ) + b_θ·∇θ`, which equals `½Σₙ(ψₙ·∇)[(ψₙ·∇)θ]`.
/// The vertical flux uses the ghost closure `bc`.
pub fn strat_correction_theta(
    theta: &ScalarField,
    strat: &StratCoefficients,
    basis: &NoiseBasis,
    bc: VerticalBc,
) -> Result<ScalarField> {
    require_flags(basis)?;
    if basis.psi_is_zero() {
        return Ok(ScalarField::zeros(theta.grid()));
    }
    let a = strat.a_psi.sub(&SymTensorField::identity(theta.grid()));
    Ok(divergence_operator(theta, &a, &strat.b_theta, bc))
}

/// `Σ(a_φ − I)ⁱʲ∂ᵢⱼv + b_v·∇v + ½𝒫_φv` with Neumann walls, where
/// `𝒫_φv = (ΣᵢΣₙ ∂ⱼφₙⁱ (ℚ[(φₙ·∇)v])ⁱ)ⱼ`.
///
/// Up to gradients of x₃-independent fields this is
/// `½Σₙ(φₙ·∇)ℙ[(φₙ·∇)v]`, so after projection it is the full Itô drift.
pub fn strat_correction_v(v: &HVecField, strat: &StratCoefficients, basis: &NoiseBasis) -> Result<HVecField> {
    require_flags(basis)?;
    if basis.phi_is_zero() {
        return Ok(HVecField::zeros(v.grid()));
    }
    let a = strat.a_phi.sub(&SymTensorField::identity(v.grid()));
    let mut out = v.map_components(|c| non_divergence_operator(c, &a, &strat.b_v, VerticalBc::Neumann));
    // kernel[j][i] = ∂ⱼφⁱ is already laid out as γ^{ℓ=j, m=i}.
    let weighted = basis.with_gamma(strat.p_phi_kernel.clone())?;
    out.axpy(0.5, &p_gamma(v, &weighted, &[]));
    Ok(out)
}

/// `½Σₙ(φₙ·∇)ℙ[(φₙ·∇)v]` by direct composition; reference for tests and
/// the verification suite.
pub fn composed_correction_v(v: &HVecField, basis: &NoiseBasis) -> HVecField {
    let ws = ProjectionWorkspace::new(v.grid());
    let mut out = HVecField::zeros(v.grid());
    for n in 0..basis.n_modes() {
        let inner = ws.project(&transport_v(basis.phi(n), v));
        out.axpy(0.5, &transport_v(basis.phi(n), &inner));
    }
    out
}

/// `½Σₙ(ψₙ·∇)[(ψₙ·∇)θ]` by direct composition.
pub fn composed_correction_theta(theta: &ScalarField, basis: &NoiseBasis) -> ScalarField {
    let mut out = ScalarField::zeros(theta.grid());
    for n in 0..basis.n_modes() {
        let psi = basis.psi(n);
        let once = super::transport_theta(psi, theta);
        out.axpy(0.5, &super::transport_theta(psi, &once));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{eval_on_grid, l2_norm, l2_norm_vec, make_grid};
    use crate::noise::{make_kraichnan_basis, strat_coefficients};
    use crate::operators::{d1, hydrostatic_project};
    use std::f64::consts::PI;

    #[test]
    fn zero_basis_gives_zero() {
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let b = NoiseBasis::zero(&g, 2).unwrap();
        let s = strat_coefficients(&b);
        let th = eval_on_grid(&g, |x1, _, x3| x1.sin() + x3).unwrap();
        let v = HVecField::from_fns(&g, |x1, _, _| x1.cos(), |_, x2, x3| x2.sin() * x3).unwrap();
        assert_eq!(strat_correction_theta(&th, &s, &b, VerticalBc::Neumann).unwrap().max_abs(), 0.0);
        assert_eq!(strat_correction_v(&v, &s, &b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_mode_is_half_c_squared_d11() {
        let g = make_grid(16, 16, 9, 1.0).unwrap();
        let c = 0.7;
        let b = NoiseBasis::constant(&g, &[[c, 0.0, 0.0]], &[[c, 0.0, 0.0]]).unwrap();
        let s = strat_coefficients(&b);
        let v = HVecField::from_fns(&g, |x1, x2, x3| (x1 + x2).sin() * x3 * x3, |x1, _, _| (2.0 * x1).cos()).unwrap();
        let got = strat_correction_v(&v, &s, &b).unwrap();
        let want = v.map_components(|f| d1(&d1(f)).scale(0.5 * c * c));
        assert!(got.sub(&want).max_abs() < 1e-12);
        let th = eval_on_grid(&g, |x1, _, x3| x1.cos() * x3.exp()).unwrap();
        let got = strat_correction_theta(&th, &s, &b, VerticalBc::Neumann).unwrap();
        assert!(got.sub(&d1(&d1(&th)).scale(0.5 * c * c)).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_x3_dependent_phi() {
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let z = ScalarField::zeros(&g);
        let phi1 = eval_on_grid(&g, |_, _, x3| x3).unwrap();
        let zz = || [[z.clone(), z.clone()], [z.clone(), z.clone()]];
        let b = NoiseBasis::from_fields(&g, vec![[phi1, z.clone(), z.clone()]], vec![[z.clone(), z.clone(), z.clone()]], vec![zz()])
            .unwrap();
        let s = strat_coefficients(&b);
        let th = ScalarField::constant(&g, 1.0);
        assert!(matches!(strat_correction_theta(&th, &s, &b, VerticalBc::Free), Err(HydroError::Assumption(_))));
        assert!(strat_correction_v(&HVecField::zeros(&g), &s, &b).is_err());
    }

    fn order(errs: &[f64]) -> Vec<f64> {
        errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    #[test]
    fn theta_correction_matches_composition() {
        // ψ = (0, 0, g) with g vanishing at both walls.
        let mut errs = Vec::new();
        for nz in [17, 33, 65] {
            let g = make_grid(8, 8, nz, 1.0).unwrap();
            let z = ScalarField::zeros(&g);
            let psi3 = eval_on_grid(&g, |x1, _, x3| (1.0 + 0.3 * x1.cos()) * (PI * x3).sin()).unwrap();
            let zz = || [[z.clone(), z.clone()], [z.clone(), z.clone()]];
            let b = NoiseBasis::from_fields(
                &g,
                vec![[z.clone(), z.clone(), z.clone()]],
                vec![[z.clone(), z.clone(), psi3]],
                vec![zz()],
            )
            .unwrap();
            let s = strat_coefficients(&b);
            let th = eval_on_grid(&g, |x1, x2, x3| (x1 - x2).cos() * x3.exp() + (x2 + 0.3).cos() * x3 * x3).unwrap();
            let got = strat_correction_theta(&th, &s, &b, VerticalBc::Free).unwrap();
            // ½g∂₃(g∂₃θ) evaluated symbolically.
            let want = eval_on_grid(&g, |x1, x2, x3| {
                let a = 1.0 + 0.3 * x1.cos();
                let gg = a * (PI * x3).sin();
                let gp = a * PI * (PI * x3).cos();
                let t3 = (x1 - x2).cos() * x3.exp() + 2.0 * (x2 + 0.3).cos() * x3;
                let t33 = (x1 - x2).cos() * x3.exp() + 2.0 * (x2 + 0.3).cos();
                0.5 * gg * (gp * t3 + gg * t33)
            })
            .unwrap();
            errs.push(l2_norm(&got.sub(&want)) / l2_norm(&want));
            let composed = composed_correction_theta(&th, &b);
            assert!(l2_norm(&composed.sub(&want)) / l2_norm(&want) < 0.05);
        }
        assert!(order(&errs).iter().all(|&p| p > 1.9), "{errs:?}");
    }

    #[test]
    fn v_correction_matches_projected_composition() {
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let g = make_grid(n, n, 5, 1.0).unwrap();
            let b = make_kraichnan_basis(&g, 4, 3.0, 0.6, 9).unwrap();
            let s = strat_coefficients(&b);
            let v = HVecField::from_fns(&g, |x1, x2, x3| (x1 + x2).sin() * (1.0 + x3), |x1, _, _| x1.cos()).unwrap();
            let got = hydrostatic_project(&strat_correction_v(&v, &s, &b).unwrap());
            let want = hydrostatic_project(&composed_correction_v(&v, &b));
            errs.push(l2_norm_vec(&got.sub(&want)) / l2_norm_vec(&want));
        }
        // Both sides are spectral in x_H and exact in x₃ for linear profiles.
        assert!(errs.iter().all(|&e| e < 1e-10), "{errs:?}");
    }
}

//! Coefficients of the Itô form of Stratonovich transport noise.

use super::NoiseBasis;
use crate::domain::{ScalarField, SymTensorField};
use crate::operators::{d1, d2, d3};

/// `a_φ = I + ½Σφφᵀ`, `a_ψ = I + ½Σψψᵀ`,
/// `b_vʲ = ½ΣₙΣᵢ(∂ᵢφₙʲ)φₙⁱ`, `b_θʲ = −½Σₙ(div ψₙ)ψₙʲ`.
#[derive(Clone, Debug)]
pub struct StratCoefficients {
    pub a_phi: SymTensorField,
    pub a_psi: SymTensorField,
    pub b_v: [ScalarField; 3],
    pub b_theta: [ScalarField; 3],
    /// `p_phi_kernel[n][j][i] = ∂ⱼφₙⁱ` for horizontal `i, j`.
    pub p_phi_kernel: Vec<[[ScalarField; 2]; 2]>,
}

fn grad3(f: &ScalarField) -> [ScalarField; 3] {
    [d1(f), d2(f), d3(f)]
}

fn second_moment(grid: &std::sync::Arc<crate::domain::Grid>, fields: &[&[ScalarField; 3]], shift: f64) -> SymTensorField {
    let mut a = SymTensorField::identity(grid).scale(shift);
    for c in fields {
        for i in 0..3 {
            for j in i..3 {
                a.get_mut(i, j).add_product(0.5, &c[i], &c[j]);
            }
        }
    }
    a
}

impl StratCoefficients {
    /// Smallest eigenvalue of `a_φ − ½Σφφᵀ` (exactly the identity).
    pub fn ellipticity_margin_phi(&self, basis: &NoiseBasis) -> f64 {
        let phi: Vec<&[ScalarField; 3]> = (0..basis.n_modes()).map(|n| basis.phi(n)).collect();
        let half = second_moment(basis.grid(), &phi, 0.0);
        self.a_phi.sub(&half).min_eigenvalue()
    }

    pub fn ellipticity_margin_psi(&self, basis: &NoiseBasis) -> f64 {
        let psi: Vec<&[ScalarField; 3]> = (0..basis.n_modes()).map(|n| basis.psi(n)).collect();
        let half = second_moment(basis.grid(), &psi, 0.0);
        self.a_psi.sub(&half).min_eigenvalue()
    }
}

pub fn strat_coefficients(basis: &NoiseBasis) -> StratCoefficients {
    let grid = basis.grid();
    let n_modes = basis.n_modes();
    let phi: Vec<&[ScalarField; 3]> = (0..n_modes).map(|n| basis.phi(n)).collect();
    let psi: Vec<&[ScalarField; 3]> = (0..n_modes).map(|n| basis.psi(n)).collect();
    let a_phi = second_moment(grid, &phi, 1.0);
    let a_psi = second_moment(grid, &psi, 1.0);

    let mut b_v: [ScalarField; 3] = std::array::from_fn(|_| ScalarField::zeros(grid));
    let mut b_theta: [ScalarField; 3] = std::array::from_fn(|_| ScalarField::zeros(grid));
    let mut p_phi_kernel = Vec::with_capacity(n_modes);
    for n in 0..n_modes {
        let p = basis.phi(n);
        // grads[j][i] = ∂ᵢφʲ
        let grads: [[ScalarField; 3]; 3] = std::array::from_fn(|j| grad3(&p[j]));
        for j in 0..3 {
            for i in 0..3 {
                b_v[j].add_product(0.5, &grads[j][i], &p[i]);
            }
        }
        p_phi_kernel.push([
            [grads[0][0].clone(), grads[1][0].clone()],
            [grads[0][1].clone(), grads[1][1].clone()],
        ]);

        let q = basis.psi(n);
        let mut div = d1(&q[0]);
        div.axpy(1.0, &d2(&q[1]));
        div.axpy(1.0, &d3(&q[2]));
        for j in 0..3 {
            b_theta[j].add_product(-0.5, &div, &q[j]);
        }
    }
    StratCoefficients { a_phi, a_psi, b_v, b_theta, p_phi_kernel }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{eval_on_grid, make_grid};
    use crate::noise::make_kraichnan_basis;

    #[test]
    fn constant_mode() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let c = 0.9;
        let b = NoiseBasis::constant(&g, &[[c, 0.0, 0.0]], &[[0.0; 3]]).unwrap();
        let s = strat_coefficients(&b);
        assert!(s.a_phi.get(0, 0).values().iter().all(|&v| v == 1.0 + c * c / 2.0));
        assert!(s.a_phi.get(1, 1).values().iter().all(|&v| v == 1.0));
        assert!(s.a_phi.get(0, 1).values().iter().all(|&v| v == 0.0));
        assert!(s.b_v.iter().all(|f| f.max_abs() == 0.0));
        assert!(s.a_psi.is_identity());
    }

    #[test]
    fn zero_basis_gives_identity() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let s = strat_coefficients(&NoiseBasis::zero(&g, 3).unwrap());
        assert!(s.a_phi.is_identity() && s.a_psi.is_identity());
        assert!(s.b_v.iter().chain(&s.b_theta).all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn sine_shear_mode() {
        let g = make_grid(16, 16, 5, 1.0).unwrap();
        let z = ScalarField::zeros(&g);
        let phi1 = eval_on_grid(&g, |_, x2, _| x2.sin()).unwrap();
        let b = NoiseBasis::from_fields(
            &g,
            vec![[phi1, z.clone(), z.clone()]],
            vec![[z.clone(), z.clone(), z.clone()]],
            vec![[[z.clone(), z.clone()], [z.clone(), z]]],
        )
        .unwrap();
        let s = strat_coefficients(&b);
        assert!(s.b_v.iter().all(|f| f.max_abs() < 1e-14));
        let want = eval_on_grid(&g, |_, x2, _| 1.0 + 0.5 * x2.sin().powi(2)).unwrap();
        assert!(s.a_phi.get(0, 0).sub(&want).max_abs() < 1e-15);
        // ∂₂φ¹ = cos x₂
        let cos = eval_on_grid(&g, |_, x2, _| x2.cos()).unwrap();
        assert!(s.p_phi_kernel[0][1][0].sub(&cos).max_abs() < 1e-13);
    }

    #[test]
    fn margin_is_one_and_scaling_is_quadratic() {
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let b = make_kraichnan_basis(&g, 4, 3.0, 0.8, 3).unwrap();
        let s = strat_coefficients(&b);
        assert!((s.ellipticity_margin_phi(&b) - 1.0).abs() < 1e-12);
        assert!((s.ellipticity_margin_psi(&b) - 1.0).abs() < 1e-12);
        let lambda = 1.3;
        let s2 = strat_coefficients(&b.scaled(lambda));
        let id = SymTensorField::identity(&g);
        for i in 0..3 {
            for j in i..3 {
                let lhs = s2.a_phi.sub(&id);
                let rhs = s.a_phi.sub(&id).scale(lambda * lambda);
                assert!(lhs.get(i, j).sub(rhs.get(i, j)).max_abs() < 1e-14);
            }
        }
    }
}

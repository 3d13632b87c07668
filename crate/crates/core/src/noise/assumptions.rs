//! Runtime checks of the noise admissibility conditions.

use std::fmt;

use serde::Serialize;

use super::NoiseBasis;
use crate::domain::{integrate, sym3_eigenvalues, ScalarField};
use crate::operators::{d1, d2, d3};

/// Parabolicity requires `ν < 2`; values within this margin of 2 fail.
pub const PARABOLICITY_LIMIT: f64 = 2.0 - 1e-9;

/// Measured constants of a noise basis.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    /// Largest eigenvalue of `Σₙ φₙφₙᵀ` over all nodes.
    pub nu_phi: f64,
    /// Same for `ψ`.
    pub nu_psi: f64,
    pub delta: f64,
    /// `max_j ‖(Σₙ|φₙʲ|²)^{1/2}‖_{L^{3+δ}}`
    pub m_phi: f64,
    /// `max_{j,k} ‖(Σₙ|∂ₖφₙʲ|²)^{1/2}‖_{L^{3+δ}}`
    pub m_grad_phi: f64,
    /// `max_{ℓ,m} ‖(Σₙ|γₙ^{ℓ,m}|²)^{1/2}‖_{L^{3+δ}}`
    pub m_gamma: f64,
    /// `max_{j,x} (Σₙ|ψₙʲ(x)|²)^{1/2}`
    pub m_psi_sup: f64,
    /// Largest of the four bounds above.
    pub m_est: f64,
    pub pass_parabolicity: bool,
    /// All regularity bounds are finite.
    pub pass_regularity: bool,
    pub pass_psi_bound: bool,
}

impl AssumptionReport {
    pub fn nu(&self) -> f64 {
        self.nu_phi.max(self.nu_psi)
    }

    /// Only the parabolicity clause gates simulation.
    pub fn pass(&self) -> bool {
        self.pass_parabolicity
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |b: bool| if b { "pass" } else { "FAIL" };
        writeln!(f, "noise assumption report")?;
        writeln!(f, "  nu_phi      = {:.12}", self.nu_phi)?;
        writeln!(f, "  nu_psi      = {:.12}", self.nu_psi)?;
        writeln!(f, "  parabolicity (nu < 2): {}", verdict(self.pass_parabolicity))?;
        writeln!(f, "  delta       = {}", self.delta)?;
        writeln!(f, "  M_phi       = {:.6e}", self.m_phi)?;
        writeln!(f, "  M_grad_phi  = {:.6e}", self.m_grad_phi)?;
        writeln!(f, "  M_gamma     = {:.6e}", self.m_gamma)?;
        writeln!(f, "  sup |psi|   = {:.6e}", self.m_psi_sup)?;
        writeln!(f, "  M_est       = {:.6e}", self.m_est)?;
        writeln!(f, "  regularity bounds finite: {}", verdict(self.pass_regularity))?;
        write!(f, "  psi sup bound finite:     {}", verdict(self.pass_psi_bound))
    }
}

/// Largest eigenvalue of `Σₙ cₙcₙᵀ` maximized over the grid.
fn parabolicity_constant(fields: &[[ScalarField; 3]]) -> f64 {
    let Some(first) = fields.first() else { return 0.0 };
    let np = first[0].grid().n_points();
    let mut nu = 0.0_f64;
    for p in 0..np {
        let mut m = [[0.0; 3]; 3];
        for c in fields {
            let v = [c[0].values()[p], c[1].values()[p], c[2].values()[p]];
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += v[a] * v[b];
                }
            }
        }
        nu = nu.max(sym3_eigenvalues(&m)[2]);
    }
    nu
}

/// `‖(Σₙ|fₙ|²)^{1/2}‖_{L^q}`
fn l2_sum_lq(fields: &[&ScalarField], q: f64) -> f64 {
    let grid = fields[0].grid();
    let mut sq = vec![0.0; grid.n_points()];
    for f in fields {
        sq.iter_mut().zip(f.values()).for_each(|(s, v)| *s += v * v);
    }
    let integrand = ScalarField::from_raw(grid, sq.into_iter().map(|s| s.sqrt().powf(q)).collect());
    integrate(&integrand).powf(1.0 / q)
}

pub fn check_assumptions(basis: &NoiseBasis, delta: f64) -> AssumptionReport {
    let phi: Vec<[ScalarField; 3]> = (0..basis.n_modes()).map(|n| basis.phi(n).clone()).collect();
    let psi: Vec<[ScalarField; 3]> = (0..basis.n_modes()).map(|n| basis.psi(n).clone()).collect();
    let nu_phi = parabolicity_constant(&phi);
    let nu_psi = parabolicity_constant(&psi);
    let q = 3.0 + delta;

    let mut m_phi = 0.0_f64;
    let mut m_grad_phi = 0.0_f64;
    for j in 0..3 {
        let comp: Vec<&ScalarField> = phi.iter().map(|p| &p[j]).collect();
        m_phi = m_phi.max(l2_sum_lq(&comp, q));
        let grads: [Vec<ScalarField>; 3] = [
            phi.iter().map(|p| d1(&p[j])).collect(),
            phi.iter().map(|p| d2(&p[j])).collect(),
            phi.iter().map(|p| d3(&p[j])).collect(),
        ];
        for g in &grads {
            let refs: Vec<&ScalarField> = g.iter().collect();
            m_grad_phi = m_grad_phi.max(l2_sum_lq(&refs, q));
        }
    }
    let mut m_gamma = 0.0_f64;
    for l in 0..2 {
        for m in 0..2 {
            let comp: Vec<&ScalarField> = (0..basis.n_modes()).map(|n| &basis.gamma(n)[l][m]).collect();
            m_gamma = m_gamma.max(l2_sum_lq(&comp, q));
        }
    }
    let mut m_psi_sup = 0.0_f64;
    for j in 0..3 {
        let np = basis.grid().n_points();
        for p in 0..np {
            let s: f64 = psi.iter().map(|c| c[j].values()[p].powi(2)).sum();
            m_psi_sup = m_psi_sup.max(s.sqrt());
        }
    }
    let m_est = m_phi.max(m_grad_phi).max(m_gamma).max(m_psi_sup);
    AssumptionReport {
        nu_phi,
        nu_psi,
        delta,
        m_phi,
        m_grad_phi,
        m_gamma,
        m_psi_sup,
        m_est,
        pass_parabolicity: nu_phi.max(nu_psi) < PARABOLICITY_LIMIT,
        pass_regularity: m_phi.is_finite() && m_grad_phi.is_finite() && m_gamma.is_finite(),
        pass_psi_bound: m_psi_sup.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;
    use crate::noise::make_kraichnan_basis;

    #[test]
    fn constant_mode_nu_is_c_squared() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let c = 0.8;
        let b = NoiseBasis::constant(&g, &[[c, 0.0, 0.0]], &[[0.0; 3]]).unwrap();
        let r = check_assumptions(&b, 0.5);
        assert!((r.nu_phi - c * c).abs() < 1e-15);
        assert_eq!(r.nu_psi, 0.0);
        assert!(r.pass());
    }

    #[test]
    fn rank_one_diagonal_pair() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let b = NoiseBasis::constant(&g, &[[s, s, 0.0]], &[[0.0; 3]]).unwrap();
        let r = check_assumptions(&b, 0.5);
        assert!((r.nu_phi - 1.0).abs() < 1e-12);
        assert!(r.pass());

        let b = NoiseBasis::constant(&g, &[[2f64.sqrt(), 0.0, 0.0]], &[[0.0; 3]]).unwrap();
        let r = check_assumptions(&b, 0.5);
        assert!((r.nu_phi - 2.0).abs() < 1e-12);
        assert!(!r.pass());
    }

    #[test]
    fn zero_basis_passes() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let r = check_assumptions(&NoiseBasis::zero(&g, 2).unwrap(), 0.5);
        assert_eq!(r.nu(), 0.0);
        assert!(r.pass());
        assert_eq!(r.m_est, 0.0);
    }

    #[test]
    fn nu_scales_quadratically() {
        let g = make_grid(8, 8, 5, 1.0).unwrap();
        let b = make_kraichnan_basis(&g, 4, 3.0, 0.6, 11).unwrap();
        let lambda = 1.7;
        let r0 = check_assumptions(&b, 0.5);
        let r1 = check_assumptions(&b.scaled(lambda), 0.5);
        assert!((r1.nu_phi - lambda * lambda * r0.nu_phi).abs() < 1e-10 * r1.nu_phi);
        assert!((r1.nu_psi - lambda * lambda * r0.nu_psi).abs() < 1e-10 * r1.nu_psi);
    }

    #[test]
    fn display_mentions_verdict() {
        let g = make_grid(4, 4, 3, 1.0).unwrap();
        let b = NoiseBasis::constant(&g, &[[1.6, 0.0, 0.0]], &[[0.0; 3]]).unwrap();
        let text = check_assumptions(&b, 0.5).to_string();
        assert!(text.contains("FAIL"));
    }
}

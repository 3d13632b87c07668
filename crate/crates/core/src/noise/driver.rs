//! Counter-based Gaussian increments.
//!
//! Every increment is a pure function of `(base_seed, trajectory, step,
//! mode)`, so trajectories can run on any thread in any order and still
//! reproduce the same path bit for bit.
//!
//! Derivation:
//! ```text
//! traj_seed = mix64(base_seed ^ trajectory · 0x9E3779B97F4A7C15)
//! key       = mix64(mix64(traj_seed ^ step · C1) ^ mode · C2)
//! u1        = unit(mix64(key)),  u2 = unit(mix64(key ^ C3))
//! ΔB        = √dt · √(−2 ln u1) · cos(2π u2)
//! ```
//! with `mix64` the SplitMix64 finalizer and `unit(x) = ((x >> 11) + 1)·2⁻⁵³`
//! in `(0, 1]`.

use std::f64::consts::PI;

use crate::error::{HydroError, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const C1: u64 = 0xBF58_476D_1CE4_E5B9;
const C2: u64 = 0x94D0_49BB_1331_11EB;
const C3: u64 = 0xD6E8_FEB8_6659_FD93;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trajectory seed.
#[inline]
pub fn trajectory_seed(base_seed: u64, trajectory: u64) -> u64 {
    mix64(base_seed ^ trajectory.wrapping_mul(GOLDEN))
}

#[inline]
fn unit(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stateless source of `N(0, dt)` increments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrownianDriver {
    base_seed: u64,
    n_modes: usize,
    dt: f64,
}

impl BrownianDriver {
    pub fn new(base_seed: u64, n_modes: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HydroError::InvalidConfig(format!("dt must be positive (got {dt})")));
        }
        Ok(BrownianDriver { base_seed, n_modes, dt })
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Increment of mode `mode` on step `step` of trajectory `trajectory`.
    #[inline]
    pub fn increment(&self, trajectory: u64, step: u64, mode: u64) -> f64 {
        let ts = trajectory_seed(self.base_seed, trajectory);
        let key = mix64(mix64(ts ^ step.wrapping_mul(C1)) ^ mode.wrapping_mul(C2));
        let u1 = unit(mix64(key));
        let u2 = unit(mix64(key ^ C3));
        self.dt.sqrt() * (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn fill_increments(&self, trajectory: u64, step: u64, out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            *o = self.increment(trajectory, step, m as u64);
        }
    }

    pub fn sample_increments(&self, trajectory: u64, step: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_modes];
        self.fill_increments(trajectory, step, &mut out);
        out
    }
}

/// Free-function form of [`BrownianDriver::sample_increments`].
pub fn sample_increments(driver: &BrownianDriver, trajectory: u64, step: u64) -> Vec<f64> {
    driver.sample_increments(trajectory, step)
}

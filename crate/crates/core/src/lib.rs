//! Simulation and operator verification for the stochastic primitive
//! equations with transport noise on the cylinder 𝕋² × (−h, 0).
//!
//! Horizontal directions use Fourier collocation, the vertical direction
//! second-order finite differences on a boundary-inclusive grid.

pub mod app;
pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod io;
pub mod noise;
pub mod operators;
pub mod physics;
pub mod stepper;
pub mod verify;

pub use domain::{
    eval_on_grid, h1_norm, hk_norm, l2_norm, l4_norm, make_grid, Grid, HVecField, HorizontalField, ScalarField,
    SymTensorField,
};
pub use error::{HydroError, Result};

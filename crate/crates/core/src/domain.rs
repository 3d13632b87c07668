//! The discretized cylinder 𝕋² × (−h, 0) and the field containers.
//!
//! Horizontal directions are 2π-periodic and carried by Fourier collocation
//! on `nx × ny` points. The vertical direction is a uniform,
//! boundary-inclusive grid of `nz` nodes: node 0 is the bottom `x₃ = −h`,
//! node `nz − 1` the top `x₃ = 0`.
//!
//! Point values are stored with x₃ fastest, then x₂, then x₁, which is also
//! the order used by the snapshot format.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{HydroError, Result};
use crate::operators::{self, VerticalBc};

/// Uniform grid on 𝕋² × (−h, 0) with precomputed FFT plans and wavenumbers.
pub struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
    dz: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_int: Vec<i64>,
    ky_int: Vec<i64>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .field("h", &self.h)
            .finish()
    }
}

fn signed_wavenumbers(n: usize) -> Vec<i64> {
    (0..n)
        .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
        .collect()
}

impl Grid {
    /// Validated grid. `nx`, `ny` must be powers of two and at least 4,
    /// `nz ≥ 3` and `h > 0`.
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Arc<Grid>> {
        if nx < 4 || !nx.is_power_of_two() {
            return Err(HydroError::InvalidGrid(format!("nx not a power of two ≥ 4 (got {nx})")));
        }
        if ny < 4 || !ny.is_power_of_two() {
            return Err(HydroError::InvalidGrid(format!("ny not a power of two ≥ 4 (got {ny})")));
        }
        if nz < 3 {
            return Err(HydroError::InvalidGrid(format!("nz must be at least 3 (got {nz})")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(HydroError::InvalidGrid(format!("depth h must be positive (got {h})")));
        }
        let kx_int = signed_wavenumbers(nx);
        let ky_int = signed_wavenumbers(ny);
        // The Nyquist mode carries no derivative.
        let eff = |ks: &[i64], n: usize| -> Vec<f64> {
            ks.iter()
                .map(|&k| if k.unsigned_abs() as usize == n / 2 { 0.0 } else { k as f64 })
                .collect()
        };
        let mut planner = FftPlanner::<f64>::new();
        Ok(Arc::new(Grid {
            nx,
            ny,
            nz,
            h,
            dz: h / (nz - 1) as f64,
            kx: eff(&kx_int, nx),
            ky: eff(&ky_int, ny),
            kx_int,
            ky_int,
            fft_x: planner.plan_fft_forward(nx),
            ifft_x: planner.plan_fft_inverse(nx),
            fft_y: planner.plan_fft_forward(ny),
            ifft_y: planner.plan_fft_inverse(ny),
        }))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }

    /// Number of horizontal points `nx · ny`.
    pub fn n_horizontal(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_points(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    pub fn x1(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.nx as f64
    }

    pub fn x2(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ny as f64
    }

    /// Vertical node `x₃ = −h + k·Δz`; the top node is exactly 0.
    pub fn x3(&self, k: usize) -> f64 {
        if k + 1 == self.nz {
            0.0
        } else {
            -self.h + k as f64 * self.dz
        }
    }

    /// Derivative wavenumber along x₁ for FFT index `i` (zero at Nyquist).
    #[inline]
    pub fn kx(&self, i: usize) -> f64 {
        self.kx[i]
    }

    #[inline]
    pub fn ky(&self, j: usize) -> f64 {
        self.ky[j]
    }

    /// Signed integer wavenumbers, Nyquist included.
    pub fn wavenumber(&self, i: usize, j: usize) -> (i64, i64) {
        (self.kx_int[i], self.ky_int[j])
    }

    /// Uniform horizontal quadrature weight `(2π/nx)(2π/ny)`.
    pub fn horizontal_weight(&self) -> f64 {
        4.0 * PI * PI / (self.nx * self.ny) as f64
    }

    /// Trapezoidal vertical weight of node `k`.
    #[inline]
    pub fn vertical_weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.nz {
            0.5 * self.dz
        } else {
            self.dz
        }
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nz == other.nz && self.h == other.h
    }

    /// In-place forward 2D FFT of `levels` consecutive horizontal slices, each
    /// stored with index `i·ny + j`.
    pub(crate) fn fft2_forward(&self, buf: &mut [Complex64]) {
        self.fft2(buf, &self.fft_y, &self.fft_x);
    }

    /// In-place normalized inverse of [`Grid::fft2_forward`].
    pub(crate) fn fft2_inverse(&self, buf: &mut [Complex64]) {
        self.fft2(buf, &self.ifft_y, &self.ifft_x);
        let norm = 1.0 / self.n_horizontal() as f64;
        buf.iter_mut().for_each(|c| *c *= norm);
    }

    fn fft2(&self, buf: &mut [Complex64], along_y: &Arc<dyn Fft<f64>>, along_x: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        let nxy = nx * ny;
        debug_assert_eq!(buf.len() % nxy, 0);
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = vec![zero; along_y.get_inplace_scratch_len().max(along_x.get_inplace_scratch_len())];
        along_y.process_with_scratch(buf, &mut scratch);
        let mut t = Vec::with_capacity(buf.len());
        for level in buf.chunks(nxy) {
            for j in 0..ny {
                t.extend(level[j..].iter().step_by(ny).take(nx));
            }
        }
        along_x.process_with_scratch(&mut t, &mut scratch);
        for (level, src) in buf.chunks_mut(nxy).zip(t.chunks(nxy)) {
            for (j, row) in src.chunks(nx).enumerate() {
                for (i, c) in row.iter().enumerate() {
                    level[i * ny + j] = *c;
                }
            }
        }
    }
}

/// Build a validated grid.
pub fn make_grid(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Arc<Grid>> {
    Grid::new(nx, ny, nz, h)
}

fn check_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(HydroError::ShapeMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// A real scalar field sampled at every grid node (θ, w, κ, test functions).
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        ScalarField { grid: grid.clone(), values: vec![c; grid.n_points()] }
    }

    /// Wrap externally supplied values, checking shape and finiteness.
    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(HydroError::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.n_points(),
                values.len()
            )));
        }
        let f = ScalarField { grid: grid.clone(), values };
        f.check_finite("field")?;
        Ok(f)
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        ScalarField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, j, k)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Error naming the first non-finite node, if any.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        let g = &self.grid;
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(p) => {
                let k = p % g.nz;
                let j = (p / g.nz) % g.ny;
                let i = p / (g.nz * g.ny);
                Err(HydroError::NonFiniteNode {
                    what: what.to_string(),
                    value: self.values[p],
                    i,
                    j,
                    k,
                    x1: g.x1(i),
                    x2: g.x2(j),
                    x3: g.x3(k),
                })
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.grid.same_shape(&other.grid));
        ScalarField::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `self += a · x`
    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        debug_assert!(self.grid.same_shape(&x.grid));
        self.values.iter_mut().zip(&x.values).for_each(|(s, &v)| *s += a * v);
    }

    /// `self += a · x · y` (pointwise product).
    pub(crate) fn add_product(&mut self, a: f64, x: &ScalarField, y: &ScalarField) {
        for ((s, &p), &q) in self.values.iter_mut().zip(&x.values).zip(&y.values) {
            *s += a * p * q;
        }
    }

    /// True when every vertical column is constant (exact comparison).
    pub fn is_x3_independent(&self) -> bool {
        let nz = self.grid.nz;
        self.values.chunks(nz).all(|col| col.iter().all(|&v| v == col[0]))
    }
}

/// Evaluate a closed-form function `f(x₁, x₂, x₃)` at every node.
pub fn eval_on_grid(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Result<ScalarField> {
    let mut values = Vec::with_capacity(grid.n_points());
    for i in 0..grid.nx {
        let x1 = grid.x1(i);
        for j in 0..grid.ny {
            let x2 = grid.x2(j);
            for k in 0..grid.nz {
                values.push(f(x1, x2, grid.x3(k)));
            }
        }
    }
    let field = ScalarField::from_raw(grid, values);
    field.check_finite("evaluated expression")?;
    Ok(field)
}

/// Horizontal vector field `(v¹, v²)` on the cylinder.
#[derive(Clone, Debug)]
pub struct HVecField {
    c1: ScalarField,
    c2: ScalarField,
}

impl HVecField {
    pub fn new(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        check_grid(&c1.grid, &c2.grid)?;
        Ok(HVecField { c1, c2 })
    }

    pub(crate) fn from_parts(c1: ScalarField, c2: ScalarField) -> Self {
        debug_assert!(c1.grid.same_shape(&c2.grid));
        HVecField { c1, c2 }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        HVecField { c1: ScalarField::zeros(grid), c2: ScalarField::zeros(grid) }
    }

    pub fn from_fns(
        grid: &Arc<Grid>,
        f1: impl Fn(f64, f64, f64) -> f64,
        f2: impl Fn(f64, f64, f64) -> f64,
    ) -> Result<Self> {
        Ok(HVecField { c1: eval_on_grid(grid, f1)?, c2: eval_on_grid(grid, f2)? })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.c1.grid
    }

    pub fn c1(&self) -> &ScalarField {
        &self.c1
    }

    pub fn c2(&self) -> &ScalarField {
        &self.c2
    }

    pub fn component(&self, m: usize) -> &ScalarField {
        match m {
            0 => &self.c1,
            1 => &self.c2,
            _ => panic!("horizontal component index {m} out of range"),
        }
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.c1, self.c2)
    }

    pub fn is_finite(&self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.c1.max_abs().max(self.c2.max_abs())
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        HVecField { c1: f(&self.c1), c2: f(&self.c2) }
    }

    pub fn add(&self, o: &HVecField) -> Self {
        HVecField { c1: self.c1.add(&o.c1), c2: self.c2.add(&o.c2) }
    }

    pub fn sub(&self, o: &HVecField) -> Self {
        HVecField { c1: self.c1.sub(&o.c1), c2: self.c2.sub(&o.c2) }
    }

    pub fn scale(&self, c: f64) -> Self {
        HVecField { c1: self.c1.scale(c), c2: self.c2.scale(c) }
    }

    pub fn axpy(&mut self, a: f64, x: &HVecField) {
        self.c1.axpy(a, &x.c1);
        self.c2.axpy(a, &x.c2);
    }

    /// Pointwise `|v|²`.
    pub fn norm_sq_pointwise(&self) -> ScalarField {
        self.c1.zip_with(&self.c2, |a, b| a * a + b * b)
    }
}

/// A field on the horizontal torus 𝕋² (surface pressure, vertical means, traces).
#[derive(Clone, Debug)]
pub struct HorizontalField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl HorizontalField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        HorizontalField { grid: grid.clone(), values: vec![0.0; grid.n_horizontal()] }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_horizontal() {
            return Err(HydroError::ShapeMismatch(format!(
                "expected {} horizontal values, got {}",
                grid.n_horizontal(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HydroError::ShapeMismatch("non-finite horizontal value".into()));
        }
        Ok(HorizontalField { grid: grid.clone(), values })
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_horizontal());
        HorizontalField { grid: grid.clone(), values }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_horizontal());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                values.push(f(grid.x1(i), grid.x2(j)));
            }
        }
        HorizontalField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, o: &HorizontalField) -> Self {
        HorizontalField::from_raw(
            &self.grid,
            self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        HorizontalField::from_raw(&self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// Extend to the cylinder, constant in x₃.
    pub fn lift(&self) -> ScalarField {
        let nz = self.grid.nz;
        let mut values = Vec::with_capacity(self.grid.n_points());
        for &v in &self.values {
            values.extend(std::iter::repeat_n(v, nz));
        }
        ScalarField::from_raw(&self.grid, values)
    }

    /// `∫_{𝕋²} f dx_H`
    pub fn integral(&self) -> f64 {
        self.grid.horizontal_weight() * self.values.iter().sum::<f64>()
    }

    pub fn inner(&self, o: &HorizontalField) -> f64 {
        self.grid.horizontal_weight() * self.values.iter().zip(&o.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `‖f‖²_{L²(𝕋²)}`
    pub fn l2_norm_sq(&self) -> f64 {
        self.inner(self)
    }

    /// `‖f‖²_{H^k(𝕋²)}` for `k ≤ 2`, all derivatives spectral.
    pub fn hk_norm_sq(&self, k: usize) -> f64 {
        let mut total = self.l2_norm_sq();
        if k >= 1 {
            let (d1, d2) = operators::grad_horizontal_2d(self);
            total += d1.l2_norm_sq() + d2.l2_norm_sq();
        }
        if k >= 2 {
            let (d11, d12, d22) = operators::hessian_horizontal_2d(self);
            total += d11.l2_norm_sq() + 2.0 * d12.l2_norm_sq() + d22.l2_norm_sq();
        }
        total
    }
}

/// Symmetric 3×3 coefficient field, entries stored as (11, 12, 13, 22, 23, 33).
#[derive(Clone, Debug)]
pub struct SymTensorField {
    entries: [ScalarField; 6],
}

const SYM_SLOT: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

impl SymTensorField {
    pub fn identity(grid: &Arc<Grid>) -> Self {
        let one = ScalarField::constant(grid, 1.0);
        let zero = ScalarField::zeros(grid);
        SymTensorField {
            entries: [one.clone(), zero.clone(), zero.clone(), one.clone(), zero, one],
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let z = ScalarField::zeros(grid);
        SymTensorField { entries: std::array::from_fn(|_| z.clone()) }
    }

    /// Build from the upper triangle `(a11, a12, a13, a22, a23, a33)`.
    pub fn from_upper(entries: [ScalarField; 6]) -> Result<Self> {
        for e in &entries[1..] {
            check_grid(entries[0].grid(), e.grid())?;
        }
        Ok(SymTensorField { entries })
    }

    /// Evaluate `a(x) = f(x₁, x₂, x₃)` returning the full matrix; the upper
    /// triangle is stored and symmetry of `f` is checked.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [[f64; 3]; 3]) -> Result<Self> {
        let mut entries: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(grid.n_points()));
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for k in 0..grid.nz {
                    let m = f(grid.x1(i), grid.x2(j), grid.x3(k));
                    for a in 0..3 {
                        for b in a..3 {
                            if m[a][b] != m[b][a] {
                                return Err(HydroError::InvalidCoefficients(format!(
                                    "coefficient matrix not symmetric at node ({i}, {j}, {k})"
                                )));
                            }
                            entries[SYM_SLOT[a][b]].push(m[a][b]);
                        }
                    }
                }
            }
        }
        let fields: Vec<ScalarField> = entries
            .into_iter()
            .map(|v| ScalarField::from_values(grid, v))
            .collect::<Result<_>>()?;
        Ok(SymTensorField { entries: fields.try_into().expect("six entries") })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.entries[0].grid()
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> &ScalarField {
        &self.entries[SYM_SLOT[a][b]]
    }

    pub(crate) fn get_mut(&mut self, a: usize, b: usize) -> &mut ScalarField {
        &mut self.entries[SYM_SLOT[a][b]]
    }

    /// Matrix at flat point index `p`.
    pub fn at(&self, p: usize) -> [[f64; 3]; 3] {
        let e = |a: usize, b: usize| self.entries[SYM_SLOT[a][b]].values()[p];
        [[e(0, 0), e(0, 1), e(0, 2)], [e(1, 0), e(1, 1), e(1, 2)], [e(2, 0), e(2, 1), e(2, 2)]]
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }

    /// True when every entry equals the identity exactly.
    pub fn is_identity(&self) -> bool {
        (0..3).all(|a| {
            (a..3).all(|b| {
                let want = if a == b { 1.0 } else { 0.0 };
                self.get(a, b).values().iter().all(|&v| v == want)
            })
        })
    }

    pub fn sub(&self, o: &SymTensorField) -> Self {
        SymTensorField { entries: std::array::from_fn(|s| self.entries[s].sub(&o.entries[s])) }
    }

    pub fn scale(&self, c: f64) -> Self {
        SymTensorField { entries: std::array::from_fn(|s| self.entries[s].scale(c)) }
    }

    /// Pointwise smallest eigenvalue, minimized over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.grid().n_points())
            .map(|p| sym3_eigenvalues(&self.at(p))[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Pointwise largest eigenvalue, maximized over the grid.
    pub fn max_eigenvalue(&self) -> f64 {
        (0..self.grid().n_points())
            .map(|p| sym3_eigenvalues(&self.at(p))[2])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order
/// (closed-form trigonometric solution of the characteristic cubic).
pub fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for a in 0..3 {
        for c in 0..3 {
            b[a][c] = (m[a][c] - if a == c { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    // The trigonometric formula loses accuracy for the pair of eigenvalues that
    // is nearly degenerate; keep only the well-separated one and recover the
    // other two from the 2×2 block on its orthogonal complement.
    let simple = if r < 0.0 { lo } else { hi };
    let rows = [
        [m[0][0] - simple, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - simple, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - simple],
    ];
    let cands = [cross(&rows[0], &rows[1]), cross(&rows[0], &rows[2]), cross(&rows[1], &rows[2])];
    let best = cands
        .iter()
        .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
        .copied()
        .unwrap_or([0.0; 3]);
    let norm = dot(&best, &best).sqrt();
    if !(norm > 0.0) {
        let mid = 3.0 * q - hi - lo;
        let mut out = [lo, mid, hi];
        out.sort_by(f64::total_cmp);
        return out;
    }
    let n = [best[0] / norm, best[1] / norm, best[2] / norm];
    let axis = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let u = cross(&axis, &n);
    let un = dot(&u, &u).sqrt();
    let u = [u[0] / un, u[1] / un, u[2] / un];
    let w = cross(&n, &u);
    let quad = |x: &[f64; 3], y: &[f64; 3]| -> f64 {
        (0..3).map(|a| (0..3).map(|c| x[a] * m[a][c] * y[c]).sum::<f64>()).sum()
    };
    let (a11, a12, a22) = (quad(&u, &u), quad(&u, &w), quad(&w, &w));
    let mean = 0.5 * (a11 + a22);
    let rad = (0.5 * (a11 - a22)).hypot(a12);
    let mut out = [simple, mean - rad, mean + rad];
    out.sort_by(f64::total_cmp);
    out
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `∫_𝒪 f dx` with uniform horizontal and trapezoidal vertical weights.
pub fn integrate(f: &ScalarField) -> f64 {
    let g = f.grid();
    let nz = g.nz;
    let mut total = 0.0;
    for col in f.values().chunks(nz) {
        total += col.iter().enumerate().map(|(k, v)| g.vertical_weight(k) * v).sum::<f64>();
    }
    total * g.horizontal_weight()
}

/// `∫_𝒪 f g dx`
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    let grid = f.grid();
    let nz = grid.nz;
    let mut total = 0.0;
    for (cf, cg) in f.values().chunks(nz).zip(g.values().chunks(nz)) {
        for k in 0..nz {
            total += grid.vertical_weight(k) * cf[k] * cg[k];
        }
    }
    total * grid.horizontal_weight()
}

/// `∫_𝒪 u · v dx` for horizontal vector fields.
pub fn inner_vec(u: &HVecField, v: &HVecField) -> f64 {
    inner(u.c1(), v.c1()) + inner(u.c2(), v.c2())
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    inner(f, f).sqrt()
}

pub fn l2_norm_vec(u: &HVecField) -> f64 {
    inner_vec(u, u).sqrt()
}

pub fn l4_norm(f: &ScalarField) -> f64 {
    integrate(&f.map(|v| v * v * v * v)).powf(0.25)
}

/// `‖f‖²_{H¹}`: L² plus the horizontal spectral and vertical
/// second-order gradients.
pub fn h1_norm_sq(f: &ScalarField) -> f64 {
    let grad = operators::grad_h(f);
    let d3 = operators::d3(f);
    inner(f, f) + inner_vec(&grad, &grad) + inner(&d3, &d3)
}

pub fn h1_norm(f: &ScalarField) -> f64 {
    h1_norm_sq(f).sqrt()
}

/// `‖f‖²_{H^k}`, `k ≤ 2`, where the second vertical derivative uses the
/// stencil of boundary condition `bc`.
pub fn hk_norm_sq_with(f: &ScalarField, k: usize, bc: VerticalBc) -> f64 {
    assert!(k <= 2, "H^k norms are implemented for k ≤ 2");
    match k {
        0 => inner(f, f),
        1 => h1_norm_sq(f),
        _ => {
            let hess = operators::Hessian::from_field(f, bc);
            h1_norm_sq(f) + hess.frobenius_sq()
        }
    }
}

/// `‖f‖_{H^k}` with one-sided vertical closures (no boundary condition assumed).
pub fn hk_norm(f: &ScalarField, k: usize) -> f64 {
    hk_norm_sq_with(f, k, VerticalBc::Free).sqrt()
}

pub fn h1_norm_sq_vec(u: &HVecField) -> f64 {
    h1_norm_sq(u.c1()) + h1_norm_sq(u.c2())
}

pub fn hk_norm_sq_vec(u: &HVecField, k: usize, bc: VerticalBc) -> f64 {
    hk_norm_sq_with(u.c1(), k, bc) + hk_norm_sq_with(u.c2(), k, bc)
}

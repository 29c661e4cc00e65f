//! Tensor-product grids on a box with Fourier (periodic) or sine
//! (homogeneous Dirichlet) pseudospectral differentiation.
//!
//! Dirichlet grids store interior samples only. Internally they are
//! transformed through the odd extension onto a doubled periodic box, which
//! turns every even spectral multiplier (Laplacian, shifted solves) into an
//! exact sine-series operation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl Boundary {
    pub fn tag(self) -> u8 {
        match self {
            Boundary::Periodic => 0,
            Boundary::Dirichlet => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Boundary::Periodic),
            1 => Some(Boundary::Dirichlet),
            _ => None,
        }
    }
}

/// One axis of a tensor grid.
#[derive(Debug, Clone)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub modes: usize,
    pub spacing: f64,
    /// Sample coordinates (interior only for Dirichlet).
    pub coords: Vec<f64>,
    /// Spectral wavenumbers: signed FFT ordering (periodic) or
    /// `pi k / (hi - lo)`, `k = 1..modes-1` (Dirichlet).
    pub wavenumbers: Vec<f64>,
}

impl Axis {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

pub struct Grid {
    axes: Vec<Axis>,
    boundary: Boundary,
    weight: f64,
    shape: Vec<usize>,
    len: usize,
    // full-length coordinate arrays, one per axis
    point_coords: Vec<Vec<f64>>,
    // transform (extended for Dirichlet) layout
    ext_shape: Vec<usize>,
    ext_len: usize,
    ext_k: Vec<Vec<f64>>,
    ext_k2: Vec<f64>,
    // Dirichlet embedding: for every extended index, (source point, sign)
    embed: Vec<(usize, f64)>,
    // Dirichlet restriction: for every point, its extended index
    restrict: Vec<usize>,
    plans: Vec<Plan>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("boundary", &self.boundary)
            .field("bounds", &self.bounds())
            .field("modes", &self.modes())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.boundary == other.boundary
            && self.axes.len() == other.axes.len()
            && self
                .axes
                .iter()
                .zip(&other.axes)
                .all(|(a, b)| a.lo == b.lo && a.hi == b.hi && a.modes == b.modes)
    }
}

fn signed_index(k: usize, n: usize) -> i64 {
    // [-n/2, n/2 - 1]
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn unravel(mut idx: usize, shape: &[usize], out: &mut [usize]) {
    for j in (0..shape.len()).rev() {
        out[j] = idx % shape[j];
        idx /= shape[j];
    }
}

impl Grid {
    /// Builds a grid on `bounds` with `modes` per axis.
    pub fn new(bounds: &[(f64, f64)], modes: &[usize], boundary: Boundary) -> Result<Arc<Grid>> {
        let d = bounds.len();
        if d == 0 || d > 3 {
            return Err(Error::InvalidGrid(format!("dimension {d} not in 1..=3")));
        }
        if modes.len() != d {
            return Err(Error::InvalidGrid(format!(
                "{} bounds but {} mode counts",
                d,
                modes.len()
            )));
        }
        let mut axes = Vec::with_capacity(d);
        for (j, (&(lo, hi), &n)) in bounds.iter().zip(modes).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidGrid(format!(
                    "axis {j}: interval [{lo}, {hi}] is empty"
                )));
            }
            if n < 4 {
                return Err(Error::InvalidGrid(format!("axis {j}: {n} modes, need at least 4")));
            }
            let len = hi - lo;
            let h = len / n as f64;
            let (coords, wavenumbers) = match boundary {
                Boundary::Periodic => (
                    (0..n).map(|k| lo + k as f64 * h).collect(),
                    (0..n)
                        .map(|k| 2.0 * PI * signed_index(k, n) as f64 / len)
                        .collect(),
                ),
                Boundary::Dirichlet => (
                    (1..n).map(|k| lo + k as f64 * h).collect(),
                    (1..n).map(|k| PI * k as f64 / len).collect(),
                ),
            };
            axes.push(Axis {
                lo,
                hi,
                modes: n,
                spacing: h,
                coords,
                wavenumbers,
            });
        }

        let shape: Vec<usize> = axes.iter().map(|a| a.coords.len()).collect();
        let len: usize = shape.iter().product();
        let weight: f64 = axes.iter().map(|a| a.spacing).product();

        let mut idx = vec![0usize; d];
        let mut point_coords = vec![vec![0.0; len]; d];
        for p in 0..len {
            unravel(p, &shape, &mut idx);
            for j in 0..d {
                point_coords[j][p] = axes[j].coords[idx[j]];
            }
        }

        let ext_shape: Vec<usize> = axes
            .iter()
            .map(|a| match boundary {
                Boundary::Periodic => a.modes,
                Boundary::Dirichlet => 2 * a.modes,
            })
            .collect();
        let ext_len: usize = ext_shape.iter().product();
        let axis_k: Vec<Vec<f64>> = axes
            .iter()
            .zip(&ext_shape)
            .map(|(a, &m)| {
                // extended period is 2(hi - lo) for Dirichlet, so pi k'/(hi - lo)
                let period = match boundary {
                    Boundary::Periodic => a.length(),
                    Boundary::Dirichlet => 2.0 * a.length(),
                };
                (0..m)
                    .map(|k| 2.0 * PI * signed_index(k, m) as f64 / period)
                    .collect()
            })
            .collect();
        let mut ext_k = vec![vec![0.0; ext_len]; d];
        let mut ext_k2 = vec![0.0; ext_len];
        for e in 0..ext_len {
            unravel(e, &ext_shape, &mut idx);
            for j in 0..d {
                let k = axis_k[j][idx[j]];
                ext_k[j][e] = k;
                ext_k2[e] += k * k;
            }
        }

        let (embed, restrict) = match boundary {
            Boundary::Periodic => (Vec::new(), Vec::new()),
            Boundary::Dirichlet => {
                let mut embed = Vec::with_capacity(ext_len);
                for e in 0..ext_len {
                    unravel(e, &ext_shape, &mut idx);
                    let mut sign = 1.0;
                    let mut src = 0usize;
                    for j in 0..d {
                        let n = axes[j].modes;
                        let ej = idx[j];
                        let i = if ej == 0 || ej == n {
                            sign = 0.0;
                            0
                        } else if ej < n {
                            ej
                        } else {
                            sign = -sign;
                            2 * n - ej
                        };
                        src = src * shape[j] + i.saturating_sub(1);
                    }
                    embed.push((src, sign));
                }
                let mut restrict = Vec::with_capacity(len);
                for p in 0..len {
                    unravel(p, &shape, &mut idx);
                    let mut e = 0usize;
                    for j in 0..d {
                        e = e * ext_shape[j] + idx[j] + 1;
                    }
                    restrict.push(e);
                }
                (embed, restrict)
            }
        };

        let mut planner = FftPlanner::new();
        let plans = ext_shape
            .iter()
            .map(|&m| Plan {
                forward: planner.plan_fft_forward(m),
                inverse: planner.plan_fft_inverse(m),
            })
            .collect();

        Ok(Arc::new(Grid {
            axes,
            boundary,
            weight,
            shape,
            len,
            point_coords,
            ext_shape,
            ext_len,
            ext_k,
            ext_k2,
            embed,
            restrict,
            plans,
        }))
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.lo, a.hi)).collect()
    }

    pub fn modes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.modes).collect()
    }

    /// Number of stored samples per axis.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total number of stored samples.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Quadrature weight `prod_j h_j`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// Coordinate of every sample along `axis`.
    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.point_coords[axis]
    }

    pub fn volume(&self) -> f64 {
        self.axes.iter().map(|a| a.length()).product()
    }

    /// Forward transform into the (possibly extended) spectral layout.
    pub(crate) fn forward(&self, values: &[C64]) -> Vec<C64> {
        let mut buf = match self.boundary {
            Boundary::Periodic => values.to_vec(),
            Boundary::Dirichlet => self
                .embed
                .iter()
                .map(|&(src, sign)| values[src] * sign)
                .collect(),
        };
        self.fft_nd(&mut buf, false);
        buf
    }

    /// Inverse transform back onto the stored samples (normalized).
    pub(crate) fn inverse(&self, mut buf: Vec<C64>) -> Vec<C64> {
        self.fft_nd(&mut buf, true);
        let scale = 1.0 / self.ext_len as f64;
        match self.boundary {
            Boundary::Periodic => {
                for v in &mut buf {
                    *v *= scale;
                }
                buf
            }
            Boundary::Dirichlet => self.restrict.iter().map(|&e| buf[e] * scale).collect(),
        }
    }

    fn fft_nd(&self, buf: &mut [C64], inverse: bool) {
        let total = buf.len();
        let mut stride = total;
        for (ax, &n) in self.ext_shape.iter().enumerate() {
            stride /= n;
            let plan = if inverse {
                &self.plans[ax].inverse
            } else {
                &self.plans[ax].forward
            };
            let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            if stride == 1 {
                plan.process_with_scratch(buf, &mut scratch);
            } else {
                let outer = total / (n * stride);
                let mut line = vec![C64::new(0.0, 0.0); n];
                for o in 0..outer {
                    for s in 0..stride {
                        let base = o * n * stride + s;
                        for (k, l) in line.iter_mut().enumerate() {
                            *l = buf[base + k * stride];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (k, l) in line.iter().enumerate() {
                            buf[base + k * stride] = *l;
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn ext_k(&self, axis: usize) -> &[f64] {
        &self.ext_k[axis]
    }

    pub(crate) fn ext_k2(&self) -> &[f64] {
        &self.ext_k2
    }

    // Parseval factor: ||f||^2 = parseval_weight * sum |F|^2 over the transform layout.
    fn parseval_weight(&self) -> f64 {
        let copies = match self.boundary {
            Boundary::Periodic => 1.0,
            Boundary::Dirichlet => (1u32 << self.dim()) as f64,
        };
        self.weight / (self.ext_len as f64 * copies)
    }
}

/// Complex samples on a grid.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("len", &self.values.len())
            .finish()
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SampleCount {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let field = Field { grid, values };
        field.check_finite()?;
        Ok(field)
    }

    pub(crate) fn from_vec_unchecked(grid: Arc<Grid>, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Samples `f` at every grid point; `f` receives the point coordinates.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let d = grid.dim();
        let mut x = vec![0.0; d];
        let values = (0..grid.len())
            .map(|p| {
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = grid.coords(j)[p];
                }
                f(&x)
            })
            .collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        self.same_grid_as(&other.grid)
    }

    pub fn same_grid_as(&self, grid: &Arc<Grid>) -> bool {
        Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid
    }

    pub fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    fn assert_same_grid(&self, other: &Field) {
        assert!(self.same_grid(other), "fields live on different grids");
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| v * s)
    }

    pub fn scale_mut(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + s * other`; panics if the grids differ.
    pub fn add_scaled(&self, s: f64, other: &Field) -> Field {
        self.assert_same_grid(other);
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * s)
                .collect(),
        }
    }

    /// `self + c * other` for a complex coefficient.
    pub fn add_complex(&self, c: C64, other: &Field) -> Field {
        self.assert_same_grid(other);
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * c)
                .collect(),
        }
    }

    pub(crate) fn sub_complex(&self, c: C64, other: &Field) -> Field {
        self.add_complex(-c, other)
    }

    /// `self += s * other`.
    pub fn axpy_mut(&mut self, s: f64, other: &Field) {
        self.assert_same_grid(other);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b * s;
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.add_scaled(-1.0, other)
    }

    /// Pointwise product with a real sample array.
    pub fn mul_real(&self, w: &[f64]) -> Field {
        assert_eq!(w.len(), self.values.len());
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(w).map(|(v, &s)| v * s).collect(),
        }
    }

    /// `w * sum_x conj(other(x)) self(x)`.
    pub fn inner(&self, other: &Field) -> Result<C64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Field) -> C64 {
        let s: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.weight
    }

    /// Real part of the L2 pairing.
    pub fn real_inner(&self, other: &Field) -> f64 {
        self.assert_same_grid(other);
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        s * self.grid.weight
    }

    /// `||f||_{L^2}^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.weight
    }

    /// `w * sum |f|^q`.
    pub fn power_sum(&self, q: f64) -> f64 {
        self.values
            .iter()
            .map(|v| abs_pow(v.norm_sqr(), q))
            .sum::<f64>()
            * self.grid.weight
    }

    /// `(w * sum |f|^q)^(1/q)`.
    pub fn norm_lq(&self, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!("norm exponent {q} < 1")));
        }
        Ok(self.power_sum(q).powf(1.0 / q))
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Maximum pointwise distance to `other`.
    pub fn max_diff(&self, other: &Field) -> f64 {
        self.assert_same_grid(other);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max_diff` after rotating `self` by the global phase that best aligns it with `other`.
    pub fn max_diff_up_to_phase(&self, other: &Field) -> f64 {
        self.assert_same_grid(other);
        let overlap = other.inner_unchecked(self);
        if overlap.norm() == 0.0 {
            return self.max_diff(other);
        }
        let rotation = overlap / overlap.norm();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a * rotation - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn spectrum(&self) -> Spectrum<'_> {
        Spectrum {
            grid: &self.grid,
            grid_arc: &self.grid,
            coeffs: self.grid.forward(&self.values),
        }
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> Field {
        self.spectrum().laplacian()
    }

    /// Spectral partial derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Field {
        self.spectrum().derivative(axis)
    }

    pub fn gradient(&self) -> Vec<Field> {
        let s = self.spectrum();
        (0..self.grid.dim()).map(|j| s.derivative(j)).collect()
    }

    /// Angular momentum `i (x2 d1 - x1 d2) f`; the zero field when `d = 1`.
    pub fn lz(&self) -> Field {
        if self.grid.dim() < 2 {
            return Field::zeros(self.grid.clone());
        }
        let s = self.spectrum();
        lz_from_derivatives(&self.grid, &s.derivative(0), &s.derivative(1))
    }

    /// Solves `(a - b * Laplacian) u = self` for `u`; requires `a > 0`, `b >= 0`.
    pub fn solve_shifted(&self, a: f64, b: f64) -> Field {
        self.spectrum().shifted_inverse(a, b)
    }
}

/// Forward-transformed samples; lets several spectral operators share one transform.
pub struct Spectrum<'a> {
    grid: &'a Grid,
    grid_arc: &'a Arc<Grid>,
    coeffs: Vec<C64>,
}

impl Spectrum<'_> {
    fn apply(&self, mult: impl Fn(usize) -> C64) -> Field {
        let buf: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(e, &c)| c * mult(e))
            .collect();
        Field::from_vec_unchecked(self.grid_arc.clone(), self.grid.inverse(buf))
    }

    fn apply_real(&self, mult: impl Fn(usize) -> f64) -> Field {
        let buf: Vec<C64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(e, &c)| c * mult(e))
            .collect();
        Field::from_vec_unchecked(self.grid_arc.clone(), self.grid.inverse(buf))
    }

    /// `sum_j ||d_j f||^2`, summed mode by mode.
    pub fn gradient_norm_sqr(&self) -> f64 {
        let k2 = self.grid.ext_k2();
        self.coeffs
            .iter()
            .zip(k2)
            .map(|(c, k)| k * c.norm_sqr())
            .sum::<f64>()
            * self.grid.parseval_weight()
    }

    pub fn laplacian(&self) -> Field {
        let k2 = self.grid.ext_k2();
        self.apply_real(|e| -k2[e])
    }

    pub fn derivative(&self, axis: usize) -> Field {
        let k = self.grid.ext_k(axis);
        self.apply(|e| C64::new(0.0, k[e]))
    }

    pub fn shifted_inverse(&self, a: f64, b: f64) -> Field {
        let k2 = self.grid.ext_k2();
        self.apply_real(|e| 1.0 / (a + b * k2[e]))
    }
}

pub(crate) fn lz_from_derivatives(grid: &Arc<Grid>, d1: &Field, d2: &Field) -> Field {
    let x1 = grid.coords(0);
    let x2 = grid.coords(1);
    let values = d1
        .values()
        .iter()
        .zip(d2.values())
        .zip(x1.iter().zip(x2))
        .map(|((a, b), (&p, &q))| {
            let t = a * q - b * p;
            C64::new(-t.im, t.re)
        })
        .collect();
    Field::from_vec_unchecked(grid.clone(), values)
}

/// `|z|^q` from `|z|^2`, with integer fast paths.
#[inline]
pub(crate) fn abs_pow(norm_sqr: f64, q: f64) -> f64 {
    let half = 0.5 * q;
    if half == 1.0 {
        norm_sqr
    } else if half == 2.0 {
        norm_sqr * norm_sqr
    } else if half.fract() == 0.0 && half.abs() < 16.0 {
        norm_sqr.powi(half as i32)
    } else if norm_sqr == 0.0 {
        0.0
    } else {
        norm_sqr.powf(half)
    }
}

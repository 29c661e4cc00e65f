//! Checks shared by the property tests and the acceptance harness.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rnls_core::focusing::{normalize_lp1, rescale_ground_state};
use rnls_core::functionals::{action, gradient_action, nehari};
use rnls_core::io::{read_field, write_field};
use rnls_core::preconditioner::{Preconditioner, PreconditionerKind};
use rnls_core::{Boundary, Field, Grid, Parameters, ProblemSpec, Trap, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn square_grid(half: f64, modes: usize) -> Arc<Grid> {
    Grid::new(&[(-half, half), (-half, half)], &[modes, modes], Boundary::Periodic).unwrap()
}

/// A few complex Gaussian bumps with a slow plane-wave phase.
pub fn smooth_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let d = grid.dim();
    let bumps: Vec<(Vec<f64>, f64, C64)> = (0..3)
        .map(|_| {
            let centre = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
            let width = rng.random_range(0.7..1.3);
            let amp = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (centre, width, amp)
        })
        .collect();
    let wave: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    Field::from_fn(grid.clone(), |x| {
        let phase: f64 = x.iter().zip(&wave).map(|(a, b)| a * b).sum();
        let mut v = C64::new(0.0, 0.0);
        for (c, w, amp) in &bumps {
            let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            v += amp * (-r2 / (2.0 * w * w)).exp();
        }
        v * C64::from_polar(1.0, phase)
    })
    .unwrap()
}

pub fn harmonic_spec(grid: Arc<Grid>, exponent: f64, beta: f64, omega: f64, rotation: f64) -> ProblemSpec {
    let params = Parameters {
        exponent,
        beta,
        omega,
        rotation,
    };
    let d = grid.dim();
    ProblemSpec::new(grid, params, Trap::Harmonic(vec![1.0; d])).unwrap()
}

/// Relative gap between a central difference of `S` along a random direction
/// and the pairing `2 Re <H(phi), eta>`.
pub fn gradient_gap(spec: &ProblemSpec, seed: u64) -> f64 {
    let mut r = rng(seed);
    let phi = smooth_field(spec.grid(), &mut r);
    let eta = smooth_field(spec.grid(), &mut r);
    let eps = 1e-5 * (phi.norm_sqr() / eta.norm_sqr()).sqrt();
    let plus = action(&phi.add_scaled(eps, &eta), spec).unwrap();
    let minus = action(&phi.add_scaled(-eps, &eta), spec).unwrap();
    let numeric = (plus - minus) / (2.0 * eps);
    let exact = 2.0 * gradient_action(&phi, spec).real_inner(&eta);
    (numeric - exact).abs() / exact.abs().max(1e-300)
}

/// Round trip `u -> phi_g -> u` through the rescaling and the `L^{p+1}`
/// normalization, plus the Nehari value of the rescaled state relative to
/// its quadratic part.
pub fn bijection_gaps(spec: &ProblemSpec, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let p = spec.exponent();
    let u = normalize_lp1(&smooth_field(spec.grid(), &mut r), p).unwrap();
    let phi = rescale_ground_state(&u, spec).unwrap();
    let back = normalize_lp1(&phi, p).unwrap();
    let round_trip = back.max_diff(&u) / u.norm_inf();
    let q = rnls_core::functionals::quadratic(&phi, spec).unwrap();
    let on_manifold = nehari(&phi, spec).unwrap().abs() / q.abs();
    (round_trip, on_manifold)
}

/// Dense matrix of a preconditioner on a 16-point grid; returns the largest
/// asymmetry relative to the largest entry, the largest imaginary part of
/// any column and the smallest eigenvalue of the symmetric part.
pub fn preconditioner_dense(kind: PreconditionerKind, boundary: Boundary, seed: u64) -> (f64, f64, f64) {
    let n = 16;
    let (lo, hi) = match boundary {
        Boundary::Periodic => (-4.0, 4.0),
        _ => (0.0, 2.0),
    };
    let grid = Grid::new(&[(lo, hi)], &[n], boundary).unwrap();
    let mut r = rng(seed);
    let lap_shift = r.random_range(0.1..50.0);
    let pot_shift = r.random_range(0.1..50.0);
    let w: Vec<f64> = (0..grid.len()).map(|_| r.random_range(0.0..20.0)).collect();
    let pre = Preconditioner::new(kind, grid.clone(), lap_shift, pot_shift, &w).unwrap();
    let len = grid.len();
    let mut m = DMatrix::<f64>::zeros(len, len);
    let mut imag: f64 = 0.0;
    for j in 0..len {
        let mut e = Field::zeros(grid.clone());
        e.values_mut()[j] = C64::new(1.0, 0.0);
        let col = pre.apply(&e).unwrap();
        for (i, v) in col.values().iter().enumerate() {
            m[(i, j)] = v.re;
            imag = imag.max(v.im.abs());
        }
    }
    let scale = m.amax();
    let asym = (&m - m.transpose()).amax() / scale;
    let sym = (&m + m.transpose()) * 0.5;
    let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
    (asym, imag / scale, min_eig / scale)
}

/// `|| Lz f - m f ||_inf / || f ||_inf` for `f = (x + iy)^m exp(-r^2 / (2 w^2))`.
pub fn lz_eigen_gap(m: u32, width: f64) -> f64 {
    let grid = square_grid(16.0, 128);
    let f = Field::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        C64::new(x[0], x[1]).powu(m) * (-r2 / (2.0 * width * width)).exp()
    })
    .unwrap();
    f.lz().add_scaled(-(m as f64), &f).norm_inf() / f.norm_inf()
}

/// `K(k)` from its hypergeometric series, independent of the AGM.
pub fn elliptic_k_series(k: f64) -> f64 {
    let k2 = k * k;
    let mut coeff = 1.0;
    let mut power = 1.0;
    let mut sum = 0.0;
    for n in 0..20_000 {
        let term = coeff * coeff * power;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        let n = n as f64;
        coeff *= (2.0 * n + 1.0) / (2.0 * n + 2.0);
        power *= k2;
    }
    0.5 * PI * sum
}

/// Writes and reads a field back; true when every sample and the grid are
/// bit-identical.
pub fn field_round_trip(field: &Field, path: &Path) -> bool {
    write_field(field, path).unwrap();
    let back = read_field(path).unwrap();
    let same_grid = back.grid().bounds() == field.grid().bounds()
        && back.grid().modes() == field.grid().modes()
        && back.grid().boundary() == field.grid().boundary();
    same_grid
        && back
            .values()
            .iter()
            .zip(field.values())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
}

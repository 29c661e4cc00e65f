//! Scalar functionals of the stationary problem and their gradients.
//!
//! With `A = -1/2 Laplacian + V - Omega Lz` the action is
//! `S = <A phi, phi> + omega ||phi||^2 + 2 beta/(p+1) ||phi||_{p+1}^{p+1}`,
//! the quadratic part `Q` drops the nonlinear term, `K = Q + beta ||phi||^{p+1}`
//! and the energy `E = S - omega ||phi||^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{abs_pow, lz_from_derivatives, Field, C64};
use crate::problem::{ProblemSpec, Regime};

/// The separate integrals every functional is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parts {
    /// `1/2 ||grad phi||^2`
    pub kinetic: f64,
    /// `int V |phi|^2`
    pub potential: f64,
    /// `L_Omega(phi) = -Omega int conj(phi) Lz phi`
    pub rotation: f64,
    /// `||phi||_2^2`
    pub mass: f64,
    /// `||phi||_{p+1}^{p+1}`
    pub power: f64,
}

impl Parts {
    /// `<A phi, phi>` without the `omega` term.
    pub fn linear(&self) -> f64 {
        self.kinetic + self.potential + self.rotation
    }

    pub fn quadratic(&self, spec: &ProblemSpec) -> f64 {
        self.linear() + spec.omega() * self.mass
    }

    pub fn action(&self, spec: &ProblemSpec) -> f64 {
        let p = spec.exponent();
        self.quadratic(spec) + 2.0 * spec.beta() / (p + 1.0) * self.power
    }

    pub fn nehari(&self, spec: &ProblemSpec) -> f64 {
        self.quadratic(spec) + spec.beta() * self.power
    }

    pub fn energy(&self, spec: &ProblemSpec) -> f64 {
        self.action(spec) - spec.omega() * self.mass
    }
}

/// Functional values of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub action: f64,
    pub quadratic: f64,
    pub nehari: f64,
    pub energy: f64,
    pub rotation: f64,
    pub mass: f64,
    /// `Q / ||phi||_{p+1}^{p+1}`; zero for the zero field.
    pub multiplier: f64,
    /// `||H(phi)||_inf`, the residual of the stationary equation itself.
    pub residual: f64,
}

pub(crate) struct Analysis {
    pub parts: Parts,
    /// `A phi = (-1/2 Laplacian + V - Omega Lz) phi`
    pub linear: Field,
}

fn rotating(spec: &ProblemSpec) -> bool {
    spec.rotation() != 0.0 && spec.grid().dim() >= 2
}

fn checked_rotation(value: C64) -> Result<f64> {
    if value.im.abs() > 1e-8 * (1.0 + value.re.abs()) {
        return Err(Error::InconsistentRotation {
            real: value.re,
            imag: value.im,
        });
    }
    Ok(value.re)
}

/// Computes `A phi` and every integral with a single forward transform.
pub(crate) fn analyze(phi: &Field, spec: &ProblemSpec) -> Result<Analysis> {
    let grid = spec.grid();
    if !phi.same_grid_as(grid) {
        return Err(Error::GridMismatch);
    }
    let spectrum = phi.spectrum();
    let kinetic = 0.5 * spectrum.gradient_norm_sqr();
    let mut linear = spectrum.laplacian();
    linear.scale_mut(-0.5);
    let v = spec.potential();
    let mut potential = 0.0;
    for ((out, f), &vi) in linear.values_mut().iter_mut().zip(phi.values()).zip(v) {
        *out += f * vi;
        potential += vi * f.norm_sqr();
    }
    potential *= grid.weight();

    let mut rotation = 0.0;
    if rotating(spec) {
        let lz = lz_from_derivatives(grid, &spectrum.derivative(0), &spectrum.derivative(1));
        let omega_rot = spec.rotation();
        rotation = checked_rotation(-omega_rot * lz.inner_unchecked(phi))?;
        linear.axpy_mut(-omega_rot, &lz);
    }

    let parts = Parts {
        kinetic,
        potential,
        rotation,
        mass: phi.norm_sqr(),
        power: phi.power_sum(spec.exponent() + 1.0),
    };
    Ok(Analysis { parts, linear })
}

/// `(-1/2 Laplacian + V - Omega Lz) phi`.
pub fn apply_linear(phi: &Field, spec: &ProblemSpec) -> Field {
    let spectrum = phi.spectrum();
    let mut out = spectrum.laplacian();
    out.scale_mut(-0.5);
    for ((o, f), &vi) in out
        .values_mut()
        .iter_mut()
        .zip(phi.values())
        .zip(spec.potential())
    {
        *o += f * vi;
    }
    if rotating(spec) {
        let lz = lz_from_derivatives(spec.grid(), &spectrum.derivative(0), &spectrum.derivative(1));
        out.axpy_mut(-spec.rotation(), &lz);
    }
    out
}

/// `|phi|^(p-1)` at every sample.
pub fn nonlinear_density(phi: &Field, p: f64) -> Vec<f64> {
    phi.values()
        .iter()
        .map(|v| abs_pow(v.norm_sqr(), p - 1.0))
        .collect()
}

pub fn parts(phi: &Field, spec: &ProblemSpec) -> Result<Parts> {
    Ok(analyze(phi, spec)?.parts)
}

/// `L_Omega(phi) = -Omega int conj(phi) Lz phi`.
pub fn rotation_term(phi: &Field, spec: &ProblemSpec) -> Result<f64> {
    if !rotating(spec) {
        return Ok(0.0);
    }
    let lz = phi.lz();
    checked_rotation(-spec.rotation() * lz.inner(phi)?)
}

pub fn action(phi: &Field, spec: &ProblemSpec) -> Result<f64> {
    Ok(parts(phi, spec)?.action(spec))
}

pub fn quadratic(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    Ok(parts(u, spec)?.quadratic(spec))
}

pub fn nehari(phi: &Field, spec: &ProblemSpec) -> Result<f64> {
    Ok(parts(phi, spec)?.nehari(spec))
}

pub fn energy(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    Ok(parts(u, spec)?.energy(spec))
}

/// `Q(u) / ||u||_{p+1}^{p+1}`.
pub fn asymptotic_multiplier(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    let parts = parts(u, spec)?;
    if parts.power == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(parts.quadratic(spec) / parts.power)
}

/// Chemical potential of a state with prescribed mass `m`:
/// `-(1/m)(1/2 ||grad u||^2 + int V|u|^2 + beta ||u||_{p+1}^{p+1} + L_Omega(u))`.
pub fn chemical_potential(u: &Field, spec: &ProblemSpec, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!("mass {mass} must be positive")));
    }
    let parts = parts(u, spec)?;
    Ok(-(parts.linear() + spec.beta() * parts.power) / mass)
}

/// `H(phi) = (-1/2 Laplacian + V + beta |phi|^(p-1) - Omega Lz + omega) phi`,
/// the L2 gradient `dS/d conj(phi)`.
pub fn gradient_action(phi: &Field, spec: &ProblemSpec) -> Field {
    let mut out = apply_linear(phi, spec);
    add_local_terms(&mut out, phi, spec, spec.beta());
    out
}

// out += (omega + coeff |phi|^(p-1)) phi
pub(crate) fn add_local_terms(out: &mut Field, phi: &Field, spec: &ProblemSpec, coeff: f64) {
    let omega = spec.omega();
    let q = spec.exponent() - 1.0;
    for (o, f) in out.values_mut().iter_mut().zip(phi.values()) {
        *o += f * (omega + coeff * abs_pow(f.norm_sqr(), q));
    }
}

/// Residual `||.||_inf` used as a stopping criterion.
///
/// Focusing: `(-1/2 Laplacian + V + omega - Omega Lz - lambda(u) |u|^(p-1)) u`
/// with the asymptotic multiplier `lambda`. Otherwise the action gradient.
pub fn residual_inf(state: &Field, spec: &ProblemSpec) -> Result<f64> {
    match spec.regime() {
        Some(Regime::Focusing) => {
            let a = analyze(state, spec)?;
            if a.parts.power == 0.0 {
                return Err(Error::ZeroField);
            }
            let lambda = a.parts.quadratic(spec) / a.parts.power;
            let mut r = a.linear;
            add_local_terms(&mut r, state, spec, -lambda);
            Ok(r.norm_inf())
        }
        _ => Ok(gradient_action(state, spec).norm_inf()),
    }
}

/// `S~(phi) = int 1/2|grad phi|^2 + (V + omega + beta |frozen|^(p-1)) |phi|^2 - Omega conj(phi) Lz phi`.
pub fn modified_action(phi: &Field, frozen: &Field, spec: &ProblemSpec) -> Result<f64> {
    if !phi.same_grid(frozen) {
        return Err(Error::GridMismatch);
    }
    let parts = parts(phi, spec)?;
    let q = spec.exponent() - 1.0;
    let frozen_term: f64 = phi
        .values()
        .iter()
        .zip(frozen.values())
        .map(|(f, g)| abs_pow(g.norm_sqr(), q) * f.norm_sqr())
        .sum::<f64>()
        * spec.grid().weight();
    Ok(parts.quadratic(spec) + spec.beta() * frozen_term)
}

pub fn report(phi: &Field, spec: &ProblemSpec) -> Result<FunctionalReport> {
    let a = analyze(phi, spec)?;
    let parts = a.parts;
    let mut h = a.linear;
    add_local_terms(&mut h, phi, spec, spec.beta());
    Ok(FunctionalReport {
        action: parts.action(spec),
        quadratic: parts.quadratic(spec),
        nehari: parts.nehari(spec),
        energy: parts.energy(spec),
        rotation: parts.rotation,
        mass: parts.mass,
        multiplier: if parts.power > 0.0 {
            parts.quadratic(spec) / parts.power
        } else {
            0.0
        },
        residual: h.norm_inf(),
    })
}

/// Smallest eigenvalue of `-1/2 Laplacian + V - Omega Lz` on the grid.
///
/// Locally optimal block preconditioned iteration with a three-vector
/// Rayleigh-Ritz step; stops once the eigen-residual `||A x - rho x||_2`
/// falls below `tol`.
pub fn estimate_lambda0(spec: &ProblemSpec, tol: f64, max_iterations: usize) -> Result<f64> {
    let grid = spec.grid().clone();
    let d = grid.dim();
    let centre: Vec<f64> = grid
        .bounds()
        .iter()
        .map(|&(lo, hi)| if lo < 0.0 && hi > 0.0 { 0.0 } else { 0.5 * (lo + hi) })
        .collect();
    let widths: Vec<f64> = grid.axes().iter().map(|a| a.length() / 8.0).collect();
    let mut x = Field::from_fn(grid.clone(), |p| {
        let r2: f64 = (0..d)
            .map(|j| ((p[j] - centre[j]) / widths[j]).powi(2))
            .sum();
        let bump = (-0.5 * r2).exp();
        if d >= 2 {
            let z = C64::new(p[0] - centre[0], p[1] - centre[1]) / widths[0];
            (C64::new(1.0, 0.0) + 0.1 * z) * bump
        } else {
            C64::new(bump, 0.0)
        }
    })?;
    x.scale_mut(1.0 / x.norm_sqr().sqrt());
    let mut ax = apply_linear(&x, spec);
    let mut prev: Option<Field> = None;
    let mut rho = ax.real_inner(&x);

    for _ in 0..max_iterations {
        let residual = ax.add_scaled(-rho, &x);
        let rnorm = residual.norm_sqr().sqrt();
        if rnorm <= tol {
            return Ok(rho);
        }
        let shift = rho.abs() + 1.0;
        let w = residual.solve_shifted(shift, 0.5);

        let mut basis: Vec<Field> = vec![x.clone()];
        for cand in std::iter::once(w).chain(prev.take()) {
            let mut v = cand;
            for _ in 0..2 {
                for b in &basis {
                    let c = v.inner_unchecked(b);
                    v = v.sub_complex(c, b);
                }
            }
            let n = v.norm_sqr().sqrt();
            if n > 1e-10 {
                v.scale_mut(1.0 / n);
                basis.push(v);
            }
        }
        if basis.len() == 1 {
            return Ok(rho);
        }
        let images: Vec<Field> = basis.iter().map(|b| apply_linear(b, spec)).collect();
        let m = basis.len();
        let h = DMatrix::from_fn(m, m, |i, j| images[j].inner_unchecked(&basis[i]));
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(h);
        let (k, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty basis");
        let c = eig.eigenvectors.column(k);
        let mut next = Field::zeros(grid.clone());
        let mut next_image = Field::zeros(grid.clone());
        let mut direction = Field::zeros(grid.clone());
        for i in 0..m {
            next = next.add_complex(c[i], &basis[i]);
            next_image = next_image.add_complex(c[i], &images[i]);
            if i > 0 {
                direction = direction.add_complex(c[i], &basis[i]);
            }
        }
        let n = next.norm_sqr().sqrt();
        next.scale_mut(1.0 / n);
        next_image.scale_mut(1.0 / n);
        x = next;
        ax = next_image;
        rho = ax.real_inner(&x);
        prev = Some(direction);
    }
    let rnorm = ax.add_scaled(-rho, &x).norm_sqr().sqrt();
    Err(Error::NoConvergence {
        iterations: max_iterations,
        last: rnorm,
    })
}

//! Closed-form one-dimensional ground states used as benchmarks: the sech
//! soliton of the focusing cubic equation on the line, and the Jacobi `sn`
//! state of the defocusing cubic equation on a Dirichlet interval.
//!
//! Elliptic functions take the modulus `k` (not the parameter `m = k^2`).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, C64};

/// Complete elliptic integral of the first kind, `K(k) = pi / (2 agm(1, sqrt(1-k^2)))`.
pub fn elliptic_k(k: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&k.abs()) {
        return Err(Error::InvalidArgument(format!("modulus {k} outside [0, 1)")));
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - k * k).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(PI / (a + b))
}

/// Jacobi `(sn, cn, dn)(u, k)` by the descending AGM with backward recurrence.
pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..1.0).contains(&k.abs()) {
        return Err(Error::InvalidArgument(format!("modulus {k} outside [0, 1)")));
    }
    if k == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    let mut a = vec![1.0f64];
    let mut c = vec![k.abs()];
    let mut b = (1.0 - k * k).sqrt();
    while c.last().copied().unwrap_or(0.0).abs() > 1e-16 && a.len() < 64 {
        let an = *a.last().unwrap();
        let next_a = 0.5 * (an + b);
        let next_c = 0.5 * (an - b);
        b = (an * b).sqrt();
        a.push(next_a);
        c.push(next_c);
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    let mut phi_next = phi;
    for j in (1..=n).rev() {
        phi_next = phi;
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let sn = phi.sin();
    let cn = phi.cos();
    let dn = if n == 0 {
        1.0
    } else {
        cn / (phi_next - phi).cos()
    };
    Ok((sn, cn, dn))
}

/// `phi(x) = sqrt(2 omega) sech(sqrt(2 omega) x)`, the positive ground state
/// of `1/2 phi'' + phi^3 = omega phi` on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SechSolution {
    pub omega: f64,
}

impl SechSolution {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sech state needs omega > 0, got {omega}"
            )));
        }
        Ok(SechSolution { omega })
    }

    pub fn value(&self, x: f64) -> f64 {
        let s = (2.0 * self.omega).sqrt();
        s / (s * x).cosh()
    }

    /// `S = (4 sqrt 2 / 3) omega^(3/2)`.
    pub fn action(&self) -> f64 {
        4.0 * 2f64.sqrt() / 3.0 * self.omega.powf(1.5)
    }

    /// `||phi||_2^2 = 2 sqrt(2 omega)`.
    pub fn mass(&self) -> f64 {
        2.0 * (2.0 * self.omega).sqrt()
    }

    /// `||phi||_4^4 = 2 S`.
    pub fn quartic_norm(&self) -> f64 {
        2.0 * self.action()
    }

    /// Minimum of `Q` on the unit `L^4` sphere, `sqrt(8 omega sqrt(2 omega) / 3)`.
    pub fn constrained_minimum(&self) -> f64 {
        (8.0 * self.omega * (2.0 * self.omega).sqrt() / 3.0).sqrt()
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<Field> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid("sech state is one-dimensional".into()));
        }
        Field::from_fn(grid.clone(), |x| C64::new(self.value(x[0]), 0.0))
    }
}

/// `phi(x) = (2 k K / L) sn(2 K x / L, k)` on `[0, L]`, the ground state of
/// `1/2 phi'' = phi^3 + omega phi` with homogeneous Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnSolution {
    pub omega: f64,
    pub length: f64,
    /// Modulus `k` solving `2 (1 + k^2) K(k)^2 + omega L^2 = 0`.
    pub modulus: f64,
    pub quarter_period: f64,
}

/// Root of `2 (1 + k^2) K(k)^2 + omega L^2 = 0` in `[0, 1)`.
pub fn sn_modulus(omega: f64, length: f64) -> Result<f64> {
    let target = -omega * length * length;
    if !(length > 0.0) || !target.is_finite() || target < PI * PI / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "no sn state for omega = {omega}, L = {length}: need omega L^2 <= -pi^2/2"
        )));
    }
    let f = |k: f64| -> f64 {
        let kk = elliptic_k(k).expect("modulus in range");
        2.0 * (1.0 + k * k) * kk * kk - target
    };
    if f(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 0.5;
    while f(hi) < 0.0 {
        lo = hi;
        hi = 0.5 * (1.0 + hi);
        if 1.0 - hi < 1e-15 {
            return Err(Error::InvalidArgument(format!(
                "sn modulus for omega L^2 = {} is numerically 1",
                -target
            )));
        }
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

impl SnSolution {
    pub fn new(omega: f64, length: f64) -> Result<Self> {
        let modulus = sn_modulus(omega, length)?;
        Ok(SnSolution {
            omega,
            length,
            modulus,
            quarter_period: elliptic_k(modulus)?,
        })
    }

    pub fn amplitude(&self) -> f64 {
        2.0 * self.modulus * self.quarter_period / self.length
    }

    pub fn value(&self, x: f64) -> f64 {
        let u = 2.0 * self.quarter_period * x / self.length;
        self.amplitude() * jacobi_sn_cn_dn(u, self.modulus).expect("modulus in range").0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let scale = 2.0 * self.quarter_period / self.length;
        let (_, cn, dn) = jacobi_sn_cn_dn(scale * x, self.modulus).expect("modulus in range");
        self.amplitude() * scale * cn * dn
    }

    /// `S = int_0^L 1/2 phi'^2 + omega phi^2 + 1/2 phi^4`.
    ///
    /// The integrand has period `L`, so the trapezoidal rule converges
    /// geometrically.
    pub fn action(&self) -> f64 {
        let n = 2048;
        let h = self.length / n as f64;
        (0..n)
            .map(|j| {
                let x = j as f64 * h;
                let v = self.value(x);
                let dv = self.derivative(x);
                0.5 * dv * dv + self.omega * v * v + 0.5 * v.powi(4)
            })
            .sum::<f64>()
            * h
    }

    /// Samples on a one-dimensional grid whose left end is `x = 0` of the state.
    pub fn sample(&self, grid: &Arc<Grid>) -> Result<Field> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid("sn state is one-dimensional".into()));
        }
        let lo = grid.axes()[0].lo;
        Field::from_fn(grid.clone(), |x| C64::new(self.value(x[0] - lo), 0.0))
    }
}

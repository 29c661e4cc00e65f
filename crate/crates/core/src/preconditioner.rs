//! Shifted-Laplacian, shifted-potential and symmetrized combined
//! preconditioners `P_C = P_V^{1/2} P_Delta P_V^{1/2}` with
//! `P_Delta = (a_Delta - 1/2 Laplacian)^{-1}` and `P_V = (a_V + W)^{-1}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::parts;
use crate::grid::{Field, Grid};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    Laplacian,
    Potential,
    #[default]
    Combined,
    Identity,
}

#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: PreconditionerKind,
    grid: Arc<Grid>,
    laplacian_shift: f64,
    potential_shift: f64,
    // 1 / sqrt(a_V + W)
    inv_sqrt: Vec<f64>,
}

impl Preconditioner {
    /// `effective_potential` is `W`: the trap, plus `beta |phi|^(p-1)` when defocusing.
    pub fn new(
        kind: PreconditionerKind,
        grid: Arc<Grid>,
        laplacian_shift: f64,
        potential_shift: f64,
        effective_potential: &[f64],
    ) -> Result<Self> {
        if kind == PreconditionerKind::Identity {
            return Ok(Preconditioner {
                kind,
                grid,
                laplacian_shift: 1.0,
                potential_shift: 1.0,
                inv_sqrt: Vec::new(),
            });
        }
        if !(laplacian_shift > 0.0 && potential_shift > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "preconditioner shifts must be positive, got {laplacian_shift} and {potential_shift}"
            )));
        }
        if effective_potential.len() != grid.len() {
            return Err(Error::SampleCount {
                expected: grid.len(),
                got: effective_potential.len(),
            });
        }
        let mut inv_sqrt = Vec::with_capacity(grid.len());
        for (i, w) in effective_potential.iter().enumerate() {
            let denom = potential_shift + w;
            if !(denom > 0.0 && denom.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            inv_sqrt.push(1.0 / denom.sqrt());
        }
        Ok(Preconditioner {
            kind,
            grid,
            laplacian_shift,
            potential_shift,
            inv_sqrt,
        })
    }

    pub fn identity(grid: Arc<Grid>) -> Self {
        Preconditioner::new(PreconditionerKind::Identity, grid, 1.0, 1.0, &[])
            .expect("identity needs no validation")
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn shifts(&self) -> (f64, f64) {
        (self.laplacian_shift, self.potential_shift)
    }

    fn potential_half(&self, f: &Field) -> Field {
        f.mul_real(&self.inv_sqrt)
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        if !f.same_grid_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(match self.kind {
            PreconditionerKind::Identity => f.clone(),
            PreconditionerKind::Laplacian => f.solve_shifted(self.laplacian_shift, 0.5),
            PreconditionerKind::Potential => {
                self.potential_half(&self.potential_half(f))
            }
            PreconditionerKind::Combined => {
                let half = self.potential_half(f);
                self.potential_half(&half.solve_shifted(self.laplacian_shift, 0.5))
            }
        })
    }
}

/// `int 1/2 |grad u|^2 + (V + |omega|) |u|^2`, used for both shifts in the focusing regime.
pub fn shift_focusing(u: &Field, spec: &ProblemSpec) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let p = parts(u, spec)?;
    Ok(p.kinetic + p.potential + spec.omega().abs() * p.mass)
}

/// `(h^-2 + L^d) / 2` with the smallest mesh size and `L^d` the product of
/// the box half-widths.
pub fn shift_defocusing(grid: &Grid) -> f64 {
    let h = grid.min_spacing();
    let half_volume: f64 = grid.axes().iter().map(|a| 0.5 * a.length()).product();
    0.5 * (1.0 / (h * h) + half_volume)
}

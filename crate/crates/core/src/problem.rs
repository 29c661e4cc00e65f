//! Physical parameters of the stationary problem
//! `(-1/2 Laplacian + V + beta |phi|^(p-1) - Omega Lz + omega) phi = 0`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Sign of the interaction, derived from `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Focusing,
    Defocusing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trap {
    None,
    /// `V = 1/2 sum_j gamma_j^2 x_j^2`.
    Harmonic(Vec<f64>),
    /// Samples in grid order.
    Tabulated(Vec<f64>),
}

/// What to do when `|Omega|` reaches the smallest harmonic frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationPolicy {
    #[default]
    Error,
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Nonlinearity exponent `p > 1`.
    pub exponent: f64,
    /// Interaction strength `beta`.
    pub beta: f64,
    /// Frequency `omega`.
    pub omega: f64,
    /// Rotation speed `Omega`.
    pub rotation: f64,
}

impl Parameters {
    pub fn cubic(beta: f64, omega: f64, rotation: f64) -> Self {
        Parameters {
            exponent: 3.0,
            beta,
            omega,
            rotation,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    grid: Arc<Grid>,
    params: Parameters,
    trap: Trap,
    potential: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(grid: Arc<Grid>, params: Parameters, trap: Trap) -> Result<Self> {
        Self::with_policy(grid, params, trap, RotationPolicy::Error)
    }

    pub fn with_policy(
        grid: Arc<Grid>,
        params: Parameters,
        trap: Trap,
        policy: RotationPolicy,
    ) -> Result<Self> {
        let d = grid.dim();
        let Parameters {
            exponent: p,
            beta,
            omega,
            rotation,
        } = params;
        for (name, v) in [("p", p), ("beta", beta), ("omega", omega), ("Omega", rotation)] {
            if !v.is_finite() {
                return Err(Error::InvalidProblem(format!("{name} = {v} is not finite")));
            }
        }
        if p <= 1.0 {
            return Err(Error::InvalidProblem(format!("exponent p = {p} must exceed 1")));
        }
        if d >= 3 {
            let critical = (d as f64 + 2.0) / (d as f64 - 2.0);
            if p >= critical {
                return Err(Error::InvalidProblem(format!(
                    "exponent p = {p} is not subcritical in {d} dimensions (need p < {critical})"
                )));
            }
        }
        if rotation != 0.0 && d < 2 {
            return Err(Error::InvalidProblem(
                "rotation requires at least two dimensions".into(),
            ));
        }

        let potential = match &trap {
            Trap::None => vec![0.0; grid.len()],
            Trap::Harmonic(gammas) => {
                if gammas.len() != d {
                    return Err(Error::InvalidProblem(format!(
                        "{} trap frequencies for a {d}-dimensional grid",
                        gammas.len()
                    )));
                }
                if gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return Err(Error::InvalidProblem(
                        "trap frequencies must be finite and nonnegative".into(),
                    ));
                }
                if rotation != 0.0 {
                    let gmin = gammas[0].min(gammas[1]);
                    if rotation.abs() >= gmin {
                        let msg = format!(
                            "|Omega| = {} is not below the trap frequency {gmin}",
                            rotation.abs()
                        );
                        match policy {
                            RotationPolicy::Error => return Err(Error::InvalidProblem(msg)),
                            RotationPolicy::Warn => log::warn!("{msg}"),
                        }
                    }
                }
                (0..grid.len())
                    .map(|i| {
                        0.5 * gammas
                            .iter()
                            .enumerate()
                            .map(|(j, g)| {
                                let x = grid.coords(j)[i];
                                g * g * x * x
                            })
                            .sum::<f64>()
                    })
                    .collect()
            }
            Trap::Tabulated(samples) => {
                if samples.len() != grid.len() {
                    return Err(Error::InvalidProblem(format!(
                        "tabulated potential has {} samples, grid has {}",
                        samples.len(),
                        grid.len()
                    )));
                }
                samples.clone()
            }
        };
        if let Some(i) = potential.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidProblem(format!(
                "potential is negative or non-finite at sample {i}"
            )));
        }

        Ok(ProblemSpec {
            grid,
            params,
            trap,
            potential,
        })
    }

    /// Same physics with different `omega` / `Omega`; the trap is reused.
    pub fn with_frequencies(&self, omega: f64, rotation: f64) -> Result<Self> {
        let params = Parameters {
            omega,
            rotation,
            ..self.params
        };
        Self::with_policy(self.grid.clone(), params, self.trap.clone(), RotationPolicy::Warn)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn trap(&self) -> &Trap {
        &self.trap
    }

    pub fn exponent(&self) -> f64 {
        self.params.exponent
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn omega(&self) -> f64 {
        self.params.omega
    }

    pub fn rotation(&self) -> f64 {
        self.params.rotation
    }

    /// Trap samples in grid order.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `None` for the linear problem `beta = 0`.
    pub fn regime(&self) -> Option<Regime> {
        if self.params.beta < 0.0 {
            Some(Regime::Focusing)
        } else if self.params.beta > 0.0 {
            Some(Regime::Defocusing)
        } else {
            None
        }
    }

    pub(crate) fn require_regime(&self, expected: Regime) -> Result<()> {
        match self.regime() {
            Some(r) if r == expected => Ok(()),
            _ => Err(Error::InvalidProblem(format!(
                "beta = {} does not describe a {:?} problem",
                self.params.beta, expected
            ))),
        }
    }
}

//! Options, per-iteration records and results shared by all solvers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::FunctionalReport;
use crate::grid::Field;
use crate::linesearch::StepBounds;
use crate::preconditioner::PreconditionerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Stabilized backward-forward gradient flow (normalized in the focusing case).
    #[serde(alias = "gfalm", alias = "gfbf", alias = "gf-bf", alias = "gfalm-bf")]
    GradientFlow,
    /// Preconditioned Barzilai-Borwein.
    Pbb,
    /// Preconditioned nonlinear conjugate gradient with Brent line search.
    Pcg,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gradientflow" | "gradient-flow" | "gfalm" | "gfbf" | "gf-bf" | "gfalm-bf" => {
                Ok(Method::GradientFlow)
            }
            "pbb" => Ok(Method::Pbb),
            "pcg" => Ok(Method::Pcg),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// `||residual||_inf <= tol` at the current iterate.
    Residual,
    /// `|objective(n+1) - objective(n)| <= tol` between accepted iterates.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stopping {
    pub criterion: Criterion,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: Method,
    /// Gradient-flow time step.
    pub time_step: f64,
    /// BB initial step and truncation interval.
    pub steps: StepBounds,
    pub stopping: Stopping,
    pub max_iterations: usize,
    /// Added to the decay-guaranteeing stabilization factor.
    pub stabilization_margin: f64,
    pub preconditioner: PreconditionerKind,
    /// Brent bracket is `[0, max(bracket_floor, bracket_growth * previous step)]`.
    pub bracket_floor: f64,
    pub bracket_growth: f64,
    pub brent_tolerance: f64,
    pub brent_max_evals: usize,
    /// Keep every k-th record in the history (the last one is always kept).
    pub record_every: usize,
    /// Estimate the linear ground energy and reject inadmissible `omega`.
    pub check_admissibility: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Pcg,
            time_step: 0.1,
            steps: StepBounds::default(),
            stopping: Stopping {
                criterion: Criterion::Energy,
                tolerance: 1e-12,
            },
            max_iterations: 100_000,
            stabilization_margin: 1.0,
            preconditioner: PreconditionerKind::Combined,
            bracket_floor: 10.0,
            bracket_growth: 4.0,
            brent_tolerance: 1e-10,
            brent_max_evals: 200,
            record_every: 1,
            check_admissibility: false,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: Method) -> Self {
        SolverOptions {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return bad(format!("time step {} must be positive", self.time_step));
        }
        self.steps.validate()?;
        if !(self.stopping.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.stopping.tolerance));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if !(self.stabilization_margin >= 0.0) {
            return bad(format!(
                "stabilization margin {} must be nonnegative",
                self.stabilization_margin
            ));
        }
        if !(self.bracket_floor > 0.0 && self.bracket_growth >= 1.0) {
            return bad("bracket floor must be positive and growth at least 1".into());
        }
        if !(self.brent_tolerance > 0.0) || self.brent_max_evals < 4 {
            return bad("Brent tolerance must be positive with at least 4 evaluations".into());
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    /// `Q` for focusing runs, `S` for defocusing runs, `E` for mass-constrained runs.
    pub objective: f64,
    pub residual: f64,
    /// `|objective - previous objective|`; NaN for the initial record.
    pub difference: f64,
    /// Time step or step length used to reach this iterate.
    pub step: f64,
    /// Seconds since the solve started.
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualMet,
    EnergyMet,
    MaxIterations,
    /// The line search cannot decrease the objective any further while the
    /// residual is still above tolerance.
    Stalled,
}

impl StopReason {
    pub fn converged(self) -> bool {
        matches!(self, StopReason::ResidualMet | StopReason::EnergyMet)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The ground state `phi_g` (or `u_g` for mass-constrained runs).
    pub state: Field,
    /// Minimizer on the unit `L^{p+1}` sphere (focusing runs only).
    pub normalized: Option<Field>,
    pub report: FunctionalReport,
    /// Final objective value.
    pub objective: f64,
    /// `lambda(u*)` for focusing runs, the projected-gradient multiplier
    /// `mu` for mass-constrained runs, `Q / ||phi||_{p+1}^{p+1}` otherwise.
    pub multiplier: f64,
    /// Chemical potential `-mu` of a mass-constrained run.
    pub chemical_potential: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub history: Vec<ConvergenceRecord>,
    pub elapsed: f64,
}

pub type RecordSink<'a> = &'a mut dyn FnMut(&ConvergenceRecord);

/// Tracks stopping, divergence and the record history of one run.
pub(crate) struct Monitor<'a> {
    stopping: Stopping,
    max_iterations: usize,
    stride: usize,
    sink: Option<RecordSink<'a>>,
    history: Vec<ConvergenceRecord>,
    pending: Option<ConvergenceRecord>,
    start: Instant,
    scale: f64,
}

impl<'a> Monitor<'a> {
    pub fn new(opts: &SolverOptions, sink: Option<RecordSink<'a>>) -> Self {
        Monitor {
            stopping: opts.stopping,
            max_iterations: opts.max_iterations,
            stride: opts.record_every,
            sink,
            history: Vec::new(),
            pending: None,
            start: Instant::now(),
            scale: 1.0,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn push(&mut self, rec: ConvergenceRecord) {
        if let Some(sink) = self.sink.as_mut() {
            sink(&rec);
        }
        if rec.iteration.is_multiple_of(self.stride) {
            self.history.push(rec);
            self.pending = None;
        } else {
            self.pending = Some(rec);
        }
    }

    /// Records the initial iterate.
    pub fn start(&mut self, objective: f64, residual: f64) -> Result<()> {
        if !objective.is_finite() || !residual.is_finite() {
            return Err(Error::Diverged {
                iteration: 0,
                reason: "initial state has non-finite functionals".into(),
            });
        }
        self.scale = objective.abs().max(1.0);
        let rec = ConvergenceRecord {
            iteration: 0,
            objective,
            residual,
            difference: f64::NAN,
            step: 0.0,
            elapsed: self.elapsed(),
        };
        self.push(rec);
        Ok(())
    }

    /// Checked before computing step `n -> n + 1`.
    pub fn before_step(&self, iteration: usize, residual: f64) -> Option<StopReason> {
        if self.stopping.criterion == Criterion::Residual && residual <= self.stopping.tolerance {
            return Some(StopReason::ResidualMet);
        }
        if iteration >= self.max_iterations {
            return Some(StopReason::MaxIterations);
        }
        None
    }

    /// Records an accepted iterate and applies the energy criterion.
    pub fn after_step(
        &mut self,
        iteration: usize,
        objective: f64,
        previous: f64,
        residual: f64,
        step: f64,
    ) -> Result<Option<StopReason>> {
        if !objective.is_finite() || !residual.is_finite() {
            return Err(Error::Diverged {
                iteration,
                reason: "non-finite objective or residual".into(),
            });
        }
        if objective.abs() > 1e6 * self.scale {
            return Err(Error::Diverged {
                iteration,
                reason: format!("objective {objective:e} left the admissible range"),
            });
        }
        let difference = (objective - previous).abs();
        self.push(ConvergenceRecord {
            iteration,
            objective,
            residual,
            difference,
            step,
            elapsed: self.elapsed(),
        });
        if self.stopping.criterion == Criterion::Energy && difference <= self.stopping.tolerance {
            return Ok(Some(StopReason::EnergyMet));
        }
        Ok(None)
    }

    pub fn finish(mut self) -> (Vec<ConvergenceRecord>, f64) {
        if let Some(rec) = self.pending.take() {
            self.history.push(rec);
        }
        let elapsed = self.elapsed();
        (self.history, elapsed)
    }
}

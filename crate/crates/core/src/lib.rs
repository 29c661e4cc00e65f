//! Action ground states of the rotating nonlinear Schrödinger equation
//!
//! ```text
//! (-1/2 Laplacian + V + beta |phi|^(p-1) - Omega Lz + omega) phi = 0
//! ```
//!
//! computed on tensor-product pseudospectral grids. Focusing problems
//! (`beta < 0`) are solved as a minimization of the quadratic part on the
//! unit `L^{p+1}` sphere followed by a rescaling; defocusing problems
//! (`beta > 0`) minimize the action directly.

pub mod defocusing;
pub mod energy;
pub mod error;
pub mod focusing;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod linesearch;
pub mod preconditioner;
pub mod problem;
pub mod reference;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Boundary, Field, Grid, C64};
pub use problem::{Parameters, ProblemSpec, Regime, RotationPolicy, Trap};

use solver::{RecordSink, SolveResult, SolverOptions};

/// Dispatches on the sign of `beta`.
pub fn solve_ground_state(spec: &ProblemSpec, initial: &Field, opts: &SolverOptions) -> Result<SolveResult> {
    solve_ground_state_with(spec, initial, opts, None)
}

pub fn solve_ground_state_with(
    spec: &ProblemSpec,
    initial: &Field,
    opts: &SolverOptions,
    sink: Option<RecordSink<'_>>,
) -> Result<SolveResult> {
    match spec.regime() {
        Some(Regime::Focusing) => focusing::solve_focusing_with(spec, initial, opts, sink),
        Some(Regime::Defocusing) => defocusing::solve_defocusing_with(spec, initial, opts, sink),
        None => Err(Error::InvalidProblem(
            "beta = 0 has no action ground state; use the mass-constrained solver".into(),
        )),
    }
}

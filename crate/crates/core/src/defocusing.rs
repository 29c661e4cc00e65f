//! Defocusing ground states (`beta > 0`) as unconstrained minimizers of the
//! action. Nothing is normalized here: the zero field is itself a critical
//! point, so every pipeline starts from a nonzero state.

use crate::error::{Error, Result};
use crate::focusing::{bracketed_search, power_sum_change, stabilization_peak, LineMin};
use crate::functionals::{add_local_terms, analyze, estimate_lambda0, report, Parts};
use crate::grid::{abs_pow, Field};
use crate::linesearch::{cg_direction, BbMemory, CgMemory};
use crate::preconditioner::{shift_defocusing, Preconditioner, PreconditionerKind};
use crate::problem::{ProblemSpec, Regime};
use crate::solver::{Criterion, Method, Monitor, RecordSink, SolveResult, SolverOptions, StopReason};

/// `1/2 max(0, max(V + [d >= 2] Omega^2 r^2/2 + omega + beta |phi|^(p-1))) + margin`.
pub fn stabilization_defocusing(phi: &Field, spec: &ProblemSpec, margin: f64) -> f64 {
    0.5 * stabilization_peak(phi, spec, spec.beta()).max(0.0) + margin
}

struct Iterate {
    phi: Field,
    parts: Parts,
    /// `(-1/2 Laplacian + V - Omega Lz) phi`
    linear: Field,
    action: f64,
    /// `H(phi)`
    grad: Field,
    residual: f64,
}

impl Iterate {
    fn new(phi: Field, spec: &ProblemSpec) -> Result<Self> {
        let a = analyze(&phi, spec)?;
        let mut grad = a.linear.clone();
        add_local_terms(&mut grad, &phi, spec, spec.beta());
        let residual = grad.norm_inf();
        Ok(Iterate {
            action: a.parts.action(spec),
            phi,
            parts: a.parts,
            linear: a.linear,
            grad,
            residual,
        })
    }
}

fn gf_update(it: &Iterate, tau: f64, alpha: f64) -> Field {
    // (1 + tau alpha - tau/2 Laplacian) phi~ = phi + tau (alpha - V - omega - beta |phi|^(p-1) + Omega Lz) phi
    // is phi~ = phi - tau (1 + tau alpha - tau/2 Laplacian)^{-1} H(phi).
    let correction = it.grad.solve_shifted(1.0 + tau * alpha, 0.5 * tau);
    it.phi.add_scaled(-tau, &correction)
}

/// One stabilized backward-forward Euler step.
pub fn gf_bf_step(phi: &Field, spec: &ProblemSpec, tau: f64, alpha: f64) -> Result<Field> {
    let it = Iterate::new(phi.clone(), spec)?;
    Ok(gf_update(&it, tau, alpha))
}

/// `V + beta |phi|^(p-1)`.
fn effective_potential(phi: &Field, spec: &ProblemSpec) -> Vec<f64> {
    let q = spec.exponent() - 1.0;
    let beta = spec.beta();
    spec.potential()
        .iter()
        .zip(phi.values())
        .map(|(v, f)| v + beta * abs_pow(f.norm_sqr(), q))
        .collect()
}

pub fn solve_defocusing(spec: &ProblemSpec, phi0: &Field, opts: &SolverOptions) -> Result<SolveResult> {
    solve_defocusing_with(spec, phi0, opts, None)
}

/// Minimizes the action from `phi0` by gradient flow, PBB or PCG.
pub fn solve_defocusing_with(
    spec: &ProblemSpec,
    phi0: &Field,
    opts: &SolverOptions,
    sink: Option<RecordSink<'_>>,
) -> Result<SolveResult> {
    spec.require_regime(Regime::Defocusing)?;
    opts.validate()?;
    if !phi0.same_grid_as(spec.grid()) {
        return Err(Error::GridMismatch);
    }
    phi0.check_finite()?;
    if phi0.is_zero() {
        return Err(Error::ZeroField);
    }
    if opts.check_admissibility {
        let lambda0 = estimate_lambda0(spec, 1e-9, 5000)?;
        if spec.omega() >= -lambda0 {
            return Err(Error::InvalidProblem(format!(
                "omega = {} must lie below -lambda0 = {}",
                spec.omega(),
                -lambda0
            )));
        }
    }

    let grid = spec.grid().clone();
    let shift = shift_defocusing(&grid);
    let make_preconditioner = |phi: &Field| -> Result<Preconditioner> {
        match opts.preconditioner {
            PreconditionerKind::Identity => Ok(Preconditioner::identity(grid.clone())),
            kind => Preconditioner::new(kind, grid.clone(), shift, shift, &effective_potential(phi, spec)),
        }
    };

    let mut it = Iterate::new(phi0.clone(), spec)?;
    let mut monitor = Monitor::new(opts, sink);
    monitor.start(it.action, it.residual)?;

    let mut bb = BbMemory::default();
    let mut cg_prev: CgMemory = None;
    let mut prev_tau = 0.0;
    let mut n = 0;
    let stop = loop {
        if let Some(reason) = monitor.before_step(n, it.residual) {
            break reason;
        }
        let (next, step) = match opts.method {
            Method::GradientFlow => {
                let alpha = stabilization_defocusing(&it.phi, spec, opts.stabilization_margin);
                (gf_update(&it, opts.time_step, alpha), opts.time_step)
            }
            Method::Pbb => {
                let pg = make_preconditioner(&it.phi)?.apply(&it.grad)?;
                let tau = bb.next_step(&it.phi, &pg, &opts.steps);
                (it.phi.add_scaled(-tau, &pg), tau)
            }
            Method::Pcg => {
                let pg = make_preconditioner(&it.phi)?.apply(&it.grad)?;
                let mut d = cg_direction(&it.grad, &pg, &cg_prev)?;
                let mut search = line_search(&it, &d, spec, prev_tau, opts)?;
                if search.value >= 0.0 && cg_prev.is_some() {
                    d = pg.scaled(-1.0);
                    search = line_search(&it, &d, spec, prev_tau, opts)?;
                }
                if search.tau == 0.0 && opts.stopping.criterion == Criterion::Residual {
                    break StopReason::Stalled;
                }
                cg_prev = Some((it.grad.clone(), pg, d.clone()));
                if search.tau > 0.0 {
                    prev_tau = search.tau;
                }
                (it.phi.add_scaled(search.tau, &d), search.tau)
            }
        };
        let previous = it.action;
        it = Iterate::new(next, spec)?;
        n += 1;
        if let Some(reason) = monitor.after_step(n, it.action, previous, it.residual, step)? {
            break reason;
        }
    };

    let (history, elapsed) = monitor.finish();
    let report = report(&it.phi, spec)?;
    Ok(SolveResult {
        multiplier: report.multiplier,
        state: it.phi,
        normalized: None,
        report,
        objective: it.action,
        chemical_potential: None,
        residual: it.residual,
        iterations: n,
        stop_reason: stop,
        history,
        elapsed,
    })
}

// tau -> S(phi + tau d) - S(phi): the quadratic part is a polynomial in tau
// and the power term is summed as a pointwise change.
fn line_search(
    it: &Iterate,
    d: &Field,
    spec: &ProblemSpec,
    previous_tau: f64,
    opts: &SolverOptions,
) -> Result<LineMin> {
    let p = spec.exponent();
    let qd = analyze(d, spec)?.parts.quadratic(spec);
    let cross = it.linear.real_inner(d) + spec.omega() * it.phi.real_inner(d);
    let coeff = 2.0 * spec.beta() / (p + 1.0);
    debug_assert!(it.parts.power >= 0.0);
    let f = |tau: f64| {
        2.0 * tau * cross + tau * tau * qd + coeff * power_sum_change(&it.phi, d, tau, p + 1.0)
    };
    bracketed_search(f, previous_tau, opts)
}

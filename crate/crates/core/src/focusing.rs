//! Focusing ground states (`beta < 0`).
//!
//! The action ground state is recovered from the minimizer `u*` of the
//! quadratic part `Q` on the unit `L^{p+1}` sphere by the rescaling
//! `phi_g = (Q(u*) / -beta)^(1/(p-1)) u*`.

use crate::error::{Error, Result};
use crate::functionals::{add_local_terms, analyze, estimate_lambda0, report, Parts};
use crate::grid::{abs_pow, Field};
use crate::linesearch::{brent_minimize, cg_direction, BbMemory, CgMemory};
use crate::preconditioner::{shift_focusing, Preconditioner, PreconditionerKind};
use crate::problem::{ProblemSpec, Regime};
use crate::solver::{Criterion, Method, Monitor, RecordSink, SolveResult, SolverOptions, StopReason};

/// `u / ||u||_{p+1}`.
pub fn normalize_lp1(u: &Field, p: f64) -> Result<Field> {
    let n = u.norm_lq(p + 1.0)?;
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(u.scaled(1.0 / n))
}

fn check_on_sphere(u: &Field, p: f64) -> Result<()> {
    let n = u.norm_lq(p + 1.0)?;
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "state has L^(p+1) norm {n}, expected 1"
        )));
    }
    Ok(())
}

/// Largest sample of `V + [d >= 2] Omega^2 r^2 / 2 + omega + coeff |u|^(p-1)`.
pub(crate) fn stabilization_peak(u: &Field, spec: &ProblemSpec, coeff: f64) -> f64 {
    let grid = spec.grid();
    let rot2 = if grid.dim() >= 2 {
        spec.rotation() * spec.rotation()
    } else {
        0.0
    };
    let q = spec.exponent() - 1.0;
    let omega = spec.omega();
    let mut peak = f64::NEG_INFINITY;
    for (i, (v, f)) in spec.potential().iter().zip(u.values()).enumerate() {
        let mut e = v + omega + coeff * abs_pow(f.norm_sqr(), q);
        if rot2 != 0.0 {
            let (x, y) = (grid.coords(0)[i], grid.coords(1)[i]);
            e += 0.5 * rot2 * (x * x + y * y);
        }
        peak = peak.max(e);
    }
    peak
}

fn stabilization_from_multiplier(u: &Field, spec: &ProblemSpec, lambda: f64, margin: f64) -> f64 {
    0.5 * stabilization_peak(u, spec, -lambda).max(0.0) + margin
}

/// `1/2 max(0, max(V + [d >= 2] Omega^2 r^2/2 + omega - lambda(u) |u|^(p-1))) + margin`,
/// large enough for `Q` to decay under any time step.
pub fn stabilization_focusing(u: &Field, spec: &ProblemSpec, margin: f64) -> Result<f64> {
    check_on_sphere(u, spec.exponent())?;
    let it = Iterate::new(u.clone(), spec)?;
    Ok(stabilization_from_multiplier(u, spec, it.lambda, margin))
}

struct Iterate {
    u: Field,
    parts: Parts,
    /// `(-1/2 Laplacian + V - Omega Lz) u`
    linear: Field,
    q: f64,
    lambda: f64,
    grad: Field,
    residual: f64,
}

impl Iterate {
    fn new(u: Field, spec: &ProblemSpec) -> Result<Self> {
        let a = analyze(&u, spec)?;
        if a.parts.power == 0.0 {
            return Err(Error::ZeroField);
        }
        let q = a.parts.quadratic(spec);
        let lambda = q / a.parts.power;
        let mut grad = a.linear.clone();
        add_local_terms(&mut grad, &u, spec, -lambda);
        let residual = grad.norm_inf();
        Ok(Iterate {
            u,
            parts: a.parts,
            linear: a.linear,
            q,
            lambda,
            grad,
            residual,
        })
    }
}

fn gf_update(it: &Iterate, tau: f64, alpha: f64, p: f64) -> Result<Field> {
    // (1 + tau alpha - tau/2 Laplacian) u~ = u + tau (alpha - V - omega + Omega Lz + lambda |u|^(p-1)) u
    // is u~ = u - tau (1 + tau alpha - tau/2 Laplacian)^{-1} g.
    let correction = it.grad.solve_shifted(1.0 + tau * alpha, 0.5 * tau);
    normalize_lp1(&it.u.add_scaled(-tau, &correction), p)
}

/// One stabilized backward-forward step followed by renormalization.
pub fn gfalm_bf_step(u: &Field, spec: &ProblemSpec, tau: f64, alpha: f64) -> Result<Field> {
    let it = Iterate::new(u.clone(), spec)?;
    gf_update(&it, tau, alpha, spec.exponent())
}

/// `(Q(u) / -beta)^(1/(p-1)) u`, which lies on the Nehari manifold.
pub fn rescale_ground_state(u: &Field, spec: &ProblemSpec) -> Result<Field> {
    spec.require_regime(Regime::Focusing)?;
    let q = analyze(u, spec)?.parts.quadratic(spec);
    rescale_with(u, q, spec)
}

fn rescale_with(u: &Field, q: f64, spec: &ProblemSpec) -> Result<Field> {
    if !(q > 0.0) {
        return Err(Error::NonPositiveQuadratic(q));
    }
    let factor = (q / -spec.beta()).powf(1.0 / (spec.exponent() - 1.0));
    Ok(u.scaled(factor))
}

fn preconditioner(it: &Iterate, spec: &ProblemSpec, kind: PreconditionerKind) -> Result<Preconditioner> {
    if kind == PreconditionerKind::Identity {
        return Ok(Preconditioner::identity(spec.grid().clone()));
    }
    let shift = it.parts.kinetic + it.parts.potential + spec.omega().abs() * it.parts.mass;
    debug_assert!({
        let direct = shift_focusing(&it.u, spec).unwrap_or(shift);
        (direct - shift).abs() <= 1e-12 * shift.abs().max(1.0)
    });
    Preconditioner::new(kind, spec.grid().clone(), shift, shift, spec.potential())
}

/// `sum (|u + tau d|^q - |u|^q) w`, evaluated pointwise without cancellation
/// so that differences far below the size of the sum survive.
pub(crate) fn power_sum_change(u: &Field, d: &Field, tau: f64, q: f64) -> f64 {
    let half = 0.5 * q;
    u.values()
        .iter()
        .zip(d.values())
        .map(|(a, b)| {
            let base = a.norm_sqr();
            let change = 2.0 * tau * (a.conj() * b).re + tau * tau * b.norm_sqr();
            if base == 0.0 {
                abs_pow(change.max(0.0), q)
            } else {
                let ratio = (change / base).max(-1.0);
                abs_pow(base, q) * (half * ratio.ln_1p()).exp_m1()
            }
        })
        .sum::<f64>()
        * u.grid().weight()
}

/// Result of a bracketed Brent search along a direction.
pub(crate) struct LineMin {
    pub tau: f64,
    pub value: f64,
}

pub(crate) fn bracketed_search(
    mut f: impl FnMut(f64) -> f64,
    previous_tau: f64,
    opts: &SolverOptions,
) -> Result<LineMin> {
    let mut hi = opts.bracket_floor.max(opts.bracket_growth * previous_tau);
    for _ in 0..40 {
        let r = brent_minimize(&mut f, 0.0, hi, opts.brent_tolerance, opts.brent_max_evals)?;
        if r.tau < 0.99 * hi {
            return Ok(LineMin {
                tau: r.tau,
                value: r.value,
            });
        }
        hi *= 4.0;
    }
    Err(Error::Diverged {
        iteration: 0,
        reason: "line search found no minimum along the search direction".into(),
    })
}

pub fn solve_focusing(spec: &ProblemSpec, u0: &Field, opts: &SolverOptions) -> Result<SolveResult> {
    solve_focusing_with(spec, u0, opts, None)
}

/// Minimizes `Q` on the unit `L^{p+1}` sphere from `u0` and rescales the minimizer.
pub fn solve_focusing_with(
    spec: &ProblemSpec,
    u0: &Field,
    opts: &SolverOptions,
    sink: Option<RecordSink<'_>>,
) -> Result<SolveResult> {
    spec.require_regime(Regime::Focusing)?;
    opts.validate()?;
    if !u0.same_grid_as(spec.grid()) {
        return Err(Error::GridMismatch);
    }
    u0.check_finite()?;
    if opts.check_admissibility {
        let lambda0 = estimate_lambda0(spec, 1e-9, 5000)?;
        if spec.omega() <= -lambda0 {
            return Err(Error::InvalidProblem(format!(
                "omega = {} must exceed -lambda0 = {}",
                spec.omega(),
                -lambda0
            )));
        }
    }
    let p = spec.exponent();
    let mut it = Iterate::new(normalize_lp1(u0, p)?, spec)?;
    let mut monitor = Monitor::new(opts, sink);
    monitor.start(it.q, it.residual)?;

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
                let alpha = stabilization_from_multiplier(&it.u, spec, it.lambda, opts.stabilization_margin);
                (gf_update(&it, opts.time_step, alpha, p)?, opts.time_step)
            }
            Method::Pbb => {
                let pc = preconditioner(&it, spec, opts.preconditioner)?;
                let pg = pc.apply(&it.grad)?;
                let tau = bb.next_step(&it.u, &pg, &opts.steps);
                (normalize_lp1(&it.u.add_scaled(-tau, &pg), p)?, tau)
            }
            Method::Pcg => {
                let pc = preconditioner(&it, spec, opts.preconditioner)?;
                let pg = pc.apply(&it.grad)?;
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
                (normalize_lp1(&it.u.add_scaled(search.tau, &d), p)?, search.tau)
            }
        };
        let previous_q = it.q;
        it = Iterate::new(next, spec)?;
        n += 1;
        if let Some(reason) = monitor.after_step(n, it.q, previous_q, it.residual, step)? {
            break reason;
        }
    };

    let (history, elapsed) = monitor.finish();
    let state = rescale_with(&it.u, it.q, spec)?;
    let report = report(&state, spec)?;
    Ok(SolveResult {
        state,
        normalized: Some(it.u),
        report,
        objective: it.q,
        multiplier: it.lambda,
        chemical_potential: None,
        residual: it.residual,
        iterations: n,
        stop_reason: stop,
        history,
        elapsed,
    })
}

// tau -> Q((u + tau d) / ||u + tau d||_{p+1}) - Q(u), where the first term is
// Q(u + tau d) / ||u + tau d||_{p+1}^2 and Q(u + tau d) is quadratic in tau.
// Working with the change keeps the search resolving steps long after the
// values themselves agree to machine precision.
fn line_search(
    it: &Iterate,
    d: &Field,
    spec: &ProblemSpec,
    previous_tau: f64,
    opts: &SolverOptions,
) -> Result<LineMin> {
    let p = spec.exponent();
    let omega = spec.omega();
    let qd = analyze(d, spec)?.parts.quadratic(spec);
    let cross = it.linear.real_inner(d) + omega * it.u.real_inner(d);
    let q0 = it.q;
    let p0 = it.parts.power;
    let r = 2.0 / (p + 1.0);
    let f = |tau: f64| {
        let dq = 2.0 * tau * cross + tau * tau * qd;
        let dp = power_sum_change(&it.u, d, tau, p + 1.0);
        (dq - q0 * (r * (dp / p0).ln_1p()).exp_m1()) / (p0 + dp).powf(r)
    };
    bracketed_search(f, previous_tau, opts)
}

//! Energy ground states with prescribed mass: minimize
//! `E(u) = 1/2 ||grad u||^2 + int V|u|^2 + L_Omega(u) + 2 beta/(p+1) ||u||_{p+1}^{p+1}`
//! over `||u||^2 = m` by projected PBB or PCG. The frequency `omega` of the
//! problem plays no role here.

use crate::error::{Error, Result};
use crate::focusing::{bracketed_search, power_sum_change, LineMin};
use crate::functionals::{analyze, report, Parts};
use crate::grid::{abs_pow, Field};
use crate::linesearch::{cg_direction, BbMemory, CgMemory};
use crate::preconditioner::{Preconditioner, PreconditionerKind};
use crate::problem::ProblemSpec;
use crate::solver::{Criterion, Method, Monitor, RecordSink, SolveResult, SolverOptions, StopReason};

/// `||phi||_2^2`.
pub fn mass_of(phi: &Field) -> f64 {
    phi.norm_sqr()
}

fn project(u: &Field, mass: f64) -> Result<Field> {
    let n = u.norm_sqr();
    if n == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(u.scaled((mass / n).sqrt()))
}

struct Iterate {
    u: Field,
    parts: Parts,
    linear: Field,
    energy: f64,
    /// `(L_parts + beta ||u||_{p+1}^{p+1}) / m`
    mu: f64,
    grad: Field,
    residual: f64,
}

impl Iterate {
    fn new(u: Field, spec: &ProblemSpec, mass: f64) -> Result<Self> {
        let a = analyze(&u, spec)?;
        let p = spec.exponent();
        let beta = spec.beta();
        let energy = a.parts.linear() + 2.0 * beta / (p + 1.0) * a.parts.power;
        let mu = (a.parts.linear() + beta * a.parts.power) / mass;
        let mut grad = a.linear.clone();
        for (g, f) in grad.values_mut().iter_mut().zip(u.values()) {
            *g += f * (beta * abs_pow(f.norm_sqr(), p - 1.0) - mu);
        }
        let residual = grad.norm_inf();
        Ok(Iterate {
            u,
            parts: a.parts,
            linear: a.linear,
            energy,
            mu,
            grad,
            residual,
        })
    }
}

fn preconditioner(it: &Iterate, spec: &ProblemSpec, mass: f64, kind: PreconditionerKind) -> Result<Preconditioner> {
    let grid = spec.grid().clone();
    if kind == PreconditionerKind::Identity {
        return Ok(Preconditioner::identity(grid));
    }
    let beta = spec.beta();
    let shift = (it.parts.kinetic + it.parts.potential + beta.abs() * it.parts.power) / mass;
    let q = spec.exponent() - 1.0;
    let w: Vec<f64> = spec
        .potential()
        .iter()
        .zip(it.u.values())
        .map(|(v, f)| v + beta.max(0.0) * abs_pow(f.norm_sqr(), q))
        .collect();
    Preconditioner::new(kind, grid, shift, shift, &w)
}

pub fn solve_energy_ground_state(
    spec: &ProblemSpec,
    mass: f64,
    u0: &Field,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    solve_energy_ground_state_with(spec, mass, u0, opts, None)
}

/// Projected PCG (or PBB) on the mass sphere `||u||^2 = mass`.
pub fn solve_energy_ground_state_with(
    spec: &ProblemSpec,
    mass: f64,
    u0: &Field,
    opts: &SolverOptions,
    sink: Option<RecordSink<'_>>,
) -> Result<SolveResult> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass {mass} must be positive")));
    }
    if opts.method == Method::GradientFlow {
        return Err(Error::InvalidArgument(
            "the mass-constrained problem is solved by pbb or pcg".into(),
        ));
    }
    opts.validate()?;
    if !u0.same_grid_as(spec.grid()) {
        return Err(Error::GridMismatch);
    }
    u0.check_finite()?;

    let mut it = Iterate::new(project(u0, mass)?, spec, mass)?;
    let mut monitor = Monitor::new(opts, sink);
    monitor.start(it.energy, it.residual)?;

    let mut bb = BbMemory::default();
    let mut cg_prev: CgMemory = None;
    let mut prev_tau = 0.0;
    let mut n = 0;
    let stop = loop {
        if let Some(reason) = monitor.before_step(n, it.residual) {
            break reason;
        }
        let pg = preconditioner(&it, spec, mass, opts.preconditioner)?.apply(&it.grad)?;
        let (next, step) = match opts.method {
            Method::Pbb => {
                let tau = bb.next_step(&it.u, &pg, &opts.steps);
                (project(&it.u.add_scaled(-tau, &pg), mass)?, tau)
            }
            _ => {
                let mut d = tangent(&it.u, cg_direction(&it.grad, &pg, &cg_prev)?, mass);
                let mut search = line_search(&it, &d, spec, mass, prev_tau, opts)?;
                if search.value >= 0.0 && cg_prev.is_some() {
                    d = tangent(&it.u, pg.scaled(-1.0), mass);
                    search = line_search(&it, &d, spec, mass, prev_tau, opts)?;
                }
                if search.tau == 0.0 && opts.stopping.criterion == Criterion::Residual {
                    break StopReason::Stalled;
                }
                cg_prev = Some((it.grad.clone(), pg, d.clone()));
                if search.tau > 0.0 {
                    prev_tau = search.tau;
                }
                (project(&it.u.add_scaled(search.tau, &d), mass)?, search.tau)
            }
        };
        let previous = it.energy;
        it = Iterate::new(next, spec, mass)?;
        n += 1;
        if let Some(reason) = monitor.after_step(n, it.energy, previous, it.residual, step)? {
            break reason;
        }
    };

    let (history, elapsed) = monitor.finish();
    let report = report(&it.u, spec)?;
    Ok(SolveResult {
        report,
        objective: it.energy,
        multiplier: it.mu,
        chemical_potential: Some(-it.mu),
        residual: it.residual,
        state: it.u,
        normalized: None,
        iterations: n,
        stop_reason: stop,
        history,
        elapsed,
    })
}

// drops the component of d along u
fn tangent(u: &Field, d: Field, mass: f64) -> Field {
    let along = u.real_inner(&d) / mass;
    d.add_scaled(-along, u)
}

// tau -> E(sqrt(m) (u + tau d) / ||u + tau d||) - E(u). With s = m / ||u + tau d||^2
// and k = (p+1)/2 the value is s L(u + tau d) + c s^k P(u + tau d); L is
// quadratic in tau and every change is formed without cancellation.
fn line_search(
    it: &Iterate,
    d: &Field,
    spec: &ProblemSpec,
    mass: f64,
    previous_tau: f64,
    opts: &SolverOptions,
) -> Result<LineMin> {
    let p = spec.exponent();
    let c = 2.0 * spec.beta() / (p + 1.0);
    let k = 0.5 * (p + 1.0);
    let l0 = it.parts.linear();
    let p0 = it.parts.power;
    let m0 = it.parts.mass;
    let s0 = mass / m0;
    let ld = analyze(d, spec)?.parts.linear();
    let cross_l = it.linear.real_inner(d);
    let cross_m = it.u.real_inner(d);
    let dd = d.norm_sqr();
    let f = |tau: f64| {
        let dl = 2.0 * tau * cross_l + tau * tau * ld;
        let dm = 2.0 * tau * cross_m + tau * tau * dd;
        let s = mass / (m0 + dm);
        let ds = -mass * dm / ((m0 + dm) * m0);
        let mut change = s * dl + l0 * ds;
        if c != 0.0 {
            let dp = power_sum_change(&it.u, d, tau, p + 1.0);
            let sk = s.powf(k);
            let dsk = s0.powf(k) * (-k * (dm / m0).ln_1p()).exp_m1();
            change += c * (sk * dp + p0 * dsk);
        }
        change
    };
    bracketed_search(f, previous_tau, opts)
}

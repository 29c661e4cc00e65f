//! Step-length machinery shared by both regimes: the truncated
//! Barzilai-Borwein step, the PRP+ conjugacy coefficient and Brent's
//! derivative-free scalar minimization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

/// Initial step and truncation interval for BB steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for StepBounds {
    fn default() -> Self {
        StepBounds {
            initial: 0.1,
            min: 1e-6,
            max: 1e6,
        }
    }
}

impl StepBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.min > 0.0 && self.min < self.initial && self.initial < self.max;
        if !ok || !self.max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step bounds need 0 < min < initial < max, got {} / {} / {}",
                self.min, self.initial, self.max
            )));
        }
        Ok(())
    }
}

/// `|Re<y, s>| / <y, y>` clamped to `[min, max]`, or the initial step when
/// the pairing vanishes.
pub fn bb_step_length(s: &Field, y: &Field, bounds: &StepBounds) -> f64 {
    let ys = s.real_inner(y);
    let yy = y.norm_sqr();
    if ys == 0.0 || yy == 0.0 || !ys.is_finite() || !yy.is_finite() {
        return bounds.initial;
    }
    (ys.abs() / yy).min(bounds.max).max(bounds.min)
}

/// Previous iterate and preconditioned gradient of a BB run.
#[derive(Debug, Clone, Default)]
pub struct BbMemory {
    previous: Option<(Field, Field)>,
}

impl BbMemory {
    pub fn is_valid(&self) -> bool {
        self.previous.is_some()
    }

    /// Step length for the current iterate; remembers it for the next call.
    pub fn next_step(&mut self, iterate: &Field, preconditioned_gradient: &Field, bounds: &StepBounds) -> f64 {
        let tau = match &self.previous {
            None => bounds.initial,
            Some((u, pg)) => {
                bb_step_length(&iterate.sub(u), &preconditioned_gradient.sub(pg), bounds)
            }
        };
        self.previous = Some((iterate.clone(), preconditioned_gradient.clone()));
        tau
    }
}

/// `max(0, Re<g - g_prev, P g> / Re<g_prev, P g_prev>)`.
pub fn prp_beta(g: &Field, g_prev: &Field, pg: &Field, pg_prev: &Field) -> Result<f64> {
    let denom = g_prev.real_inner(pg_prev);
    if !(denom > 0.0) {
        return Err(Error::ZeroField);
    }
    let num = g.real_inner(pg) - g_prev.real_inner(pg);
    Ok((num / denom).max(0.0))
}

/// Gradient, preconditioned gradient and direction of the last CG step.
pub(crate) type CgMemory = Option<(Field, Field, Field)>;

/// `-P g + beta d_prev` with the PRP+ coefficient, restarted along `-P g`
/// when that fails to be a descent direction.
pub(crate) fn cg_direction(g: &Field, pg: &Field, memory: &CgMemory) -> Result<Field> {
    let steepest = pg.scaled(-1.0);
    let d = match memory {
        Some((g_prev, pg_prev, d_prev)) => {
            let beta = prp_beta(g, g_prev, pg, pg_prev)?;
            steepest.add_scaled(beta, d_prev)
        }
        None => return Ok(steepest),
    };
    if g.real_inner(&d) >= 0.0 {
        return Ok(steepest);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrentOutcome {
    pub tau: f64,
    pub value: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out first.
    pub converged: bool,
}

/// Minimizes `objective` on `[lo, hi]` by golden-section search with
/// successive parabolic interpolation.
///
/// The interior search stops once the bracket around the best point is
/// within `rel_tol * (1 + |tau|)`. Both end points are evaluated as well and
/// win if they are lower, so the result is never worse than either end.
pub fn brent_minimize(
    mut objective: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<BrentOutcome> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("empty bracket [{lo}, {hi}]")));
    }
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let (mut a, mut b) = (lo, hi);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = objective(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut evals = 1;
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut converged = false;

    while evals < max_evals.saturating_sub(2) {
        let xm = 0.5 * (a + b);
        let tol1 = rel_tol * (1.0 + x.abs());
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            converged = true;
            break;
        }
        let mut take_golden = true;
        if e.abs() > tol1 {
            let mut r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                take_golden = false;
            }
        }
        if take_golden {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = objective(u);
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let mut best = (x, fx);
    for end in [lo, hi] {
        let f = objective(end);
        evals += 1;
        if f < best.1 {
            best = (end, f);
        }
    }
    Ok(BrentOutcome {
        tau: best.0,
        value: best.1,
        evaluations: evals,
        converged,
    })
}

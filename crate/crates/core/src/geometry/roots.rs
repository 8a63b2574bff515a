use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 80;
const RESIDUAL_TOL: f64 = 1e-13;

/// Root of a strictly decreasing function on the open interval `(lo, hi)`.
///
/// `fun` returns the value and derivative. Newton steps are taken while they
/// stay inside the current bracket, bisection otherwise. Converges when the
/// residual drops below `1e−13` or the bracket shrinks to a few ulps.
pub(crate) fn solve_decreasing<F>(fun: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo, hi);
    // hi may be a pole where the function tends to −∞; stay strictly inside
    let mut x = 0.5 * (lo + hi);
    if lo < 0.0 && hi > 0.0 {
        // the base member itself is the most common answer
        x = 0.0;
    }
    let mut last = f64::INFINITY;
    // a collapsed bracket is only a root if the sign change was observed
    let (mut seen_pos, mut seen_neg) = (false, false);
    for _ in 0..MAX_ITERATIONS {
        let (v, dv) = fun(x);
        last = v;
        if v.abs() < RESIDUAL_TOL {
            return Ok(x);
        }
        if v > 0.0 {
            lo = x;
            seen_pos = true;
        } else {
            hi = x;
            seen_neg = true;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            if seen_pos && seen_neg {
                return Ok(x);
            }
            break;
        }
        let newton = x - v / dv;
        x = if dv < 0.0 && newton > lo && newton < hi && newton.is_finite() { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual: last })
}

//! Bracketed scalar root finding.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError<E> {
    #[error("no sign change on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("function evaluation failed: {0}")]
    Eval(E),
}

/// Illinois false position with a bisection safeguard.
///
/// Requires `f(lo)` and `f(hi)` of opposite sign (or one of them zero).
/// Stops when the bracket is narrower than `xtol·(1 + |x|)` or `f(x) = 0`.
pub fn solve_bracketed<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<f64, RootError<E>> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a).map_err(RootError::Eval)?;
    let mut fb = f(b).map_err(RootError::Eval)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { lo, hi });
    }
    let mut side = 0i8;
    const MAX_ITER: usize = 400;
    for _ in 0..MAX_ITER {
        let width = (b - a).abs();
        let mid = 0.5 * (a + b);
        // also stop once no float lies strictly inside the bracket
        if width <= xtol * (1.0 + mid.abs()) || mid == a || mid == b {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        // fall back to bisection when the secant point hugs an endpoint
        let lo_ = a.min(b) + 0.05 * width;
        let hi_ = a.max(b) - 0.05 * width;
        if !(x > lo_ && x < hi_) {
            x = mid;
        }
        let fx = f(x).map_err(RootError::Eval)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(RootError::NoConvergence(MAX_ITER))
}

/// All sign changes (and exact zeros) of `f` between consecutive samples.
/// Returns the refined roots in increasing order; failing samples are skipped.
pub fn roots_on_samples(f: impl Fn(f64) -> Option<f64>, samples: &[f64], xtol: f64) -> Vec<f64> {
    let vals: Vec<Option<f64>> = samples.iter().map(|&x| f(x)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..samples.len() {
        if vals[i] == Some(0.0) {
            roots.push(samples[i]);
        }
        if i + 1 == samples.len() {
            break;
        }
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
                if let Ok(r) =
                    solve_bracketed(|x| f(x).ok_or(()), samples[i], samples[i + 1], xtol)
                {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= xtol * (1.0 + a.abs()));
    roots
}

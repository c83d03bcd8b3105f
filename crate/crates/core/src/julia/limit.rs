//! Principal Julia solution as the limit `Φⁿ(x) / (Φⁿ)'(x)`.

use serde::Serialize;
use thiserror::Error;

use crate::funcspec::{Expr, FuncError, FuncSpec, Grid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("map must be scalar in one variable")]
    NotScalar,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no convergence at x = {x} within {n_max} iterations (last change {delta})")]
    NoConvergence { x: f64, n_max: usize, delta: f64 },
    #[error(transparent)]
    Func(#[from] FuncError),
}

pub const DEFAULT_LIMIT_TOL: f64 = 1e-10;
pub const DEFAULT_N_MAX: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPoint {
    pub x: f64,
    pub value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub points: Vec<LimitPoint>,
    /// max over the grid of `|Φ'(x) f(x) − f(Φ(x))|`.
    pub julia_residual: f64,
    pub note: &'static str,
}

struct Ratio<'a> {
    phi: &'a Expr,
    dphi: &'a Expr,
    n_max: usize,
    tol: f64,
}

impl Ratio<'_> {
    /// Iterate `y ← Φ(y)`, `d ← d·Φ'(y)` until `y/d` settles.
    fn at(&self, x: f64) -> Result<(f64, usize), LimitError> {
        let ev = |e: &Expr, v: f64| e.eval(&[v]).map_err(|source| FuncError::Eval { component: 0, source });
        let (mut y, mut d) = (x, 1.0);
        let mut prev = x;
        let mut delta = f64::INFINITY;
        for n in 1..=self.n_max {
            d *= ev(self.dphi, y)?;
            y = ev(self.phi, y)?;
            if y == 0.0 || d == 0.0 || !d.is_normal() {
                // iterates underflowed; the last ratio is as good as it gets
                return if delta < self.tol.sqrt() { Ok((prev, n - 1)) } else {
                    Err(LimitError::NoConvergence { x, n_max: n, delta })
                };
            }
            let r = y / d;
            delta = (r - prev).abs();
            if delta < self.tol {
                return Ok((r, n));
            }
            prev = r;
        }
        Err(LimitError::NoConvergence { x, n_max: self.n_max, delta })
    }
}

/// Sample `f(x) = lim Φⁿ(x)/(Φⁿ)'(x)` on `grid` (normalized with `a = 1`).
///
/// Requires `Φ(0) = 0`, `0 < Φ'(0) < 1` and `0 < Φ(x) < x` on the grid's
/// positive points.
pub fn principal_solution_limit(
    phi: &FuncSpec,
    grid: &Grid,
    n_max: usize,
    tol: f64,
) -> Result<LimitReport, LimitError> {
    if phi.n_in() != 1 || phi.n_out() != 1 || grid.dim() != 1 {
        return Err(LimitError::NotScalar);
    }
    let e = phi.component(0);
    let de = e.diff(0);
    let ev = |e: &Expr, v: f64| e.eval(&[v]).map_err(|source| FuncError::Eval { component: 0, source });
    let p0 = ev(e, 0.0)?;
    if p0.abs() > 1e-14 {
        return Err(LimitError::Hypothesis(format!("Phi(0) = {p0}, expected 0")));
    }
    let s = ev(&de, 0.0)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(LimitError::Hypothesis(format!("Phi'(0) = {s} must lie strictly between 0 and 1")));
    }
    let xs = grid.axis(0);
    for &x in xs.iter().filter(|x| **x > 0.0) {
        let y = ev(e, x)?;
        if !(y > 0.0 && y < x) {
            return Err(LimitError::Hypothesis(format!("need 0 < Phi(x) < x, but Phi({x}) = {y}")));
        }
    }
    let ratio = Ratio { phi: e, dphi: &de, n_max, tol };
    let mut points = Vec::with_capacity(xs.len());
    let mut julia_residual = 0.0f64;
    for &x in &xs {
        if x < 0.0 {
            return Err(LimitError::Hypothesis(format!("grid point {x} < 0")));
        }
        let (value, n) = if x == 0.0 { (0.0, 0) } else { ratio.at(x)? };
        let y = ev(e, x)?;
        let fy = if y == 0.0 { 0.0 } else { ratio.at(y)?.0 };
        julia_residual = julia_residual.max((ev(&de, x)? * value - fy).abs());
        points.push(LimitPoint { x, value, n });
    }
    Ok(LimitReport {
        points,
        julia_residual,
        note: "limit taken over iterates of the given map Phi; validated by the Julia residual",
    })
}

//! Critical-point analysis of scalar maps and the obstructions it yields.

mod diagnose;
mod normal_form;
mod perturb;
mod topology;

pub use diagnose::{diagnose, ComponentReport, DiagnosisReport, MorseStatus, PointCertificate, Verdict, Verdicts};
pub use normal_form::{morse_normal_form_1d, topological_chart_1d, NormalForm, TopologicalChart};
pub use perturb::{ck_norm, morseify, Morseified, MAX_MORSEIFY_ATTEMPTS};
pub use topology::{antipodal_point, separation_obstruction_1d, Antipodal, SeparationReport, SeparationWitness};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funcspec::{Expr, FuncError, FuncSpec, Grid};

pub const CRITICAL_TOL: f64 = 1e-9;
pub const DEGENERACY_REL: f64 = 1e-6;
pub const DEDUP_REL: f64 = 1e-6;
pub const DERIVATIVE_CAP: usize = 12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Seeds per dimension used when callers do not supply their own grid.
pub const DEFAULT_SEEDS: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorseError {
    #[error("expected a scalar map")]
    NotScalar,
    #[error("expected a map of {expected} variable(s), got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no derivative up to order {cap} is nonzero at {p:?}: classification inconclusive")]
    Inconclusive { p: Vec<f64>, cap: usize },
    #[error("{0}")]
    Hypothesis(String),
    #[error("no neighborhood of {p} where the normal form is defined")]
    NoNeighborhood { p: f64 },
    #[error("all {0} perturbation draws left a degenerate critical point")]
    StillDegenerate(usize),
    #[error("could not reach |g(u) - g(-u)| <= {tol}, best {best}")]
    Tolerance { tol: f64, best: f64 },
    #[error(transparent)]
    Func(#[from] FuncError),
}

pub(crate) fn require_scalar(psi: &FuncSpec) -> Result<(), MorseError> {
    if psi.n_out() != 1 {
        return Err(MorseError::NotScalar);
    }
    Ok(())
}

fn eval_expr(e: &Expr, x: &[f64]) -> Result<f64, FuncError> {
    e.eval(x).map_err(|source| FuncError::Eval { component: 0, source })
}

/// Outcome of a multistart Newton search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSearch {
    /// Sorted, pairwise farther apart than the dedup radius.
    pub points: Vec<Vec<f64>>,
    pub seeds: usize,
    /// Seeds that diverged, left the domain or did not converge.
    pub dropped: usize,
}

fn newton(grad: &[Expr], hess: &[Vec<Expr>], psi: &FuncSpec, seed: Vec<f64>, tol: f64) -> Option<(Vec<f64>, f64)> {
    let n = seed.len();
    let dom = psi.domain();
    let span: f64 = dom.0.iter().map(|iv| iv.span()).filter(|s| s.is_finite()).fold(1.0, f64::max);
    let mut x = seed;
    let mut gnorm = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let g: Vec<f64> = grad.iter().map(|e| eval_expr(e, &x)).collect::<Result<_, _>>().ok()?;
        gnorm = g.iter().fold(0.0, |m, v| m.max(v.abs()));
        if gnorm == 0.0 {
            break;
        }
        let h = DMatrix::from_fn(n, n, |i, j| eval_expr(&hess[i][j], &x).unwrap_or(f64::NAN));
        if h.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let svd = h.svd(true, true);
        let cut = 1e-14 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        let step = svd.solve(&DVector::from_vec(g), cut).ok()?;
        let mut snorm = step.amax();
        if !snorm.is_finite() || snorm == 0.0 {
            break;
        }
        let scale = if snorm > span { span / snorm } else { 1.0 };
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= scale * si;
        }
        snorm *= scale;
        if !dom.contains(&x) {
            return None;
        }
        if snorm <= 1e-12 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            let g: Vec<f64> = grad.iter().map(|e| eval_expr(e, &x)).collect::<Result<_, _>>().ok()?;
            gnorm = g.iter().fold(0.0, |m, v| m.max(v.abs()));
            break;
        }
    }
    (gnorm <= tol).then_some((x, gnorm))
}

/// Newton's method on `∇Ψ = 0` from every grid point, deduplicated.
pub fn find_critical_points(psi: &FuncSpec, grid: &Grid, tol: f64) -> Result<CriticalSearch, MorseError> {
    require_scalar(psi)?;
    if grid.dim() != psi.n_in() {
        return Err(MorseError::Dimension { expected: psi.n_in(), got: grid.dim() });
    }
    let n = psi.n_in();
    let grad = psi.gradient(0);
    let hm = psi.hessian(0);
    let hess: Vec<Vec<Expr>> = (0..n).map(|i| (0..n).map(|j| hm.get(i, j).clone()).collect()).collect();
    let seeds = grid.points();
    let n_seeds = seeds.len();
    let mut found: Vec<(Vec<f64>, f64)> =
        seeds.into_par_iter().filter_map(|s| newton(&grad, &hess, psi, s, tol)).collect();
    let dropped = n_seeds - found.len();
    found.sort_by(|a, b| a.0.iter().zip(&b.0).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));

    let span = grid.domain().0.iter().map(|iv| iv.span()).fold(0.0, f64::max);
    let radius = DEDUP_REL * span;
    let mut reps: Vec<(Vec<f64>, f64)> = Vec::new();
    for (p, g) in found {
        match reps.iter_mut().find(|(q, _)| crate::numeric::max_dist(q, &p) <= radius) {
            Some(r) => {
                if g < r.1 {
                    *r = (p, g);
                }
            }
            None => reps.push((p, g)),
        }
    }
    Ok(CriticalSearch { points: reps.into_iter().map(|r| r.0).collect(), seeds: n_seeds, dropped })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub degenerate: bool,
    /// 1-D: order of the first nonvanishing derivative.
    pub order: Option<usize>,
    /// 1-D: value of that derivative.
    pub gamma: Option<f64>,
}

/// Hessian spectrum, index and (in 1-D) the order of the first nonzero
/// derivative at a critical point.
pub fn classify_critical(psi: &FuncSpec, p: &[f64]) -> Result<CriticalPoint, MorseError> {
    require_scalar(psi)?;
    let n = psi.n_in();
    if p.len() != n {
        return Err(MorseError::Dimension { expected: n, got: p.len() });
    }
    let value = psi.eval_scalar(p)?;
    let grad_norm = psi
        .gradient(0)
        .iter()
        .map(|e| eval_expr(e, p).map(f64::abs))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let h = psi.hessian(0).eval(p)?;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let norm = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = DEGENERACY_REL * (1.0 + norm);
    let index = eigenvalues.iter().filter(|v| **v < -threshold).count();
    let degenerate = eigenvalues.iter().any(|v| v.abs() <= threshold);

    let (mut order, mut gamma) = (None, None);
    if n == 1 {
        if degenerate {
            let mut d = psi.component(0).diff(0).diff(0);
            for k in 3..=DERIVATIVE_CAP {
                d = d.diff(0);
                let v = eval_expr(&d, p)?;
                if v.abs() > threshold {
                    order = Some(k);
                    gamma = Some(v);
                    break;
                }
            }
            if order.is_none() {
                return Err(MorseError::Inconclusive { p: p.to_vec(), cap: DERIVATIVE_CAP });
            }
        } else {
            order = Some(2);
            gamma = Some(eigenvalues[0]);
        }
    }
    Ok(CriticalPoint { location: p.to_vec(), value, grad_norm, eigenvalues, index, degenerate, order, gamma })
}

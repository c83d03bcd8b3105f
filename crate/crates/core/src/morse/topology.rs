//! Antipodal points on the circle and fixed-point separation in 1-D.

use serde::Serialize;

use super::{require_scalar, MorseError};
use crate::funcspec::{FuncError, FuncSpec, Grid};
use crate::numeric::roots::{roots_on_samples, solve_bracketed};

const SCAN: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Antipodal {
    pub theta: f64,
    pub u: [f64; 2],
    /// `|g(u) − g(−u)|`.
    pub gap: f64,
}

/// A point `u` on the unit circle with `g(u) = g(−u)` up to `tol`.
///
/// `d(θ) = g(θ) − g(θ + π)` is odd under `θ ↦ θ + π`, so it changes sign on
/// `[0, π]`.
pub fn antipodal_point(g: &FuncSpec, tol: f64) -> Result<Antipodal, MorseError> {
    require_scalar(g)?;
    if g.n_in() != 2 {
        return Err(MorseError::Dimension { expected: 2, got: g.n_in() });
    }
    let at = |th: f64| -> Result<f64, FuncError> {
        let (s, c) = th.sin_cos();
        Ok(g.eval_scalar(&[c, s])? - g.eval_scalar(&[-c, -s])?)
    };
    let done = |th: f64, gap: f64| {
        let (s, c) = th.sin_cos();
        Antipodal { theta: th, u: [c, s], gap }
    };
    let thetas: Vec<f64> = (0..=SCAN).map(|i| std::f64::consts::PI * i as f64 / SCAN as f64).collect();
    let vals = thetas.iter().map(|t| at(*t)).collect::<Result<Vec<_>, _>>()?;
    if let Some(i) = (0..vals.len()).filter(|i| vals[*i].abs() <= tol).min_by(|a, b| vals[*a].abs().total_cmp(&vals[*b].abs())) {
        return Ok(done(thetas[i], vals[i].abs()));
    }
    let i = (0..SCAN)
        .find(|&i| vals[i].signum() != vals[i + 1].signum())
        .ok_or_else(|| MorseError::Tolerance { tol, best: vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())) })?;
    let th = solve_bracketed(at, thetas[i], thetas[i + 1], 1e-17).map_err(|e| match e {
        crate::numeric::roots::RootError::Eval(e) => MorseError::Func(e),
        other => MorseError::Hypothesis(other.to_string()),
    })?;
    let gap = at(th)?.abs();
    if gap > tol {
        return Err(MorseError::Tolerance { tol, best: gap });
    }
    Ok(done(th, gap))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationWitness {
    /// Fixed point separating `x_star` from its image.
    pub z: f64,
    pub x_star: f64,
    pub phi_x_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub fixed_points: Vec<f64>,
    pub witness: Option<SeparationWitness>,
    pub note: &'static str,
}

/// Fixed points of a 1-D `Φ` and, if one exists, a sample pushed across one.
pub fn separation_obstruction_1d(phi: &FuncSpec, grid: &Grid) -> Result<SeparationReport, MorseError> {
    require_scalar(phi)?;
    if phi.n_in() != 1 || grid.dim() != 1 {
        return Err(MorseError::Dimension { expected: 1, got: phi.n_in() });
    }
    let xs = grid.axis(0);
    let fixed_points = roots_on_samples(|x| phi.eval_scalar(&[x]).ok().map(|v| v - x), &xs, 1e-15);
    let mut witness: Option<(f64, SeparationWitness)> = None;
    for &x in &xs {
        let Ok(y) = phi.eval_scalar(&[x]) else { continue };
        for &z in &fixed_points {
            let margin = (x - z).abs().min((y - z).abs());
            if (x - z) * (y - z) < 0.0 && margin > 1e-9 * (1.0 + z.abs()) && witness.as_ref().is_none_or(|w| margin >= w.0) {
                witness = Some((margin, SeparationWitness { z, x_star: x, phi_x_star: y }));
            }
        }
    }
    Ok(SeparationReport {
        fixed_points,
        witness: witness.map(|w| w.1),
        note: "1-D detector: the separating set is a fixed point of Phi",
    })
}

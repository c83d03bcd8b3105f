//! Linear perturbations that make a map Morse, and the `C^k` norm.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{classify_critical, find_critical_points, require_scalar, CriticalPoint, MorseError, CRITICAL_TOL};
use crate::funcspec::{Expr, FuncError, FuncSpec, Grid};

pub const MAX_MORSEIFY_ATTEMPTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Morseified {
    pub perturbed: FuncSpec,
    /// Coefficients of `Ψ_a(x) = Ψ(x) + Σ a_j x_j`.
    pub a: Vec<f64>,
    pub critical_points: Vec<CriticalPoint>,
    pub attempts: usize,
}

/// `Ψ + Σ a_j x_j` with `a` drawn uniformly from `[−bound, bound]ⁿ`, redrawn
/// while the re-run critical-point search still finds a degenerate point.
pub fn morseify(psi: &FuncSpec, bound: f64, seed: u64, grid: &Grid) -> Result<Morseified, MorseError> {
    require_scalar(psi)?;
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(MorseError::Hypothesis(format!("perturbation bound {bound} must be positive")));
    }
    let n = psi.n_in();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_MORSEIFY_ATTEMPTS {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
        let e = a
            .iter()
            .enumerate()
            .fold(psi.component(0).clone(), |acc, (j, aj)| Expr::add(acc, Expr::mul(Expr::constant(*aj), Expr::var(j))));
        let perturbed = FuncSpec::new(format!("{}+a.x", psi.name), n, vec![e], psi.domain().clone())?;
        let found = find_critical_points(&perturbed, grid, CRITICAL_TOL)?;
        let classified: Result<Vec<_>, _> = found.points.iter().map(|p| classify_critical(&perturbed, p)).collect();
        match classified {
            Ok(cps) if cps.iter().all(|c| !c.degenerate) => {
                return Ok(Morseified { perturbed, a, critical_points: cps, attempts: attempt });
            }
            _ => continue,
        }
    }
    Err(MorseError::StillDegenerate(MAX_MORSEIFY_ATTEMPTS))
}

/// All multi-indices `|s| ≤ k` as nondecreasing variable lists.
fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().copied().unwrap_or(0);
            for v in start..n {
                let mut t: Vec<usize> = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// `Σ_{|s|≤k} max_grid |∂^s Ψ|`, a lower bound for the `C^k` norm.
pub fn ck_norm(psi: &FuncSpec, k: usize, grid: &Grid) -> Result<f64, MorseError> {
    require_scalar(psi)?;
    let points = grid.points();
    let mut total = 0.0;
    for s in multi_indices(psi.n_in(), k) {
        let d = s.iter().fold(psi.component(0).clone(), |e, v| e.diff(*v));
        let mut sup = 0.0f64;
        for x in &points {
            let v = d.eval(x).map_err(|source| FuncError::Eval { component: 0, source })?;
            sup = sup.max(v.abs());
        }
        total += sup;
    }
    Ok(total)
}

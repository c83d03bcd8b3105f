//! Local normal forms of 1-D maps at critical points.

use serde::Serialize;

use super::{require_scalar, MorseError};
use crate::funcspec::{Expr, FuncError, FuncSpec};
use crate::numeric::quad::integrate;
use crate::numeric::roots::solve_bracketed;

const SCAN: usize = 201;
const TEST_POINTS: usize = 101;

/// `η(x) = s·(s·g(x))^{1/k}·(x − p)` with `g(x) = (Ψ(x) − Ψ(p))/(x − p)^k`,
/// so that `Ψ(μ(u)) = Ψ(p) + s^{k−1} u^k` for `μ = η⁻¹`.
#[derive(Debug, Clone, Serialize)]
pub struct NormalForm {
    #[serde(skip)]
    psi: FuncSpec,
    #[serde(skip)]
    dk: Expr,
    pub p: f64,
    pub k: usize,
    pub gamma: f64,
    pub sign: f64,
    /// `η` is a homeomorphism on `[p − delta, p + delta]`.
    pub delta: f64,
    /// `u` ranges over `[−u_radius, u_radius]` inside `η`'s image.
    pub u_radius: f64,
    pub residual: f64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl NormalForm {
    /// `g` through the integral form of the Taylor remainder, which avoids
    /// cancellation in `(Ψ(x) − Ψ(p))/(x − p)^k` close to `p`.
    pub fn g(&self, x: f64) -> Result<f64, FuncError> {
        let h = x - self.p;
        if h == 0.0 {
            return Ok(self.gamma / factorial(self.k));
        }
        let k = self.k as i32;
        let f = |s: f64| {
            self.dk
                .eval(&[self.p + s * h])
                .map(|v| (1.0 - s).powi(k - 1) * v)
                .map_err(|source| FuncError::Eval { component: 0, source })
        };
        let scale = self.gamma.abs().max(1.0) / factorial(self.k - 1);
        integrate(f, 0.0, 1.0, 1e-15 * scale)
            .map(|v| v / factorial(self.k - 1))
            .map_err(|_| FuncError::Invalid(format!("quadrature of the remainder failed at {x}")))
    }

    pub fn eta(&self, x: f64) -> Result<f64, FuncError> {
        let sg = self.sign * self.g(x)?;
        if sg <= 0.0 {
            return Err(FuncError::Invalid(format!("s g(x) <= 0 at {x}")));
        }
        Ok(self.sign * sg.powf(1.0 / self.k as f64) * (x - self.p))
    }

    /// `μ = η⁻¹` by bracketed root finding on the neighborhood.
    pub fn mu(&self, u: f64) -> Result<f64, FuncError> {
        let (a, b) = (self.p - self.delta, self.p + self.delta);
        solve_bracketed(|x| self.eta(x).map(|v| v - u), a, b, 1e-16).map_err(|e| FuncError::Invalid(e.to_string()))
    }

    fn model(&self, u: f64) -> f64 {
        self.sign.powi(self.k as i32 - 1) * u.powi(self.k as i32)
    }

    fn residual_at(&self, u: f64, psi_p: f64) -> Result<f64, FuncError> {
        Ok((self.psi.eval_scalar(&[self.mu(u)?])? - psi_p - self.model(u)).abs())
    }
}

/// Build the normal form of a 1-D `Ψ` at `p` whose first nonzero derivative
/// has order `k`, and measure its residual on test points.
pub fn morse_normal_form_1d(psi: &FuncSpec, p: f64, k: usize) -> Result<NormalForm, MorseError> {
    require_scalar(psi)?;
    if psi.n_in() != 1 {
        return Err(MorseError::Dimension { expected: 1, got: psi.n_in() });
    }
    if k < 2 {
        return Err(MorseError::Hypothesis(format!("order k = {k} must be at least 2")));
    }
    let mut dk = psi.component(0).clone();
    for _ in 0..k {
        dk = dk.diff(0);
    }
    let gamma = dk.eval(&[p]).map_err(|source| FuncError::Eval { component: 0, source })?;
    if gamma == 0.0 {
        return Err(MorseError::Hypothesis(format!("derivative of order {k} vanishes at {p}")));
    }
    let iv = psi.domain().0[0];
    let room = (p - iv.lo).min(iv.hi - p);
    let mut delta = if room.is_finite() { 0.5 * room } else { 1.0 }.min(1.0);
    let mut nf = NormalForm { psi: psi.clone(), dk, p, k, gamma, sign: gamma.signum(), delta, u_radius: 0.0, residual: 0.0 };

    // shrink until s·g > 0 and η is strictly increasing on the scan
    let ok = |nf: &NormalForm| -> bool {
        let mut prev = f64::NEG_INFINITY;
        (0..SCAN).all(|i| {
            let x = nf.p - nf.delta + 2.0 * nf.delta * i as f64 / (SCAN - 1) as f64;
            match nf.eta(x) {
                Ok(v) if v * nf.sign > prev => {
                    prev = v * nf.sign;
                    true
                }
                _ => false,
            }
        })
    };
    while !ok(&nf) {
        delta *= 0.5;
        if delta < 1e-8 {
            return Err(MorseError::NoNeighborhood { p });
        }
        nf.delta = delta;
    }
    let u_lo = nf.eta(p - delta)?.abs();
    let u_hi = nf.eta(p + delta)?.abs();
    // stay a little inside the image so μ always brackets
    nf.u_radius = 0.999 * u_lo.min(u_hi);
    let psi_p = psi.eval_scalar(&[p])?;
    let mut residual = 0.0f64;
    for i in 0..TEST_POINTS {
        let u = -nf.u_radius + 2.0 * nf.u_radius * i as f64 / (TEST_POINTS - 1) as f64;
        residual = residual.max(nf.residual_at(u, psi_p)?);
    }
    nf.residual = residual;
    Ok(nf)
}

/// `v ↦ μ(sign(v)|v|^{2/k})` for even `k`, in which `Ψ = Ψ(p) ± v²`.
#[derive(Debug, Clone, Serialize)]
pub struct TopologicalChart {
    pub normal_form: NormalForm,
    /// 0 for a local minimum (`+v²`), 1 for a local maximum (`−v²`).
    pub index: usize,
    pub v_radius: f64,
    pub residual: f64,
}

impl TopologicalChart {
    pub fn chart(&self, v: f64) -> Result<f64, FuncError> {
        let u = v.signum() * v.abs().powf(2.0 / self.normal_form.k as f64);
        self.normal_form.mu(u)
    }
}

pub fn topological_chart_1d(psi: &FuncSpec, p: f64, k: usize) -> Result<TopologicalChart, MorseError> {
    if !k.is_multiple_of(2) {
        return Err(MorseError::Hypothesis(format!("order k = {k} is odd: no extremum, no chart")));
    }
    let nf = morse_normal_form_1d(psi, p, k)?;
    let v_radius = nf.u_radius.powf(k as f64 / 2.0);
    let psi_p = psi.eval_scalar(&[p])?;
    let s = nf.sign;
    let mut chart = TopologicalChart { index: usize::from(s < 0.0), normal_form: nf, v_radius, residual: 0.0 };
    let mut residual = 0.0f64;
    for i in 0..TEST_POINTS {
        let v = -v_radius + 2.0 * v_radius * i as f64 / (TEST_POINTS - 1) as f64;
        let x = chart.chart(v)?;
        residual = residual.max((psi.eval_scalar(&[x])? - psi_p - s * v * v).abs());
    }
    chart.residual = residual;
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::{Domain, Interval};

    fn spec(e: &str, lo: f64, hi: f64) -> FuncSpec {
        FuncSpec::parse_on("psi", 1, &[e], Domain(vec![Interval::closed(lo, hi)])).unwrap()
    }

    #[test]
    fn quadratic_normal_form() {
        let nf = morse_normal_form_1d(&spec("4*x0^2 - 8*x0 + 1", -3.0, 3.0), 1.0, 2).unwrap();
        assert!(nf.residual <= 1e-10, "{}", nf.residual);
        for u in [-0.3, 0.0, 0.2] {
            assert!((nf.mu(u).unwrap() - (u / 2.0 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_and_cubic() {
        let nf = morse_normal_form_1d(&spec("x0^4", -1.0, 1.0), 0.0, 4).unwrap();
        assert!(nf.residual <= 1e-10);
        assert!((nf.g(0.37).unwrap() - 1.0).abs() < 1e-14);
        let nf = morse_normal_form_1d(&spec("x0^3", -1.0, 1.0), 0.0, 3).unwrap();
        assert!(nf.residual <= 1e-10);
        assert!((nf.mu(0.5).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn charts() {
        let c = topological_chart_1d(&spec("x0^4", -1.0, 1.0), 0.0, 4).unwrap();
        assert!(c.residual <= 1e-8);
        assert_eq!(c.index, 0);
        // the chart is v ↦ ±√|v|
        assert!((c.chart(0.25).unwrap() - 0.5).abs() < 1e-12);
        assert!((c.chart(-0.25).unwrap() + 0.5).abs() < 1e-12);
        let c = topological_chart_1d(&spec("x0^2", -1.0, 1.0), 0.0, 2).unwrap();
        assert!((c.chart(0.3).unwrap() - 0.3).abs() < 1e-12);
        let c = topological_chart_1d(&spec("neg(x0^4) + 2", -1.0, 1.0), 0.0, 4).unwrap();
        assert_eq!(c.index, 1);
        assert!(c.residual <= 1e-8);
        assert!(matches!(topological_chart_1d(&spec("x0^3", -1.0, 1.0), 0.0, 3), Err(MorseError::Hypothesis(_))));
    }
}

//! Truncated formal power series and the series solvers built on them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("inner series of a composition must have zero constant term, got {0}")]
    NonzeroConstant(f64),
    #[error("{0} coefficients given for truncation order {1}")]
    Length(usize, usize),
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("precondition failed: {0}")]
    Precondition(String),
}

/// `γ₀ + γ₁x + … + γ_N x^N`, with all arithmetic truncated at order `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesJson", into = "SeriesJson")]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    #[serde(rename = "N")]
    order: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<SeriesJson> for PowerSeries {
    type Error = SeriesError;
    fn try_from(j: SeriesJson) -> Result<Self, SeriesError> {
        if j.coeffs.len() > j.order + 1 {
            return Err(SeriesError::Length(j.coeffs.len(), j.order));
        }
        PowerSeries::new(j.coeffs, j.order)
    }
}

impl From<PowerSeries> for SeriesJson {
    fn from(s: PowerSeries) -> Self {
        SeriesJson { order: s.order(), coeffs: s.coeffs }
    }
}

impl PowerSeries {
    /// Coefficients beyond `order` are dropped, missing ones are zero.
    pub fn new(mut coeffs: Vec<f64>, order: usize) -> Result<Self, SeriesError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SeriesError::NonFinite);
        }
        coeffs.resize(order + 1, 0.0);
        Ok(PowerSeries { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![0.0; order + 1] }
    }

    /// `a·x^k` truncated at `order`.
    pub fn monomial(a: f64, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = a;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero beyond the truncation.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, i: usize, v: f64) {
        if i < self.coeffs.len() {
            self.coeffs[i] = v;
        }
    }

    /// Same coefficients at a different truncation order.
    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, 0.0);
        PowerSeries { coeffs: c }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        PowerSeries { coeffs: (0..=n).map(|i| self.coeffs[i] + other.coeffs[i]).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        PowerSeries { coeffs: (0..=n).map(|i| self.coeffs[i] - other.coeffs[i]).collect() }
    }

    pub fn scale(&self, a: f64) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|c| a * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![0.0; n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] += a * b;
            }
        }
        PowerSeries { coeffs: out }
    }

    /// `self ∘ inner`, which needs `inner(0) = 0`.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if inner.coeffs[0] != 0.0 {
            return Err(SeriesError::NonzeroConstant(inner.coeffs[0]));
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = PowerSeries::zero(n);
        for c in self.coeffs[..=n].iter().rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Term-wise derivative, kept at the same truncation order.
    pub fn derive(&self) -> Self {
        let n = self.order();
        let mut out = vec![0.0; n + 1];
        for i in 1..=n {
            out[i - 1] = i as f64 * self.coeffs[i];
        }
        PowerSeries { coeffs: out }
    }
}

/// `Φ'·f − f∘Φ` truncated at `order`, the series form of Julia's equation.
pub fn julia_series_residual(phi: &PowerSeries, f: &PowerSeries, order: usize) -> Result<PowerSeries, SeriesError> {
    let phi = phi.truncate(order);
    let f = f.truncate(order);
    Ok(phi.derive().mul(&f).sub(&f.compose(&phi)?))
}

/// Result of [`iterative_logarithm`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterativeLog {
    pub series: PowerSeries,
    /// Index of the first nonlinear term of Φ.
    pub m: usize,
    pub trace: Vec<String>,
}

/// Formal Julia solution `f = b_m x^m + Σ_{n>m} c_n x^n` for a near-identity
/// `Φ = x + b_m x^m + …`, normalized so that its leading coefficient is `b_m`.
///
/// Each `c_n` first appears at order `n + m − 1` with net factor `(m − n)·b_m`,
/// so the coefficients are fixed one order at a time.
pub fn iterative_logarithm(phi: &PowerSeries, order: usize) -> Result<IterativeLog, SeriesError> {
    if phi.coeff(0) != 0.0 || phi.coeff(1) != 1.0 {
        return Err(SeriesError::Precondition(format!(
            "Phi must be x + higher order terms, got constant {} and linear {}",
            phi.coeff(0),
            phi.coeff(1)
        )));
    }
    let m = (2..=phi.order())
        .find(|&i| phi.coeff(i) != 0.0)
        .ok_or_else(|| SeriesError::Precondition("Phi has no nonlinear term".into()))?;
    if order < m + 1 {
        return Err(SeriesError::Precondition(format!(
            "order {order} too small: the first free coefficient sits at order {}",
            m + 1
        )));
    }
    let bm = phi.coeff(m);
    let work = order + m - 1;
    let phi_w = phi.truncate(work);
    let mut f = PowerSeries::monomial(bm, m, work);
    let mut trace = vec![format!("f_{m} = b_{m} = {bm} (normalization)")];
    for n in m + 1..=order {
        let k = n + m - 1;
        let r = julia_series_residual(&phi_w, &f, work)?.coeff(k);
        let cn = -r / ((m as f64 - n as f64) * bm);
        f.set_coeff(n, cn);
        trace.push(format!("order {k}: ({m} - {n}) b_{m} c_{n} + {r} = 0 => c_{n} = {cn}"));
    }
    Ok(IterativeLog { series: f.truncate(order), m, trace })
}

/// One elimination step of [`monomial_series_solution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EliminationStep {
    /// Coefficient index `i` determined by this step.
    pub index: usize,
    /// Order of `x` whose coefficients were matched.
    pub order: usize,
    pub equation: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialCertificate {
    pub series: PowerSeries,
    pub trace: Vec<EliminationStep>,
}

/// Order-by-order solution of `Φ'·f = f∘Φ` for `Φ(x) = c x^α`.
///
/// With `f = Σ γᵢ xⁱ`, order `α − 1 + i` reads
/// `c α γᵢ = c^k γ_k` when `α | α − 1 + i` (`k = (α − 1 + i)/α`), and
/// `c α γᵢ = 0` otherwise; order 0 reads `0 = γ₀`.
pub fn monomial_series_solution(c: f64, alpha: u32, order: usize) -> Result<MonomialCertificate, SeriesError> {
    if alpha < 2 {
        return Err(SeriesError::Precondition(format!("alpha = {alpha} must be an integer >= 2")));
    }
    if c == 0.0 || !c.is_finite() {
        return Err(SeriesError::Precondition(format!("c = {c} must be finite and nonzero")));
    }
    let a = alpha as usize;
    let mut g = vec![0.0; order + 1];
    let mut trace = Vec::with_capacity(order + 1);
    trace.push(EliminationStep { index: 0, order: 0, equation: "0 = g0".into(), value: 0.0 });
    for i in 1..=order {
        let j = a - 1 + i;
        let lhs = c * alpha as f64;
        let (value, equation) = if !j.is_multiple_of(a) {
            (0.0, format!("{lhs} g{i} = 0"))
        } else {
            let k = j / a;
            let ck = c.powi(k as i32);
            if k == i {
                // only i = 1: (cα − c) γ₁ = 0 with cα ≠ c
                (0.0, format!("({lhs} - {ck}) g{i} = 0"))
            } else {
                (ck * g[k] / lhs, format!("{lhs} g{i} = {ck} g{k}"))
            }
        };
        g[i] = value;
        trace.push(EliminationStep { index: i, order: j, equation, value });
    }
    Ok(MonomialCertificate { series: PowerSeries { coeffs: g }, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(c: &[f64], n: usize) -> PowerSeries {
        PowerSeries::new(c.to_vec(), n).unwrap()
    }

    #[test]
    fn examples() {
        let x = s(&[0.0, 1.0], 4);
        assert_eq!(x.mul(&x), s(&[0.0, 0.0, 1.0], 4));
        let sq = s(&[0.0, 0.0, 1.0], 4);
        assert_eq!(sq.compose(&s(&[0.0, 1.0, 1.0], 4)).unwrap(), s(&[0.0, 0.0, 1.0, 2.0, 1.0], 4));
        assert_eq!(s(&[0.0, 1.0, 1.0], 4).derive(), s(&[1.0, 2.0], 4));
        assert!(matches!(sq.compose(&s(&[1.0, 1.0], 4)), Err(SeriesError::NonzeroConstant(_))));
    }

    #[test]
    fn json_shape() {
        let j = serde_json::to_string(&s(&[0.0, 1.0], 2)).unwrap();
        assert_eq!(j, r#"{"N":2,"coeffs":[0.0,1.0,0.0]}"#);
        let back: PowerSeries = serde_json::from_str(r#"{"N":3,"coeffs":[0,1]}"#).unwrap();
        assert_eq!(back.order(), 3);
        assert!(serde_json::from_str::<PowerSeries>(r#"{"N":1,"coeffs":[0,1,2]}"#).is_err());
    }

    #[test]
    fn iterative_log_of_x_plus_x2() {
        let r = iterative_logarithm(&s(&[0.0, 1.0, 1.0], 4), 4).unwrap();
        let want = [0.0, 0.0, 1.0, -1.0, 1.5];
        for (got, w) in r.series.coeffs().iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{:?}", r.series);
        }
        let res = julia_series_residual(&s(&[0.0, 1.0, 1.0], 5), &r.series.truncate(5), 5).unwrap();
        assert!(res.max_abs() < 1e-12, "{res:?}");
    }

    #[test]
    fn iterative_log_of_moebius_truncation() {
        let r = iterative_logarithm(&s(&[0.0, 1.0, 1.0, 1.0, 1.0], 4), 4).unwrap();
        assert_eq!(r.m, 2);
        assert!((r.series.coeff(2) - 1.0).abs() < 1e-12);
        assert!(r.series.coeff(3).abs() < 1e-12 && r.series.coeff(4).abs() < 1e-12);
    }

    #[test]
    fn iterative_log_preconditions() {
        assert!(iterative_logarithm(&s(&[0.0, 1.0], 4), 4).is_err());
        assert!(iterative_logarithm(&s(&[0.0, 2.0, 1.0], 4), 4).is_err());
        assert!(iterative_logarithm(&s(&[0.0, 1.0, 1.0], 2), 2).is_err());
    }

    #[test]
    fn monomial_certificate() {
        let cert = monomial_series_solution(1.0, 2, 10).unwrap();
        assert!(cert.series.is_zero());
        assert_eq!(cert.trace.len(), 11);
        assert!(monomial_series_solution(-3.0, 5, 12).unwrap().series.is_zero());
        assert!(monomial_series_solution(1.0, 1, 5).is_err());
    }
}

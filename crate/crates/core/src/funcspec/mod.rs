//! Maps `Φ: 𝒳 ⊂ ℝⁿ → ℝᵐ` as vectors of expression trees over a box domain.

mod expr;
mod parse;

pub use expr::{BinOp, EvalError, Expr, Func};
pub use parse::{parse_expr, ParseError};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default fraction of the span kept away from open endpoints when sampling.
pub const DEFAULT_INSET: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuncError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("point has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {dim} = {value} outside the domain")]
    OutsideDomain { dim: usize, value: f64 },
    #[error("component {component}: {source}")]
    Eval {
        component: usize,
        #[source]
        source: EvalError,
    },
    #[error("invalid specification: {0}")]
    Invalid(String),
}

/// One coordinate of a box domain. Infinite bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
    pub positive: bool,
}

impl Interval {
    pub fn unbounded() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY, lo_open: true, hi_open: true, positive: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: false, positive: false }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: true, hi_open: true, positive: false }
    }

    /// `(0, ∞)` with the positivity flag set.
    pub fn positive() -> Self {
        Interval { lo: 0.0, hi: f64::INFINITY, lo_open: true, hi_open: true, positive: true }
    }

    pub fn with_positive(mut self) -> Self {
        self.positive = true;
        self
    }

    pub fn validate(&self) -> Result<(), FuncError> {
        if self.lo.is_nan() || self.hi.is_nan() || !(self.lo < self.hi) {
            return Err(FuncError::Invalid(format!("empty interval [{}, {}]", self.lo, self.hi)));
        }
        if self.positive && self.lo < 0.0 {
            return Err(FuncError::Invalid("positivity flag requires lo >= 0".into()));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = if self.lo_open { x > self.lo } else { x >= self.lo };
        let hi_ok = if self.hi_open { x < self.hi } else { x <= self.hi };
        let pos_ok = !self.positive || x > 0.0;
        lo_ok && hi_ok && pos_ok
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Product of intervals, one per input coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain(pub Vec<Interval>);

impl Domain {
    pub fn unbounded(n: usize) -> Self {
        Domain(vec![Interval::unbounded(); n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn validate(&self) -> Result<(), FuncError> {
        self.0.iter().try_for_each(Interval::validate)
    }

    /// Index and value of the first coordinate outside the domain.
    pub fn violation(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.0.iter().zip(x).enumerate().find(|(_, (iv, v))| !iv.contains(**v)).map(|(i, (_, v))| (i, *v))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.violation(x).is_none()
    }
}

/// A matrix of expressions, e.g. a Jacobian or Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn get(&self, r: usize, c: usize) -> &Expr {
        &self.entries[r * self.cols + c]
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>, FuncError> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self
                    .get(r, c)
                    .eval(x)
                    .map_err(|source| FuncError::Eval { component: r, source })?;
            }
        }
        Ok(m)
    }
}

/// A named map with one expression per output component.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncSpec {
    pub name: String,
    n_in: usize,
    components: Vec<Expr>,
    domain: Domain,
}

impl FuncSpec {
    pub fn new(
        name: impl Into<String>,
        n_in: usize,
        components: Vec<Expr>,
        domain: Domain,
    ) -> Result<Self, FuncError> {
        if components.is_empty() {
            return Err(FuncError::Invalid("at least one component required".into()));
        }
        if domain.dim() != n_in {
            return Err(FuncError::Invalid(format!(
                "domain has {} intervals for input dimension {n_in}",
                domain.dim()
            )));
        }
        domain.validate()?;
        for (k, c) in components.iter().enumerate() {
            if let Some(v) = c.max_var().filter(|v| *v >= n_in) {
                return Err(FuncError::Invalid(format!("component {k} references x{v} but n_in = {n_in}")));
            }
            let mut frac = Vec::new();
            c.fractional_power_vars(&mut frac);
            if let Some(v) = frac.into_iter().find(|v| !domain.0[*v].positive) {
                return Err(FuncError::Invalid(format!(
                    "component {k}: non-integer power of x{v} needs a positive domain for x{v}"
                )));
            }
        }
        Ok(FuncSpec { name: name.into(), n_in, components, domain })
    }

    /// Parse components from text over an unbounded domain.
    pub fn parse(name: impl Into<String>, n_in: usize, components: &[&str]) -> Result<Self, FuncError> {
        Self::parse_on(name, n_in, components, Domain::unbounded(n_in))
    }

    pub fn parse_on(
        name: impl Into<String>,
        n_in: usize,
        components: &[&str],
        domain: Domain,
    ) -> Result<Self, FuncError> {
        let exprs = components.iter().map(|c| parse_expr(c, n_in)).collect::<Result<Vec<_>, _>>()?;
        Self::new(name, n_in, exprs, domain)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self, FuncError> {
        if domain.dim() != self.n_in {
            return Err(FuncError::Invalid("domain dimension mismatch".into()));
        }
        domain.validate()?;
        self.domain = domain;
        Ok(self)
    }

    /// The scalar map given by component `i`, on the same domain.
    pub fn scalar(&self, i: usize) -> FuncSpec {
        FuncSpec {
            name: format!("{}[{i}]", self.name),
            n_in: self.n_in,
            components: vec![self.components[i].clone()],
            domain: self.domain.clone(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<(), FuncError> {
        if x.len() != self.n_in {
            return Err(FuncError::Dimension { expected: self.n_in, got: x.len() });
        }
        if let Some((dim, value)) = self.domain.violation(x) {
            return Err(FuncError::OutsideDomain { dim, value });
        }
        Ok(())
    }

    /// Componentwise evaluation at a point of the domain.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FuncError> {
        self.check_point(x)?;
        self.components
            .iter()
            .enumerate()
            .map(|(component, e)| e.eval(x).map_err(|source| FuncError::Eval { component, source }))
            .collect()
    }

    /// Evaluate into an existing buffer.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), FuncError> {
        self.check_point(x)?;
        for (component, (e, o)) in self.components.iter().zip(out.iter_mut()).enumerate() {
            *o = e.eval(x).map_err(|source| FuncError::Eval { component, source })?;
        }
        Ok(())
    }

    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64, FuncError> {
        self.check_point(x)?;
        self.components[0].eval(x).map_err(|source| FuncError::Eval { component: 0, source })
    }

    /// Partial derivative of every component with respect to `x{wrt}`.
    pub fn diff(&self, wrt: usize) -> FuncSpec {
        FuncSpec {
            name: format!("d{}/dx{wrt}", self.name),
            n_in: self.n_in,
            components: self.components.iter().map(|e| e.diff(wrt)).collect(),
            domain: self.domain.clone(),
        }
    }

    /// Jacobian `∂Φᵢ/∂xⱼ` (rows = outputs).
    pub fn jacobian(&self) -> ExprMatrix {
        let mut entries = Vec::with_capacity(self.n_out() * self.n_in);
        for c in &self.components {
            for j in 0..self.n_in {
                entries.push(c.diff(j));
            }
        }
        ExprMatrix { rows: self.n_out(), cols: self.n_in, entries }
    }

    /// Gradient of component `i` as a column of expressions.
    pub fn gradient(&self, i: usize) -> Vec<Expr> {
        (0..self.n_in).map(|j| self.components[i].diff(j)).collect()
    }

    /// Hessian of component `i`; the lower triangle is copied from the upper one.
    pub fn hessian(&self, i: usize) -> ExprMatrix {
        let n = self.n_in;
        let grad = self.gradient(i);
        let mut entries = vec![Expr::Const(0.0); n * n];
        for r in 0..n {
            for c in r..n {
                let e = grad[r].diff(c);
                entries[c * n + r] = e.clone();
                entries[r * n + c] = e;
            }
        }
        ExprMatrix { rows: n, cols: n, entries }
    }
}

/// Tensor-product sample grid over a bounded domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    counts: Vec<usize>,
    inset: f64,
}

impl Grid {
    pub fn new(domain: Domain, counts: Vec<usize>, inset: f64) -> Result<Self, FuncError> {
        domain.validate()?;
        if counts.len() != domain.dim() {
            return Err(FuncError::Invalid("one sample count per dimension required".into()));
        }
        if counts.iter().any(|&c| c < 2) {
            return Err(FuncError::Invalid("sample counts must be >= 2".into()));
        }
        if domain.0.iter().any(|iv| !iv.is_bounded()) {
            return Err(FuncError::Invalid("grid needs a bounded domain".into()));
        }
        if !(inset > 0.0 && inset < 0.5) {
            return Err(FuncError::Invalid("inset must lie in (0, 0.5)".into()));
        }
        Ok(Grid { domain, counts, inset })
    }

    /// Uniform grid with the default inset.
    pub fn uniform(domain: Domain, count: usize) -> Result<Self, FuncError> {
        let n = domain.dim();
        Self::new(domain, vec![count; n], DEFAULT_INSET)
    }

    /// `count` points on the closed interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64, count: usize) -> Result<Self, FuncError> {
        Self::uniform(Domain(vec![Interval::closed(lo, hi)]), count)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Sample coordinates along one dimension.
    pub fn axis(&self, d: usize) -> Vec<f64> {
        let iv = &self.domain.0[d];
        let margin = self.inset * iv.span();
        let lo = if iv.lo_open || (iv.positive && iv.lo == 0.0) { iv.lo + margin } else { iv.lo };
        let hi = if iv.hi_open { iv.hi - margin } else { iv.hi };
        let n = self.counts[d];
        (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * (i as f64) / ((n - 1) as f64) })
            .collect()
    }

    /// All grid points in row-major order (last dimension fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|d| self.axis(d)).collect();
        let total: usize = self.counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            out.push(idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect());
            for d in (0..self.dim()).rev() {
                idx[d] += 1;
                if idx[d] < self.counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// ---------------------------------------------------------------------------
// JSON representation

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalJson {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
    #[serde(default)]
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuncSpecJson {
    pub name: String,
    pub n_in: usize,
    pub n_out: usize,
    pub components: Vec<String>,
    #[serde(default)]
    pub domain: Vec<IntervalJson>,
}

impl From<&Interval> for IntervalJson {
    fn from(iv: &Interval) -> Self {
        IntervalJson {
            lo: iv.lo.is_finite().then_some(iv.lo),
            hi: iv.hi.is_finite().then_some(iv.hi),
            lo_open: iv.lo_open,
            hi_open: iv.hi_open,
            positive: iv.positive,
        }
    }
}

impl From<&IntervalJson> for Interval {
    fn from(j: &IntervalJson) -> Self {
        Interval {
            lo: j.lo.unwrap_or(f64::NEG_INFINITY),
            hi: j.hi.unwrap_or(f64::INFINITY),
            lo_open: j.lo_open || j.lo.is_none(),
            hi_open: j.hi_open || j.hi.is_none(),
            positive: j.positive,
        }
    }
}

impl From<&FuncSpec> for FuncSpecJson {
    fn from(s: &FuncSpec) -> Self {
        FuncSpecJson {
            name: s.name.clone(),
            n_in: s.n_in,
            n_out: s.n_out(),
            components: s.components.iter().map(|e| e.to_string()).collect(),
            domain: s.domain.0.iter().map(IntervalJson::from).collect(),
        }
    }
}

impl TryFrom<&FuncSpecJson> for FuncSpec {
    type Error = FuncError;

    fn try_from(j: &FuncSpecJson) -> Result<Self, FuncError> {
        if j.components.len() != j.n_out {
            return Err(FuncError::Invalid(format!(
                "n_out = {} but {} components given",
                j.n_out,
                j.components.len()
            )));
        }
        let domain = if j.domain.is_empty() {
            Domain::unbounded(j.n_in)
        } else {
            Domain(j.domain.iter().map(Interval::from).collect())
        };
        let comps: Vec<&str> = j.components.iter().map(String::as_str).collect();
        FuncSpec::parse_on(j.name.clone(), j.n_in, &comps, domain)
    }
}

impl Serialize for FuncSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FuncSpecJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FuncSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = FuncSpecJson::deserialize(d)?;
        FuncSpec::try_from(&j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn eval_examples() {
        let s = FuncSpec::parse("sin", 1, &["sin(x0)"]).unwrap();
        assert_eq!(s.eval(&[FRAC_PI_2]).unwrap(), vec![1.0]);
        let m = FuncSpec::parse("moebius", 1, &["x0/(1-x0)"]).unwrap();
        assert_eq!(m.eval(&[0.5]).unwrap(), vec![1.0]);
        let l = FuncSpec::parse("ln", 1, &["ln(x0)"]).unwrap();
        assert!(matches!(
            l.eval(&[-1.0]),
            Err(FuncError::Eval { component: 0, source: EvalError::LnDomain(_) })
        ));
    }

    #[test]
    fn domain_is_enforced() {
        let s = FuncSpec::parse_on("f", 1, &["x0"], Domain(vec![Interval::positive()])).unwrap();
        assert!(matches!(s.eval(&[-1.0]), Err(FuncError::OutsideDomain { dim: 0, .. })));
        assert!(matches!(s.eval(&[1.0, 2.0]), Err(FuncError::Dimension { .. })));
    }

    #[test]
    fn fractional_power_of_variable_needs_positive_domain() {
        assert!(FuncSpec::parse("f", 1, &["x0^0.5"]).is_err());
        assert!(FuncSpec::parse_on("f", 1, &["x0^0.5"], Domain(vec![Interval::positive()])).is_ok());
        // composite bases are checked at evaluation time
        assert!(FuncSpec::parse("f", 1, &["(x0*x0)^0.5"]).is_ok());
    }

    #[test]
    fn derivative_examples() {
        let s = FuncSpec::parse("sq", 1, &["x0^2"]).unwrap();
        assert_eq!(s.diff(0).component(0).to_string(), "(2 * x0)");

        let h = FuncSpec::parse("saddle", 2, &["x0^2 - x1^2"]).unwrap().hessian(0);
        let m = h.eval(&[0.3, -1.2]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0]));

        let j = FuncSpec::parse("moebius", 1, &["x0/(1-x0)"]).unwrap().jacobian();
        let x: f64 = 0.25;
        let exact = 1.0 / (1.0 - x).powi(2);
        let got = j.eval(&[x]).unwrap()[(0, 0)];
        assert!((got - exact).abs() < 1e-14);
        let h = 1e-5;
        let fd = ((x + h) / (1.0 - x - h) - (x - h) / (1.0 - x + h)) / (2.0 * h);
        assert!((got - fd).abs() < 1e-8);
    }

    #[test]
    fn hessian_is_symmetric() {
        let s = FuncSpec::parse("f", 3, &["x0*x1*sin(x2) + exp(x0*x2) - x1^3"]).unwrap();
        let h = s.hessian(0);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(h.get(r, c), h.get(c, r));
            }
        }
    }

    #[test]
    fn grid_respects_open_endpoints() {
        let g = Grid::new(Domain(vec![Interval::open(0.0, 1.0), Interval::closed(-1.0, 1.0)]), vec![5, 3], 1e-3)
            .unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 15);
        assert!(pts.iter().all(|p| p[0] > 0.0 && p[0] < 1.0));
        assert_eq!(pts[0], vec![1e-3, -1.0]);
        assert_eq!(pts[2], vec![1e-3, 1.0]);
        assert!(Grid::new(Domain::unbounded(1), vec![4], 1e-3).is_err());
        assert!(Grid::interval(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = FuncSpec::parse_on("m", 1, &["x0/(1-x0)"], Domain(vec![Interval::open(f64::NEG_INFINITY, 1.0)]))
            .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: FuncSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"name":"b","n_in":1,"n_out":2,"components":["x0"]}"#;
        assert!(serde_json::from_str::<FuncSpec>(bad).is_err());
    }
}

//! Explicit neural-ODE embeddings with closed-form solutions.
//!
//! Every construction comes with the target map it embeds, the full-state
//! time-T map of its field (for Julia-equation checks), and an analytic
//! solution usable as an oracle against the integrator.

use std::f64::consts::PI;

use thiserror::Error;

use crate::architectures::{ArchError, LinearLayer, NodeArchitecture, Variant};
use crate::funcspec::{Domain, Expr, FuncError, FuncSpec, Interval};
use crate::odecore::VectorField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("{0}")]
    Rejected(String),
    #[error("({x}, t = {t}) outside the validity region: {reason}")]
    Validity { x: f64, t: f64, reason: String },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

impl From<crate::odecore::OdeError> for ConstructionError {
    fn from(e: crate::odecore::OdeError) -> Self {
        ConstructionError::Arch(e.into())
    }
}

/// Which explicit embedding was built, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Linear { c: f64 },
    Monomial { c: f64, alpha: f64 },
    Moebius { c: f64 },
    Negation,
    Polynomial { coeffs: Vec<f64> },
    Universal,
}

impl Kind {
    pub fn id(&self) -> &'static str {
        match self {
            Kind::Linear { .. } => "linear",
            Kind::Monomial { .. } => "monomial",
            Kind::Moebius { .. } => "moebius",
            Kind::Negation => "negation",
            Kind::Polynomial { .. } => "polynomial",
            Kind::Universal => "universal",
        }
    }

    /// The result this construction relies on.
    pub fn citation(&self) -> &'static str {
        match self {
            Kind::Linear { .. } => {
                "linear maps x -> c x with c > 0 embed in a basic neural ODE via f(h) = ln(c)/T h; \
                 for c <= 0 no basic neural ODE has this time-T map"
            }
            Kind::Monomial { .. } => {
                "monomials c x^alpha on x > 0 embed in a basic neural ODE via \
                 f(h) = ln(alpha)/T h ln(c^(1/(alpha-1)) h), with solution \
                 c^(1/(1-alpha)) (x c^(1/(alpha-1)))^(alpha^(t/T))"
            }
            Kind::Moebius { .. } => {
                "the Moebius map x/(1 - c x) solves Julia's equation with f(h) = (c/T) h^2, \
                 flow x/(1 - c x t/T)"
            }
            Kind::Negation => {
                "x -> -x is not a time-T map of any 1-D basic neural ODE but embeds in an \
                 augmented one as a half rotation with field pi/T (-h2, h1)"
            }
            Kind::Polynomial { .. } => {
                "a two-layer neural ODE with diagonal monomial fields reproduces polynomials \
                 with p(0) = 0 on x > 0"
            }
            Kind::Universal => {
                "every map embeds in an augmented neural ODE with a linear layer: field \
                 (0, Phi(h_in)/T) and projection A = (0 | I)"
            }
        }
    }
}

/// A constructed architecture together with its target and oracle data.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub kind: Kind,
    pub arch: NodeArchitecture,
    pub target: FuncSpec,
    horizon: f64,
}

fn check_horizon(t: f64) -> Result<(), ConstructionError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ConstructionError::Rejected(format!("horizon T = {t} must be positive and finite")))
    }
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn basic(kind: Kind, field: Vec<Expr>, domain: Domain, target: Vec<Expr>, t: f64) -> Result<Construction, ConstructionError> {
    let n = domain.dim();
    let spec = FuncSpec::new(format!("{}-field", kind.id()), n, field, domain.clone())?;
    let arch = NodeArchitecture::new(Variant::Basic, VectorField::new(spec)?, t)?;
    let target = FuncSpec::new(format!("{}-target", kind.id()), n, target, domain)?;
    Ok(Construction { kind, arch, target, horizon: t })
}

/// `x ↦ c·x` with `f(h) = ln(c)/T · h`.
pub fn construct_linear(cf: f64, t: f64) -> Result<Construction, ConstructionError> {
    check_horizon(t)?;
    if !(cf > 0.0 && cf.is_finite()) {
        return Err(ConstructionError::Rejected(format!(
            "c = {cf}: for c <= 0 no basic neural ODE has x -> c x as its time-T map"
        )));
    }
    let rate = cf.ln() / t;
    let field = if rate == 0.0 { c(0.0) } else { Expr::mul(c(rate), x(0)) };
    basic(Kind::Linear { c: cf }, vec![field], Domain::unbounded(1), vec![Expr::mul(c(cf), x(0))], t)
}

/// `x ↦ c·x^α` on `x > 0`.
pub fn construct_monomial(cf: f64, alpha: f64, t: f64) -> Result<Construction, ConstructionError> {
    check_horizon(t)?;
    if !(cf > 0.0 && cf.is_finite()) {
        return Err(ConstructionError::Rejected(format!("c = {cf} must be positive")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) || alpha == 1.0 {
        return Err(ConstructionError::Rejected(format!(
            "alpha = {alpha} must be positive and different from 1 (use the linear construction for alpha = 1)"
        )));
    }
    let k = (cf.ln() / (alpha - 1.0)).exp();
    let inner = if k == 1.0 { x(0) } else { Expr::mul(c(k), x(0)) };
    let field = Expr::mul(Expr::mul(c(alpha.ln() / t), x(0)), Expr::ln(inner));
    let target = Expr::mul(c(cf), Expr::pow(x(0), alpha));
    basic(Kind::Monomial { c: cf, alpha }, vec![field], Domain(vec![Interval::positive()]), vec![target], t)
}

/// `x ↦ x/(1 − c·x)` with `f(h) = (c/T)·h²`, restricted to `c·x < 1`.
pub fn construct_moebius(cf: f64, t: f64) -> Result<Construction, ConstructionError> {
    check_horizon(t)?;
    if cf == 0.0 || !cf.is_finite() {
        return Err(ConstructionError::Rejected(format!("c = {cf} must be finite and nonzero")));
    }
    // keep the pole strictly beyond T: c x (T + eps)/T < 1
    let bound = 1.0 / (cf * (1.0 + 1e-9));
    let iv = if cf > 0.0 {
        Interval { lo: f64::NEG_INFINITY, hi: bound, lo_open: true, hi_open: true, positive: false }
    } else {
        Interval { lo: bound, hi: f64::INFINITY, lo_open: true, hi_open: true, positive: false }
    };
    let field = Expr::mul(c(cf / t), Expr::pow(x(0), 2.0));
    let target = Expr::div(x(0), Expr::sub(c(1.0), Expr::mul(c(cf), x(0))));
    // the state may pass 1/c before T; only inputs are restricted
    let mut con = basic(Kind::Moebius { c: cf }, vec![field], Domain::unbounded(1), vec![target], t)?;
    con.arch = con.arch.with_input_domain(Domain(vec![iv]))?;
    con.target = con.target.with_domain(Domain(vec![iv]))?;
    Ok(con)
}

/// `x ↦ −x` as a half rotation in the plane.
pub fn construct_negation(t: f64) -> Result<Construction, ConstructionError> {
    check_horizon(t)?;
    let w = PI / t;
    let spec = FuncSpec::new(
        "negation-field",
        2,
        vec![Expr::mul(c(w), Expr::neg(x(1))), Expr::mul(c(w), x(0))],
        Domain::unbounded(2),
    )?;
    let arch = NodeArchitecture::new(Variant::Augmented { n_in: 1 }, VectorField::new(spec)?, t)?;
    let target = FuncSpec::new("negation-target", 1, vec![Expr::neg(x(0))], Domain::unbounded(1))?;
    Ok(Construction { kind: Kind::Negation, arch, target, horizon: t })
}

/// `x ↦ Σ a_k x^k` on `x > 0` via `L₁(x) = (x,..,x)`, diagonal monomial
/// fields producing `x^k`, and `L₂ = (a₁..a_n)`.
pub fn construct_polynomial(coeffs: &[f64], t: f64) -> Result<Construction, ConstructionError> {
    check_horizon(t)?;
    let n = coeffs.len();
    if n == 0 {
        return Err(ConstructionError::Rejected("at least one coefficient required".into()));
    }
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(ConstructionError::Rejected("coefficients must be finite".into()));
    }
    let pos = || Domain(vec![Interval::positive(); n]);
    let layer1 = FuncSpec::new("replicate", 1, vec![x(0); n], Domain(vec![Interval::positive()]))?;
    let field: Vec<Expr> = (0..n)
        .map(|i| {
            let k = (i + 1) as f64;
            if i == 0 {
                c(0.0)
            } else {
                Expr::mul(Expr::mul(c(k.ln() / t), x(i)), Expr::ln(x(i)))
            }
        })
        .collect();
    let field = VectorField::new(FuncSpec::new("polynomial-field", n, field, pos())?)?;
    let sum = |terms: Vec<Expr>| terms.into_iter().reduce(Expr::add).unwrap_or(c(0.0));
    let layer2 = FuncSpec::new(
        "coefficients",
        n,
        vec![sum(coeffs.iter().enumerate().map(|(i, a)| Expr::mul(c(*a), x(i))).collect())],
        pos(),
    )?;
    let target = sum(coeffs.iter().enumerate().map(|(i, a)| Expr::mul(c(*a), Expr::pow(x(0), (i + 1) as f64))).collect());
    let target = FuncSpec::new("polynomial-target", 1, vec![target], Domain(vec![Interval::positive()]))?;
    let arch = NodeArchitecture::new(Variant::TwoLayer { layer1, layer2 }, field, t)?;
    Ok(Construction { kind: Kind::Polynomial { coeffs: coeffs.to_vec() }, arch, target, horizon: t })
}

/// Any `Φ: ℝⁿ → ℝᵖ`: state `(x, y)` with `x' = 0`, `y' = Φ(x)/T`, read out `y`.
pub fn construct_universal(phi: &FuncSpec, t: f64) -> Result<Construction, ConstructionError> {
    check_horizon(t)?;
    let (n, p) = (phi.n_in(), phi.n_out());
    let mut comps = vec![c(0.0); n];
    comps.extend(phi.components().iter().map(|e| Expr::mul(c(1.0 / t), e.clone())));
    let mut dom = phi.domain().0.clone();
    dom.extend(std::iter::repeat_n(Interval::unbounded(), p));
    let field = FuncSpec::new(format!("{}-universal-field", phi.name), n + p, comps, Domain(dom))?;
    let linear = LinearLayer::projection(n + p, n, p);
    let arch = NodeArchitecture::new(Variant::AugmentedWithLinear { n_in: n, linear }, VectorField::new(field)?, t)?;
    Ok(Construction { kind: Kind::Universal, arch, target: phi.clone(), horizon: t })
}

impl Construction {
    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn citation(&self) -> &'static str {
        self.kind.citation()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// The field as a map, for Julia-equation checks.
    pub fn field_spec(&self) -> &FuncSpec {
        self.arch.field().spec()
    }

    /// The time-T map of the field on the full state space.
    pub fn flow_map(&self) -> Result<FuncSpec, ConstructionError> {
        let spec = self.field_spec();
        let m = spec.n_in();
        let comps = match &self.kind {
            Kind::Linear { .. } | Kind::Monomial { .. } | Kind::Moebius { .. } => self.target.components().to_vec(),
            Kind::Negation => vec![Expr::neg(x(0)), Expr::neg(x(1))],
            Kind::Polynomial { .. } => (0..m).map(|i| Expr::pow(x(i), (i + 1) as f64)).collect(),
            Kind::Universal => {
                let n = self.target.n_in();
                let mut v: Vec<Expr> = (0..n).map(x).collect();
                v.extend(self.target.components().iter().enumerate().map(|(j, e)| Expr::add(x(n + j), e.clone())));
                v
            }
        };
        Ok(FuncSpec::new(format!("{}-flow-map", self.id()), m, comps, spec.domain().clone())?)
    }

    /// Analytic state of the flow at time `t` started from the
    /// architecture's initial state for input `x`.
    pub fn closed_form_solution(&self, xs: &[f64], t: f64) -> Result<Vec<f64>, ConstructionError> {
        let h0 = self.arch.initial_state(xs)?;
        let tau = t / self.horizon;
        let bad = |reason: &str| ConstructionError::Validity { x: xs[0], t, reason: reason.into() };
        if !t.is_finite() || t < 0.0 {
            return Err(bad("time must be finite and non-negative"));
        }
        Ok(match &self.kind {
            Kind::Linear { c } => vec![h0[0] * c.powf(tau)],
            Kind::Monomial { c, alpha } => {
                let k = (c.ln() / (alpha - 1.0)).exp();
                vec![(h0[0] * k).powf(alpha.powf(tau)) / k]
            }
            Kind::Moebius { c } => {
                let d = 1.0 - c * h0[0] * tau;
                if d <= 0.0 {
                    return Err(bad("1 - c x t/T <= 0, the solution has left every bounded set"));
                }
                vec![h0[0] / d]
            }
            Kind::Negation => {
                let (s, co) = (PI * tau).sin_cos();
                vec![h0[0] * co - h0[1] * s, h0[0] * s + h0[1] * co]
            }
            Kind::Polynomial { .. } => h0.iter().enumerate().map(|(i, v)| v.powf(((i + 1) as f64).powf(tau))).collect(),
            Kind::Universal => {
                let n = self.target.n_in();
                let phi = self.target.eval(&h0[..n])?;
                let mut out = h0.clone();
                for (j, p) in phi.iter().enumerate() {
                    out[n + j] += tau * p;
                }
                out
            }
        })
    }
}

/// Build a construction from its id and parameters.
pub fn construct(
    id: &str,
    c: Option<f64>,
    alpha: Option<f64>,
    coeffs: Option<&[f64]>,
    phi: Option<&FuncSpec>,
    t: f64,
) -> Result<Construction, ConstructionError> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| ConstructionError::Rejected(format!("`{id}` needs parameter {name}")))
    };
    match id {
        "linear" => construct_linear(need(c, "c")?, t),
        "monomial" => construct_monomial(need(c, "c")?, need(alpha, "alpha")?, t),
        "moebius" => construct_moebius(need(c, "c")?, t),
        "negation" => construct_negation(t),
        "polynomial" => {
            construct_polynomial(coeffs.ok_or_else(|| ConstructionError::Rejected("`polynomial` needs coefficients".into()))?, t)
        }
        "universal" => {
            construct_universal(phi.ok_or_else(|| ConstructionError::Rejected("`universal` needs a map".into()))?, t)
        }
        other => Err(ConstructionError::Rejected(format!("unknown construction `{other}`"))),
    }
}

//! Closed-form 1-D flows `h(x, t) = r⁻¹(r(x) + t)` with `r' = 1/f`.

use thiserror::Error;

use crate::funcspec::{FuncError, FuncSpec, Interval};
use crate::numeric::quad::{integrate, QuadError};
use crate::numeric::roots::{solve_bracketed, RootError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("field must be a scalar map of one variable")]
    NotScalar,
    #[error("field vanishes or changes sign near {0}")]
    SignChange(f64),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("quadrature of 1/f failed between {a} and {b}")]
    Quadrature { a: f64, b: f64 },
    #[error("r(x) + t = {target} is outside the range of r: the flow leaves the domain before t")]
    OutOfRange { target: f64 },
    #[error("root finding failed: {0}")]
    Root(String),
}

const SCAN_POINTS: usize = 2001;
const QUAD_TOL: f64 = 1e-12;
const MAX_EXPANSIONS: usize = 200;

/// `r(x) = ∫_{x₀}^{x} 1/f`, with cached values at nodes spreading out from
/// the anchor `x₀` toward both ends of the domain.
#[derive(Debug, Clone)]
pub struct RFunction {
    field: FuncSpec,
    domain: Interval,
    anchor: f64,
    /// `+1` if `f > 0`, `-1` if `f < 0`.
    sign: f64,
    /// Sorted `(node, r(node))`.
    nodes: Vec<(f64, f64)>,
}

fn anchor_of(iv: &Interval) -> f64 {
    match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => 0.5 * (iv.lo + iv.hi),
        (true, false) => iv.lo + iv.lo.abs().max(1.0),
        (false, true) => iv.hi - iv.hi.abs().max(1.0),
        (false, false) => 0.0,
    }
}

/// Points from `a` toward `edge` (halving the gap) or to infinity (doubling).
fn spread(a: f64, edge: f64, count: usize) -> impl Iterator<Item = f64> {
    let dir = if edge > a { 1.0 } else { -1.0 };
    (1..=count).map(move |j| {
        if edge.is_finite() {
            edge - (edge - a) * 0.5f64.powi(j as i32)
        } else {
            a + dir * (2f64.powi(j as i32 - 1))
        }
    })
}

impl RFunction {
    /// Build `r` for a scalar field; the sign of `f` is checked on a scan of
    /// the domain (or of a window around the anchor when unbounded).
    pub fn new(field: &FuncSpec) -> Result<Self, FlowError> {
        if field.n_in() != 1 || field.n_out() != 1 {
            return Err(FlowError::NotScalar);
        }
        let domain = field.domain().0[0];
        let anchor = anchor_of(&domain);
        let f0 = field.eval_scalar(&[anchor])?;
        if f0 == 0.0 || !f0.is_finite() {
            return Err(FlowError::SignChange(anchor));
        }
        let sign = f0.signum();
        let mut rf = RFunction { field: field.clone(), domain, anchor, sign, nodes: vec![(anchor, 0.0)] };

        let lo = if domain.lo.is_finite() { domain.lo } else { anchor - 1e3 * (1.0 + anchor.abs()) };
        let hi = if domain.hi.is_finite() { domain.hi } else { anchor + 1e3 * (1.0 + anchor.abs()) };
        let span = hi - lo;
        for i in 1..SCAN_POINTS - 1 {
            let x = lo + span * i as f64 / (SCAN_POINTS - 1) as f64;
            if let Ok(v) = field.eval_scalar(&[x]) {
                if v == 0.0 || v.signum() != sign {
                    return Err(FlowError::SignChange(x));
                }
            }
        }

        for edge in [domain.lo, domain.hi] {
            let mut prev = (anchor, 0.0);
            for node in spread(anchor, edge, 48) {
                if !rf.domain.contains(node) || node == prev.0 {
                    break;
                }
                match rf.segment(prev.0, node) {
                    Ok(v) if (prev.1 + v).is_finite() => {
                        prev = (node, prev.1 + v);
                        rf.nodes.push(prev);
                    }
                    _ => break,
                }
            }
        }
        rf.nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(rf)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn field(&self) -> &FuncSpec {
        &self.field
    }

    fn inv_f(&self, x: f64) -> Result<f64, FlowError> {
        let v = self.field.eval_scalar(&[x])?;
        if v == 0.0 || v.signum() != self.sign {
            return Err(FlowError::SignChange(x));
        }
        Ok(1.0 / v)
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64, FlowError> {
        let f = |x: f64| self.inv_f(x);
        match integrate(f, a, b, QUAD_TOL) {
            Ok(v) => Ok(v),
            Err(QuadError::Eval(e)) => Err(e),
            Err(QuadError::MaxDepth { .. }) => {
                // large values: fall back to a relative tolerance
                let rough = integrate(f, a, b, 1e-6).map_err(|_| FlowError::Quadrature { a, b })?;
                integrate(f, a, b, QUAD_TOL * rough.abs().max(1.0)).map_err(|_| FlowError::Quadrature { a, b })
            }
        }
    }

    /// `r(x)`, integrating from the nearest cached node.
    pub fn r(&self, x: f64) -> Result<f64, FlowError> {
        if !self.domain.contains(x) {
            return Err(FuncError::OutsideDomain { dim: 0, value: x }.into());
        }
        let i = self.nodes.partition_point(|n| n.0 < x);
        let cand = [i.checked_sub(1), Some(i).filter(|&i| i < self.nodes.len())];
        let (node, rv) = cand
            .into_iter()
            .flatten()
            .map(|k| self.nodes[k])
            .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
            .expect("node list is never empty");
        Ok(rv + self.segment(node, x)?)
    }

    /// `r⁻¹(target)`, searching outward from `start`.
    pub fn r_inverse(&self, target: f64, start: f64) -> Result<f64, FlowError> {
        let r0 = self.r(start)?;
        let g = |y: f64| self.r(y).map(|v| v - target);
        let d0 = r0 - target;
        if d0 == 0.0 {
            return Ok(start);
        }
        // r increases with y when f > 0
        let up = (target > r0) == (self.sign > 0.0);
        let edge = if up { self.domain.hi } else { self.domain.lo };
        let dir = if up { 1.0 } else { -1.0 };
        let step0 = 1e-3 * (1.0 + start.abs());
        let mut prev = start;
        for j in 0..MAX_EXPANSIONS {
            let mut y = start + dir * step0 * 2f64.powi(j as i32);
            if edge.is_finite() && (y - edge) * dir >= 0.0 {
                y = edge - (edge - prev) * 0.5;
            }
            if !y.is_finite() || y == prev || !self.domain.contains(y) {
                break;
            }
            let dy = match g(y) {
                Ok(v) => v,
                Err(FlowError::Quadrature { .. }) => break,
                Err(e) => return Err(e),
            };
            if dy == 0.0 {
                return Ok(y);
            }
            if dy.signum() != d0.signum() {
                return solve_bracketed(g, prev, y, 1e-15).map_err(|e| match e {
                    RootError::Eval(e) => e,
                    other => FlowError::Root(other.to_string()),
                });
            }
            prev = y;
        }
        Err(FlowError::OutOfRange { target })
    }
}

/// `h(x, t) = r⁻¹(r(x) + t)`.
pub fn jabotinsky_flow(rf: &RFunction, x: f64, t: f64) -> Result<f64, FlowError> {
    jabotinsky_flow_with(rf, x, t, |t| t)
}

/// `r⁻¹(r(x) + γ(t))` for an arbitrary time reparametrization `γ`.
pub fn jabotinsky_flow_with(rf: &RFunction, x: f64, t: f64, gamma: impl Fn(f64) -> f64) -> Result<f64, FlowError> {
    let target = rf.r(x)? + gamma(t);
    rf.r_inverse(target, x)
}

//! Numerical integration of vector fields, time-T maps and flow-law checks.

mod integrator;

pub use integrator::{integrate, time_t_map};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcspec::{FuncError, FuncSpec, Grid};
use crate::numeric::max_dist;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("field evaluation failed at t = {t}: {source}")]
    Field {
        t: f64,
        #[source]
        source: FuncError,
    },
    #[error("solution blew up at t* = {t_star}")]
    BlowUp { t_star: f64 },
    #[error("step limit reached at t = {t}")]
    StepLimit { t: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl OdeError {
    /// True for blow-up and step-limit failures.
    pub fn is_numerical(&self) -> bool {
        matches!(self, OdeError::BlowUp { .. } | OdeError::StepLimit { .. })
    }
}

/// A vector field `f(h, t)` on ℝᵐ.
///
/// The underlying map takes either `m` inputs (autonomous) or `m + 1` inputs,
/// in which case the last input `x{m}` is time.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    spec: FuncSpec,
    dim: usize,
    time_dependent: bool,
}

impl VectorField {
    pub fn new(spec: FuncSpec) -> Result<Self, OdeError> {
        let m = spec.n_out();
        let time_dependent = if spec.n_in() == m {
            false
        } else if spec.n_in() == m + 1 {
            spec.components().iter().any(|e| e.references(m))
        } else {
            return Err(OdeError::Invalid(format!(
                "field has {} inputs for {m} outputs; expected {m} or {}",
                spec.n_in(),
                m + 1
            )));
        };
        Ok(VectorField { spec, dim: m, time_dependent })
    }

    /// Parse an autonomous field from component strings over an unbounded domain.
    pub fn parse(components: &[&str]) -> Result<Self, OdeError> {
        let spec = FuncSpec::parse("f", components.len(), components)
            .map_err(|e| OdeError::Invalid(e.to_string()))?;
        Self::new(spec)
    }

    /// Parse a field whose components may reference time as `x{m}`.
    pub fn parse_with_time(components: &[&str]) -> Result<Self, OdeError> {
        let spec = FuncSpec::parse("f", components.len() + 1, components)
            .map_err(|e| OdeError::Invalid(e.to_string()))?;
        Self::new(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_autonomous(&self) -> bool {
        !self.time_dependent
    }

    pub fn spec(&self) -> &FuncSpec {
        &self.spec
    }

    /// Whether the underlying map carries a time input.
    pub fn has_time_input(&self) -> bool {
        self.spec.n_in() == self.dim + 1
    }

    pub fn eval(&self, t: f64, h: &[f64], out: &mut [f64]) -> Result<(), OdeError> {
        let res = if self.has_time_input() {
            let mut x = Vec::with_capacity(self.dim + 1);
            x.extend_from_slice(h);
            x.push(t);
            self.spec.eval_into(&x, out)
        } else {
            self.spec.eval_into(h, out)
        };
        res.map_err(|source| OdeError::Field { t, source })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a fixed number of steps.
    Rk4 { steps: usize },
    /// Dormand–Prince 5(4) with embedded error control.
    DormandPrince,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Max-norm threshold treated as finite-time blow-up.
    pub blowup_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::DormandPrince,
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
            blowup_bound: 1e12,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(steps: usize) -> Self {
        IntegratorConfig { method: Method::Rk4 { steps }, ..Self::default() }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(OdeError::Invalid("tolerances must be positive".into()));
        }
        if self.max_steps < 1 {
            return Err(OdeError::Invalid("max_steps must be at least 1".into()));
        }
        if let Method::Rk4 { steps } = self.method {
            if steps < 1 {
                return Err(OdeError::Invalid("RK4 needs at least one step".into()));
            }
        }
        if !(self.blowup_bound > 0.0) {
            return Err(OdeError::Invalid("blow-up bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed,
    BlewUp { t_star: f64 },
    StepLimit { t: f64 },
}

/// Accepted steps of one integration, starting with the initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub status: Status,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial condition")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial condition")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with header `t,h1,...,hm`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let m = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=m {
            out.push_str(&format!(",h{i}"));
        }
        out.push('\n');
        for (t, h) in self.times.iter().zip(&self.states) {
            out.push_str(&crate::io::fmt_f64(*t));
            for v in h {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub(crate) fn into_result(self) -> Result<Vec<f64>, OdeError> {
        match self.status {
            Status::Completed => Ok(self.states.into_iter().next_back().unwrap_or_default()),
            Status::BlewUp { t_star } => Err(OdeError::BlowUp { t_star }),
            Status::StepLimit { t } => Err(OdeError::StepLimit { t }),
        }
    }
}

/// Max-norm defect `|h(x, s+t) − h(h(x, s), t)|` of the flow law.
pub fn check_translation(
    field: &VectorField,
    x: &[f64],
    s: f64,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, OdeError> {
    if !field.is_autonomous() {
        return Err(OdeError::Invalid("translation check needs an autonomous field".into()));
    }
    let direct = time_t_map(field, x, s + t, cfg)?;
    let first = time_t_map(field, x, s, cfg)?;
    let composed = time_t_map(field, &first, t, cfg)?;
    Ok(max_dist(&direct, &composed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonotoneVerdict {
    Monotone,
    /// `x1 < x2` but `h(x1, T) >= h(x2, T)`.
    Witness { x1: f64, x2: f64, h1: f64, h2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub verdict: MonotoneVerdict,
    /// A strictly increasing time-T map is forced by uniqueness of solutions;
    /// a witness therefore points at non-unique solutions or integration failure.
    pub uniqueness_violation_suspected: bool,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

/// Check that the time-T map of a 1-D field strictly increases along the grid.
pub fn check_monotone_1d(
    field: &VectorField,
    grid: &Grid,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<MonotoneReport, OdeError> {
    if field.dim() != 1 || grid.dim() != 1 {
        return Err(OdeError::Invalid("monotonicity check is one-dimensional".into()));
    }
    let points = grid.axis(0);
    let values = points
        .par_iter()
        .map(|&x| time_t_map(field, &[x], horizon, cfg).map(|v| v[0]))
        .collect::<Result<Vec<_>, _>>()?;
    let witness = points
        .windows(2)
        .zip(values.windows(2))
        .find(|(_, v)| v[0] >= v[1])
        .map(|(p, v)| MonotoneVerdict::Witness { x1: p[0], x2: p[1], h1: v[0], h2: v[1] });
    let suspected = witness.is_some();
    Ok(MonotoneReport {
        verdict: witness.unwrap_or(MonotoneVerdict::Monotone),
        uniqueness_violation_suspected: suspected,
        points,
        values,
    })
}

/// `|φ_T(x + δ) − φ_T(x)|` for each perturbation size.
pub fn continuous_dependence(
    field: &VectorField,
    x: &[f64],
    horizon: f64,
    deltas: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, OdeError> {
    let base = time_t_map(field, x, horizon, cfg)?;
    deltas
        .iter()
        .map(|d| {
            let shifted: Vec<f64> = x.iter().map(|v| v + d).collect();
            time_t_map(field, &shifted, horizon, cfg).map(|y| max_dist(&y, &base))
        })
        .collect()
}

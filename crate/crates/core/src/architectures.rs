//! Neural-ODE architectures as evaluable pipelines, and the grid verifier
//! that decides whether one of them reproduces a target map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcspec::{Domain, Expr, FuncError, FuncSpec, Grid, Interval, IntervalJson};
use crate::io::fmt_f64;
use crate::numeric::max_dist;
use crate::odecore::{time_t_map, IntegratorConfig, OdeError, VectorField};

/// Default tolerance for [`verify_embedding`].
pub const DEFAULT_VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArchError {
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("input coordinate {dim} = {value} outside the architecture's domain")]
    OutsideDomain { dim: usize, value: f64 },
}

/// Affine layer `x ↦ A x + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    #[serde(rename = "A")]
    pub matrix: Vec<Vec<f64>>,
    #[serde(rename = "a")]
    pub offset: Vec<f64>,
}

impl LinearLayer {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self, ArchError> {
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.is_empty() || cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(ArchError::Shape("matrix rows must be non-empty and of equal length".into()));
        }
        if offset.len() != matrix.len() {
            return Err(ArchError::Shape(format!("offset length {} != rows {}", offset.len(), matrix.len())));
        }
        if matrix.iter().flatten().chain(&offset).any(|v| !v.is_finite()) {
            return Err(ArchError::Shape("entries must be finite".into()));
        }
        Ok(LinearLayer { matrix, offset })
    }

    /// `[0 | I]` or `[I | 0]` style projections onto a block of coordinates.
    pub fn projection(input: usize, start: usize, len: usize) -> Self {
        let matrix = (0..len)
            .map(|r| (0..input).map(|c| if c == start + r { 1.0 } else { 0.0 }).collect())
            .collect();
        LinearLayer { matrix, offset: vec![0.0; len] }
    }

    pub fn rows(&self) -> usize {
        self.matrix.len()
    }

    pub fn cols(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, a)| row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>() + a)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// `x ↦ h_x(T)`.
    Basic,
    /// `x ↦ L(h_x(T))`.
    WithLinear(LinearLayer),
    /// `x ↦ [h_{(x,0)}(T)]_{1..n}` in dimension `m > n`.
    Augmented { n_in: usize },
    /// `x ↦ L(h_{(x,0)}(T))`.
    AugmentedWithLinear { n_in: usize, linear: LinearLayer },
    /// `x ↦ L₂(h_{L₁(x)}(T))` with arbitrary maps as layers.
    TwoLayer { layer1: FuncSpec, layer2: FuncSpec },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::WithLinear(_) => "with_linear",
            Variant::Augmented { .. } => "augmented",
            Variant::AugmentedWithLinear { .. } => "augmented_with_linear",
            Variant::TwoLayer { .. } => "two_layer",
        }
    }
}

/// A vector field, a horizon, and the layers around the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeArchitecture {
    variant: Variant,
    field: VectorField,
    horizon: f64,
    config: IntegratorConfig,
    input_domain: Domain,
}

/// Output of one architecture evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: Vec<f64>,
    /// Augmented variants: max |trailing m − n components| of the time-T map.
    pub defect: Option<f64>,
}

impl NodeArchitecture {
    pub fn new(variant: Variant, field: VectorField, horizon: f64) -> Result<Self, ArchError> {
        let m = field.dim();
        let n_in = match &variant {
            Variant::Basic => m,
            Variant::WithLinear(l) => {
                if l.cols() != m {
                    return Err(ArchError::Shape(format!("linear layer has {} columns, field dimension {m}", l.cols())));
                }
                m
            }
            Variant::Augmented { n_in } | Variant::AugmentedWithLinear { n_in, .. } => {
                if *n_in == 0 || *n_in >= m {
                    return Err(ArchError::Shape(format!("augmentation needs 0 < n = {n_in} < m = {m}")));
                }
                if let Variant::AugmentedWithLinear { linear, .. } = &variant {
                    if linear.cols() != m {
                        return Err(ArchError::Shape("linear layer must act on the full augmented state".into()));
                    }
                }
                *n_in
            }
            Variant::TwoLayer { layer1, layer2 } => {
                if layer1.n_out() != m || layer2.n_in() != m {
                    return Err(ArchError::Shape(format!(
                        "layer1 outputs {}, field dimension {m}, layer2 takes {}",
                        layer1.n_out(),
                        layer2.n_in()
                    )));
                }
                layer1.n_in()
            }
        };
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ArchError::Shape("horizon must be positive and finite".into()));
        }
        let input_domain = match &variant {
            Variant::TwoLayer { layer1, .. } => layer1.domain().clone(),
            _ => Domain(field.spec().domain().0[..n_in].to_vec()),
        };
        Ok(NodeArchitecture { variant, field, horizon, config: IntegratorConfig::default(), input_domain })
    }

    pub fn with_config(mut self, config: IntegratorConfig) -> Self {
        self.config = config;
        self
    }

    /// Restrict the accepted inputs.
    pub fn with_input_domain(mut self, domain: Domain) -> Result<Self, ArchError> {
        if domain.dim() != self.n_in() {
            return Err(ArchError::Shape("input domain dimension mismatch".into()));
        }
        domain.validate()?;
        self.input_domain = domain;
        Ok(self)
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn input_domain(&self) -> &Domain {
        &self.input_domain
    }

    pub fn n_in(&self) -> usize {
        self.input_domain.dim()
    }

    pub fn n_out(&self) -> usize {
        match &self.variant {
            Variant::Basic => self.field.dim(),
            Variant::WithLinear(l) | Variant::AugmentedWithLinear { linear: l, .. } => l.rows(),
            Variant::Augmented { n_in } => *n_in,
            Variant::TwoLayer { layer2, .. } => layer2.n_out(),
        }
    }

    /// Initial state of the flow for input `x`.
    pub fn initial_state(&self, x: &[f64]) -> Result<Vec<f64>, ArchError> {
        if x.len() != self.n_in() {
            return Err(ArchError::Shape(format!("input has dimension {}, expected {}", x.len(), self.n_in())));
        }
        if let Some((dim, value)) = self.input_domain.violation(x) {
            return Err(ArchError::OutsideDomain { dim, value });
        }
        Ok(match &self.variant {
            Variant::Basic | Variant::WithLinear(_) => x.to_vec(),
            Variant::Augmented { .. } | Variant::AugmentedWithLinear { .. } => {
                let mut h = x.to_vec();
                h.resize(self.field.dim(), 0.0);
                h
            }
            Variant::TwoLayer { layer1, .. } => layer1.eval(x)?,
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation, ArchError> {
        let h0 = self.initial_state(x)?;
        let h = time_t_map(&self.field, &h0, self.horizon, &self.config)?;
        let trailing = |n: usize| h[n..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(match &self.variant {
            Variant::Basic => Evaluation { value: h, defect: None },
            Variant::WithLinear(l) => Evaluation { value: l.apply(&h), defect: None },
            Variant::Augmented { n_in } => Evaluation { value: h[..*n_in].to_vec(), defect: Some(trailing(*n_in)) },
            Variant::AugmentedWithLinear { linear, .. } => Evaluation { value: linear.apply(&h), defect: None },
            Variant::TwoLayer { layer2, .. } => Evaluation { value: layer2.eval(&h)?, defect: None },
        })
    }
}

/// Lift a time-dependent field to an autonomous one with time as an extra
/// state coordinate (rate 1, starting at 0), projected back by `[I 0]`.
pub fn augment_time(field: &VectorField, horizon: f64) -> Result<NodeArchitecture, ArchError> {
    if !field.has_time_input() || field.is_autonomous() {
        return Err(ArchError::Shape("augment_time expects a time-dependent field".into()));
    }
    let m = field.dim();
    let spec = field.spec();
    let mut comps: Vec<Expr> = spec.components().to_vec();
    comps.push(Expr::Const(1.0));
    let lifted = FuncSpec::new(format!("{}+time", spec.name), m + 1, comps, spec.domain().clone())?;
    let lifted = VectorField::new(lifted)?;
    let linear = LinearLayer::projection(m + 1, 0, m);
    NodeArchitecture::new(Variant::AugmentedWithLinear { n_in: m, linear }, lifted, horizon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub x: Vec<f64>,
    pub node: Vec<f64>,
    pub target: Vec<f64>,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub x: Vec<f64>,
    pub error: String,
    /// True when the failure came from blow-up or a step limit.
    pub numerical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    /// Infinite when any grid point failed to evaluate.
    pub max_err: f64,
    pub argmax: Vec<f64>,
    pub pass: bool,
    pub tol: f64,
    /// Max trailing-component defect for augmented variants.
    pub defect: Option<f64>,
    pub rows: Vec<PointRow>,
    pub failures: Vec<PointFailure>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    max_err: f64,
    argmax: &'a [f64],
    pass: bool,
    tol: f64,
    defect: Option<f64>,
    failures: &'a [PointFailure],
    table_csv: String,
}

impl Serialize for VerificationReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ReportJson {
            max_err: self.max_err,
            argmax: &self.argmax,
            pass: self.pass,
            tol: self.tol,
            defect: self.defect,
            failures: &self.failures,
            table_csv: self.table_csv(),
        }
        .serialize(s)
    }
}

impl VerificationReport {
    /// Per-point table `x1..xn,node1..,target1..,err`.
    pub fn table_csv(&self) -> String {
        let (n_in, n_out) = self.rows.first().map_or((0, 0), |r| (r.x.len(), r.node.len()));
        let mut header: Vec<String> = (1..=n_in).map(|i| format!("x{i}")).collect();
        header.extend((1..=n_out).map(|i| format!("node{i}")));
        header.extend((1..=n_out).map(|i| format!("target{i}")));
        header.push("err".into());
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.rows {
            let vals: Vec<String> =
                r.x.iter().chain(&r.node).chain(&r.target).chain(std::iter::once(&r.err)).map(|v| fmt_f64(*v)).collect();
            out.push_str(&vals.join(","));
            out.push('\n');
        }
        out
    }
}

/// Evaluate `arch` and `target` on every grid point and compare in max norm.
///
/// All points are evaluated even after failures; failing points are listed
/// in the report and make it fail.
pub fn verify_embedding(
    arch: &NodeArchitecture,
    target: &FuncSpec,
    grid: &Grid,
    tol: f64,
) -> Result<VerificationReport, ArchError> {
    if target.n_in() != arch.n_in() || target.n_out() != arch.n_out() {
        return Err(ArchError::Shape(format!(
            "target is {}→{}, architecture is {}→{}",
            target.n_in(),
            target.n_out(),
            arch.n_in(),
            arch.n_out()
        )));
    }
    if grid.dim() != arch.n_in() {
        return Err(ArchError::Shape("grid dimension mismatch".into()));
    }
    let results: Vec<(Vec<f64>, Result<(Evaluation, Vec<f64>), ArchError>)> = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let r = arch.evaluate(&x).and_then(|e| Ok((e, target.eval(&x)?)));
            (x, r)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut defect: Option<f64> = None;
    for (x, r) in results {
        match r {
            Ok((eval, tv)) => {
                if let Some(d) = eval.defect {
                    defect = Some(defect.map_or(d, |m| m.max(d)));
                }
                let err = max_dist(&eval.value, &tv);
                rows.push(PointRow { x, node: eval.value, target: tv, err });
            }
            Err(e) => {
                let numerical = matches!(&e, ArchError::Ode(o) if o.is_numerical());
                failures.push(PointFailure { x, error: e.to_string(), numerical });
            }
        }
    }
    let (mut max_err, mut argmax) = (0.0f64, Vec::new());
    for r in &rows {
        if argmax.is_empty() || r.err > max_err {
            max_err = r.err;
            argmax = r.x.clone();
        }
    }
    if !failures.is_empty() {
        max_err = f64::INFINITY;
        argmax = failures[0].x.clone();
    }
    Ok(VerificationReport { max_err, argmax, pass: max_err <= tol, tol, defect, rows, failures })
}

// ---------------------------------------------------------------------------
// JSON representation

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchitectureJson {
    pub variant: String,
    pub field: FuncSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer1: Option<FuncSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer2: Option<FuncSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<Vec<IntervalJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
}

impl From<&NodeArchitecture> for ArchitectureJson {
    fn from(a: &NodeArchitecture) -> Self {
        let (n_in, linear, layer1, layer2) = match &a.variant {
            Variant::Basic => (None, None, None, None),
            Variant::WithLinear(l) => (None, Some(l.clone()), None, None),
            Variant::Augmented { n_in } => (Some(*n_in), None, None, None),
            Variant::AugmentedWithLinear { n_in, linear } => (Some(*n_in), Some(linear.clone()), None, None),
            Variant::TwoLayer { layer1, layer2 } => (None, None, Some(layer1.clone()), Some(layer2.clone())),
        };
        ArchitectureJson {
            variant: a.variant.name().to_string(),
            field: a.field.spec().clone(),
            horizon: a.horizon,
            m: a.field.dim(),
            n_in,
            linear,
            layer1,
            layer2,
            input_domain: Some(a.input_domain.0.iter().map(IntervalJson::from).collect()),
            rtol: Some(a.config.rtol),
            atol: Some(a.config.atol),
        }
    }
}

impl TryFrom<ArchitectureJson> for NodeArchitecture {
    type Error = ArchError;

    fn try_from(j: ArchitectureJson) -> Result<Self, ArchError> {
        let field = VectorField::new(j.field)?;
        if field.dim() != j.m {
            return Err(ArchError::Shape(format!("m = {} but field has dimension {}", j.m, field.dim())));
        }
        let need = |o: Option<LinearLayer>| o.ok_or_else(|| ArchError::Shape("missing `linear`".into()));
        let need_n = |o: Option<usize>| o.ok_or_else(|| ArchError::Shape("missing `n_in`".into()));
        let variant = match j.variant.as_str() {
            "basic" => Variant::Basic,
            "with_linear" => Variant::WithLinear(need(j.linear)?),
            "augmented" => Variant::Augmented { n_in: need_n(j.n_in)? },
            "augmented_with_linear" => {
                Variant::AugmentedWithLinear { n_in: need_n(j.n_in)?, linear: need(j.linear)? }
            }
            "two_layer" => Variant::TwoLayer {
                layer1: j.layer1.ok_or_else(|| ArchError::Shape("missing `layer1`".into()))?,
                layer2: j.layer2.ok_or_else(|| ArchError::Shape("missing `layer2`".into()))?,
            },
            other => return Err(ArchError::Shape(format!("unknown variant `{other}`"))),
        };
        if let Some(l) = match &variant {
            Variant::WithLinear(l) | Variant::AugmentedWithLinear { linear: l, .. } => Some(l),
            _ => None,
        } {
            LinearLayer::new(l.matrix.clone(), l.offset.clone())?;
        }
        let mut arch = NodeArchitecture::new(variant, field, j.horizon)?;
        if let Some(d) = j.input_domain {
            arch = arch.with_input_domain(Domain(d.iter().map(Interval::from).collect()))?;
        }
        let mut cfg = IntegratorConfig::default();
        if let Some(r) = j.rtol {
            cfg.rtol = r;
        }
        if let Some(a) = j.atol {
            cfg.atol = a;
        }
        cfg.validate()?;
        Ok(arch.with_config(cfg))
    }
}

impl Serialize for NodeArchitecture {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ArchitectureJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for NodeArchitecture {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ArchitectureJson::deserialize(d)?;
        NodeArchitecture::try_from(j).map_err(serde::de::Error::custom)
    }
}

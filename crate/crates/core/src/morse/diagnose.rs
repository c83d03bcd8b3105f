//! Per-architecture embeddability verdicts from the available obstructions.

use serde::{Deserialize, Serialize};

use super::{
    classify_critical, find_critical_points, separation_obstruction_1d, topological_chart_1d, CriticalPoint,
    MorseError, SeparationWitness, CRITICAL_TOL,
};
use crate::funcspec::{FuncSpec, Grid};

/// Charts with a larger residual are not accepted as certificates.
const CHART_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "NON-EMBEDDABLE")]
    NonEmbeddable,
    #[serde(rename = "NO-OBSTRUCTION-FOUND")]
    NoObstructionFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MorseStatus {
    /// Topological Morse on the sampled domain with a topologically critical point.
    Established,
    NotEstablished,
    OutOfScope,
}

/// Why a critical point counts (or does not count) as topologically critical.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointCertificate {
    /// Nonsingular Hessian: Morse lemma applies.
    Nondegenerate { index: usize },
    /// 1-D, even order: explicit chart `Ψ = Ψ(p) ± v²`.
    EvenOrderChart { order: usize, index: usize, residual: f64 },
    /// 1-D, odd order: topologically regular, not critical.
    OddOrder { order: usize },
    /// Classification or chart construction failed.
    Inconclusive { reason: String },
    /// Degenerate point in dimension ≥ 2.
    DegenerateMultivariate,
}

impl PointCertificate {
    fn is_critical(&self) -> bool {
        matches!(self, PointCertificate::Nondegenerate { .. } | PointCertificate::EvenOrderChart { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedPoint {
    #[serde(flatten)]
    pub point: Option<CriticalPoint>,
    pub location: Vec<f64>,
    pub certificate: PointCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    pub component: usize,
    pub critical_points: Vec<CertifiedPoint>,
    pub status: MorseStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub node1: Verdict,
    pub node2: Verdict,
    pub node3: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosisReport {
    pub components: Vec<ComponentReport>,
    pub verdicts: Verdicts,
    pub recommendation: Option<String>,
    pub witnesses: Vec<String>,
    /// 1-D only: whether `Φ` increases strictly along the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<SeparationWitness>,
    pub notes: Vec<String>,
}

fn certify(psi: &FuncSpec, p: &[f64]) -> CertifiedPoint {
    let cp = match classify_critical(psi, p) {
        Ok(cp) => cp,
        Err(e) => {
            return CertifiedPoint {
                point: None,
                location: p.to_vec(),
                certificate: PointCertificate::Inconclusive { reason: e.to_string() },
            }
        }
    };
    let certificate = if !cp.degenerate {
        PointCertificate::Nondegenerate { index: cp.index }
    } else if psi.n_in() > 1 {
        PointCertificate::DegenerateMultivariate
    } else {
        let order = cp.order.unwrap_or(0);
        if order % 2 == 1 {
            PointCertificate::OddOrder { order }
        } else {
            match topological_chart_1d(psi, p[0], order) {
                Ok(ch) if ch.residual <= CHART_TOL => {
                    PointCertificate::EvenOrderChart { order, index: ch.index, residual: ch.residual }
                }
                Ok(ch) => PointCertificate::Inconclusive { reason: format!("chart residual {} too large", ch.residual) },
                Err(e) => PointCertificate::Inconclusive { reason: e.to_string() },
            }
        }
    };
    CertifiedPoint { location: p.to_vec(), point: Some(cp), certificate }
}

fn component_report(psi: &FuncSpec, i: usize, grid: &Grid) -> Result<ComponentReport, MorseError> {
    let found = find_critical_points(psi, grid, CRITICAL_TOL)?;
    let critical_points: Vec<CertifiedPoint> = found.points.iter().map(|p| certify(psi, p)).collect();
    let certs = || critical_points.iter().map(|c| &c.certificate);
    let status = if certs().any(|c| matches!(c, PointCertificate::DegenerateMultivariate)) {
        MorseStatus::OutOfScope
    } else if certs().all(|c| !matches!(c, PointCertificate::Inconclusive { .. })) && certs().any(|c| c.is_critical()) {
        MorseStatus::Established
    } else {
        MorseStatus::NotEstablished
    };
    Ok(ComponentReport { component: i, critical_points, status })
}

/// Run every applicable obstruction for `Φ` on `grid`.
///
/// NON-EMBEDDABLE is only reported with a certificate attached: an
/// established component, a monotonicity witness or a separation witness.
pub fn diagnose(phi: &FuncSpec, grid: &Grid) -> Result<DiagnosisReport, MorseError> {
    if grid.dim() != phi.n_in() {
        return Err(MorseError::Dimension { expected: phi.n_in(), got: grid.dim() });
    }
    let mut components = Vec::with_capacity(phi.n_out());
    let mut witnesses = Vec::new();
    for i in 0..phi.n_out() {
        let rep = component_report(&phi.scalar(i), i, grid)?;
        if rep.status == MorseStatus::Established {
            let p = rep.critical_points.iter().find(|c| c.certificate.is_critical()).expect("established has one");
            witnesses.push(format!(
                "component {i} is topological Morse with topologically critical point {:?} ({:?})",
                p.location, p.certificate
            ));
        }
        components.push(rep);
    }
    let morse = components.iter().any(|c| c.status == MorseStatus::Established);

    let mut notes = Vec::new();
    let (mut monotone, mut separation) = (None, None);
    let mut one_d = false;
    if phi.n_in() == 1 && phi.n_out() == 1 {
        let xs = grid.axis(0);
        let ys: Vec<Option<f64>> = xs.iter().map(|x| phi.eval_scalar(&[*x]).ok()).collect();
        let mut mono = true;
        for i in 0..xs.len() - 1 {
            if let (Some(a), Some(b)) = (ys[i], ys[i + 1]) {
                if a >= b {
                    witnesses.push(format!(
                        "not strictly increasing: Phi({}) = {a} >= Phi({}) = {b}",
                        xs[i],
                        xs[i + 1]
                    ));
                    mono = false;
                    break;
                }
            }
        }
        monotone = Some(mono);
        let sep = separation_obstruction_1d(phi, grid)?;
        if let Some(w) = &sep.witness {
            witnesses.push(format!(
                "fixed point {} separates x* = {} from Phi(x*) = {}",
                w.z, w.x_star, w.phi_x_star
            ));
        }
        notes.push(sep.note.to_string());
        one_d = !mono || sep.witness.is_some();
        separation = sep.witness;
    } else {
        notes.push("separation detector only runs for 1-D maps".into());
    }
    if components.iter().any(|c| c.status == MorseStatus::OutOfScope) {
        notes.push("degenerate critical points in dimension >= 2 are not classified".into());
    }

    let v = |hit: bool| if hit { Verdict::NonEmbeddable } else { Verdict::NoObstructionFound };
    let verdicts = Verdicts { node1: v(morse || one_d), node2: v(morse), node3: v(morse) };
    let obstructed = verdicts.node1 == Verdict::NonEmbeddable;
    let recommendation = obstructed.then(|| {
        "use the universal construction (augmented neural ODE with a linear layer), which embeds every map".to_string()
    });
    if !obstructed {
        notes.push("no obstruction found; this is not a proof of embeddability".into());
    }
    Ok(DiagnosisReport { components, verdicts, recommendation, witnesses, monotone, separation, notes })
}

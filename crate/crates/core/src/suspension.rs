//! Suspension flow on the mapping torus `(ℝⁿ × [0, T]) / (Φ(x), 0) ∼ (x, T)`.
//!
//! The flow is the unit-speed fiber flow, so no integration is involved;
//! all the content is in the quotient bookkeeping. Winding counts are exact
//! integers and the fiber time is recomputed as `t − nT` in one step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcspec::{FuncError, FuncSpec};
use crate::io::fmt_f64;

/// Largest number of compositions of `Φ` we are willing to perform.
pub const MAX_WINDING: i64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuspensionError {
    #[error("negative winding {0} requires the inverse map")]
    MissingInverse(i64),
    #[error("winding {0} exceeds the limit")]
    WindingLimit(f64),
    #[error("map must send R^n to R^n")]
    NotSquare,
    #[error("horizon T = {0} must be positive and finite")]
    Horizon(f64),
    #[error("supplied inverse fails Phi(Phi_inv(x)) = x at {x:?} (error {err})")]
    BadInverse { x: Vec<f64>, err: f64 },
    #[error("time {0} is not finite")]
    Time(f64),
    #[error(transparent)]
    Func(#[from] FuncError),
}

/// Canonical representative `(x, r)` with `0 ≤ r < T`, plus the number of
/// identifications applied to reach it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: Vec<f64>,
    pub r: f64,
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingTorus {
    phi: FuncSpec,
    phi_inv: Option<FuncSpec>,
    horizon: f64,
}

#[derive(Serialize, Deserialize)]
struct TorusJson {
    phi: FuncSpec,
    #[serde(default)]
    phi_inv: Option<FuncSpec>,
    #[serde(rename = "T")]
    horizon: f64,
}

impl Serialize for MappingTorus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TorusJson { phi: self.phi.clone(), phi_inv: self.phi_inv.clone(), horizon: self.horizon }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MappingTorus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = TorusJson::deserialize(d)?;
        MappingTorus::new(j.phi, j.phi_inv, j.horizon).map_err(serde::de::Error::custom)
    }
}

fn check_grid(phi_inv: &FuncSpec) -> Vec<Vec<f64>> {
    let n = phi_inv.n_in();
    let axes: Vec<Vec<f64>> = phi_inv
        .domain()
        .0
        .iter()
        .map(|iv| {
            let lo = if iv.lo.is_finite() { iv.lo } else { -2.0 };
            let hi = if iv.hi.is_finite() { iv.hi } else { 2.0 };
            let (lo, hi) = (lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo));
            (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
        })
        .collect();
    let mut pts = vec![vec![]];
    for d in 0..n {
        pts = pts.into_iter().flat_map(|p: Vec<f64>| axes[d].iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
    }
    pts
}

impl MappingTorus {
    pub fn new(phi: FuncSpec, phi_inv: Option<FuncSpec>, horizon: f64) -> Result<Self, SuspensionError> {
        if phi.n_in() != phi.n_out() {
            return Err(SuspensionError::NotSquare);
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SuspensionError::Horizon(horizon));
        }
        if let Some(inv) = &phi_inv {
            if inv.n_in() != phi.n_in() || inv.n_out() != phi.n_in() {
                return Err(SuspensionError::NotSquare);
            }
            for x in check_grid(inv) {
                let Ok(y) = inv.eval(&x) else { continue };
                let Ok(back) = phi.eval(&y) else { continue };
                let err = crate::numeric::max_dist(&back, &x);
                if err > 1e-8 * (1.0 + crate::numeric::max_norm(&x)) {
                    return Err(SuspensionError::BadInverse { x, err });
                }
            }
        }
        Ok(MappingTorus { phi, phi_inv, horizon })
    }

    pub fn phi(&self) -> &FuncSpec {
        &self.phi
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.phi.n_in()
    }

    /// `Φⁿ(x)` by repeated evaluation (`Φ⁻¹` for negative `n`).
    pub fn iterate(&self, n: i64, x: &[f64]) -> Result<Vec<f64>, SuspensionError> {
        if n.abs() > MAX_WINDING {
            return Err(SuspensionError::WindingLimit(n as f64));
        }
        let map = if n >= 0 { &self.phi } else { self.phi_inv.as_ref().ok_or(SuspensionError::MissingInverse(n))? };
        let mut y = x.to_vec();
        for _ in 0..n.unsigned_abs() {
            y = map.eval(&y)?;
        }
        Ok(y)
    }

    /// `t = nT + r` with `0 ≤ r < T`; a remainder within rounding of `T`
    /// counts as a full turn.
    fn split(&self, t: f64) -> Result<(i64, f64), SuspensionError> {
        if !t.is_finite() {
            return Err(SuspensionError::Time(t));
        }
        let big_t = self.horizon;
        let q = (t / big_t).floor();
        if q.abs() > MAX_WINDING as f64 {
            return Err(SuspensionError::WindingLimit(q));
        }
        let mut n = q as i64;
        let mut r = t - n as f64 * big_t;
        let snap = 8.0 * f64::EPSILON * t.abs().max(big_t);
        if r < 0.0 {
            if -r <= snap {
                r = 0.0;
            } else {
                n -= 1;
                r += big_t;
            }
        }
        if big_t - r <= snap {
            n += 1;
            r = 0.0;
        }
        Ok((n, r))
    }

    /// Canonical representative of the class of `(x, t)` for any real `t`.
    pub fn canonicalize(&self, x: &[f64], t: f64) -> Result<TorusPoint, SuspensionError> {
        let (n, r) = self.split(t)?;
        Ok(TorusPoint { x: self.iterate(n, x)?, r, k: n })
    }

    /// Flow for time `s`; the winding count accumulates.
    pub fn suspension_flow(&self, start: &TorusPoint, s: f64) -> Result<TorusPoint, SuspensionError> {
        let p = self.canonicalize(&start.x, start.r + s)?;
        Ok(TorusPoint { k: start.k + p.k, ..p })
    }

    /// Deck transformation `(x, t) ↦ (Φⁿ(x), t − nT)` of the covering space.
    pub fn automorphism(&self, n: i64, x: &[f64], t: f64) -> Result<(Vec<f64>, f64), SuspensionError> {
        Ok((self.iterate(n, x)?, t - n as f64 * self.horizon))
    }

    /// `samples + 1` equally spaced points along the flow as CSV
    /// `s,k,r,x1..xn`.
    pub fn trajectory_csv(&self, start: &TorusPoint, duration: f64, samples: usize) -> Result<String, SuspensionError> {
        let n = self.dim();
        let mut out: Vec<String> = ["s", "k", "r"].iter().map(|s| s.to_string()).collect();
        out.extend((1..=n).map(|i| format!("x{i}")));
        let mut csv = out.join(",") + "\n";
        let samples = samples.max(1);
        for i in 0..=samples {
            let s = duration * i as f64 / samples as f64;
            let p = self.suspension_flow(start, s)?;
            let mut row = vec![fmt_f64(s), p.k.to_string(), fmt_f64(p.r)];
            row.extend(p.x.iter().map(|v| fmt_f64(*v)));
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        Ok(csv)
    }
}

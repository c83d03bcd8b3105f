//! Functional equations of time-T maps: Julia and Abel residuals, closed-form
//! 1-D flows, formal series solutions and the iterate limit.

mod limit;
mod rfunction;
mod series;

pub use limit::{principal_solution_limit, LimitError, LimitPoint, LimitReport, DEFAULT_LIMIT_TOL, DEFAULT_N_MAX};
pub use rfunction::{jabotinsky_flow, jabotinsky_flow_with, FlowError, RFunction};
pub use series::{
    iterative_logarithm, julia_series_residual, monomial_series_solution, EliminationStep, IterativeLog,
    MonomialCertificate, PowerSeries, SeriesError,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::funcspec::{FuncError, FuncSpec, Grid};
use crate::io::fmt_f64;

/// Per-point residuals of a functional equation over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max: f64,
    pub argmax: Vec<f64>,
    pub points: Vec<(Vec<f64>, f64)>,
    /// Grid points where `Φ(x)` left the domain of the other map.
    pub escapes: Vec<(Vec<f64>, String)>,
}

impl ResidualReport {
    fn collect(results: Vec<(Vec<f64>, Result<f64, FuncError>)>) -> Self {
        let mut r = ResidualReport { max: 0.0, argmax: Vec::new(), points: Vec::new(), escapes: Vec::new() };
        for (x, res) in results {
            match res {
                Ok(v) => {
                    if r.argmax.is_empty() || v > r.max {
                        r.max = v;
                        r.argmax = x.clone();
                    }
                    r.points.push((x, v));
                }
                Err(e) => r.escapes.push((x, e.to_string())),
            }
        }
        r
    }

    pub fn per_point_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.0.len());
        let mut out: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        out.push("residual".into());
        let mut s = out.join(",") + "\n";
        for (x, v) in &self.points {
            let row: Vec<String> = x.iter().chain(std::iter::once(v)).map(|v| fmt_f64(*v)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

impl Serialize for ResidualReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct J<'a> {
            max: f64,
            argmax: &'a [f64],
            escapes: Vec<serde_json::Value>,
            per_point_csv: String,
        }
        J {
            max: self.max,
            argmax: &self.argmax,
            escapes: self.escapes.iter().map(|(x, e)| serde_json::json!({"x": x, "error": e})).collect(),
            per_point_csv: self.per_point_csv(),
        }
        .serialize(s)
    }
}

/// `max_x ‖J_Φ(x)·f(x) − f(Φ(x))‖∞` over the grid.
pub fn julia_residual(f: &FuncSpec, phi: &FuncSpec, grid: &Grid) -> Result<ResidualReport, FuncError> {
    let m = phi.n_in();
    if phi.n_out() != m || f.n_in() != m || f.n_out() != m || grid.dim() != m {
        return Err(FuncError::Invalid("Julia residual needs f, Phi: R^m -> R^m and an m-dimensional grid".into()));
    }
    let jac = phi.jacobian();
    let results = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let r = (|| {
                let fx = f.eval(&x)?;
                let j = jac.eval(&x)?;
                let fphi = f.eval(&phi.eval(&x)?)?;
                Ok((0..m)
                    .map(|i| ((0..m).map(|k| j[(i, k)] * fx[k]).sum::<f64>() - fphi[i]).abs())
                    .fold(0.0, f64::max))
            })();
            (x, r)
        })
        .collect();
    Ok(ResidualReport::collect(results))
}

/// `max_x |r(Φ(x)) − r(x) − c|` over the grid.
pub fn abel_residual(r: &FuncSpec, phi: &FuncSpec, c: f64, grid: &Grid) -> Result<ResidualReport, FuncError> {
    let m = phi.n_in();
    if phi.n_out() != m || r.n_in() != m || r.n_out() != 1 || grid.dim() != m {
        return Err(FuncError::Invalid("Abel residual needs r: R^m -> R, Phi: R^m -> R^m".into()));
    }
    let results = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let v = (|| Ok((r.eval_scalar(&phi.eval(&x)?)? - r.eval_scalar(&x)? - c).abs()))();
            (x, v)
        })
        .collect();
    Ok(ResidualReport::collect(results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspec::{Domain, Interval};

    fn grid(lo: f64, hi: f64) -> Grid {
        Grid::new(Domain(vec![Interval::open(lo, hi)]), vec![41], 1e-3).unwrap()
    }

    #[test]
    fn julia_examples() {
        let moebius = FuncSpec::parse("phi", 1, &["x0/(1-x0)"]).unwrap();
        let sq = FuncSpec::parse("f", 1, &["x0^2"]).unwrap();
        assert!(julia_residual(&sq, &moebius, &grid(-0.5, 0.5)).unwrap().max <= 1e-12);

        let pos = Domain(vec![Interval::positive()]);
        let f = FuncSpec::parse_on("f", 1, &["0.6931471805599453*x0*ln(x0)"], pos.clone()).unwrap();
        let phi = FuncSpec::parse_on("phi", 1, &["x0^2"], pos).unwrap();
        assert!(julia_residual(&f, &phi, &grid(0.5, 2.0)).unwrap().max <= 1e-12);

        let zero = FuncSpec::parse("f", 1, &["0"]).unwrap();
        let r = julia_residual(&zero, &moebius, &grid(-0.5, 0.5)).unwrap();
        assert_eq!(r.max, 0.0);
        assert!(r.per_point_csv().starts_with("x1,residual\n"));
    }

    #[test]
    fn julia_reports_escapes() {
        let f = FuncSpec::parse_on("f", 1, &["x0"], Domain(vec![Interval::open(0.0, 1.0)])).unwrap();
        let phi = FuncSpec::parse("phi", 1, &["2*x0"]).unwrap();
        let r = julia_residual(&f, &phi, &grid(0.1, 0.9)).unwrap();
        assert!(!r.escapes.is_empty() && !r.points.is_empty());
    }

    #[test]
    fn abel_examples() {
        let pos = Domain(vec![Interval::positive()]);
        let ln = FuncSpec::parse_on("r", 1, &["ln(x0)"], pos.clone()).unwrap();
        let ex = FuncSpec::parse_on("phi", 1, &["2.718281828459045*x0"], pos.clone()).unwrap();
        assert!(abel_residual(&ln, &ex, 1.0, &grid(0.5, 3.0)).unwrap().max <= 1e-14);
        let id = FuncSpec::parse("r", 1, &["x0"]).unwrap();
        let shift = FuncSpec::parse("phi", 1, &["x0 + 3"]).unwrap();
        // exact up to the rounding of x + 3
        assert!(abel_residual(&id, &shift, 3.0, &grid(-2.0, 2.0)).unwrap().max <= 4.0 * f64::EPSILON);
        let sq = FuncSpec::parse_on("phi", 1, &["x0^2"], pos).unwrap();
        assert!(abel_residual(&ln, &sq, 1.0, &grid(0.5, 3.0)).unwrap().max > 0.5);
    }
}

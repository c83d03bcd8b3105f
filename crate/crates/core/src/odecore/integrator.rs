use super::{IntegratorConfig, Method, OdeError, Status, Trajectory, VectorField};
use crate::numeric::max_norm;

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights are the last row of A; E = b5 − b4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const STEP_FLOOR: f64 = 1e-13;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Integrate `dh/dt = f(h, t)`, `h(0) = x0` on `[0, horizon]`.
///
/// Blow-up and exhausted step budgets end the trajectory with the
/// corresponding [`Status`]; field evaluation failures are errors.
pub fn integrate(
    field: &VectorField,
    x0: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    cfg.validate()?;
    if x0.len() != field.dim() {
        return Err(OdeError::Invalid(format!(
            "initial state has dimension {}, field has {}",
            x0.len(),
            field.dim()
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(OdeError::Invalid("horizon must be positive and finite".into()));
    }
    let mut f0 = vec![0.0; field.dim()];
    field.eval(0.0, x0, &mut f0)?;
    match cfg.method {
        Method::Rk4 { steps } => rk4(field, x0, horizon, steps, cfg),
        Method::DormandPrince => dopri(field, x0, horizon, cfg, f0),
    }
}

/// Final state of the time-T map; blow-up and step-limit become errors.
pub fn time_t_map(
    field: &VectorField,
    x: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, OdeError> {
    integrate(field, x, horizon, cfg)?.into_result()
}

fn axpy_into(out: &mut [f64], y: &[f64], h: f64, terms: &[(&[f64], f64)]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, w) in terms {
            acc += w * k[i];
        }
        *o = y[i] + h * acc;
    }
}

fn rk4(
    field: &VectorField,
    x0: &[f64],
    horizon: f64,
    steps: usize,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, OdeError> {
    let m = field.dim();
    let h = horizon / steps as f64;
    let mut traj = Trajectory { times: vec![0.0], states: vec![x0.to_vec()], status: Status::Completed };
    let mut y = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    for i in 0..steps {
        let t = i as f64 * h;
        field.eval(t, &y, &mut k1)?;
        axpy_into(&mut tmp, &y, 0.5 * h, &[(&k1, 1.0)]);
        field.eval(t + 0.5 * h, &tmp, &mut k2)?;
        axpy_into(&mut tmp, &y, 0.5 * h, &[(&k2, 1.0)]);
        field.eval(t + 0.5 * h, &tmp, &mut k3)?;
        axpy_into(&mut tmp, &y, h, &[(&k3, 1.0)]);
        field.eval(t + h, &tmp, &mut k4)?;
        let ynew: Vec<f64> =
            (0..m).map(|j| y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).collect();
        let t_new = if i + 1 == steps { horizon } else { (i + 1) as f64 * h };
        let norm = max_norm(&ynew);
        if !norm.is_finite() || norm > cfg.blowup_bound {
            traj.status = Status::BlewUp { t_star: t };
            return Ok(traj);
        }
        y = ynew;
        traj.times.push(t_new);
        traj.states.push(y.clone());
    }
    Ok(traj)
}

fn error_norm(err: &[f64], y: &[f64], ynew: &[f64], cfg: &IntegratorConfig) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y.iter().zip(ynew))
        .map(|(e, (a, b))| {
            let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step(
    field: &VectorField,
    y0: &[f64],
    f0: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
) -> f64 {
    let scale: Vec<f64> = y0.iter().map(|v| cfg.atol + cfg.rtol * v.abs()).collect();
    let rms = |v: &[f64]| {
        (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(horizon);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    if field.eval(h0, &y1, &mut f1).is_err() {
        return h0 * 0.01;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| (a - b) / h0).collect();
    let d2 = rms(&diff);
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(horizon)
}

fn dopri(
    field: &VectorField,
    x0: &[f64],
    horizon: f64,
    cfg: &IntegratorConfig,
    f0: Vec<f64>,
) -> Result<Trajectory, OdeError> {
    let m = field.dim();
    let floor = STEP_FLOOR * horizon;
    let mut traj = Trajectory { times: vec![0.0], states: vec![x0.to_vec()], status: Status::Completed };
    let mut t = 0.0;
    let mut y = x0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; m]; 7];
    k[0] = f0;
    let mut h = initial_step(field, &y, &k[0], horizon, cfg);
    let mut stage = vec![0.0; m];
    let mut ynew = vec![0.0; m];
    let mut err = vec![0.0; m];
    let mut steps = 0usize;
    let mut last_failure: Option<OdeError> = None;

    while t < horizon {
        if steps >= cfg.max_steps {
            traj.status = Status::StepLimit { t };
            return Ok(traj);
        }
        steps += 1;
        let last = t + h >= horizon;
        let h_try = if last { horizon - t } else { h };
        if h_try < floor && !last {
            if let Some(e) = last_failure.take() {
                return Err(e);
            }
            traj.status = if explosive(field, t, &y, floor) {
                Status::BlewUp { t_star: t }
            } else {
                Status::StepLimit { t }
            };
            return Ok(traj);
        }

        // stages 2..7
        let mut failed = None;
        for s in 1..7 {
            let terms: Vec<(&[f64], f64)> = (0..s).map(|j| (k[j].as_slice(), A[s][j])).collect();
            axpy_into(&mut stage, &y, h_try, &terms);
            if let Err(e) = field.eval(t + C[s] * h_try, &stage, &mut k[s]) {
                failed = Some(e);
                break;
            }
            if s == 6 {
                ynew.copy_from_slice(&stage);
            }
        }
        if let Some(e) = failed {
            // Stage left the field's domain: shrink and retry.
            last_failure = Some(e);
            h = 0.25 * h_try;
            continue;
        }
        for i in 0..m {
            err[i] = h_try * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
        }
        let en = error_norm(&err, &y, &ynew, cfg);
        if !en.is_finite() || en > 1.0 {
            let fac = if en.is_finite() { (SAFETY * en.powf(-0.2)).max(FAC_MIN) } else { FAC_MIN };
            h = h_try * fac;
            continue;
        }
        last_failure = None;
        t = if last { horizon } else { t + h_try };
        std::mem::swap(&mut y, &mut ynew);
        // FSAL: the last stage is f at the new point.
        k.swap(0, 6);
        traj.times.push(t);
        traj.states.push(y.clone());
        if max_norm(&y) > cfg.blowup_bound {
            traj.status = Status::BlewUp { t_star: t };
            return Ok(traj);
        }
        let fac = if en == 0.0 { FAC_MAX } else { (SAFETY * en.powf(-0.2)).clamp(FAC_MIN, FAC_MAX) };
        h = h_try * fac;
    }
    Ok(traj)
}

/// Outward growth on a time scale below the resolvable step: the solution
/// leaves every bounded set before the integrator can follow it.
fn explosive(field: &VectorField, t: f64, y: &[f64], floor: f64) -> bool {
    let mut f = vec![0.0; y.len()];
    if field.eval(t, y, &mut f).is_err() {
        return false;
    }
    let outward: f64 = y.iter().zip(&f).map(|(a, b)| a * b).sum();
    let (ny, nf) = (max_norm(y), max_norm(&f));
    outward > 0.0 && nf > 0.0 && ny / nf < 1e3 * floor
}

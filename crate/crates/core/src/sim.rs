//! Fixed-step implicit Euler for linear MNA systems and for their explicit
//! ODE reductions, consistent initialization, and the perturbation probe.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{pseudo_inverse, shuffle, LinalgError, Lu};
use crate::matrix::Matrix;
use crate::mna::{ExplicitOde, MnaSystem};
use crate::waveform::Waveform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("step failure: {0}")]
    StepFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientResult {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// One state vector per time point.
    pub states: Vec<Vec<f64>>,
    pub h: f64,
    pub method: String,
    /// `‖(E + hA) z − rhs‖∞` per accepted step.
    pub residuals: Vec<f64>,
}

impl TransientResult {
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|z| z[k]).collect())
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Uniform grid covering `[t0, t_end]` with steps no longer than `h`.
fn grid(t0: f64, t_end: f64, h: f64) -> Result<(usize, f64), SimError> {
    if !(h > 0.0) || !h.is_finite() || !t0.is_finite() || !t_end.is_finite() {
        return Err(SimError::InvalidInput("step size and interval must be finite, h > 0".into()));
    }
    let span = t_end - t0;
    if span <= 0.0 {
        return Ok((0, h));
    }
    let steps = ((span / h) - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, span / steps as f64))
}

/// All algebraic constraints `C z = D σ(t)` hidden in the pencil, plus the
/// variables that never appear differentiated.
#[derive(Debug, Clone)]
pub struct Constraints {
    pub c: Matrix<f64>,
    pub d: Matrix<f64>,
    pub algebraic_vars: Vec<usize>,
}

pub fn constraints(sys: &MnaSystem) -> Result<Constraints, SimError> {
    let sh = shuffle(&sys.e, &sys.a, &sys.f, Some(&sys.signals.shift()), None)?;
    let algebraic_vars = (0..sys.size()).filter(|&j| (0..sys.size()).all(|i| sys.e[(i, j)] == 0.0)).collect();
    Ok(Constraints { c: sh.constraints, d: sh.constraint_rhs, algebraic_vars })
}

/// Projects `guess` onto `{z : C z = D σ(t0)}`: first by moving only the
/// algebraic variables (least squares), then, if constraints remain
/// violated, by a minimum-norm correction of all variables.
pub fn consistent_initial(sys: &MnaSystem, t0: f64, guess: &[f64]) -> Result<Vec<f64>, SimError> {
    let n = sys.size();
    if guess.len() != n {
        return Err(SimError::InvalidInput(format!("initial guess has {} entries, expected {n}", guess.len())));
    }
    let cons = constraints(sys)?;
    if cons.c.rows() == 0 {
        return Ok(guess.to_vec());
    }
    let target = cons.d.mul_vec(&sys.signals.eval(t0));
    let defect = |z: &[f64]| -> Vec<f64> { cons.c.mul_vec(z).iter().zip(&target).map(|(a, b)| b - a).collect() };
    let scale = 1.0 + target.iter().fold(0.0f64, |m, x| m.max(x.abs())) + cons.c.max_abs();
    let ok = |d: &[f64]| d.iter().all(|x| x.abs() <= 1e-10 * scale);

    let mut z = guess.to_vec();
    if !cons.algebraic_vars.is_empty() {
        let cn = cons.c.select_cols(&cons.algebraic_vars);
        let delta = pseudo_inverse(&cn, None)?.mul_vec(&defect(&z));
        for (k, &j) in cons.algebraic_vars.iter().enumerate() {
            z[j] += delta[k];
        }
    }
    let d = defect(&z);
    if !ok(&d) {
        let delta = pseudo_inverse(&cons.c, None)?.mul_vec(&d);
        for (zj, dj) in z.iter_mut().zip(delta) {
            *zj += dj;
        }
    }
    Ok(z)
}

/// Implicit Euler `(E + hA) z_{n+1} = E z_n + h f(t_{n+1})` after making
/// `guess` (zeros if absent) consistent.
pub fn integrate(sys: &MnaSystem, t0: f64, t_end: f64, h: f64, guess: Option<&[f64]>) -> Result<TransientResult, SimError> {
    let n = sys.size();
    let (steps, h) = grid(t0, t_end, h)?;
    let zeros = vec![0.0; n];
    let z0 = consistent_initial(sys, t0, guess.unwrap_or(&zeros))?;
    let m = &sys.e + &sys.a.scale(&h);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let lu = Lu::new(&m, 1e-13 * scale).map_err(|_| SimError::StepFailure(format!("E + hA singular at h = {h:e}")))?;
    let mut out = TransientResult {
        names: sys.layout.names.clone(),
        times: vec![t0],
        states: vec![z0],
        h,
        method: "implicit-euler".into(),
        residuals: vec![],
    };
    for k in 1..=steps {
        let t = t0 + k as f64 * h;
        let prev = out.states.last().expect("non-empty");
        let ez = sys.e.mul_vec(prev);
        let f = sys.forcing(t);
        let rhs: Vec<f64> = ez.iter().zip(&f).map(|(a, b)| a + h * b).collect();
        let z = lu.solve_vec(&rhs);
        let res = m.mul_vec(&z).iter().zip(&rhs).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if !res.is_finite() {
            return Err(SimError::StepFailure(format!("non-finite state at t = {t:e}")));
        }
        out.times.push(t);
        out.states.push(z);
        out.residuals.push(res);
    }
    Ok(out)
}

/// Implicit Euler on `z' = J z + J_σ σ(t)` from `z0` (used as given).
pub fn integrate_ode(
    ode: &ExplicitOde,
    sys: &MnaSystem,
    t0: f64,
    t_end: f64,
    h: f64,
    z0: &[f64],
) -> Result<TransientResult, SimError> {
    let n = ode.j.rows();
    let (steps, h) = grid(t0, t_end, h)?;
    let m = &Matrix::identity(n) - &ode.j.scale(&h);
    let lu = Lu::new(&m, 1e-13).map_err(|_| SimError::StepFailure(format!("I − hJ singular at h = {h:e}")))?;
    let mut out = TransientResult {
        names: ode.names.clone(),
        times: vec![t0],
        states: vec![z0.to_vec()],
        h,
        method: "implicit-euler-ode".into(),
        residuals: vec![],
    };
    for k in 1..=steps {
        let t = t0 + k as f64 * h;
        let prev = out.states.last().expect("non-empty");
        let js = ode.j_sigma.mul_vec(&sys.signals.eval(t));
        let rhs: Vec<f64> = prev.iter().zip(&js).map(|(a, b)| a + h * b).collect();
        let z = lu.solve_vec(&rhs);
        let res = m.mul_vec(&z).iter().zip(&rhs).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        out.times.push(t);
        out.states.push(z);
        out.residuals.push(res);
    }
    Ok(out)
}

/// Maximum pointwise difference between two runs on the same grid.
pub fn max_difference(a: &TransientResult, b: &TransientResult) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoGridCheck {
    pub h: f64,
    pub diff_h: f64,
    pub diff_half: f64,
    pub observed_order: Option<f64>,
    /// Differences at rounding level count as agreement (order undefined).
    pub pass: bool,
}

/// Runs the DAE and its explicit ODE at `h` and `h/2` from the same
/// consistent start and checks that the gap shrinks with order ≥ 0.9.
pub fn two_grid_check(sys: &MnaSystem, ode: &ExplicitOde, t_end: f64, h: f64) -> Result<TwoGridCheck, SimError> {
    let z0 = consistent_initial(sys, 0.0, &vec![0.0; sys.size()])?;
    let gap = |h: f64| -> Result<f64, SimError> {
        let dae = integrate(sys, 0.0, t_end, h, Some(&z0))?;
        let ode_run = integrate_ode(ode, sys, 0.0, t_end, h, &z0)?;
        Ok(max_difference(&dae, &ode_run))
    };
    let d1 = gap(h)?;
    let d2 = gap(h / 2.0)?;
    let scale = z0.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let exact = d1 <= 1e-10 * scale && d2 <= 1e-10 * scale;
    let order = (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).log2());
    let pass = exact || order.is_some_and(|p| p >= 0.9);
    Ok(TwoGridCheck { h, diff_h: d1, diff_half: d2, observed_order: order, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub epsilon: f64,
    pub omega: f64,
    /// Max deviation per unknown.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// Always "empirical": the exponent is a heuristic, not a proof.
    pub label: String,
    pub source: String,
    pub names: Vec<String>,
    pub rows: Vec<ProbeRow>,
    /// Per `ε`: fitted exponent of `max deviation ~ ε ω^p`, per unknown and overall.
    pub fits: Vec<ProbeFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFit {
    pub epsilon: f64,
    pub p_overall: Option<f64>,
    pub p_per_unknown: Vec<Option<f64>>,
}

impl ProbeReport {
    pub fn p_for(&self, epsilon: f64, name: &str) -> Option<f64> {
        let k = self.names.iter().position(|n| n == name)?;
        self.fits.iter().find(|f| f.epsilon == epsilon)?.p_per_unknown[k]
    }
}

pub const PROBE_OMEGAS: [f64; 3] = [10.0, 100.0, 1000.0];

/// Least-squares slope of `log y` against `log x`; `None` if any `y` is 0.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if y.iter().any(|v| !(*v > 0.0)) || x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Adds `ε·sin(ωt)` to source `source` and measures the deviation from the
/// unperturbed run over four periods (`h = T/2000`), for each `ε` and `ω`.
pub fn perturbation_probe(sys: &MnaSystem, source: &str, epsilons: &[f64], omegas: &[f64]) -> Result<ProbeReport, SimError> {
    let ch = sys
        .signals
        .find(source)
        .ok_or_else(|| SimError::InvalidInput(format!("no source named '{source}'")))?;
    let n = sys.size();
    let mut rows = Vec::new();
    for &eps in epsilons {
        for &omega in omegas {
            let period = std::f64::consts::TAU / omega;
            let (t_end, h) = (4.0 * period, period / 2000.0);
            let base = integrate(sys, 0.0, t_end, h, None)?;
            let mut pert = sys.clone();
            pert.signals.channels[ch].waveform.0.push(Waveform::sin_omega(eps, omega));
            let run = integrate(&pert, 0.0, t_end, h, None)?;
            let deviation: Vec<f64> = (0..n)
                .map(|k| base.states.iter().zip(&run.states).map(|(a, b)| (a[k] - b[k]).abs()).fold(0.0, f64::max))
                .collect();
            let max_deviation = deviation.iter().copied().fold(0.0, f64::max);
            rows.push(ProbeRow { epsilon: eps, omega, deviation, max_deviation });
        }
    }
    let fits = epsilons
        .iter()
        .map(|&eps| {
            let rs: Vec<&ProbeRow> = rows.iter().filter(|r| r.epsilon == eps).collect();
            let om: Vec<f64> = rs.iter().map(|r| r.omega).collect();
            let overall: Vec<f64> = rs.iter().map(|r| r.max_deviation).collect();
            ProbeFit {
                epsilon: eps,
                p_overall: loglog_slope(&om, &overall),
                p_per_unknown: (0..n)
                    .map(|k| loglog_slope(&om, &rs.iter().map(|r| r.deviation[k]).collect::<Vec<_>>()))
                    .collect(),
            }
        })
        .collect();
    Ok(ProbeReport { label: "empirical".into(), source: source.into(), names: sys.layout.names.clone(), rows, fits })
}

//! Integration of `ẋ = X(x)` and drift checks of candidate constants.

use serde::Serialize;

use crate::expr::EvalError;
use crate::geometry::{FormValue, PForm, Scalar, VectorField};
use crate::par;
use crate::sample::Region;

/// Right-hand side `y ↦ ẏ` of an autonomous system.
type Rhs<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, EvalError> + 'a;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4 { step: f64 },
    /// Fehlberg 4(5) embedded pair with adaptive step.
    Rkf45 { abs_tol: f64, rel_tol: f64 },
}

impl Method {
    /// Benchmark default: RK4 with `h = 1e-3`.
    pub fn rk4() -> Method {
        Method::Rk4 { step: 1e-3 }
    }

    pub fn rkf45() -> Method {
        Method::Rkf45 {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub method: Method,
    /// Seed of the run this trajectory belongs to, if any.
    pub seed: Option<u64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }

    /// Keeps every `k`-th sample plus the final one.
    pub fn thinned(&self, k: usize) -> Trajectory {
        let k = k.max(1);
        let last = self.len() - 1;
        let keep: Vec<usize> = (0..self.len()).filter(|i| i % k == 0 || *i == last).collect();
        Trajectory {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            states: keep.iter().map(|&i| self.states[i].clone()).collect(),
            method: self.method,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("state left the chart box at t = {}", .partial.final_time())]
    LeftBox { partial: Box<Trajectory> },
    #[error("adaptive step underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("initial state has {found} components, field has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Integrates `X` from `x0` over `[0, t_end]`. With a `region`, leaving it
/// aborts with the partial trajectory.
pub fn integrate(
    x: &VectorField,
    x0: &[f64],
    t_end: f64,
    method: Method,
    region: Option<&Region>,
) -> Result<Trajectory, FlowError> {
    integrate_rule(&|s: &[f64]| x.eval(s), x0, t_end, method, region, x.dim())
}

fn integrate_rule(
    f: &Rhs,
    x0: &[f64],
    t_end: f64,
    method: Method,
    region: Option<&Region>,
    dim: usize,
) -> Result<Trajectory, FlowError> {
    if x0.len() != dim {
        return Err(FlowError::Dimension {
            expected: dim,
            found: x0.len(),
        });
    }
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        method,
        seed: None,
    };
    let check = |traj: Trajectory| -> Result<Trajectory, FlowError> {
        let s = traj.last_state();
        if s.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { t: traj.final_time() });
        }
        match region {
            Some(r) if !r.contains(s) => Err(FlowError::LeftBox {
                partial: Box::new(traj),
            }),
            _ => Ok(traj),
        }
    };
    if t_end <= 0.0 {
        return Ok(traj);
    }
    match method {
        Method::Rk4 { step } => {
            let n = ((t_end / step) - 1e-9).ceil().max(1.0) as usize;
            let h = t_end / n as f64;
            let mut y = x0.to_vec();
            for k in 1..=n {
                y = rk4_step(f, &y, h)?;
                traj.times.push(if k == n { t_end } else { k as f64 * h });
                traj.states.push(y.clone());
                traj = check(traj)?;
            }
        }
        Method::Rkf45 { abs_tol, rel_tol } => {
            let mut t = 0.0;
            let mut y = x0.to_vec();
            let mut h = (t_end / 100.0).min(1e-2);
            while t < t_end {
                h = h.min(t_end - t);
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(FlowError::StepUnderflow { t });
                }
                let (next, err) = rkf45_step(f, &y, h)?;
                let scale = y.iter().zip(&next).map(|(a, b)| abs_tol + rel_tol * a.abs().max(b.abs()));
                let norm = err.iter().zip(scale).fold(0.0f64, |m, (e, s)| m.max(e.abs() / s));
                if norm.is_nan() {
                    return Err(FlowError::NonFinite { t });
                }
                if norm <= 1.0 {
                    t = if t_end - t - h <= 1e-15 * t_end { t_end } else { t + h };
                    y = next;
                    traj.times.push(t);
                    traj.states.push(y.clone());
                    traj = check(traj)?;
                }
                let factor = if norm == 0.0 { 5.0 } else { 0.9 * norm.powf(-0.2) };
                h *= factor.clamp(0.2, 5.0);
            }
        }
    }
    Ok(traj)
}

fn axpy(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(u, v)| u + a * v).collect()
}

pub(crate) fn rk4_step(f: &Rhs, y: &[f64], h: f64) -> Result<Vec<f64>, EvalError> {
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * h, &k1))?;
    let k3 = f(&axpy(y, 0.5 * h, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Fehlberg tableau; returns the fifth-order update (local extrapolation)
/// and the 4/5 difference used for step control.
fn rkf45_step(
    f: &Rhs,
    y: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    const A: [&[f64]; 6] = [
        &[],
        &[1.0 / 4.0],
        &[3.0 / 32.0, 9.0 / 32.0],
        &[1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0],
        &[439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0],
        &[-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
    ];
    const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];
    const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
    let n = y.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(6);
    for row in A {
        let mut arg = y.to_vec();
        for (a, k) in row.iter().zip(&ks) {
            for i in 0..n {
                arg[i] += h * a * k[i];
            }
        }
        ks.push(f(&arg)?);
    }
    let mut y5 = y.to_vec();
    let mut err = vec![0.0; n];
    for (s, k) in ks.iter().enumerate() {
        for i in 0..n {
            y5[i] += h * B5[s] * k[i];
            err[i] += h * (B5[s] - B4[s]) * k[i];
        }
    }
    Ok((y5, err))
}

/// Time-`t` flow `φ_t(x)` and its Jacobian `Dφ_t(x)`, by RK4 on the state
/// together with the variational equation `J̇ = DX(φ) J`.
pub fn flow_with_jacobian(x: &VectorField, at: &[f64], t: f64, steps: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), EvalError> {
    let n = at.len();
    let rhs = |s: &[f64]| -> Result<Vec<f64>, EvalError> {
        let (p, j) = s.split_at(n);
        let v = x.eval(p)?;
        let dx = x.jacobian(p)?;
        let mut out = v;
        for r in 0..n {
            for c in 0..n {
                out.push((0..n).map(|k| dx[r][k] * j[k * n + c]).sum());
            }
        }
        Ok(out)
    };
    let mut s = at.to_vec();
    for r in 0..n {
        for c in 0..n {
            s.push(if r == c { 1.0 } else { 0.0 });
        }
    }
    let h = t / steps.max(1) as f64;
    for _ in 0..steps.max(1) {
        s = rk4_step(&rhs, &s, h)?;
    }
    let jac = (0..n).map(|r| s[n + r * n..n + (r + 1) * n].to_vec()).collect();
    s.truncate(n);
    Ok((s, jac))
}

/// `(ℒ_X α)_x` from central differences `(φ_ε*α − φ_{−ε}*α) / 2ε` of
/// pullbacks along the flow, at `ε` and `ε/2` combined by one Richardson
/// step. Each flow map is one RK4 step with its variational equation.
pub fn lie_derivative_by_flow(x: &VectorField, alpha: &PForm, at: &[f64], eps: f64) -> Result<FormValue, EvalError> {
    let pulled = |t: f64| -> Result<FormValue, EvalError> {
        let (p, jac) = flow_with_jacobian(x, at, t, 1)?;
        Ok(alpha.eval(&p)?.pull_back(&jac, alpha.chart().clone()))
    };
    let central = |e: f64| -> Result<FormValue, EvalError> { Ok(pulled(e)?.sub(&pulled(-e)?).scale(1.0 / (2.0 * e))) };
    let (coarse, fine) = (central(eps)?, central(eps / 2.0)?);
    Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
}

/// Deviation of a quantity from its initial value along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftReport {
    pub quantity: String,
    pub initial: f64,
    pub max_abs_deviation: f64,
    /// Absolute deviation over `max(1, |initial|)`.
    pub max_rel_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Drift of `f` along `traj`, judged on the relative deviation.
pub fn drift(name: &str, f: &Scalar, traj: &Trajectory, tolerance: f64) -> Result<DriftReport, EvalError> {
    let values = par::try_map(&traj.states, |s| f.eval(s))?;
    let initial = values[0];
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max((v - initial).abs()));
    let rel = max_abs / initial.abs().max(1.0);
    Ok(DriftReport {
        quantity: name.to_string(),
        initial,
        max_abs_deviation: max_abs,
        max_rel_deviation: rel,
        tolerance,
        passed: rel.is_finite() && rel <= tolerance,
    })
}

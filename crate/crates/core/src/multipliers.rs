//! Divergences, Jacobi multipliers and Hojman constants of motion.
//!
//! Sign convention: a distribution symmetry satisfies `[Y, X] = h X`.

use serde::Serialize;

use crate::expr::{EvalError, Expr};
use crate::geometry::{divergence, lie_bracket, GeometryError, Scalar, VectorField, VolumeForm};
use crate::lagrangian::LagrangianSystem;
use crate::report::{self, Report};
use crate::{linalg, par};

pub const DIVERGENCE_TOL: f64 = 1e-8;
pub const BRACKET_TOL: f64 = 1e-7;
pub const MULTIPLIER_TOL: f64 = 1e-8;
/// Sample variance at or below which a constant of motion is called trivial.
pub const TRIVIAL_VARIANCE: f64 = 1e-12;
/// Largest base dimension for which `det W` is expanded symbolically.
pub const SYMBOLIC_DET_MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MultiplierError {
    #[error("{what} is not positive at {point:?}")]
    NotPositive { what: &'static str, point: Vec<f64> },
    #[error("precondition `{}` fails (max residual {:e})", .0.check, .0.max_residual)]
    Precondition(Box<Report>),
    #[error("Y is not a distribution symmetry of X (max relative residual {:e})", .0.max_residual)]
    NotDistributionSymmetry(Box<Report>),
    #[error("X vanishes at {0:?}")]
    ZeroField(Vec<f64>),
    #[error("Lagrangian is degenerate")]
    Degenerate,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn abs_residuals(f: &Scalar, points: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    par::try_map(points, |p| f.eval(p).map(f64::abs))
}

fn ensure_positive(what: &'static str, f: &Scalar, points: &[Vec<f64>]) -> Result<(), MultiplierError> {
    for p in points {
        if !(f.eval(p)? > 0.0) {
            return Err(MultiplierError::NotPositive { what, point: p.clone() });
        }
    }
    Ok(())
}

/// `ℒ_X(div Y) − ℒ_Y(div X) − div([X, Y])`.
pub fn divergence_identity_check(
    x: &VectorField,
    y: &VectorField,
    volume: &VolumeForm,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Report, MultiplierError> {
    let lhs = x.apply(&divergence(y, volume)?).sub(&y.apply(&divergence(x, volume)?));
    let rhs = divergence(&lie_bracket(x, y)?, volume)?;
    let r = abs_residuals(&lhs.sub(&rhs), points)?;
    Ok(Report::from_residuals("X(div Y) - Y(div X) - div[X,Y]", &r, points, tol))
}

/// `Y(log R)`; symbolic when both inputs are.
fn log_derivative(y: &VectorField, r: &Scalar) -> Scalar {
    match r.as_expr() {
        Some(e) if y.is_symbolic() => Scalar::Expr(y.apply_expr(&e.clone().ln()).expect("symbolic")),
        _ => {
            let (y, r) = (y.clone(), r.clone());
            Scalar::rule(move |p| Ok(y.derivative_at(&r, p)? / r.eval(p)?))
        }
    }
}

/// `div X + X(log R)` at samples.
pub fn jacobi_multiplier_check(
    r: &Scalar,
    x: &VectorField,
    volume: &VolumeForm,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Report, MultiplierError> {
    ensure_positive("multiplier R", r, points)?;
    let res = divergence(x, volume)?.add(&log_derivative(x, r));
    Ok(Report::from_residuals("div X + X(log R)", &abs_residuals(&res, points)?, points, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub original: Report,
    /// `f R` against `f⁻¹ Ω`.
    pub scaled: Report,
    pub co_pass: bool,
}

pub fn scaling_covariance_check(
    r: &Scalar,
    x: &VectorField,
    volume: &VolumeForm,
    f: &Expr,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<ScalingReport, MultiplierError> {
    let fs = Scalar::Expr(f.clone());
    ensure_positive("scale f", &fs, points)?;
    let original = jacobi_multiplier_check(r, x, volume, points, tol)?;
    let scaled = jacobi_multiplier_check(&fs.mul(r), x, &volume.rescaled_by_inverse(f), points, tol)?;
    Ok(ScalingReport {
        co_pass: original.passed == scaled.passed,
        original,
        scaled,
    })
}

/// `det W`, a Jacobi multiplier of `Γ_L` for the coordinate volume.
pub fn hessian_multiplier(sys: &LagrangianSystem) -> Result<Scalar, MultiplierError> {
    if !sys.regular {
        return Err(MultiplierError::Degenerate);
    }
    if sys.base_dim() <= SYMBOLIC_DET_MAX_DIM {
        let det = sys.hessian_determinant();
        if det.is_zero() {
            return Err(MultiplierError::Degenerate);
        }
        return Ok(Scalar::Expr(det));
    }
    let s = sys.clone();
    Ok(Scalar::rule(move |p| Ok(linalg::det(&s.hessian_at(p)?))))
}

#[derive(Clone, Debug)]
pub struct HojmanInput {
    pub x: VectorField,
    pub y: VectorField,
    /// `[Y, X] = h X`.
    pub h: Scalar,
    pub multiplier: Option<Scalar>,
    pub volume: VolumeForm,
}

#[derive(Clone, Debug)]
pub struct HojmanConstant {
    pub constant: Scalar,
    pub bracket: Report,
    /// `div X` when no multiplier is given, otherwise the multiplier equation.
    pub volume_condition: Report,
    /// `X(I)` at samples.
    pub conservation: Report,
    pub variance: f64,
    pub trivial: bool,
}

/// `‖[Y, X] − h X‖∞` at each sample.
fn bracket_residuals(x: &VectorField, y: &VectorField, h: &Scalar, points: &[Vec<f64>]) -> Result<Vec<f64>, MultiplierError> {
    let br = lie_bracket(y, x)?;
    Ok(par::try_map(points, |p| -> Result<f64, EvalError> {
        let b = br.eval(p)?;
        let v = x.eval(p)?;
        let hv = h.eval(p)?;
        Ok(b.iter().zip(&v).map(|(bi, vi)| (bi - hv * vi).abs()).fold(0.0, f64::max))
    })?)
}

/// `I = div Y + Y(log R) + h` (with `R = 1` when absent).
pub fn hojman_constant(input: &HojmanInput, points: &[Vec<f64>], tol: f64) -> Result<HojmanConstant, MultiplierError> {
    let HojmanInput { x, y, h, multiplier, volume } = input;
    let bracket = Report::from_residuals("[Y,X] - hX", &bracket_residuals(x, y, h, points)?, points, BRACKET_TOL);
    if !bracket.passed {
        return Err(MultiplierError::Precondition(Box::new(bracket)));
    }
    let volume_condition = match multiplier {
        Some(r) => jacobi_multiplier_check(r, x, volume, points, MULTIPLIER_TOL)?,
        None => Report::from_residuals("div X", &abs_residuals(&divergence(x, volume)?, points)?, points, DIVERGENCE_TOL),
    };
    if !volume_condition.passed {
        return Err(MultiplierError::Precondition(Box::new(volume_condition)));
    }
    let mut constant = divergence(y, volume)?.add(h);
    if let Some(r) = multiplier {
        constant = constant.add(&log_derivative(y, r));
    }
    if let Scalar::Expr(e) = &constant {
        constant = Scalar::Expr(e.simplify());
    }
    let conservation = Report::from_residuals("X(I)", &abs_residuals(&x.apply(&constant), points)?, points, tol);
    let values = par::try_map(points, |p| constant.eval(p))?;
    let variance = report::variance(&values);
    Ok(HojmanConstant {
        constant,
        bracket,
        volume_condition,
        conservation,
        variance,
        trivial: variance <= TRIVIAL_VARIANCE,
    })
}

/// Fits `h` with `[Y, X] = h X`; symbolic when some component ratio works
/// exactly, else the pointwise least-squares ratio.
pub fn distribution_symmetry_fit(
    x: &VectorField,
    y: &VectorField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<(Scalar, Report), MultiplierError> {
    let br = lie_bracket(y, x)?;
    for p in points {
        if x.eval(p)?.iter().all(|v| *v == 0.0) {
            return Err(MultiplierError::ZeroField(p.clone()));
        }
    }
    let h = symbolic_ratio(&br, x).unwrap_or_else(|| {
        let (br, x) = (br.clone(), x.clone());
        Scalar::rule(move |p| {
            let b = br.eval(p)?;
            let v = x.eval(p)?;
            let vv: f64 = v.iter().map(|a| a * a).sum();
            Ok(b.iter().zip(&v).map(|(s, t)| s * t).sum::<f64>() / vv)
        })
    });
    let abs = bracket_residuals(x, y, &h, points)?;
    let rel = par::try_map(points, |p| -> Result<f64, EvalError> {
        let scale = br.eval(p)?.iter().chain(&x.eval(p)?).fold(1.0f64, |m, v| m.max(v.abs()));
        Ok(scale)
    })?;
    let rel: Vec<f64> = abs.iter().zip(&rel).map(|(a, s)| a / s).collect();
    let rep = Report::from_residuals("[Y,X] - hX (relative)", &rel, points, tol);
    if !rep.passed {
        return Err(MultiplierError::NotDistributionSymmetry(Box::new(rep)));
    }
    Ok((h, rep))
}

fn symbolic_ratio(br: &VectorField, x: &VectorField) -> Option<Scalar> {
    let (b, v) = (br.components()?, x.components()?);
    if b.iter().all(Expr::is_zero) {
        return Some(Scalar::constant(0.0));
    }
    let k = v.iter().position(|e| !e.is_zero())?;
    let h = (b[k].clone() / v[k].clone()).simplify();
    b.iter()
        .zip(v)
        .all(|(bi, vi)| (bi.clone() - h.clone() * vi.clone()).simplify().is_zero())
        .then_some(Scalar::Expr(h))
}

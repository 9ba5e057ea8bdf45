//! Tangent-bundle geometry of a Lagrangian `L(q, v)`.
//!
//! On a tangent chart `(q¹…qⁿ, v¹…vⁿ)`: `θ_L = Σ ∂L/∂vⁱ dqⁱ`,
//! `ω_L = −dθ_L`, `E_L = Σ vⁱ ∂L/∂vⁱ − L` and `W_ij = ∂²L/∂vⁱ∂vʲ`. The
//! Euler–Lagrange field is the SODE `Γ_L` with `i(Γ_L)ω_L = dE_L`.

use serde::Serialize;

use crate::expr::{self, sum, Chart, EvalError, Expr, ExprMatrix, Flavor};
use crate::geometry::{exterior_derivative, interior_product, lie_derivative_form, Form, GeometryError, PForm, VectorField};
use crate::report::Report;
use crate::{linalg, par};

/// Largest base dimension for which the symbolic SODE is offered.
pub const SYMBOLIC_SODE_MAX_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LagrangianError {
    #[error("expected a tangent chart")]
    Flavor,
    #[error("Hessian W is singular at {0:?}")]
    Singular(Vec<f64>),
    #[error("symbolic SODE only up to base dimension {SYMBOLIC_SODE_MAX_DIM}")]
    TooLarge,
    #[error("field lives on a {found}-dimensional chart, base has dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("symmetry condition X^c L = (dh)^ fails (max residual {:e})", .0.max_residual)]
    NotSymmetry(Report),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    pub chart: Chart,
    pub lagrangian: Expr,
    pub theta: PForm,
    pub omega: PForm,
    pub energy: Expr,
    /// `W_ij = ∂²L/∂vⁱ∂vʲ`.
    pub hessian: ExprMatrix,
    /// Whether `det W ≠ 0` at every point the system was built with.
    pub regular: bool,
}

impl LagrangianSystem {
    pub fn base_dim(&self) -> usize {
        self.chart.base_dim()
    }

    pub fn hessian_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        self.hessian.iter().map(|r| r.iter().map(|e| e.eval(x)).collect()).collect()
    }

    /// Symbolic `det W` (cofactor expansion).
    pub fn hessian_determinant(&self) -> Expr {
        expr::determinant(&self.hessian).simplify()
    }

    /// `∂L/∂qⁱ − Σⱼ vʲ ∂²L/∂qʲ∂vⁱ`, the right-hand side of `W F = ·`.
    fn force_terms(&self) -> Vec<Expr> {
        let n = self.base_dim();
        (0..n)
            .map(|i| {
                let dv = self.lagrangian.diff(n + i);
                let mixed = sum((0..n).map(|j| Expr::var(n + j) * dv.diff(j)));
                (self.lagrangian.diff(i) - mixed).simplify()
            })
            .collect()
    }
}

pub fn build_structures(lagrangian: &Expr, chart: &Chart, points: &[Vec<f64>]) -> Result<LagrangianSystem, LagrangianError> {
    if chart.flavor() != Flavor::Tangent {
        return Err(LagrangianError::Flavor);
    }
    crate::geometry::check_vars(lagrangian, chart.dim())?;
    let n = chart.base_dim();
    let l = lagrangian.simplify();
    let dl_dv: Vec<Expr> = (0..n).map(|i| l.diff(n + i).simplify()).collect();
    let theta = Form::from_terms(chart.clone(), 1, (0..n).map(|i| (vec![i], dl_dv[i].clone())));
    let omega = exterior_derivative(&theta)?.scale(-Expr::one());
    let energy = (sum((0..n).map(|i| Expr::var(n + i) * dl_dv[i].clone())) - l.clone()).simplify();
    let hessian: ExprMatrix = (0..n)
        .map(|i| (0..n).map(|j| dl_dv[i].diff(n + j).simplify()).collect())
        .collect();
    let mut sys = LagrangianSystem {
        chart: chart.clone(),
        lagrangian: l,
        theta,
        omega,
        energy,
        hessian,
        regular: true,
    };
    let dets = par::try_map(points, |p| sys.hessian_at(p).map(|w| linalg::det(&w)))?;
    sys.regular = dets.iter().all(|d| d.abs() > 1e-12);
    Ok(sys)
}

/// `Γ_L` as a pointwise linear solve.
pub fn sode(sys: &LagrangianSystem) -> VectorField {
    let n = sys.base_dim();
    let rhs = sys.force_terms();
    let s = sys.clone();
    VectorField::procedural(sys.chart.clone(), move |x| {
        let w = s.hessian_at(x)?;
        let b = rhs.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>, _>>()?;
        let f = linalg::solve(&w, &b)
            .filter(|_| linalg::det(&w).abs() > 1e-300)
            .ok_or_else(|| EvalError {
                reason: "singular Hessian",
                subexpr: "W".to_string(),
            })?;
        let mut out = x[n..].to_vec();
        out.extend(f);
        Ok(out)
    })
}

/// `Γ_L` with `F = W⁻¹ b` by Cramer's rule, for base dimension ≤ 3.
pub fn sode_symbolic(sys: &LagrangianSystem) -> Result<VectorField, LagrangianError> {
    let n = sys.base_dim();
    if n > SYMBOLIC_SODE_MAX_DIM {
        return Err(LagrangianError::TooLarge);
    }
    let rhs = sys.force_terms();
    let det = sys.hessian_determinant();
    if det.is_zero() {
        return Err(LagrangianError::Singular(vec![]));
    }
    let adj = expr::adjugate(&sys.hessian);
    let mut comps: Vec<Expr> = (0..n).map(|i| Expr::var(n + i)).collect();
    for f in expr::mat_vec(&adj, &rhs) {
        comps.push((f / det.clone()).simplify());
    }
    Ok(VectorField::new(sys.chart.clone(), comps)?)
}

fn max_form_residual(a: &PForm, points: &[Vec<f64>]) -> Result<Vec<f64>, EvalError> {
    par::try_map(points, |p| a.max_abs_at(p))
}

/// `i(Γ)ω_L − dE_L` at samples; `Γ` may be procedural.
pub fn sode_residual(sys: &LagrangianSystem, gamma: &VectorField, points: &[Vec<f64>], tol: f64) -> Result<Report, LagrangianError> {
    let de = Form::differential(sys.chart.clone(), &sys.energy);
    if gamma.is_symbolic() {
        let r = interior_product(gamma, &sys.omega)?.sub(&de);
        return Ok(Report::from_residuals("i(G)w_L - dE_L", &max_form_residual(&r, points)?, points, tol));
    }
    let r = par::try_map(points, |p| -> Result<f64, EvalError> {
        let g = gamma.eval(p)?;
        let w = sys.omega.eval(p)?;
        let lhs = w.interior(&g).expect("2-form");
        Ok(lhs.sub(&de.eval(p)?).max_abs())
    })?;
    Ok(Report::from_residuals("i(G)w_L - dE_L", &r, points, tol))
}

/// `ℒ_Γ θ_L − dL` at samples, for a symbolic `Γ`.
pub fn lagrangian_form_residual(sys: &LagrangianSystem, gamma: &VectorField, points: &[Vec<f64>], tol: f64) -> Result<Report, LagrangianError> {
    let r = lie_derivative_form(gamma, &sys.theta)?.sub(&Form::differential(sys.chart.clone(), &sys.lagrangian));
    Ok(Report::from_residuals("L_G theta_L - dL", &max_form_residual(&r, points)?, points, tol))
}

/// `X^c = Σ Xⁱ ∂_{qⁱ} + Σ (∂Xⁱ/∂qʲ) vʲ ∂_{vⁱ}` on `tangent`.
pub fn complete_lift(x: &VectorField, tangent: &Chart) -> Result<VectorField, LagrangianError> {
    if tangent.flavor() != Flavor::Tangent {
        return Err(LagrangianError::Flavor);
    }
    let n = tangent.base_dim();
    if x.dim() != n {
        return Err(LagrangianError::Dimension {
            expected: n,
            found: x.dim(),
        });
    }
    let comps = x.components().ok_or(GeometryError::NotSymbolic("complete lift"))?;
    let mut lifted = comps.to_vec();
    for c in comps {
        lifted.push(sum((0..n).map(|j| c.diff(j) * Expr::var(n + j))).simplify());
    }
    Ok(VectorField::new(tangent.clone(), lifted)?)
}

/// `α̂(q, v) = Σ αᵢ(q) vⁱ`, here for `α = dh`.
fn fiber_linear_differential(h: &Expr, n: usize) -> Expr {
    sum((0..n).map(|i| h.diff(i) * Expr::var(n + i))).simplify()
}

#[derive(Clone, Debug)]
pub struct NoetherConstant {
    pub constant: Expr,
    /// `X^c L − (dh)^` at samples.
    pub symmetry: Report,
    /// `Γ_L(f)` at samples.
    pub conservation: Report,
}

/// `f = i(X^c)θ_L − h = Σ (∂L/∂vⁱ) Xⁱ − h` when `X^c L = (dh)^`.
pub fn noether_constant(
    sys: &LagrangianSystem,
    x: &VectorField,
    h: &Expr,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<NoetherConstant, LagrangianError> {
    let n = sys.base_dim();
    let xc = complete_lift(x, &sys.chart)?;
    let cond = (xc.apply_expr(&sys.lagrangian).expect("symbolic lift") - fiber_linear_differential(h, n)).simplify();
    let residuals = par::try_map(points, |p| cond.eval(p).map(f64::abs))?;
    let symmetry = Report::from_residuals("X^c L - (dh)^", &residuals, points, tol);
    if !symmetry.passed {
        return Err(LagrangianError::NotSymmetry(symmetry));
    }
    let f = (interior_product(&xc, &sys.theta)?.get(&[]) - h.clone()).simplify();
    let gamma = sode(sys);
    let conservation_res = par::try_map(points, |p| -> Result<f64, EvalError> {
        let g = gamma.eval(p)?;
        let mut acc = 0.0;
        for (k, gk) in g.iter().enumerate() {
            acc += gk * f.diff(k).eval(p)?;
        }
        Ok(acc.abs())
    })?;
    Ok(NoetherConstant {
        constant: f,
        symmetry,
        conservation: Report::from_residuals("Gamma(f)", &conservation_res, points, tol),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaugeReport {
    pub omega: Report,
    pub energy: Report,
    pub equivalent: bool,
    /// `∂²(L′ − L)/∂vⁱ∂vʲ ≈ 0`: the difference is fiber-linear plus basic.
    pub difference_affine_in_velocity: bool,
}

pub fn gauge_equivalent(
    l: &Expr,
    l_prime: &Expr,
    chart: &Chart,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<GaugeReport, LagrangianError> {
    let a = build_structures(l, chart, &[])?;
    let b = build_structures(l_prime, chart, &[])?;
    let dw = a.omega.sub(&b.omega);
    let de = (a.energy.clone() - b.energy.clone()).simplify();
    let omega = Report::from_residuals("w_L - w_L'", &max_form_residual(&dw, points)?, points, tol);
    let energy = Report::from_residuals("E_L - E_L'", &par::try_map(points, |p| de.eval(p).map(f64::abs))?, points, tol);
    let n = chart.base_dim();
    let diff = (l_prime.clone() - l.clone()).simplify();
    let second: Vec<Expr> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| diff.diff(n + i).diff(n + j).simplify())
        .collect();
    let curv = par::try_map(points, |p| -> Result<f64, EvalError> {
        let mut worst = 0.0f64;
        for s in &second {
            worst = worst.max(s.eval(p)?.abs());
        }
        Ok(worst)
    })?;
    Ok(GaugeReport {
        equivalent: omega.passed && energy.passed,
        omega,
        energy,
        difference_affine_in_velocity: curv.iter().all(|c| *c <= tol),
    })
}

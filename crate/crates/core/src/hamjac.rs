//! Hamilton–Jacobi theory as reduction to the base: a 1-form `α` on `Q`
//! and the field `Z = Tπ∘X_H∘α` it induces.

use serde::Serialize;

use crate::expr::{sum, Chart, EvalError, Expr, Flavor};
use crate::flow::{integrate, FlowError, Method, Trajectory};
use crate::geometry::{check_vars, exterior_derivative, interior_product, Form, GeometryError, PForm, Scalar, VectorField};
use crate::report::{self, Report};
use crate::symplectic::{canonical_symplectic, hamiltonian_vector_field, SymplecticError};
use crate::{par, Region};

pub const RESIDUAL_TOL: f64 = 1e-9;
/// Bound on the sample variance of `α*H` for a standard solution.
pub const VARIANCE_TOL: f64 = 1e-10;
pub const LIFT_TOL: f64 = 1e-6;
pub const LIFT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HamJacError {
    #[error("expected a cotangent chart")]
    Flavor,
    #[error("section has {found} components, base has dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("alpha component {0} differs from the partial of S")]
    NotGradient(usize),
    #[error("no generating function S was given")]
    NoGenerating,
    #[error("integration left the box at t = {t}")]
    LeftBox { t: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Debug)]
pub struct HJProblem {
    cotangent: Chart,
    base: Chart,
    hamiltonian: Expr,
    alpha: Vec<Expr>,
    generating: Option<Expr>,
}

impl HJProblem {
    /// `H` on the cotangent chart, `αᵢ(q)` on its base.
    pub fn new(cotangent: &Chart, hamiltonian: Expr, alpha: Vec<Expr>) -> Result<HJProblem, HamJacError> {
        if cotangent.flavor() != Flavor::Cotangent {
            return Err(HamJacError::Flavor);
        }
        let n = cotangent.base_dim();
        if alpha.len() != n {
            return Err(HamJacError::Dimension {
                expected: n,
                found: alpha.len(),
            });
        }
        check_vars(&hamiltonian, 2 * n)?;
        for a in &alpha {
            check_vars(a, n)?;
        }
        Ok(HJProblem {
            base: cotangent.base(),
            cotangent: cotangent.clone(),
            hamiltonian,
            alpha: alpha.into_iter().map(|a| a.simplify()).collect(),
            generating: None,
        })
    }

    /// `α = dS`.
    pub fn from_generating(cotangent: &Chart, hamiltonian: Expr, s: Expr) -> Result<HJProblem, HamJacError> {
        let n = cotangent.base_dim();
        let alpha = (0..n).map(|i| s.diff(i)).collect();
        let mut p = HJProblem::new(cotangent, hamiltonian, alpha)?;
        p.generating = Some(s);
        Ok(p)
    }

    /// Attaches `S`, checking `αᵢ = ∂S/∂qⁱ` exactly.
    pub fn with_generating(mut self, s: Expr) -> Result<HJProblem, HamJacError> {
        check_vars(&s, self.base.dim())?;
        for (i, a) in self.alpha.iter().enumerate() {
            if !(s.diff(i) - a.clone()).simplify().is_zero() {
                return Err(HamJacError::NotGradient(i));
            }
        }
        self.generating = Some(s);
        Ok(self)
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn cotangent(&self) -> &Chart {
        &self.cotangent
    }

    pub fn alpha(&self) -> &[Expr] {
        &self.alpha
    }

    pub fn alpha_form(&self) -> PForm {
        Form::from_terms(self.base.clone(), 1, self.alpha.iter().enumerate().map(|(i, a)| (vec![i], a.clone())))
    }

    /// `(q, α(q))` substituted into a cotangent expression.
    fn on_section(&self, e: &Expr) -> Expr {
        let n = self.base.dim();
        let values: Vec<Expr> = (0..n).map(Expr::var).chain(self.alpha.iter().cloned()).collect();
        e.substitute(&values).simplify()
    }

    /// `α*H`.
    pub fn pulled_back_hamiltonian(&self) -> Expr {
        self.on_section(&self.hamiltonian)
    }

    pub fn section_at(&self, q: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut x = q.to_vec();
        for a in &self.alpha {
            x.push(a.eval(q)?);
        }
        Ok(x)
    }
}

/// `Zⁱ(q) = ∂H/∂pᵢ (q, α(q))`.
pub fn hj_reduced_field(prob: &HJProblem) -> VectorField {
    let n = prob.base.dim();
    let comps = (0..n).map(|i| prob.on_section(&prob.hamiltonian.diff(n + i))).collect();
    VectorField::new(prob.base.clone(), comps).expect("base expressions")
}

/// `Z` against the base part of `X_H` evaluated on the section.
pub fn reduced_field_check(prob: &HJProblem, points: &[Vec<f64>], tol: f64) -> Result<Report, HamJacError> {
    let z = hj_reduced_field(prob);
    let xh = hamiltonian_vector_field(&Scalar::Expr(prob.hamiltonian.clone()), &canonical_symplectic(&prob.cotangent)?)?;
    let n = prob.base.dim();
    let r = par::try_map(points, |q| -> Result<f64, EvalError> {
        let full = xh.eval(&prob.section_at(q)?)?;
        Ok(z.eval(q)?.iter().zip(&full[..n]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    })?;
    Ok(Report::from_residuals("Z - T pi(X_H o alpha)", &r, points, tol))
}

#[derive(Clone, Debug)]
pub struct HJResidual {
    /// `i(Z)dα + d(α*H)`.
    pub form: PForm,
    pub report: Report,
}

pub fn hj_residual(prob: &HJProblem, points: &[Vec<f64>], tol: f64) -> Result<HJResidual, HamJacError> {
    let z = hj_reduced_field(prob);
    let mut form = Form::differential(prob.base.clone(), &prob.pulled_back_hamiltonian());
    // on a one-dimensional base dα is a 2-form, hence zero
    if prob.base.dim() > 1 {
        form = interior_product(&z, &exterior_derivative(&prob.alpha_form())?)?.add(&form);
    }
    let r = par::try_map(points, |q| form.max_abs_at(q))?;
    Ok(HJResidual {
        report: Report::from_residuals("i(Z)d alpha + d(alpha* H)", &r, points, tol),
        form,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub std_dev: f64,
    pub variance: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct StandardSolution {
    pub report: EnergyReport,
    /// `X^S = Tπ∘X_H∘dS`.
    pub field: VectorField,
}

/// `H(q, ∇S(q)) = E`, estimated by the sample mean.
pub fn hj_standard_check(prob: &HJProblem, points: &[Vec<f64>]) -> Result<StandardSolution, HamJacError> {
    if prob.generating.is_none() {
        return Err(HamJacError::NoGenerating);
    }
    let h = prob.pulled_back_hamiltonian();
    let values = par::try_map(points, |q| h.eval(q))?;
    let energy = report::mean(&values);
    let variance = report::variance(&values);
    Ok(StandardSolution {
        report: EnergyReport {
            energy,
            std_dev: report::std_dev(&values),
            variance,
            tolerance: VARIANCE_TOL,
            samples: points.len(),
            passed: variance <= VARIANCE_TOL,
        },
        field: hj_reduced_field(prob),
    })
}

/// `X_H` tangent to the image of `α`: the momentum part of `X_H∘α`
/// equals `Tα(Z)`'s.
pub fn tangency_check(prob: &HJProblem, points: &[Vec<f64>], tol: f64) -> Result<Report, HamJacError> {
    let z = hj_reduced_field(prob);
    let zc = z.components().expect("symbolic");
    let n = prob.base.dim();
    let lifted: Vec<Expr> = prob
        .alpha
        .iter()
        .map(|a| sum((0..n).map(|j| a.diff(j) * zc[j].clone())).simplify())
        .collect();
    let xh = hamiltonian_vector_field(&Scalar::Expr(prob.hamiltonian.clone()), &canonical_symplectic(&prob.cotangent)?)?;
    let r = par::try_map(points, |q| -> Result<f64, EvalError> {
        let full = xh.eval(&prob.section_at(q)?)?;
        let mut worst = 0.0f64;
        for (i, l) in lifted.iter().enumerate() {
            worst = worst.max((l.eval(q)? - full[n + i]).abs());
        }
        Ok(worst)
    })?;
    Ok(Report::from_residuals("p-part of X_H o alpha - T alpha(Z)", &r, points, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftReport {
    pub horizon: f64,
    pub step: f64,
    pub max_deviation: f64,
    pub worst_time: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Integrates `Z` from `q0` and lifts through `α`; independently integrates
/// `X_H` from `α(q0)`; reports the largest phase-space gap.
pub fn lift_and_compare(prob: &HJProblem, q0: &[f64], horizon: f64, region: Option<&Region>) -> Result<LiftReport, HamJacError> {
    let n = prob.base.dim();
    let z = hj_reduced_field(prob);
    let xh = hamiltonian_vector_field(&Scalar::Expr(prob.hamiltonian.clone()), &canonical_symplectic(&prob.cotangent)?)?;
    let x0 = prob.section_at(q0)?;
    let base_region = region.map(|r| Region::new(r.lo[..n].to_vec(), r.hi[..n].to_vec()));
    let method = Method::Rk4 { step: LIFT_STEP };
    let (down, up) = par::join(
        || integrate(&z, q0, horizon, method, base_region.as_ref()),
        || integrate(&xh, &x0, horizon, method, region),
    );
    let unwrap = |r: Result<Trajectory, FlowError>| match r {
        Err(FlowError::LeftBox { partial }) => Err(HamJacError::LeftBox { t: partial.final_time() }),
        other => other.map_err(HamJacError::from),
    };
    let (down, up) = (unwrap(down)?, unwrap(up)?);
    let mut max_deviation = 0.0f64;
    let mut worst_time = 0.0;
    for ((t, q), x) in down.times.iter().zip(&down.states).zip(&up.states) {
        let lifted = prob.section_at(q)?;
        let d = lifted.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if d > max_deviation || !d.is_finite() {
            max_deviation = d;
            worst_time = *t;
        }
    }
    Ok(LiftReport {
        horizon,
        step: LIFT_STEP,
        max_deviation,
        worst_time,
        tolerance: LIFT_TOL,
        passed: max_deviation <= LIFT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::Sampler;

    fn cot() -> Chart {
        Chart::cotangent(1)
    }

    fn problem(h: &str, alpha: &str) -> HJProblem {
        let c = cot();
        HJProblem::new(&c, parse(h, &c).unwrap(), vec![parse(alpha, &c.base()).unwrap()]).unwrap()
    }

    fn oscillator_points() -> Vec<Vec<f64>> {
        let e: f64 = 0.5;
        let w = 0.9 * (2.0 * e).sqrt();
        Sampler::new(42, 100, Region::new(vec![-w], vec![w])).points()
    }

    #[test]
    fn free_particle() {
        let p = problem("p1^2/2", "1.5");
        assert_eq!(hj_reduced_field(&p).describe(), ["1.5"]);
        assert!(hj_residual(&p, &Sampler::default_for(1).points(), 1e-9).unwrap().report.passed);
        let lift = lift_and_compare(&p, &[0.0], 1.0, None).unwrap();
        assert!(lift.passed && lift.max_deviation < 1e-12);
    }

    #[test]
    fn zero_section_with_potential_is_stationary() {
        let p = problem("p1^2/2 + cos(q1)", "0");
        assert_eq!(hj_reduced_field(&p).describe(), ["0"]);
        let p = problem("p1^2/2", "0");
        assert!(lift_and_compare(&p, &[0.7], 1.0, None).unwrap().max_deviation == 0.0);
    }

    #[test]
    fn oscillator_standard_solution() {
        let c = cot();
        let h = parse("(p1^2 + q1^2)/2", &c).unwrap();
        let p = HJProblem::new(&c, h, vec![parse("sqrt(2*0.5 - q1^2)", &c.base()).unwrap()]).unwrap();
        let pts = oscillator_points();
        assert!(hj_residual(&p, &pts, 1e-9).unwrap().report.passed);
        assert!(reduced_field_check(&p, &pts, 1e-10).unwrap().passed);
        assert!(tangency_check(&p, &pts, 1e-9).unwrap().passed);
        let lift = lift_and_compare(&p, &[0.0], 1.0, None).unwrap();
        assert!(lift.passed, "{lift:?}");
    }

    #[test]
    fn standard_check_energy() {
        let c = cot();
        let free = HJProblem::from_generating(&c, parse("p1^2/2", &c).unwrap(), parse("3*q1", &c.base()).unwrap()).unwrap();
        let r = hj_standard_check(&free, &Sampler::default_for(1).points()).unwrap().report;
        assert!(r.passed && r.energy == 4.5 && r.variance == 0.0);
        let sq = HJProblem::from_generating(&c, parse("p1^2/2", &c).unwrap(), parse("q1^2", &c.base()).unwrap()).unwrap();
        assert!(!hj_standard_check(&sq, &Sampler::default_for(1).points()).unwrap().report.passed);
        assert_eq!(hj_standard_check(&problem("p1^2/2", "1"), &[]).unwrap_err(), HamJacError::NoGenerating);
    }

    #[test]
    fn oscillator_energy_via_attached_generating_function() {
        // S′ = √(1 − q²); S itself written through asin
        let c = cot();
        let p = problem("(p1^2 + q1^2)/2", "sqrt(1 - q1^2)")
            .with_generating(parse("(q1*sqrt(1 - q1^2) + asin(q1))/2", &c.base()).unwrap());
        match p {
            Ok(p) => {
                let r = hj_standard_check(&p, &oscillator_points()).unwrap().report;
                assert!(r.passed && (r.energy - 0.5).abs() < 1e-10);
            }
            // the simplifier may not prove the identity; the numeric route must still hold
            Err(HamJacError::NotGradient(_)) => {
                let s = parse("(q1*sqrt(1 - q1^2) + asin(q1))/2", &c.base()).unwrap();
                for q in oscillator_points() {
                    assert!((s.diff(0).eval(&q).unwrap() - (1.0 - q[0] * q[0]).sqrt()).abs() < 1e-12);
                }
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn non_solution_is_reported() {
        let p = problem("p1^2/2", "q1");
        let res = hj_residual(&p, &Sampler::default_for(1).points(), 1e-9).unwrap();
        assert!(!res.report.passed);
        // residual is d(q²/2) = q dq
        for q in Sampler::default_for(1).points() {
            assert!((res.form.eval(&q).unwrap().get(&[0]) - q[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_sections_are_closed() {
        let c = Chart::cotangent(2);
        let s = parse("q1^2*q2 + sin(q1*q2)", &c.base()).unwrap();
        let p = HJProblem::from_generating(&c, parse("(p1^2 + p2^2)/2", &c).unwrap(), s).unwrap();
        let d = exterior_derivative(&p.alpha_form()).unwrap();
        for q in Sampler::default_for(2).points() {
            assert!(d.max_abs_at(&q).unwrap() < 1e-12);
        }
    }

    #[test]
    fn leaving_the_box_is_an_error() {
        let p = problem("p1^2/2", "1");
        let r = Region::cube(2, -0.5, 2.0);
        assert!(matches!(lift_and_compare(&p, &[0.0], 3.0, Some(&r)), Err(HamJacError::LeftBox { .. })));
    }
}

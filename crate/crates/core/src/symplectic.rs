//! Symplectic forms, Hamiltonian vector fields and Poisson brackets.
//!
//! Conventions: `ω = −dθ`, `i(X_H)ω = dH`, `{F,G} = dF(X_G)`, so on a
//! canonical chart `X_H = (∂H/∂p, −∂H/∂q)`, `{q,p} = 1` and
//! `[X_F, X_G] = X_{{G,F}}`.

use serde::Serialize;

use crate::expr::{self, EvalError, Expr, ExprMatrix, Flavor};
use crate::geometry::{exterior_derivative, lie_bracket, Form, GeometryError, PForm, Scalar, VectorField};
use crate::report::Report;
use crate::{linalg, par, Chart};

/// Largest dimension for which `Ω⁻¹` is kept symbolic.
pub const SYMBOLIC_INVERSE_MAX_DIM: usize = 6;
/// Tolerance of the closedness check at construction.
pub const CLOSEDNESS_TOL: f64 = 1e-10;
/// Fraction of samples at which a rank must be attained.
pub const RANK_QUORUM: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymplecticError {
    #[error("a symplectic form needs degree 2, got {0}")]
    Degree(usize),
    #[error("odd chart dimension {0}")]
    OddDimension(usize),
    #[error("expected a cotangent chart")]
    Flavor,
    #[error("dω does not vanish (max {residual:e} at {point:?})")]
    NotClosed { residual: f64, point: Vec<f64> },
    #[error("ω is degenerate at {0:?}")]
    Degenerate(Vec<f64>),
    #[error("expected at least {expected} functions, got {found}")]
    Count { expected: usize, found: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A nondegenerate 2-form with its cached component matrix.
#[derive(Clone, Debug)]
pub struct SymplecticForm {
    form: PForm,
    matrix: ExprMatrix,
    /// `−Ω⁻¹`, mapping `dH` to `X_H`; symbolic for small dimensions.
    sharp: Option<ExprMatrix>,
}

impl SymplecticForm {
    /// Checks degree, closedness and nondegeneracy at `points`.
    pub fn new(form: PForm, points: &[Vec<f64>]) -> Result<SymplecticForm, SymplecticError> {
        let s = SymplecticForm::unchecked(form)?;
        let d = exterior_derivative(&s.form)?;
        for p in points {
            let r = d.max_abs_at(p)?;
            if r > CLOSEDNESS_TOL {
                return Err(SymplecticError::NotClosed {
                    residual: r,
                    point: p.clone(),
                });
            }
        }
        for p in points {
            if linalg::rank(&s.matrix_at(p)?, 1e-12) < s.dim() {
                return Err(SymplecticError::Degenerate(p.clone()));
            }
        }
        Ok(s)
    }

    /// Skips the closedness and nondegeneracy checks; used to probe what
    /// breaks for forms that are not symplectic.
    pub fn unchecked(form: PForm) -> Result<SymplecticForm, SymplecticError> {
        if form.degree() != 2 {
            return Err(SymplecticError::Degree(form.degree()));
        }
        let n = form.dim();
        if n % 2 == 1 {
            return Err(SymplecticError::OddDimension(n));
        }
        let matrix = form.matrix();
        let sharp = if n <= SYMBOLIC_INVERSE_MAX_DIM {
            symbolic_sharp(&matrix)
        } else {
            None
        };
        Ok(SymplecticForm { form, matrix, sharp })
    }

    pub fn form(&self) -> &PForm {
        &self.form
    }

    pub fn chart(&self) -> &Chart {
        self.form.chart()
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// `Ω_ij = ω(∂ᵢ, ∂ⱼ)`.
    pub fn matrix(&self) -> &ExprMatrix {
        &self.matrix
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        self.matrix.iter().map(|r| r.iter().map(|e| e.eval(x)).collect()).collect()
    }

    /// The symbolic `−Ω⁻¹` when available.
    pub fn sharp_matrix(&self) -> Option<&ExprMatrix> {
        self.sharp.as_ref()
    }

    /// `X` with `i(X)ω = α` for a covector `α` at `x`.
    pub fn sharp_at(&self, x: &[f64], alpha: &[f64]) -> Result<Vec<f64>, SymplecticError> {
        // Σᵢ Xⁱ Ωᵢⱼ = αⱼ  ⇔  Ωᵀ X = α  ⇔  −Ω X = α
        let neg: Vec<Vec<f64>> = self.matrix_at(x)?.into_iter().map(|r| r.into_iter().map(|v| -v).collect()).collect();
        linalg::solve(&neg, alpha).ok_or_else(|| SymplecticError::Degenerate(x.to_vec()))
    }
}

fn symbolic_sharp(m: &ExprMatrix) -> Option<ExprMatrix> {
    let constant: Option<Vec<Vec<f64>>> = m.iter().map(|r| r.iter().map(Expr::as_const).collect()).collect();
    if let Some(c) = constant {
        let inv = linalg::to_matrix(&c).try_inverse()?;
        return Some(
            (0..c.len())
                .map(|i| (0..c.len()).map(|j| Expr::constant(-inv[(i, j)]).simplify()).collect())
                .collect(),
        );
    }
    let det = expr::determinant(m).simplify();
    if det.is_zero() {
        return None;
    }
    Some(
        expr::adjugate(m)
            .into_iter()
            .map(|r| r.into_iter().map(|a| (-(a / det.clone())).simplify()).collect())
            .collect(),
    )
}

/// `Σ dqⁱ ∧ dpᵢ` on a cotangent chart.
pub fn canonical_symplectic(chart: &Chart) -> Result<SymplecticForm, SymplecticError> {
    if chart.flavor() != Flavor::Cotangent {
        return Err(SymplecticError::Flavor);
    }
    let n = chart.base_dim();
    let form = Form::from_terms(chart.clone(), 2, (0..n).map(|i| (vec![i, n + i], Expr::one())));
    SymplecticForm::unchecked(form)
}

/// Liouville 1-form `θ = Σ pᵢ dqⁱ` on a cotangent chart.
pub fn liouville_form(chart: &Chart) -> Result<PForm, SymplecticError> {
    if chart.flavor() != Flavor::Cotangent {
        return Err(SymplecticError::Flavor);
    }
    let n = chart.base_dim();
    Ok(Form::from_terms(chart.clone(), 1, (0..n).map(|i| (vec![i], Expr::var(n + i)))))
}

/// The field with `i(X_H)ω = dH`; symbolic when `H` is and `Ω⁻¹` is kept.
pub fn hamiltonian_vector_field(h: &Scalar, omega: &SymplecticForm) -> Result<VectorField, SymplecticError> {
    let n = omega.dim();
    if let (Some(e), Some(sharp)) = (h.as_expr(), omega.sharp_matrix()) {
        crate::geometry::check_vars(e, n)?;
        let grad = e.gradient(n);
        let comps = expr::mat_vec(sharp, &grad).into_iter().map(|c| c.simplify()).collect();
        return Ok(VectorField::new(omega.chart().clone(), comps)?);
    }
    let (h, w) = (h.clone(), omega.clone());
    Ok(VectorField::procedural(omega.chart().clone(), move |x| {
        let g = h.gradient(x)?;
        w.sharp_at(x, &g).map_err(|_| EvalError {
            reason: "degenerate symplectic matrix",
            subexpr: "ω".to_string(),
        })
    }))
}

/// `{F, G} = dF(X_G)`.
pub fn poisson_bracket(f: &Scalar, g: &Scalar, omega: &SymplecticForm) -> Result<Scalar, SymplecticError> {
    let xg = hamiltonian_vector_field(g, omega)?;
    Ok(xg.apply(f))
}

/// Evaluates scalars at points in parallel and turns `|value|` into a report.
fn scalar_report(check: &str, s: &Scalar, points: &[Vec<f64>], tol: f64) -> Result<Report, EvalError> {
    let r = par::try_map(points, |p| s.eval(p).map(f64::abs))?;
    Ok(Report::from_residuals(check, &r, points, tol))
}

fn field_report(check: &str, x: &VectorField, points: &[Vec<f64>], tol: f64) -> Result<Report, EvalError> {
    let r = par::try_map(points, |p| Ok::<_, EvalError>(x.eval(p)?.iter().fold(0.0f64, |m, v| m.max(v.abs()))))?;
    Ok(Report::from_residuals(check, &r, points, tol))
}

/// Cyclic sum `{{G,H},F} + {{H,F},G} + {{F,G},H}`; vanishes when `dω = 0`.
pub fn jacobi_identity_check(
    f: &Scalar,
    g: &Scalar,
    h: &Scalar,
    omega: &SymplecticForm,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Report, SymplecticError> {
    let pb = |a: &Scalar, b: &Scalar| poisson_bracket(a, b, omega);
    let total = pb(&pb(g, h)?, f)?.add(&pb(&pb(h, f)?, g)?).add(&pb(&pb(f, g)?, h)?);
    Ok(scalar_report("poisson jacobi identity", &total, points, tol)?)
}

/// Residual of `[X_F, X_G] − X_{{G,F}}`.
pub fn hamiltonian_homomorphism_check(
    f: &Scalar,
    g: &Scalar,
    omega: &SymplecticForm,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<Report, SymplecticError> {
    let xf = hamiltonian_vector_field(f, omega)?;
    let xg = hamiltonian_vector_field(g, omega)?;
    let rhs = hamiltonian_vector_field(&poisson_bracket(g, f, omega)?, omega)?;
    let diff = lie_bracket(&xf, &xg)?.sub(&rhs)?;
    Ok(field_report("[X_F,X_G] - X_{G,F}", &diff, points, tol)?)
}

/// Residual of `i(X_H)ω − dH`.
pub fn defining_equation_check(h: &Scalar, omega: &SymplecticForm, points: &[Vec<f64>], tol: f64) -> Result<Report, SymplecticError> {
    let xh = hamiltonian_vector_field(h, omega)?;
    let r = par::try_map(points, |p| -> Result<f64, EvalError> {
        let v = xh.eval(p)?;
        let m = omega.matrix_at(p)?;
        let g = h.gradient(p)?;
        let mut worst = 0.0f64;
        for j in 0..v.len() {
            let lhs: f64 = (0..v.len()).map(|i| v[i] * m[i][j]).sum();
            worst = worst.max((lhs - g[j]).abs());
        }
        Ok(worst)
    })?;
    Ok(Report::from_residuals("i(X_H)w - dH", &r, points, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleCertificate {
    /// `{F_k, H}` for every supplied function.
    pub constancy: Vec<Report>,
    /// Largest `|{F_j, F_k}|` over samples, for the first `n` functions.
    pub involution: Vec<Vec<f64>>,
    pub involution_passed: bool,
    /// Fraction of samples where the first `n` differentials have rank `n`.
    pub independence_fraction: f64,
    pub independent: bool,
    /// Largest rank attained at ≥95% of samples by all functions that pass
    /// the constancy test.
    pub joint_rank: usize,
    pub superintegrable: bool,
    pub maximally_superintegrable: bool,
    pub certified: bool,
}

/// Liouville–Arnold certificate for `functions[..n]` (`n = dim/2`,
/// conventionally `functions[0] = H`); any further functions are tried as
/// extra integrals for superintegrability.
pub fn liouville_certify(
    h: &Scalar,
    functions: &[Scalar],
    omega: &SymplecticForm,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<LiouvilleCertificate, SymplecticError> {
    let dim = omega.dim();
    let n = dim / 2;
    if functions.len() < n {
        return Err(SymplecticError::Count {
            expected: n,
            found: functions.len(),
        });
    }
    let constancy = functions
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let b = poisson_bracket(f, h, omega)?;
            Ok(scalar_report(&format!("{{F{},H}}", k + 1), &b, points, tol)?)
        })
        .collect::<Result<Vec<_>, SymplecticError>>()?;
    let mut involution = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in j + 1..n {
            let b = poisson_bracket(&functions[j], &functions[k], omega)?;
            let worst = scalar_report("", &b, points, tol)?.max_residual;
            involution[j][k] = worst;
            involution[k][j] = worst;
        }
    }
    let involution_passed = involution.iter().flatten().all(|v| *v <= tol);

    let conserved: Vec<usize> = (0..functions.len()).filter(|&k| constancy[k].passed).collect();
    let ranks = par::try_map(points, |p| -> Result<(usize, usize), EvalError> {
        let grads = functions.iter().map(|f| f.gradient(p)).collect::<Result<Vec<_>, _>>()?;
        let first = linalg::rank(&grads[..n], 1e-9);
        let kept: Vec<Vec<f64>> = conserved.iter().map(|&k| grads[k].clone()).collect();
        Ok((first, linalg::rank(&kept, 1e-9)))
    })?;
    let quorum = |r: usize, pick: fn(&(usize, usize)) -> usize| {
        ranks.iter().filter(|x| pick(x) >= r).count() as f64 >= RANK_QUORUM * ranks.len() as f64
    };
    let independence_fraction = ranks.iter().filter(|r| r.0 == n).count() as f64 / ranks.len().max(1) as f64;
    let independent = quorum(n, |r| r.0);
    let joint_rank = (0..=conserved.len().min(dim)).rev().find(|&r| quorum(r, |x| x.1)).unwrap_or(0);
    let constancy_first = constancy[..n].iter().all(|r| r.passed);
    let certified = constancy_first && involution_passed && independent;
    Ok(LiouvilleCertificate {
        constancy,
        involution,
        involution_passed,
        independence_fraction,
        independent,
        joint_rank,
        superintegrable: certified && joint_rank > n,
        maximally_superintegrable: certified && joint_rank == dim - 1 && dim > 2,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::lie_derivative_form;
    use crate::sample::Sampler;

    fn s(chart: &Chart, text: &str) -> Scalar {
        Scalar::Expr(parse(text, chart).unwrap())
    }

    #[test]
    fn canonical_form_and_its_powers() {
        let c1 = Chart::cotangent(1);
        let w = canonical_symplectic(&c1).unwrap();
        assert_eq!(w.form().describe(), [("q1,p1".to_string(), "1".to_string())]);
        let theta = liouville_form(&c1).unwrap();
        assert!(exterior_derivative(&theta).unwrap().add(w.form()).is_zero());

        let c2 = Chart::cotangent(2);
        let w2 = canonical_symplectic(&c2).unwrap();
        // dq1∧dp1∧dq2∧dp2 = −dq1∧dq2∧dp1∧dp2 in sorted index order
        let top = w2.form().wedge_power(2).unwrap().top_component();
        assert_eq!(top.as_const(), Some(-2.0));
        assert!(exterior_derivative(w2.form()).unwrap().is_zero());
    }

    #[test]
    fn oscillator_field_and_brackets() {
        let c = Chart::cotangent(1);
        let w = canonical_symplectic(&c).unwrap();
        let xh = hamiltonian_vector_field(&s(&c, "(q1^2 + p1^2)/2"), &w).unwrap();
        assert_eq!(xh.describe(), ["p1", "-q1"]);
        let zero = hamiltonian_vector_field(&Scalar::constant(3.0), &w).unwrap();
        assert_eq!(zero.describe(), ["0", "0"]);
        let qp = poisson_bracket(&s(&c, "q1"), &s(&c, "p1"), &w).unwrap();
        assert_eq!(qp.as_expr().unwrap().as_const(), Some(1.0));
        let b = poisson_bracket(&s(&c, "q1^2/2"), &s(&c, "p1^2/2"), &w).unwrap();
        assert_eq!(b.describe(c.names()), "q1*p1");
        // ℒ_{X_H} ω = 0
        assert!(lie_derivative_form(&xh, w.form()).unwrap().is_zero());
    }

    #[test]
    fn procedural_hamiltonian_matches_symbolic() {
        let c = Chart::cotangent(1);
        let w = canonical_symplectic(&c).unwrap();
        let h = Scalar::rule(|x| Ok(x[0].powi(2) * x[1] + x[1].powi(3)));
        let xh = hamiltonian_vector_field(&h, &w).unwrap();
        let sym = hamiltonian_vector_field(&s(&c, "q1^2*p1 + p1^3"), &w).unwrap();
        for p in Sampler::default_for(2).with_count(20).points() {
            let (a, b) = (xh.eval(&p).unwrap(), sym.eval(&p).unwrap());
            assert!((a[0] - b[0]).abs() < 1e-7 && (a[1] - b[1]).abs() < 1e-7);
        }
    }

    #[test]
    fn non_closed_form_breaks_jacobi() {
        let c = Chart::plain(&["q", "p", "r", "s"]);
        let form = PForm::new(
            c.clone(),
            2,
            vec![
                (vec![0, 1], Expr::one()),
                (vec![1, 2], Expr::var(0)),
                (vec![2, 3], Expr::one()),
            ],
        )
        .unwrap();
        let pts = Sampler::default_for(4).with_count(20).points();
        assert!(matches!(
            SymplecticForm::new(form.clone(), &pts),
            Err(SymplecticError::NotClosed { .. })
        ));
        let w = SymplecticForm::unchecked(form).unwrap();
        let r = jacobi_identity_check(&s(&c, "q*s + p"), &s(&c, "r^2 + q"), &s(&c, "s*p + r"), &w, &pts, 1e-8).unwrap();
        assert!(!r.passed && r.max_residual > 1e-3);
    }

    #[test]
    fn isotropic_oscillator_certificate() {
        let c = Chart::cotangent(2);
        let w = canonical_symplectic(&c).unwrap();
        let h = s(&c, "(q1^2 + q2^2 + p1^2 + p2^2)/2");
        let h1 = s(&c, "(q1^2 + p1^2)/2");
        let lz = s(&c, "q1*p2 - q2*p1");
        let pts = Sampler::default_for(4).points();
        let cert = liouville_certify(&h, &[h.clone(), h1.clone()], &w, &pts, 1e-8).unwrap();
        assert!(cert.certified && !cert.superintegrable);
        assert_eq!(cert.joint_rank, 2);
        let sup = liouville_certify(&h, &[h.clone(), h1.clone(), lz], &w, &pts, 1e-8).unwrap();
        assert!(sup.certified && sup.superintegrable && sup.maximally_superintegrable);
        assert_eq!(sup.joint_rank, 3);
        let dup = liouville_certify(&h, &[h.clone(), h.clone()], &w, &pts, 1e-8).unwrap();
        assert!(!dup.independent && !dup.certified);
    }
}

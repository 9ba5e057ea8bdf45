//! Lax pairs from invariant (1,1)-tensors, trace invariants, characteristic
//! polynomials and pencils of 2-forms.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::expr::{self, EvalError, ExprMatrix};
use crate::geometry::{
    exterior_derivative, lie_bracket, lie_derivative_form, lie_derivative_tensor11, GeometryError, PForm, Scalar, Tensor11,
    VectorField,
};
use crate::report::Report;
use crate::symplectic::{SymplecticForm, CLOSEDNESS_TOL, SYMBOLIC_INVERSE_MAX_DIM};
use crate::{linalg, par};

/// Agreement required between the two characteristic-function routes.
pub const ROUTE_TOL: f64 = 1e-9;
/// Step of the flow used to differentiate procedural Lax matrices.
pub const FLOW_MICROSTEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InvariantsError {
    #[error("frame must have {expected} fields, got {found}")]
    FrameSize { expected: usize, found: usize },
    #[error("frame is degenerate at {0:?}")]
    DegenerateFrame(Vec<f64>),
    #[error("symplectic matrix is singular at {0:?}")]
    Singular(Vec<f64>),
    #[error("symbolic recursion operator only up to dimension {SYMBOLIC_INVERSE_MAX_DIM}")]
    TooLarge,
    #[error("second form is not a closed 2-form (residual {residual:e})")]
    NotClosed { residual: f64 },
    #[error("characteristic routes disagree by {discrepancy:e}")]
    RouteDisagreement { discrepancy: f64 },
    #[error("k_max = {k_max} exceeds dimension {dim}")]
    TraceOrder { k_max: usize, dim: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

type MatrixRule = Arc<dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>, EvalError> + Send + Sync>;

/// A matrix-valued function on a chart.
#[derive(Clone)]
pub enum MatrixField {
    Symbolic(ExprMatrix),
    Procedural(MatrixRule),
}

impl MatrixField {
    pub fn eval(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        match self {
            MatrixField::Symbolic(m) => m.iter().map(|r| r.iter().map(|e| e.eval(x)).collect()).collect(),
            MatrixField::Procedural(f) => f(x),
        }
    }

    pub fn as_symbolic(&self) -> Option<&ExprMatrix> {
        match self {
            MatrixField::Symbolic(m) => Some(m),
            MatrixField::Procedural(_) => None,
        }
    }
}

impl fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixField::Symbolic(m) => f.debug_tuple("Symbolic").field(m).finish(),
            MatrixField::Procedural(_) => f.write_str("Procedural(..)"),
        }
    }
}

/// `R(Xᵢ) = Σ Aᵢʲ Xⱼ` and `ℒ_X Xᵢ = Σ Bᵢʲ Xⱼ`, row index `i`.
#[derive(Clone, Debug)]
pub struct LaxPair {
    pub dim: usize,
    pub a: MatrixField,
    pub b: MatrixField,
}

fn commutator(b: &[Vec<f64>], a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let ba = linalg::mat_mul(b, a);
    let ab = linalg::mat_mul(a, b);
    ba.iter().zip(&ab).map(|(r, s)| r.iter().zip(s).map(|(u, v)| u - v).collect()).collect()
}

pub fn lax_matrices(r: &Tensor11, x: &VectorField, frame: Option<&[VectorField]>) -> Result<LaxPair, InvariantsError> {
    let n = r.chart().dim();
    crate::geometry::same_chart(r.chart(), x.chart())?;
    let Some(frame) = frame else {
        // coordinate frame: A = Rᵀ, Bᵢʲ = −∂ᵢXʲ
        let a = MatrixField::Symbolic(expr::transpose(r.components()));
        let b = match x.components() {
            Some(c) => MatrixField::Symbolic(
                (0..n).map(|i| (0..n).map(|j| (-c[j].diff(i)).simplify()).collect()).collect(),
            ),
            None => {
                let x = x.clone();
                MatrixField::Procedural(Arc::new(move |p| {
                    let jac = x.jacobian(p)?;
                    Ok((0..n).map(|i| (0..n).map(|j| -jac[j][i]).collect()).collect())
                }))
            }
        };
        return Ok(LaxPair { dim: n, a, b });
    };
    if frame.len() != n {
        return Err(InvariantsError::FrameSize {
            expected: n,
            found: frame.len(),
        });
    }
    let frame: Vec<VectorField> = frame.to_vec();
    let brackets = frame.iter().map(|f| lie_bracket(x, f)).collect::<Result<Vec<_>, _>>()?;
    let frame_at = {
        let frame = frame.clone();
        move |p: &[f64]| -> Result<Vec<Vec<f64>>, EvalError> { frame.iter().map(|f| f.eval(p)).collect() }
    };
    // with F the frame rows: A F = F Rᵀ and B F = [X, F]
    let solve_right = move |lhs: Vec<Vec<f64>>, f: &[Vec<f64>], p: &[f64]| -> Result<Vec<Vec<f64>>, EvalError> {
        let fm = linalg::to_matrix(f);
        let inv = fm.clone().try_inverse().filter(|_| linalg::rank(f, 1e-12) == n).ok_or_else(|| EvalError {
            reason: "degenerate frame",
            subexpr: format!("{p:?}"),
        })?;
        Ok(linalg::from_matrix(&(linalg::to_matrix(&lhs) * inv)))
    };
    let (fa, r2) = (frame_at.clone(), r.clone());
    let a = MatrixField::Procedural(Arc::new(move |p| {
        let f = fa(p)?;
        let rt: Vec<Vec<f64>> = {
            let m = r2.eval(p)?;
            (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect()
        };
        solve_right(linalg::mat_mul(&f, &rt), &f, p)
    }));
    let b = MatrixField::Procedural(Arc::new(move |p| {
        let f = frame_at(p)?;
        let lhs = brackets.iter().map(|v| v.eval(p)).collect::<Result<Vec<_>, _>>()?;
        solve_right(lhs, &f, p)
    }));
    Ok(LaxPair { dim: n, a, b })
}

/// `Ȧ` at `p`: symbolic `X(Aᵢʲ)` when possible, else a central difference
/// along the flow of `X`.
fn a_dot(pair: &LaxPair, x: &VectorField, p: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
    if let (Some(a), Some(_)) = (pair.a.as_symbolic(), x.components()) {
        return a.iter().map(|r| r.iter().map(|e| x.apply_expr(e).expect("symbolic").eval(p)).collect()).collect();
    }
    let h = FLOW_MICROSTEP;
    let rule = |y: &[f64]| x.eval(y);
    let fwd = pair.a.eval(&crate::flow::rk4_step(&rule, p, h)?)?;
    let bwd = pair.a.eval(&crate::flow::rk4_step(&rule, p, -h)?)?;
    Ok(fwd.iter().zip(&bwd).map(|(u, v)| u.iter().zip(v).map(|(s, t)| (s - t) / (2.0 * h)).collect()).collect())
}

/// Frobenius norm of `Ȧ − [B, A]` at each sample.
pub fn lax_residual(pair: &LaxPair, x: &VectorField, points: &[Vec<f64>], tol: f64) -> Result<Report, InvariantsError> {
    let r = par::try_map(points, |p| -> Result<f64, EvalError> {
        let a = pair.a.eval(p)?;
        let b = pair.b.eval(p)?;
        let dot = a_dot(pair, x, p)?;
        let c = commutator(&b, &a);
        let diff: Vec<Vec<f64>> = dot.iter().zip(&c).map(|(u, v)| u.iter().zip(v).map(|(s, t)| s - t).collect()).collect();
        Ok(linalg::frobenius(&diff))
    })?;
    Ok(Report::from_residuals("dA/dt - [B,A]", &r, points, tol))
}

/// `t_k = Tr(Aᵏ)` for `k = 1..=k_max`.
pub fn trace_invariants(pair: &LaxPair, k_max: usize) -> Result<Vec<Scalar>, InvariantsError> {
    if k_max > pair.dim {
        return Err(InvariantsError::TraceOrder { k_max, dim: pair.dim });
    }
    if let Some(a) = pair.a.as_symbolic() {
        let mut power = a.clone();
        let mut out = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            if k > 1 {
                power = expr::mat_mul(&power, a).into_iter().map(|r| r.into_iter().map(|e| e.simplify()).collect()).collect();
            }
            out.push(Scalar::Expr(expr::sum((0..pair.dim).map(|i| power[i][i].clone())).simplify()));
        }
        return Ok(out);
    }
    Ok((1..=k_max)
        .map(|k| {
            let a = pair.a.clone();
            Scalar::rule(move |p| {
                let m = a.eval(p)?;
                let mut power = m.clone();
                for _ in 1..k {
                    power = linalg::mat_mul(&power, &m);
                }
                Ok((0..m.len()).map(|i| power[i][i]).sum())
            })
        })
        .collect())
}

/// Faddeev–Le Verrier: `[1, c₁, …, cₙ]` with `det(λI − A) = λⁿ + c₁λⁿ⁻¹ + … + cₙ`.
pub fn leverrier(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    let mut m = a.to_vec();
    for k in 1..=n {
        if k > 1 {
            let c = coeffs[k - 1];
            let shifted: Vec<Vec<f64>> =
                (0..n).map(|i| (0..n).map(|j| m[i][j] + if i == j { c } else { 0.0 }).collect()).collect();
            m = linalg::mat_mul(a, &shifted);
        }
        let tr: f64 = (0..n).map(|i| m[i][i]).sum();
        coeffs.push(-tr / k as f64);
    }
    coeffs
}

/// Monic `g` with `g² = p` for a monic `p` of even degree, both in
/// descending order; also returns the largest unmatched coefficient.
pub fn monic_square_root(p: &[f64]) -> (Vec<f64>, f64) {
    let deg = p.len() - 1;
    let n = deg / 2;
    let mut g = vec![1.0];
    for k in 1..=n {
        let cross: f64 = (1..k).map(|j| g[j] * g[k - j]).sum();
        g.push((p[k] - cross) / 2.0);
    }
    let mut remainder = 0.0f64;
    for k in n + 1..=deg {
        let sq: f64 = (k - n..=n).map(|j| g[j] * g[k - j]).sum();
        remainder = remainder.max((p[k] - sq).abs());
    }
    (g, remainder)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `f(λ)` in ascending powers, with `(ω′ − λω)^∧n = f (ω)^∧n`, by
/// expanding the wedge power binomially.
pub fn pencil_wedge_coefficients(omega: &SymplecticForm, omega_prime: &PForm, x: &[f64]) -> Result<Vec<f64>, InvariantsError> {
    let n = omega.dim() / 2;
    let w = omega.form().eval(x)?;
    let wp = omega_prime.eval(x)?;
    let top = w.wedge_power(n)?.top_component();
    if top.abs() < 1e-300 {
        return Err(InvariantsError::Singular(x.to_vec()));
    }
    let mut coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mixed = match (k, n - k) {
            (0, m) => wp.wedge_power(m)?,
            (k, 0) => w.wedge_power(k)?,
            (k, m) => w.wedge_power(k)?.wedge(&wp.wedge_power(m)?)?,
        };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(sign * binomial(n, k) * mixed.top_component() / top);
    }
    Ok(coeffs)
}

/// `R = Ω⁻¹Ω′` at `x`, any dimension.
pub fn recursion_matrix_at(omega: &SymplecticForm, omega_prime: &PForm, x: &[f64]) -> Result<Vec<Vec<f64>>, InvariantsError> {
    let om = linalg::to_matrix(&omega.matrix_at(x)?);
    let inv = om.try_inverse().ok_or_else(|| InvariantsError::Singular(x.to_vec()))?;
    let wp = linalg::to_matrix(&omega_prime.eval(x)?.matrix());
    Ok(linalg::from_matrix(&(inv * wp)))
}

/// `f(λ)` in ascending powers from `det(λI − R) = f(λ)²`.
pub fn pencil_recursion_coefficients(omega: &SymplecticForm, omega_prime: &PForm, x: &[f64]) -> Result<(Vec<f64>, f64), InvariantsError> {
    let n = omega.dim() / 2;
    let (g, remainder) = monic_square_root(&leverrier(&recursion_matrix_at(omega, omega_prime, x)?));
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(((0..=n).map(|k| sign * g[n - k]).collect(), remainder))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PencilCharacteristic {
    /// Ascending powers of `λ`.
    pub coefficients: Vec<f64>,
    pub wedge_route: Vec<f64>,
    pub recursion_route: Vec<f64>,
    /// How far `det(λI − R)` is from a perfect square.
    pub square_remainder: f64,
    pub discrepancy: f64,
}

pub fn pencil_characteristic(omega: &SymplecticForm, omega_prime: &PForm, x: &[f64]) -> Result<PencilCharacteristic, InvariantsError> {
    check_second_form(omega, omega_prime, x)?;
    let wedge_route = pencil_wedge_coefficients(omega, omega_prime, x)?;
    let (recursion_route, square_remainder) = pencil_recursion_coefficients(omega, omega_prime, x)?;
    let discrepancy = wedge_route
        .iter()
        .zip(&recursion_route)
        .map(|(a, b)| (a - b).abs())
        .fold(square_remainder, f64::max);
    if !(discrepancy <= ROUTE_TOL) {
        return Err(InvariantsError::RouteDisagreement { discrepancy });
    }
    Ok(PencilCharacteristic {
        coefficients: wedge_route.clone(),
        wedge_route,
        recursion_route,
        square_remainder,
        discrepancy,
    })
}

fn check_second_form(omega: &SymplecticForm, omega_prime: &PForm, x: &[f64]) -> Result<(), InvariantsError> {
    crate::geometry::same_chart(omega.chart(), omega_prime.chart())?;
    if omega_prime.degree() != 2 {
        return Err(InvariantsError::NotClosed { residual: f64::NAN });
    }
    let residual = exterior_derivative(omega_prime)?.max_abs_at(x)?;
    if residual > CLOSEDNESS_TOL {
        return Err(InvariantsError::NotClosed { residual });
    }
    Ok(())
}

/// The coefficients of `f(λ)` as scalar functions, for drift checks.
pub fn pencil_coefficient_functions(omega: &SymplecticForm, omega_prime: &PForm) -> Vec<Scalar> {
    let n = omega.dim() / 2;
    (0..=n)
        .map(|k| {
            let (w, wp) = (omega.clone(), omega_prime.clone());
            Scalar::rule(move |x| {
                pencil_wedge_coefficients(&w, &wp, x).map(|c| c[k]).map_err(|e| match e {
                    InvariantsError::Eval(e) => e,
                    other => EvalError {
                        reason: "pencil coefficient",
                        subexpr: other.to_string(),
                    },
                })
            })
        })
        .collect()
}

/// `ω′ = ℒ_Y ω` for a non-symplectic symmetry `Y`.
pub fn pencil_from_symmetry(y: &VectorField, omega: &SymplecticForm) -> Result<PForm, InvariantsError> {
    Ok(lie_derivative_form(y, omega.form())?)
}

/// Symbolic `𝓡 = ω̂⁻¹∘ω̂′`, i.e. `R = Ω⁻¹Ω′` acting on columns.
pub fn recursion_operator(omega: &SymplecticForm, omega_prime: &PForm) -> Result<Tensor11, InvariantsError> {
    crate::geometry::same_chart(omega.chart(), omega_prime.chart())?;
    let sharp = omega.sharp_matrix().ok_or(if omega.dim() > SYMBOLIC_INVERSE_MAX_DIM {
        InvariantsError::TooLarge
    } else {
        InvariantsError::Singular(vec![])
    })?;
    // sharp = −Ω⁻¹
    let r = expr::mat_mul(sharp, &omega_prime.matrix())
        .into_iter()
        .map(|row| row.into_iter().map(|e| (-e).simplify()).collect())
        .collect();
    Ok(Tensor11::new(omega.chart().clone(), r)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionInvariance {
    pub omega: Report,
    pub omega_prime: Report,
    /// `ℒ_X R`, meaningful only when both forms are invariant.
    pub operator: Report,
    pub invariant: bool,
}

pub fn recursion_invariance(
    omega: &SymplecticForm,
    omega_prime: &PForm,
    x: &VectorField,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<RecursionInvariance, InvariantsError> {
    let form_report = |name: &str, a: &PForm| -> Result<Report, InvariantsError> {
        let l = lie_derivative_form(x, a)?;
        Ok(Report::from_residuals(name, &par::try_map(points, |p| l.max_abs_at(p))?, points, tol))
    };
    let omega_rep = form_report("L_X w", omega.form())?;
    let prime_rep = form_report("L_X w'", omega_prime)?;
    let lr = lie_derivative_tensor11(x, &recursion_operator(omega, omega_prime)?)?;
    let res = par::try_map(points, |p| lr.eval(p).map(|m| linalg::frobenius(&m)))?;
    let operator = Report::from_residuals("L_X R", &res, points, tol);
    Ok(RecursionInvariance {
        invariant: omega_rep.passed && prime_rep.passed && operator.passed,
        omega: omega_rep,
        omega_prime: prime_rep,
        operator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Chart, Expr};
    use crate::flow::{drift, integrate, Method};
    use crate::symplectic::{canonical_symplectic, hamiltonian_vector_field};
    use crate::Sampler;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(n: usize) -> Vec<Vec<f64>> {
        Sampler::default_for(n).points()
    }

    fn oscillator() -> (Chart, SymplecticForm, PForm, VectorField) {
        let c = Chart::cotangent(2);
        let w = canonical_symplectic(&c).unwrap();
        let wp = PForm::new(c.clone(), 2, vec![(vec![0, 2], Expr::constant(2.0)), (vec![1, 3], Expr::one())]).unwrap();
        let h = parse("(q1^2 + p1^2)/2 + (q2^2 + p2^2)/2", &c).unwrap();
        let x = hamiltonian_vector_field(&Scalar::Expr(h), &w).unwrap();
        (c, w, wp, x)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol)
    }

    #[test]
    fn leverrier_small_cases() {
        assert!(close(&leverrier(&linalg::identity(2)), &[1.0, -2.0, 1.0], 1e-15));
        assert!(close(&leverrier(&[vec![2.0, 0.0], vec![0.0, 3.0]]), &[1.0, -5.0, 6.0], 1e-15));
    }

    /// `det(λI − A)` sampled at `n+1` nodes and interpolated.
    fn charpoly_by_determinants(a: &[Vec<f64>]) -> Vec<f64> {
        let n = a.len();
        let nodes: Vec<f64> = (0..=n).map(|k| k as f64 - n as f64 / 2.0).collect();
        let vals: Vec<f64> = nodes
            .iter()
            .map(|l| {
                let m: Vec<Vec<f64>> =
                    (0..n).map(|i| (0..n).map(|j| if i == j { l - a[i][j] } else { -a[i][j] }).collect()).collect();
                linalg::det(&m)
            })
            .collect();
        let vander: Vec<Vec<f64>> = nodes.iter().map(|l| (0..=n).map(|k| l.powi((n - k) as i32)).collect()).collect();
        linalg::solve(&vander, &vals).unwrap()
    }

    #[test]
    fn leverrier_matches_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let a: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            assert!(close(&leverrier(&a), &charpoly_by_determinants(&a), 1e-9));
        }
    }

    #[test]
    fn square_root_of_squares() {
        // (λ² − 3λ + 2)²
        let (g, rem) = monic_square_root(&[1.0, -6.0, 13.0, -12.0, 4.0]);
        assert!(close(&g, &[1.0, -3.0, 2.0], 1e-15) && rem < 1e-15);
        let (_, rem) = monic_square_root(&[1.0, 0.0, 1.0]);
        assert!(rem > 0.5);
    }

    #[test]
    fn identity_tensor_gives_trivial_lax_pair() {
        let (c, _, _, x) = oscillator();
        let pair = lax_matrices(&Tensor11::identity(c.clone()), &x, None).unwrap();
        assert!(lax_residual(&pair, &x, &pts(4), 1e-12).unwrap().passed);
        for t in trace_invariants(&pair, 4).unwrap() {
            assert_eq!(t.as_expr().and_then(Expr::as_const), Some(4.0));
        }
        let zero = VectorField::zero(c);
        assert_eq!(lax_residual(&pair, &zero, &pts(4), 0.0).unwrap().max_residual, 0.0);
    }

    #[test]
    fn coordinate_frame_b_is_minus_transposed_jacobian() {
        let c = Chart::cotangent(1);
        let x = VectorField::from_text(&c, &["p1", "-q1"]).unwrap();
        let pair = lax_matrices(&Tensor11::identity(c), &x, None).unwrap();
        assert_eq!(pair.b.eval(&[0.3, 0.7]).unwrap(), vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
    }

    #[test]
    fn constant_diagonal_traces() {
        let c = Chart::plain(&["x", "y"]);
        let r = Tensor11::from_text(&c, &[&["2", "0"], &["0", "3"]]).unwrap();
        let pair = lax_matrices(&r, &VectorField::zero(c), None).unwrap();
        let t = trace_invariants(&pair, 2).unwrap();
        assert_eq!(t[0].eval(&[0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(t[1].eval(&[0.0, 0.0]).unwrap(), 13.0);
        assert!(trace_invariants(&pair, 3).is_err());
    }

    #[test]
    fn pencil_of_separable_oscillator() {
        let (_, w, wp, x) = oscillator();
        let r = recursion_operator(&w, &wp).unwrap();
        let want = [[2.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 2.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        for (i, row) in want.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(r.get(i, j).as_const(), Some(*v));
            }
        }
        for p in pts(4) {
            let pc = pencil_characteristic(&w, &wp, &p).unwrap();
            assert!(close(&pc.coefficients, &[2.0, -3.0, 1.0], 1e-12), "{pc:?}");
            assert!(pc.discrepancy <= 1e-9);
        }
        let inv = recursion_invariance(&w, &wp, &x, &pts(4), 1e-8).unwrap();
        assert!(inv.invariant);
        let pair = lax_matrices(&r, &x, None).unwrap();
        assert!(lax_residual(&pair, &x, &pts(4), 1e-8).unwrap().passed);
    }

    #[test]
    fn proportional_pencil() {
        let (_, w, _, _) = oscillator();
        let r = recursion_operator(&w, w.form()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r.get(i, j).as_const(), Some(if i == j { 1.0 } else { 0.0 }));
            }
        }
        let pc = pencil_characteristic(&w, w.form(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(close(&pc.coefficients, &[1.0, -2.0, 1.0], 1e-12));
    }

    #[test]
    fn broken_symmetry_shows_in_lax_residual() {
        let (_, w, wp, x) = oscillator();
        let r = recursion_operator(&w, &wp).unwrap().with_component(0, 0, Expr::var(0));
        let pair = lax_matrices(&r, &x, None).unwrap();
        assert!(lax_residual(&pair, &x, &pts(4), 1e-8).unwrap().max_residual > 1e-3);
    }

    #[test]
    fn general_frame_matches_coordinate_frame_residual() {
        let (c, w, wp, x) = oscillator();
        let r = recursion_operator(&w, &wp).unwrap();
        let frame: Vec<VectorField> = (0..4)
            .map(|i| {
                let mut comps = vec![Expr::zero(); 4];
                comps[i] = parse("2 + q1^2", &c).unwrap();
                comps[(i + 1) % 4] = Expr::constant(0.5);
                VectorField::new(c.clone(), comps).unwrap()
            })
            .collect();
        let pair = lax_matrices(&r, &x, Some(&frame)).unwrap();
        let rep = lax_residual(&pair, &x, &pts(4), 1e-7).unwrap();
        assert!(rep.passed, "{rep:?}");
        // eigenvalues are frame independent
        let p = [0.3, -0.2, 0.5, 1.1];
        let coords = leverrier(&r.eval(&p).unwrap());
        assert!(close(&leverrier(&pair.a.eval(&p).unwrap()), &coords, 1e-10));
    }

    #[test]
    fn coefficients_and_traces_are_conserved() {
        let (_, w, wp, x) = oscillator();
        let traj = integrate(&x, &[1.0, 0.5, -0.3, 0.8], 10.0, Method::rk4(), None).unwrap();
        for f in pencil_coefficient_functions(&w, &wp) {
            assert!(drift("f_k", &f, &traj, 1e-8).unwrap().passed);
        }
        let pair = lax_matrices(&recursion_operator(&w, &wp).unwrap(), &x, None).unwrap();
        for t in trace_invariants(&pair, 2).unwrap() {
            assert!(drift("t_k", &t, &traj, 1e-8).unwrap().passed);
        }
    }
}

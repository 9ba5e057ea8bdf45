//! Lie algebras spanned by families of vector fields.
//!
//! Structure constants are fitted numerically at sample points, the derived
//! and lower central series are computed by numerical rank, and in two
//! dimensions a first integral of `X₁` is built by quadrature from a second
//! field `X₂` with `[X₁, X₂] = λ X₁`.

use serde::Serialize;

use crate::expr::{EvalError, Expr};
use crate::flow::{integrate, FlowError, Method, Trajectory};
use crate::geometry::{exterior_derivative, lie_bracket, Form, GeometryError, PForm, Scalar, VectorField};
use crate::report::{self, Report};
use crate::sample::Region;
use crate::{linalg, par, quad};

/// Across-sample spread below which fitted coefficients count as constant.
pub const CONSTANCY_TOL: f64 = 1e-6;
/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieAlgError {
    #[error("fields are linearly dependent over the reals")]
    DependentFields,
    #[error("fields do not close on a real Lie algebra (spread {spread:e}, fit residual {residual:e})")]
    NotClosed { spread: f64, residual: f64 },
    #[error("[X1, X2] is not a constant multiple of X1 (spread {spread:e}, residual {residual:e})")]
    LambdaNotConstant { spread: f64, residual: f64 },
    #[error("i(X2)α₀ vanishes at {0:?}")]
    Normalization(Vec<f64>),
    #[error("dα does not vanish (max {0:e}); the line integral would depend on the path")]
    NotClosedForm(f64),
    #[error("needs a 2-dimensional chart, got {0}")]
    NotPlanar(usize),
    #[error("base point outside the region")]
    BaseOutside,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    /// Square frame solved at each sample; constants are sample means.
    Pointwise,
    /// One least-squares system stacked over all samples, used when the
    /// fields are not a pointwise frame.
    Stacked,
}

/// `[X_i, X_j] = Σ_k c_ij^k X_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureConstants {
    pub dim: usize,
    /// Flattened `c[i][j][k]`.
    pub values: Vec<f64>,
    pub method: FitMethod,
    /// Largest across-sample standard deviation of a coefficient
    /// (zero for the stacked fit).
    pub max_spread: f64,
    /// Largest pointwise `‖Σ c X_k − [X_i,X_j]‖` with the returned constants.
    pub max_residual: f64,
    /// Largest frame condition number met (pointwise fits only).
    pub max_condition: Option<f64>,
    pub samples: usize,
}

impl StructureConstants {
    pub fn from_values(dim: usize, values: Vec<f64>) -> StructureConstants {
        assert_eq!(values.len(), dim * dim * dim, "need dim³ constants");
        StructureConstants {
            dim,
            values,
            method: FitMethod::Pointwise,
            max_spread: 0.0,
            max_residual: 0.0,
            max_condition: None,
            samples: 0,
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.dim + j) * self.dim + k]
    }

    /// `max |c_ij^k + c_ji^k|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    worst = worst.max((self.get(i, j, k) + self.get(j, i, k)).abs());
                }
            }
        }
        worst
    }

    /// `max |Σ_m (c_ij^m c_mk^l + c_jk^m c_mi^l + c_ki^m c_mj^l)|`.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s: f64 = (0..n)
                            .map(|m| {
                                self.get(i, j, m) * self.get(m, k, l)
                                    + self.get(j, k, m) * self.get(m, i, l)
                                    + self.get(k, i, m) * self.get(m, j, l)
                            })
                            .sum();
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Coefficients of `[u, v]` for `u, v` given in the basis of the fields.
    pub fn bracket(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let w = u[i] * v[j];
                if w == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.get(i, j, k);
                }
            }
        }
        out
    }
}

/// Fits structure constants of `fields` at `points`. A square frame that is
/// well conditioned at every sample is solved pointwise; otherwise (more
/// fields than dimensions, or a frame degenerating somewhere) the constants
/// come from one least-squares system over all samples.
pub fn structure_constants(fields: &[VectorField], points: &[Vec<f64>]) -> Result<StructureConstants, LieAlgError> {
    let m = fields.len();
    let n = fields.first().map_or(0, VectorField::dim);
    let mut brackets = Vec::with_capacity(m * m);
    for a in fields {
        for b in fields {
            brackets.push(lie_bracket(a, b)?);
        }
    }
    // frame columns and bracket vectors at every sample
    let evaluated = par::try_map(points, |p| -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), EvalError> {
        let frame = fields.iter().map(|f| f.eval(p)).collect::<Result<Vec<_>, _>>()?;
        let br = brackets.iter().map(|b| b.eval(p)).collect::<Result<Vec<_>, _>>()?;
        Ok((frame, br))
    })?;
    let as_matrix = |frame: &[Vec<f64>]| -> Vec<Vec<f64>> { (0..n).map(|r| (0..m).map(|k| frame[k][r]).collect()).collect() };

    let pointwise = m == n
        && evaluated
            .iter()
            .all(|(frame, _)| linalg::condition_number(&as_matrix(frame)) < 1e10);
    let mut values = vec![0.0; m * m * m];
    let (method, max_spread, max_condition);
    if pointwise {
        let per_sample = par::map(&evaluated, |(frame, br)| {
            let a = as_matrix(frame);
            let cond = linalg::condition_number(&a);
            let sol: Vec<Vec<f64>> = br.iter().map(|b| linalg::solve(&a, b).expect("well-conditioned frame")).collect();
            (sol, cond)
        });
        let mut spread = 0.0f64;
        for ij in 0..m * m {
            for k in 0..m {
                let series: Vec<f64> = per_sample.iter().map(|(s, _)| s[ij][k]).collect();
                values[ij * m + k] = report::mean(&series);
                spread = spread.max(report::std_dev(&series));
            }
        }
        method = FitMethod::Pointwise;
        max_spread = spread;
        max_condition = Some(per_sample.iter().fold(0.0f64, |c, (_, k)| c.max(*k)));
    } else {
        let stacked: Vec<Vec<f64>> = evaluated
            .iter()
            .flat_map(|(frame, _)| as_matrix(frame))
            .collect();
        if linalg::rank(&stacked, RANK_TOL) < m {
            return Err(LieAlgError::DependentFields);
        }
        for ij in 0..m * m {
            let rhs: Vec<f64> = evaluated.iter().flat_map(|(_, br)| br[ij].clone()).collect();
            let (sol, _) = linalg::least_squares(&stacked, &rhs).ok_or(LieAlgError::DependentFields)?;
            values[ij * m..(ij + 1) * m].copy_from_slice(&sol);
        }
        method = FitMethod::Stacked;
        max_spread = 0.0;
        max_condition = None;
    }
    let mut max_residual = 0.0f64;
    for (frame, br) in &evaluated {
        for ij in 0..m * m {
            for r in 0..n {
                let fit: f64 = (0..m).map(|k| values[ij * m + k] * frame[k][r]).sum();
                max_residual = max_residual.max((fit - br[ij][r]).abs());
            }
        }
    }
    if max_spread > CONSTANCY_TOL || max_residual > CONSTANCY_TOL {
        return Err(LieAlgError::NotClosed {
            spread: max_spread,
            residual: max_residual,
        });
    }
    Ok(StructureConstants {
        dim: m,
        values,
        method,
        max_spread,
        max_residual,
        max_condition,
        samples: points.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LieAlgebraReport {
    pub solvable: bool,
    pub nilpotent: bool,
    /// `dim g, dim g', dim g'', …` until zero or stationary.
    pub derived_series: Vec<usize>,
    /// `dim g, dim [g,g], dim [g,[g,g]], …` until zero or stationary.
    pub lower_central_series: Vec<usize>,
}

fn span_of_brackets(c: &StructureConstants, left: &[Vec<f64>], right: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for u in left {
        for v in right {
            rows.push(c.bracket(u, v));
        }
    }
    // an all-zero stack has rank 0 regardless of the relative threshold
    if rows.iter().flatten().all(|x| x.abs() < 1e-300) {
        return Vec::new();
    }
    linalg::row_space_basis(&rows, RANK_TOL)
}

fn series(c: &StructureConstants, next: impl Fn(&[Vec<f64>]) -> Vec<Vec<f64>>) -> Vec<usize> {
    let mut current = linalg::identity(c.dim);
    let mut dims = vec![c.dim];
    loop {
        if current.is_empty() {
            return dims;
        }
        let following = next(&current);
        let d = following.len();
        if d == current.len() {
            return dims;
        }
        dims.push(d);
        current = following;
    }
}

/// Derived and lower central series of the algebra with constants `c`.
pub fn solvability(c: &StructureConstants) -> LieAlgebraReport {
    let whole = linalg::identity(c.dim);
    let derived = series(c, |g| span_of_brackets(c, g, g));
    let lower = series(c, |g| span_of_brackets(c, &whole, g));
    LieAlgebraReport {
        solvable: derived.last() == Some(&0),
        nilpotent: lower.last() == Some(&0),
        derived_series: derived,
        lower_central_series: lower,
    }
}

/// Outcome of the planar construction; `integral` is `F` itself.
#[derive(Clone)]
pub struct PlanarIntegral {
    pub integral: Scalar,
    pub alpha: PForm,
    pub lambda: f64,
    pub lambda_spread: f64,
    /// `dα` at samples.
    pub closedness: Report,
    /// The two axis-parallel paths agree.
    pub path_independence: Report,
    /// `|F(φᵗ_{X₁}x) − F(x)|` along short trajectories of `X₁`.
    pub x1_drift: Report,
    /// `|F(φᵗ_{X₂}x) − F(x) − t|` along short trajectories of `X₂`.
    pub x2_rate: Report,
}

impl PlanarIntegral {
    pub fn passed(&self) -> bool {
        self.closedness.passed && self.path_independence.passed && self.x1_drift.passed && self.x2_rate.passed
    }
}

const QUAD_TOL: f64 = 1e-10;

fn line_integral(alpha: &[Expr; 2], from: &[f64], to: &[f64], x_first: bool) -> Result<f64, EvalError> {
    let leg = |axis: usize, fixed: f64, a: f64, b: f64| -> Result<f64, EvalError> {
        let f = |t: f64| {
            let p = if axis == 0 { [t, fixed] } else { [fixed, t] };
            alpha[axis].eval(&p)
        };
        quad::integrate(f, a, b, QUAD_TOL).map_err(|e| match e {
            quad::QuadError::Integrand(e) => e,
            quad::QuadError::NoConvergence { .. } => EvalError {
                reason: "quadrature did not converge",
                subexpr: alpha[axis].to_string(),
            },
        })
    };
    if x_first {
        Ok(leg(0, from[1], from[0], to[0])? + leg(1, to[0], from[1], to[1])?)
    } else {
        Ok(leg(1, from[0], from[1], to[1])? + leg(0, to[1], from[0], to[0])?)
    }
}

/// Samples along a trajectory of `x` started at `p`, stopping at the region
/// boundary.
fn short_orbit(x: &VectorField, p: &[f64], t: f64, region: &Region) -> Result<Trajectory, LieAlgError> {
    match integrate(x, p, t, Method::Rk4 { step: 1e-3 }, Some(region)) {
        Ok(tr) => Ok(tr),
        Err(FlowError::LeftBox { partial }) => {
            let mut tr = *partial;
            tr.times.pop();
            tr.states.pop();
            Ok(tr)
        }
        Err(FlowError::Eval(e)) => Err(e.into()),
        Err(_) => Ok(Trajectory {
            times: vec![0.0],
            states: vec![p.to_vec()],
            method: Method::rk4(),
            seed: None,
        }),
    }
}

/// First integral `F` of `X₁` with `X₂(F) = 1`, from `[X₁, X₂] = λ X₁` with
/// constant `λ` on a planar chart. `F` is the line integral of
/// `α = α₀ / i(X₂)α₀`, `α₀ = −X₁² dx¹ + X₁¹ dx²`, from `base` along the
/// axis-parallel path that moves in `x¹` first.
pub fn lie_first_integral_2d(
    x1: &VectorField,
    x2: &VectorField,
    base: &[f64],
    region: &Region,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<PlanarIntegral, LieAlgError> {
    if x1.dim() != 2 {
        return Err(LieAlgError::NotPlanar(x1.dim()));
    }
    if !region.contains(base) {
        return Err(LieAlgError::BaseOutside);
    }
    let a = x1.components().ok_or(GeometryError::NotSymbolic("planar quadrature"))?;
    let b = x2.components().ok_or(GeometryError::NotSymbolic("planar quadrature"))?;
    let br = lie_bracket(x1, x2)?;

    // λ at each sample by projection onto X₁
    let fits = par::try_map(points, |p| -> Result<(f64, f64, f64), EvalError> {
        let (u, w) = (x1.eval(p)?, br.eval(p)?);
        let norm2 = u[0] * u[0] + u[1] * u[1];
        let lam = (w[0] * u[0] + w[1] * u[1]) / norm2;
        let res = ((w[0] - lam * u[0]).powi(2) + (w[1] - lam * u[1]).powi(2)).sqrt();
        let pairing = b[0].eval(p)? * -u[1] + b[1].eval(p)? * u[0];
        Ok((lam, res, pairing))
    })?;
    let lams: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let spread = report::std_dev(&lams);
    let residual = fits.iter().fold(0.0f64, |m, f| m.max(f.1));
    if !(spread <= 1e-6 && residual <= 1e-6) {
        return Err(LieAlgError::LambdaNotConstant { spread, residual });
    }
    if let Some(k) = fits.iter().position(|f| f.2.abs() < 1e-12) {
        return Err(LieAlgError::Normalization(points[k].clone()));
    }

    let pairing = (b[1].clone() * a[0].clone() - b[0].clone() * a[1].clone()).simplify();
    let alpha_c = [(-a[1].clone() / pairing.clone()).simplify(), (a[0].clone() / pairing).simplify()];
    let alpha = Form::from_terms(x1.chart().clone(), 1, [(vec![0], alpha_c[0].clone()), (vec![1], alpha_c[1].clone())]);
    let d_alpha = exterior_derivative(&alpha)?;
    let closed: Vec<f64> = par::try_map(points, |p| d_alpha.max_abs_at(p))?;
    let closedness = Report::from_residuals("d(alpha)", &closed, points, tol);
    if !closedness.passed {
        return Err(LieAlgError::NotClosedForm(closedness.max_residual));
    }

    let (base_v, comps) = (base.to_vec(), alpha_c.clone());
    let integral = Scalar::rule(move |p| line_integral(&comps, &base_v, p, true));

    let paths = par::try_map(points, |p| -> Result<f64, EvalError> {
        Ok((line_integral(&alpha_c, base, p, true)? - line_integral(&alpha_c, base, p, false)?).abs())
    })?;
    let path_independence = Report::from_residuals("path independence", &paths, points, 1e-8);

    // orbit checks from a handful of the sample points
    let starts: Vec<Vec<f64>> = points.iter().take(10).cloned().collect();
    let x1_res = par::try_map(&starts, |p| -> Result<f64, LieAlgError> {
        let tr = short_orbit(x1, p, 0.5, region)?.thinned(50);
        let f0 = integral.eval(p)?;
        let mut worst = 0.0f64;
        for s in &tr.states {
            worst = worst.max((integral.eval(s)? - f0).abs());
        }
        Ok(worst)
    })?;
    let x2_res = par::try_map(&starts, |p| -> Result<f64, LieAlgError> {
        let tr = short_orbit(x2, p, 0.5, region)?.thinned(50);
        let f0 = integral.eval(p)?;
        let mut worst = 0.0f64;
        for (t, s) in tr.times.iter().zip(&tr.states) {
            worst = worst.max((integral.eval(s)? - f0 - t).abs());
        }
        Ok(worst)
    })?;
    Ok(PlanarIntegral {
        x1_drift: Report::from_residuals("X1(F) drift", &x1_res, &starts, 1e-6),
        x2_rate: Report::from_residuals("X2(F) - 1", &x2_res, &starts, 1e-6),
        integral,
        alpha,
        lambda: report::mean(&lams),
        lambda_spread: spread,
        closedness,
        path_independence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Chart;
    use crate::sample::Sampler;

    fn fields(chart: &Chart, comps: &[&[&str]]) -> Vec<VectorField> {
        comps.iter().map(|c| VectorField::from_text(chart, c).unwrap()).collect()
    }

    #[test]
    fn commuting_frame() {
        let c = Chart::plain(&["x", "y"]);
        let f = fields(&c, &[&["1", "0"], &["0", "1"]]);
        let sc = structure_constants(&f, &Sampler::default_for(2).points()).unwrap();
        assert_eq!(sc.method, FitMethod::Pointwise);
        assert!(sc.values.iter().all(|v| *v == 0.0));
        let r = solvability(&sc);
        assert!(r.solvable && r.nilpotent);
        assert_eq!(r.derived_series, [2, 0]);
    }

    #[test]
    fn affine_line_algebra() {
        let c = Chart::plain(&["x"]);
        let f = fields(&c, &[&["1"], &["x"]]);
        let sc = structure_constants(&f, &Sampler::default_for(1).points()).unwrap();
        assert_eq!(sc.method, FitMethod::Stacked);
        assert!((sc.get(0, 1, 0) - 1.0).abs() < 1e-9 && (sc.get(1, 0, 0) + 1.0).abs() < 1e-9);
        assert!(sc.max_residual < 1e-9);
        let r = solvability(&sc);
        assert!(r.solvable && !r.nilpotent);
        assert_eq!(r.derived_series, [2, 1, 0]);
        assert_eq!(r.lower_central_series, [2, 1]);
    }

    #[test]
    fn heisenberg() {
        let c = Chart::plain(&["x", "y"]);
        let f = fields(&c, &[&["1", "0"], &["0", "1"], &["0", "x"]]);
        let sc = structure_constants(&f, &Sampler::default_for(2).points()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = match (i, j, k) {
                        (0, 2, 1) => 1.0,
                        (2, 0, 1) => -1.0,
                        _ => 0.0,
                    };
                    assert!((sc.get(i, j, k) - want).abs() < 1e-9, "c[{i}][{j}][{k}]");
                }
            }
        }
        assert!(sc.jacobi_residual() < 1e-8 && sc.antisymmetry_residual() < 1e-12);
        let r = solvability(&sc);
        assert!(r.nilpotent && r.solvable);
        assert_eq!(r.lower_central_series, [3, 1, 0]);
    }

    #[test]
    fn non_closing_family_is_rejected() {
        let c = Chart::plain(&["x"]);
        let f = fields(&c, &[&["1"], &["x^2"], &["x^3"]]);
        let err = structure_constants(&f, &Sampler::default_for(1).points()).unwrap_err();
        assert!(matches!(err, LieAlgError::NotClosed { .. }));
    }

    #[test]
    fn sl2_is_not_solvable() {
        let c = Chart::plain(&["x"]);
        let f = fields(&c, &[&["1"], &["x"], &["x^2"]]);
        let sc = structure_constants(&f, &Sampler::default_for(1).points()).unwrap();
        let r = solvability(&sc);
        assert!(!r.solvable && !r.nilpotent);
        assert_eq!(r.derived_series, [3]);
    }

    #[test]
    fn planar_translation_example() {
        let c = Chart::plain(&["x", "y"]);
        let x1 = VectorField::from_text(&c, &["1", "0"]).unwrap();
        let x2 = VectorField::from_text(&c, &["x", "1"]).unwrap();
        let region = Region::default_box(2);
        let pts = Sampler::default_for(2).with_count(30).points();
        let pi = lie_first_integral_2d(&x1, &x2, &[0.0, 0.0], &region, &pts, 1e-8).unwrap();
        assert!((pi.lambda - 1.0).abs() < 1e-12);
        assert!(pi.passed(), "{:?} {:?}", pi.x1_drift, pi.x2_rate);
        for p in &pts {
            assert!((pi.integral.eval(p).unwrap() - p[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn planar_rotation_example() {
        let c = Chart::plain(&["x", "y"]);
        let x1 = VectorField::from_text(&c, &["y", "-x"]).unwrap();
        let x2 = VectorField::from_text(&c, &["x", "y"]).unwrap();
        let region = Region::cube(2, 0.5, 2.0);
        let pts = Sampler::new(42, 30, region.clone()).points();
        let base = [1.0, 1.0];
        let pi = lie_first_integral_2d(&x1, &x2, &base, &region, &pts, 1e-8).unwrap();
        assert!(pi.passed());
        let exact = |p: &[f64]| 0.5 * (p[0] * p[0] + p[1] * p[1]).ln() - 0.5 * 2f64.ln();
        for p in &pts {
            assert!((pi.integral.eval(p).unwrap() - exact(p)).abs() < 1e-9);
        }
    }
}

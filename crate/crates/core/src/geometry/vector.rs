use std::fmt;
use std::sync::Arc;

use super::{check_vars, same_chart, GeometryError, Scalar, DEFAULT_FD_STEP};
use crate::expr::{parse, sum, Chart, EvalError, Expr, ParseError};

type Rule = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync>;
type JacobianRule = Arc<dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>, EvalError> + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Symbolic(Vec<Expr>),
    Procedural {
        rule: Rule,
        /// Exact partials, when the producer of the rule can supply them.
        jacobian: Option<JacobianRule>,
        step: f64,
    },
}

/// `X = Σ Xⁱ ∂/∂xⁱ` on a chart.
#[derive(Clone)]
pub struct VectorField {
    chart: Chart,
    repr: Repr,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<VectorField, GeometryError> {
        if components.len() != chart.dim() {
            return Err(GeometryError::Dimension {
                expected: chart.dim(),
                found: components.len(),
            });
        }
        for c in &components {
            check_vars(c, chart.dim())?;
        }
        Ok(VectorField {
            chart,
            repr: Repr::Symbolic(components),
        })
    }

    /// Parses one component per coordinate. Panics on a dimension mismatch.
    pub fn from_text(chart: &Chart, components: &[&str]) -> Result<VectorField, ParseError> {
        let comps = components
            .iter()
            .map(|s| parse(s, chart).map(|e| e.simplify()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VectorField::new(chart.clone(), comps).expect("component count matches chart"))
    }

    /// A field given by an evaluation rule; partials by central differences.
    pub fn procedural(
        chart: Chart,
        rule: impl Fn(&[f64]) -> Result<Vec<f64>, EvalError> + Send + Sync + 'static,
    ) -> VectorField {
        VectorField {
            chart,
            repr: Repr::Procedural {
                rule: Arc::new(rule),
                jacobian: None,
                step: DEFAULT_FD_STEP,
            },
        }
    }

    /// Attaches an exact Jacobian `J[i][k] = ∂ₖXⁱ` to a procedural field.
    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> Result<Vec<Vec<f64>>, EvalError> + Send + Sync + 'static,
    ) -> VectorField {
        if let Repr::Procedural { jacobian, .. } = &mut self.repr {
            *jacobian = Some(Arc::new(jac));
        }
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> VectorField {
        if let Repr::Procedural { step, .. } = &mut self.repr {
            *step = h;
        }
        self
    }

    pub fn zero(chart: Chart) -> VectorField {
        let n = chart.dim();
        VectorField {
            chart,
            repr: Repr::Symbolic(vec![Expr::zero(); n]),
        }
    }

    /// The coordinate field `∂/∂xⁱ`.
    pub fn coordinate(chart: Chart, i: usize) -> VectorField {
        let n = chart.dim();
        let comps = (0..n).map(|k| if k == i { Expr::one() } else { Expr::zero() }).collect();
        VectorField {
            chart,
            repr: Repr::Symbolic(comps),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn components(&self) -> Option<&[Expr]> {
        match &self.repr {
            Repr::Symbolic(c) => Some(c),
            Repr::Procedural { .. } => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.repr, Repr::Symbolic(_))
    }

    /// Whether partial derivatives are exact (symbolic or supplied Jacobian).
    pub fn has_exact_partials(&self) -> bool {
        match &self.repr {
            Repr::Symbolic(_) => true,
            Repr::Procedural { jacobian, .. } => jacobian.is_some(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        match &self.repr {
            Repr::Symbolic(c) => c.iter().map(|e| e.eval(x)).collect(),
            Repr::Procedural { rule, .. } => rule(x),
        }
    }

    /// `J[i][k] = ∂Xⁱ/∂xᵏ` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        match &self.repr {
            Repr::Symbolic(c) => c
                .iter()
                .map(|e| (0..x.len()).map(|k| e.diff(k).eval(x)).collect())
                .collect(),
            Repr::Procedural {
                jacobian: Some(j), ..
            } => j(x),
            Repr::Procedural { rule, step, .. } => {
                let n = x.len();
                let mut jac = vec![vec![0.0; n]; n];
                for k in 0..n {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[k] += step;
                    xm[k] -= step;
                    let fp = rule(&xp)?;
                    let fm = rule(&xm)?;
                    for i in 0..n {
                        jac[i][k] = (fp[i] - fm[i]) / (2.0 * step);
                    }
                }
                Ok(jac)
            }
        }
    }

    /// `X(f)(x) = Σ Xᵏ ∂ₖf`.
    pub fn derivative_at(&self, f: &Scalar, x: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval(x)?;
        let g = f.gradient(x)?;
        Ok(v.iter().zip(&g).map(|(a, b)| a * b).sum())
    }

    /// `X(f)` as a scalar field; symbolic when both are.
    pub fn apply(&self, f: &Scalar) -> Scalar {
        match (self.components(), f.as_expr()) {
            (Some(_), Some(e)) => Scalar::Expr(self.apply_expr(e).expect("symbolic field")),
            _ => {
                let (me, f) = (self.clone(), f.clone());
                Scalar::rule(move |x| me.derivative_at(&f, x))
            }
        }
    }

    pub fn apply_expr(&self, f: &Expr) -> Option<Expr> {
        let comps = self.components()?;
        Some(sum(comps.iter().enumerate().map(|(k, c)| c.clone() * f.diff(k))).simplify())
    }

    /// `f X`.
    pub fn scaled(&self, f: &Expr) -> VectorField {
        match &self.repr {
            Repr::Symbolic(c) => VectorField {
                chart: self.chart.clone(),
                repr: Repr::Symbolic(c.iter().map(|e| (f.clone() * e.clone()).simplify()).collect()),
            },
            Repr::Procedural { .. } => {
                let (me, f) = (self.clone(), f.clone());
                VectorField::procedural(self.chart.clone(), move |x| {
                    let s = f.eval(x)?;
                    Ok(me.eval(x)?.into_iter().map(|v| s * v).collect())
                })
            }
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.zip_with(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, GeometryError> {
        self.zip_with(other, |a, b| a - b, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &VectorField,
        sym: fn(Expr, Expr) -> Expr,
        num: fn(f64, f64) -> f64,
    ) -> Result<VectorField, GeometryError> {
        same_chart(&self.chart, &other.chart)?;
        match (self.components(), other.components()) {
            (Some(a), Some(b)) => Ok(VectorField {
                chart: self.chart.clone(),
                repr: Repr::Symbolic(
                    a.iter().zip(b).map(|(x, y)| sym(x.clone(), y.clone()).simplify()).collect(),
                ),
            }),
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Ok(VectorField::procedural(self.chart.clone(), move |x| {
                    Ok(a.eval(x)?.into_iter().zip(b.eval(x)?).map(|(u, v)| num(u, v)).collect())
                }))
            }
        }
    }

    /// Same field, forgetting its symbolic form (partials by differences).
    pub fn to_procedural(&self) -> VectorField {
        let me = self.clone();
        VectorField::procedural(self.chart.clone(), move |x| me.eval(x))
    }

    /// Re-homes the components on another chart of the same dimension.
    pub fn on_chart(&self, chart: Chart) -> Result<VectorField, GeometryError> {
        if chart.dim() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: chart.dim(),
                found: self.dim(),
            });
        }
        Ok(VectorField {
            chart,
            repr: self.repr.clone(),
        })
    }

    pub fn describe(&self) -> Vec<String> {
        match self.components() {
            Some(c) => c.iter().map(|e| e.to_text(self.chart.names())).collect(),
            None => vec!["<procedural>".to_string(); self.dim()],
        }
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField{:?}", self.describe())
    }
}

/// `[X,Y]ⁱ = Σₖ (Xᵏ ∂ₖYⁱ − Yᵏ ∂ₖXⁱ)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, GeometryError> {
    same_chart(x.chart(), y.chart())?;
    let n = x.dim();
    if let (Some(xc), Some(yc)) = (x.components(), y.components()) {
        let comps = (0..n)
            .map(|i| {
                sum((0..n).map(|k| xc[k].clone() * yc[i].diff(k) - yc[k].clone() * xc[i].diff(k))).simplify()
            })
            .collect();
        return VectorField::new(x.chart().clone(), comps);
    }
    let (a, b) = (x.clone(), y.clone());
    Ok(VectorField::procedural(x.chart().clone(), move |p| {
        let (xv, yv) = (a.eval(p)?, b.eval(p)?);
        let (jx, jy) = (a.jacobian(p)?, b.jacobian(p)?);
        Ok((0..n)
            .map(|i| (0..n).map(|k| xv[k] * jy[i][k] - yv[k] * jx[i][k]).sum())
            .collect())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;

    fn xy() -> Chart {
        Chart::plain(&["x", "y"])
    }

    fn assert_field_eq(a: &VectorField, b: &VectorField, tol: f64) {
        for p in Sampler::default_for(a.dim()).with_count(30).points() {
            let (u, v) = (a.eval(&p).unwrap(), b.eval(&p).unwrap());
            for (s, t) in u.iter().zip(&v) {
                assert!((s - t).abs() <= tol, "{u:?} vs {v:?} at {p:?}");
            }
        }
    }

    #[test]
    fn bracket_of_dx_and_x_dy() {
        let c = xy();
        let b = lie_bracket(
            &VectorField::from_text(&c, &["1", "0"]).unwrap(),
            &VectorField::from_text(&c, &["0", "x"]).unwrap(),
        )
        .unwrap();
        assert_eq!(b.describe(), ["0", "1"]);
    }

    #[test]
    fn bracket_is_antisymmetric_and_kills_rotation_dilation() {
        let c = xy();
        let rot = VectorField::from_text(&c, &["y", "-x"]).unwrap();
        let dil = VectorField::from_text(&c, &["x", "y"]).unwrap();
        assert_eq!(lie_bracket(&dil, &rot).unwrap().describe(), ["0", "0"]);
        assert_eq!(lie_bracket(&rot, &rot).unwrap().describe(), ["0", "0"]);
    }

    #[test]
    fn procedural_bracket_agrees_with_symbolic() {
        let c = xy();
        let x = VectorField::from_text(&c, &["x*y^2", "sin(x)"]).unwrap();
        let y = VectorField::from_text(&c, &["exp(y/3)", "x^2 - y"]).unwrap();
        let sym = lie_bracket(&x, &y).unwrap();
        let num = lie_bracket(&x.to_procedural(), &y).unwrap();
        assert!(!num.is_symbolic());
        assert_field_eq(&sym, &num, 1e-7);
    }

    #[test]
    fn chart_and_dimension_checks() {
        let c = xy();
        let other = Chart::plain(&["u", "v"]);
        let a = VectorField::from_text(&c, &["1", "0"]).unwrap();
        let b = VectorField::from_text(&other, &["1", "0"]).unwrap();
        assert!(matches!(lie_bracket(&a, &b), Err(GeometryError::ChartMismatch(..))));
        assert!(matches!(
            VectorField::new(c.clone(), vec![Expr::one()]),
            Err(GeometryError::Dimension { .. })
        ));
        assert!(matches!(
            VectorField::new(c, vec![Expr::var(2), Expr::one()]),
            Err(GeometryError::CoordinateOutOfRange { .. })
        ));
    }
}

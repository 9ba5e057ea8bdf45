use std::fmt;
use std::sync::Arc;

use crate::expr::{EvalError, Expr};

/// Step of the central differences used for procedural fields.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

type Rule = Arc<dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync>;

/// A scalar field: a symbolic expression or an evaluation rule.
#[derive(Clone)]
pub enum Scalar {
    Expr(Expr),
    Rule { f: Rule, step: f64 },
}

impl Scalar {
    pub fn rule(f: impl Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync + 'static) -> Scalar {
        Scalar::Rule {
            f: Arc::new(f),
            step: DEFAULT_FD_STEP,
        }
    }

    pub fn constant(c: f64) -> Scalar {
        Scalar::Expr(Expr::constant(c))
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            Scalar::Expr(e) => Some(e),
            Scalar::Rule { .. } => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            Scalar::Expr(e) => e.eval(x),
            Scalar::Rule { f, .. } => f(x),
        }
    }

    /// `∂ᵢ f` at `x`: exact for expressions, central difference otherwise.
    pub fn partial(&self, i: usize, x: &[f64]) -> Result<f64, EvalError> {
        match self {
            Scalar::Expr(e) => e.diff(i).eval(x),
            Scalar::Rule { f, step } => {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += step;
                xm[i] -= step;
                Ok((f(&xp)? - f(&xm)?) / (2.0 * step))
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        match self {
            Scalar::Expr(e) => (0..x.len()).map(|i| e.diff(i).eval(x)).collect(),
            Scalar::Rule { .. } => (0..x.len()).map(|i| self.partial(i, x)).collect(),
        }
    }

    /// Symbolic partial derivative, or a rule evaluating the difference quotient.
    pub fn diff(&self, i: usize) -> Scalar {
        match self {
            Scalar::Expr(e) => Scalar::Expr(e.diff(i).simplify()),
            Scalar::Rule { .. } => {
                let me = self.clone();
                Scalar::rule(move |x| me.partial(i, x))
            }
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }

    fn combine(&self, other: &Scalar, sym: fn(Expr, Expr) -> Expr, num: fn(f64, f64) -> f64) -> Scalar {
        match (self, other) {
            (Scalar::Expr(a), Scalar::Expr(b)) => Scalar::Expr(sym(a.clone(), b.clone()).simplify()),
            _ => {
                let (a, b) = (self.clone(), other.clone());
                Scalar::rule(move |x| Ok(num(a.eval(x)?, b.eval(x)?)))
            }
        }
    }

    /// Printed form for reports (`<procedural>` for rules).
    pub fn describe(&self, names: &[String]) -> String {
        match self {
            Scalar::Expr(e) => e.to_text(names),
            Scalar::Rule { .. } => "<procedural>".to_string(),
        }
    }
}

impl From<Expr> for Scalar {
    fn from(e: Expr) -> Scalar {
        Scalar::Expr(e)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Expr(e) => write!(f, "Scalar({e})"),
            Scalar::Rule { step, .. } => write!(f, "Scalar(<rule>, step={step})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_partials_use_central_differences() {
        let s = Scalar::rule(|x| Ok(x[0].powi(3) * x[1]));
        let d = s.partial(0, &[2.0, 0.5]).unwrap();
        assert!((d - 6.0).abs() < 1e-8);
        let e = Scalar::Expr(Expr::var(0).powi(3) * Expr::var(1));
        assert_eq!(e.partial(0, &[2.0, 0.5]).unwrap(), 6.0);
        assert_eq!(s.add(&e).eval(&[1.0, 1.0]).unwrap(), 2.0);
    }
}

use super::{Expr, Func, Node};

impl Expr {
    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Expr {
        if !self.depends_on(i) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(j) => {
                if *j == i {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => -a.diff(i),
            Node::Add(a, b) => a.diff(i) + b.diff(i),
            Node::Sub(a, b) => a.diff(i) - b.diff(i),
            Node::Mul(a, b) => a.diff(i) * b.clone() + a.clone() * b.diff(i),
            Node::Div(a, b) => {
                let da = a.diff(i);
                let db = b.diff(i);
                if db.is_zero() {
                    da / b.clone()
                } else {
                    (da * b.clone() - a.clone() * db) / b.clone().powi(2)
                }
            }
            Node::Pow(a, b) => {
                if let Some(k) = b.as_const() {
                    // k a^(k-1) a'
                    Expr::constant(k) * a.clone().pow(Expr::constant(k - 1.0)) * a.diff(i)
                } else if !a.depends_on(i) {
                    // a^b log(a) b'
                    self.clone() * a.clone().ln() * b.diff(i)
                } else {
                    self.clone() * (b.diff(i) * a.clone().ln() + b.clone() * a.diff(i) / a.clone())
                }
            }
            Node::Call(f, a) => {
                let da = a.diff(i);
                let outer = match f {
                    Func::Sin => a.clone().cos(),
                    Func::Cos => -a.clone().sin(),
                    Func::Tan => Expr::one() + self.clone().powi(2),
                    Func::Exp => self.clone(),
                    Func::Log => return da / a.clone(),
                    Func::Sqrt => return da / (Expr::constant(2.0) * self.clone()),
                    Func::Asin => {
                        return da / (Expr::one() - a.clone().powi(2)).sqrt();
                    }
                    Func::Acos => {
                        return -(da / (Expr::one() - a.clone().powi(2)).sqrt());
                    }
                    Func::Atan => return da / (Expr::one() + a.clone().powi(2)),
                };
                da * outer
            }
        }
    }

    /// `[∂₀e, ∂₁e, ...]` over `dim` coordinates.
    pub fn gradient(&self, dim: usize) -> Vec<Expr> {
        (0..dim).map(|i| self.diff(i)).collect()
    }
}

/// Central finite difference of `e` in coordinate `i` at `x`.
pub fn central_difference(e: &Expr, i: usize, x: &[f64], step: f64) -> Result<f64, super::EvalError> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += step;
    xm[i] -= step;
    Ok((e.eval(&xp)? - e.eval(&xm)?) / (2.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Chart};

    fn xy() -> Chart {
        Chart::plain(&["x", "y"])
    }

    fn d(src: &str, i: usize) -> String {
        let c = xy();
        parse(src, &c).unwrap().diff(i).simplify().to_text(c.names())
    }

    #[test]
    fn power_rule() {
        assert_eq!(d("x^2", 0), "2*x");
    }

    #[test]
    fn chain_rule() {
        assert_eq!(d("sin(x*y)", 1), "x*cos(x*y)");
    }

    #[test]
    fn independent_variable_gives_zero() {
        assert_eq!(d("exp(x)*sin(x)", 1), "0");
    }

    #[test]
    fn every_function_matches_finite_differences() {
        let c = xy();
        let srcs = [
            "sin(x)*cos(y)",
            "tan(x/3)",
            "exp(x*y)",
            "log(x^2+y^2+1)",
            "sqrt(x^2+2)",
            "asin(x/3)",
            "acos(y/3)",
            "atan(x*y)",
            "x^y",
            "2^(x*y)",
            "(x^2+1)^(y/2)",
            "x/(y^2+1)",
        ];
        let pts = [[0.4, 0.7], [1.1, -0.3], [0.9, 1.3]];
        for s in srcs {
            let e = parse(s, &c).unwrap();
            for p in pts {
                for i in 0..2 {
                    let exact = e.diff(i).eval(&p).unwrap();
                    let fd = central_difference(&e, i, &p, 1e-6).unwrap();
                    assert!(
                        (exact - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                        "{s} d/dx{i} at {p:?}: {exact} vs {fd}"
                    );
                }
            }
        }
    }
}

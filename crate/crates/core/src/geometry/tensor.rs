use super::{check_vars, same_chart, GeometryError, VectorField};
use crate::expr::{parse, sum, Chart, EvalError, Expr, ParseError};

/// A (1,1)-tensor field with components `Rⁱⱼ` (row = output index `i`,
/// column = input index `j`), so that `R(Y)ⁱ = Σⱼ Rⁱⱼ Yʲ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor11 {
    chart: Chart,
    comps: Vec<Vec<Expr>>,
}

impl Tensor11 {
    pub fn new(chart: Chart, comps: Vec<Vec<Expr>>) -> Result<Tensor11, GeometryError> {
        let n = chart.dim();
        if comps.len() != n {
            return Err(GeometryError::Dimension {
                expected: n,
                found: comps.len(),
            });
        }
        for row in &comps {
            if row.len() != n {
                return Err(GeometryError::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            for e in row {
                check_vars(e, n)?;
            }
        }
        Ok(Tensor11 { chart, comps })
    }

    /// Row-major component text. Panics on a shape mismatch.
    pub fn from_text(chart: &Chart, rows: &[&[&str]]) -> Result<Tensor11, ParseError> {
        let comps = rows
            .iter()
            .map(|r| r.iter().map(|s| parse(s, chart).map(|e| e.simplify())).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Tensor11::new(chart.clone(), comps).expect("square component matrix"))
    }

    pub fn identity(chart: Chart) -> Tensor11 {
        let n = chart.dim();
        let comps = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        Tensor11 { chart, comps }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Vec<Expr>] {
        &self.comps
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.comps[i][j]
    }

    pub fn with_component(&self, i: usize, j: usize, e: Expr) -> Tensor11 {
        let mut t = self.clone();
        t.comps[i][j] = e;
        t
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        self.comps.iter().map(|r| r.iter().map(|e| e.eval(x)).collect()).collect()
    }

    /// `R(Y)`; symbolic when `Y` is.
    pub fn apply(&self, y: &VectorField) -> Result<VectorField, GeometryError> {
        same_chart(&self.chart, y.chart())?;
        if let Some(yc) = y.components() {
            let comps = self
                .comps
                .iter()
                .map(|row| sum(row.iter().zip(yc).map(|(r, v)| r.clone() * v.clone())).simplify())
                .collect();
            return VectorField::new(self.chart.clone(), comps);
        }
        let (me, y) = (self.clone(), y.clone());
        Ok(VectorField::procedural(self.chart.clone(), move |x| {
            let r = me.eval(x)?;
            let v = y.eval(x)?;
            Ok(r.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect())
        }))
    }

    pub fn simplify(&self) -> Tensor11 {
        Tensor11 {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|r| r.iter().map(Expr::simplify).collect()).collect(),
        }
    }
}

/// `(ℒ_X R)ⁱⱼ = Σₖ (Xᵏ ∂ₖRⁱⱼ − Rᵏⱼ ∂ₖXⁱ + Rⁱₖ ∂ⱼXᵏ)`.
pub fn lie_derivative_tensor11(x: &VectorField, r: &Tensor11) -> Result<Tensor11, GeometryError> {
    same_chart(x.chart(), r.chart())?;
    let xc = x.components().ok_or(GeometryError::NotSymbolic("Lie derivative of a tensor"))?;
    let n = x.dim();
    let comps = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    sum((0..n).map(|k| {
                        xc[k].clone() * r.comps[i][j].diff(k) - r.comps[k][j].clone() * xc[i].diff(k)
                            + r.comps[i][k].clone() * xc[k].diff(j)
                    }))
                    .simplify()
                })
                .collect()
        })
        .collect();
    Tensor11::new(x.chart().clone(), comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::lie_bracket;
    use crate::sample::Sampler;

    #[test]
    fn identity_is_invariant() {
        let c = Chart::plain(&["x", "y"]);
        let x = VectorField::from_text(&c, &["x*y", "sin(x)"]).unwrap();
        let l = lie_derivative_tensor11(&x, &Tensor11::identity(c)).unwrap();
        assert!(l.components().iter().flatten().all(Expr::is_zero));
    }

    #[test]
    fn constant_tensor_along_translation() {
        let c = Chart::plain(&["x", "y"]);
        let r = Tensor11::from_text(&c, &[&["2", "1"], &["0", "-3"]]).unwrap();
        let dx = VectorField::coordinate(c, 0);
        let l = lie_derivative_tensor11(&dx, &r).unwrap();
        assert!(l.components().iter().flatten().all(Expr::is_zero));
    }

    #[test]
    fn contraction_identity_against_brackets() {
        // (ℒ_X R)(Y) = [X, R(Y)] − R([X, Y])
        let c = Chart::plain(&["x", "y"]);
        let x = VectorField::from_text(&c, &["x^2 - y", "x*y"]).unwrap();
        let r = Tensor11::from_text(&c, &[&["y", "x^2"], &["1", "x*y"]]).unwrap();
        let lr = lie_derivative_tensor11(&x, &r).unwrap();
        let ys = [["1", "0"], ["y", "x"], ["x*y", "sin(y)"]];
        for y in ys {
            let y = VectorField::from_text(&c, &y).unwrap();
            let lhs = lr.apply(&y).unwrap();
            let rhs = lie_bracket(&x, &r.apply(&y).unwrap())
                .unwrap()
                .sub(&r.apply(&lie_bracket(&x, &y).unwrap()).unwrap())
                .unwrap();
            for p in Sampler::default_for(2).with_count(25).points() {
                let (a, b) = (lhs.eval(&p).unwrap(), rhs.eval(&p).unwrap());
                for k in 0..2 {
                    assert!((a[k] - b[k]).abs() < 1e-9, "{a:?} {b:?}");
                }
            }
        }
    }
}

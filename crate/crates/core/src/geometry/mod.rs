//! Tensor fields on a chart and the exterior and Lie calculus on them.
//!
//! Fields are symbolic (component [`Expr`](crate::expr::Expr)s) whenever
//! possible. Vector fields and scalars may also be *procedural*: an
//! evaluation rule on points, used for solver-defined dynamics. Partial
//! derivatives of procedural fields fall back to central differences.
//!
//! Forms are stored sparsely by strictly increasing multi-index, and all
//! permutation-sign bookkeeping goes through [`sort_with_sign`].

mod form;
mod scalar;
mod tensor;
mod vector;

pub use form::{
    combinations, exterior_derivative, interior_product, lie_derivative_form, pullback, sort_with_sign, wedge, ChartMap,
    Coefficient, Form, FormValue, PForm,
};
pub use scalar::{Scalar, DEFAULT_FD_STEP};
pub use tensor::{lie_derivative_tensor11, Tensor11};
pub use vector::{lie_bracket, VectorField};

use crate::expr::{Chart, EvalError, Expr};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("operands live on different charts ({0:?} vs {1:?})")]
    ChartMismatch(Vec<String>, Vec<String>),
    #[error("degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("interior product of a 0-form")]
    DegreeZero,
    #[error("{0} needs symbolic components")]
    NotSymbolic(&'static str),
    #[error("expected {expected} components, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("expression references coordinate {index} on a {dim}-dimensional chart")]
    CoordinateOutOfRange { index: usize, dim: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub(crate) fn same_chart(a: &Chart, b: &Chart) -> Result<(), GeometryError> {
    if a == b {
        Ok(())
    } else {
        Err(GeometryError::ChartMismatch(a.names().to_vec(), b.names().to_vec()))
    }
}

pub(crate) fn check_vars(e: &Expr, dim: usize) -> Result<(), GeometryError> {
    match e.max_var() {
        Some(i) if i >= dim => Err(GeometryError::CoordinateOutOfRange { index: i, dim }),
        _ => Ok(()),
    }
}

/// Volume form `ρ dx¹∧…∧dxⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeForm {
    chart: Chart,
    density: Expr,
}

impl VolumeForm {
    pub fn new(chart: Chart, density: Expr) -> Result<VolumeForm, GeometryError> {
        check_vars(&density, chart.dim())?;
        Ok(VolumeForm { chart, density })
    }

    /// The coordinate volume `dx¹∧…∧dxⁿ`.
    pub fn standard(chart: Chart) -> VolumeForm {
        VolumeForm {
            chart,
            density: Expr::one(),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn density(&self) -> &Expr {
        &self.density
    }

    /// `f⁻¹ Ω`.
    pub fn rescaled_by_inverse(&self, f: &Expr) -> VolumeForm {
        VolumeForm {
            chart: self.chart.clone(),
            density: (self.density.clone() / f.clone()).simplify(),
        }
    }

    pub fn as_form(&self) -> PForm {
        let n = self.chart.dim();
        Form::from_terms(self.chart.clone(), n, [((0..n).collect(), self.density.clone())])
    }
}

/// `div X` with respect to `Ω = ρ dx¹∧…∧dxⁿ`: `(1/ρ) Σᵢ ∂ᵢ(ρ Xⁱ)`.
pub fn divergence(x: &VectorField, volume: &VolumeForm) -> Result<Scalar, GeometryError> {
    same_chart(x.chart(), volume.chart())?;
    let rho = volume.density().clone();
    if let Some(comps) = x.components() {
        let div = if rho.as_const().is_some() {
            crate::expr::sum(comps.iter().enumerate().map(|(i, c)| c.diff(i)))
        } else {
            crate::expr::sum(comps.iter().enumerate().map(|(i, c)| (rho.clone() * c.clone()).diff(i))) / rho
        };
        return Ok(Scalar::Expr(div.simplify()));
    }
    // tr(DX) + X(ρ)/ρ
    let field = x.clone();
    let grad_rho: Vec<Expr> = rho.gradient(x.chart().dim());
    Ok(Scalar::rule(move |p| {
        let jac = field.jacobian(p)?;
        let v = field.eval(p)?;
        let trace: f64 = (0..v.len()).map(|i| jac[i][i]).sum();
        if rho.as_const().is_some() {
            return Ok(trace);
        }
        let r = rho.eval(p)?;
        let mut xr = 0.0;
        for (k, g) in grad_rho.iter().enumerate() {
            xr += v[k] * g.eval(p)?;
        }
        Ok(trace + xr / r)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sample::Sampler;

    #[test]
    fn divergence_of_dilation_is_two() {
        let c = Chart::plain(&["x", "y"]);
        let x = VectorField::from_text(&c, &["x", "y"]).unwrap();
        let d = divergence(&x, &VolumeForm::standard(c.clone())).unwrap();
        assert_eq!(d.as_expr().unwrap().as_const(), Some(2.0));
    }

    #[test]
    fn divergence_product_rule() {
        let c = Chart::plain(&["x", "y"]);
        let vol = VolumeForm::new(c.clone(), parse("1 + x^2", &c).unwrap()).unwrap();
        let x = VectorField::from_text(&c, &["x*y - y^3", "sin(x) + y^2"]).unwrap();
        let f = parse("x^2*y + 3", &c).unwrap();
        let fx = x.scaled(&f);
        let lhs = divergence(&fx, &vol).unwrap();
        let div_x = divergence(&x, &vol).unwrap();
        let xf = x.apply(&Scalar::Expr(f.clone()));
        for p in Sampler::default_for(2).points() {
            let l = lhs.eval(&p).unwrap();
            let r = f.eval(&p).unwrap() * div_x.eval(&p).unwrap() + xf.eval(&p).unwrap();
            assert!((l - r).abs() < 1e-9 * l.abs().max(1.0));
        }
    }

    #[test]
    fn procedural_divergence_matches_symbolic() {
        let c = Chart::plain(&["x", "y"]);
        let vol = VolumeForm::new(c.clone(), parse("exp(x)", &c).unwrap()).unwrap();
        let x = VectorField::from_text(&c, &["x^2*y", "cos(x*y)"]).unwrap();
        let proc = x.to_procedural();
        let a = divergence(&x, &vol).unwrap();
        let b = divergence(&proc, &vol).unwrap();
        for p in Sampler::default_for(2).with_count(20).points() {
            assert!((a.eval(&p).unwrap() - b.eval(&p).unwrap()).abs() < 1e-7);
        }
    }
}

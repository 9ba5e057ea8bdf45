use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{check_vars, same_chart, GeometryError, VectorField};
use crate::expr::{determinant, Chart, EvalError, Expr, ExprMatrix};

/// Coefficient ring of a form: symbolic expressions or plain numbers.
pub trait Coefficient:
    Clone + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn tidy(self) -> Self {
        self
    }
}

impl Coefficient for Expr {
    fn zero() -> Expr {
        Expr::zero()
    }
    fn one() -> Expr {
        Expr::one()
    }
    fn is_zero(&self) -> bool {
        Expr::is_zero(self)
    }
    fn tidy(self) -> Expr {
        self.simplify()
    }
}

impl Coefficient for f64 {
    fn zero() -> f64 {
        0.0
    }
    fn one() -> f64 {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Sorts a multi-index, returning the sorted index and whether the
/// permutation was odd. `None` if an index repeats (the wedge vanishes).
pub fn sort_with_sign(idx: &[usize]) -> Option<(Vec<usize>, bool)> {
    let mut v = idx.to_vec();
    let mut odd = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, odd))
    }
}

/// Strictly increasing `p`-subsets of `0..n`, in lexicographic order.
pub fn combinations(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p <= n {
        go(0, n, p, &mut Vec::new(), &mut out);
    }
    out
}

/// A differential `p`-form `Σ_{i₁<…<i_p} α_I dx^{i₁}∧…∧dx^{i_p}`, stored sparsely.
#[derive(Clone, PartialEq)]
pub struct Form<C> {
    chart: Chart,
    degree: usize,
    comps: BTreeMap<Vec<usize>, C>,
}

/// Symbolic form field.
pub type PForm = Form<Expr>;
/// A form evaluated at one point.
pub type FormValue = Form<f64>;

impl<C: Coefficient> Form<C> {
    pub fn zero(chart: Chart, degree: usize) -> Form<C> {
        Form {
            chart,
            degree,
            comps: BTreeMap::new(),
        }
    }

    /// Accumulates terms given on arbitrary (possibly unsorted) multi-indices.
    ///
    /// Panics if an index has the wrong length or is out of range.
    pub fn from_terms(chart: Chart, degree: usize, terms: impl IntoIterator<Item = (Vec<usize>, C)>) -> Form<C> {
        let mut f = Form::zero(chart, degree);
        for (idx, c) in terms {
            f.add_term(&idx, c);
        }
        f.prune();
        f
    }

    pub fn scalar(chart: Chart, value: C) -> Form<C> {
        Form::from_terms(chart, 0, [(Vec::new(), value)])
    }

    fn add_term(&mut self, idx: &[usize], c: C) {
        assert_eq!(idx.len(), self.degree, "multi-index length differs from degree");
        assert!(idx.iter().all(|&i| i < self.chart.dim()), "index out of range");
        let Some((sorted, odd)) = sort_with_sign(idx) else {
            return;
        };
        let c = if odd { -c } else { c };
        let slot = self.comps.remove(&sorted);
        let v = match slot {
            Some(prev) => prev + c,
            None => c,
        };
        self.comps.insert(sorted, v);
    }

    fn prune(&mut self) {
        let comps = std::mem::take(&mut self.comps);
        self.comps = comps
            .into_iter()
            .map(|(k, v)| (k, v.tidy()))
            .filter(|(_, v)| !v.is_zero())
            .collect();
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Nonzero components by increasing multi-index.
    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &C)> {
        self.comps.iter()
    }

    /// Component on any multi-index, with the permutation sign applied.
    pub fn get(&self, idx: &[usize]) -> C {
        match sort_with_sign(idx) {
            None => C::zero(),
            Some((sorted, odd)) => {
                let c = self.comps.get(&sorted).cloned().unwrap_or_else(C::zero);
                if odd {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// All `C(n,p)` components in lexicographic order, zeros included.
    pub fn dense(&self) -> Vec<(Vec<usize>, C)> {
        combinations(self.dim(), self.degree)
            .into_iter()
            .map(|idx| {
                let c = self.get(&idx);
                (idx, c)
            })
            .collect()
    }

    pub fn add(&self, other: &Form<C>) -> Form<C> {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let terms = self.comps.iter().chain(other.comps.iter()).map(|(k, v)| (k.clone(), v.clone()));
        Form::from_terms(self.chart.clone(), self.degree, terms)
    }

    pub fn sub(&self, other: &Form<C>) -> Form<C> {
        self.add(&other.scale(-C::one()))
    }

    pub fn scale(&self, s: C) -> Form<C> {
        let terms = self.comps.iter().map(|(k, v)| (k.clone(), s.clone() * v.clone()));
        Form::from_terms(self.chart.clone(), self.degree, terms)
    }

    /// `α∧β` with shuffle signs.
    pub fn wedge(&self, other: &Form<C>) -> Result<Form<C>, GeometryError> {
        same_chart(&self.chart, &other.chart)?;
        let degree = self.degree + other.degree;
        if degree > self.dim() {
            return Err(GeometryError::DegreeOverflow { degree, dim: self.dim() });
        }
        let mut out = Form::zero(self.chart.clone(), degree);
        for (i, a) in &self.comps {
            for (j, b) in &other.comps {
                let idx: Vec<usize> = i.iter().chain(j).copied().collect();
                out.add_term(&idx, a.clone() * b.clone());
            }
        }
        out.prune();
        Ok(out)
    }

    /// `i(X)α` for a vector given by its components.
    pub fn interior(&self, x: &[C]) -> Result<Form<C>, GeometryError> {
        if self.degree == 0 {
            return Err(GeometryError::DegreeZero);
        }
        if x.len() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut out = Form::zero(self.chart.clone(), self.degree - 1);
        for (idx, a) in &self.comps {
            for (m, &k) in idx.iter().enumerate() {
                if x[k].is_zero() {
                    continue;
                }
                let rest: Vec<usize> = idx.iter().enumerate().filter(|(r, _)| *r != m).map(|(_, v)| *v).collect();
                let term = x[k].clone() * a.clone();
                out.add_term(&rest, if m % 2 == 0 { term } else { -term });
            }
        }
        out.prune();
        Ok(out)
    }

    /// `n`-th wedge power (`n ≥ 1`).
    pub fn wedge_power(&self, n: usize) -> Result<Form<C>, GeometryError> {
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.wedge(self)?;
        }
        Ok(acc)
    }

    /// The single component of a top-degree form (zero otherwise).
    pub fn top_component(&self) -> C {
        let n = self.dim();
        if self.degree != n {
            return C::zero();
        }
        self.get(&(0..n).collect::<Vec<_>>())
    }
}

impl PForm {
    /// Builds a symbolic form, checking coordinate references.
    pub fn new(chart: Chart, degree: usize, terms: Vec<(Vec<usize>, Expr)>) -> Result<PForm, GeometryError> {
        if degree > chart.dim() {
            return Err(GeometryError::DegreeOverflow { degree, dim: chart.dim() });
        }
        for (idx, e) in &terms {
            if idx.len() != degree {
                return Err(GeometryError::Dimension {
                    expected: degree,
                    found: idx.len(),
                });
            }
            if let Some(&i) = idx.iter().find(|&&i| i >= chart.dim()) {
                return Err(GeometryError::CoordinateOutOfRange { index: i, dim: chart.dim() });
            }
            check_vars(e, chart.dim())?;
        }
        Ok(Form::from_terms(chart, degree, terms))
    }

    /// `df = Σ ∂ᵢf dxⁱ`.
    pub fn differential(chart: Chart, f: &Expr) -> PForm {
        let n = chart.dim();
        Form::from_terms(chart, 1, (0..n).map(|i| (vec![i], f.diff(i))))
    }

    pub fn eval(&self, x: &[f64]) -> Result<FormValue, EvalError> {
        let mut comps = BTreeMap::new();
        for (k, v) in &self.comps {
            comps.insert(k.clone(), v.eval(x)?);
        }
        Ok(Form {
            chart: self.chart.clone(),
            degree: self.degree,
            comps,
        })
    }

    /// Antisymmetric component matrix `Ω_ij = ω(∂ᵢ, ∂ⱼ)` of a 2-form.
    pub fn matrix(&self) -> ExprMatrix {
        assert_eq!(self.degree, 2, "matrix of a non-2-form");
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.get(&[i, j])).collect()).collect()
    }

    /// Largest absolute component at `x`.
    pub fn max_abs_at(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval(x)?.max_abs())
    }

    pub fn describe(&self) -> Vec<(String, String)> {
        let names = self.chart.names();
        self.comps
            .iter()
            .map(|(k, v)| {
                let idx = k.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(",");
                (idx, v.to_text(names))
            })
            .collect()
    }
}

impl FormValue {
    pub fn max_abs(&self) -> f64 {
        self.comps.values().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        assert_eq!(self.degree, 2, "matrix of a non-2-form");
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.get(&[i, j])).collect()).collect()
    }

    /// `(φ*α)_x` given `α` at `φ(x)` and `jac[r][s] = ∂φʳ/∂xˢ` at `x`.
    pub fn pull_back(&self, jac: &[Vec<f64>], source: Chart) -> FormValue {
        let m = source.dim();
        let p = self.degree;
        let terms = combinations(m, p).into_iter().map(|j| {
            let mut acc = 0.0;
            for (i, a) in &self.comps {
                let minor: Vec<Vec<f64>> = i.iter().map(|&r| j.iter().map(|&s| jac[r][s]).collect()).collect();
                acc += a * crate::linalg::det(&minor);
            }
            (j, acc)
        });
        Form::from_terms(source, p, terms.collect::<Vec<_>>())
    }
}

impl<C: fmt::Debug> fmt::Debug for Form<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form(deg {}, {:?})", self.degree, self.comps)
    }
}

fn symbolic(x: &VectorField, what: &'static str) -> Result<Vec<Expr>, GeometryError> {
    x.components().map(<[Expr]>::to_vec).ok_or(GeometryError::NotSymbolic(what))
}

/// `dα`, degree `p+1`.
pub fn exterior_derivative(alpha: &PForm) -> Result<PForm, GeometryError> {
    let n = alpha.dim();
    if alpha.degree >= n {
        return Err(GeometryError::DegreeOverflow {
            degree: alpha.degree + 1,
            dim: n,
        });
    }
    let mut out = Form::zero(alpha.chart.clone(), alpha.degree + 1);
    for (idx, a) in &alpha.comps {
        for k in 0..n {
            if !a.depends_on(k) || idx.contains(&k) {
                continue;
            }
            let mut full = Vec::with_capacity(idx.len() + 1);
            full.push(k);
            full.extend_from_slice(idx);
            out.add_term(&full, a.diff(k));
        }
    }
    out.prune();
    Ok(out)
}

/// `dα`, or zero for a top-degree form.
pub(crate) fn d_or_zero(alpha: &PForm) -> PForm {
    if alpha.degree >= alpha.dim() {
        Form::zero(alpha.chart.clone(), alpha.degree)
    } else {
        exterior_derivative(alpha).expect("degree checked")
    }
}

/// `i(X)α` for a symbolic vector field.
pub fn interior_product(x: &VectorField, alpha: &PForm) -> Result<PForm, GeometryError> {
    same_chart(x.chart(), alpha.chart())?;
    alpha.interior(&symbolic(x, "interior product")?)
}

pub fn wedge(alpha: &PForm, beta: &PForm) -> Result<PForm, GeometryError> {
    alpha.wedge(beta)
}

/// `ℒ_X α = i(X)dα + d(i(X)α)`.
pub fn lie_derivative_form(x: &VectorField, alpha: &PForm) -> Result<PForm, GeometryError> {
    same_chart(x.chart(), alpha.chart())?;
    let comps = symbolic(x, "Lie derivative")?;
    if alpha.degree == 0 {
        let f = alpha.get(&[]);
        let xf = x.apply_expr(&f).expect("symbolic field");
        return Ok(Form::scalar(alpha.chart.clone(), xf));
    }
    let first = if alpha.degree < alpha.dim() {
        d_or_zero(alpha).interior(&comps)?
    } else {
        Form::zero(alpha.chart.clone(), alpha.degree)
    };
    let second = d_or_zero(&alpha.interior(&comps)?);
    Ok(first.add(&second))
}

/// A smooth map `F` from `source` to `target`, given by `target.dim()`
/// expressions in the source coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartMap {
    pub source: Chart,
    pub target: Chart,
    pub components: Vec<Expr>,
}

impl ChartMap {
    pub fn new(source: Chart, target: Chart, components: Vec<Expr>) -> Result<ChartMap, GeometryError> {
        if components.len() != target.dim() {
            return Err(GeometryError::Dimension {
                expected: target.dim(),
                found: components.len(),
            });
        }
        for c in &components {
            check_vars(c, source.dim())?;
        }
        Ok(ChartMap {
            source,
            target,
            components,
        })
    }

    pub fn identity(chart: Chart) -> ChartMap {
        let comps = (0..chart.dim()).map(Expr::var).collect();
        ChartMap {
            source: chart.clone(),
            target: chart,
            components: comps,
        }
    }
}

/// `F*α`: components composed with `F` and contracted with Jacobian minors.
pub fn pullback(map: &ChartMap, alpha: &PForm) -> Result<PForm, GeometryError> {
    same_chart(&map.target, alpha.chart())?;
    let p = alpha.degree;
    if p > map.source.dim() {
        return Err(GeometryError::DegreeOverflow {
            degree: p,
            dim: map.source.dim(),
        });
    }
    let m = map.source.dim();
    let jac: Vec<Vec<Expr>> = map.components.iter().map(|f| (0..m).map(|s| f.diff(s)).collect()).collect();
    let mut terms = Vec::new();
    for j in combinations(m, p) {
        for (i, a) in &alpha.comps {
            let minor: Vec<Vec<Expr>> = i.iter().map(|&r| j.iter().map(|&s| jac[r][s].clone()).collect()).collect();
            let det = determinant(&minor);
            if det.is_zero() {
                continue;
            }
            terms.push((j.clone(), a.substitute(&map.components) * det));
        }
    }
    Ok(Form::from_terms(map.source.clone(), p, terms))
}

//! Seeded random polynomial inputs for property checks.

use rand::Rng;

use crate::expr::{sum, Chart, Expr};
use crate::geometry::{combinations, Form, PForm, VectorField};

/// A random polynomial in `dim` variables of total degree ≤ `degree` with up
/// to `terms` monomials and half-integer coefficients in `[-2, 2]`.
pub fn polynomial<R: Rng>(rng: &mut R, dim: usize, degree: u32, terms: usize) -> Expr {
    let mut monomials = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut c = 0.0;
        while c == 0.0 {
            c = rng.gen_range(-4i32..=4) as f64 / 2.0;
        }
        let d = rng.gen_range(0..=degree);
        let mut m = Expr::constant(c);
        for _ in 0..d {
            m = m * Expr::var(rng.gen_range(0..dim));
        }
        monomials.push(m);
    }
    sum(monomials).simplify()
}

pub fn vector_field<R: Rng>(rng: &mut R, chart: &Chart, degree: u32) -> VectorField {
    let n = chart.dim();
    let comps = (0..n).map(|_| polynomial(rng, n, degree, 3)).collect();
    VectorField::new(chart.clone(), comps).expect("polynomial components")
}

/// Random `p`-form; each component is present with probability ½.
pub fn form<R: Rng>(rng: &mut R, chart: &Chart, p: usize, degree: u32) -> PForm {
    let n = chart.dim();
    let mut terms = Vec::new();
    for idx in combinations(n, p) {
        if p == 0 || rng.gen_bool(0.5) {
            terms.push((idx, polynomial(rng, n, degree, 3)));
        }
    }
    Form::from_terms(chart.clone(), p, terms)
}

/// Plain chart `x1..xn`.
pub fn chart(n: usize) -> Chart {
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    Chart::plain(&names)
}

//! Best-effort normalization into a sum of monomials.
//!
//! Arithmetic (`+ - * /`, integer powers) is expanded into monomials
//! `c · Π atomᵏ`, like monomials are collected, and the result is rebuilt in
//! a fixed order. Function calls, non-integer powers and sums too large to
//! expand are kept as opaque atoms (their insides are normalized too).
//! Polynomials therefore reach a canonical form; everything else is merely
//! tidier.

use std::collections::BTreeMap;

use super::{Expr, Node};

/// Products that would expand beyond this many monomials stay factored.
const EXPANSION_LIMIT: usize = 256;

type FactorKey = (u8, String);

#[derive(Clone, Debug)]
struct Mono {
    coef: f64,
    factors: BTreeMap<FactorKey, (Expr, f64)>,
}

impl Mono {
    fn constant(c: f64) -> Mono {
        Mono {
            coef: c,
            factors: BTreeMap::new(),
        }
    }

    fn signature(&self) -> String {
        let mut s = String::new();
        for ((rank, key), (_, exp)) in &self.factors {
            s.push_str(&format!("{rank}|{key}^{exp};"));
        }
        s
    }

    fn mul(&self, other: &Mono) -> Mono {
        let mut factors = self.factors.clone();
        for (k, (base, exp)) in &other.factors {
            let e = factors.get(k).map_or(0.0, |f| f.1) + exp;
            if e == 0.0 {
                factors.remove(k);
            } else {
                factors.insert(k.clone(), (base.clone(), e));
            }
        }
        Mono {
            coef: self.coef * other.coef,
            factors,
        }
    }
}

/// Monomials keyed by signature.
#[derive(Clone, Debug, Default)]
struct Poly(BTreeMap<String, Mono>);

impl Poly {
    fn constant(c: f64) -> Poly {
        let mut p = Poly::default();
        p.push(Mono::constant(c));
        p
    }

    fn atom(rank: u8, key: String, base: Expr, exp: f64) -> Poly {
        let mut factors = BTreeMap::new();
        factors.insert((rank, key), (base, exp));
        let mut p = Poly::default();
        p.push(Mono { coef: 1.0, factors });
        p
    }

    fn push(&mut self, m: Mono) {
        if m.coef == 0.0 {
            return;
        }
        let sig = m.signature();
        match self.0.get_mut(&sig) {
            Some(existing) => {
                existing.coef += m.coef;
                if existing.coef == 0.0 {
                    self.0.remove(&sig);
                }
            }
            None => {
                self.0.insert(sig, m);
            }
        }
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn add(mut self, other: Poly) -> Poly {
        for m in other.0.into_values() {
            self.push(m);
        }
        self
    }

    fn scale(mut self, c: f64) -> Poly {
        if c == 0.0 {
            return Poly::default();
        }
        for m in self.0.values_mut() {
            m.coef *= c;
        }
        self
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for a in self.0.values() {
            for b in other.0.values() {
                out.push(a.mul(b));
            }
        }
        out
    }

    fn single(&self) -> Option<&Mono> {
        if self.len() == 1 {
            self.0.values().next()
        } else {
            None
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self.len() {
            0 => Some(0.0),
            1 => self.single().filter(|m| m.factors.is_empty()).map(|m| m.coef),
            _ => None,
        }
    }
}

fn opaque(e: Expr, exp: f64) -> Poly {
    if let Some(c) = e.as_const() {
        return match super::pow_value(c, exp) {
            Some(v) => Poly::constant(v),
            None => Poly::atom(2, e.to_string(), e, exp),
        };
    }
    let rank = match e.node() {
        Node::Var(_) => 0,
        Node::Call(..) => 1,
        _ => 2,
    };
    let key = match e.node() {
        Node::Var(i) => format!("{i:08}"),
        _ => e.to_string(),
    };
    Poly::atom(rank, key, e, exp)
}

fn mul_limited(a: Poly, b: Poly) -> Poly {
    if a.len() * b.len() <= EXPANSION_LIMIT || a.len() <= 1 || b.len() <= 1 {
        return a.mul(&b);
    }
    // keep the larger factor closed
    let (small, big) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.mul(&opaque(from_poly(&big), 1.0))
}

fn to_poly(e: &Expr) -> Poly {
    match e.node() {
        Node::Const(c) => Poly::constant(*c),
        Node::Var(_) => opaque(e.clone(), 1.0),
        Node::Neg(a) => to_poly(a).scale(-1.0),
        Node::Add(a, b) => to_poly(a).add(to_poly(b)),
        Node::Sub(a, b) => to_poly(a).add(to_poly(b).scale(-1.0)),
        Node::Mul(a, b) => mul_limited(to_poly(a), to_poly(b)),
        Node::Div(a, b) => {
            let num = to_poly(a);
            let den = to_poly(b);
            match den.single() {
                Some(m) if m.coef != 0.0 => {
                    let inv = Mono {
                        coef: 1.0 / m.coef,
                        factors: m
                            .factors
                            .iter()
                            .map(|(k, (base, exp))| (k.clone(), (base.clone(), -exp)))
                            .collect(),
                    };
                    let mut p = Poly::default();
                    p.push(inv);
                    num.mul(&p)
                }
                _ if den.len() == 0 => opaque(Expr::from_node(Node::Div(from_poly(&num), Expr::zero())), 1.0),
                _ => num.mul(&opaque(from_poly(&den), -1.0)),
            }
        }
        Node::Pow(a, b) => {
            let exponent = b.simplify();
            let base = to_poly(a);
            let Some(k) = exponent.as_const() else {
                return opaque(Expr::from_node(Node::Pow(from_poly(&base), exponent)), 1.0);
            };
            let integral = k.fract() == 0.0 && k.abs() <= 64.0;
            if let Some(m) = base.single() {
                if integral {
                    let ki = k as i32;
                    let mut out = Mono::constant(m.coef.powi(ki));
                    for (key, (b, exp)) in &m.factors {
                        out.factors.insert(key.clone(), (b.clone(), exp * k));
                    }
                    out.factors.retain(|_, (_, e)| *e != 0.0);
                    if out.coef.is_finite() {
                        let mut p = Poly::default();
                        p.push(out);
                        return p;
                    }
                } else if m.coef == 1.0 && m.factors.len() == 1 {
                    let (key, (b, exp)) = m.factors.iter().next().expect("one factor");
                    if *exp == 1.0 {
                        return Poly::atom(key.0, key.1.clone(), b.clone(), k);
                    }
                }
            }
            if integral && (2.0..=4.0).contains(&k) && base.len().pow(k as u32) <= EXPANSION_LIMIT {
                let mut acc = base.clone();
                for _ in 1..(k as usize) {
                    acc = acc.mul(&base);
                }
                return acc;
            }
            if base.len() == 0 {
                return Poly::constant(super::pow_value(0.0, k).unwrap_or(f64::NAN));
            }
            opaque(from_poly(&base), k)
        }
        Node::Call(f, a) => {
            let arg = a.simplify();
            let call = Expr::call(*f, arg);
            match call.as_const() {
                Some(c) => Poly::constant(c),
                None => opaque(call, 1.0),
            }
        }
    }
}

fn from_mono_abs(m: &Mono) -> Expr {
    let mut num = Expr::constant(m.coef.abs());
    let mut den = Expr::one();
    for (base, exp) in m.factors.values() {
        if *exp > 0.0 {
            num = num * base.clone().pow(Expr::constant(*exp));
        } else {
            den = den * base.clone().pow(Expr::constant(-exp));
        }
    }
    if den.is_one() {
        num
    } else {
        num / den
    }
}

fn from_poly(p: &Poly) -> Expr {
    let mut monos: Vec<&Mono> = p.0.values().collect();
    // constant term last
    monos.sort_by_key(|m| m.factors.is_empty());
    let mut acc: Option<Expr> = None;
    for m in monos {
        let term = from_mono_abs(m);
        acc = Some(match acc {
            None if m.coef < 0.0 => -term,
            None => term,
            Some(a) if m.coef < 0.0 => a - term,
            Some(a) => a + term,
        });
    }
    acc.unwrap_or_else(Expr::zero)
}

impl Expr {
    /// Best-effort algebraic normalization; never changes values where the
    /// input is defined (up to rounding).
    pub fn simplify(&self) -> Expr {
        let p = to_poly(self);
        match p.as_const() {
            Some(c) => Expr::constant(c),
            None => from_poly(&p),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Chart};

    fn s(src: &str) -> String {
        let c = Chart::plain(&["x", "y"]);
        parse(src, &c).unwrap().simplify().to_text(c.names())
    }

    #[test]
    fn annihilator_and_identities() {
        assert_eq!(s("0*sin(x)+y"), "y");
        assert_eq!(s("x^1 * 1"), "x");
        assert_eq!(s("x - x"), "0");
        assert_eq!(s("-(-y)"), "y");
        assert_eq!(s("2*3 + x*0"), "6");
        assert_eq!(s("(x+0)/1"), "x");
    }

    #[test]
    fn polynomials_reach_normal_form() {
        assert_eq!(s("(x+y)^2 - x^2 - 2*x*y"), "y^2");
        assert_eq!(s("x*y - y*x"), "0");
        assert_eq!(s("2*x*y/(2*y)"), "x");
        assert_eq!(s("sin(x+y) - sin(y+x)"), "0");
        assert_eq!(s("x/y + 1/y*x"), "2*x/y");
    }

    #[test]
    fn keeps_domain_sensitive_forms() {
        // (x^2)^(1/2) is |x|, not x
        let c = Chart::plain(&["x", "y"]);
        let e = parse("(x^2)^0.5", &c).unwrap().simplify();
        assert_eq!(e.eval(&[-3.0, 0.0]).unwrap(), 3.0);
        let r = parse("sqrt(x)*sqrt(x)", &c).unwrap().simplify();
        assert_eq!(r.eval(&[4.0, 0.0]).unwrap(), 4.0);
    }
}

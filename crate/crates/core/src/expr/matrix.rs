//! Small dense matrices of expressions. Sizes here stay at or below six, so
//! plain cofactor expansion is adequate.

use super::{sum, Expr};

pub type ExprMatrix = Vec<Vec<Expr>>;

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> ExprMatrix {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

/// Determinant by cofactor expansion along the first row, skipping zeros.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone(),
        n => sum((0..n).filter(|&j| !m[0][j].is_zero()).map(|j| {
            let term = m[0][j].clone() * determinant(&minor(m, 0, j));
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        })),
    }
}

/// Transpose of the cofactor matrix, so that `m * adj(m) = det(m) I`.
pub fn adjugate(m: &[Vec<Expr>]) -> ExprMatrix {
    let n = m.len();
    if n == 1 {
        return vec![vec![Expr::one()]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = determinant(&minor(m, j, i)).simplify();
                    if (i + j) % 2 == 0 {
                        c
                    } else {
                        -c
                    }
                })
                .collect()
        })
        .collect()
}

/// `adj(m) / det(m)`, entrywise.
pub fn inverse(m: &[Vec<Expr>]) -> ExprMatrix {
    let det = determinant(m).simplify();
    adjugate(m)
        .into_iter()
        .map(|row| row.into_iter().map(|e| (e / det.clone()).simplify()).collect())
        .collect()
}

pub fn transpose(m: &[Vec<Expr>]) -> ExprMatrix {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    (0..cols).map(|j| (0..rows).map(|i| m[i][j].clone()).collect()).collect()
}

pub fn mat_mul(a: &[Vec<Expr>], b: &[Vec<Expr>]) -> ExprMatrix {
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| sum(row.iter().zip(b).map(|(x, brow)| x.clone() * brow[j].clone())).simplify())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<Expr>], v: &[Expr]) -> Vec<Expr> {
    a.iter()
        .map(|row| sum(row.iter().zip(v).map(|(x, y)| x.clone() * y.clone())).simplify())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(m: &[Vec<Expr>], x: &[f64]) -> Vec<Vec<f64>> {
        m.iter().map(|r| r.iter().map(|e| e.eval(x).unwrap()).collect()).collect()
    }

    #[test]
    fn determinant_of_symbolic_3x3() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        let m = vec![
            vec![x.clone(), Expr::one(), Expr::zero()],
            vec![Expr::zero(), y.clone(), Expr::constant(2.0)],
            vec![Expr::one(), Expr::zero(), x.clone() * y.clone()],
        ];
        // x*(y*xy - 0) - 1*(0 - 2) + 0
        let d = determinant(&m).eval(&[2.0, 3.0]).unwrap();
        assert_eq!(d, 2.0 * 3.0 * 6.0 + 2.0);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let x = Expr::var(0);
        let m = vec![
            vec![x.clone().exp(), Expr::constant(0.5), Expr::zero(), Expr::one()],
            vec![Expr::zero(), Expr::constant(2.0), x.clone(), Expr::zero()],
            vec![Expr::one(), Expr::zero(), Expr::constant(3.0), Expr::zero()],
            vec![Expr::zero(), Expr::one(), Expr::zero(), x.clone().powi(2) + 1.0],
        ];
        let prod = numeric(&mat_mul(&inverse(&m), &m), &[0.3]);
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12, "({i},{j}) = {v}");
            }
        }
    }
}

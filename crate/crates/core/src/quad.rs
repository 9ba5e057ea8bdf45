//! Adaptive Gauss–Kronrod (7/15) quadrature on an interval.

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for the nodes `XK[1], XK[3], XK[5], XK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuadError<E> {
    #[error("no convergence on [{a}, {b}]")]
    NoConvergence { a: f64, b: f64 },
    #[error("integrand failed")]
    Integrand(E),
}

fn kronrod<E>(f: &mut dyn FnMut(f64) -> Result<f64, E>, a: f64, b: f64) -> Result<(f64, f64), E> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = 0.0;
    let mut g = 0.0;
    for i in 0..8 {
        let vals = if XK[i] == 0.0 {
            let v = f(c)?;
            (v, 0.0)
        } else {
            (f(c - h * XK[i])?, f(c + h * XK[i])?)
        };
        let s = vals.0 + vals.1;
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok((h * k, (h * (k - g)).abs()))
}

/// `∫_a^b f` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<E>(mut f: impl FnMut(f64) -> Result<f64, E>, a: f64, b: f64, tol: f64) -> Result<f64, QuadError<E>> {
    if a == b {
        return Ok(0.0);
    }
    fn go<E>(
        f: &mut dyn FnMut(f64) -> Result<f64, E>,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, QuadError<E>> {
        let (v, err) = kronrod(f, a, b).map_err(QuadError::Integrand)?;
        if err <= tol || (err <= 1e-14 * v.abs().max(1.0)) {
            return Ok(v);
        }
        if depth == MAX_DEPTH {
            return Err(QuadError::NoConvergence { a, b });
        }
        let m = 0.5 * (a + b);
        Ok(go(f, a, m, 0.5 * tol, depth + 1)? + go(f, m, b, 0.5 * tol, depth + 1)?)
    }
    go(&mut f, a, b, tol, 0)
}

//! Adaptive Gauss–Kronrod (7/15) quadrature with fallible integrands.
//!
//! The integrands built by the family module are themselves integrals, so the
//! integrand may fail; errors propagate out of the quadrature unchanged.

use crate::error::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

/// Absolute/relative tolerance pair. A panel is accepted when its error
/// estimate is below `max(abs, rel * |panel|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

fn kronrod_panel<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), Error>
where
    F: FnMut(f64) -> Result<f64, Error>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx)? + f(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

fn refine<F>(f: &mut F, a: f64, b: f64, tol: Tolerance, depth: u32) -> Result<(f64, f64), Error>
where
    F: FnMut(f64) -> Result<f64, Error>,
{
    let (value, err) = kronrod_panel(f, a, b)?;
    if err <= tol.abs.max(tol.rel * value.abs()) || err == 0.0 {
        return Ok((value, err));
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature { a, b, estimate: err });
    }
    let mid = 0.5 * (a + b);
    let half_tol = Tolerance::new(0.5 * tol.abs, tol.rel);
    let (left, el) = refine(f, a, mid, half_tol, depth + 1)?;
    let (right, er) = refine(f, mid, b, half_tol, depth + 1)?;
    Ok((left + right, el + er))
}

/// Integrate `f` over `[a, b]` (either orientation).
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64, Error>
where
    F: FnMut(f64) -> Result<f64, Error>,
{
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    refine(&mut f, a, b, tol, 0).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: Tolerance = Tolerance::new(1e-13, 1e-13);

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree-22 polynomials exactly.
        let v = integrate(|x| Ok(x.powi(9) - 3.0 * x.powi(4) + 1.0), -0.5, 1.5, TOL).unwrap();
        let antider = |x: f64| x.powi(10) / 10.0 - 0.6 * x.powi(5) + x;
        assert!((v - (antider(1.5) - antider(-0.5))).abs() < 1e-13);
    }

    #[test]
    fn orientation_and_empty() {
        let f = |x: f64| Ok(x.exp());
        let fwd = integrate(f, 0.0, 1.0, TOL).unwrap();
        let back = integrate(f, 1.0, 0.0, TOL).unwrap();
        assert_eq!(fwd, -back);
        assert!((fwd - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert_eq!(integrate(f, 0.3, 0.3, TOL).unwrap(), 0.0);
    }

    #[test]
    fn adapts_to_sharp_integrand() {
        // Lorentzian peak: the first panel is far from tolerance.
        let eps = 1e-3;
        let v = integrate(|x| Ok(eps / (x * x + eps * eps)), -1.0, 1.0, TOL).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x| if x > 0.5 { Err(Error::SingularJacobian) } else { Ok(1.0) },
            0.0,
            1.0,
            TOL,
        );
        assert_eq!(r, Err(Error::SingularJacobian));
    }

    #[test]
    fn non_integrable_singularity_reports_failure() {
        let r = integrate(|x: f64| Ok(1.0 / x.abs()), -1.0, 1.0, TOL);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}

use nalgebra::{Complex, Matrix4};
use serde::Serialize;

use super::LinearGains;
use crate::controller::{closed_loop_field, ControlLaw};
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::plant::State;

/// Largest `|f(x_eq)|` accepted as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationResult {
    /// Closed-loop Jacobian at the equilibrium, row-major.
    pub a: [[f64; 4]; 4],
    /// `(re, im)` pairs sorted by real part, then imaginary part.
    pub poles: Vec<(f64, f64)>,
    /// Relative residual of each pole in `det(sI - A)`.
    pub pole_residuals: Vec<f64>,
    pub gains_equivalent: LinearGains,
}

fn step(x: f64) -> f64 {
    FD_STEP * x.abs().max(1.0)
}

fn shifted(x: &State, j: usize, d: f64) -> State {
    let mut a = x.to_array();
    a[j] += d;
    State::from_array(a)
}

fn check_equilibrium(spec: &FamilySpec, law: &ControlLaw) -> Result<State> {
    let x = spec.equilibrium();
    let f = closed_loop_field(&x, spec, law)?;
    let r = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(r <= EQUILIBRIUM_TOL) {
        return Err(Error::NonEquilibrium { residual: r });
    }
    Ok(x)
}

/// Linear feedback equivalent to `law` near the equilibrium.
pub fn gains_equivalent(spec: &FamilySpec, law: &ControlLaw) -> Result<LinearGains> {
    let x = check_equilibrium(spec, law)?;
    gains_at(&x, spec, law)
}

fn gains_at(x: &State, spec: &FamilySpec, law: &ControlLaw) -> Result<LinearGains> {
    let u = |y: &State| law.evaluate(y, spec).map(|b| b.u_total);
    let xa = x.to_array();
    let mut k = [0.0; 4];
    for (j, kj) in k.iter_mut().enumerate() {
        let h = step(xa[j]);
        *kj = (u(&shifted(x, j, h))? - u(&shifted(x, j, -h))?) / (2.0 * h);
    }
    Ok(LinearGains { a8: u(x)?, kbp: k[0], kap: k[1], kbd: k[2], kad: k[3] })
}

/// Coefficients `[c0, c1, c2, c3, 1]` of `det(sI - A)` (Faddeev-LeVerrier).
pub fn char_poly(a: &Matrix4<f64>) -> [f64; 5] {
    let mut c = [0.0; 5];
    c[4] = 1.0;
    let mut m = Matrix4::zeros();
    for k in 1..=4 {
        m = a * m + Matrix4::identity() * c[5 - k];
        c[4 - k] = -(a * m).trace() / k as f64;
    }
    c
}

fn poly_residual(c: &[f64; 5], z: Complex<f64>) -> f64 {
    let mut p = Complex::new(0.0, 0.0);
    let mut scale = 0.0;
    for (k, ck) in c.iter().enumerate().rev() {
        p = p * z + ck;
        scale += ck.abs() * z.norm().powi(k as i32);
    }
    p.norm() / scale.max(f64::MIN_POSITIVE)
}

/// Jacobian, poles and equivalent linear gains of the closed loop.
pub fn linearize(spec: &FamilySpec, law: &ControlLaw) -> Result<LinearizationResult> {
    let x = check_equilibrium(spec, law)?;
    let xa = x.to_array();
    let mut a = [[0.0; 4]; 4];
    for j in 0..4 {
        let h = step(xa[j]);
        let fp = closed_loop_field(&shifted(&x, j, h), spec, law)?;
        let fm = closed_loop_field(&shifted(&x, j, -h), spec, law)?;
        for i in 0..4 {
            a[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let m = Matrix4::from_fn(|i, j| a[i][j]);
    let eig = m.complex_eigenvalues();
    let cp = char_poly(&m);
    let mut poles: Vec<Complex<f64>> = eig.iter().copied().collect();
    poles.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    let pole_residuals = poles.iter().map(|&z| poly_residual(&cp, z)).collect();
    Ok(LinearizationResult {
        a,
        poles: poles.iter().map(|z| (z.re, z.im)).collect(),
        pole_residuals,
        gains_equivalent: gains_at(&x, spec, law)?,
    })
}

impl LinearizationResult {
    pub fn max_real_part(&self) -> f64 {
        self.poles.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_poly_of_companion() {
        // companion matrix of s^4 + 2 s^3 - s^2 + 3 s + 5
        let a = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            -5.0, -3.0, 1.0, -2.0,
        );
        let c = char_poly(&a);
        let want = [5.0, 3.0, -1.0, 2.0, 1.0];
        for k in 0..5 {
            assert!((c[k] - want[k]).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn residual_vanishes_at_roots() {
        // (s+1)(s+2)(s^2+1)
        let c = [2.0, 3.0, 3.0, 3.0, 1.0];
        assert!(poly_residual(&c, Complex::new(-1.0, 0.0)) < 1e-15);
        assert!(poly_residual(&c, Complex::new(0.0, 1.0)) < 1e-15);
        assert!(poly_residual(&c, Complex::new(1.0, 0.0)) > 0.1);
    }
}

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::linearize::gains_equivalent;
use super::LinearGains;
use crate::controller::ControlLaw;
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::plant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the Euclidean norm of the gain error.
    pub tol: f64,
    /// Relative step of the finite-difference Jacobian.
    pub jacobian_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 50, tol: 1e-8, jacobian_step: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOutcome {
    pub spec: FamilySpec,
    /// `(mu1'(0), w''(0), k1, k2)`.
    pub scalars: [f64; 4],
    /// Gains of the fitted law, `a8` included.
    pub gains: LinearGains,
    pub iterations: usize,
    pub residual: f64,
}

/// The four scalars of `spec` that the fit adjusts.
pub fn free_scalars(spec: &FamilySpec) -> [f64; 4] {
    let g = &spec.gen;
    [g.mu1.coeff(1), 2.0 * g.w.coeff(2), g.chat_gains[0], g.chat_gains[1]]
}

fn with_scalars(template: &FamilySpec, z: &Vector4<f64>) -> FamilySpec {
    let mut spec = template.clone();
    spec.gen.mu1.set_coeff(1, z[0]);
    spec.gen.w.set_coeff(2, 0.5 * z[1]);
    spec.gen.chat_gains = [z[2], z[3]];
    spec
}

fn gain_error(spec: &FamilySpec, target: &LinearGains) -> Result<Vector4<f64>> {
    let g = gains_equivalent(spec, &ControlLaw::NonlinearFamily)?;
    Ok(Vector4::from(g.feedback()) - Vector4::from(target.feedback()))
}

fn initial_guess(template: &FamilySpec, target: &LinearGains) -> Vector4<f64> {
    let p = &template.plant;
    let s0 = template.gen.s0;
    let rho = p.rho;
    let m = match template.gen.mu1.coeff(1) {
        m if m > 0.0 => m,
        _ => 1.0,
    };
    let det_g = plant::kinetic_metric(s0, 0.0, p).map(|g| g.det()).unwrap_or(f64::NAN);
    let ch = template.gen.mu1.coeff(0) * template.gen.h.coeff(0) - 1.0;
    let mut w = 5.0 * rho * s0 * ch * (target.kbp - rho) / (m * det_g);
    if !w.is_finite() || w == 0.0 {
        w = 1.0;
    }
    Vector4::new(m, w, -target.kbd / det_g, (p.a7 - target.kad) / det_g)
}

/// Choose `mu1'(0)`, `w''(0)` and the dissipation gains of `template` so
/// that the linearized matching law equals `target`.
///
/// `a8` of the target is ignored; the result carries the equilibrium
/// feedforward. A positive `mu1'(0)` in the template selects the solution
/// branch.
pub fn fit_linear_gains(target: &LinearGains, template: &FamilySpec, opts: &FitOptions) -> Result<FitOutcome> {
    let mut z = initial_guess(template, target);
    let mut spec = with_scalars(template, &z);
    spec.validate()?;
    let mut err = gain_error(&spec, target)?;
    let mut norm = err.norm();
    let mut iterations = 0;

    while norm >= opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
        iterations += 1;

        let mut jac = Matrix4::zeros();
        for j in 0..4 {
            let h = opts.jacobian_step * z[j].abs().max(1.0);
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let ep = gain_error(&with_scalars(template, &zp), target)?;
            let em = gain_error(&with_scalars(template, &zm), target)?;
            jac.set_column(j, &((ep - em) / (2.0 * h)));
        }
        let delta = jac.lu().solve(&(-err)).ok_or(Error::SingularJacobian)?;
        if !delta.iter().all(|d| d.is_finite()) {
            return Err(Error::SingularJacobian);
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = z + delta * t;
            let trial = with_scalars(template, &cand);
            if trial.validate().is_ok() {
                if let Ok(e) = gain_error(&trial, target) {
                    if e.norm() < norm {
                        z = cand;
                        spec = trial;
                        err = e;
                        norm = e.norm();
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
    }

    let mut gains = gains_equivalent(&spec, &ControlLaw::NonlinearFamily)?;
    gains.a8 = spec.plant.equilibrium_torque(spec.gen.s0);
    Ok(FitOutcome { scalars: free_scalars(&spec), spec, gains, iterations, residual: norm })
}

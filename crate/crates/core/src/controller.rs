//! The matching control law `u = u_g + u_V + u_c` and the closed-loop
//! dynamics it is designed to produce.

use serde::{Deserialize, Serialize};

use crate::analysis::LinearGains;
use crate::error::Result;
use crate::family::{self, FamilySpec};
use crate::plant::{self, Christoffel, State};

/// Motor torque split into its geometric parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlBreakdown {
    pub u_g: f64,
    pub u_v: f64,
    pub u_c: f64,
    pub u_total: f64,
}

impl ControlBreakdown {
    pub fn new(u_g: f64, u_v: f64, u_c: f64) -> Self {
        Self { u_g, u_v, u_c, u_total: u_g + u_v + u_c }
    }
}

/// Feedback law driving the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    /// The nonlinear matching law of the family member.
    NonlinearFamily,
    /// `u = a8 + Kbp (s - s0) + Kap theta + Kbd s_dot + Kad theta_dot`.
    /// Position terms are reported as `u_v`, velocity terms as `u_c`.
    Linear(LinearGains),
    /// `u = 0`.
    OpenLoop,
}

impl ControlLaw {
    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::NonlinearFamily => "nonlinear",
            ControlLaw::Linear(_) => "linear",
            ControlLaw::OpenLoop => "open",
        }
    }

    pub fn evaluate(&self, x: &State, spec: &FamilySpec) -> Result<ControlBreakdown> {
        match self {
            ControlLaw::NonlinearFamily => control(x, spec),
            ControlLaw::Linear(k) => {
                let position = k.a8 + k.kbp * (x.s - spec.gen.s0) + k.kap * x.theta;
                let velocity = k.kbd * x.s_dot + k.kad * x.theta_dot;
                Ok(ControlBreakdown::new(0.0, position, velocity))
            }
            ControlLaw::OpenLoop => Ok(ControlBreakdown::default()),
        }
    }
}

/// Christoffel symbols of ĝ from the exact metric partials.
pub fn christoffel_ghat(s: f64, theta: f64, spec: &FamilySpec) -> Result<Christoffel> {
    let (gh, dgh) = family::ghat_with_partials(s, theta, spec)?;
    Christoffel::from_metric(&gh, &dgh)
}

/// Matching control input at state `x`.
pub fn control(x: &State, spec: &FamilySpec) -> Result<ControlBreakdown> {
    let p = &spec.plant;
    let (g, dg) = plant::kinetic_metric_with_partials(x.s, x.theta, p)?;
    let (gh, dgh, dvh) = family::control_geometry(x.s, x.theta, spec)?;
    let v = x.velocity();

    let gamma = Christoffel::from_metric(&g, &dg)?.contract(v);
    let gamma_hat = Christoffel::from_metric(&gh, &dgh)?.contract(v);
    let u_g = g.lower([gamma[0] - gamma_hat[0], gamma[1] - gamma_hat[1]])[1];

    let grad_hat = gh.solve(dvh)?;
    let dv = plant::potential_gradient(x.s, x.theta, p)?;
    let u_v = dv[1] - g.lower(grad_hat)[1];

    let c = family::chat(x, spec)?;
    let u_c = p.a7 * x.theta_dot - g.lower(c)[1];

    Ok(ControlBreakdown::new(u_g, u_v, u_c))
}

/// Accelerations of the target system
/// `q'' = -Gamma_hat(q', q') - ĉ(q') - ĝ^{-1} dV̂`.
pub fn target_accel(x: &State, spec: &FamilySpec) -> Result<[f64; 2]> {
    let (gh, dgh, dvh) = family::control_geometry(x.s, x.theta, spec)?;
    let gamma_hat = Christoffel::from_metric(&gh, &dgh)?.contract(x.velocity());
    let grad_hat = gh.solve(dvh)?;
    let c = family::chat(x, spec)?;
    Ok([
        -gamma_hat[0] - c[0] - grad_hat[0],
        -gamma_hat[1] - c[1] - grad_hat[1],
    ])
}

/// State derivative of the plant under `law`.
pub fn closed_loop_field(x: &State, spec: &FamilySpec, law: &ControlLaw) -> Result<[f64; 4]> {
    let u = law.evaluate(x, spec)?;
    let acc = plant::open_loop_rhs(x, u.u_total, &spec.plant)?;
    Ok([x.s_dot, x.theta_dot, acc[0], acc[1]])
}

//! Closed-loop simulation with Lyapunov diagnostics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::controller::{ControlBreakdown, ControlLaw};
use crate::error::{Error, Result};
use crate::family::{self, FamilySpec};
use crate::ode::{self, Flow, OdeError, OdeOptions};
use crate::plant::{self, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub t_final: f64,
    /// Output sampling interval.
    pub dt: f64,
    /// Relative (and absolute) tolerance of the adaptive integrator.
    pub integrator_tol: f64,
    pub stop_on_beam_exit: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t_final: 10.0, dt: 1e-3, integrator_tol: 1e-10, stop_on_beam_exit: true }
    }
}

impl SimConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err("t_final must be > 0".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be > 0".into());
        }
        if !(self.integrator_tol > 1e-14 && self.integrator_tol < 1e-2) {
            return Err("integrator_tol must lie in (1e-14, 1e-2)".into());
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BeamExit,
    Singularity,
    NumericalFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BeamExit => "beam_exit",
            Termination::Singularity => "singularity",
            Termination::NumericalFailure => "numerical_failure",
        }
    }

    fn from_error(e: &Error) -> Self {
        match e {
            Error::Singular { .. }
            | Error::NonInvertibleMetric { .. }
            | Error::SingularMassMatrix { .. }
            | Error::LinkageDomain { .. } => Termination::Singularity,
            _ => Termination::NumericalFailure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    pub control: ControlBreakdown,
    pub h_hat: f64,
    pub h_hat_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn final_state(&self) -> State {
        self.samples.last().map(|s| s.state).unwrap_or_default()
    }

    pub const CSV_HEADER: &'static str = "t,s,theta,s_dot,theta_dot,u,u_g,u_V,u_c,H_hat,H_hat_rate";

    /// CSV with 17 significant digits and a trailing termination comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 220 + 64);
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let x = &s.state;
            let c = &s.control;
            let row = [
                s.t, x.s, x.theta, x.s_dot, x.theta_dot, c.u_total, c.u_g, c.u_v, c.u_c, s.h_hat,
                s.h_hat_rate,
            ];
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "# termination={}", self.termination.as_str());
        out
    }
}

/// Candidate Lyapunov function `½ ĝ(v, v) + V̂`.
pub fn hhat(x: &State, spec: &FamilySpec) -> Result<f64> {
    let (gh, _) = family::ghat_with_partials(x.s, x.theta, spec)?;
    let (vh, _) = family::vhat_at(x.s, x.theta, spec)?;
    Ok(0.5 * gh.quad_form(x.velocity()) + vh)
}

/// `ĝ(ĉ(v), v)`, the dissipation rate of Ĥ along the target dynamics.
pub fn dissipation_rate(x: &State, spec: &FamilySpec) -> Result<f64> {
    let (gh, _) = family::ghat_with_partials(x.s, x.theta, spec)?;
    let c = family::chat(x, spec)?;
    let gc = gh.lower(c);
    Ok(gc[0] * x.s_dot + gc[1] * x.theta_dot)
}

/// Integrate the plant under `law` from `x0`.
///
/// Failures never abort: the trajectory ends early and `termination`
/// records why.
pub fn simulate(x0: State, spec: &FamilySpec, cfg: &SimConfig, law: &ControlLaw) -> Trajectory {
    let mut samples: Vec<Sample> = Vec::with_capacity(cfg.n_samples() + 1);
    let mut termination = Termination::Completed;
    let s_max = spec.plant.s_max;

    let rhs = |_t: f64, y: &[f64; 4]| -> Result<[f64; 4]> {
        crate::controller::closed_loop_field(&State::from_array(*y), spec, law)
    };
    let on_sample = |_k: usize, t: f64, y: &[f64; 4]| -> Flow {
        let state = State::from_array(*y);
        let exited = cfg.stop_on_beam_exit && state.s.abs() > s_max;
        let h_hat = hhat(&state, spec).unwrap_or(f64::NAN);
        let control = law.evaluate(&state, spec);
        let nan = ControlBreakdown { u_g: f64::NAN, u_v: f64::NAN, u_c: f64::NAN, u_total: f64::NAN };
        let (control, failure) = match control {
            Ok(c) => (c, None),
            Err(e) => (nan, Some(Termination::from_error(&e))),
        };
        samples.push(Sample { t, state, control, h_hat, h_hat_rate: f64::NAN });
        if exited {
            termination = Termination::BeamExit;
            return Flow::Stop;
        }
        if !state.is_finite() {
            termination = Termination::NumericalFailure;
            return Flow::Stop;
        }
        if let Some(f) = failure {
            termination = f;
            return Flow::Stop;
        }
        Flow::Continue
    };

    let opts = OdeOptions::with_tol(cfg.integrator_tol);
    let result = ode::integrate_sampled(rhs, x0.to_array(), cfg.dt, cfg.n_samples(), &opts, on_sample);
    match result {
        Ok(_) => {}
        Err(OdeError::Rhs(e)) => termination = Termination::from_error(&e),
        Err(_) => termination = Termination::NumericalFailure,
    }
    fill_rates(&mut samples, cfg.dt);
    Trajectory { samples, termination }
}

/// Fourth-order finite-difference derivative of Ĥ on the uniform grid.
fn fill_rates(samples: &mut [Sample], dt: f64) {
    let n = samples.len();
    let h: Vec<f64> = samples.iter().map(|s| s.h_hat).collect();
    let rate = |i: usize| -> f64 {
        if n >= 5 {
            if i >= 2 && i + 2 < n {
                (h[i - 2] - 8.0 * h[i - 1] + 8.0 * h[i + 1] - h[i + 2]) / (12.0 * dt)
            } else if i < 2 {
                let f = &h[i..i + 5];
                if i == 0 {
                    (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * dt)
                } else {
                    let f = &h[0..5];
                    (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * dt)
                }
            } else {
                let f = &h[n - 5..n];
                if i == n - 1 {
                    (25.0 * f[4] - 48.0 * f[3] + 36.0 * f[2] - 16.0 * f[1] + 3.0 * f[0]) / (12.0 * dt)
                } else {
                    (3.0 * f[4] + 10.0 * f[3] - 18.0 * f[2] + 6.0 * f[1] - f[0]) / (12.0 * dt)
                }
            }
        } else if n >= 2 {
            let j = i.min(n - 2);
            (h[j + 1] - h[j]) / dt
        } else {
            f64::NAN
        }
    };
    let rates: Vec<f64> = (0..n).map(rate).collect();
    for (s, r) in samples.iter_mut().zip(rates) {
        s.h_hat_rate = r;
    }
}

/// Largest `|dĤ/dt + ĝ(ĉ(v), v)|` along a trajectory, using the recorded
/// finite-difference rates. NaN if any sample cannot be evaluated.
pub fn hhat_rate_identity(traj: &Trajectory, spec: &FamilySpec) -> f64 {
    let mut worst = 0.0f64;
    for s in &traj.samples {
        let r = match dissipation_rate(&s.state, spec) {
            Ok(d) => (s.h_hat_rate + d).abs(),
            Err(_) => f64::NAN,
        };
        if r.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(r);
    }
    worst
}

/// Plant energy `T + V` along a trajectory.
pub fn energies(traj: &Trajectory, spec: &FamilySpec) -> Vec<f64> {
    traj.samples
        .iter()
        .map(|s| plant::total_energy(&s.state, &spec.plant).unwrap_or(f64::NAN))
        .collect()
}

//! Local stability tests, linearization, gain fitting and basin sampling.

mod basin;
pub mod fit;
mod linearize;
mod stability;

use serde::{Deserialize, Serialize};

pub use basin::{basin_estimate, AxisRange, BasinEstimate, BasinGrid, BasinPoint};
pub use fit::{fit_linear_gains, FitOptions, FitOutcome};
pub use linearize::{char_poly, gains_equivalent, linearize, LinearizationResult, EQUILIBRIUM_TOL};
pub use stability::{stability_conditions, Condition, StabilityReport, POSITIVITY_TOL};

/// `u = a8 + Kbp (s - s0) + Kap theta + Kbd s_dot + Kad theta_dot`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGains {
    pub a8: f64,
    #[serde(rename = "Kbp")]
    pub kbp: f64,
    #[serde(rename = "Kap")]
    pub kap: f64,
    #[serde(rename = "Kbd")]
    pub kbd: f64,
    #[serde(rename = "Kad")]
    pub kad: f64,
}

impl LinearGains {
    /// Feedback gains in state order `(s, theta, s_dot, theta_dot)`.
    pub fn feedback(&self) -> [f64; 4] {
        [self.kbp, self.kap, self.kbd, self.kad]
    }

    pub fn is_finite(&self) -> bool {
        self.a8.is_finite() && self.feedback().iter().all(|k| k.is_finite())
    }

    /// Largest absolute difference over all five entries.
    pub fn max_abs_diff(&self, other: &LinearGains) -> f64 {
        let a = self.feedback();
        let b = other.feedback();
        (0..4).map(|i| (a[i] - b[i]).abs()).fold((self.a8 - other.a8).abs(), f64::max)
    }
}

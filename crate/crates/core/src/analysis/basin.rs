use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::ControlLaw;
use crate::family::FamilySpec;
use crate::plant::State;
use crate::sim::{simulate, SimConfig, Termination};

/// `count` evenly spaced values from `min` to `max` (just `min` if
/// `count == 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn point(v: f64) -> Self {
        Self { min: v, max: v, count: 1 }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinGrid {
    pub s: AxisRange,
    pub theta: AxisRange,
    pub s_dot: AxisRange,
    pub theta_dot: AxisRange,
}

impl BasinGrid {
    pub fn len(&self) -> usize {
        self.axes().iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn axes(&self) -> [AxisRange; 4] {
        [self.s, self.theta, self.s_dot, self.theta_dot]
    }

    /// Grid point `index`, with `theta_dot` varying fastest.
    pub fn point(&self, index: usize) -> State {
        let axes = self.axes();
        let mut rem = index;
        let mut x = [0.0; 4];
        for k in (0..4).rev() {
            x[k] = axes[k].value(rem % axes[k].count);
            rem /= axes[k].count;
        }
        State::from_array(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinPoint {
    pub index: usize,
    pub x0: State,
    pub termination: Termination,
    /// `|x(t_end) - x_eq|`, NaN if the final state is not finite.
    pub final_distance: f64,
    pub captured: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinEstimate {
    pub fraction: f64,
    pub points: Vec<BasinPoint>,
}

impl BasinEstimate {
    pub const CSV_HEADER: &'static str = "index,s,theta,s_dot,theta_dot,outcome,termination,final_distance";

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let x = &p.x0;
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
                p.index,
                x.s,
                x.theta,
                x.s_dot,
                x.theta_dot,
                if p.captured { "captured" } else { "not_captured" },
                p.termination.as_str(),
                p.final_distance,
            );
        }
        out
    }
}

/// Simulate from every grid point; a point is captured when the run
/// completes within `capture_radius` of the equilibrium.
pub fn basin_estimate(
    spec: &FamilySpec,
    law: &ControlLaw,
    grid: &BasinGrid,
    cfg: &SimConfig,
    capture_radius: f64,
) -> BasinEstimate {
    let x_eq = spec.equilibrium();
    let points: Vec<BasinPoint> = (0..grid.len())
        .into_par_iter()
        .map(|index| {
            let x0 = grid.point(index);
            let traj = simulate(x0, spec, cfg, law);
            let final_distance = traj.final_state().distance(&x_eq);
            let captured = traj.termination == Termination::Completed && final_distance < capture_radius;
            BasinPoint { index, x0, termination: traj.termination, final_distance, captured }
        })
        .collect();
    let captured = points.iter().filter(|p| p.captured).count();
    let fraction = if points.is_empty() { 0.0 } else { captured as f64 / points.len() as f64 };
    BasinEstimate { fraction, points }
}

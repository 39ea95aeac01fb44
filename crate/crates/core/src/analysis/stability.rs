use serde::Serialize;

use crate::error::Result;
use crate::family::{self, FamilySpec};

/// Relative threshold below which a determinant or trace counts as zero.
/// Determinants are compared against `POSITIVITY_TOL * |M|_F^2`, traces
/// against `POSITIVITY_TOL * |M|_F`.
pub const POSITIVITY_TOL: f64 = 1e-9;

const HESSIAN_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub value: f64,
    pub pass: bool,
}

/// The six det/tr positivity tests at the equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub det_ghat: Condition,
    pub tr_ghat: Condition,
    pub det_ghat_chat: Condition,
    pub tr_ghat_chat: Condition,
    pub det_hess_vhat: Condition,
    pub tr_hess_vhat: Condition,
    pub overall: bool,
    pub ghat: [[f64; 2]; 2],
    pub ghat_chat: [[f64; 2]; 2],
    pub hess_vhat: [[f64; 2]; 2],
}

fn frobenius(m: &[[f64; 2]; 2]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn tests(m: &[[f64; 2]; 2]) -> (Condition, Condition) {
    let norm = frobenius(m);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let tr = m[0][0] + m[1][1];
    (
        Condition { value: det, pass: det > POSITIVITY_TOL * norm * norm },
        Condition { value: tr, pass: tr > POSITIVITY_TOL * norm },
    )
}

impl StabilityReport {
    pub fn from_matrices(
        ghat: [[f64; 2]; 2],
        ghat_chat: [[f64; 2]; 2],
        hess_vhat: [[f64; 2]; 2],
    ) -> Self {
        let (det_ghat, tr_ghat) = tests(&ghat);
        let (det_ghat_chat, tr_ghat_chat) = tests(&ghat_chat);
        let (det_hess_vhat, tr_hess_vhat) = tests(&hess_vhat);
        let overall = [det_ghat, tr_ghat, det_ghat_chat, tr_ghat_chat, det_hess_vhat, tr_hess_vhat]
            .iter()
            .all(|c| c.pass);
        Self {
            det_ghat,
            tr_ghat,
            det_ghat_chat,
            tr_ghat_chat,
            det_hess_vhat,
            tr_hess_vhat,
            overall,
            ghat,
            ghat_chat,
            hess_vhat,
        }
    }

    /// `(name, condition)` in report order.
    pub fn conditions(&self) -> [(&'static str, Condition); 6] {
        [
            ("det_ghat", self.det_ghat),
            ("tr_ghat", self.tr_ghat),
            ("det_ghat_chat", self.det_ghat_chat),
            ("tr_ghat_chat", self.tr_ghat_chat),
            ("det_hess_vhat", self.det_hess_vhat),
            ("tr_hess_vhat", self.tr_hess_vhat),
        ]
    }
}

/// Evaluate the stability conditions at `(s0, 0)`.
///
/// The Hessian of V̂ is the symmetrized central difference of the exact
/// gradient, in `(s, theta)` coordinates.
pub fn stability_conditions(spec: &FamilySpec) -> Result<StabilityReport> {
    let s0 = spec.gen.s0;
    let geo = family::ghat_at(s0, 0.0, spec)?;
    let gh = geo.ghat.to_matrix();

    let cj = family::chat_jacobian(0.0, spec)?;
    let mut ghat_chat = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            ghat_chat[i][j] = gh[i][0] * cj[0][j] + gh[i][1] * cj[1][j];
        }
    }

    let h = HESSIAN_STEP;
    let grad = |s: f64, th: f64| family::vhat_at(s, th, spec).map(|(_, d)| d);
    let (ds_p, ds_m) = (grad(s0 + h, 0.0)?, grad(s0 - h, 0.0)?);
    let (dt_p, dt_m) = (grad(s0, h)?, grad(s0, -h)?);
    let mut hess = [[0.0; 2]; 2];
    for j in 0..2 {
        hess[0][j] = (ds_p[j] - ds_m[j]) / (2.0 * h);
        hess[1][j] = (dt_p[j] - dt_m[j]) / (2.0 * h);
    }
    let off = 0.5 * (hess[0][1] + hess[1][0]);
    hess[0][1] = off;
    hess[1][0] = off;

    Ok(StabilityReport::from_matrices(gh, ghat_chat, hess))
}

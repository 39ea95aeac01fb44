//! Ball-and-beam model: linkage, kinetic metric, potential and the open-loop
//! equations of motion in the rescaled (dimensionless) variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless plant constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParams {
    pub a3: f64,
    pub a4: f64,
    /// Gravity torque on the beam/motor assembly.
    pub a5: f64,
    /// Offset length of the ball's rolling surface.
    pub a6: f64,
    /// Viscous dissipation on the motor shaft.
    pub a7: f64,
    /// Linkage ratio in `alpha = asin(rho * sin(theta))`.
    pub rho: f64,
    /// Beam half-length.
    pub s_max: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self { a3: 1.4, a4: 2.0, a5: 1.0, a6: 0.1, a7: 0.05, rho: 0.25, s_max: 1.0 }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("a3", self.a3),
            ("a4", self.a4),
            ("a5", self.a5),
            ("a6", self.a6),
            ("a7", self.a7),
            ("rho", self.rho),
            ("s_max", self.s_max),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} must be finite")));
        }
        if self.a4 <= 0.0 {
            return Err(Error::InvalidParams("a4 must be > 0".into()));
        }
        if self.a3 < 1.0 {
            return Err(Error::InvalidParams("a3 must be >= 1".into()));
        }
        if self.a7 < 0.0 {
            return Err(Error::InvalidParams("a7 must be >= 0".into()));
        }
        if self.s_max <= 0.0 {
            return Err(Error::InvalidParams("s_max must be > 0".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParams("rho must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Largest |alpha| reachable by the linkage.
    pub fn alpha_max(&self) -> f64 {
        self.rho.min(1.0).asin()
    }

    /// Motor torque that holds the ball at rest at `(s0, 0)`.
    pub fn equilibrium_torque(&self, s0: f64) -> f64 {
        self.a5 + (self.a6 + s0) * self.rho
    }
}

/// Configuration and velocity of the ball-and-beam.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    pub s: f64,
    pub theta: f64,
    pub s_dot: f64,
    pub theta_dot: f64,
}

impl State {
    pub const fn new(s: f64, theta: f64, s_dot: f64, theta_dot: f64) -> Self {
        Self { s, theta, s_dot, theta_dot }
    }

    pub const fn at_rest(s: f64, theta: f64) -> Self {
        Self::new(s, theta, 0.0, 0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s, self.theta, self.s_dot, self.theta_dot]
    }

    pub fn from_array(x: [f64; 4]) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.s_dot, self.theta_dot]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Euclidean distance in `(s, theta, s_dot, theta_dot)`.
    pub fn distance(&self, other: &State) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Symmetric 2x2 bilinear form in `(s, theta)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metric2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Metric2 {
    pub const fn new(g11: f64, g12: f64, g22: f64) -> Self {
        Self { g11, g12, g22 }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn trace(&self) -> f64 {
        self.g11 + self.g22
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g11 > 0.0 && self.det() > 0.0
    }

    pub fn to_matrix(&self) -> [[f64; 2]; 2] {
        [[self.g11, self.g12], [self.g12, self.g22]]
    }

    pub fn frobenius(&self) -> f64 {
        (self.g11 * self.g11 + 2.0 * self.g12 * self.g12 + self.g22 * self.g22).sqrt()
    }

    /// Lower an index: `G v`.
    pub fn lower(&self, v: [f64; 2]) -> [f64; 2] {
        [self.g11 * v[0] + self.g12 * v[1], self.g12 * v[0] + self.g22 * v[1]]
    }

    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        let lv = self.lower(v);
        lv[0] * v[0] + lv[1] * v[1]
    }

    /// Inverse, or `None` when the form is numerically degenerate
    /// (`|det| <= 1e-13 * |G|_F^2`).
    pub fn inverse(&self) -> Option<Metric2> {
        let det = self.det();
        let scale = self.frobenius();
        if !det.is_finite() || det.abs() <= 1e-13 * scale * scale {
            return None;
        }
        Some(Metric2::new(self.g22 / det, -self.g12 / det, self.g11 / det))
    }

    /// Solve `G x = b`, failing with [`Error::NonInvertibleMetric`].
    pub fn solve(&self, b: [f64; 2]) -> Result<[f64; 2]> {
        let inv = self.inverse().ok_or(Error::NonInvertibleMetric { det: self.det() })?;
        Ok(inv.lower(b))
    }

    pub fn scaled(&self, k: f64) -> Metric2 {
        Metric2::new(k * self.g11, k * self.g12, k * self.g22)
    }
}

/// Linkage angle and its first two derivatives with respect to `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linkage {
    pub alpha: f64,
    pub alpha_p: f64,
    pub alpha_pp: f64,
}

/// `alpha = asin(rho sin theta)` with exact derivatives.
pub fn alpha(theta: f64, params: &PlantParams) -> Result<Linkage> {
    let rho = params.rho;
    let (sin, cos) = theta.sin_cos();
    let r = rho * sin;
    if r.abs() >= 1.0 || !r.is_finite() {
        return Err(Error::LinkageDomain { theta });
    }
    let q = (1.0 - r * r).sqrt();
    Ok(Linkage {
        alpha: r.asin(),
        alpha_p: rho * cos / q,
        alpha_pp: -rho * (1.0 - rho * rho) * sin / (q * q * q),
    })
}

/// Kinetic metric g at `(s, theta)`.
pub fn kinetic_metric(s: f64, theta: f64, params: &PlantParams) -> Result<Metric2> {
    let l = alpha(theta, params)?;
    Ok(metric_from_linkage(s, &l, params))
}

fn metric_from_linkage(s: f64, l: &Linkage, p: &PlantParams) -> Metric2 {
    let ap2 = l.alpha_p * l.alpha_p;
    Metric2::new(1.0, l.alpha_p, p.a4 + (p.a3 + 2.5 * s * s) * ap2)
}

/// Metric g together with its partials `[d/ds g, d/dtheta g]`.
pub fn kinetic_metric_with_partials(
    s: f64,
    theta: f64,
    params: &PlantParams,
) -> Result<(Metric2, [Metric2; 2])> {
    let l = alpha(theta, params)?;
    let g = metric_from_linkage(s, &l, params);
    let ap2 = l.alpha_p * l.alpha_p;
    let ds = Metric2::new(0.0, 0.0, 5.0 * s * ap2);
    let dth = Metric2::new(
        0.0,
        l.alpha_pp,
        2.0 * (params.a3 + 2.5 * s * s) * l.alpha_p * l.alpha_pp,
    );
    Ok((g, [ds, dth]))
}

/// Potential energy `V = a5 sin(theta) + (s + a6) sin(alpha)`.
pub fn potential(s: f64, theta: f64, params: &PlantParams) -> Result<f64> {
    let l = alpha(theta, params)?;
    Ok(params.a5 * theta.sin() + (s + params.a6) * l.alpha.sin())
}

/// Exact differential `(dV/ds, dV/dtheta)`.
pub fn potential_gradient(s: f64, theta: f64, params: &PlantParams) -> Result<[f64; 2]> {
    let l = alpha(theta, params)?;
    Ok([
        l.alpha.sin(),
        params.a5 * theta.cos() + (s + params.a6) * l.alpha.cos() * l.alpha_p,
    ])
}

/// Velocity-quadratic terms of both equations of motion, as printed
/// (s-row and theta-row), excluding dissipation.
fn coriolis_terms(x: &State, l: &Linkage, p: &PlantParams) -> [f64; 2] {
    let ap2 = l.alpha_p * l.alpha_p;
    let td2 = x.theta_dot * x.theta_dot;
    [
        (l.alpha_pp - 2.5 * x.s * ap2) * td2,
        5.0 * ap2 * x.s * x.s_dot * x.theta_dot
            + (p.a3 + 2.5 * x.s * x.s) * l.alpha_p * l.alpha_pp * td2,
    ]
}

/// Residual of the two open-loop equations of motion for given accelerations.
pub fn equations_of_motion_residual(
    x: &State,
    u: f64,
    accel: [f64; 2],
    params: &PlantParams,
) -> Result<[f64; 2]> {
    let l = alpha(x.theta, params)?;
    let g = metric_from_linkage(x.s, &l, params);
    let dv = potential_gradient(x.s, x.theta, params)?;
    let c = coriolis_terms(x, &l, params);
    let ga = g.lower(accel);
    Ok([
        ga[0] + c[0] + dv[0],
        ga[1] + c[1] + dv[1] + params.a7 * x.theta_dot - u,
    ])
}

/// Open-loop accelerations `(s_ddot, theta_ddot)` under motor torque `u`.
pub fn open_loop_rhs(x: &State, u: f64, params: &PlantParams) -> Result<[f64; 2]> {
    let l = alpha(x.theta, params)?;
    let g = metric_from_linkage(x.s, &l, params);
    let dv = potential_gradient(x.s, x.theta, params)?;
    let c = coriolis_terms(x, &l, params);
    let rhs = [-c[0] - dv[0], u - c[1] - dv[1] - params.a7 * x.theta_dot];
    // Cramer's rule on the 2x2 mass matrix.
    let det = g.det();
    if !(det > 1e-12) {
        return Err(Error::SingularMassMatrix { det });
    }
    Ok([
        (g.g22 * rhs[0] - g.g12 * rhs[1]) / det,
        (g.g11 * rhs[1] - g.g12 * rhs[0]) / det,
    ])
}

/// Kinetic plus potential energy.
pub fn total_energy(x: &State, params: &PlantParams) -> Result<f64> {
    let g = kinetic_metric(x.s, x.theta, params)?;
    Ok(0.5 * g.quad_form(x.velocity()) + potential(x.s, x.theta, params)?)
}

/// Connection coefficients `gamma[k][i][j]` of a 2D metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel(pub [[[f64; 2]; 2]; 2]);

impl Christoffel {
    /// Levi-Civita symbols from a metric value and its coordinate partials.
    pub fn from_metric(g: &Metric2, dg: &[Metric2; 2]) -> Result<Self> {
        let inv = g.inverse().ok_or(Error::NonInvertibleMetric { det: g.det() })?;
        let d = [dg[0].to_matrix(), dg[1].to_matrix()];
        let mut first = [[[0.0; 2]; 2]; 2]; // [i][j][l]
        for (i, row) in first.iter_mut().enumerate() {
            for (j, col) in row.iter_mut().enumerate() {
                for (l, v) in col.iter_mut().enumerate() {
                    *v = 0.5 * (d[i][j][l] + d[j][i][l] - d[l][i][j]);
                }
            }
        }
        let inv = inv.to_matrix();
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    gk[i][j] = inv[k][0] * first[i][j][0] + inv[k][1] * first[i][j][1];
                }
            }
        }
        Ok(Self(gamma))
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.0[k][i][j]
    }

    /// Contraction `Gamma^k_ij v^i v^j`.
    pub fn contract(&self, v: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    *o += self.0[k][i][j] * v[i] * v[j];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        let mut m = 0.0f64;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    m = m.max((self.0[k][i][j] - other.0[k][i][j]).abs());
                }
            }
        }
        m
    }
}

/// Christoffel symbols of the kinetic metric, from exact partials.
pub fn christoffel_g(s: f64, theta: f64, params: &PlantParams) -> Result<Christoffel> {
    let (g, dg) = kinetic_metric_with_partials(s, theta, params)?;
    Christoffel::from_metric(&g, &dg)
}

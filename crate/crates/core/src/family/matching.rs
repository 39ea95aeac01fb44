//! Numerical residuals of the matching conditions.
//!
//! With `P = (ds + alpha' dtheta) ⊗ d/ds`, the projection of a vector `v`
//! is `(g v)_s d/ds`, so every projected condition reduces to the s-component
//! of a covector:
//!
//! - kinetic:   `[g (Gamma - Gamma_hat)(X, X)]_s = 0` for all `X`
//! - potential: `[dV - g ĝ^{-1} dV̂]_s = 0`
//! - lambda:    `(nabla_Z b)(d/ds, d/ds) = 0` for `b = g ĝ^{-1} g` and all `Z`
//! - Lie:       `L_{lambda d/ds} ĝ = L_{d/ds} g` (all components)
//!
//! `d/ds` is the g-unit field spanning the unactuated direction.

use crate::error::Result;
use crate::plant::{self, Christoffel, Metric2, PlantParams};

use super::{control_geometry, FamilySpec};

const LIE_STEP: f64 = 1e-5;

/// A candidate closed-loop geometry: target metric and potential gradient.
pub trait TargetGeometry {
    fn plant(&self) -> &PlantParams;
    /// Target metric and its partials `[d/ds, d/dtheta]`.
    fn metric(&self, s: f64, theta: f64) -> Result<(Metric2, [Metric2; 2])>;
    fn potential_gradient(&self, s: f64, theta: f64) -> Result<[f64; 2]>;
}

impl TargetGeometry for FamilySpec {
    fn plant(&self) -> &PlantParams {
        &self.plant
    }

    fn metric(&self, s: f64, theta: f64) -> Result<(Metric2, [Metric2; 2])> {
        super::ghat_with_partials(s, theta, self)
    }

    fn potential_gradient(&self, s: f64, theta: f64) -> Result<[f64; 2]> {
        control_geometry(s, theta, self).map(|(_, _, dv)| dv)
    }
}

/// The plant matched against itself (`ĝ = g`, `V̂ = V`).
#[derive(Debug, Clone, Copy)]
pub struct PlantAsTarget(pub PlantParams);

impl TargetGeometry for PlantAsTarget {
    fn plant(&self) -> &PlantParams {
        &self.0
    }

    fn metric(&self, s: f64, theta: f64) -> Result<(Metric2, [Metric2; 2])> {
        plant::kinetic_metric_with_partials(s, theta, &self.0)
    }

    fn potential_gradient(&self, s: f64, theta: f64) -> Result<[f64; 2]> {
        plant::potential_gradient(s, theta, &self.0)
    }
}

/// Wraps a geometry and scales ĝ11 (value and partials) by `factor`.
/// Used to check that the residuals detect a corrupted metric.
#[derive(Debug, Clone, Copy)]
pub struct ScaledGhat11<'a, T> {
    pub inner: &'a T,
    pub factor: f64,
}

impl<T: TargetGeometry> TargetGeometry for ScaledGhat11<'_, T> {
    fn plant(&self) -> &PlantParams {
        self.inner.plant()
    }

    fn metric(&self, s: f64, theta: f64) -> Result<(Metric2, [Metric2; 2])> {
        let (mut g, mut dg) = self.inner.metric(s, theta)?;
        g.g11 *= self.factor;
        for d in &mut dg {
            d.g11 *= self.factor;
        }
        Ok((g, dg))
    }

    fn potential_gradient(&self, s: f64, theta: f64) -> Result<[f64; 2]> {
        self.inner.potential_gradient(s, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchingResiduals {
    pub r3: f64,
    pub r4_v: f64,
    pub r5_lambda: f64,
    pub r5_lie: f64,
}

impl MatchingResiduals {
    pub fn max(&self) -> f64 {
        self.r3.max(self.r4_v).max(self.r5_lambda).max(self.r5_lie)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.r3, self.r4_v, self.r5_lambda, self.r5_lie]
    }
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn first_kind(dg: &[Metric2; 2]) -> [[[f64; 2]; 2]; 2] {
    let d = [dg[0].to_matrix(), dg[1].to_matrix()];
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                out[i][j][l] = 0.5 * (d[i][j][l] + d[j][i][l] - d[l][i][j]);
            }
        }
    }
    out
}

/// `lambda d/ds = ĝ^{-1} g e_s`.
fn lambda_field<T: TargetGeometry + ?Sized>(geo: &T, s: f64, theta: f64) -> Result<[f64; 2]> {
    let g = plant::kinetic_metric(s, theta, geo.plant())?;
    let (gh, _) = geo.metric(s, theta)?;
    gh.solve([g.g11, g.g12])
}

/// Residuals of all matching conditions for an arbitrary target geometry.
pub fn matching_residuals_for<T: TargetGeometry + ?Sized>(
    geo: &T,
    s: f64,
    theta: f64,
) -> Result<MatchingResiduals> {
    let plant = geo.plant();
    let (g, dg) = plant::kinetic_metric_with_partials(s, theta, plant)?;
    let (gh, dgh) = geo.metric(s, theta)?;
    let gh_inv = gh
        .inverse()
        .ok_or(crate::error::Error::NonInvertibleMetric { det: gh.det() })?
        .to_matrix();
    let gm = g.to_matrix();
    // Row s of g ĝ^{-1}; contracting with a covector gives [g ĝ^{-1} eta]_s.
    let g_ghinv = mat_mul(&gm, &gh_inv);
    let row_s = g_ghinv[0];

    // kinetic: [ij, s]_g - (g ĝ^{-1} [ij, .]_ĝ)_s
    let fk = first_kind(&dg);
    let fkh = first_kind(&dgh);
    let mut r3 = 0.0f64;
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let d = fk[i][j][0] - (row_s[0] * fkh[i][j][0] + row_s[1] * fkh[i][j][1]);
        r3 = r3.max(d.abs());
    }

    // potential
    let dv = plant::potential_gradient(s, theta, plant)?;
    let dvh = geo.potential_gradient(s, theta)?;
    let r4_v = (dv[0] - (row_s[0] * dvh[0] + row_s[1] * dvh[1])).abs();

    // lambda-equation on b = g ĝ^{-1} g
    let b = mat_mul(&g_ghinv, &gm);
    let ghinv_g = mat_mul(&gh_inv, &gm);
    let gamma = Christoffel::from_metric(&g, &dg)?;
    let mut r5_lambda = 0.0f64;
    for k in 0..2 {
        let dgk = dg[k].to_matrix();
        let dghk = dgh[k].to_matrix();
        // d_k b = dg ĝ^-1 g + g ĝ^-1 dg - g ĝ^-1 dĝ ĝ^-1 g
        let t1 = mat_mul(&mat_mul(&dgk, &gh_inv), &gm);
        let t2 = mat_mul(&g_ghinv, &dgk);
        let t3 = mat_mul(&mat_mul(&g_ghinv, &dghk), &ghinv_g);
        let db_ss = t1[0][0] + t2[0][0] - t3[0][0];
        let conn: f64 = (0..2).map(|l| gamma.get(l, k, 0) * b[l][0]).sum();
        r5_lambda = r5_lambda.max((db_ss - 2.0 * conn).abs());
    }

    // Lie-derivative equation; derivatives of the lambda field by central differences
    let x = lambda_field(geo, s, theta)?;
    let h = LIE_STEP;
    let xs_p = lambda_field(geo, s + h, theta)?;
    let xs_m = lambda_field(geo, s - h, theta)?;
    let xt_p = lambda_field(geo, s, theta + h)?;
    let xt_m = lambda_field(geo, s, theta - h)?;
    // dx[i][k] = d_i X^k
    let dx = [
        [(xs_p[0] - xs_m[0]) / (2.0 * h), (xs_p[1] - xs_m[1]) / (2.0 * h)],
        [(xt_p[0] - xt_m[0]) / (2.0 * h), (xt_p[1] - xt_m[1]) / (2.0 * h)],
    ];
    let ghm = gh.to_matrix();
    let dghm = [dgh[0].to_matrix(), dgh[1].to_matrix()];
    let dgs = dg[0].to_matrix();
    let mut r5_lie = 0.0f64;
    for i in 0..2 {
        for j in i..2 {
            let mut lie = 0.0;
            for k in 0..2 {
                lie += x[k] * dghm[k][i][j] + ghm[k][j] * dx[i][k] + ghm[i][k] * dx[j][k];
            }
            r5_lie = r5_lie.max((lie - dgs[i][j]).abs());
        }
    }

    Ok(MatchingResiduals { r3, r4_v, r5_lambda, r5_lie })
}

/// Matching residuals of a family member at `(s, theta)`.
pub fn matching_residuals(s: f64, theta: f64, spec: &FamilySpec) -> Result<MatchingResiduals> {
    matching_residuals_for(spec, s, theta)
}

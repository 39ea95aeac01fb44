//! One member of the closed-form family of matching geometries: the target
//! metric ĝ, potential V̂ and dissipation ĉ built from the generators
//! `mu1`, `h`, `w` and the dissipation gains.
//!
//! All quantities are expressed through the linkage angle `alpha(theta)`.
//! The single integrals (psi exponent, `∫psi`, the ĝ11 integral) and the
//! nested V̂ integral are evaluated by adaptive Gauss–Kronrod quadrature;
//! their derivatives come from the fundamental theorem of calculus and the
//! chain rule through `alpha(theta)` and `y(s, theta)`.

mod matching;

pub use matching::{
    matching_residuals, matching_residuals_for, MatchingResiduals, PlantAsTarget, ScaledGhat11,
    TargetGeometry,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{self, Linkage, Metric2, PlantParams, State};
use crate::poly::Poly;
use crate::quad::{integrate, Tolerance};

/// Below this |s| (or |alpha'|) ĝ12 and ĝ22 are assembled from the forms in
/// which the 1/s growth of mu and sigma has been cancelled by hand.
pub const S_TOL: f64 = 1e-3;

const QUAD_TOL: Tolerance = Tolerance::new(1e-14, 1e-13);

/// Free functions selecting one member of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// `mu1(alpha)`; must have `mu1' > 0` on the reachable alpha interval.
    pub mu1: Poly,
    /// `h(y)`; must be positive on the reachable y interval.
    pub h: Poly,
    /// `w(y)`; `w'(0) = 0` makes `(s0, 0)` an equilibrium.
    pub w: Poly,
    /// Target ball position.
    pub s0: f64,
    /// `(k1, k2)` in `c2 = k1 s_dot + k2 theta_dot`.
    pub chat_gains: [f64; 2],
}

/// A complete closed-loop design: plant plus generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub plant: PlantParams,
    pub gen: GeneratorSpec,
}

impl FamilySpec {
    pub fn new(plant: PlantParams, gen: GeneratorSpec) -> Self {
        Self { plant, gen }
    }

    /// Equilibrium state `(s0, 0, 0, 0)`.
    pub fn equilibrium(&self) -> State {
        State::at_rest(self.gen.s0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        let g = &self.gen;
        for (name, p) in [("mu1", &g.mu1), ("h", &g.h), ("w", &g.w)] {
            if !p.is_finite() {
                return Err(Error::GeneratorInvariant(format!("{name} has non-finite coefficients")));
            }
        }
        if !g.s0.is_finite() || g.s0.abs() >= self.plant.s_max {
            return Err(Error::GeneratorInvariant(format!(
                "s0 = {} must satisfy |s0| < s_max = {}",
                g.s0, self.plant.s_max
            )));
        }
        if !g.chat_gains.iter().all(|k| k.is_finite()) {
            return Err(Error::GeneratorInvariant("chat_gains must be finite".into()));
        }

        let a_max = self.plant.alpha_max();
        let dmu1 = g.mu1.derivative();
        const N: usize = 400;
        for i in 0..=N {
            let a = -a_max + 2.0 * a_max * i as f64 / N as f64;
            let d = dmu1.eval(a);
            if !(d > 0.0) {
                return Err(Error::GeneratorInvariant(format!(
                    "mu1'({a:.6}) = {d:e} must be > 0 on [-{a_max:.6}, {a_max:.6}]"
                )));
            }
        }

        let (y_lo, y_hi) = self.y_range()?;
        for i in 0..=200 {
            let y = y_lo + (y_hi - y_lo) * i as f64 / 200.0;
            let v = g.h.eval(y);
            if !(v > 0.0) {
                return Err(Error::GeneratorInvariant(format!(
                    "h({y:.6}) = {v:e} must be > 0 on the reachable y interval [{y_lo:.6}, {y_hi:.6}]"
                )));
            }
        }
        Ok(())
    }

    /// Range of `y(s, theta)` over `|s| <= s_max` and the reachable alpha
    /// interval (sampled).
    fn y_range(&self) -> Result<(f64, f64)> {
        let k = Kernel::new(&self.gen);
        let a_max = self.plant.alpha_max();
        let s_max = self.plant.s_max;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=8 {
            let a = -a_max + 2.0 * a_max * i as f64 / 8.0;
            let psi = k.psi(a)?;
            let big_psi = k.psi_integral(a)?;
            for &s in &[-s_max, s_max] {
                let y = psi * s - self.gen.s0 + big_psi;
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        Ok((lo, hi))
    }
}

/// Full geometric data of the target system at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryAt {
    pub ghat: Metric2,
    pub vhat: f64,
    /// `(dV̂/ds, dV̂/dtheta)`.
    pub dvhat: [f64; 2],
    /// `[d/ds ĝ, d/dtheta ĝ]`.
    pub ghat_grad: [Metric2; 2],
    /// `lambda = ĝ^{-1} g`, row-major.
    pub lambda: [[f64; 2]; 2],
    pub mu: f64,
    pub sigma: f64,
    pub psi: f64,
    pub y: f64,
}

/// Generator polynomials and the alpha-integrals built from them.
struct Kernel<'a> {
    gen: &'a GeneratorSpec,
    dmu1: Poly,
    ddmu1: Poly,
}

impl<'a> Kernel<'a> {
    fn new(gen: &'a GeneratorSpec) -> Self {
        let dmu1 = gen.mu1.derivative();
        let ddmu1 = dmu1.derivative();
        Self { gen, dmu1, ddmu1 }
    }

    fn mu1_prime(&self, a: f64) -> Result<f64> {
        let d = self.dmu1.eval(a);
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::GeneratorInvariant(format!("mu1'({a}) = {d:e} is not positive")))
        }
    }

    /// `∫_0^a mu1/mu1'`.
    fn exponent(&self, a: f64) -> Result<f64> {
        integrate(|k| Ok(self.gen.mu1.eval(k) / self.mu1_prime(k)?), 0.0, a, QUAD_TOL)
    }

    fn psi(&self, a: f64) -> Result<f64> {
        Ok((-5.0 * self.exponent(a)?).exp())
    }

    /// `∫_0^a psi`.
    fn psi_integral(&self, a: f64) -> Result<f64> {
        integrate(|t| self.psi(t), 0.0, a, QUAD_TOL)
    }

    /// `∫_0^a dphi / (mu1' psi^2)`.
    fn metric_integral(&self, a: f64) -> Result<f64> {
        integrate(
            |p| {
                let psi = self.psi(p)?;
                Ok(1.0 / (self.mu1_prime(p)? * psi * psi))
            },
            0.0,
            a,
            QUAD_TOL,
        )
    }

    /// `∫_0^a sin / (mu1' psi)`.
    fn potential_integral(&self, a: f64) -> Result<f64> {
        integrate(|p| Ok(p.sin() / (self.mu1_prime(p)? * self.psi(p)?)), 0.0, a, QUAD_TOL)
    }

    /// `∫_0^a sin(phi) / (mu1' psi) ∫_0^phi psi`.
    fn potential_double_integral(&self, a: f64) -> Result<f64> {
        integrate(
            |p| Ok(p.sin() / (self.mu1_prime(p)? * self.psi(p)?) * self.psi_integral(p)?),
            0.0,
            a,
            QUAD_TOL,
        )
    }
}

/// Quantities shared by every evaluation at `(s, theta)`.
struct Base {
    link: Linkage,
    mu1: f64,
    mu1_p: f64,
    mu1_pp: f64,
    psi: f64,
    /// dpsi/dalpha
    psi_a: f64,
    y: f64,
    /// dy/dalpha at fixed s
    y_a: f64,
}

impl Base {
    fn new(k: &Kernel<'_>, s: f64, theta: f64, plant: &PlantParams) -> Result<Self> {
        let link = plant::alpha(theta, plant)?;
        let a = link.alpha;
        let mu1 = k.gen.mu1.eval(a);
        let mu1_p = k.mu1_prime(a)?;
        let psi = k.psi(a)?;
        let psi_a = -5.0 * mu1 / mu1_p * psi;
        let psi_int = k.psi_integral(a)?;
        Ok(Self {
            link,
            mu1,
            mu1_p,
            mu1_pp: k.ddmu1.eval(a),
            psi,
            psi_a,
            y: psi * s - k.gen.s0 + psi_int,
            y_a: psi_a * s + psi,
        })
    }
}

/// `psi(alpha) = exp(-5 ∫_0^alpha mu1/mu1')`.
pub fn psi(alpha: f64, gen: &GeneratorSpec) -> Result<f64> {
    Kernel::new(gen).psi(alpha)
}

/// Coordinate `y = psi(alpha) s - s0 + ∫_0^alpha psi`.
pub fn y_coord(s: f64, theta: f64, gen: &GeneratorSpec, params: &PlantParams) -> Result<f64> {
    let k = Kernel::new(gen);
    let a = plant::alpha(theta, params)?.alpha;
    Ok(k.psi(a)? * s - gen.s0 + k.psi_integral(a)?)
}

/// Components `(mu, sigma)` of `lambda d/ds = sigma d/ds + mu d/dtheta`.
pub fn mu_sigma(s: f64, theta: f64, gen: &GeneratorSpec, params: &PlantParams) -> Result<(f64, f64)> {
    let l = plant::alpha(theta, params)?;
    if s == 0.0 || l.alpha_p == 0.0 {
        return Err(Error::Singular { s, theta, reason: "mu and sigma diverge at s = 0 or alpha' = 0" });
    }
    let mu1 = gen.mu1.eval(l.alpha);
    let mu1_p = gen.mu1.derivative().eval(l.alpha);
    Ok((mu1_p / (5.0 * s * l.alpha_p), mu1 - mu1_p / (5.0 * s)))
}

/// ĝ and its exact partials.
fn metric_parts(k: &Kernel<'_>, b: &Base, s: f64) -> Result<(Metric2, [Metric2; 2])> {
    let a = b.link.alpha;
    let ap = b.link.alpha_p;
    let app = b.link.alpha_pp;
    let dh = k.gen.h.derivative();

    let j = k.metric_integral(a)?;
    let j_a = 1.0 / (b.mu1_p * b.psi * b.psi);
    let inner = k.gen.h.eval(b.y) + 10.0 * j;
    let h_y = dh.eval(b.y);
    let psi2 = b.psi * b.psi;

    let g11 = psi2 * inner;
    let g11_s = psi2 * h_y * b.psi;
    let g11_t = ap * (2.0 * b.psi * b.psi_a * inner + psi2 * (h_y * b.y_a + 10.0 * j_a));

    // kk = 1/mu = 5 s alpha' / mu1'
    let kk = 5.0 * s * ap / b.mu1_p;
    let kk_s = 5.0 * ap / b.mu1_p;
    let kk_t = 5.0 * s * (app * b.mu1_p - ap * ap * b.mu1_pp) / (b.mu1_p * b.mu1_p);
    let mu1_t = b.mu1_p * ap;

    let (g12, g22) = if s.abs() < S_TOL || ap.abs() < S_TOL {
        let g12 = ap * g11 + kk * (1.0 - b.mu1 * g11);
        (g12, ap * g12 + kk * (ap - b.mu1 * g12))
    } else {
        let mu = b.mu1_p / (5.0 * s * ap);
        let sigma = b.mu1 - b.mu1_p / (5.0 * s);
        let g12 = (1.0 - sigma * g11) / mu;
        (g12, (ap - sigma * g12) / mu)
    };

    let g12_s = ap * g11_s + kk_s * (1.0 - b.mu1 * g11) - kk * b.mu1 * g11_s;
    let g12_t = app * g11 + ap * g11_t + kk_t * (1.0 - b.mu1 * g11)
        - kk * (mu1_t * g11 + b.mu1 * g11_t);
    let g22_s = ap * g12_s + kk_s * (ap - b.mu1 * g12) - kk * b.mu1 * g12_s;
    let g22_t = app * g12 + ap * g12_t + kk_t * (ap - b.mu1 * g12)
        + kk * (app - mu1_t * g12 - b.mu1 * g12_t);

    Ok((
        Metric2::new(g11, g12, g22),
        [Metric2::new(g11_s, g12_s, g22_s), Metric2::new(g11_t, g12_t, g22_t)],
    ))
}

/// Gradient of V̂ given the single potential integral.
fn potential_gradient(k: &Kernel<'_>, b: &Base, s: f64, i1: f64) -> [f64; 2] {
    let w_y = k.gen.w.derivative().eval(b.y);
    let common = w_y + 5.0 * i1;
    let v_a = common * b.y_a + 5.0 * s * b.link.alpha.sin() / b.mu1_p;
    [common * b.psi, b.link.alpha_p * v_a]
}

/// ĝ with its partials, without the potential.
pub fn ghat_with_partials(s: f64, theta: f64, spec: &FamilySpec) -> Result<(Metric2, [Metric2; 2])> {
    let k = Kernel::new(&spec.gen);
    let b = Base::new(&k, s, theta, &spec.plant)?;
    metric_parts(&k, &b, s)
}

/// Metric, its partials and `dV̂`: everything the control law needs.
pub(crate) fn control_geometry(
    s: f64,
    theta: f64,
    spec: &FamilySpec,
) -> Result<(Metric2, [Metric2; 2], [f64; 2])> {
    let k = Kernel::new(&spec.gen);
    let b = Base::new(&k, s, theta, &spec.plant)?;
    let (g, dg) = metric_parts(&k, &b, s)?;
    let i1 = k.potential_integral(b.link.alpha)?;
    Ok((g, dg, potential_gradient(&k, &b, s, i1)))
}

/// V̂ and its exact gradient.
pub fn vhat_at(s: f64, theta: f64, spec: &FamilySpec) -> Result<(f64, [f64; 2])> {
    let k = Kernel::new(&spec.gen);
    let b = Base::new(&k, s, theta, &spec.plant)?;
    let (v, i1) = vhat_value(&k, &b)?;
    Ok((v, potential_gradient(&k, &b, s, i1)))
}

fn vhat_value(k: &Kernel<'_>, b: &Base) -> Result<(f64, f64)> {
    let a = b.link.alpha;
    let i1 = k.potential_integral(a)?;
    let i2 = k.potential_double_integral(a)?;
    Ok((k.gen.w.eval(b.y) + 5.0 * (b.y + k.gen.s0) * i1 - 5.0 * i2, i1))
}

/// Full target geometry at `(s, theta)`.
pub fn ghat_at(s: f64, theta: f64, spec: &FamilySpec) -> Result<GeometryAt> {
    let k = Kernel::new(&spec.gen);
    let b = Base::new(&k, s, theta, &spec.plant)?;
    let (ghat, ghat_grad) = metric_parts(&k, &b, s)?;
    let inv = ghat.inverse().ok_or(Error::NonInvertibleMetric { det: ghat.det() })?;
    let (vhat, i1) = vhat_value(&k, &b)?;
    let dvhat = potential_gradient(&k, &b, s, i1);
    let (mu, sigma) = mu_sigma(s, theta, &spec.gen, &spec.plant)?;

    let g = plant::kinetic_metric(s, theta, &spec.plant)?.to_matrix();
    let gi = inv.to_matrix();
    let mut lambda = [[0.0; 2]; 2];
    for (i, row) in lambda.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = gi[i][0] * g[0][j] + gi[i][1] * g[1][j];
        }
    }
    Ok(GeometryAt { ghat, vhat, dvhat, ghat_grad, lambda, mu, sigma, psi: b.psi, y: b.y })
}

/// Target dissipation `(c1, c2)` with `c2 = k1 s_dot + k2 theta_dot` and
/// `c1 = -alpha' c2`.
pub fn chat(x: &State, spec: &FamilySpec) -> Result<[f64; 2]> {
    let ap = plant::alpha(x.theta, &spec.plant)?.alpha_p;
    let [k1, k2] = spec.gen.chat_gains;
    let c2 = k1 * x.s_dot + k2 * x.theta_dot;
    Ok([-ap * c2, c2])
}

/// Jacobian of ĉ with respect to `(s_dot, theta_dot)` (exact for the linear
/// dissipation family).
pub fn chat_jacobian(theta: f64, spec: &FamilySpec) -> Result<[[f64; 2]; 2]> {
    let ap = plant::alpha(theta, &spec.plant)?.alpha_p;
    let [k1, k2] = spec.gen.chat_gains;
    Ok([[-ap * k1, -ap * k2], [k1, k2]])
}

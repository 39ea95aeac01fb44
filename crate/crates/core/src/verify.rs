//! Residual suites behind the `verify` command: matching conditions on a
//! grid, the dissipation identity along a trajectory, and exact derivatives
//! against central differences.

use crate::config::VerifyBlock;
use crate::controller::{christoffel_ghat, ControlLaw};
use crate::error::Result;
use crate::family::{self, matching_residuals_for, FamilySpec, ScaledGhat11};
use crate::plant::{self, Christoffel, Metric2, State};
use crate::sim::{self, SimConfig};

const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub max: f64,
    pub tol: f64,
    /// Where the maximum occurred.
    pub worst: String,
}

impl Check {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, max: 0.0, tol, worst: String::from("-") }
    }

    /// NaN (a failed evaluation) counts as an infinite residual.
    fn record(&mut self, value: f64, at: impl FnOnce() -> String) {
        let v = if value.is_nan() { f64::INFINITY } else { value };
        if v > self.max {
            self.max = v;
            self.worst = at();
        }
    }

    pub fn passed(&self) -> bool {
        self.max < self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

fn at(s: f64, theta: f64) -> String {
    format!("s={s:.6}, theta={theta:.6}")
}

/// Van der Corput radical inverse, for reproducible scattered points.
fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Condition number above which ĝ counts as numerically singular; the
/// difference quotients lose all accuracy past this point.
pub const MAX_COND: f64 = 1e4;

fn ghat_cond(spec: &FamilySpec, s: f64, th: f64) -> f64 {
    match family::ghat_with_partials(s, th, spec) {
        Ok((g, _)) => {
            let half_tr = 0.5 * g.trace();
            let disc = (half_tr * half_tr - g.det()).sqrt();
            let (a, b) = ((half_tr + disc).abs(), (half_tr - disc).abs());
            a.max(b) / a.min(b)
        }
        Err(_) => f64::INFINITY,
    }
}

/// Up to `n` scattered points with `0.1 s_max <= |s| <= 0.9 s_max`,
/// `|theta| <= 1` and well-conditioned ĝ.
pub fn sample_points(n: usize, spec: &FamilySpec) -> Vec<(f64, f64)> {
    let s_max = spec.plant.s_max;
    (1..=100 * n)
        .map(|i| {
            let sign = if halton(i, 5) < 0.5 { -1.0 } else { 1.0 };
            (sign * s_max * (0.1 + 0.8 * halton(i, 2)), -1.0 + 2.0 * halton(i, 3))
        })
        .filter(|&(s, th)| ghat_cond(spec, s, th) <= MAX_COND)
        .take(n)
        .collect()
}

pub fn run(spec: &FamilySpec, block: &VerifyBlock, sim_cfg: &SimConfig) -> VerifyReport {
    let mut checks = matching_checks(spec, block);
    checks.push(dissipation_check(spec, block, sim_cfg));
    checks.extend(derivative_checks(spec, block));
    VerifyReport { checks }
}

fn matching_checks(spec: &FamilySpec, block: &VerifyBlock) -> Vec<Check> {
    let tol = block.matching_tol;
    let mut checks = [
        Check::new("matching_r3", tol),
        Check::new("matching_r4_V", tol),
        Check::new("matching_r5_lambda", tol),
        Check::new("matching_r5_lie", tol),
    ];
    let target = ScaledGhat11 { inner: spec, factor: block.ghat11_scale };
    let n = block.grid;
    for i in 0..n {
        let s = block.s_range[0] + (block.s_range[1] - block.s_range[0]) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let th = block.theta_range[0]
                + (block.theta_range[1] - block.theta_range[0]) * j as f64 / (n - 1) as f64;
            let r = matching_residuals_for(&target, s, th)
                .map(|r| r.as_array())
                .unwrap_or([f64::NAN; 4]);
            for (c, v) in checks.iter_mut().zip(r) {
                c.record(v, || at(s, th));
            }
        }
    }
    checks.to_vec()
}

fn dissipation_check(spec: &FamilySpec, block: &VerifyBlock, sim_cfg: &SimConfig) -> Check {
    let mut check = Check::new("dissipation_identity", block.dissipation_tol);
    let s0 = spec.gen.s0;
    let ds = 0.1f64.min(0.5 * (spec.plant.s_max - s0.abs()));
    let x0 = State::new(s0 + ds, 0.05, 0.0, 0.0);
    let cfg = SimConfig {
        t_final: block.dissipation_t_final,
        dt: block.dissipation_dt,
        integrator_tol: sim_cfg.integrator_tol,
        stop_on_beam_exit: true,
    };
    let traj = sim::simulate(x0, spec, &cfg, &ControlLaw::NonlinearFamily);
    for s in &traj.samples {
        let r = sim::dissipation_rate(&s.state, spec)
            .map(|d| (s.h_hat_rate + d).abs())
            .unwrap_or(f64::NAN);
        check.record(r, || format!("t={:.6}", s.t));
    }
    if traj.samples.len() < 2 {
        check.record(f64::NAN, || format!("termination={}", traj.termination.as_str()));
    }
    check
}

fn rel_err(exact: f64, approx: f64) -> f64 {
    (exact - approx).abs() / exact.abs().max(1.0)
}

fn metric_diff(exact: &Metric2, a: &Metric2) -> f64 {
    [(exact.g11, a.g11), (exact.g12, a.g12), (exact.g22, a.g22)]
        .iter()
        .map(|&(e, v)| rel_err(e, v))
        .fold(0.0, f64::max)
}

fn fd_partials<F>(s: f64, th: f64, f: F) -> Result<[Metric2; 2]>
where
    F: Fn(f64, f64) -> Result<Metric2>,
{
    let h = FD_STEP;
    let d = |p: Metric2, m: Metric2| {
        Metric2::new((p.g11 - m.g11) / (2.0 * h), (p.g12 - m.g12) / (2.0 * h), (p.g22 - m.g22) / (2.0 * h))
    };
    Ok([d(f(s + h, th)?, f(s - h, th)?), d(f(s, th + h)?, f(s, th - h)?)])
}

fn christoffel_diff(exact: &Christoffel, approx: &Christoffel) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max(rel_err(exact.get(k, i, j), approx.get(k, i, j)));
            }
        }
    }
    worst
}

fn derivative_checks(spec: &FamilySpec, block: &VerifyBlock) -> Vec<Check> {
    let tol = block.derivative_tol;
    let p = &spec.plant;
    let h = FD_STEP;
    let mut alpha = Check::new("deriv_alpha_chain", tol);
    let mut dvhat = Check::new("deriv_dVhat", tol);
    let mut dghat = Check::new("deriv_ghat", tol);
    let mut chr_g = Check::new("christoffel_g", tol);
    let mut chr_gh = Check::new("christoffel_ghat", tol);

    for (s, th) in sample_points(block.derivative_points, spec) {
        let r: Result<f64> = (|| {
            let l = plant::alpha(th, p)?;
            let (lp, lm) = (plant::alpha(th + h, p)?, plant::alpha(th - h, p)?);
            Ok(rel_err(l.alpha_p, (lp.alpha - lm.alpha) / (2.0 * h))
                .max(rel_err(l.alpha_pp, (lp.alpha_p - lm.alpha_p) / (2.0 * h))))
        })();
        alpha.record(r.unwrap_or(f64::NAN), || at(s, th));

        let r: Result<f64> = (|| {
            let (_, d) = family::vhat_at(s, th, spec)?;
            let v = |a: f64, b: f64| family::vhat_at(a, b, spec).map(|x| x.0);
            let fs = (v(s + h, th)? - v(s - h, th)?) / (2.0 * h);
            let ft = (v(s, th + h)? - v(s, th - h)?) / (2.0 * h);
            Ok(rel_err(d[0], fs).max(rel_err(d[1], ft)))
        })();
        dvhat.record(r.unwrap_or(f64::NAN), || at(s, th));

        let r: Result<(f64, f64)> = (|| {
            let ghat = |a: f64, b: f64| family::ghat_with_partials(a, b, spec).map(|x| x.0);
            let (gh, dgh) = family::ghat_with_partials(s, th, spec)?;
            let fd = fd_partials(s, th, ghat)?;
            let d = metric_diff(&dgh[0], &fd[0]).max(metric_diff(&dgh[1], &fd[1]));
            let c = christoffel_diff(&christoffel_ghat(s, th, spec)?, &Christoffel::from_metric(&gh, &fd)?);
            Ok((d, c))
        })();
        let (d, c) = r.unwrap_or((f64::NAN, f64::NAN));
        dghat.record(d, || at(s, th));
        chr_gh.record(c, || at(s, th));

        let r: Result<f64> = (|| {
            let g = plant::kinetic_metric(s, th, p)?;
            let fd = fd_partials(s, th, |a, b| plant::kinetic_metric(a, b, p))?;
            Ok(christoffel_diff(&plant::christoffel_g(s, th, p)?, &Christoffel::from_metric(&g, &fd)?))
        })();
        chr_g.record(r.unwrap_or(f64::NAN), || at(s, th));
    }
    vec![alpha, dvhat, dghat, chr_g, chr_gh]
}

//! Oracles shared by the integration tests. Nothing here calls into the
//! library's own quadrature, root finding or linearization.

#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

use ballbeam::analysis::LinearGains;
use ballbeam::{FamilySpec, GeneratorSpec, PlantParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

pub fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

pub fn dpoly(c: &[f64], x: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &v)| acc * x + k as f64 * v)
}

/// Complex number as `(re, im)`.
pub type C = (f64, f64);

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: C, b: C) -> C {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

/// Roots of the monic polynomial with coefficients `c` (constant first,
/// leading 1 omitted) by Durand-Kerner iteration.
pub fn durand_kerner(c: &[f64]) -> Vec<C> {
    let n = c.len();
    let eval = |z: C| {
        let mut p: C = (1.0, 0.0);
        for &ck in c.iter().rev() {
            p = cmul(p, z);
            p.0 += ck;
        }
        p
    };
    let mut z: Vec<C> = (0..n)
        .map(|k| {
            let mut w: C = (1.0, 0.0);
            for _ in 0..k {
                w = cmul(w, (0.4, 0.9));
            }
            w
        })
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let mut den: C = (1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den = cmul(den, (z[i].0 - z[j].0, z[i].1 - z[j].1));
                }
            }
            let d = cdiv(eval(z[i]), den);
            z[i] = (z[i].0 - d.0, z[i].1 - d.1);
            moved = moved.max(d.0.hypot(d.1));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    z
}

/// Monic polynomial coefficients (constant first, leading 1 omitted) with
/// the given roots; complex roots must come in conjugate pairs.
pub fn monic_from_roots(roots: &[C]) -> Vec<f64> {
    let mut c: Vec<C> = vec![(1.0, 0.0)];
    for &r in roots {
        let mut n = vec![(0.0, 0.0); c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            let t = cmul(ci, (-r.0, -r.1));
            n[i] = (n[i].0 + t.0, n[i].1 + t.1);
            n[i + 1] = (n[i + 1].0 + ci.0, n[i + 1].1 + ci.1);
        }
        c = n;
    }
    c.pop();
    c.into_iter().map(|z| z.0).collect()
}

/// Gains of the linear law placing the closed-loop poles at `roots`.
///
/// From the hand-derived characteristic polynomial of the plant linearized
/// at `(s0, 0)` under linear feedback:
/// `D s^4 + (a7 - Kad + rho Kbd) s^3 + (rho Kbp - Kap - 2 rho^2) s^2
///  + rho Kbd s + rho (Kbp - rho)`, with `D = det g(s0, 0)`.
pub fn pole_placement(p: &PlantParams, s0: f64, roots: &[C]) -> LinearGains {
    let rho = p.rho;
    let d = p.a4 + (p.a3 + 2.5 * s0 * s0) * rho * rho - rho * rho;
    let c = monic_from_roots(roots);
    let kbp = rho + d * c[0] / rho;
    let kbd = d * c[1] / rho;
    let kap = rho * kbp - 2.0 * rho * rho - d * c[2];
    let kad = p.a7 + rho * kbd - d * c[3];
    LinearGains { a8: p.a5 + (p.a6 + s0) * rho, kbp, kap, kbd, kad }
}

/// Largest distance between two root sets, pairing each root of `a` with
/// the nearest unused root of `b`.
pub fn root_distance(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x.0 - y.0).hypot(x.1 - y.1)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn template() -> FamilySpec {
    FamilySpec::new(
        PlantParams::default(),
        GeneratorSpec {
            mu1: vec![2.0, 1.0].into(),
            h: vec![1.0].into(),
            w: vec![0.0, 0.0, 1.0].into(),
            s0: 0.3,
            chat_gains: [0.0, 0.0],
        },
    )
}

/// The spec in configs/default.toml: fitted to poles -1, -1.5, -2, -2.5.
pub fn stabilizing_spec() -> FamilySpec {
    FamilySpec::new(
        PlantParams::default(),
        GeneratorSpec {
            mu1: vec![2.0, 1.3344928097538982].into(),
            h: vec![1.0].into(),
            w: vec![0.0, 0.0, 4.21508453172572].into(),
            s0: 0.3,
            chat_gains: [-77.00000000000291, -12.249999999950612],
        },
    )
}

/// A random valid spec with nonzero `mu1(0)`, cubic terms and `w'(0) = 0`.
pub fn random_spec<R: Rng>(rng: &mut R) -> FamilySpec {
    loop {
        let plant = PlantParams {
            a3: rng.gen_range(1.0..2.0),
            a4: rng.gen_range(1.0..3.0),
            a5: rng.gen_range(0.5..1.5),
            a6: rng.gen_range(0.0..0.2),
            a7: rng.gen_range(0.0..0.1),
            rho: rng.gen_range(0.1..0.5),
            s_max: 1.0,
        };
        let gen = GeneratorSpec {
            mu1: vec![rng.gen_range(-1.0..3.0), rng.gen_range(0.5..2.0), rng.gen_range(-0.3..0.3), rng.gen_range(0.0..0.5)]
                .into(),
            h: vec![rng.gen_range(0.8..1.5), rng.gen_range(-0.2..0.2), rng.gen_range(0.0..0.3)].into(),
            w: vec![0.0, 0.0, rng.gen_range(0.5..4.0), rng.gen_range(-0.3..0.3)].into(),
            s0: rng.gen_range(0.15..0.6),
            chat_gains: [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        };
        let spec = FamilySpec::new(plant, gen);
        if spec.validate().is_ok() {
            return spec;
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Condition number above which ĝ counts as numerically singular.
pub const MAX_COND: f64 = 1e4;

/// Spectral condition number of the symmetric ĝ at `(s, theta)`.
pub fn ghat_cond(spec: &FamilySpec, s: f64, th: f64) -> f64 {
    match ballbeam::family::ghat_with_partials(s, th, spec) {
        Ok((g, _)) => {
            let half_tr = 0.5 * g.trace();
            let disc = (half_tr * half_tr - g.det()).sqrt();
            let (a, b) = ((half_tr + disc).abs(), (half_tr - disc).abs());
            a.max(b) / a.min(b)
        }
        Err(_) => f64::INFINITY,
    }
}

/// Random configuration with `0.1 <= |s| <= 0.9` and `cond(ĝ) <= MAX_COND`.
pub fn random_point<R: Rng>(rng: &mut R, spec: &FamilySpec) -> (f64, f64) {
    loop {
        let s = rng.gen_range(0.1..0.9) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let th = rng.gen_range(-1.2..1.2);
        if ghat_cond(spec, s, th) <= MAX_COND {
            return (s, th);
        }
    }
}

/// Worst relative disagreement between exact derivatives and central
/// differences, per family: alpha chain, dV̂, dĝ, dg, Christoffel of g,
/// Christoffel of ĝ.
pub fn derivative_errors(spec: &FamilySpec, s: f64, th: f64) -> [f64; 6] {
    use ballbeam::controller::christoffel_ghat;
    use ballbeam::family;
    use ballbeam::plant::{self, Metric2};

    const H: f64 = 1e-5;
    let p = &spec.plant;
    let mdiff = |a: &Metric2, b: &Metric2| rel(b.g11, a.g11).max(rel(b.g12, a.g12)).max(rel(b.g22, a.g22));
    let fd_metric = |f: &dyn Fn(f64, f64) -> Metric2| -> [Metric2; 2] {
        let d = |pp: Metric2, mm: Metric2| {
            Metric2::new((pp.g11 - mm.g11) / (2.0 * H), (pp.g12 - mm.g12) / (2.0 * H), (pp.g22 - mm.g22) / (2.0 * H))
        };
        [d(f(s + H, th), f(s - H, th)), d(f(s, th + H), f(s, th - H))]
    };
    // Christoffel symbols of the first kind contracted back with the metric,
    // Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij), from partials.
    let christoffel = |g: &Metric2, dg: &[Metric2; 2]| -> [[[f64; 2]; 2]; 2] {
        let gm = |m: &Metric2, a: usize, b: usize| m.to_matrix()[a][b];
        let inv = g.inverse().unwrap().to_matrix();
        let mut out = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[k][i][j] = (0..2)
                        .map(|l| 0.5 * inv[k][l] * (gm(&dg[i], l, j) + gm(&dg[j], l, i) - gm(&dg[l], i, j)))
                        .sum();
                }
            }
        }
        out
    };
    let chr_diff = |exact: &plant::Christoffel, approx: &[[[f64; 2]; 2]; 2]| {
        let mut worst = 0.0f64;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max(rel(approx[k][i][j], exact.get(k, i, j)));
                }
            }
        }
        worst
    };

    let l = plant::alpha(th, p).unwrap();
    let (lp, lm) = (plant::alpha(th + H, p).unwrap(), plant::alpha(th - H, p).unwrap());
    let e_alpha = rel((lp.alpha - lm.alpha) / (2.0 * H), l.alpha_p).max(rel((lp.alpha_p - lm.alpha_p) / (2.0 * H), l.alpha_pp));

    let v = |a: f64, b: f64| family::vhat_at(a, b, spec).unwrap().0;
    let (_, dv) = family::vhat_at(s, th, spec).unwrap();
    let e_dv = rel((v(s + H, th) - v(s - H, th)) / (2.0 * H), dv[0]).max(rel((v(s, th + H) - v(s, th - H)) / (2.0 * H), dv[1]));

    let (gh, dgh) = family::ghat_with_partials(s, th, spec).unwrap();
    let fd_gh = fd_metric(&|a, b| family::ghat_with_partials(a, b, spec).unwrap().0);
    let e_dgh = mdiff(&fd_gh[0], &dgh[0]).max(mdiff(&fd_gh[1], &dgh[1]));

    let (g, dg) = plant::kinetic_metric_with_partials(s, th, p).unwrap();
    let fd_g = fd_metric(&|a, b| plant::kinetic_metric(a, b, p).unwrap());
    let e_dg = mdiff(&fd_g[0], &dg[0]).max(mdiff(&fd_g[1], &dg[1]));

    let e_chr_g = chr_diff(&plant::christoffel_g(s, th, p).unwrap(), &christoffel(&g, &fd_g));
    let e_chr_gh = chr_diff(&christoffel_ghat(s, th, spec).unwrap(), &christoffel(&gh, &fd_gh));
    [e_alpha, e_dv, e_dgh, e_dg, e_chr_g, e_chr_gh]
}

//! Dormand–Prince 5(4) with step-size control and continuous output.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Continuous extension (Hairer & Wanner, dopri5 dense output).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub h_min: f64,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, max_steps: 2_000_000, h_min: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError<E> {
    Rhs(E),
    StepSizeUnderflow { t: f64 },
    NonFinite { t: f64 },
    TooManySteps { t: f64 },
}

/// What the sample callback wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

struct Step<const N: usize> {
    y_new: [f64; N],
    k7: [f64; N],
    err: f64,
    dense: [[f64; N]; 5],
}

fn try_step<const N: usize, F, E>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    opts: &OdeOptions,
) -> Result<Step<N>, E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let k2 = f(t + C2 * h, &axpy(y, &[(h * A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, &[(h * A31, k1), (h * A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]))?;
    let k5 = f(
        t + C5 * h,
        &axpy(y, &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
    )?;
    let k6 = f(
        t + h,
        &axpy(y, &[(h * A61, k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)]),
    )?;
    let y_new = axpy(
        y,
        &[(h * A71, k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)],
    );
    let k7 = f(t + h, &y_new)?;

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        sum += (e / sc) * (e / sc);
    }
    let err = (sum / N as f64).sqrt();

    let mut dense = [[0.0; N]; 5];
    for i in 0..N {
        let dy = y_new[i] - y[i];
        let bspl = h * k1[i] - dy;
        dense[0][i] = y[i];
        dense[1][i] = dy;
        dense[2][i] = bspl;
        dense[3][i] = dy - h * k7[i] - bspl;
        dense[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(Step { y_new, k7, err, dense })
}

fn interpolate<const N: usize>(dense: &[[f64; N]; 5], theta: f64) -> [f64; N] {
    let theta1 = 1.0 - theta;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = dense[0][i]
            + theta
                * (dense[1][i]
                    + theta1 * (dense[2][i] + theta * (dense[3][i] + theta1 * dense[4][i])));
    }
    out
}

/// Integrate from `t = 0` and report the solution at `t_k = k * dt` for
/// `k = 0..=n_samples` through `on_sample`. Returns the number of samples
/// delivered.
pub fn integrate_sampled<const N: usize, F, E, S>(
    mut f: F,
    y0: [f64; N],
    dt: f64,
    n_samples: usize,
    opts: &OdeOptions,
    mut on_sample: S,
) -> Result<usize, OdeError<E>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
    S: FnMut(usize, f64, &[f64; N]) -> Flow,
{
    if on_sample(0, 0.0, &y0) == Flow::Stop {
        return Ok(1);
    }
    if n_samples == 0 {
        return Ok(1);
    }
    let t_end = n_samples as f64 * dt;
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(t, &y).map_err(OdeError::Rhs)?;
    let mut next = 1usize;

    let mut h = initial_step(&y, &k1, opts).min(t_end);
    let mut steps = 0usize;
    let mut rejected_last = false;

    while next <= n_samples {
        if steps >= opts.max_steps {
            return Err(OdeError::TooManySteps { t });
        }
        if h < opts.h_min {
            return Err(OdeError::StepSizeUnderflow { t });
        }
        h = h.min(t_end - t);
        steps += 1;
        let step = try_step(&mut f, t, &y, &k1, h, opts).map_err(OdeError::Rhs)?;
        if !step.err.is_finite() || !step.y_new.iter().all(|v| v.is_finite()) {
            if h <= opts.h_min {
                return Err(OdeError::NonFinite { t });
            }
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        if step.err > 1.0 {
            h *= (0.9 * step.err.powf(-0.2)).max(0.2);
            rejected_last = true;
            continue;
        }

        let t_new = if h >= t_end - t { t_end } else { t + h };
        while next <= n_samples {
            let ts = next as f64 * dt;
            if ts > t_new {
                break;
            }
            let ys = if ts == t_new {
                step.y_new
            } else {
                interpolate(&step.dense, ((ts - t) / h).clamp(0.0, 1.0))
            };
            let flow = on_sample(next, ts, &ys);
            next += 1;
            if flow == Flow::Stop {
                return Ok(next);
            }
        }

        t = t_new;
        y = step.y_new;
        k1 = step.k7;
        let growth = if step.err == 0.0 { 5.0 } else { (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= if rejected_last { growth.min(1.0) } else { growth };
        rejected_last = false;
    }
    Ok(next)
}

fn initial_step<const N: usize>(y: &[f64; N], f0: &[f64; N], opts: &OdeOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-6, 0.1)
}

/// Fixed-step integration with the 5th-order weights (no error control).
pub fn integrate_fixed<const N: usize, F, E>(
    mut f: F,
    y0: [f64; N],
    t_end: f64,
    n_steps: usize,
) -> Result<[f64; N], E>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], E>,
{
    let h = t_end / n_steps as f64;
    let opts = OdeOptions::with_tol(1.0);
    let mut y = y0;
    let mut k1 = f(0.0, &y)?;
    for n in 0..n_steps {
        let step = try_step(&mut f, n as f64 * h, &y, &k1, h, &opts)?;
        y = step.y_new;
        k1 = step.k7;
    }
    Ok(y)
}

//! Dormand–Prince 5(4) stepping with continuous output.
//!
//! Only the single-step kernel and a plain adaptive driver live here; the
//! barrier integrator runs its own loop so it can freeze the control branch
//! per step and localise events.

use crate::error::{BarrierError, Result};

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

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Absolute and relative local error tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-10, rel: 1e-9 }
    }
}

impl Tolerance {
    pub fn scaled(&self, k: f64) -> Self {
        Self { abs: self.abs * k, rel: self.rel * k }
    }
}

/// One attempted step together with its continuous extension.
#[derive(Debug, Clone, Copy)]
pub struct Step<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// Derivative at the end of the step (first stage of the next one).
    pub f1: [f64; N],
    /// Scaled RMS error estimate; the step is accepted when `≤ 1`.
    pub error: f64,
    cont: [[f64; N]; 4],
}

impl<const N: usize> Step<N> {
    /// State at `t0 + θ h`, `θ ∈ [0, 1]`, fifth-order accurate.
    pub fn interpolate(&self, theta: f64) -> [f64; N] {
        let s = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            let r2 = self.y1[i] - self.y0[i];
            out[i] = self.y0[i]
                + theta * (r2 + s * (self.cont[0][i] + theta * (self.cont[1][i] + s * self.cont[2][i])));
        }
        out
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn accepted(&self) -> bool {
        self.error <= 1.0
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Performs one Dormand–Prince step of size `h` from `(t0, y0)` with known
/// first-stage derivative `f0 = f(t0, y0)`.
pub fn dopri5_step<const N: usize, F>(f: &F, t0: f64, y0: &[f64; N], f0: &[f64; N], h: f64, tol: Tolerance) -> Step<N>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = *f0;
    let k2 = f(t0 + C2 * h, &axpy(y0, h, &[(A21, &k1)]));
    let k3 = f(t0 + C3 * h, &axpy(y0, h, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(t0 + C4 * h, &axpy(y0, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t0 + C5 * h, &axpy(y0, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t0 + h, &axpy(y0, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y1 = axpy(y0, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t0 + h, &y1);

    let mut sum = 0.0;
    let mut cont = [[0.0; N]; 4];
    for i in 0..N {
        let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = tol.abs + tol.rel * y0[i].abs().max(y1[i].abs());
        sum += (err / scale).powi(2);

        let r2 = y1[i] - y0[i];
        let r3 = h * k1[i] - r2;
        let r4 = r2 - h * k7[i] - r3;
        let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        cont[0][i] = r3;
        cont[1][i] = r4;
        cont[2][i] = r5;
    }
    let error = (sum / N as f64).sqrt();
    let error = if error.is_finite() { error } else { f64::INFINITY };
    Step { t0, h, y0: *y0, y1, f1: k7, error, cont }
}

/// Step-size factor after an attempt with scaled error `err`.
pub fn next_step_factor(err: f64) -> f64 {
    if err == 0.0 {
        return 5.0;
    }
    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
}

/// Initial step guess from the size of the derivative.
pub fn initial_step<const N: usize>(y0: &[f64; N], f0: &[f64; N], tol: Tolerance, h_max: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = tol.abs + tol.rel * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / N as f64).sqrt(), (d1 / N as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(h_max).max(1e-8)
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct DriverOptions {
    pub tol: Tolerance,
    pub h_max: f64,
    pub h_min: f64,
}

impl Default for DriverOptions {
    fn default() -> Self {
        Self { tol: Tolerance::default(), h_max: 0.05, h_min: 1e-14 }
    }
}

/// Adaptive integration of `y' = f(t, y)` over `[t0, t1]`.
///
/// `on_step` sees every accepted step and may return `false` to stop early.
/// Returns the final time and state.
pub fn integrate<const N: usize, F, S>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    opts: DriverOptions,
    mut on_step: S,
) -> Result<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(&Step<N>) -> bool,
{
    let mut t = t0;
    let mut y = y0;
    let mut fy = f(t, &y);
    let mut h = initial_step(&y, &fy, opts.tol, opts.h_max);
    while t < t1 {
        h = h.min(t1 - t).min(opts.h_max);
        let step = dopri5_step(&f, t, &y, &fy, h, opts.tol);
        if !step.accepted() {
            h *= next_step_factor(step.error).min(0.9);
            if h < opts.h_min {
                return Err(BarrierError::StepFailure { t, step: h });
            }
            continue;
        }
        let last = step.t1() >= t1;
        t = if last { t1 } else { step.t1() };
        y = step.y1;
        fy = step.f1;
        if !on_step(&step) {
            break;
        }
        h *= next_step_factor(step.error);
    }
    Ok((t, y))
}

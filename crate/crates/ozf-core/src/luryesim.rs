//! Time-domain simulation of the Lurye loop
//! `y1 = G u1`, `y2 = φ u2`, `u1 = r1 - y2`, `u2 = y1 + r2`
//! with dead time and saturation, plus the Nyquist gain of the plant.
//!
//! The plant state is integrated with fixed-step RK4; the dead time acts on
//! the output through a uniformly sampled history buffer with linear
//! interpolation, which keeps the state ODE delay-free.

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::xferfn::DelayedRational;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("improper transfer function: numerator degree {num_deg} exceeds denominator degree {den_deg}")]
    ImproperTransferFunction { num_deg: usize, den_deg: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("tail window too short: need at least {needed} samples, got {got}")]
    WindowTooShort { needed: usize, got: usize },
}

/// Strictly causal state-space realization with the dead time applied at the
/// output: `y(t) = C x(t - 0) + D u(t)` delayed by `delay` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceWithDelay {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
    pub delay: f64,
}

fn trim_leading_zeros(coeffs: &[f64]) -> &[f64] {
    let start = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len() - 1);
    &coeffs[start..]
}

/// Controllable canonical form of a proper transfer function.
pub fn realize(tf: &DelayedRational) -> Result<StateSpaceWithDelay, SimError> {
    let num = trim_leading_zeros(tf.num());
    let den = trim_leading_zeros(tf.den());
    let n = den.len() - 1;
    if num.len() > den.len() {
        return Err(SimError::ImproperTransferFunction {
            num_deg: num.len() - 1,
            den_deg: n,
        });
    }
    // Monic denominator; split off the direct term.
    let den_monic: Vec<f64> = den.iter().map(|c| c / den[0]).collect();
    let mut num_monic = vec![0.0; den.len()];
    let offset = den.len() - num.len();
    for (i, &c) in num.iter().enumerate() {
        num_monic[offset + i] = c / den[0];
    }
    let d = num_monic[0];
    // Strictly proper remainder r(s) = num(s) - d*den(s), degree < n.
    let rem: Vec<f64> = (1..den.len()).map(|i| num_monic[i] - d * den_monic[i]).collect();

    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        // Bottom row: -a0, -a1, ..., -a_{n-1} in ascending powers.
        a[(n - 1, j)] = -den_monic[n - j];
    }
    let mut b = DVector::zeros(n);
    if n > 0 {
        b[n - 1] = 1.0;
    }
    let mut c = DVector::zeros(n);
    for j in 0..n {
        // rem is descending of length n; ascending coefficient j is rem[n-1-j].
        c[j] = rem[n - 1 - j];
    }
    Ok(StateSpaceWithDelay { a, b, c, d, delay: tf.delay() })
}

impl StateSpaceWithDelay {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Frequency response `(C (jωI - A)^{-1} B + D)·e^{-jωτ}`.
    pub fn response(&self, omega: f64) -> Complex64 {
        let n = self.order();
        let rot = Complex64::from_polar(1.0, -omega * self.delay);
        if n == 0 {
            return Complex64::new(self.d, 0.0) * rot;
        }
        let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex::new(-self.a[(i, j)], if i == j { omega } else { 0.0 });
            }
        }
        let rhs = DVector::<Complex<f64>>::from_iterator(n, self.b.iter().map(|&v| Complex::new(v, 0.0)));
        let x = m.lu().solve(&rhs).expect("jwI - A is regular for stable A");
        let mut y = Complex::new(self.d, 0.0);
        for j in 0..n {
            y += Complex::new(self.c[j], 0.0) * x[j];
        }
        Complex64::new(y.re, y.im) * rot
    }
}

/// Static nonlinearity in the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `φ(u) = clamp(k·u, ±k·sat_level)`: slope `k` through the origin,
    /// saturating at `|u| = sat_level`.
    Saturation,
    /// `φ(u) = k·u`.
    None,
}

/// Closed-loop simulation setup.
#[derive(Debug, Clone)]
pub struct LuryeConfig {
    pub plant: StateSpaceWithDelay,
    /// Slope `k >= 0` of the nonlinearity.
    pub gain: f64,
    pub sat_level: f64,
    pub step_amplitude: f64,
    pub dt: f64,
    pub t_final: f64,
    pub nonlinearity: Nonlinearity,
}

impl LuryeConfig {
    fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.t_final > 0.0) {
            return Err(SimError::InvalidConfig("dt and t_final must be positive".into()));
        }
        if !(self.sat_level > 0.0) {
            return Err(SimError::InvalidConfig("sat_level must be positive".into()));
        }
        if self.gain < 0.0 {
            return Err(SimError::InvalidConfig("gain must be nonnegative".into()));
        }
        if self.plant.delay > 0.0 && self.dt > self.plant.delay / 10.0 {
            return Err(SimError::InvalidConfig(format!(
                "dt = {} must not exceed delay/10 = {}",
                self.dt,
                self.plant.delay / 10.0
            )));
        }
        Ok(())
    }
}

/// Simulated trajectory. `y1` is the (delayed) plant output, `u1` the plant
/// input; the `saturated` flags mark samples where the nonlinearity clipped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub y1: Vec<f64>,
    pub u1: Vec<f64>,
    pub saturated: Vec<bool>,
    /// Set when |y1| exceeded 1e6 and the run stopped early.
    pub diverged: bool,
    pub step_amplitude: f64,
    pub dt: f64,
}

const DIVERGENCE_LIMIT: f64 = 1e6;

/// Fixed-step RK4 with an output history buffer for the dead time. The loop
/// is closed with `u1(t) = r1(t) - φ(y1(t))`, `r1` a step at `t = 0`, `r2 = 0`.
pub fn simulate(config: &LuryeConfig) -> Result<SimTrace, SimError> {
    config.validate()?;
    let n_steps = (config.t_final / config.dt).round() as usize;
    let dim = config.plant.order();
    let (a, bvec, cvec, d) = (&config.plant.a, &config.plant.b, &config.plant.c, config.plant.d);
    let tau = config.plant.delay;
    let dt = config.dt;
    let k = config.gain;
    let clip = k * config.sat_level;

    let phi = |u: f64| -> f64 {
        let v = k * u;
        match config.nonlinearity {
            Nonlinearity::Saturation => v.clamp(-clip, clip),
            Nonlinearity::None => v,
        }
    };

    // Undelayed output samples at step times; the system is at rest for t < 0.
    let mut ybuf = vec![0.0f64; n_steps + 1];
    let interp = |buf: &[f64], filled: usize, tq: f64| -> f64 {
        let tp = tq - tau;
        if tp < 0.0 {
            return 0.0;
        }
        let pos = tp / dt;
        let i0 = (pos.floor() as usize).min(filled);
        let frac = pos - i0 as f64;
        let i1 = (i0 + 1).min(filled);
        buf[i0] * (1.0 - frac) + buf[i1] * frac
    };

    let mut x = DVector::<f64>::zeros(dim);
    let mut t_log = Vec::with_capacity(n_steps + 1);
    let mut y_log = Vec::with_capacity(n_steps + 1);
    let mut u_log = Vec::with_capacity(n_steps + 1);
    let mut sat_log = Vec::with_capacity(n_steps + 1);
    let mut diverged = false;

    // u1 at a query time; resolves the algebraic loop for tau = 0 plants.
    let u1_at = |x: &DVector<f64>, buf: &[f64], filled: usize, tq: f64| -> f64 {
        let r1 = config.step_amplitude; // step at t = 0; queries are at t >= 0
        if tau > 0.0 || dim == 0 {
            let y1 = if tau > 0.0 {
                interp(buf, filled, tq)
            } else {
                // delay-free, no state: y = d*u1; piecewise-linear solve below
                0.0
            };
            if tau > 0.0 {
                return r1 - phi(y1);
            }
        }
        // tau = 0: y1 = c'x + d*u1 is algebraic in u1.
        let cx = cvec.dot(x);
        if d == 0.0 {
            return r1 - phi(cx);
        }
        // Try the unsaturated branch first, then the two clipped branches.
        let lin = (r1 - k * cx) / (1.0 + k * d);
        if (k * (cx + d * lin)).abs() <= clip || config.nonlinearity == Nonlinearity::None {
            lin
        } else if k * (cx + d * lin) > clip {
            r1 - clip
        } else {
            r1 + clip
        }
    };

    let deriv = |x: &DVector<f64>, u: f64| -> DVector<f64> { a * x + bvec * u };

    let record =
        |i: usize,
         x: &DVector<f64>,
         buf: &mut [f64],
         t_log: &mut Vec<f64>,
         y_log: &mut Vec<f64>,
         u_log: &mut Vec<f64>,
         sat_log: &mut Vec<bool>| {
            let t = i as f64 * dt;
            let u1 = u1_at(x, buf, i, t);
            buf[i] = cvec.dot(x) + d * u1;
            let y1 = if tau > 0.0 { interp(buf, i, t) } else { buf[i] };
            t_log.push(t);
            y_log.push(y1);
            u_log.push(u1);
            let u2 = y1; // r2 = 0
            sat_log.push(
                config.nonlinearity == Nonlinearity::Saturation && (k * u2).abs() >= clip && u2 != 0.0,
            );
        };

    record(0, &x, &mut ybuf, &mut t_log, &mut y_log, &mut u_log, &mut sat_log);
    for i in 0..n_steps {
        let t0 = i as f64 * dt;
        let u_a = u1_at(&x, &ybuf, i, t0);
        let k1 = deriv(&x, u_a);
        let xm = &x + &k1 * (0.5 * dt);
        let u_m = u1_at(&xm, &ybuf, i, t0 + 0.5 * dt);
        let k2 = deriv(&xm, u_m);
        let xm2 = &x + &k2 * (0.5 * dt);
        let u_m2 = u1_at(&xm2, &ybuf, i, t0 + 0.5 * dt);
        let k3 = deriv(&xm2, u_m2);
        let xe = &x + &k3 * dt;
        let u_e = u1_at(&xe, &ybuf, i, t0 + dt);
        let k4 = deriv(&xe, u_e);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        record(i + 1, &x, &mut ybuf, &mut t_log, &mut y_log, &mut u_log, &mut sat_log);
        if y_log.last().unwrap().abs() > DIVERGENCE_LIMIT {
            diverged = true;
            break;
        }
    }

    Ok(SimTrace {
        t: t_log,
        y1: y_log,
        u1: u_log,
        saturated: sat_log,
        diverged,
        step_amplitude: config.step_amplitude,
        dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Periodic,
    Convergent,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodicity {
    pub verdict: Verdict,
    /// Lag of the dominant autocorrelation peak, seconds (periodic only).
    pub period: Option<f64>,
    /// Peak-to-peak amplitude over the tail window.
    pub peak_to_peak: f64,
}

const MIN_TAIL_SAMPLES: usize = 32;

/// Classify the tail of a trace. Periodic requires a tail peak-to-peak above
/// `1e-3·step` together with a normalized autocorrelation peak of at least
/// 0.95; convergent requires peak-to-peak below `1e-6·step`.
pub fn periodicity_estimate(trace: &SimTrace, tail_fraction: f64) -> Result<Periodicity, SimError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(SimError::InvalidConfig("tail_fraction must be in (0, 1]".into()));
    }
    let n = trace.y1.len();
    let start = ((1.0 - tail_fraction) * n as f64) as usize;
    let tail = &trace.y1[start..];
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(SimError::WindowTooShort { needed: MIN_TAIL_SAMPLES, got: tail.len() });
    }
    let step = trace.step_amplitude.abs().max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in tail {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let ptp = hi - lo;

    if trace.diverged {
        return Ok(Periodicity { verdict: Verdict::Divergent, period: None, peak_to_peak: ptp });
    }
    if ptp < 1e-6 * step {
        return Ok(Periodicity { verdict: Verdict::Convergent, period: None, peak_to_peak: ptp });
    }
    if ptp > 1e-3 * step {
        if let Some(lag) = autocorr_peak(tail) {
            return Ok(Periodicity {
                verdict: Verdict::Periodic,
                period: Some(lag as f64 * trace.dt),
                peak_to_peak: ptp,
            });
        }
    }
    Ok(Periodicity { verdict: Verdict::Convergent, period: None, peak_to_peak: ptp })
}

/// First local maximum of the normalized autocorrelation reaching 0.95.
fn autocorr_peak(tail: &[f64]) -> Option<usize> {
    let n = tail.len();
    let mean = tail.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = tail.iter().map(|v| v - mean).collect();
    let max_lag = n / 2;
    let corr = |lag: usize| -> f64 {
        let m = n - lag;
        let mut num = 0.0;
        let mut e0 = 0.0;
        let mut e1 = 0.0;
        for i in 0..m {
            num += y[i] * y[i + lag];
            e0 += y[i] * y[i];
            e1 += y[i + lag] * y[i + lag];
        }
        if e0 <= 0.0 || e1 <= 0.0 {
            return 0.0;
        }
        num / (e0 * e1).sqrt()
    };
    #[cfg(feature = "parallel")]
    let r: Vec<f64> = {
        use rayon::prelude::*;
        (0..max_lag).into_par_iter().map(corr).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let r: Vec<f64> = (0..max_lag).map(corr).collect();

    for lag in 1..max_lag.saturating_sub(1) {
        if r[lag] >= 0.95 && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] {
            return Some(lag);
        }
    }
    None
}

/// Result of the Nyquist-gain computation for negative feedback `1 + kG`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NyquistGain {
    /// `min -1/Re G` over negative-real-axis crossings; infinite when the
    /// locus never crosses.
    pub k_n: f64,
    pub omega_cross: Option<f64>,
}

/// Locate all `Im G(jω) = 0` crossings with `Re G < 0` on the grid (plus
/// `ω = 0`) and return the smallest destabilizing gain.
pub fn nyquist_gain(tf: &DelayedRational, grid: &GridSpec) -> NyquistGain {
    let eval_or_nan =
        |w: f64| -> Complex64 { tf.eval(w).unwrap_or(Complex64::new(f64::NAN, f64::NAN)) };
    let mut k_n = f64::INFINITY;
    let mut omega_cross = None;

    // The locus starts on the real axis.
    let g0 = eval_or_nan(0.0);
    if g0.re < 0.0 && g0.im.abs() < 1e-12 {
        k_n = -1.0 / g0.re;
        omega_cross = Some(0.0);
    }

    let mut wprev = grid.point(0);
    let mut gprev = eval_or_nan(wprev);
    for i in 1..grid.n() {
        let w = grid.point(i);
        let g = eval_or_nan(w);
        if gprev.im == 0.0 && gprev.re < 0.0 {
            let k = -1.0 / gprev.re;
            if k < k_n {
                k_n = k;
                omega_cross = Some(wprev);
            }
        } else if gprev.im * g.im < 0.0 {
            // Bisect the crossing to 1e-10 in omega.
            let (mut lo, mut hi) = (wprev, w);
            let (mut ilo, _) = (gprev.im, g.im);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let im = eval_or_nan(mid).im;
                if ilo * im <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    ilo = im;
                }
            }
            let wc = 0.5 * (lo + hi);
            let re = eval_or_nan(wc).re;
            if re < 0.0 {
                let k = -1.0 / re;
                if k < k_n {
                    k_n = k;
                    omega_cross = Some(wc);
                }
            }
        }
        wprev = w;
        gprev = g;
    }
    NyquistGain { k_n, omega_cross }
}

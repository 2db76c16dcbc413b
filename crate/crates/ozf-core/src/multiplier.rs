//! Candidate multipliers: delay combinations `m0 - Σ h_i e^{-j ω t_i}` and
//! rational factors; class membership against the impulse-response mass
//! rules, suitability `Re{M(jω) G(jω)} > ε`, the phase-bound corollary
//! `|b∠M(a·jω) - a∠M(b·jω)| / (a/2 + b/2 - p) <= 180°`, and the delay
//! multipliers `M∓_τ(s) = 1 ∓ e^{-τs}` that attain it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criterion::{p_value, CoprimePair, MultiplierClass};
use crate::duality::DelayFamily;
use crate::grid::{self, GridSpec};
use crate::luryesim::realize;
use crate::xferfn::{eval as plant_eval, modulo_interval, polyval, DelayedRational, ShiftedPlant,
    XferError, MAGNITUDE_FLOOR};

use std::f64::consts::PI;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MultiplierError {
    #[error(transparent)]
    Xfer(#[from] XferError),
    #[error("multiplier has no finite direct term (not biproper)")]
    NotBiproper,
    #[error("M+ tightness requires a or b even; ({a},{b}) are both odd")]
    ParityError { a: u32, b: u32 },
    #[error("delay multiplier response vanishes at omega*tau = {omega_tau}")]
    ZeroResponse { omega_tau: f64 },
    #[error("invalid multiplier: {0}")]
    Invalid(String),
}

/// Finite combination of delayed impulses: `m(t) = m0 δ(t) - Σ h_i δ(t - t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayCombo {
    pub m0: f64,
    /// `(h_i, t_i)` pairs, `t_i != 0`.
    pub taps: Vec<(f64, f64)>,
}

impl DelayCombo {
    pub fn new(m0: f64, taps: Vec<(f64, f64)>) -> Result<Self, MultiplierError> {
        if !(m0 > 0.0) {
            return Err(MultiplierError::Invalid(format!("m0 must be positive, got {m0}")));
        }
        if taps.iter().any(|&(_, t)| t == 0.0) {
            return Err(MultiplierError::Invalid("tap delays must be nonzero".into()));
        }
        Ok(DelayCombo { m0, taps })
    }

    /// `m0 - Σ h_i e^{-jω t_i}`.
    pub fn response(&self, omega: f64) -> Complex64 {
        let mut v = Complex64::new(self.m0, 0.0);
        for &(h, t) in &self.taps {
            v -= h * Complex64::from_polar(1.0, -omega * t);
        }
        v
    }
}

/// Rational multiplier `num(s)/den(s)`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalMultiplier {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl RationalMultiplier {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, MultiplierError> {
        if den.is_empty() || den[0] == 0.0 || num.is_empty() {
            return Err(MultiplierError::Invalid(
                "numerator and denominator must be nonempty with nonzero leading den".into(),
            ));
        }
        Ok(RationalMultiplier { num, den })
    }

    pub fn response(&self, omega: f64) -> Result<Complex64, MultiplierError> {
        let s = Complex64::new(0.0, omega);
        let den = polyval(&self.den, s);
        if den.norm() < MAGNITUDE_FLOOR {
            return Err(XferError::DegeneratePlant { omega }.into());
        }
        Ok(polyval(&self.num, s) / den)
    }
}

/// Either multiplier kind, as serialized on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MultiplierSpec {
    DelayCombo { m0: f64, taps: Vec<(f64, f64)> },
    Rational { num: Vec<f64>, den: Vec<f64> },
}

impl MultiplierSpec {
    pub fn response(&self, omega: f64) -> Result<Complex64, MultiplierError> {
        match self {
            MultiplierSpec::DelayCombo { m0, taps } => {
                Ok(DelayCombo { m0: *m0, taps: taps.clone() }.response(omega))
            }
            MultiplierSpec::Rational { num, den } => {
                RationalMultiplier { num: num.clone(), den: den.clone() }.response(omega)
            }
        }
    }

    pub fn validate(&self) -> Result<(), MultiplierError> {
        match self {
            MultiplierSpec::DelayCombo { m0, taps } => {
                DelayCombo::new(*m0, taps.clone()).map(|_| ())
            }
            MultiplierSpec::Rational { num, den } => {
                RationalMultiplier::new(num.clone(), den.clone()).map(|_| ())
            }
        }
    }
}

impl From<DelayCombo> for MultiplierSpec {
    fn from(c: DelayCombo) -> Self {
        MultiplierSpec::DelayCombo { m0: c.m0, taps: c.taps }
    }
}

impl From<RationalMultiplier> for MultiplierSpec {
    fn from(r: RationalMultiplier) -> Self {
        MultiplierSpec::Rational { num: r.num, den: r.den }
    }
}

/// Outcome of the suitability test `min_ω Re{M(jω) G(jω)} > ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityReport {
    pub min_re: f64,
    pub argmin_omega: f64,
    pub epsilon: f64,
    pub verdict: bool,
}

/// Minimize `Re{M(jω) G(jω)}` over the grid with refinement; the verdict is
/// `min_re > epsilon`.
pub fn is_suitable(
    multiplier: &MultiplierSpec,
    plant: &ShiftedPlant,
    grid: &GridSpec,
    epsilon: f64,
) -> Result<SuitabilityReport, MultiplierError> {
    let re = |w: f64| -> Result<f64, MultiplierError> {
        let m = multiplier.response(w)?;
        let g = plant_eval(plant, w)?;
        Ok((m * g).re)
    };
    // Maximize the negation, then refine.
    let best = grid::try_scan_max(grid, |w| re(w).map(|v| -v))?;
    let (argmin_omega, neg) = grid::refine_max(
        |w| re(w).map(|v| -v).unwrap_or(f64::NEG_INFINITY),
        grid,
        best,
    );
    let min_re = -neg;
    Ok(SuitabilityReport { min_re, argmin_omega, epsilon, verdict: min_re > epsilon })
}

/// Class verdict for a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    /// In class M (hence also in M_odd).
    #[serde(rename = "in_m")]
    InM,
    /// Only in M_odd.
    #[serde(rename = "in_m_odd_only")]
    InModdOnly,
    #[serde(rename = "neither")]
    Neither,
}

/// Membership of a delay combination: class M needs every `h_i >= 0` and
/// `Σ h_i <= m0`; class M_odd needs `Σ |h_i| <= m0`.
pub fn class_membership(combo: &DelayCombo) -> Membership {
    let sum: f64 = combo.taps.iter().map(|&(h, _)| h).sum();
    let abs_sum: f64 = combo.taps.iter().map(|&(h, _)| h.abs()).sum();
    let nonneg = combo.taps.iter().all(|&(h, _)| h >= 0.0);
    if nonneg && sum <= combo.m0 {
        Membership::InM
    } else if abs_sum <= combo.m0 {
        Membership::InModdOnly
    } else {
        Membership::Neither
    }
}

/// Membership report for a rational multiplier, from the measured impulse
/// response of its strictly proper part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalMembership {
    pub membership: Membership,
    /// Direct term `m0 = M(∞)`.
    pub m0: f64,
    /// Measured `∫|h|` on `[0, horizon]`.
    pub l1_mass: f64,
    /// Crude bound on the mass beyond the horizon.
    pub tail_bound: f64,
    /// Most negative sampled `h(t)`.
    pub min_h: f64,
    pub horizon: f64,
    pub dt: f64,
}

fn poly_trimmed_degree(c: &[f64]) -> usize {
    let start = c.iter().position(|&v| v != 0.0).unwrap_or(c.len() - 1);
    c.len() - 1 - start
}

/// Split `M = m0 - H` with `H` strictly proper, simulate the impulse response
/// `h(t)` of `H`, integrate `|h|` by the trapezoid rule and classify.
pub fn rational_membership(
    multiplier: &RationalMultiplier,
    horizon: Option<f64>,
    dt: Option<f64>,
) -> Result<RationalMembership, MultiplierError> {
    let num_deg = poly_trimmed_degree(&multiplier.num);
    let den_deg = poly_trimmed_degree(&multiplier.den);
    if num_deg != den_deg {
        return Err(MultiplierError::NotBiproper);
    }
    let lead_num = multiplier.num[multiplier.num.len() - 1 - num_deg];
    let lead_den = multiplier.den[multiplier.den.len() - 1 - den_deg];
    let m0 = lead_num / lead_den;

    // H = m0*den - num over den, strictly proper by construction.
    let mut h_num = vec![0.0; multiplier.den.len()];
    let off = multiplier.den.len() - multiplier.num.len();
    for (i, &c) in multiplier.den.iter().enumerate() {
        h_num[i] += m0 * c;
    }
    for (i, &c) in multiplier.num.iter().enumerate() {
        h_num[off + i] -= c;
    }
    let h_tf = DelayedRational::rational(h_num, multiplier.den.clone())
        .map_err(MultiplierError::from)?;
    let ss = realize(&h_tf).map_err(|e| MultiplierError::Invalid(e.to_string()))?;
    let n = ss.order();
    if n == 0 {
        // H identically zero: M is the constant m0.
        return Ok(RationalMembership {
            membership: if m0 > 0.0 { Membership::InM } else { Membership::Neither },
            m0,
            l1_mass: 0.0,
            tail_bound: 0.0,
            min_h: 0.0,
            horizon: 0.0,
            dt: 0.0,
        });
    }

    // Pole analysis for the horizon and step.
    let eigs = ss.a.clone().complex_eigenvalues();
    let max_re = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let min_abs_re = eigs.iter().map(|e| e.re.abs()).fold(f64::INFINITY, f64::min);
    let max_norm = eigs.iter().map(|e| e.norm()).fold(0.0f64, f64::max).max(1e-6);
    if max_re >= -1e-12 {
        // Not exponentially stable: infinite L1 mass.
        return Ok(RationalMembership {
            membership: Membership::Neither,
            m0,
            l1_mass: f64::INFINITY,
            tail_bound: f64::INFINITY,
            min_h: f64::NAN,
            horizon: 0.0,
            dt: 0.0,
        });
    }
    let horizon = horizon.unwrap_or(40.0 / min_abs_re.max(1e-12));
    let dt = dt.unwrap_or_else(|| (0.02 / max_norm).min(horizon / 20_000.0));
    let steps = ((horizon / dt).ceil() as usize).clamp(100, 5_000_000);

    // Impulse response: x' = Ax, x(0) = B, h = c'x. RK4 on the homogeneous
    // system is exact enough at dt << 1/|λ|max.
    let mut x = ss.b.clone();
    let h_of = |x: &nalgebra::DVector<f64>| ss.c.dot(x);
    let mut mass = 0.0;
    let mut min_h = f64::INFINITY;
    let mut prev = h_of(&x).abs();
    min_h = min_h.min(h_of(&x));
    for _ in 0..steps {
        let k1 = &ss.a * &x;
        let k2 = &ss.a * &(&x + &k1 * (0.5 * dt));
        let k3 = &ss.a * &(&x + &k2 * (0.5 * dt));
        let k4 = &ss.a * &(&x + &k3 * dt);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let h = h_of(&x);
        min_h = min_h.min(h);
        mass += 0.5 * (prev + h.abs()) * dt;
        prev = h.abs();
    }
    // Exponential tail estimate from the terminal sample.
    let tail_bound = prev / min_abs_re;

    let scale = mass.max(prev).max(1e-30);
    let nonneg = min_h >= -1e-9 * scale;
    let total = mass + tail_bound;
    let membership = if nonneg && total <= m0 + 1e-9 {
        Membership::InM
    } else if total <= m0 + 1e-9 {
        Membership::InModdOnly
    } else {
        Membership::Neither
    };
    Ok(RationalMembership { membership, m0, l1_mass: mass, tail_bound, min_h, horizon, dt })
}

/// Pointwise normalized multiplier phase gap
/// `|b∠M(a·jω) - a∠M(b·jω)| / (a/2 + b/2 - p)`, degrees; zero when the
/// normalizer is not positive (only the pair (1,1) at p = 1).
pub fn multiplier_phase_gap(
    multiplier: &MultiplierSpec,
    pair: CoprimePair,
    class: MultiplierClass,
    omega: f64,
) -> Result<f64, MultiplierError> {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    let norm = 0.5 * a + 0.5 * b - p_value(pair, class);
    if norm <= 0.0 {
        return Ok(0.0);
    }
    let ma = multiplier.response(a * omega)?;
    let mb = multiplier.response(b * omega)?;
    let pa = ma.arg().to_degrees();
    let pb = mb.arg().to_degrees();
    Ok((b * pa - a * pb).abs() / norm)
}

/// Maximum of [`multiplier_phase_gap`] over a frequency grid (with
/// refinement). Stays at or below 180 for members of the class.
pub fn phase_bound_check(
    multiplier: &MultiplierSpec,
    pair: CoprimePair,
    class: MultiplierClass,
    grid: &GridSpec,
) -> Result<f64, MultiplierError> {
    let f = |w: f64| multiplier_phase_gap(multiplier, pair, class, w);
    let best = grid::try_scan_max(grid, f)?;
    let (_, v) = grid::refine_max(
        |w| multiplier_phase_gap(multiplier, pair, class, w).unwrap_or(f64::NEG_INFINITY),
        grid,
        best,
    );
    Ok(v)
}

/// τ intervals within one fundamental period `(0, 2π/ω0)` on which the delay
/// multiplier attains the phase bound exactly:
/// for `M-`: `[a·ω0·τ] in (2π - 2π/b, 2π)` and `[b·ω0·τ] in (0, 2π/a)`;
/// for `M+` (requires a or b even): `[a·ω0·τ] in (π - π/b, π)` and
/// `[b·ω0·τ] in (π, π + π/a)`.
pub fn tight_tau_window(
    pair: CoprimePair,
    omega0: f64,
    family: DelayFamily,
) -> Result<Vec<(f64, f64)>, MultiplierError> {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    if family == DelayFamily::Mplus && pair.a() % 2 == 1 && pair.b() % 2 == 1 {
        return Err(MultiplierError::ParityError { a: pair.a(), b: pair.b() });
    }
    let period = 2.0 * PI / omega0;
    let (win_a, win_b) = match family {
        DelayFamily::Mminus => {
            ((2.0 * PI - 2.0 * PI / b, 2.0 * PI), (0.0, 2.0 * PI / a))
        }
        DelayFamily::Mplus => ((PI - PI / b, PI), (PI, PI + PI / a)),
    };
    // tau intervals where [m·ω0·τ] mod 2π lies in (lo, hi).
    let tau_windows = |mult: f64, (lo, hi): (f64, f64)| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let scale = mult * omega0;
        let mut k = 0.0;
        loop {
            let t_lo = (lo + 2.0 * PI * k) / scale;
            let t_hi = (hi + 2.0 * PI * k) / scale;
            if t_lo >= period {
                break;
            }
            out.push((t_lo.max(0.0), t_hi.min(period)));
            k += 1.0;
        }
        out
    };
    let wa = tau_windows(a, win_a);
    let wb = tau_windows(b, win_b);
    let mut out = Vec::new();
    for &(lo1, hi1) in &wa {
        for &(lo2, hi2) in &wb {
            let lo = lo1.max(lo2);
            let hi = hi1.min(hi2);
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

/// Principal phase of `1 ∓ e^{-jωτ}` in degrees, by the closed forms
/// `90 - (180/π)·[ωτ/2]_{[0,π)}` for `M-` and `-(180/π)·[ωτ/2]_{[-π/2,π/2)}`
/// for `M+`.
pub fn delay_multiplier_phase(
    family: DelayFamily,
    tau: f64,
    omega: f64,
) -> Result<f64, MultiplierError> {
    let x = omega * tau;
    match family {
        DelayFamily::Mminus => {
            if dist_to_multiple_2pi(x, 0.0) < 1e-12 {
                return Err(MultiplierError::ZeroResponse { omega_tau: x });
            }
            let m = modulo_interval(0.5 * x, 0.0, PI).expect("valid interval");
            Ok(90.0 - m.to_degrees())
        }
        DelayFamily::Mplus => {
            if dist_to_multiple_2pi(x, PI) < 1e-12 {
                return Err(MultiplierError::ZeroResponse { omega_tau: x });
            }
            let m = modulo_interval(0.5 * x, -0.5 * PI, 0.5 * PI).expect("valid interval");
            Ok(-m.to_degrees())
        }
    }
}

fn dist_to_multiple_2pi(x: f64, offset: f64) -> f64 {
    let r = (x - offset).rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

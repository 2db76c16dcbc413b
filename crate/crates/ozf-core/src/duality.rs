//! Duality certificates: nonnegative weights making
//! `Σ_r λ_r Re{M∓_τ(jω_r) G(jω_r)} <= 0` for every delay multiplier
//! `M∓_τ(s) = 1 ∓ e^{-τs}`, which rules out all multipliers of the class.
//!
//! For two frequencies `a·ω0`, `b·ω0` the construction is explicit: write
//! `G(a·jω0) = g_a e^{j(π-φ)}`, `G(b·jω0) = g_b e^{j(-π+θ)}`, pick
//! `λ_a = g_b·b·sinθ`, `λ_b = g_a·a·sinφ`; then the weighted sum collapses to
//! `g_a·g_b·(f1+f2)(τω0)` (class M) or `g_a·g_b·(f3+f4)(τω0)` (odd class),
//! nonpositive whenever `aθ + bφ < pπ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criterion::{p_value, CoprimePair, MultiplierClass};
use crate::grid::{self, GridSpec};
use crate::xferfn::{eval, ShiftedPlant, XferError};

use std::f64::consts::PI;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DualityError {
    #[error(transparent)]
    Xfer(#[from] XferError),
    #[error(
        "phases ({phase_a} deg at a*omega0, {phase_b} deg at b*omega0) do not fit the \
         polar form in either orientation"
    )]
    PhaseSectorViolation { phase_a: f64, phase_b: f64 },
    #[error("a*theta + b*phi = {lhs} rad is not below p*pi = {bound} rad")]
    IneqViolation { lhs: f64, bound: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// `f1(ω) = -b sinθ (cosφ - cos(φ - aω))`,
/// `f2(ω) = -a sinφ (cosθ - cos(θ + bω))`; angles in radians.
pub fn f_pair_minus(omega: f64, pair: CoprimePair, theta: f64, phi: f64) -> (f64, f64) {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    let f1 = -b * theta.sin() * (phi.cos() - (phi - a * omega).cos());
    let f2 = -a * phi.sin() * (theta.cos() - (theta + b * omega).cos());
    (f1, f2)
}

/// `f3(ω) = -b sinθ (cosφ + cos(φ - aω))`,
/// `f4(ω) = -a sinφ (cosθ + cos(θ + bω))`; angles in radians.
pub fn f_pair_plus(omega: f64, pair: CoprimePair, theta: f64, phi: f64) -> (f64, f64) {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    let f3 = -b * theta.sin() * (phi.cos() + (phi - a * omega).cos());
    let f4 = -a * phi.sin() * (theta.cos() + (theta + b * omega).cos());
    (f3, f4)
}

/// Two-frequency duality certificate with the numeric suprema of the
/// weighted sums over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityCertificate {
    pub pair: CoprimePair,
    pub omega0: f64,
    pub g_a: f64,
    pub g_b: f64,
    /// Radians, `>= 0`.
    pub theta: f64,
    /// Radians, `>= 0`.
    pub phi: f64,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// `sup_ω g_a g_b (f1+f2)(ω)` over one period; `<= 0` certifies class M.
    pub sup_f_minus: f64,
    /// `sup_ω g_a g_b (f3+f4)(ω)`; present for the odd class.
    pub sup_f_plus: Option<f64>,
    /// True when the mirrored phase orientation was handled by conjugating
    /// the plant (phases negated); the certificate applies to the original
    /// plant unchanged.
    pub conjugated: bool,
}

const SUP_GRID_N: usize = 100_001;

fn sup_over_period<F>(f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let grid = GridSpec::linear(0.0, 2.0 * PI, SUP_GRID_N);
    grid::supremum(&grid, f).1
}

/// Build the explicit two-frequency certificate at `ω0` for the pair and
/// class, following the polar-form construction.
pub fn build_certificate(
    plant: &ShiftedPlant,
    pair: CoprimePair,
    omega0: f64,
    class: MultiplierClass,
) -> Result<DualityCertificate, DualityError> {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    let va = eval(plant, a * omega0)?;
    let vb = eval(plant, b * omega0)?;
    let (mut pa, mut pb) = (va.arg(), vb.arg()); // radians in (-pi, pi]

    // Direct orientation needs phase(a*omega0) in [0, pi] and
    // phase(b*omega0) in [-pi, 0] so that theta, phi and both weights are
    // nonnegative; the mirrored case conjugates the plant.
    let conjugated = if pa >= 0.0 && pb <= 0.0 {
        false
    } else if pa <= 0.0 && pb >= 0.0 {
        pa = -pa;
        pb = -pb;
        true
    } else {
        return Err(DualityError::PhaseSectorViolation {
            phase_a: pa.to_degrees(),
            phase_b: pb.to_degrees(),
        });
    };

    let phi = PI - pa; // phase_a = pi - phi
    let theta = PI + pb; // phase_b = -pi + theta
    let p = p_value(pair, class);
    let lhs = a * theta + b * phi;
    if lhs >= p * PI {
        return Err(DualityError::IneqViolation { lhs, bound: p * PI });
    }

    let (g_a, g_b) = (va.norm(), vb.norm());
    let lambda_a = g_b * b * theta.sin();
    let lambda_b = g_a * a * phi.sin();
    if lambda_a + lambda_b <= 0.0 {
        return Err(DualityError::PhaseSectorViolation {
            phase_a: va.arg().to_degrees(),
            phase_b: vb.arg().to_degrees(),
        });
    }

    let scale = g_a * g_b;
    let sup_f_minus = sup_over_period(|w| {
        let (f1, f2) = f_pair_minus(w, pair, theta, phi);
        scale * (f1 + f2)
    });
    let sup_f_plus = (class == MultiplierClass::OddMonotone).then(|| {
        sup_over_period(|w| {
            let (f3, f4) = f_pair_plus(w, pair, theta, phi);
            scale * (f3 + f4)
        })
    });

    Ok(DualityCertificate {
        pair,
        omega0,
        g_a,
        g_b,
        theta,
        phi,
        lambda_a,
        lambda_b,
        sup_f_minus,
        sup_f_plus,
        conjugated,
    })
}

impl DualityCertificate {
    /// The weighted frequency set this certificate asserts, for the general
    /// verifier. In the conjugated orientation the criterion value is the
    /// τ-reflection of the direct one; suprema over a full period agree.
    pub fn to_instance(&self, plant: &ShiftedPlant) -> Result<GeneralDualityInstance, DualityError> {
        let (a, b) = (f64::from(self.pair.a()), f64::from(self.pair.b()));
        GeneralDualityInstance::new(
            vec![a * self.omega0, b * self.omega0],
            vec![self.lambda_a, self.lambda_b],
            plant.clone(),
        )
    }
}

/// General `N`-frequency instance of the duality theorems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralDualityInstance {
    omegas: Vec<f64>,
    lambdas: Vec<f64>,
    plant: ShiftedPlant,
}

/// Which one-parameter delay family to test against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayFamily {
    /// `M^-_τ(s) = 1 - e^{-τs}`, extreme points for class M.
    Mminus,
    /// `M^+_τ(s) = 1 + e^{-τs}`, the additional family for the odd class.
    Mplus,
}

impl GeneralDualityInstance {
    pub fn new(
        omegas: Vec<f64>,
        lambdas: Vec<f64>,
        plant: ShiftedPlant,
    ) -> Result<Self, DualityError> {
        if omegas.is_empty() || omegas.len() != lambdas.len() {
            return Err(DualityError::InvalidInstance(
                "need equally many frequencies and weights, at least one".into(),
            ));
        }
        if !omegas.windows(2).all(|w| w[0] < w[1]) || omegas[0] <= 0.0 {
            return Err(DualityError::InvalidInstance(
                "frequencies must be strictly increasing and positive".into(),
            ));
        }
        if lambdas.iter().any(|&l| l < 0.0) || lambdas.iter().sum::<f64>() <= 0.0 {
            return Err(DualityError::InvalidInstance(
                "weights must be nonnegative with positive sum".into(),
            ));
        }
        Ok(GeneralDualityInstance { omegas, lambdas, plant })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// τ grid covering one common period when the frequency ratios are
    /// rational (continued-fraction detection, denominators up to 1000,
    /// combined period up to 10^4 base periods), else the truncated range
    /// `[0, 200·2π/ω1]`.
    pub fn default_tau_grid(&self) -> GridSpec {
        let w1 = self.omegas[0];
        let mut lcm: u64 = 1;
        let mut rational = true;
        for &w in &self.omegas {
            match rational_approx(w / w1, 1000, 1e-9) {
                Some((_, q)) => {
                    lcm = lcm / gcd_u64(lcm, q) * q;
                    if lcm > 10_000 {
                        rational = false;
                        break;
                    }
                }
                None => {
                    rational = false;
                    break;
                }
            }
        }
        let period = if rational {
            // omega_r = p_r/q_r * w1; common period of e^{j omega_r tau} is
            // 2*pi*lcm(q_r)/w1.
            2.0 * PI * (lcm as f64) / w1
        } else {
            200.0 * 2.0 * PI / w1
        };
        GridSpec::linear(period / (SUP_GRID_N as f64), period, SUP_GRID_N)
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Best rational approximation `p/q` with `q <= max_den` and relative error
/// below `tol`, by continued fractions.
fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    if !(x > 0.0) || !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut frac = x;
    for _ in 0..64 {
        let a = frac.floor();
        if a > u64::MAX as f64 {
            return None;
        }
        let a_int = a as u64;
        let h2 = a_int.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a_int.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= tol * x {
            return Some((h1, k1));
        }
        let rem = frac - a;
        if rem.abs() < 1e-15 {
            break;
        }
        frac = 1.0 / rem;
    }
    let approx = h1 as f64 / k1.max(1) as f64;
    ((approx - x).abs() <= tol * x && k1 > 0).then_some((h1, k1))
}

/// Maximum over τ of `Σ_r λ_r Re{M∓_τ(jω_r) G(jω_r)}` and the maximizing τ.
/// A nonpositive supremum certifies nonexistence for the corresponding class.
pub fn verify_general(
    instance: &GeneralDualityInstance,
    family: DelayFamily,
    tau_grid: &GridSpec,
) -> Result<(f64, f64), DualityError> {
    let values: Vec<_> = instance
        .omegas
        .iter()
        .map(|&w| eval(&instance.plant, w))
        .collect::<Result<_, _>>()?;
    let sign = match family {
        DelayFamily::Mminus => -1.0,
        DelayFamily::Mplus => 1.0,
    };
    let objective = |tau: f64| -> f64 {
        let mut acc = 0.0;
        for ((&w, &l), v) in instance.omegas.iter().zip(&instance.lambdas).zip(&values) {
            // Re{(1 ± e^{-jωτ}) H} = Re H ± (Re H cos ωτ + Im H sin ωτ)
            let (s, c) = (w * tau).sin_cos();
            acc += l * (v.re + sign * (v.re * c + v.im * s));
        }
        acc
    };
    let (tau_star, sup) = grid::supremum(tau_grid, objective);
    Ok((sup, tau_star))
}

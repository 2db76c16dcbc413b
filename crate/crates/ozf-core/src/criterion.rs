//! The two-frequency phase criterion: if
//! `|b∠G(a·jω0) - a∠G(b·jω0)| / (a + b - p) > 180°` at any `ω0 > 0`, no
//! suitable multiplier of the corresponding class exists for `G`.
//!
//! `p = 1` for the monotone class; for the odd class `p = 1` when both `a`
//! and `b` are odd and `p = 1/2` otherwise. Each phase is taken principal,
//! per frequency, with no unwrapping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{self, GridSpec};
use crate::xferfn::{
    phase_profile, principal_phase, DelayedRational, PhaseProfile, ShiftedPlant, XferError,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CriterionError {
    #[error(transparent)]
    Xfer(#[from] XferError),
    #[error("a = {a} and b = {b} are not coprime")]
    NotCoprime { a: u32, b: u32 },
    #[error(
        "bisection bracket invalid: criterion fires at k_lo = {k_lo}: {fires_lo}, \
         at k_hi = {k_hi}: {fires_hi}"
    )]
    BracketInvalid { k_lo: f64, k_hi: f64, fires_lo: bool, fires_hi: bool },
    #[error("phase {phase} deg is not above 90 deg; no forbidden band is defined")]
    OutOfRange { phase: f64 },
}

pub fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Coprime positive integer pair; the frequency ratio under test is `b : a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct CoprimePair {
    a: u32,
    b: u32,
}

#[derive(Deserialize)]
struct RawPair {
    a: u32,
    b: u32,
}

impl TryFrom<RawPair> for CoprimePair {
    type Error = String;
    fn try_from(r: RawPair) -> Result<Self, String> {
        CoprimePair::new(r.a, r.b).map_err(|e| e.to_string())
    }
}

impl CoprimePair {
    pub fn new(a: u32, b: u32) -> Result<Self, CriterionError> {
        if a == 0 || b == 0 || gcd(a, b) != 1 {
            return Err(CriterionError::NotCoprime { a, b });
        }
        Ok(CoprimePair { a, b })
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn swapped(&self) -> CoprimePair {
        CoprimePair { a: self.b, b: self.a }
    }
}

/// Multiplier class under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierClass {
    /// Class M, monotone nonlinearities.
    Monotone,
    /// Class M_odd, odd monotone nonlinearities.
    #[serde(rename = "odd")]
    OddMonotone,
}

/// The parity rule: `p = 1` for class M; for M_odd, `p = 1` when both `a`
/// and `b` are odd, else `p = 1/2`.
pub fn p_value(pair: CoprimePair, class: MultiplierClass) -> f64 {
    match class {
        MultiplierClass::Monotone => 1.0,
        MultiplierClass::OddMonotone => {
            if pair.a % 2 == 1 && pair.b % 2 == 1 {
                1.0
            } else {
                0.5
            }
        }
    }
}

/// Signed phase gap `b∠G(a·jω0) - a∠G(b·jω0)` in degrees, each phase
/// principal and computed separately.
pub fn phase_gap(
    plant: &ShiftedPlant,
    pair: CoprimePair,
    omega0: f64,
) -> Result<f64, CriterionError> {
    let pa = principal_phase(plant, f64::from(pair.a) * omega0)?;
    let pb = principal_phase(plant, f64::from(pair.b) * omega0)?;
    Ok(f64::from(pair.b) * pa - f64::from(pair.a) * pb)
}

/// Signed normalized gap `phase_gap / (a + b - p)`.
pub fn normalized_gap(
    plant: &ShiftedPlant,
    pair: CoprimePair,
    class: MultiplierClass,
    omega0: f64,
) -> Result<f64, CriterionError> {
    let p = p_value(pair, class);
    Ok(phase_gap(plant, pair, omega0)? / (f64::from(pair.a) + f64::from(pair.b) - p))
}

/// Witness that the criterion fires: `gap > 180` certifies that no suitable
/// multiplier of `class` exists for the plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationCertificate {
    pub pair: CoprimePair,
    /// Base frequency of the witness, rad/s.
    pub omega0: f64,
    pub p: f64,
    /// `|b∠G(a·jω0) - a∠G(b·jω0)| / (a + b - p)`, degrees.
    pub gap: f64,
    /// Principal phase at `a·ω0`, degrees.
    pub phase_a: f64,
    /// Principal phase at `b·ω0`, degrees.
    pub phase_b: f64,
    pub class: MultiplierClass,
}

impl ViolationCertificate {
    /// Signed normalized gap recomputed from the stored phases.
    pub fn signed_gap(&self) -> f64 {
        let (a, b) = (f64::from(self.pair.a), f64::from(self.pair.b));
        (b * self.phase_a - a * self.phase_b) / (a + b - self.p)
    }

    /// Relabel `(a, b) -> (b, a)`; the normalized gap is unchanged, the sign
    /// of the underlying signed gap flips.
    fn swapped(&self) -> ViolationCertificate {
        ViolationCertificate {
            pair: self.pair.swapped(),
            omega0: self.omega0,
            p: self.p,
            gap: self.gap,
            phase_a: self.phase_b,
            phase_b: self.phase_a,
            class: self.class,
        }
    }
}

/// Scan and refinement settings shared by the search operations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriterionConfig {
    /// Grid of candidate `ω0`.
    pub grid: GridSpec,
    /// Certificate threshold is `180 + margin` degrees.
    pub margin: f64,
    /// Refine the best grid point (dense zoom plus golden section).
    pub refine: bool,
    pub a_cap: u32,
    pub b_cap: u32,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            grid: GridSpec::log(1e-3, 1e3, 4001),
            margin: 0.0,
            refine: true,
            a_cap: 20,
            b_cap: 20,
        }
    }
}

/// Location and value of the largest `|normalized_gap|` over the grid.
///
/// Returns `(omega0, signed_gap_at_maximizer)`.
pub fn pair_max_gap(
    plant: &ShiftedPlant,
    pair: CoprimePair,
    class: MultiplierClass,
    config: &CriterionConfig,
) -> Result<(f64, f64), CriterionError> {
    let objective = |w: f64| normalized_gap(plant, pair, class, w).map(f64::abs);
    let best = grid::try_scan_max(&config.grid, objective)?;
    let (w, _) = if config.refine {
        // Refinement tolerates (rare) evaluation failures by treating the
        // point as -inf; the scan above already proved the bracket evaluable.
        grid::refine_max(
            |w| {
                normalized_gap(plant, pair, class, w)
                    .map(f64::abs)
                    .unwrap_or(f64::NEG_INFINITY)
            },
            &config.grid,
            best,
        )
    } else {
        (best.x, best.value)
    };
    let signed = normalized_gap(plant, pair, class, w)?;
    Ok((w, signed))
}

fn certificate_at(
    plant: &ShiftedPlant,
    pair: CoprimePair,
    class: MultiplierClass,
    omega0: f64,
) -> Result<ViolationCertificate, CriterionError> {
    let p = p_value(pair, class);
    let phase_a = principal_phase(plant, f64::from(pair.a) * omega0)?;
    let phase_b = principal_phase(plant, f64::from(pair.b) * omega0)?;
    let gap = (f64::from(pair.b) * phase_a - f64::from(pair.a) * phase_b).abs()
        / (f64::from(pair.a) + f64::from(pair.b) - p);
    Ok(ViolationCertificate { pair, omega0, p, gap, phase_a, phase_b, class })
}

/// Search one coprime pair for a violation. Returns a certificate iff the
/// refined maximum of `|normalized_gap|` exceeds `180 + margin` degrees.
pub fn scan_pair(
    plant: &ShiftedPlant,
    pair: CoprimePair,
    class: MultiplierClass,
    config: &CriterionConfig,
) -> Result<Option<ViolationCertificate>, CriterionError> {
    let (omega0, signed) = pair_max_gap(plant, pair, class, config)?;
    if signed.abs() > 180.0 + config.margin {
        Ok(Some(certificate_at(plant, pair, class, omega0)?))
    } else {
        Ok(None)
    }
}

/// All coprime pairs compatible with the enumeration bound
/// `a·theta_max + b·phi_min < p·180`, applied factorwise with the
/// class-dependent `p`; a zero margin leaves that side bounded by the cap
/// alone. Both orderings are emitted distinctly.
pub fn enumerate_pairs(
    profile: &PhaseProfile,
    class: MultiplierClass,
    a_cap: u32,
    b_cap: u32,
) -> Vec<CoprimePair> {
    let mut out = Vec::new();
    for a in 1..=a_cap {
        for b in 1..=b_cap {
            if gcd(a, b) != 1 {
                continue;
            }
            let pair = CoprimePair { a, b };
            let p180 = p_value(pair, class) * 180.0;
            let ok_a = profile.theta_max == 0.0 || f64::from(a) * profile.theta_max < p180;
            let ok_b = profile.phi_min == 0.0 || f64::from(b) * profile.phi_min < p180;
            if ok_a && ok_b {
                out.push(pair);
            }
        }
    }
    out
}

/// Certificates are reported in the orientation with negative signed gap
/// (the plotted `... / (a+b-p)` dropping below -180 deg); `(a, b)` and
/// `(b, a)` witness identical violations, so this only fixes the label.
fn normalize_orientation(
    plant: &ShiftedPlant,
    cert: ViolationCertificate,
) -> Result<ViolationCertificate, CriterionError> {
    let signed = phase_gap(plant, cert.pair, cert.omega0)?;
    if signed > 0.0 {
        Ok(cert.swapped())
    } else {
        Ok(cert)
    }
}

// Larger gap wins; on equal gap smaller a+b, then smaller a.
fn prefer(new: &ViolationCertificate, old: &ViolationCertificate) -> bool {
    if new.gap != old.gap {
        return new.gap > old.gap;
    }
    let (ns, os) = (new.pair.a + new.pair.b, old.pair.a + old.pair.b);
    if ns != os {
        return ns < os;
    }
    new.pair.a < old.pair.a
}

/// Run the full test: profile the plant, enumerate candidate pairs, scan
/// each, and return the certificate with the largest gap (ties: smallest
/// `a + b`, then smallest `a`).
pub fn check_plant(
    plant: &ShiftedPlant,
    class: MultiplierClass,
    config: &CriterionConfig,
) -> Result<Option<ViolationCertificate>, CriterionError> {
    let profile = phase_profile(plant, &config.grid)?;
    let pairs = enumerate_pairs(&profile, class, config.a_cap, config.b_cap);
    let mut best: Option<ViolationCertificate> = None;
    for pair in pairs {
        if let Some(cert) = scan_pair(plant, pair, class, config)? {
            let cert = normalize_orientation(plant, cert)?;
            best = Some(match best.take() {
                None => cert,
                Some(cur) => {
                    if prefer(&cert, &cur) {
                        cert
                    } else {
                        cur
                    }
                }
            });
        }
    }
    Ok(best)
}

/// Result of the critical-slope bisection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSlope {
    /// Midpoint of the final bracket.
    pub k_star: f64,
    /// Certificate from the firing (upper) side of the final bracket.
    pub witness: ViolationCertificate,
    pub k_lo: f64,
    pub k_hi: f64,
}

/// Bisect on the slope `k`, testing `check_plant` on `1/k + sign·G`.
/// Requires the criterion to fire at `k_hi` and stay silent at `k_lo`.
pub fn critical_slope(
    base: &DelayedRational,
    sign: i8,
    class: MultiplierClass,
    k_lo: f64,
    k_hi: f64,
    tol: f64,
    config: &CriterionConfig,
) -> Result<CriticalSlope, CriterionError> {
    assert!(k_lo < k_hi && tol > 0.0, "invalid bracket or tolerance");
    let test = |k: f64| -> Result<Option<ViolationCertificate>, CriterionError> {
        let plant = ShiftedPlant::with_slope(k, sign, base.clone())?;
        check_plant(&plant, class, config)
    };
    let lo_cert = test(k_lo)?;
    let hi_cert = test(k_hi)?;
    if lo_cert.is_some() || hi_cert.is_none() {
        return Err(CriterionError::BracketInvalid {
            k_lo,
            k_hi,
            fires_lo: lo_cert.is_some(),
            fires_hi: hi_cert.is_some(),
        });
    }
    let (mut lo, mut hi) = (k_lo, k_hi);
    let mut witness = hi_cert.expect("checked above");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match test(mid)? {
            Some(cert) => {
                hi = mid;
                witness = cert;
            }
            None => lo = mid,
        }
    }
    Ok(CriticalSlope { k_star: 0.5 * (lo + hi), witness, k_lo: lo, k_hi: hi })
}

/// Forbidden phase band at frequency `(b/a)·ω_a` implied by a plant phase
/// above 90 deg at `ω_a`: the interval `(-180, -180 + (p·180 - b·φ)/a)` with
/// `φ = 180 - phase_at_wa`, empty when `p·180 - b·φ <= 0`.
pub fn forbidden_band(
    phase_at_wa: f64,
    pair: CoprimePair,
    class: MultiplierClass,
) -> Result<Option<(f64, f64)>, CriterionError> {
    if phase_at_wa <= 90.0 {
        return Err(CriterionError::OutOfRange { phase: phase_at_wa });
    }
    let phi = 180.0 - phase_at_wa;
    let width = (p_value(pair, class) * 180.0 - f64::from(pair.b) * phi) / f64::from(pair.a);
    if width <= 0.0 {
        Ok(None)
    } else {
        Ok(Some((-180.0, -180.0 + width)))
    }
}

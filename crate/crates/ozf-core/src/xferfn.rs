//! Delayed rational transfer functions, affine plant expressions and
//! principal-phase computation.
//!
//! Everything downstream (criterion scans, duality certificates, suitability
//! checks) evaluates plants through this module. Phases are reported in
//! degrees on `(-180, 180]` and are never unwrapped across frequencies.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;

/// Absolute magnitude floor below which a denominator or response is treated
/// as vanishing.
pub const MAGNITUDE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum XferError {
    #[error("denominator magnitude below {MAGNITUDE_FLOOR:e} at omega = {omega}")]
    DegeneratePlant { omega: f64 },
    #[error("response magnitude below {MAGNITUDE_FLOOR:e} at omega = {omega}; phase undefined")]
    ZeroResponse { omega: f64 },
    #[error("empty modulo interval [{lo}, {hi})")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
}

/// Evaluate a real-coefficient polynomial (descending powers) at a complex point.
pub fn polyval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

/// Rational transfer function with dead time: `e^{-delay·s}·num(s)/den(s)`,
/// coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedRational {
    num: Vec<f64>,
    den: Vec<f64>,
    #[serde(default)]
    delay: f64,
}

impl DelayedRational {
    pub fn new(num: Vec<f64>, den: Vec<f64>, delay: f64) -> Result<Self, XferError> {
        if den.is_empty() || den[0] == 0.0 {
            return Err(XferError::InvalidPlant(
                "denominator must be nonempty with nonzero leading coefficient".into(),
            ));
        }
        if num.is_empty() {
            return Err(XferError::InvalidPlant("numerator must be nonempty".into()));
        }
        if !(delay >= 0.0) {
            return Err(XferError::InvalidPlant(format!("delay must be >= 0, got {delay}")));
        }
        Ok(DelayedRational { num, den, delay })
    }

    /// Rational part without dead time.
    pub fn rational(num: Vec<f64>, den: Vec<f64>) -> Result<Self, XferError> {
        Self::new(num, den, 0.0)
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// `e^{-jωτ}·num(jω)/den(jω)`.
    pub fn eval(&self, omega: f64) -> Result<Complex64, XferError> {
        let s = Complex64::new(0.0, omega);
        let den = polyval(&self.den, s);
        if den.norm() < MAGNITUDE_FLOOR {
            return Err(XferError::DegeneratePlant { omega });
        }
        let mut value = polyval(&self.num, s) / den;
        if self.delay != 0.0 {
            value *= Complex64::from_polar(1.0, -omega * self.delay);
        }
        Ok(value)
    }
}

/// Affine plant expression `offset + sign·G`, the `1/k ± G` used throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedPlant {
    pub offset: f64,
    /// Feedback convention, +1 or -1.
    pub sign: i8,
    pub base: DelayedRational,
}

impl ShiftedPlant {
    pub fn new(offset: f64, sign: i8, base: DelayedRational) -> Result<Self, XferError> {
        if sign != 1 && sign != -1 {
            return Err(XferError::InvalidPlant(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(ShiftedPlant { offset, sign, base })
    }

    /// The bare plant: offset 0, sign +1.
    pub fn bare(base: DelayedRational) -> Self {
        ShiftedPlant { offset: 0.0, sign: 1, base }
    }

    /// `1/k + sign·G` for a slope restriction `k`.
    pub fn with_slope(k: f64, sign: i8, base: DelayedRational) -> Result<Self, XferError> {
        if !(k > 0.0) {
            return Err(XferError::InvalidPlant(format!("slope k must be > 0, got {k}")));
        }
        Self::new(1.0 / k, sign, base)
    }
}

/// `offset + sign·e^{-jωτ}·num(jω)/den(jω)`.
pub fn eval(plant: &ShiftedPlant, omega: f64) -> Result<Complex64, XferError> {
    let g = plant.base.eval(omega)?;
    Ok(plant.offset + f64::from(plant.sign) * g)
}

/// Principal argument of the plant response, degrees in `(-180, 180]`.
pub fn principal_phase(plant: &ShiftedPlant, omega: f64) -> Result<f64, XferError> {
    let v = eval(plant, omega)?;
    if v.norm() < MAGNITUDE_FLOOR {
        return Err(XferError::ZeroResponse { omega });
    }
    let mut deg = v.im.atan2(v.re).to_degrees();
    // atan2 maps (-0.0, x<0) to -180 exactly; keep the range half-open.
    if deg <= -180.0 {
        deg += 360.0;
    }
    Ok(deg)
}

/// Pointwise principal phases over a grid plus the `phi_min`/`theta_max`
/// margins used to bound the coprime-pair enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub omegas: Vec<f64>,
    /// Degrees in `(-180, 180]`.
    pub phases: Vec<f64>,
    /// `180 - max(phases)`, clamped below at 0.
    pub phi_min: f64,
    /// `180 + min(phases)`, clamped below at 0.
    pub theta_max: f64,
}

/// Evaluate the principal phase on every grid point.
pub fn phase_profile(plant: &ShiftedPlant, grid: &GridSpec) -> Result<PhaseProfile, XferError> {
    let omegas: Vec<f64> = grid.points().collect();
    #[cfg(feature = "parallel")]
    let phases: Vec<f64> = {
        use rayon::prelude::*;
        omegas
            .par_iter()
            .map(|&w| principal_phase(plant, w))
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let phases: Vec<f64> = omegas
        .iter()
        .map(|&w| principal_phase(plant, w))
        .collect::<Result<_, _>>()?;

    let max = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = phases.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PhaseProfile {
        omegas,
        phases,
        phi_min: (180.0 - max).max(0.0),
        theta_max: (180.0 + min).max(0.0),
    })
}

/// `y` modulo the interval `[z, w)`: the unique `x` in `[z, w)` with
/// `y = x + n·(w - z)` for an integer `n`.
pub fn modulo_interval(y: f64, z: f64, w: f64) -> Result<f64, XferError> {
    if !(w > z) {
        return Err(XferError::EmptyInterval { lo: z, hi: w });
    }
    let span = w - z;
    let mut x = y - span * ((y - z) / span).floor();
    // Guard the half-open bound against rounding.
    if x >= w {
        x -= span;
    }
    if x < z {
        x = z;
    }
    Ok(x)
}

/// On-disk plant description. Coefficients in descending powers of `s`,
/// angles in degrees at this boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantRecord {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    #[serde(default)]
    pub delay: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_sign")]
    pub sign: i8,
}

fn default_sign() -> i8 {
    1
}

impl PlantRecord {
    pub fn to_plant(&self) -> Result<ShiftedPlant, XferError> {
        let base = DelayedRational::new(self.num.clone(), self.den.clone(), self.delay)?;
        ShiftedPlant::new(self.offset, self.sign, base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    use crate::plants::{jonsson_laiou, oshea, third_order_delay};

    fn constant(c: f64) -> ShiftedPlant {
        ShiftedPlant::bare(DelayedRational::rational(vec![c], vec![1.0]).unwrap())
    }

    fn integrator() -> ShiftedPlant {
        ShiftedPlant::bare(DelayedRational::rational(vec![1.0], vec![1.0, 0.0]).unwrap())
    }

    #[test]
    fn eval_constant_plant() {
        let v = eval(&constant(1.0), 7.0).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn eval_integrator_quarter_turn() {
        let v = eval(&integrator(), 1.0).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(principal_phase(&integrator(), 1.0).unwrap(), -90.0, epsilon = 1e-12);
    }

    #[test]
    fn eval_example1_against_direct_oracle() {
        // Independent oracle: evaluate numerator/denominator termwise at s = j,
        // no Horner, no shared code path.
        let (alpha, beta) = (0.9997, 9.0039);
        let s = Complex64::new(0.0, 1.0);
        let den = (s * s + alpha) * (s * s + beta) + 1e-4 * (14.0 * s * s * s + 21.0 * s);
        let oracle = s * s / den;
        assert_relative_eq!(den.re, -0.00240117, max_relative = 1e-6);
        assert_relative_eq!(den.im, 7e-4, max_relative = 1e-12);

        let got = eval(&ShiftedPlant::bare(jonsson_laiou()), 1.0).unwrap();
        assert_relative_eq!(got.re, oracle.re, max_relative = 1e-12);
        assert_relative_eq!(got.im, oracle.im, max_relative = 1e-12);
        // Frozen from the oracle.
        assert_relative_eq!(got.re, 383.8422106725, max_relative = 1e-9);
        assert_relative_eq!(got.im, 111.8994271421, max_relative = 1e-9);
    }

    #[test]
    fn phase_of_constant_and_offset() {
        assert_eq!(principal_phase(&constant(1.0), 3.0).unwrap(), 0.0);
        let p = ShiftedPlant::new(0.5, -1, DelayedRational::rational(vec![1.0], vec![1.0]).unwrap())
            .unwrap();
        // 0.5 - 1 = -0.5 -> 180 degrees
        assert_eq!(principal_phase(&p, 1.0).unwrap(), 180.0);
    }

    #[test]
    fn example2_phase_at_reported_point() {
        // Fig. caption: phase of 1/k+G at omega_a = 0.3938 is 149.42 degrees, k = 32.61.
        let plant = ShiftedPlant::with_slope(32.61, 1, oshea(0.25)).unwrap();
        let ph = principal_phase(&plant, 0.3938).unwrap();
        assert_abs_diff_eq!(ph, 149.42, epsilon = 0.1);
    }

    #[test]
    fn profile_constant_plant() {
        let grid = GridSpec::log(1e-2, 1e2, 41);
        let prof = phase_profile(&constant(1.0), &grid).unwrap();
        assert!(prof.phases.iter().all(|&p| p == 0.0));
        assert_eq!(prof.phi_min, 180.0);
        assert_eq!(prof.theta_max, 180.0);
    }

    #[test]
    fn profile_first_order_lag_matches_arctan() {
        let lag = ShiftedPlant::bare(DelayedRational::rational(vec![1.0], vec![1.0, 1.0]).unwrap());
        let grid = GridSpec::log(0.01, 100.0, 201);
        let prof = phase_profile(&lag, &grid).unwrap();
        for (w, p) in prof.omegas.iter().zip(&prof.phases) {
            let expect = (-w).atan().to_degrees();
            assert_abs_diff_eq!(*p, expect, epsilon = 1e-10);
            assert!(*p > -90.0 && *p < 0.0);
        }
        assert!(prof.phi_min > 90.0);
        assert!(prof.theta_max > 90.0);
    }

    #[test]
    fn profile_example2_above_threshold_on_interval() {
        // Phase of bare G stays above 177.98 degrees on [0.02249, 0.03511]
        // and below -177.98 on the reciprocal interval.
        let plant = ShiftedPlant::bare(oshea(0.25));
        let grid = GridSpec::log(1e-3, 1e3, 4001);
        let prof = phase_profile(&plant, &grid).unwrap();
        let mut seen = 0;
        for (w, p) in prof.omegas.iter().zip(&prof.phases) {
            if (0.02249..=0.03511).contains(w) {
                assert!(*p > 177.98, "phase {p} at {w}");
                seen += 1;
            }
            if (1.0 / 0.03511..=1.0 / 0.02249).contains(w) {
                assert!(*p < -177.98, "phase {p} at {w}");
            }
        }
        assert!(seen > 10, "grid must resolve the interval, saw {seen} points");
    }

    #[test]
    fn profile_grid_convergence() {
        let plant = ShiftedPlant::bare(oshea(0.25));
        let coarse = phase_profile(&plant, &GridSpec::log(1e-3, 1e3, 4001)).unwrap();
        let fine = phase_profile(&plant, &GridSpec::log(1e-3, 1e3, 8001)).unwrap();
        let finer = phase_profile(&plant, &GridSpec::log(1e-3, 1e3, 16001)).unwrap();
        let d1 = (coarse.phi_min - fine.phi_min).abs();
        let d2 = (fine.phi_min - finer.phi_min).abs();
        assert!(d2 < d1 + 1e-12, "phi_min not converging: {d1} vs {d2}");
        assert!(d2 < 0.05);
    }

    #[test]
    fn zero_delay_unity_ratio_has_zero_phase() {
        let p = ShiftedPlant::bare(
            DelayedRational::rational(vec![2.0, 1.0], vec![2.0, 1.0]).unwrap(),
        );
        for w in GridSpec::log(1e-3, 1e3, 101).points() {
            assert_abs_diff_eq!(principal_phase(&p, w).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn modulo_interval_cases() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(
            modulo_interval(2.5 * PI, 0.0, 2.0 * PI).unwrap(),
            0.5 * PI,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            modulo_interval(-0.5, 0.0, 2.0 * PI).unwrap(),
            2.0 * PI - 0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(modulo_interval(PI, -PI / 2.0, PI / 2.0).unwrap(), 0.0, epsilon = 1e-12);
        assert!(matches!(
            modulo_interval(1.0, 2.0, 2.0),
            Err(XferError::EmptyInterval { .. })
        ));
    }

    #[test]
    fn conjugate_symmetry() {
        // eval at omega equals the conjugate of the formula evaluated at -omega,
        // checked by direct evaluation of the conjugate expression.
        let plant = ShiftedPlant::new(0.01, -1, third_order_delay()).unwrap();
        for w in [0.1, 0.7, 1.3, 9.0] {
            let v = eval(&plant, w).unwrap();
            let s = Complex64::new(0.0, -w);
            let g = (Complex64::from_polar(1.0, w * 1.0))
                * polyval(plant.base.num(), s)
                / polyval(plant.base.den(), s);
            let neg = plant.offset + f64::from(plant.sign) * g;
            assert_relative_eq!(v.re, neg.re, max_relative = 1e-12);
            assert_relative_eq!(v.im, -neg.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn principal_phase_never_minus_180() {
        // A response on the negative real axis must report +180.
        let p = constant(-1.0);
        for w in [0.1, 1.0, 10.0] {
            assert_eq!(principal_phase(&p, w).unwrap(), 180.0);
        }
    }

    #[test]
    fn degenerate_and_zero_errors() {
        let p = integrator();
        // 1/s at omega ~ 0 is huge but defined; den = s so omega=0 degenerates.
        assert!(matches!(
            eval(&p, 0.0),
            Err(XferError::DegeneratePlant { .. })
        ));
        assert!(matches!(
            principal_phase(&constant(0.0), 1.0),
            Err(XferError::ZeroResponse { .. })
        ));
    }

    #[test]
    fn plant_record_roundtrip() {
        let rec: PlantRecord = serde_json::from_str(
            r#"{"num":[1,0,0],"den":[1,1.2,1.12,0.32],"delay":1.0,"offset":0.5,"sign":1}"#,
        )
        .unwrap();
        let plant = rec.to_plant().unwrap();
        assert_eq!(plant.offset, 0.5);
        let back = serde_json::to_string(&rec).unwrap();
        let rec2: PlantRecord = serde_json::from_str(&back).unwrap();
        assert_eq!(rec2.to_plant().unwrap(), plant);
    }
}

//! Frequency-interval thresholds on the multiplier phase and their
//! zero-width limits.
//!
//! For intervals `[α,β]`, `[γ,δ]` the threshold is
//! `ρc = sup_{t>0} |ψ(t)|/φ(t)` with the weight ratio pinned to
//! `λ/μ = (δ²-γ²)/(β²-α²)`. Shrinking the intervals onto `a·ω0`, `b·ω0`
//! collapses the ratio to `q∓(t)` and `ρ̄c = sup_t |q∓(t)|`; the phase
//! functions `r∓(t) = b·arctan q∓ + a·arctan κq∓` peak exactly at the
//! two-frequency phase bounds, which is the equivalence this module probes
//! numerically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criterion::CoprimePair;
use crate::grid::{self, GridSpec};

use std::f64::consts::PI;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntervalError {
    #[error("invalid interval problem: {0}")]
    InvalidProblem(String),
    #[error("denominator {value} is not positive at t = {t}")]
    NonpositiveDenominator { t: f64, value: f64 },
    #[error("equivalence assertion failed for {what}: expected {expected}, found {found}")]
    EquivalenceMismatch { what: &'static str, expected: f64, found: f64 },
}

/// Two frequency intervals `[alpha,beta]`, `[gamma,delta]` with the slope
/// weight `kappa` and multipliers `lambda`, `mu` obeying
/// `lambda/mu = (delta^2-gamma^2)/(beta^2-alpha^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalProblem {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl IntervalProblem {
    /// Build with explicit weights; validates ordering and the ratio.
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        kappa: f64,
        lambda: f64,
        mu: f64,
    ) -> Result<Self, IntervalError> {
        if !(0.0 < alpha && alpha < beta && beta < gamma && gamma < delta) {
            return Err(IntervalError::InvalidProblem(format!(
                "need 0 < alpha < beta < gamma < delta, got {alpha}, {beta}, {gamma}, {delta}"
            )));
        }
        if !(kappa > 0.0 && lambda > 0.0 && mu > 0.0) {
            return Err(IntervalError::InvalidProblem(
                "kappa, lambda, mu must be positive".into(),
            ));
        }
        let want = (delta * delta - gamma * gamma) / (beta * beta - alpha * alpha);
        let got = lambda / mu;
        if ((got - want) / want).abs() > 1e-9 {
            return Err(IntervalError::InvalidProblem(format!(
                "lambda/mu = {got} but (delta^2-gamma^2)/(beta^2-alpha^2) = {want}"
            )));
        }
        Ok(IntervalProblem { alpha, beta, gamma, delta, kappa, lambda, mu })
    }

    /// Build from the intervals alone, choosing the canonical weights
    /// `lambda = delta^2 - gamma^2`, `mu = beta^2 - alpha^2`.
    pub fn from_intervals(
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        kappa: f64,
    ) -> Result<Self, IntervalError> {
        let lambda = delta * delta - gamma * gamma;
        let mu = beta * beta - alpha * alpha;
        Self::new(alpha, beta, gamma, delta, kappa, lambda, mu)
    }

    /// Shrinking intervals of half-width `eps` around `a·omega0` and `b·omega0`.
    pub fn shrinking(
        pair: CoprimePair,
        omega0: f64,
        eps: f64,
        kappa: f64,
    ) -> Result<Self, IntervalError> {
        let (a, b) = (f64::from(pair.a().min(pair.b())), f64::from(pair.a().max(pair.b())));
        Self::from_intervals(
            a * omega0 - eps,
            a * omega0 + eps,
            b * omega0 - eps,
            b * omega0 + eps,
            kappa,
        )
    }

    pub fn psi(&self, t: f64) -> f64 {
        (self.lambda * (self.alpha * t).cos() - self.lambda * (self.beta * t).cos()
            - self.mu * (self.gamma * t).cos()
            + self.mu * (self.delta * t).cos())
            / t
    }

    pub fn phi_1(&self, t: f64) -> f64 {
        (self.lambda * (self.alpha * t).sin() - self.lambda * (self.beta * t).sin()
            + self.kappa * self.mu * (self.gamma * t).sin()
            - self.kappa * self.mu * (self.delta * t).sin())
            / t
    }

    fn phi_const(&self) -> f64 {
        self.lambda * (self.beta - self.alpha) + self.kappa * self.mu * (self.delta - self.gamma)
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.phi_const() + self.phi_1(t)
    }

    pub fn phi_tilde(&self, t: f64) -> f64 {
        self.phi_const() - self.phi_1(t).abs()
    }

    /// Default truncated `t` range: `(0, 100·2π/alpha]`, sampled densely
    /// enough to resolve the fastest oscillation `e^{j·delta·t}`.
    pub fn default_t_grid(&self) -> GridSpec {
        let t_max = 100.0 * 2.0 * PI / self.alpha;
        let per_period = 64.0;
        let n = ((t_max * self.delta / (2.0 * PI)) * per_period).ceil() as usize;
        let n = n.clamp(10_000, 2_000_000);
        GridSpec::linear(t_max / (n as f64), t_max, n)
    }
}

/// Supremum location and value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSup {
    pub value: f64,
    pub arg_t: f64,
}

fn rho_sup<F>(problem: &IntervalProblem, grid: &GridSpec, denom: F) -> Result<RhoSup, IntervalError>
where
    F: Fn(&IntervalProblem, f64) -> f64 + Sync,
{
    // Validate positivity of the sampled denominator first; the ratio scan
    // then runs infallibly.
    let worst = grid::scan_max(grid, |t| -denom(problem, t));
    if -worst.value <= 0.0 {
        return Err(IntervalError::NonpositiveDenominator { t: worst.x, value: -worst.value });
    }
    let objective = |t: f64| (problem.psi(t) / denom(problem, t)).abs();
    let (arg_t, value) = grid::supremum(grid, objective);
    Ok(RhoSup { value, arg_t })
}

/// `ρc = sup_t |ψ(t)|/φ(t)` over the sampled range.
pub fn rho_c(problem: &IntervalProblem, t_grid: &GridSpec) -> Result<RhoSup, IntervalError> {
    rho_sup(problem, t_grid, IntervalProblem::phi)
}

/// Odd-class variant with `φ̃(t) = λ(β-α) + κμ(δ-γ) - |φ1(t)|`.
pub fn rho_c_odd(problem: &IntervalProblem, t_grid: &GridSpec) -> Result<RhoSup, IntervalError> {
    rho_sup(problem, t_grid, IntervalProblem::phi_tilde)
}

const BRANCH_TOL: f64 = 1e-12;
const DENOM_GUARD: f64 = 1e-10;

fn dist_to_multiple(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    r.min(period - r)
}

/// Signed distance from `t` to the nearest multiple of `2π`.
fn signed_dist_to_2pi_multiple(t: f64) -> f64 {
    let k = (t / (2.0 * PI)).round();
    t - 2.0 * PI * k
}

/// `q-(t) = (b sin at - a sin bt) / (b + κa - b cos at - κa cos bt)`, with
/// the branch value 0 at multiples of π and a series guard where the
/// denominator vanishes to second order.
pub fn q_minus(t: f64, pair: CoprimePair, kappa: f64) -> f64 {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    if dist_to_multiple(t, PI) < BRANCH_TOL {
        return 0.0;
    }
    let den = b + kappa * a - b * (a * t).cos() - kappa * a * (b * t).cos();
    if den.abs() < DENOM_GUARD {
        // Removable singularity at multiples of 2π: q- ~ s (b²-a²)/(3(a+κb)).
        let s = signed_dist_to_2pi_multiple(t);
        return s * (b * b - a * a) / (3.0 * (a + kappa * b));
    }
    (b * (a * t).sin() - a * (b * t).sin()) / den
}

/// `q+(t)` with the `+` signs in the denominator.
pub fn q_plus(t: f64, pair: CoprimePair, kappa: f64) -> f64 {
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    if dist_to_multiple(t, PI) < BRANCH_TOL {
        return 0.0;
    }
    let den = b + kappa * a + b * (a * t).cos() + kappa * a * (b * t).cos();
    if den.abs() < DENOM_GUARD {
        // Both-odd pairs vanish to second order at odd multiples of π:
        // q+ ~ -s (b²-a²)/(3(a+κb)) around t* = (2m+1)π.
        let k = ((t - PI) / (2.0 * PI)).round();
        let s = t - (2.0 * k + 1.0) * PI;
        return -s * (b * b - a * a) / (3.0 * (a + kappa * b));
    }
    (b * (a * t).sin() - a * (b * t).sin()) / den
}

/// `r-(t) = b arctan q-(t) + a arctan κ q-(t)` (radians).
pub fn r_minus(t: f64, pair: CoprimePair, kappa: f64) -> f64 {
    let q = q_minus(t, pair, kappa);
    f64::from(pair.b()) * q.atan() + f64::from(pair.a()) * (kappa * q).atan()
}

/// `r+(t) = b arctan q+(t) + a arctan κ q+(t)` (radians).
pub fn r_plus(t: f64, pair: CoprimePair, kappa: f64) -> f64 {
    let q = q_plus(t, pair, kappa);
    f64::from(pair.b()) * q.atan() + f64::from(pair.a()) * (kappa * q).atan()
}

const SUP_GRID_N: usize = 200_000;

fn period_grid() -> GridSpec {
    let p = 2.0 * PI;
    GridSpec::linear(p / (SUP_GRID_N as f64), p, SUP_GRID_N)
}

/// `ρ̄c = sup_{t>0} |q-(t)|` (one period suffices).
pub fn rho_bar(pair: CoprimePair, kappa: f64) -> RhoSup {
    let (arg_t, value) = grid::supremum(&period_grid(), |t| q_minus(t, pair, kappa).abs());
    RhoSup { value, arg_t }
}

/// `ρ̄c_odd = max(sup |q-|, sup |q+|)`.
pub fn rho_bar_odd(pair: CoprimePair, kappa: f64) -> RhoSup {
    let m = rho_bar(pair, kappa);
    let (arg_t, value) = grid::supremum(&period_grid(), |t| q_plus(t, pair, kappa).abs());
    if value > m.value {
        RhoSup { value, arg_t }
    } else {
        m
    }
}

/// Numerical probe of the equivalence theorems for one pair and `kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceProbe {
    pub pair: CoprimePair,
    pub kappa: f64,
    pub rho_bar: f64,
    pub rho_bar_odd: f64,
    /// `sup_t r-(t)`, radians; equals `(a+b-2)·π/2`.
    pub r_minus_sup: f64,
    /// `sup_t r+(t)`, radians; `(a+b-1)·π/2` when a or b is even, else
    /// `(a+b-2)·π/2`.
    pub r_plus_sup: f64,
    /// `b arctan q̄† + a arctan κq̄†`, the case-2 turning-point bound.
    pub r_dagger_bar: f64,
    /// `(b²-a²) / (2√(ab(a+κb)(b+κa)))` for `b > a`.
    pub q_dagger_bar: f64,
}

/// Closed-form case-2 bound `q̄†` for `b > a`.
pub fn q_dagger_bar(pair: CoprimePair, kappa: f64) -> f64 {
    let a = f64::from(pair.a().min(pair.b()));
    let b = f64::from(pair.a().max(pair.b()));
    (b * b - a * a) / (2.0 * (a * b * (a + kappa * b) * (b + kappa * a)).sqrt())
}

/// `r̄† = b arctan q̄† + a arctan κ q̄†`.
pub fn r_dagger_bar(pair: CoprimePair, kappa: f64) -> f64 {
    let a = f64::from(pair.a().min(pair.b()));
    let b = f64::from(pair.a().max(pair.b()));
    let q = q_dagger_bar(pair, kappa);
    b * q.atan() + a * (kappa * q).atan()
}

const EQUIV_TOL: f64 = 1e-6;

/// Compute the suprema of `r∓` over one period and assert them against the
/// closed-form phase bounds; pairs are normalized so `b >= a`.
pub fn equivalence_probe(pair: CoprimePair, kappa: f64) -> Result<EquivalenceProbe, IntervalError> {
    let pair = if pair.a() <= pair.b() { pair } else { pair.swapped() };
    let (a, b) = (f64::from(pair.a()), f64::from(pair.b()));
    let grid = period_grid();
    let (_, r_minus_sup) = grid::supremum(&grid, |t| r_minus(t, pair, kappa));
    let (_, r_plus_sup) = grid::supremum(&grid, |t| r_plus(t, pair, kappa));

    let expect_minus = (a + b - 2.0) * PI / 2.0;
    if (r_minus_sup - expect_minus).abs() > EQUIV_TOL {
        return Err(IntervalError::EquivalenceMismatch {
            what: "sup r-",
            expected: expect_minus,
            found: r_minus_sup,
        });
    }
    let both_odd = pair.a() % 2 == 1 && pair.b() % 2 == 1;
    let expect_plus = if both_odd { (a + b - 2.0) * PI / 2.0 } else { (a + b - 1.0) * PI / 2.0 };
    if (r_plus_sup - expect_plus).abs() > EQUIV_TOL {
        return Err(IntervalError::EquivalenceMismatch {
            what: "sup r+",
            expected: expect_plus,
            found: r_plus_sup,
        });
    }

    Ok(EquivalenceProbe {
        pair,
        kappa,
        rho_bar: rho_bar(pair, kappa).value,
        rho_bar_odd: rho_bar_odd(pair, kappa).value,
        r_minus_sup,
        r_plus_sup,
        r_dagger_bar: r_dagger_bar(pair, kappa),
        q_dagger_bar: q_dagger_bar(pair, kappa),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(a: u32, b: u32) -> CoprimePair {
        CoprimePair::new(a, b).unwrap()
    }

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn q_minus_trivial_cases() {
        for t in [0.3, 1.0, 2.9, 5.5] {
            assert_abs_diff_eq!(q_minus(t, pair(1, 1), 0.7), 0.0, epsilon = 1e-15);
        }
        // Branch case: t = pi for (2,3), kappa = 1.
        assert_eq!(q_minus(PI, pair(2, 3), 1.0), 0.0);
        // 2pi-periodicity.
        for t in [0.4, 1.9, 4.1] {
            assert_abs_diff_eq!(
                q_minus(t, pair(2, 3), 0.7),
                q_minus(t + 2.0 * PI, pair(2, 3), 0.7),
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(
                q_plus(t, pair(2, 5), 1.3),
                q_plus(t + 2.0 * PI, pair(2, 5), 1.3),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn q_near_singularities_is_finite_and_small() {
        // Near t = 2pi the 0/0 limit is linear in the distance.
        for eps in [1e-7, 1e-6, 1e-5] {
            let v = q_minus(2.0 * PI - eps, pair(2, 3), 1.0);
            assert!(v.abs() < 1e-3, "q- = {v} at 2pi - {eps}");
        }
        // Both odd: q+ has its removable point at odd multiples of pi.
        for eps in [1e-7, 1e-6] {
            let v = q_plus(PI + eps, pair(1, 3), 1.0);
            assert!(v.abs() < 1e-3, "q+ = {v} at pi + {eps}");
        }
    }

    #[test]
    fn rho_bar_reference_values() {
        // Oracle: equivalence sup r- = (a+b-2)*90 deg; dense grid confirms.
        assert_abs_diff_eq!(rho_bar(pair(1, 3), 1.0).value, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(rho_bar(pair(2, 3), 1.0).value, deg(54.0).tan(), epsilon = 1e-4);
        assert_abs_diff_eq!(rho_bar(pair(1, 2), 1.0).value, deg(30.0).tan(), epsilon = 1e-4);
        assert_abs_diff_eq!(rho_bar_odd(pair(1, 2), 1.0).value, deg(60.0).tan(), epsilon = 1e-4);
        // Both odd: the families coincide.
        assert_abs_diff_eq!(rho_bar_odd(pair(1, 3), 1.0).value, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn equivalence_probe_closed_forms() {
        let probe = equivalence_probe(pair(2, 3), 1.0).unwrap();
        // q_dagger = 5 / (2*sqrt(150)), r_dagger = 5*atan(q_dagger); frozen
        // from direct evaluation of the closed form.
        assert_abs_diff_eq!(probe.q_dagger_bar, 5.0 / (2.0 * 150.0_f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(probe.q_dagger_bar, 0.2041241452, epsilon = 1e-9);
        assert_abs_diff_eq!(probe.r_dagger_bar, 1.0067896040, epsilon = 1e-9);
        assert_abs_diff_eq!(probe.r_minus_sup, 1.5 * PI, epsilon = 1e-6);
        // (2,3) has an even member: r+ reaches (a+b-1)*pi/2.
        assert_abs_diff_eq!(probe.r_plus_sup, 2.0 * PI, epsilon = 1e-6);
    }

    #[test]
    fn equivalence_probe_degenerate_pair() {
        let probe = equivalence_probe(pair(1, 1), 0.7).unwrap();
        assert_abs_diff_eq!(probe.r_minus_sup, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(probe.rho_bar, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn r_minus_turning_points_land_on_half_pi_ladder() {
        // (3,10): turning points where m-(t) = 0 take values (a+b-2λ)π/2.
        let (a, b, kappa) = (3.0, 10.0, 1.0);
        let p = pair(3, 10);
        let m_minus = |t: f64| {
            (a * t / 2.0).sin() * (b * t / 2.0).cos()
                + kappa * (b * t / 2.0).sin() * (a * t / 2.0).cos()
        };
        // Locate sign changes of m- on a dense grid, bisect, evaluate r-.
        let n = 200_000;
        let mut found = 0;
        for i in 1..n {
            let t0 = 2.0 * PI * (i as f64) / (n as f64);
            let t1 = 2.0 * PI * ((i + 1) as f64) / (n as f64);
            if m_minus(t0) * m_minus(t1) < 0.0 {
                let (mut lo, mut hi) = (t0, t1);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if m_minus(lo) * m_minus(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let t = 0.5 * (lo + hi);
                let r = r_minus(t, p, kappa);
                let ladder = r / (PI / 2.0);
                let nearest = ladder.round();
                assert!(
                    (ladder - nearest).abs() < 1e-4,
                    "r-({t}) = {r} not on the ladder (offset {})",
                    ladder - nearest
                );
                // (a+b-2λ) has the same parity as a+b = 13 (odd).
                assert_eq!((nearest.abs() as i64) % 2, 1, "parity at t = {t}");
                assert!(nearest.abs() <= a + b - 2.0, "bound exceeded at t = {t}");
                found += 1;
            }
        }
        assert!(found >= 10, "expected many turning points, found {found}");
    }

    #[test]
    fn r_minus_case2_bound_holds() {
        // At zeros of n-(t), |r-(t)| <= r_dagger_bar.
        let (a, b) = (2.0, 3.0);
        let p = pair(2, 3);
        for &kappa in &[0.2, 1.0, 5.0] {
            let n_minus = |t: f64| {
                b * (a * t / 2.0).sin() * (b * t / 2.0).cos()
                    - a * (b * t / 2.0).sin() * (a * t / 2.0).cos()
            };
            let bound = r_dagger_bar(p, kappa);
            let n = 100_000;
            for i in 1..n {
                let t0 = 2.0 * PI * (i as f64) / (n as f64);
                let t1 = 2.0 * PI * ((i + 1) as f64) / (n as f64);
                if n_minus(t0) * n_minus(t1) < 0.0 {
                    let (mut lo, mut hi) = (t0, t1);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if n_minus(lo) * n_minus(mid) <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    let t = 0.5 * (lo + hi);
                    assert!(
                        r_minus(t, p, kappa).abs() <= bound + 1e-9,
                        "case-2 bound violated at t = {t}, kappa = {kappa}"
                    );
                }
            }
        }
    }

    #[test]
    fn r_dagger_bar_nonincreasing_in_kappa() {
        let p = pair(2, 5);
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let kappa = 10f64.powf(-2.0 + 4.0 * (i as f64) / 59.0);
            let v = r_dagger_bar(p, kappa);
            assert!(v <= prev + 1e-12, "r_dagger_bar increased at kappa = {kappa}");
            prev = v;
        }
    }

    #[test]
    fn argmax_of_q_and_r_coincide() {
        // r- is a strictly increasing function of q-, so |q-| and |r-| peak together.
        let p = pair(2, 3);
        let kappa = 1.0;
        let gq = grid::supremum(&period_grid(), |t| q_minus(t, p, kappa).abs()).0;
        let gr = grid::supremum(&period_grid(), |t| r_minus(t, p, kappa).abs()).0;
        assert_abs_diff_eq!(
            q_minus(gq, p, kappa).abs(),
            q_minus(gr, p, kappa).abs(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn rho_c_small_t_ratio_vanishes() {
        // The weight ratio cancels the O(t) term of psi, so |psi|/phi ~ 0.66 t.
        // Probe at moderate t; below ~1e-4 the displayed formulas are
        // cancellation-noise dominated in f64.
        let prob = IntervalProblem::from_intervals(1.0, 2.0, 3.0, 4.0, 1.0).unwrap();
        for t in [1e-3, 1e-2, 0.05] {
            let ratio = (prob.psi(t) / prob.phi(t)).abs();
            assert!(ratio < t, "ratio {ratio} at t = {t}");
        }
    }

    #[test]
    fn rho_c_decreases_with_large_kappa() {
        let prob = IntervalProblem::from_intervals(1.0, 2.0, 3.0, 4.0, 1.0).unwrap();
        let small = rho_c(&prob, &prob.default_t_grid()).unwrap();
        let big_prob = IntervalProblem::from_intervals(1.0, 2.0, 3.0, 4.0, 1e6).unwrap();
        let big = rho_c(&big_prob, &big_prob.default_t_grid()).unwrap();
        assert!(big.value < 1e-3 * small.value.max(1e-6), "kappa -> inf should kill rho_c");
    }

    #[test]
    fn rho_c_odd_dominates_rho_c() {
        let prob = IntervalProblem::from_intervals(0.9, 1.1, 2.9, 3.1, 1.0).unwrap();
        let grid = prob.default_t_grid();
        let plain = rho_c(&prob, &grid).unwrap();
        let odd = rho_c_odd(&prob, &grid).unwrap();
        assert!(odd.value >= plain.value - 1e-12);
    }

    #[test]
    fn shrinking_intervals_approach_rho_bar() {
        // Corollary: rho_bar = lim rho_c; error decreases along eps.
        let p = pair(1, 3);
        let target = rho_bar(p, 1.0).value;
        let mut prev_err = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let prob = IntervalProblem::shrinking(p, 1.0, eps, 1.0).unwrap();
            let got = rho_c(&prob, &prob.default_t_grid()).unwrap().value;
            let err = (got - target).abs();
            assert!(err < prev_err + 1e-12, "error not decreasing at eps = {eps}");
            prev_err = err;
        }
        assert!(prev_err <= 1e-3, "final error {prev_err}");
    }

    #[test]
    fn rho_c_odd_equals_rho_c_when_q_minus_dominates() {
        // (1,3), kappa = 1: sup|q+| = sup|q-|, so the shrinking-interval
        // odd threshold matches the plain one.
        let p = pair(1, 3);
        let prob = IntervalProblem::shrinking(p, 1.0, 1e-4, 1.0).unwrap();
        let grid = prob.default_t_grid();
        let plain = rho_c(&prob, &grid).unwrap().value;
        let odd = rho_c_odd(&prob, &grid).unwrap().value;
        assert_abs_diff_eq!(plain, odd, epsilon = 2e-3);
    }

    #[test]
    fn boundary_point_lies_on_phase_bound() {
        // (arctan rho_bar, -arctan kappa rho_bar) satisfies
        // b*x_a - a*x_b = (a/2 + b/2 - p) * 180 with x_b = -arctan(kappa rho).
        for &(a, b, kappa, class_odd) in
            &[(1u32, 2u32, 1.0, false), (2, 3, 1.0, false), (2, 3, 0.2, false), (1, 2, 5.0, true)]
        {
            let p = pair(a, b);
            let rho = if class_odd { rho_bar_odd(p, kappa).value } else { rho_bar(p, kappa).value };
            let x_a = rho.atan().to_degrees();
            let x_b = -(kappa * rho).atan().to_degrees();
            let pv = if class_odd && (a % 2 == 0 || b % 2 == 0) { 0.5 } else { 1.0 };
            let lhs = f64::from(b) * x_a - f64::from(a) * x_b;
            let rhs = (f64::from(a) / 2.0 + f64::from(b) / 2.0 - pv) * 180.0;
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-3);
        }
    }

    #[test]
    fn invalid_problem_rejected() {
        assert!(IntervalProblem::from_intervals(2.0, 1.0, 3.0, 4.0, 1.0).is_err());
        assert!(IntervalProblem::new(1.0, 2.0, 3.0, 4.0, 1.0, 1.0, 1.0).is_err());
    }
}

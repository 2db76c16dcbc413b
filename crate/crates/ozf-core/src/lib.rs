//! Frequency-domain certificates that no suitable O'Shea-Zames-Falb
//! multiplier exists for a given continuous-time plant.
//!
//! The crate tests the two-frequency phase condition
//! `|b∠G(a·jω0) - a∠G(b·jω0)| / (a + b - p) > 180°` over coprime integer
//! pairs, constructs and verifies the underlying duality certificates at
//! pairs of frequencies, computes the equivalent frequency-interval
//! thresholds, verifies candidate multipliers against Re{M·G} > ε, and
//! simulates the Lurye loop with dead time and saturation.
//!
//! Grid scans are data-parallel under the default `parallel` feature
//! (rayon) with a sequential fallback; reductions are deterministic either
//! way.

pub mod criterion;
pub mod duality;
pub mod grid;
pub mod interval;
pub mod luryesim;
pub mod multiplier;
pub mod plants;
pub mod xferfn;

/// Size the global worker pool for grid scans. First call wins; a no-op
/// without the `parallel` feature.
pub fn configure_threads(n: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        Ok(())
    }
}

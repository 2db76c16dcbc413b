//! The three benchmark plants exercised throughout the crate and its test
//! suite, in coefficient form.

use crate::xferfn::DelayedRational;

/// Fourth-order plant `s^2 / ((s^2+alpha)(s^2+beta) + 1e-4 (14 s^3 + 21 s))`
/// with `alpha = 0.9997`, `beta = 9.0039`; used with positive feedback, i.e.
/// shifted as `1/k - G`.
pub fn jonsson_laiou() -> DelayedRational {
    let (alpha, beta) = (0.9997, 9.0039);
    let den = vec![1.0, 14.0e-4, alpha + beta, 21.0e-4, alpha * beta];
    DelayedRational::rational(vec![1.0, 0.0, 0.0], den).expect("static plant")
}

/// O'Shea's plant `s^2 / (s^2 + 2 xi s + 1)^2`; shifted as `1/k + G`.
pub fn oshea(xi: f64) -> DelayedRational {
    let den = vec![1.0, 4.0 * xi, 2.0 + 4.0 * xi * xi, 4.0 * xi, 1.0];
    DelayedRational::rational(vec![1.0, 0.0, 0.0], den).expect("static plant")
}

/// Third-order plant with unit dead time
/// `e^{-s} (s^2 + 0.8 s + 1.5) / (s^3 + 1.2 s^2 + 1.12 s + 0.32)`.
pub fn third_order_delay() -> DelayedRational {
    DelayedRational::new(vec![1.0, 0.8, 1.5], vec![1.0, 1.2, 1.12, 0.32], 1.0)
        .expect("static plant")
}

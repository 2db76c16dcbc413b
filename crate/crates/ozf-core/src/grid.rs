//! Frequency and parameter grids plus the scan-and-refine search used by
//! every supremum/infimum computation in this crate.
//!
//! Scans reduce deterministically: ties between equal values are broken by
//! the smaller grid index, so results do not depend on the number of worker
//! threads.

use serde::{Deserialize, Serialize};

/// A one-dimensional sampling grid, log- or linearly spaced, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "spacing", rename_all = "lowercase")]
pub enum GridSpec {
    Log { min: f64, max: f64, n: usize },
    Linear { min: f64, max: f64, n: usize },
}

impl GridSpec {
    /// Logarithmically spaced grid on `[min, max]`. Requires `0 < min < max` and `n >= 2`.
    pub fn log(min: f64, max: f64, n: usize) -> Self {
        assert!(min > 0.0 && min < max && n >= 2, "invalid log grid");
        GridSpec::Log { min, max, n }
    }

    /// Linearly spaced grid on `[min, max]`. Requires `min < max` and `n >= 2`.
    pub fn linear(min: f64, max: f64, n: usize) -> Self {
        assert!(min < max && n >= 2, "invalid linear grid");
        GridSpec::Linear { min, max, n }
    }

    pub fn n(&self) -> usize {
        match *self {
            GridSpec::Log { n, .. } | GridSpec::Linear { n, .. } => n,
        }
    }

    pub fn min(&self) -> f64 {
        match *self {
            GridSpec::Log { min, .. } | GridSpec::Linear { min, .. } => min,
        }
    }

    pub fn max(&self) -> f64 {
        match *self {
            GridSpec::Log { max, .. } | GridSpec::Linear { max, .. } => max,
        }
    }

    /// The i-th sample, `i` in `0..n`.
    pub fn point(&self, i: usize) -> f64 {
        match *self {
            GridSpec::Linear { min, max, n } => {
                min + (max - min) * (i as f64) / ((n - 1) as f64)
            }
            GridSpec::Log { min, max, n } => {
                let lmin = min.ln();
                let lmax = max.ln();
                (lmin + (lmax - lmin) * (i as f64) / ((n - 1) as f64)).exp()
            }
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n()).map(move |i| self.point(i))
    }
}

/// Best sample of a scan: index, abscissa and value.
#[derive(Debug, Clone, Copy)]
pub struct ScanBest {
    pub index: usize,
    pub x: f64,
    pub value: f64,
}

fn better(a: ScanBest, b: ScanBest) -> ScanBest {
    if b.value > a.value || (b.value == a.value && b.index < a.index) {
        b
    } else {
        a
    }
}

const SEED: ScanBest = ScanBest {
    index: usize::MAX,
    x: f64::NAN,
    value: f64::NEG_INFINITY,
};

/// Maximum of `f` over the grid; deterministic under any thread count.
pub fn scan_max<F>(grid: &GridSpec, f: F) -> ScanBest
where
    F: Fn(f64) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..grid.n())
            .into_par_iter()
            .map(|i| {
                let x = grid.point(i);
                ScanBest { index: i, x, value: f(x) }
            })
            .reduce(|| SEED, better)
    }
    #[cfg(not(feature = "parallel"))]
    {
        scan_max_seq(grid, f)
    }
}

/// Sequential variant of [`scan_max`], kept public for benchmarking both paths.
pub fn scan_max_seq<F>(grid: &GridSpec, f: F) -> ScanBest
where
    F: Fn(f64) -> f64,
{
    let mut best = SEED;
    for i in 0..grid.n() {
        let x = grid.point(i);
        best = better(best, ScanBest { index: i, x, value: f(x) });
    }
    best
}

/// Fallible maximum scan. Errors win over values; among errors the smallest
/// grid index is reported, so the outcome is thread-count independent.
pub fn try_scan_max<F, E>(grid: &GridSpec, f: F) -> Result<ScanBest, E>
where
    F: Fn(f64) -> Result<f64, E> + Sync,
    E: Send,
{
    type Item<E> = Result<ScanBest, (usize, E)>;
    fn combine<E>(a: Item<E>, b: Item<E>) -> Item<E> {
        match (a, b) {
            (Ok(a), Ok(b)) => Ok(better(a, b)),
            (Err(e), Ok(_)) | (Ok(_), Err(e)) => Err(e),
            (Err(e1), Err(e2)) => Err(if e2.0 < e1.0 { e2 } else { e1 }),
        }
    }
    let eval = |i: usize| -> Item<E> {
        let x = grid.point(i);
        match f(x) {
            Ok(v) => Ok(ScanBest { index: i, x, value: v }),
            Err(e) => Err((i, e)),
        }
    };

    #[cfg(feature = "parallel")]
    let folded = {
        use rayon::prelude::*;
        (0..grid.n())
            .into_par_iter()
            .map(eval)
            .reduce(|| Ok(SEED), combine)
    };
    #[cfg(not(feature = "parallel"))]
    let folded = (0..grid.n()).map(eval).fold(Ok(SEED), combine);

    folded.map_err(|(_, e)| e)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization on `[lo, hi]`.
///
/// Returns the best point actually evaluated (probes and both endpoints), so
/// the result is never worse than the inputs even off unimodal brackets.
pub fn golden_max<F>(f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
    }
    best
}

/// Refine a grid maximum: re-grid the bracket spanned by the best point's
/// neighbours with a dense linear zoom, then golden-polish around the zoomed
/// best. Returns `(x, value)`, never below the incoming grid value.
pub fn refine_max<F>(f: F, grid: &GridSpec, best: ScanBest) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let lo = if best.index == 0 { best.x } else { grid.point(best.index - 1) };
    let hi = if best.index + 1 >= grid.n() { best.x } else { grid.point(best.index + 1) };
    if hi <= lo {
        return (best.x, best.value);
    }
    let zoom = GridSpec::linear(lo, hi, 2001);
    let zb = scan_max(&zoom, &f);
    let zlo = if zb.index == 0 { zb.x } else { zoom.point(zb.index - 1) };
    let zhi = if zb.index + 1 >= zoom.n() { zb.x } else { zoom.point(zb.index + 1) };
    let (gx, gv) = if zhi > zlo { golden_max(&f, zlo, zhi, 40) } else { (zb.x, zb.value) };
    let mut out = (best.x, best.value);
    if zb.value > out.1 {
        out = (zb.x, zb.value);
    }
    if gv > out.1 {
        out = (gx, gv);
    }
    out
}

/// Scan plus refinement in one step.
pub fn supremum<F>(grid: &GridSpec, f: F) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    let best = scan_max(grid, &f);
    refine_max(&f, grid, best)
}

//! Small shared helpers: the parallel-map contract, power-law fits and
//! deterministic RNG seeding.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
///
/// Results are returned in input order regardless of scheduling, so the
/// output is a pure function of the inputs (the sweep determinism
/// contract).
#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential map with the same signature as [`par_map`];
/// benchmark baseline and fallback reference.
pub fn seq_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Least-squares fit of `log(y) = a + slope * log(x)`.
///
/// Returns `(slope, intercept, rms_residual)`. Points with
/// non-positive `x` or `y` are rejected by the caller; this routine
/// assumes clean input and panics on fewer than two points.
pub fn fit_powerlaw(points: &[(f64, f64)]) -> (f64, f64, f64) {
    assert!(points.len() >= 2, "power-law fit needs >= 2 points");
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = logs
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Ordinary least-squares slope of `y` against `x` (no logs).
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    assert!(points.len() >= 2, "line fit needs >= 2 points");
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss: f64 = points
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Deterministic RNG from a campaign seed and a set of sub-keys.
///
/// Used everywhere a run needs randomness, so a run's output depends
/// only on its key, never on scheduling.
pub fn rng_for(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s[0..8].copy_from_slice(&seed.to_le_bytes());
    for (i, k) in keys.iter().enumerate().take(3) {
        s[8 + 8 * i..16 + 8 * i].copy_from_slice(&k.to_le_bytes());
    }
    ChaCha8Rng::from_seed(s)
}

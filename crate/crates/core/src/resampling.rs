//! Systematic resampling and effective sample size.

use rand::Rng;

/// `1 / Σ ωᵢ²` for normalised weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        1.0 / s2
    } else {
        0.0
    }
}

/// Systematic resampling: `n` ancestor indices from normalised `weights`
/// using a single uniform offset.
pub fn systematic_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / n as f64;
    let mut u = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut cum = weights.first().copied().unwrap_or(0.0);
    let mut i = 0;
    for _ in 0..n {
        while u >= cum && i + 1 < weights.len() {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
        u += step;
    }
    out
}

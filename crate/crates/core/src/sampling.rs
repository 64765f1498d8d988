//! Categorical draws from unnormalized log weights.

use rand::Rng;

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalized probabilities from log weights; `None` if every weight is −∞.
pub fn softmax(log_weights: &[f64]) -> Option<Vec<f64>> {
    let z = log_sum_exp(log_weights);
    if !z.is_finite() {
        return None;
    }
    Some(log_weights.iter().map(|&w| (w - z).exp()).collect())
}

/// Draws an index with probability ∝ exp(log_weights[i]).
///
/// Returns `None` when no weight is finite. `scratch` is reused across calls
/// to avoid reallocating in the sampler's inner loop.
pub fn sample_log_categorical<R: Rng + ?Sized>(
    log_weights: &[f64],
    scratch: &mut Vec<f64>,
    rng: &mut R,
) -> Option<usize> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    scratch.clear();
    let mut total = 0.0;
    for &w in log_weights {
        total += (w - max).exp();
        scratch.push(total);
    }
    let u = rng.random::<f64>() * total;
    let i = scratch.partition_point(|&c| c <= u);
    // Guard against u landing on the final boundary through rounding, and
    // skip any zero-width slots.
    let mut i = i.min(log_weights.len() - 1);
    while log_weights[i] == f64::NEG_INFINITY && i > 0 {
        i -= 1;
    }
    Some(i)
}

/// Cumulative-table sampler for a fixed discrete distribution.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    cumulative: Vec<f64>,
}

impl CumulativeTable {
    /// `weights` need not be normalized; zero entries are never drawn.
    pub fn new(weights: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut total = 0.0;
        let cumulative: Vec<f64> = weights
            .into_iter()
            .map(|w| {
                total += w.max(0.0);
                total
            })
            .collect();
        (total > 0.0).then_some(CumulativeTable { cumulative })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn frequencies_match_softmax() {
        let w = [0.0, 1.0, 2.0];
        let p = softmax(&w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = [0usize; 3];
        let mut scratch = Vec::new();
        let n = 100_000;
        for _ in 0..n {
            counts[sample_log_categorical(&w, &mut scratch, &mut rng).unwrap()] += 1;
        }
        for i in 0..3 {
            assert!((counts[i] as f64 / n as f64 - p[i]).abs() < 0.01);
        }
    }

    #[test]
    fn neg_infinity_weights_never_drawn() {
        let w = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut scratch = Vec::new();
        for _ in 0..1000 {
            assert_eq!(sample_log_categorical(&w, &mut scratch, &mut rng), Some(1));
        }
        assert_eq!(sample_log_categorical(&[f64::NEG_INFINITY], &mut scratch, &mut rng), None);
    }

    #[test]
    fn shift_invariance() {
        let w = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = w.iter().map(|x| x + 123.0).collect();
        let (a, b) = (softmax(&w).unwrap(), softmax(&shifted).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

//! Small numeric helpers shared by the samplers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub use statrs::function::gamma::ln_gamma;

/// Draws an index with probability proportional to `weights` (all finite, non-negative, not all zero).
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding can leave u marginally above the last cumulative weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Draws from a Dirichlet distribution by normalising Gamma variates.
pub fn sample_dirichlet<R: Rng + ?Sized>(rng: &mut R, concentration: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = concentration
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.iter_mut().for_each(|x| *x /= total);
    } else {
        // All gammas underflowed (tiny concentrations): put the mass on the largest shape.
        let best = concentration
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        draws
            .iter_mut()
            .enumerate()
            .for_each(|(i, x)| *x = (i == best) as u8 as f64);
    }
    draws
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws from N(mean, cov) given the lower Cholesky factor of `cov`.
pub fn sample_mvn<R: Rng + ?Sized>(rng: &mut R, mean: &DVector<f64>, chol_lower: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    mean + chol_lower * z
}

/// Softmax of `(eta, 0)`: the logistic-normal map with the last component as reference.
pub fn softmax_with_reference(eta: &[f64]) -> Vec<f64> {
    let max = eta.iter().copied().fold(0.0f64, f64::max);
    let mut out: Vec<f64> = eta.iter().map(|&e| (e - max).exp()).collect();
    out.push((-max).exp());
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

/// Inverse of [`softmax_with_reference`] for a strictly positive simplex point.
pub fn log_ratio_to_reference(theta: &[f64]) -> Vec<f64> {
    let last = theta[theta.len() - 1].ln();
    theta[..theta.len() - 1].iter().map(|&t| t.ln() - last).collect()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with `n - 1` denominator.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Split-chain potential scale reduction factor. Each chain is cut in half and
/// the halves are treated as separate chains.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let mut halves: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        let n = c.len() / 2;
        if n < 2 {
            return f64::NAN;
        }
        halves.push(&c[..n]);
        halves.push(&c[c.len() - n..]);
    }
    let n = halves[0].len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| mean(h)).collect();
    let within = halves.iter().map(|h| variance(h)).sum::<f64>() / halves.len() as f64;
    let between = n * variance(&means);
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    (var_plus / within).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.0);
        assert_eq!(quantile(&xs, 0.125), 0.5);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn softmax_round_trip() {
        let eta = [0.3, -1.2, 2.0];
        let theta = softmax_with_reference(&eta);
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let back = log_ratio_to_reference(&theta);
        for (a, b) in eta.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rhat_near_one_for_iid_chains() {
        let mut r = rng::stream(1, 0);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2000).map(|_| standard_normal(&mut r)).collect())
            .collect();
        let rhat = split_rhat(&chains);
        assert!((rhat - 1.0).abs() < 0.02, "{rhat}");
    }

    #[test]
    fn rhat_flags_separated_chains() {
        let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 50.0).collect();
        assert!(split_rhat(&[a, b]) > 1.5);
    }

    #[test]
    fn sample_index_respects_zero_weights() {
        let mut r = rng::stream(2, 0);
        for _ in 0..1000 {
            assert_eq!(sample_index(&mut r, &[0.0, 1.0, 0.0]), 1);
        }
    }
}

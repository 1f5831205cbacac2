//! Localization error metrics.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// (1/N)·Σ_i ‖p_i − p̂_i‖², in m².
pub fn lmse(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(estimate.shape(), truth.shape());
    (estimate - truth).norm_squared() / truth.nrows() as f64
}

/// ‖P − W‖²_F / ‖P‖²_F.
pub fn normalized_deviation(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (estimate - truth).norm_squared() / truth.norm_squared()
}

/// Mean normalized deviation across every agent's estimate matrix.
pub fn network_deviation<'a>(estimates: impl IntoIterator<Item = &'a DMatrix<f64>>, truth: &DMatrix<f64>) -> f64 {
    let (sum, count) = estimates
        .into_iter()
        .fold((0.0, 0usize), |(s, c), w| (s + normalized_deviation(w, truth), c + 1));
    sum / count.max(1) as f64
}

/// Largest Frobenius distance between any two estimate matrices.
pub fn max_pairwise_deviation(estimates: &[DMatrix<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, wa) in estimates.iter().enumerate() {
        for wb in &estimates[a + 1..] {
            worst = worst.max((wa - wb).norm());
        }
    }
    worst
}

/// Right-continuous empirical CDF: distinct sorted values with the fraction
/// of samples at or below each.
pub fn empirical_cdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("empirical CDF of an empty sample".into()));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("empirical CDF of a sample containing NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let q = (i + 1) as f64 / n;
        match steps.last_mut() {
            Some(last) if last.0 == v => last.1 = q,
            _ => steps.push((v, q)),
        }
    }
    Ok(steps)
}

/// Evaluate a step CDF produced by [`empirical_cdf`] at `x`.
pub fn cdf_at(steps: &[(f64, f64)], x: f64) -> f64 {
    match steps.partition_point(|&(v, _)| v <= x) {
        0 => 0.0,
        k => steps[k - 1].1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn lmse_examples() {
        let truth = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        assert_eq!(lmse(&truth, &truth), 0.0);
        assert_eq!(lmse(&DMatrix::from_row_slice(1, 2, &[3.0, 4.0]), &truth), 25.0);
    }

    #[test]
    fn deviation_of_truth_is_zero() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(network_deviation([&p, &p, &p], &p), 0.0);
        assert_eq!(max_pairwise_deviation(&[p.clone(), p.clone()]), 0.0);
    }

    #[test]
    fn cdf_examples() {
        let steps = empirical_cdf(&[3.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(cdf_at(&steps, 2.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(cdf_at(&steps, 0.5), 0.0);
        assert_eq!(empirical_cdf(&[5.0; 4]).unwrap(), vec![(5.0, 1.0)]);
        assert!(empirical_cdf(&[]).is_err());
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_ends_at_one(samples in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let steps = empirical_cdf(&samples).unwrap();
            prop_assert!(steps.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
            prop_assert!(steps.iter().all(|&(_, q)| q > 0.0 && q <= 1.0));
            prop_assert_eq!(steps.last().unwrap().1, 1.0);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Location and spread of a vector of estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (denominator `n - 1`; 0 for a single value).
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `(n - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation around `mean`; 0 for fewer than two values.
pub fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn summarize(values: &[f64]) -> Result<EstimateSummary> {
    if values.is_empty() {
        return Err(Error::Argument(
            "cannot summarize an empty estimate vector".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = mean(values);
    Ok(EstimateSummary {
        count: values.len(),
        mean: m,
        std: sample_std(values, m),
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_vector() {
        let s = summarize(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(
            s,
            EstimateSummary {
                count: 3,
                mean: 4.0,
                std: 0.0,
                median: 4.0,
                q1: 4.0,
                q3: 4.0
            }
        );
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(summarize(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn interpolated_quartiles() {
        // positions (n-1)p = 0.75, 1.5, 2.25 on [1, 2, 3, 4]
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q3, 3.25);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn matches_textbook_formulas() {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..1001).map(|_| r.random_range(0.0..20.0)).collect();
        let s = summarize(&v).unwrap();
        // two-pass textbook mean / variance, order statistics directly
        let n = v.len() as f64;
        let m: f64 = v.iter().sum::<f64>() / n;
        let var: f64 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((s.mean - m).abs() <= 1e-12);
        assert!((s.std - var.sqrt()).abs() <= 1e-12);
        // n = 1001: (n-1)p lands on indices 250, 500, 750 exactly
        assert_eq!(s.q1, sorted[250]);
        assert_eq!(s.median, sorted[500]);
        assert_eq!(s.q3, sorted[750]);
    }

    proptest! {
        #[test]
        fn quartiles_ordered(v in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let s = summarize(&v).unwrap();
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
            prop_assert!(s.std >= 0.0);
        }
    }
}

//! Ensemble statistics with order-fixed reductions.

use serde::Serialize;

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Standard error of the mean; zero for fewer than two samples.
    pub se: f64,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN };
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return MeanSe { mean, se: 0.0 };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    MeanSe {
        mean,
        se: (var / n as f64).sqrt(),
    }
}

/// Per-index mean and standard error across equally long series.
pub fn columnwise(series: &[Vec<f64>]) -> Vec<MeanSe> {
    let len = series.first().map_or(0, Vec::len);
    (0..len)
        .map(|k| {
            let col: Vec<f64> = series.iter().map(|s| s[k]).collect();
            mean_se(&col)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope · x + intercept`; `None` below two points
/// or for degenerate abscissae.
pub fn least_squares(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = pairwise_sum(x) / n as f64;
    let my = pairwise_sum(y) / n as f64;
    let sxx: f64 = pairwise_sum(&x.iter().map(|a| (a - mx).powi(2)).collect::<Vec<_>>());
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pairwise_sum(&x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let syy: f64 = pairwise_sum(&y.iter().map(|b| (b - my).powi(2)).collect::<Vec<_>>());
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LinearFit { slope, intercept, r2 })
}

/// Slope of `log err` against `log eps`.
pub fn loglog_fit(eps: &[f64], err: &[f64]) -> Option<LinearFit> {
    if eps.iter().chain(err).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    least_squares(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_and_se_of_small_sample() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[3.0]).se, 0.0);
    }

    #[test]
    fn single_point_has_no_fit() {
        assert!(loglog_fit(&[0.25], &[0.1]).is_none());
    }

    #[test]
    fn exact_power_law_recovers_slope() {
        let eps: Vec<f64> = (2..=6).map(|k| 2f64.powi(-k)).collect();
        for p in [0.5, 0.75, 1.0, 2.0] {
            let err: Vec<f64> = eps.iter().map(|e| 3.7 * e.powf(p)).collect();
            let f = loglog_fit(&eps, &err).unwrap();
            assert!((f.slope - p).abs() < 1e-9);
            assert!((f.intercept - 3.7f64.ln()).abs() < 1e-9);
            assert!((f.r2 - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn pairwise_sum_close_to_naive(xs in proptest::collection::vec(-1e3..1e3f64, 0..200)) {
            let naive: f64 = xs.iter().sum();
            let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-12 * scale);
        }

        #[test]
        fn power_law_fit_any_exponent(p in -1.0..3.0f64, c in 0.01..100.0f64) {
            let eps: [f64; 4] = [0.25, 0.125, 0.0625, 0.03125];
            let err: Vec<f64> = eps.iter().map(|e| c * e.powf(p)).collect();
            let f = loglog_fit(&eps, &err).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-9);
        }
    }
}

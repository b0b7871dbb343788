//! Small sample statistics used by the diagnostics.

use num_complex::Complex64;
use serde::Serialize;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Moment skewness `m3 / m2^1.5` and excess kurtosis `m4 / m2^2 - 3`.
pub fn skew_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mu = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Mean and spread of complex samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexSummary {
    pub mean: Complex64,
    /// `E|X|^2`
    pub second_abs_moment: f64,
    /// `E|X - EX|^2`
    pub variance: f64,
    pub count: usize,
}

impl ComplexSummary {
    pub fn of(xs: &[Complex64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<Complex64>() / n;
        let second_abs_moment = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        let variance = xs.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        Self {
            mean,
            second_abs_moment,
            variance,
            count: xs.len(),
        }
    }

    /// Standard error of the mean, per real coordinate `(re, im)`.
    pub fn mean_std_error(xs: &[Complex64]) -> (f64, f64) {
        let re: Vec<f64> = xs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = xs.iter().map(|z| z.im).collect();
        (std_error(&re), std_error(&im))
    }
}

/// Two-sided Kolmogorov-Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level `alpha` for `n` samples.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

//! Post-processing of urn trajectories: drift towards `v_1`, the projection
//! `W_n = n^{-lambda_2} u_2(G_n)`, and fluctuation diagnostics.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::composition::{CompositionVector, Coordinates};
use crate::error::{Error, Result};
use crate::gamma::ln_gamma_ratio;
use crate::rules::Algorithm;
use crate::spectral::{apply_form_real, SpectrumBundle};
use crate::urnsim::Trajectory;

/// Smallest number of samples accepted by [`gaussian_diagnostic`].
pub const MIN_GAUSSIAN_SAMPLES: usize = 500;
/// Smallest final step accepted by [`oscillation_fit`].
pub const MIN_FIT_N: u64 = 100_000;
/// Largest `m` of the small (Gaussian) phase.
pub const LAST_SMALL_M: usize = 59;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionEntry {
    pub n: u64,
    pub w: Complex64,
    /// `max_k |G_n[k] / n - v_1[k]|`
    pub drift_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionSeries {
    pub m: usize,
    pub seed: u64,
    pub stream: u64,
    pub lambda2: Complex64,
    pub entries: Vec<ProjectionEntry>,
}

impl ProjectionSeries {
    pub fn last(&self) -> Option<&ProjectionEntry> {
        self.entries.last()
    }

    pub fn at(&self, n: u64) -> Option<&ProjectionEntry> {
        self.entries
            .binary_search_by_key(&n, |e| e.n)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// `n^{-lambda}` as `exp(-lambda ln n)`.
pub fn inv_power(n: u64, lambda: Complex64) -> Complex64 {
    (-lambda * (n as f64).ln()).exp()
}

/// `max_k |g[k] / n - v1[k]|`.
pub fn drift_error(counts: &[u64], n: u64, v1: &[f64]) -> f64 {
    counts
        .iter()
        .zip(v1)
        .map(|(&g, &v)| (g as f64 / n as f64 - v).abs())
        .fold(0.0, f64::max)
}

/// Projects every recorded composition with `n >= 1` on the `lambda_2`
/// eigenline.
pub fn project_w(trajectory: &Trajectory, spectrum: &SpectrumBundle) -> Result<ProjectionSeries> {
    let rule = &trajectory.rule;
    if rule.algorithm != Algorithm::Optimistic || rule.m != spectrum.m {
        return Err(Error::InvalidInput(format!(
            "trajectory uses the {} rule with m={}, spectrum is for the optimistic rule with m={}",
            rule.algorithm, rule.m, spectrum.m
        )));
    }
    if trajectory.coords() != Coordinates::Gap {
        return Err(Error::InvalidInput("projection needs gap coordinates".into()));
    }
    let u2 = spectrum.u2();
    let entries = trajectory
        .records
        .iter()
        .filter(|r| r.n >= 1)
        .map(|r| {
            let g: Vec<f64> = r.counts.iter().map(|&c| c as f64).collect();
            ProjectionEntry {
                n: r.n,
                w: inv_power(r.n, spectrum.lambda2) * apply_form_real(u2, &g),
                drift_error: drift_error(&r.counts, r.n, &spectrum.v1),
            }
        })
        .collect::<Vec<_>>();
    if entries.iter().any(|e| !e.w.is_finite()) {
        return Err(Error::NumericFailure {
            branch: "projection".into(),
            iterations: 0,
            residual: f64::NAN,
        });
    }
    Ok(ProjectionSeries {
        m: spectrum.m,
        seed: trajectory.seed,
        stream: trajectory.stream,
        lambda2: spectrum.lambda2,
        entries,
    })
}

/// Limit expectation `Gamma(|PV|) / Gamma(|PV| + lambda_2) u_2(PV)` of
/// `W_n` from the gap composition `initial`.
pub fn expected_w(spectrum: &SpectrumBundle, initial: &CompositionVector) -> Complex64 {
    let k0 = Complex64::new(initial.total() as f64, 0.0);
    let g: Vec<f64> = initial.counts.iter().map(|&c| c as f64).collect();
    (-ln_gamma_ratio(k0, spectrum.lambda2)).exp() * apply_form_real(spectrum.u2(), &g)
}

/// Exact `E W_n` at a finite `n`: the limit value times
/// `Gamma(K_n + lambda_2) / Gamma(K_n) n^{-lambda_2}`.
pub fn expected_w_at(spectrum: &SpectrumBundle, initial: &CompositionVector, n: u64) -> Complex64 {
    let kn = Complex64::new((initial.total() + n) as f64, 0.0);
    expected_w(spectrum, initial) * ln_gamma_ratio(kn, spectrum.lambda2).exp() * inv_power(n, spectrum.lambda2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationFit {
    pub rho: f64,
    pub phi: f64,
    /// RMS misfit divided by `rho`.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `x_n = 2 Re(u_2(G_n)) / n^{sigma_2}` by
/// `rho cos(tau_2 ln n + phi)` over the last decade of the series.
///
/// `x_n` is the real part of the normalized fluctuation along the
/// oscillating eigenline, and equals `2 Re(W_n n^{i tau_2})`.
pub fn oscillation_fit(series: &ProjectionSeries) -> Result<OscillationFit> {
    if series.m <= LAST_SMALL_M {
        return Err(Error::PhaseMismatch(format!(
            "m={} is in the Gaussian phase; the oscillating model needs m >= {}",
            series.m,
            LAST_SMALL_M + 1
        )));
    }
    let n_final = series.last().map_or(0, |e| e.n);
    if n_final < MIN_FIT_N {
        return Err(Error::InvalidInput(format!(
            "series ends at n={n_final}; the fit needs n >= {MIN_FIT_N}"
        )));
    }
    let tau = series.lambda2.im;
    let window: Vec<(f64, f64)> = series
        .entries
        .iter()
        .filter(|e| e.n * 10 >= n_final)
        .map(|e| {
            let t = tau * (e.n as f64).ln();
            let x = 2.0 * (e.w * Complex64::from_polar(1.0, t)).re;
            (t, x)
        })
        .collect();
    if window.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "only {} points in the last decade; record more densely",
            window.len()
        )));
    }
    // normal equations for x = a cos t + b sin t
    let (mut cc, mut cs, mut ss, mut cx, mut sx) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(t, x) in &window {
        let (s, c) = t.sin_cos();
        cc += c * c;
        cs += c * s;
        ss += s * s;
        cx += c * x;
        sx += s * x;
    }
    let det = cc * ss - cs * cs;
    if det.abs() < 1e-12 * (cc * ss).max(1e-300) {
        return Err(Error::NumericFailure {
            branch: "oscillation fit normal equations".into(),
            iterations: 0,
            residual: det,
        });
    }
    let a = (ss * cx - cs * sx) / det;
    let b = (cc * sx - cs * cx) / det;
    let rho = a.hypot(b);
    let phi = (-b).atan2(a).rem_euclid(TAU);
    let mse = window
        .iter()
        .map(|&(t, x)| (x - a * t.cos() - b * t.sin()).powi(2))
        .sum::<f64>()
        / window.len() as f64;
    Ok(OscillationFit {
        rho,
        phi,
        residual: mse.sqrt() / rho,
        points: window.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianDiagnostic {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Checks that skewness and excess kurtosis are within four standard
/// errors (`sqrt(6/N)` and `sqrt(24/N)`) of a normal sample.
pub fn gaussian_diagnostic(samples: &[f64]) -> Result<GaussianDiagnostic> {
    if samples.len() < MIN_GAUSSIAN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "{} samples given, need at least {MIN_GAUSSIAN_SAMPLES}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let (skewness, excess_kurtosis) = crate::stats::skew_kurtosis(samples);
    let pass = skewness.abs() < 4.0 * (6.0 / n).sqrt() && excess_kurtosis.abs() < 4.0 * (24.0 / n).sqrt();
    Ok(GaussianDiagnostic {
        skewness,
        excess_kurtosis,
        pass,
        samples: samples.len(),
    })
}

/// `(G_n[k] - n v_1[k]) / n^{alpha}` for the 0-based coordinate `k`.
pub fn scaled_fluctuation(counts: &[u64], n: u64, v1: &[f64], k: usize, alpha: f64) -> f64 {
    let n_f = n as f64;
    (counts[k] as f64 - n_f * v1[k]) / n_f.powf(alpha)
}

/// `|W_n - W_{2n}|` for each `n` of `ns` present (with `2n`) in the series.
pub fn cauchy_gaps(series: &ProjectionSeries, ns: &[u64]) -> Vec<Option<f64>> {
    ns.iter()
        .map(|&n| match (series.at(n), series.at(2 * n)) {
            (Some(a), Some(b)) => Some((a.w - b.w).norm()),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::compute_spectrum;
    use crate::urnsim::{run_trajectory, RecordSchedule};
    use crate::{make_rule, Algorithm};
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn synthetic(m: usize, rho: f64, phi: f64, n_final: u64) -> ProjectionSeries {
        let spectrum = compute_spectrum(m).unwrap();
        let lambda2 = spectrum.lambda2;
        let mut entries = Vec::new();
        let mut n = 1000u64;
        while n <= n_final {
            // constant W: x_n = 2|W| cos(tau ln n + arg W)
            let w = Complex64::from_polar(rho / 2.0, phi);
            entries.push(ProjectionEntry { n, w, drift_error: 0.0 });
            n = n + n / 50 + 1;
        }
        ProjectionSeries { m, seed: 0, stream: 0, lambda2, entries }
    }

    #[test]
    fn fit_recovers_synthetic_spiral() {
        let fit = oscillation_fit(&synthetic(100, 3.7, 1.2, 2_000_000)).unwrap();
        assert!((fit.rho - 3.7).abs() < 1e-6);
        assert!((fit.phi - 1.2).abs() < 1e-6);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn fit_rejects_small_phase_and_short_series() {
        assert!(matches!(oscillation_fit(&synthetic(59, 1.0, 0.0, 200_000)), Err(Error::PhaseMismatch(_))));
        assert!(matches!(oscillation_fit(&synthetic(60, 1.0, 0.0, 50_000)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn normal_draws_pass() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(gaussian_diagnostic(&xs).unwrap().pass);
        let skewed: Vec<f64> = xs.iter().map(|x: &f64| x.exp()).collect();
        assert!(!gaussian_diagnostic(&skewed).unwrap().pass);
        assert!(gaussian_diagnostic(&xs[..499]).is_err());
    }

    #[test]
    fn first_entry_is_the_raw_projection() {
        let spectrum = compute_spectrum(5).unwrap();
        let rule = Arc::new(make_rule(5, Algorithm::Optimistic).unwrap());
        let t = run_trajectory(&rule, &rule.btree_start(), 10, 3, 0, RecordSchedule::Every(1)).unwrap();
        let s = project_w(&t, &spectrum).unwrap();
        let g: Vec<f64> = t.records[1].counts.iter().map(|&c| c as f64).collect();
        assert_eq!(s.entries[0].n, 1);
        assert!((s.entries[0].w - apply_form_real(spectrum.u2(), &g)).norm() < 1e-12);
    }

    #[test]
    fn mismatched_rule_is_rejected() {
        let spectrum = compute_spectrum(5).unwrap();
        let rule = Arc::new(make_rule(6, Algorithm::Optimistic).unwrap());
        let t = run_trajectory(&rule, &rule.btree_start(), 10, 3, 0, RecordSchedule::Every(1)).unwrap();
        assert!(matches!(project_w(&t, &spectrum), Err(Error::InvalidInput(_))));
        let prudent = Arc::new(make_rule(5, Algorithm::Prudent).unwrap());
        let t = run_trajectory(&prudent, &prudent.btree_start(), 10, 3, 0, RecordSchedule::Every(1)).unwrap();
        assert!(project_w(&t, &spectrum).is_err());
    }

    #[test]
    fn btree_start_expectation() {
        // Gamma(m) / Gamma(m + lambda) * u_2(m e_1) = m! / Gamma(m + lambda)
        let spectrum = compute_spectrum(60).unwrap();
        let rule = make_rule(60, Algorithm::Optimistic).unwrap();
        let e = expected_w(&spectrum, &rule.btree_start());
        let direct = (crate::gamma::ln_gamma(Complex64::new(61.0, 0.0))
            - crate::gamma::ln_gamma(spectrum.lambda2 + 60.0))
        .exp();
        assert!(((e - direct) / direct).norm() < 1e-10);
        // finite-n correction vanishes as n grows
        let far = expected_w_at(&spectrum, &rule.btree_start(), 1 << 40);
        assert!(((far - e) / e).norm() < 1e-9);
        let at0 = expected_w_at(&spectrum, &rule.btree_start(), 1);
        // E W_1 = u_2(G_1) exactly: every first step is a type-1 insertion
        let g1: Vec<f64> = (0..60).map(|k| if k == 1 { 61.0 } else { 0.0 }).collect();
        assert!((at0 - apply_form_real(spectrum.u2(), &g1) * inv_power(1, spectrum.lambda2)).norm() < 1e-9 * at0.norm());
    }
}

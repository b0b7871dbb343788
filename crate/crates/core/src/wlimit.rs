//! The limit laws of the projected martingales: Mandelbrot cascades,
//! moment recursions, the per-type Laplace system, population-dynamics
//! fixed-point iteration and exponential-moment bounds.
//!
//! Continuous time: `W = B^lambda (W' + W'')` with `B ~ Beta(m, m)`.
//! Discrete time: `W = B^lambda W' + (1-B)^lambda W''`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::CompositionVector;
use crate::error::{Error, Result};
use crate::gamma::{ln_gamma, ln_gamma_ratio};
use crate::spectral::{apply_form_real, beta_moment};
use crate::stats::ComplexSummary;
use crate::transport::wasserstein2;
use crate::urnsim::stream_rng;

/// Upper bound on `count * 2^depth` weights drawn by one cascade run.
pub const CASCADE_NODE_BUDGET: u64 = 1 << 34;
pub const DEFAULT_DEPTH: u32 = 15;
const DEGENERATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Continuous time.
    Ct,
    /// Discrete time.
    Dt,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Ct => "ct",
            Variant::Dt => "dt",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ct" => Ok(Variant::Ct),
            "dt" => Ok(Variant::Dt),
            other => Err(Error::InvalidParameter(format!(
                "unknown variant `{other}` (expected ct or dt)"
            ))),
        }
    }
}

fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_contractive(lambda: Complex64) -> Result<()> {
    if lambda.re > 0.5 {
        Ok(())
    } else {
        Err(Error::NonContractive(lambda.re))
    }
}

/// Expectation of the limit for the B-tree start `P e_1`: `m` in continuous
/// time, `m! / Gamma(m + lambda)` in discrete time.
pub fn btree_anchor(variant: Variant, m: usize, lambda: Complex64) -> Complex64 {
    match variant {
        Variant::Ct => c64(m as f64),
        Variant::Dt => (ln_gamma(c64(m as f64 + 1.0)) - ln_gamma(lambda + m as f64)).exp(),
    }
}

/// `E(B^s) = prod_{k=1}^m (m+k-1) / (m+k-1+s)`: the product of the Laplace
/// transforms of the exponential clocks `tau_1, ..., tau_m`.
pub fn clock_product(m: usize, s: Complex64) -> Complex64 {
    (1..=m).fold(c64(1.0), |acc, k| {
        let r = (m + k - 1) as f64;
        acc * r / (s + r)
    })
}

/// `E[B^a (1-B)^b]` for `B ~ Beta(m, m)`.
pub fn beta_joint_moment(m: usize, a: Complex64, b: Complex64) -> Complex64 {
    let mf = c64(m as f64);
    (ln_gamma_ratio(mf, a) + ln_gamma_ratio(mf, b) - ln_gamma_ratio(2.0 * mf, a + b)).exp()
}

/// Contraction coefficient `2 E|B^lambda|^2 = 2 E B^{2 Re lambda}`.
pub fn contraction_coefficient(m: usize, lambda: Complex64) -> f64 {
    2.0 * clock_product(m, c64(2.0 * lambda.re)).re
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Constant `K` of the second-moment recursion `S_{n+1} = c S_n + K` with
/// `S_n = E|Y_n|^2` and `c` the contraction coefficient.
fn second_moment_drive(variant: Variant, m: usize, lambda: Complex64, anchor: Complex64) -> f64 {
    let a2 = anchor.norm_sqr();
    match variant {
        Variant::Ct => contraction_coefficient(m, lambda) * a2,
        Variant::Dt => 2.0 * beta_joint_moment(m, lambda, lambda.conj()).re * a2,
    }
}

/// `E|Y_depth|^2` of the cascade started at `anchor`.
pub fn second_moment_at_depth(variant: Variant, m: usize, lambda: Complex64, anchor: Complex64, depth: u32) -> f64 {
    let c = contraction_coefficient(m, lambda);
    let k = second_moment_drive(variant, m, lambda, anchor);
    let mut s = anchor.norm_sqr();
    for _ in 0..depth {
        s = c * s + k;
    }
    s
}

/// `Var(Y_inf) = E|Y_inf - EY|^2`, the limit of the variance recursion.
/// In continuous time this is `|a|^2 (4E|B^lambda|^2 - 1) / (1 - 2E|B^lambda|^2)`.
pub fn limit_variance(variant: Variant, m: usize, lambda: Complex64, anchor: Complex64) -> Result<f64> {
    check_contractive(lambda)?;
    let c = contraction_coefficient(m, lambda);
    Ok(second_moment_drive(variant, m, lambda, anchor) / (1.0 - c) - anchor.norm_sqr())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WSampleSet {
    pub variant: Variant,
    pub m: usize,
    pub lambda: Complex64,
    pub anchor: Complex64,
    pub depth: u32,
    pub seed: u64,
    pub samples: Vec<Complex64>,
    pub summary: ComplexSummary,
    /// `Var(Y_inf) c^depth`, the squared L^2 distance to the limit.
    pub truncation_bound: f64,
}

impl WSampleSet {
    fn new(
        variant: Variant,
        m: usize,
        lambda: Complex64,
        anchor: Complex64,
        depth: u32,
        seed: u64,
        samples: Vec<Complex64>,
    ) -> Self {
        let summary = ComplexSummary::of(&samples);
        let c = contraction_coefficient(m, lambda);
        let var = limit_variance(variant, m, lambda, anchor).unwrap_or(f64::INFINITY);
        Self {
            variant,
            m,
            lambda,
            anchor,
            depth,
            seed,
            samples,
            summary,
            truncation_bound: var * c.powi(depth as i32),
        }
    }
}

/// Beta(m, m) as `G1 / (G1 + G2)`; returns `(ln B, ln(1 - B))`.
struct BetaLogs {
    gamma: Gamma<f64>,
}

impl BetaLogs {
    fn new(m: usize) -> Self {
        Self {
            gamma: Gamma::new(m as f64, 1.0).expect("shape m >= 2"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let g1 = self.gamma.sample(rng);
        let g2 = self.gamma.sample(rng);
        let ls = (g1 + g2).ln();
        (g1.ln() - ls, g2.ln() - ls)
    }
}

fn cascade_rec(
    variant: Variant,
    lambda: Complex64,
    anchor: Complex64,
    depth: u32,
    beta: &BetaLogs,
    rng: &mut ChaCha8Rng,
) -> Complex64 {
    if depth == 0 {
        return anchor;
    }
    let (lb, lc) = beta.draw(rng);
    let y1 = cascade_rec(variant, lambda, anchor, depth - 1, beta, rng);
    let y2 = cascade_rec(variant, lambda, anchor, depth - 1, beta, rng);
    match variant {
        Variant::Ct => (lambda * lb).exp() * (y1 + y2),
        Variant::Dt => (lambda * lb).exp() * y1 + (lambda * lc).exp() * y2,
    }
}

/// `count` independent draws of the cascade `Y_depth`, seeded per sample.
pub fn cascade_sample(
    variant: Variant,
    m: usize,
    lambda: Complex64,
    anchor: Complex64,
    depth: u32,
    count: usize,
    seed: u64,
) -> Result<WSampleSet> {
    check_contractive(lambda)?;
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let weights = 1u64
        .checked_shl(depth)
        .and_then(|n| n.checked_mul(count as u64))
        .filter(|&n| depth < 63 && n <= CASCADE_NODE_BUDGET);
    if weights.is_none() {
        return Err(Error::Resource(format!(
            "{count} samples at depth {depth} exceed the budget of {CASCADE_NODE_BUDGET} weights"
        )));
    }
    let beta = BetaLogs::new(m);
    let samples: Vec<Complex64> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            cascade_rec(variant, lambda, anchor, depth, &beta, &mut rng)
        })
        .collect();
    Ok(WSampleSet::new(variant, m, lambda, anchor, depth, seed, samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTable {
    pub variant: Variant,
    pub m: usize,
    pub lambda: Complex64,
    pub anchor: Complex64,
    /// `moments[p] = E W^p`.
    pub moments: Vec<Complex64>,
}

fn solve_coefficient(p: usize, weight: Complex64) -> Result<Complex64> {
    let coeff = 1.0 - 2.0 * weight;
    if coeff.norm() < DEGENERATE_TOL {
        return Err(Error::DegenerateCoefficient { p, value: coeff.norm() });
    }
    Ok(coeff)
}

/// Moments `E W^p`, `p = 0..=pmax`, of the solution with mean `anchor`.
pub fn moments_w(variant: Variant, m: usize, lambda: Complex64, anchor: Complex64, pmax: usize) -> Result<MomentTable> {
    check_contractive(lambda)?;
    let mut mu = vec![c64(1.0)];
    if pmax >= 1 {
        mu.push(anchor);
    }
    for p in 2..=pmax {
        let lp = lambda * p as f64;
        let ebp = clock_product(m, lp);
        let coeff = solve_coefficient(p, ebp)?;
        let mut sum = c64(0.0);
        for j in 1..p {
            let w = match variant {
                Variant::Ct => ebp,
                Variant::Dt => beta_joint_moment(m, lambda * j as f64, lambda * (p - j) as f64),
            };
            sum += binomial(p, j) * w * mu[j] * mu[p - j];
        }
        mu.push(sum / coeff);
    }
    Ok(MomentTable {
        variant,
        m,
        lambda,
        anchor,
        moments: mu,
    })
}

/// Mixed moments `M[a][b] = E[W^a conj(W)^b]` for `a + b <= order`.
pub fn mixed_moments(
    variant: Variant,
    m: usize,
    lambda: Complex64,
    anchor: Complex64,
    order: usize,
) -> Result<Vec<Vec<Complex64>>> {
    check_contractive(lambda)?;
    let lc = lambda.conj();
    let mut mm = vec![vec![c64(0.0); order + 1]; order + 1];
    mm[0][0] = c64(1.0);
    if order >= 1 {
        mm[1][0] = anchor;
        mm[0][1] = anchor.conj();
    }
    for deg in 2..=order {
        for a in 0..=deg {
            let b = deg - a;
            let s = lambda * a as f64 + lc * b as f64;
            let eb = clock_product(m, s);
            let coeff = solve_coefficient(deg, eb)?;
            let mut sum = c64(0.0);
            for i in 0..=a {
                for j in 0..=b {
                    if (i == 0 && j == 0) || (i == a && j == b) {
                        continue;
                    }
                    let w = match variant {
                        Variant::Ct => eb,
                        Variant::Dt => beta_joint_moment(
                            m,
                            lambda * i as f64 + lc * j as f64,
                            lambda * (a - i) as f64 + lc * (b - j) as f64,
                        ),
                    };
                    sum += binomial(a, i) * binomial(b, j) * w * mm[i][j] * mm[a - i][b - j];
                }
            }
            mm[a][b] = sum / coeff;
        }
    }
    Ok(mm)
}

/// `E|W|^2` from the mixed recursion.
pub fn second_abs_moment(variant: Variant, m: usize, lambda: Complex64, anchor: Complex64) -> Result<f64> {
    Ok(mixed_moments(variant, m, lambda, anchor, 2)?[1][1].re)
}

/// Per-type moments `E W_k^q`, `k = 1..=m`, `q = 0..=p`, of the
/// continuous-time system `W_k = e^{-lambda tau_k} W_{k+1}` (`k < m`),
/// `W_m = e^{-lambda tau_m} (W_1' + W_1'')`, with `E W_1 = anchor`.
///
/// Returned as `table[k-1][q]`. Each order is obtained by walking the chain
/// down from the closing equation; `E W_1^q` then solves the closure.
pub fn intermediate_moments(m: usize, lambda: Complex64, anchor: Complex64, p: usize) -> Result<Vec<Vec<Complex64>>> {
    check_contractive(lambda)?;
    let mut table = vec![vec![c64(0.0); p + 1]; m];
    for row in table.iter_mut() {
        row[0] = c64(1.0);
    }
    for q in 1..=p {
        let lq = lambda * q as f64;
        // chain factor from type m down to type 1, including the closure clock
        let ratios: Vec<Complex64> = (1..=m)
            .map(|k| {
                let r = (m + k - 1) as f64;
                r / (r + lq)
            })
            .collect();
        let chain: Complex64 = ratios.iter().product();
        let mut cross = c64(0.0);
        for j in 1..q {
            cross += binomial(q, j) * table[0][j] * table[0][q - j];
        }
        let first = if q == 1 {
            anchor
        } else {
            cross * chain / solve_coefficient(q, chain)?
        };
        // closure: E W_m^q = r_m/(r_m + lambda q) (2 E W_1^q + cross)
        table[m - 1][q] = ratios[m - 1] * (2.0 * first + cross);
        for k in (1..m).rev() {
            table[k - 1][q] = ratios[k - 1] * table[k][q];
        }
        if q == 1 {
            // p = 1: the closure is the eigenvalue identity; use the anchor
            // and rebuild the chain upwards so that E W_1 = anchor exactly
            table[0][1] = anchor;
            for k in 1..m {
                table[k][1] = table[k - 1][1] / ratios[k - 1];
            }
        }
    }
    Ok(table)
}

/// Maximal coefficient mismatch, per equation `k = 1..=m`, of the Laplace
/// system `(r_k/lambda) phi_k + z phi_k' = (r_k/lambda) phi_{k+1}` (with
/// `phi_{m+1} = phi_1^2`), `r_k = m+k-1`, as power series through `pmax`.
///
/// Coefficients are `E W_k^p / (p! s^p)` with `s = |E W_1|` (the series in
/// `z / s`), so that mismatches are on a unit scale.
pub fn laplace_residual(m: usize, lambda: Complex64, anchor: Complex64, pmax: usize) -> Result<Vec<f64>> {
    let per_type = intermediate_moments(m, lambda, anchor, pmax)?;
    let first = moments_w(Variant::Ct, m, lambda, anchor, pmax)?;
    laplace_residual_from_tables(m, lambda, &per_type, &first.moments)
}

/// As [`laplace_residual`], from given per-type tables and the moment table
/// of `W_1` used for the square `phi_1^2`.
pub fn laplace_residual_from_tables(
    m: usize,
    lambda: Complex64,
    per_type: &[Vec<Complex64>],
    first: &[Complex64],
) -> Result<Vec<f64>> {
    if per_type.len() != m || per_type.iter().any(|r| r.len() != first.len()) || first.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "expected {m} per-type tables of the same order as the W_1 table"
        )));
    }
    let pmax = first.len() - 1;
    let s = first[1].norm().max(f64::MIN_POSITIVE);
    let scaled = |mu: &[Complex64]| -> Vec<Complex64> {
        let mut fact_pow = 1.0;
        mu.iter()
            .enumerate()
            .map(|(p, &x)| {
                if p > 0 {
                    fact_pow *= p as f64 * s;
                }
                x / fact_pow
            })
            .collect()
    };
    let coeffs: Vec<Vec<Complex64>> = per_type.iter().map(|r| scaled(r)).collect();
    let c1 = scaled(first);
    let square: Vec<Complex64> = (0..=pmax)
        .map(|p| (0..=p).map(|j| c1[j] * c1[p - j]).sum())
        .collect();
    Ok((0..m)
        .map(|k| {
            let rl = (m + k) as f64 / lambda;
            let next = if k + 1 < m { &coeffs[k + 1] } else { &square };
            (0..=pmax)
                .map(|p| {
                    let lhs = rl * coeffs[k][p] + p as f64 * coeffs[k][p];
                    (lhs - rl * next[p]).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixpointConfig {
    pub n_samples: usize,
    pub n_iters: usize,
    /// Points per cloud in the assignment-based distance.
    pub w2_subsample: usize,
    /// Compute the distance every this many iterations.
    pub w2_every: usize,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        Self {
            n_samples: 4096,
            n_iters: 60,
            w2_subsample: 256,
            w2_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixpointResult {
    pub samples: WSampleSet,
    /// `(iteration t, W_2(mu_{t-1}, mu_t))` on subsampled clouds.
    pub distance_trace: Vec<(usize, f64)>,
    /// Per-iteration contraction of the trace, from a log-linear fit over
    /// its second half.
    pub ratio: f64,
    /// `sqrt(2 E|B^lambda|^2)`: the contraction constant of the map.
    pub contraction_bound: f64,
    /// Population mean after each step, before recentring.
    pub raw_means: Vec<Complex64>,
}

fn smoothing_step(
    variant: Variant,
    lambda: Complex64,
    pop: &[Complex64],
    beta: &BetaLogs,
    seed: u64,
    iter: usize,
) -> Vec<Complex64> {
    let n = pop.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, ((iter as u64) << 32) | i as u64);
            let (lb, lc) = beta.draw(&mut rng);
            let a = pop[rng.random_range(0..n)];
            let b = pop[rng.random_range(0..n)];
            match variant {
                Variant::Ct => (lambda * lb).exp() * (a + b),
                Variant::Dt => (lambda * lb).exp() * a + (lambda * lc).exp() * b,
            }
        })
        .collect()
}

fn subsample(pop: &[Complex64], k: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    if k >= pop.len() {
        return pop.to_vec();
    }
    rand::seq::index::sample(rng, pop.len(), k)
        .into_iter()
        .map(|i| pop[i])
        .collect()
}

/// Least-squares slope of `ln d` against `t`, as a per-iteration ratio.
fn log_linear_ratio(trace: &[(usize, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|&(t, d)| (t as f64, d.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxy / sxx).exp()
}

/// Population dynamics for the smoothing map, started from the point mass
/// at `anchor`.
pub fn fixpoint_iterate(
    variant: Variant,
    m: usize,
    lambda: Complex64,
    anchor: Complex64,
    config: &FixpointConfig,
    seed: u64,
) -> Result<FixpointResult> {
    check_contractive(lambda)?;
    if config.n_samples < 2 || config.n_iters == 0 {
        return Err(Error::InvalidParameter(
            "fixpoint needs at least 2 samples and 1 iteration".into(),
        ));
    }
    let beta = BetaLogs::new(m);
    let mut pick = stream_rng(seed, u64::MAX);
    let every = config.w2_every.max(1);
    let mut pop = vec![anchor; config.n_samples];
    let mut trace = Vec::new();
    let mut raw_means = Vec::with_capacity(config.n_iters);
    for t in 1..=config.n_iters {
        let mut next = smoothing_step(variant, lambda, &pop, &beta, seed, t);
        // The map preserves the mean only in expectation; left alone, the
        // population mean is a neutral random walk whose growth feeds the
        // second moment (rate about Var(W) / (|EW|^2 N) per step). The fixed
        // point has mean `anchor`, so the population is recentred there.
        let mean = next.iter().sum::<Complex64>() / next.len() as f64;
        raw_means.push(mean);
        let shift = anchor - mean;
        next.iter_mut().for_each(|x| *x += shift);
        if t % every == 0 {
            let a = subsample(&pop, config.w2_subsample, &mut pick);
            let b = subsample(&next, config.w2_subsample, &mut pick);
            trace.push((t, wasserstein2(&a, &b)));
        }
        pop = next;
    }
    let ratio = log_linear_ratio(&trace[trace.len() / 2..]);
    let samples = WSampleSet::new(variant, m, lambda, anchor, config.n_iters as u32, seed, pop);
    Ok(FixpointResult {
        samples,
        distance_trace: trace,
        ratio,
        contraction_bound: contraction_coefficient(m, lambda).sqrt(),
        raw_means,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpMomentRow {
    pub t: Complex64,
    /// Sample mean of `exp(<t, W>)`, `<t, w> = Re(conj(t) w)`.
    pub empirical: f64,
    pub std_error: f64,
    /// `exp(<t, EW> + C |t|^2)`.
    pub bound: f64,
    /// Sample mean of `exp(|t W|)`.
    pub empirical_abs: f64,
    /// `4 exp(|t| |EW| + 2 C |t|^2)`.
    pub bound_abs: f64,
    pub in_range: bool,
    /// Empirical value above the bound by more than 3 standard errors.
    pub violation: bool,
}

/// Constants of the exponential-moment bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpBound {
    pub c: f64,
    pub epsilon: f64,
}

impl ExpBound {
    /// `C = 10 m^2`, `epsilon = 0.01`: valid for depth-15 cascades at
    /// `m = 60`. The stationary law needs `C` near `Var(W) / 2`.
    pub fn default_for(m: usize) -> Self {
        Self {
            c: 10.0 * (m * m) as f64,
            epsilon: 0.01,
        }
    }
}

pub fn exp_moment_check(samples: &WSampleSet, t_grid: &[Complex64], bound: ExpBound) -> Vec<ExpMomentRow> {
    let mean = samples.anchor;
    let n = samples.samples.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = samples.samples.iter().map(|w| (t.conj() * w).re.exp()).collect();
            let empirical = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - empirical).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let std_error = (var / n).sqrt();
            let empirical_abs = samples.samples.iter().map(|w| (t * w).norm().exp()).sum::<f64>() / n;
            let t2 = t.norm_sqr();
            let b = ((t.conj() * mean).re + bound.c * t2).exp();
            let b_abs = 4.0 * (t.norm() * mean.norm() + 2.0 * bound.c * t2).exp();
            let in_range = t.norm() <= bound.epsilon;
            ExpMomentRow {
                t,
                empirical,
                std_error,
                bound: b,
                empirical_abs,
                bound_abs: b_abs,
                in_range,
                violation: in_range && empirical > b + 3.0 * std_error,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleConnection {
    /// `E xi^lambda = Gamma(K_0 + lambda) / Gamma(K_0)`.
    pub e_xi_lambda: Complex64,
    /// `E W^DT = Gamma(K_0) / Gamma(K_0 + lambda) u_2(PV)`.
    pub e_w_dt: Complex64,
    /// `E W^CT = u_2(PV)`.
    pub e_w_ct: Complex64,
    /// `|E xi^lambda E W^DT - E W^CT|`.
    pub error: f64,
}

/// Expectation-level check of `W^CT = xi^lambda W^DT` in law, starting from
/// the gap composition `initial` with eigenform `u2`.
pub fn martingale_connection(lambda: Complex64, u2: &[Complex64], initial: &CompositionVector) -> MartingaleConnection {
    let k0 = c64(initial.total() as f64);
    let g: Vec<f64> = initial.counts.iter().map(|&c| c as f64).collect();
    let e_w_ct = apply_form_real(u2, &g);
    let e_xi_lambda = (ln_gamma(k0 + lambda) - ln_gamma(k0)).exp();
    let e_w_dt = (-ln_gamma_ratio(k0, lambda)).exp() * e_w_ct;
    MartingaleConnection {
        e_xi_lambda,
        e_w_dt,
        e_w_ct,
        error: (e_xi_lambda * e_w_dt - e_w_ct).norm(),
    }
}

/// `E B^s` from the clock product against `beta_moment / 2`.
pub fn clock_identity_error(m: usize, s: Complex64) -> Result<f64> {
    Ok((clock_product(m, s) - beta_moment(m, s)? / 2.0).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lambda2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn depth_zero_is_the_anchor() {
        let l = lambda2(60).unwrap();
        let s = cascade_sample(Variant::Ct, 60, l, c(60.0, 0.0), 0, 10, 1).unwrap();
        assert!(s.samples.iter().all(|&w| w == c(60.0, 0.0)));
    }

    #[test]
    fn non_contractive_and_budget_errors() {
        let l = lambda2(59).unwrap();
        assert!(matches!(
            cascade_sample(Variant::Ct, 59, l, c(59.0, 0.0), 5, 10, 1),
            Err(Error::NonContractive(_))
        ));
        let l = lambda2(60).unwrap();
        assert!(matches!(
            cascade_sample(Variant::Ct, 60, l, c(60.0, 0.0), 40, 10, 1),
            Err(Error::Resource(_))
        ));
        assert!(moments_w(Variant::Dt, 59, lambda2(59).unwrap(), c(1.0, 0.0), 3).is_err());
    }

    #[test]
    fn clock_product_is_half_the_beta_moment() {
        for m in [2, 10, 60, 237] {
            for s in [c(1.0, 0.0), c(0.3, 9.0), c(2.5, -4.0), c(-1.2, 0.7), c(7.0, 20.0)] {
                assert!(clock_identity_error(m, s).unwrap() < 1e-12, "m={m} s={s}");
            }
        }
    }

    #[test]
    fn joint_moment_marginals() {
        let m = 7;
        let s = c(1.3, 2.0);
        assert!((beta_joint_moment(m, s, c(0.0, 0.0)) - clock_product(m, s)).norm() < 1e-12);
        // E[B (1-B)] = m^2 / (2m (2m+1))
        let e = beta_joint_moment(m, c(1.0, 0.0), c(1.0, 0.0));
        assert!((e.re - 49.0 / (14.0 * 15.0)).abs() < 1e-13);
    }

    #[test]
    fn low_moments() {
        let l = lambda2(60).unwrap();
        let t = moments_w(Variant::Ct, 60, l, c(60.0, 0.0), 4).unwrap();
        assert_eq!(t.moments[0], c(1.0, 0.0));
        assert_eq!(t.moments[1], c(60.0, 0.0));
        // mu_2 (1 - 2E B^{2 lambda}) = 2 E B^{2 lambda} mu_1^2
        let e2 = clock_product(60, 2.0 * l);
        assert!((t.moments[2] - 2.0 * e2 * 3600.0 / (1.0 - 2.0 * e2)).norm() < 1e-9 * t.moments[2].norm());
    }

    #[test]
    fn mixed_second_moment_matches_variance_recursion() {
        let l = lambda2(80).unwrap();
        for v in [Variant::Ct, Variant::Dt] {
            let a = btree_anchor(v, 80, l);
            let mm = mixed_moments(v, 80, l, a, 3).unwrap();
            let lim = limit_variance(v, 80, l, a).unwrap() + a.norm_sqr();
            assert!((mm[1][1].re - lim).abs() < 1e-9 * lim, "{v}");
            assert!(mm[1][1].im.abs() < 1e-9 * lim);
            // M(a, b) = conj M(b, a)
            assert!((mm[2][1] - mm[1][2].conj()).norm() < 1e-9 * mm[2][1].norm());
            let table = moments_w(v, 80, l, a, 3).unwrap();
            assert!((table.moments[2] - mm[2][0]).norm() < 1e-9 * mm[2][0].norm());
            assert!((table.moments[3] - mm[3][0]).norm() < 1e-9 * mm[3][0].norm());
        }
    }

    #[test]
    fn lemma_variance_has_anchor_scale() {
        let l = lambda2(300).unwrap();
        let e = clock_product(300, c(2.0 * l.re, 0.0)).re;
        let v = limit_variance(Variant::Ct, 300, l, c(300.0, 0.0)).unwrap();
        let formula = 300.0f64.powi(2) * (4.0 * e - 1.0) / (1.0 - 2.0 * e);
        assert!((v - formula).abs() < 1e-9 * formula);
    }

    #[test]
    fn per_type_first_moments() {
        let m = 70;
        let l = lambda2(m).unwrap();
        let t = intermediate_moments(m, l, c(m as f64, 0.0), 3).unwrap();
        let mut coef = c(1.0, 0.0);
        for k in 1..=m {
            let want = (m + k - 1) as f64 * coef;
            assert!((t[k - 1][1] - want).norm() < 1e-9 * want.norm(), "k={k}");
            coef *= (l + (m + k - 1) as f64) / (m + k) as f64;
        }
        assert!(t.iter().all(|r| r[0] == c(1.0, 0.0)));
        // the p=1 chain is 2 E B^lambda = 1
        let chain: Complex64 = (1..=m).map(|k| (m + k - 1) as f64 / (l + (m + k - 1) as f64)).product();
        assert!((chain - 0.5).norm() < 1e-10);
        let ct = moments_w(Variant::Ct, m, l, c(m as f64, 0.0), 3).unwrap();
        for q in 0..=3 {
            assert!((t[0][q] - ct.moments[q]).norm() < 1e-9 * ct.moments[q].norm());
        }
    }

    #[test]
    fn laplace_system_small_order() {
        let l = lambda2(60).unwrap();
        let r = laplace_residual(60, l, c(60.0, 0.0), 1).unwrap();
        assert!(r.iter().all(|&x| x < 1e-13));
    }

    #[test]
    fn exp_bound_at_zero_and_monotone() {
        let l = lambda2(60).unwrap();
        let s = cascade_sample(Variant::Ct, 60, l, c(60.0, 0.0), 3, 100, 2).unwrap();
        let rows = exp_moment_check(&s, &[c(0.0, 0.0), c(0.001, 0.0), c(0.002, 0.0)], ExpBound::default_for(60));
        assert!((rows[0].empirical - 1.0).abs() < 1e-15 && rows[0].bound >= 1.0);
        assert!(rows[2].bound >= rows[1].bound);
        assert!(rows.iter().all(|r| !r.violation));
    }

    #[test]
    fn martingale_connection_identity() {
        let spectrum = crate::spectral::compute_spectrum(60).unwrap();
        let rule = crate::make_rule(60, crate::Algorithm::Optimistic).unwrap();
        let mc = martingale_connection(spectrum.lambda2, spectrum.u2(), &rule.btree_start());
        assert!(mc.error < 1e-10 * mc.e_w_ct.norm().max(1.0));
        assert!((mc.e_w_ct - 60.0).norm() < 1e-12);
    }

    #[test]
    fn e_xi_lambda_by_quadrature() {
        let spectrum = crate::spectral::compute_spectrum(60).unwrap();
        let rule = crate::make_rule(60, crate::Algorithm::Optimistic).unwrap();
        let mc = martingale_connection(spectrum.lambda2, spectrum.u2(), &rule.btree_start());
        // Simpson on the Gamma(60) density times x^lambda
        let l = spectrum.lambda2;
        let lg = ln_gamma(c(60.0, 0.0)).re;
        let f = |x: f64| {
            if x <= 0.0 {
                return c(0.0, 0.0);
            }
            (l * x.ln() + 59.0 * x.ln() - x - lg).exp()
        };
        let (a, b, n) = (0.0, 250.0, 200_000);
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = acc * h / 3.0;
        assert!(((quad - mc.e_xi_lambda) / mc.e_xi_lambda).norm() < 1e-9);
    }
}

//! Spectrum of the optimistic replacement matrix `R_m`.
//!
//! The characteristic polynomial is handled in the normalized form
//! `chi(x) = prod_{k=m}^{2m-1} (x+k)/(k+1) - 1`, and roots are located on the
//! branches `sum_k Log((x+k)/(k+1)) = 2 pi i j`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{ln_1p, ln_gamma_ratio};
use crate::rules::{make_rule, Algorithm};

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 200;
const STAGNATION_TOL: f64 = 1e-11;
const ROOT_TOL: f64 = 1e-10;
const IS_ROOT_TOL: f64 = 1e-8;
const DEDUP_TOL: f64 = 1e-6;
const THETA_STEP: f64 = 0.1;
/// Largest `m` for which the simultaneous-iteration fallback is attempted.
pub const FALLBACK_MAX_M: usize = 60;

/// Starting point of Newton's method on the branch of `lambda_2`.
pub const LAMBDA2_GUESS: Complex64 = Complex64::new(0.5, 9.0);

fn check_m(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("m must be at least 2, got {m}")));
    }
    Ok(())
}

/// Normalized characteristic polynomial `prod_{k=m}^{2m-1} (x+k)/(k+1) - 1`.
pub fn char_poly_eval(m: usize, x: Complex64) -> Complex64 {
    (m..2 * m).fold(Complex64::new(1.0, 0.0), |acc, k| {
        acc * (x + k as f64) / (k + 1) as f64
    }) - 1.0
}

/// `sum_k Log((x+k)/(k+1))` and its derivative `sum_k 1/(x+k)`.
fn branch_fn(m: usize, x: Complex64) -> (Complex64, Complex64) {
    let w = x - 1.0;
    let mut g = Complex64::new(0.0, 0.0);
    let mut dg = Complex64::new(0.0, 0.0);
    for k in m..2 * m {
        g += ln_1p(w / (k + 1) as f64);
        dg += (x + k as f64).inv();
    }
    (g, dg)
}

/// Newton on `g(x) = 2 pi i theta`. Returns `None` if it does not settle.
fn newton_branch(m: usize, x0: Complex64, theta: f64, max_iter: usize) -> Option<Complex64> {
    let target = Complex64::new(0.0, 2.0 * PI * theta);
    let mut x = x0;
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        let (g, dg) = branch_fn(m, x);
        let r = g - target;
        let rn = r.norm();
        // the branch sum carries rounding of order m * eps, so a residual
        // that stops shrinking at that level counts as converged
        if rn < NEWTON_TOL || (rn < STAGNATION_TOL && rn > 0.5 * prev) {
            return Some(x);
        }
        prev = rn;
        let dx = r / dg;
        x -= dx;
        if !x.is_finite() || x.im < 0.0 {
            return None;
        }
        if dx.norm() < 1e-15 * (1.0 + x.norm()) {
            return Some(x);
        }
    }
    None
}

/// Follows the branch root from `theta0` to `theta1` by predictor-corrector
/// continuation with step halving.
fn continue_branch(m: usize, x0: Complex64, theta0: f64, theta1: f64) -> Result<Complex64> {
    let mut x = x0;
    let mut theta = theta0;
    let mut h = THETA_STEP;
    while theta < theta1 - 1e-12 {
        let step = h.min(theta1 - theta);
        let (_, dg) = branch_fn(m, x);
        let guess = x + Complex64::new(0.0, 2.0 * PI * step) / dg;
        match newton_branch(m, guess, theta + step, 30) {
            Some(next) if (next - guess).norm() < 0.5 * (guess - x).norm() + 1e-9 => {
                x = next;
                theta += step;
                h = (2.0 * h).min(THETA_STEP);
            }
            _ => {
                h *= 0.5;
                if h < 1e-6 {
                    return Err(Error::NumericFailure {
                        branch: format!("continuation m={m} theta={theta:.6}"),
                        iterations: 30,
                        residual: f64::NAN,
                    });
                }
            }
        }
    }
    newton_branch(m, x, theta1, NEWTON_MAX_ITER).ok_or_else(|| Error::NumericFailure {
        branch: format!("m={m} j={theta1}"),
        iterations: NEWTON_MAX_ITER,
        residual: (branch_fn(m, x).0 - Complex64::new(0.0, 2.0 * PI * theta1)).norm(),
    })
}

/// Real root below `-(2m-1)` that exists for even `m`.
fn negative_real_root(m: usize) -> Result<f64> {
    // h(y) = sum ln(y-k) - sum ln(k+1), increasing in y > 2m-1
    let c: f64 = (m + 1..=2 * m).map(|k| (k as f64).ln()).sum();
    let h = |y: f64| (m..2 * m).map(|k| (y - k as f64).ln()).sum::<f64>() - c;
    let lo0 = (2 * m - 1) as f64;
    let mut hi = lo0 + 1.0;
    while h(hi) < 0.0 {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    let mut lo = lo0;
    let mut y = 0.5 * (lo + hi);
    for _ in 0..NEWTON_MAX_ITER {
        let v = h(y);
        if v < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let d: f64 = (m..2 * m).map(|k| 1.0 / (y - k as f64)).sum();
        let next = y - v / d;
        let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if (next - y).abs() <= 4.0 * f64::EPSILON * y {
            return Ok(-next);
        }
        y = next;
    }
    Err(Error::NumericFailure {
        branch: format!("m={m} negative real root"),
        iterations: NEWTON_MAX_ITER,
        residual: h(0.5 * (lo + hi)).abs(),
    })
}

/// Orders roots by decreasing real part, positive imaginary part first.
fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        let ra = (a.re * 1e9).round();
        let rb = (b.re * 1e9).round();
        rb.total_cmp(&ra).then(b.im.total_cmp(&a.im))
    });
}

fn deduplicated(roots: &[Complex64]) -> bool {
    roots
        .iter()
        .enumerate()
        .all(|(i, a)| roots[i + 1..].iter().all(|b| (a - b).norm() > DEDUP_TOL))
}

/// All `m` roots of the characteristic polynomial by branch continuation.
fn roots_by_branches(m: usize) -> Result<Vec<Complex64>> {
    let jmax = if m % 2 == 0 { m / 2 - 1 } else { (m - 1) / 2 };
    let mut roots = Vec::with_capacity(m);
    roots.push(Complex64::new(1.0, 0.0));
    let mut x = Complex64::new(1.0, 0.0);
    for j in 0..jmax {
        x = continue_branch(m, x, j as f64, (j + 1) as f64)?;
        roots.push(x);
        roots.push(x.conj());
    }
    if m % 2 == 0 {
        roots.push(Complex64::new(negative_real_root(m)?, 0.0));
    }
    finish_roots(m, roots, "branch continuation")
}

fn finish_roots(m: usize, mut roots: Vec<Complex64>, method: &str) -> Result<Vec<Complex64>> {
    let worst = roots
        .iter()
        .map(|&r| char_poly_eval(m, r).norm())
        .fold(0.0, f64::max);
    if roots.len() != m || worst >= ROOT_TOL || !deduplicated(&roots) {
        return Err(Error::NumericFailure {
            branch: format!("{method} m={m}"),
            iterations: NEWTON_MAX_ITER,
            residual: worst,
        });
    }
    sort_roots(&mut roots);
    Ok(roots)
}

/// All roots by Aberth-Ehrlich simultaneous iteration on the normalized
/// polynomial, then symmetric cleanup. For moderate `m` only.
pub fn roots_by_aberth(m: usize) -> Result<Vec<Complex64>> {
    check_m(m)?;
    let newton_ratio = |x: Complex64| {
        let p = char_poly_eval(m, x);
        let s: Complex64 = (m..2 * m).map(|k| (x + k as f64).inv()).sum();
        p / ((p + 1.0) * s)
    };
    let center = -(m as f64) / 2.0;
    let radius = 1.2 * m as f64;
    let mut z: Vec<Complex64> = (0..m)
        .map(|i| {
            let a = 2.0 * PI * (i as f64 + 0.25) / m as f64 + 0.4;
            Complex64::new(center, 0.0) + Complex64::from_polar(radius, a)
        })
        .collect();
    let mut converged = false;
    for _ in 0..2000 {
        let mut max_step: f64 = 0.0;
        for i in 0..m {
            let n = newton_ratio(z[i]);
            let s: Complex64 = (0..m)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let w = n / (1.0 - n * s);
            z[i] -= w;
            max_step = max_step.max(w.norm() / (1.0 + z[i].norm()));
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged && z.iter().any(|&r| char_poly_eval(m, r).norm() > ROOT_TOL) {
        return Err(Error::NumericFailure {
            branch: format!("aberth m={m}"),
            iterations: 2000,
            residual: z.iter().map(|&r| char_poly_eval(m, r).norm()).fold(0.0, f64::max),
        });
    }
    for r in z.iter_mut() {
        if r.im.abs() < 1e-9 {
            r.im = 0.0;
        }
    }
    finish_roots(m, z, "aberth")
}

/// All roots of `chi_m`, sorted by decreasing real part.
pub fn roots(m: usize) -> Result<Vec<Complex64>> {
    check_m(m)?;
    match roots_by_branches(m) {
        Ok(r) => Ok(r),
        Err(e) if m <= FALLBACK_MAX_M => roots_by_aberth(m).map_err(|_| e),
        Err(e) => Err(e),
    }
}

/// `lambda_2` alone: Newton on the first branch from [`LAMBDA2_GUESS`],
/// falling back to continuation from `1` when that start is not attracted.
pub fn lambda2(m: usize) -> Result<Complex64> {
    check_m(m)?;
    if m == 2 {
        return Ok(Complex64::new(negative_real_root(2)?, 0.0));
    }
    if let Some(x) = newton_branch(m, LAMBDA2_GUESS, 1.0, NEWTON_MAX_ITER) {
        return Ok(x);
    }
    continue_branch(m, Complex64::new(1.0, 0.0), 0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumBundle {
    pub m: usize,
    pub roots: Vec<Complex64>,
    pub lambda2: Complex64,
    pub sigma2: f64,
    pub tau2: f64,
    /// Third largest distinct real part; absent when `m < 4`.
    pub sigma3: Option<f64>,
    /// `eigvec[i] = v(roots[i])`.
    pub eigvec: Vec<Vec<Complex64>>,
    /// `eigform[i]` = coefficients of `u(roots[i])`.
    pub eigform: Vec<Vec<Complex64>>,
    pub v1: Vec<f64>,
    /// `max |u(lambda)(v(mu)) - delta|` over all root pairs.
    pub residuals: f64,
    /// `max sum_k |u_k(lambda) v_k(mu)|`: the magnitude that rounding in the
    /// pairing is proportional to. It grows quickly with `m`.
    pub pairing_scale: f64,
    /// Worst relative residual of the two eigen relations against the matrix.
    pub eigen_residual: f64,
}

impl SpectrumBundle {
    pub fn u2(&self) -> &[Complex64] {
        &self.eigform[1]
    }

    pub fn v2(&self) -> &[Complex64] {
        &self.eigvec[1]
    }

    pub fn index_of(&self, lambda: Complex64) -> Option<usize> {
        self.roots.iter().position(|r| (r - lambda).norm() < DEDUP_TOL)
    }
}

/// Evaluates the covector `u` on `x`.
pub fn apply_form(u: &[Complex64], x: &[Complex64]) -> Complex64 {
    u.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Evaluates the covector `u` on a real vector.
pub fn apply_form_real(u: &[Complex64], x: &[f64]) -> Complex64 {
    u.iter().zip(x).map(|(a, &b)| a * b).sum()
}

fn eigen_closed_form(m: usize, lambda: Complex64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mf = m as f64;
    let h: Complex64 = (1..=m).map(|k| (lambda + mf - 1.0 + k as f64).inv()).sum();
    let mut v = Vec::with_capacity(m);
    let mut acc = ((mf + lambda) * h).inv();
    for j in 1..=m {
        v.push(acc);
        acc *= (mf + j as f64) / (mf + j as f64 + lambda);
    }
    let mut u = Vec::with_capacity(m);
    let mut acc = Complex64::new(1.0, 0.0);
    for j in 0..m {
        u.push(acc);
        acc *= (lambda + mf + j as f64) / (1.0 + mf + j as f64);
    }
    (v, u)
}

/// Eigenvector `v(lambda)` of the transposed matrix and eigenform `u(lambda)`,
/// normalized so that `u(lambda)(v(lambda)) = 1`.
pub fn eigen_data(m: usize, lambda: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_m(m)?;
    let chi = char_poly_eval(m, lambda).norm();
    if !(chi < IS_ROOT_TOL) {
        return Err(Error::InvalidInput(format!(
            "{lambda} is not a root of the characteristic polynomial for m={m} (|chi| = {chi:e})"
        )));
    }
    Ok(eigen_closed_form(m, lambda))
}

/// Residual of `R^T v = lambda v` and `R u = lambda u`, relative to the
/// size of the vectors, against the matrix of the replacement rule.
pub fn eigen_relation_residual(rows: &[Vec<i64>], lambda: Complex64, v: &[Complex64], u: &[Complex64]) -> f64 {
    let m = rows.len();
    let sup = |x: &[Complex64]| x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = 1.0 + lambda.norm();
    let (sv, su) = (scale * sup(v), scale * sup(u));
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let rtv: Complex64 = (0..m).map(|i| v[i] * rows[i][j] as f64).sum();
        worst = worst.max((rtv - lambda * v[j]).norm() / sv);
        let ru: Complex64 = (0..m).map(|k| u[k] * rows[j][k] as f64).sum();
        worst = worst.max((ru - lambda * u[j]).norm() / su);
    }
    worst
}

/// Full spectral data for parameter `m`.
pub fn compute_spectrum(m: usize) -> Result<SpectrumBundle> {
    let roots = roots(m)?;
    let (eigvec, eigform): (Vec<_>, Vec<_>) =
        roots.iter().map(|&r| eigen_closed_form(m, r)).unzip();
    let abs_v: Vec<Vec<f64>> = eigvec.iter().map(|v| v.iter().map(|z| z.norm()).collect()).collect();
    let mut residuals: f64 = 0.0;
    let mut pairing_scale: f64 = 0.0;
    for (i, u) in eigform.iter().enumerate() {
        let abs_u: Vec<f64> = u.iter().map(|z| z.norm()).collect();
        for (j, v) in eigvec.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            residuals = residuals.max((apply_form(u, v) - delta).norm());
            let scale: f64 = abs_u.iter().zip(&abs_v[j]).map(|(a, b)| a * b).sum();
            pairing_scale = pairing_scale.max(scale);
        }
    }
    let rows = make_rule(m, Algorithm::Optimistic)?.rows;
    let eigen_residual = roots
        .iter()
        .zip(eigvec.iter().zip(&eigform))
        .map(|(&l, (v, u))| eigen_relation_residual(&rows, l, v, u))
        .fold(0.0, f64::max);
    let lambda2 = roots[1];
    let sigma3 = roots
        .iter()
        .map(|r| r.re)
        .find(|&re| re < lambda2.re - DEDUP_TOL);
    let v1 = eigvec[0].iter().map(|z| z.re).collect();
    Ok(SpectrumBundle {
        m,
        lambda2,
        sigma2: lambda2.re,
        tau2: lambda2.im,
        sigma3,
        roots,
        eigvec,
        eigform,
        v1,
        residuals,
        pairing_scale,
        eigen_residual,
    })
}

/// `2 E(B^s)` for `B ~ Beta(m, m)`, as `prod_{k=m}^{2m-1} (k+1)/(k+s)`.
pub fn beta_moment(m: usize, s: Complex64) -> Result<Complex64> {
    check_m(m)?;
    if let Some(k) = (m..2 * m).find(|&k| (s + k as f64).norm() == 0.0) {
        return Err(Error::InvalidInput(format!("s = -{k} is a pole of the Beta moment")));
    }
    if s.re <= -(m as f64) {
        return Err(Error::InvalidInput(format!(
            "E(B^s) diverges for Re(s) <= -m (s = {s}, m = {m})"
        )));
    }
    Ok((m..2 * m).fold(Complex64::new(1.0, 0.0), |acc, k| {
        acc * (k + 1) as f64 / (s + k as f64)
    }))
}

/// `2 E(B^s) = 2 Gamma(m+s) Gamma(2m) / (Gamma(m) Gamma(2m+s))`.
pub fn beta_moment_gamma(m: usize, s: Complex64) -> Complex64 {
    let mf = Complex64::new(m as f64, 0.0);
    2.0 * (ln_gamma_ratio(mf, s) - ln_gamma_ratio(2.0 * mf, s)).exp()
}

/// First-order expansions `(sigma_2, tau_2)` in `1/m`.
pub fn expansion_sigma_tau(m: usize) -> (f64, f64) {
    let inv = 1.0 / m as f64;
    let sigma = 1.0 - PI * PI / LN_2.powi(3) * inv;
    let tau = 2.0 * PI / LN_2 + PI / (2.0 * LN_2 * LN_2) * inv;
    (sigma, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn one_is_always_a_root() {
        for m in [2, 3, 10, 60, 237, 300] {
            assert!(char_poly_eval(m, c(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn m2_roots_by_hand() {
        // (x+2)(x+3) - 12 = (x-1)(x+6)
        let r = roots(2).unwrap();
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-13);
        assert!((r[1] - c(-6.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn m3_roots_by_hand() {
        // (x+3)(x+4)(x+5) - 120 = (x-1)(x^2 + 13x + 60)
        let r = roots(3).unwrap();
        let disc = (60.0f64 - 42.25).sqrt();
        assert!((r[1] - c(-6.5, disc)).norm() < 1e-12);
        assert!((r[2] - c(-6.5, -disc)).norm() < 1e-12);
        let s = compute_spectrum(3).unwrap();
        assert_eq!(s.sigma3, None);
    }

    #[test]
    fn branches_agree_with_aberth() {
        for m in [4, 7, 12, 25, 40, 60] {
            let a = roots_by_branches(m).unwrap();
            let b = roots_by_aberth(m).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-8, "m={m}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn conjugate_pairs_and_count() {
        for m in 2..=40 {
            let r = roots(m).unwrap();
            assert_eq!(r.len(), m);
            for x in &r {
                assert!(r.iter().any(|y| *y == x.conj()), "m={m}");
            }
        }
    }

    #[test]
    fn v1_for_m2() {
        let s = compute_spectrum(2).unwrap();
        assert!((s.v1[0] - 4.0 / 7.0).abs() < 1e-14);
        assert!((s.v1[1] - 3.0 / 7.0).abs() < 1e-14);
        assert!(s.eigform[0].iter().all(|u| (u - 1.0).norm() < 1e-15));
    }

    #[test]
    fn eigen_data_rejects_non_roots() {
        assert!(matches!(eigen_data(10, c(0.3, 1.0)), Err(Error::InvalidInput(_))));
        assert!(eigen_data(10, c(1.0, 0.0)).is_ok());
    }

    #[test]
    fn dual_basis_up_to_20() {
        for m in 2..=20 {
            let s = compute_spectrum(m).unwrap();
            assert!(s.residuals < 1e-10, "m={m}: {}", s.residuals);
            assert!(s.eigen_residual < 1e-10, "m={m}: {}", s.eigen_residual);
        }
    }

    #[test]
    fn lambda2_newton_matches_continuation() {
        for m in [3, 10, 59, 60, 150, 237] {
            let a = lambda2(m).unwrap();
            let b = compute_spectrum(m).unwrap().lambda2;
            assert!((a - b).norm() < 1e-10, "m={m}");
        }
    }

    #[test]
    fn beta_moment_forms_agree() {
        for m in [2, 5, 60, 237] {
            for s in [c(1.0, 0.0), c(0.5, 9.1), c(2.0, -3.0), c(-1.5, 0.2)] {
                let a = beta_moment(m, s).unwrap();
                let b = beta_moment_gamma(m, s);
                assert!((a - b).norm() < 1e-12 * a.norm().max(1.0), "m={m} s={s}");
            }
        }
        assert_eq!(beta_moment(7, c(1.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert!(beta_moment(3, c(-4.0, 0.0)).is_err());
        assert!(beta_moment(3, c(-3.5, 0.0)).is_err());
    }

    #[test]
    fn beta_moment_on_roots() {
        for m in [5, 60, 100] {
            for r in roots(m).unwrap() {
                if r.re > -(m as f64) {
                    assert!((beta_moment(m, r).unwrap() - 1.0).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn expansion_constants() {
        let a = PI * PI / LN_2.powi(3);
        assert!((a - 29.63).abs() < 0.01);
        let (s, t) = expansion_sigma_tau(1_000_000_000);
        assert!((s - 1.0).abs() < 1e-7 && (t - 9.0647).abs() < 1e-3);
    }
}

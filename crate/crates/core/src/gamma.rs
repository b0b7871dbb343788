//! Complex log-Gamma via Stirling's series with upward shifting.

use num_complex::Complex64;

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;
// Bernoulli B_{2k} / (2k (2k-1)), k = 1..=8
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];
const SHIFT_TO: f64 = 15.0;

fn stirling_tail(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln(1 + w)` without cancellation for small `w`.
pub(crate) fn ln_1p(w: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
    Complex64::new(re, w.im.atan2(1.0 + w.re))
}

/// `ln Gamma(z)` modulo `2 pi i`. Poles (non-positive integers) give an
/// infinite real part.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0 {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re < 0.5 {
        // reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let pi = std::f64::consts::PI;
        return Complex64::new(pi.ln(), 0.0) - (z * pi).sin().ln() - ln_gamma(1.0 - z);
    }
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < SHIFT_TO {
        shift += z.ln();
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + stirling_tail(z) - shift
}

/// `ln Gamma(x + s) - ln Gamma(x)` modulo `2 pi i`, for `Re x > 0` and
/// `Re(x + s) > 0`, evaluated as a difference so that large `x` loses no
/// accuracy.
pub fn ln_gamma_ratio(x: Complex64, s: Complex64) -> Complex64 {
    let mut x = x;
    let mut shift = Complex64::new(0.0, 0.0);
    while x.re < SHIFT_TO || (x + s).re < SHIFT_TO {
        shift += ln_1p(s / x);
        x += 1.0;
    }
    let xs = x + s;
    (x - 0.5) * ln_1p(s / x) + s * xs.ln() - s + stirling_tail(xs) - stirling_tail(x) - shift
}

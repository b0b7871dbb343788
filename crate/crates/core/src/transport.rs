//! Exact 2-Wasserstein distance between equal-size point clouds in the
//! complex plane, by optimal assignment.

use num_complex::Complex64;

/// Minimal total cost of a perfect matching on an `n x n` cost matrix given
/// row-major. Hungarian method with potentials, `O(n^3)`.
pub fn assignment_cost(cost: &[f64], n: usize) -> f64 {
    assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    // 1-based; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n)
        .map(|j| cost[(row_of[j] - 1) * n + (j - 1)])
        .sum()
}

/// `W_2` between the uniform empirical measures on `a` and `b`.
pub fn wasserstein2(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "point clouds must have equal size");
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let cost: Vec<f64> = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| (x - y).norm_sqr()))
        .collect();
    (assignment_cost(&cost, n) / n as f64).sqrt()
}

//! Thomas algorithm for tridiagonal systems.

/// Solves `a[k]·x[k−1] + b[k]·x[k] + c[k]·x[k+1] = d[k]` in place in `d`.
///
/// `a[0]` and `c[m−1]` are ignored. `scratch` must hold `m` values. The
/// systems assembled by the solvers are diagonally dominant, so no pivoting.
pub fn solve(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], scratch: &mut [f64]) {
    let m = d.len();
    debug_assert!(a.len() >= m && b.len() >= m && c.len() >= m && scratch.len() >= m);
    if m == 0 {
        return;
    }
    let mut beta = b[0];
    d[0] /= beta;
    for k in 1..m {
        scratch[k] = c[k - 1] / beta;
        beta = b[k] - a[k] * scratch[k];
        d[k] = (d[k] - a[k] * d[k - 1]) / beta;
    }
    for k in (0..m - 1).rev() {
        d[k] -= scratch[k + 1] * d[k + 1];
    }
}

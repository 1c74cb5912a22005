//! Root bracketing, quadrature, deterministic reductions and small dense solves.

use nalgebra::{DMatrix, DVector};

pub const MIN_ROOT_GRID: usize = 64;

/// Locate every sign change of `f` on a uniform grid over `[0, t_f]` and
/// refine it by bisection until the bracket is no wider than `t_f * 1e-12`.
///
/// Grid samples that are exactly zero yield a degenerate bracket `(t, t)`.
pub fn bracket_roots<F>(f: F, t_f: f64, n_grid: usize) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    bracket_roots_in(f, 0.0, t_f, n_grid, t_f * 1e-12)
}

/// Same as [`bracket_roots`] on an arbitrary interval with explicit width.
pub fn bracket_roots_in<F>(f: F, lo: f64, hi: f64, n_grid: usize, width: f64) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let n = n_grid.max(MIN_ROOT_GRID);
    let step = (hi - lo) / n as f64;
    let at = |i: usize| if i == n { hi } else { lo + step * i as f64 };
    let mut out = Vec::new();
    let mut prev_t = at(0);
    let mut prev_v = f(prev_t);
    if prev_v == 0.0 {
        out.push((prev_t, prev_t));
    }
    for i in 1..=n {
        let t = at(i);
        let v = f(t);
        if v == 0.0 {
            out.push((t, t));
        } else if prev_v != 0.0 && prev_v.signum() != v.signum() {
            out.push(bisect(&f, prev_t, t, prev_v, width));
        }
        prev_t = t;
        prev_v = v;
    }
    out
}

/// Bisection on a bracket with `f(lo)` of sign `f_lo`.
pub fn bisect<F>(f: &F, mut lo: f64, mut hi: f64, mut f_lo: f64, width: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    for _ in 0..200 {
        if (hi - lo).abs() <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

pub fn midpoint(bracket: (f64, f64)) -> f64 {
    0.5 * (bracket.0 + bracket.1)
}

/// Cumulative composite Simpson integral of `g` on `n + 1` uniform nodes of
/// `[0, t_f]`. Each cell uses the analytic midpoint value, so the result at
/// every node carries the full fourth-order accuracy.
pub fn cumulative_simpson<F>(g: F, t_f: f64, n: usize) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let h = t_f / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    let mut left = g(0.0);
    for i in 0..n {
        let a = h * i as f64;
        let b = if i + 1 == n { t_f } else { h * (i + 1) as f64 };
        let right = g(b);
        acc += (b - a) / 6.0 * (left + 4.0 * g(0.5 * (a + b)) + right);
        out.push(acc);
        left = right;
    }
    out
}

/// Simpson rule on a single interval.
pub fn simpson_cell<F>(g: &F, a: f64, b: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b))
}

/// Fixed-order pairwise summation; the result does not depend on how the
/// input was produced, only on its order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Solve a small dense square system by LU with partial pivoting.
pub fn solve_dense(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return None;
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(rhs);
    let lu = a.clone().lu();
    let mut x = lu.solve(&b)?;
    // one step of iterative refinement
    let r = &b - &a * &x;
    x += lu.solve(&r)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.iter().copied().collect())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn cosine_roots() {
        let roots = bracket_roots(|t| (TAU * t).cos(), 1.0, 64);
        assert_eq!(roots.len(), 2);
        for (b, expect) in roots.iter().zip([0.25, 0.75]) {
            assert!(b.1 - b.0 <= 1e-12);
            assert!((midpoint(*b) - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn positive_function_has_no_roots() {
        assert!(bracket_roots(|t| 1.0 + t * t, 2.0, 128).is_empty());
    }

    #[test]
    fn factored_quartic_roots_are_all_found() {
        let known = [0.1, 0.35, 0.6, 0.92];
        let f = |t: f64| known.iter().map(|r| t - r).product::<f64>();
        let roots = bracket_roots(f, 1.0, 64);
        assert_eq!(roots.len(), 4);
        for (b, r) in roots.iter().zip(known) {
            assert!((midpoint(*b) - r).abs() <= 1e-12);
        }
    }

    #[test]
    fn small_grid_is_raised_to_minimum() {
        // 8 roots on [0, 1] would be missed by a grid of 4
        let roots = bracket_roots(|t| (4.0 * TAU * t + 0.1).sin(), 1.0, 4);
        assert_eq!(roots.len(), 8);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let vals = cumulative_simpson(|t| 3.0 * t * t - 2.0 * t + 1.0, 2.0, 7);
        let exact = |t: f64| t * t * t - t * t + t;
        for (i, v) in vals.iter().enumerate() {
            let t = 2.0 * i as f64 / 7.0;
            assert!((v - exact(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn dense_solve() {
        let x = solve_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 2.0]).is_none());
    }
}

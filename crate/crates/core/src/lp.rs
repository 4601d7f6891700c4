//! Minimum ∞-norm points on an affine family `p + D μ`.
//!
//! One and two free parameters are handled by direct convex minimization;
//! larger families go through a dense tableau simplex in epigraph form.

/// `max_e |p_e + Σ_k μ_k d_k[e]|`.
fn inf_norm_at(p: &[f64], dirs: &[Vec<f64>], mu: &[f64]) -> f64 {
    (0..p.len())
        .map(|e| {
            let v = p[e] + dirs.iter().zip(mu).map(|(d, m)| d[e] * m).sum::<f64>();
            v.abs()
        })
        .fold(0.0, f64::max)
}

/// Exact minimizer of `μ ↦ max_e |p_e + μ d_e|` over `[-bound, bound]`, by
/// bisection on the sign of the right derivative.
fn chebyshev_1d(p: &[f64], d: &[f64], bound: f64) -> f64 {
    // right derivative of the upper envelope at mu
    let slope = |mu: f64| -> f64 {
        let top = p
            .iter()
            .zip(d)
            .map(|(pe, de)| (pe + mu * de).abs())
            .fold(0.0, f64::max);
        let tol = 1e-14 * top.max(1.0);
        let mut right = f64::NEG_INFINITY;
        for (pe, de) in p.iter().zip(d) {
            let v = pe + mu * de;
            if v >= top - tol {
                right = right.max(*de);
            }
            if -v >= top - tol {
                right = right.max(-de);
            }
        }
        right
    };
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let cands = [lo, hi, 0.5 * (lo + hi)];
    let f = |mu: f64| {
        p.iter()
            .zip(d)
            .map(|(pe, de)| (pe + mu * de).abs())
            .fold(0.0, f64::max)
    };
    cands
        .into_iter()
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap()
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Minimizes `‖p + Σ μ_k dirs[k]‖∞` over `μ`.
///
/// `bounds[k]` must bound `|μ_k|` at any minimizer. Returns `μ`.
pub(crate) fn min_inf_norm(p: &[f64], dirs: &[Vec<f64>], bounds: &[f64]) -> Vec<f64> {
    match dirs.len() {
        0 => Vec::new(),
        1 => vec![chebyshev_1d(p, &dirs[0], bounds[0])],
        2 => {
            let inner = |mu1: f64| -> (f64, f64) {
                let shifted: Vec<f64> = p.iter().zip(&dirs[0]).map(|(pe, de)| pe + mu1 * de).collect();
                let mu2 = chebyshev_1d(&shifted, &dirs[1], bounds[1]);
                (mu2, inf_norm_at(p, dirs, &[mu1, mu2]))
            };
            let mu1 = golden_section(|m| inner(m).1, -bounds[0], bounds[0]);
            let (mu2, _) = inner(mu1);
            vec![mu1, mu2]
        }
        _ => simplex_min_inf_norm(p, dirs),
    }
}

/// Epigraph LP: with `t0 = ‖p‖∞` and `t = t0 - u`,
/// maximize `u` subject to `±(p + Dμ) + u ≤ t0`, `μ` and `u` free.
/// The right-hand sides are nonnegative so the slack basis is feasible.
fn simplex_min_inf_norm(p: &[f64], dirs: &[Vec<f64>]) -> Vec<f64> {
    let m_edges = p.len();
    let r = dirs.len();
    let t0 = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // columns: mu+ (r), mu- (r), u+, u-
    let nvars = 2 * r + 2;
    let rows = 2 * m_edges;
    let mut a = vec![vec![0.0; nvars]; rows];
    let mut b = vec![0.0; rows];
    for e in 0..m_edges {
        for k in 0..r {
            let d = dirs[k][e];
            a[2 * e][k] = d;
            a[2 * e][r + k] = -d;
            a[2 * e + 1][k] = -d;
            a[2 * e + 1][r + k] = d;
        }
        a[2 * e][2 * r] = 1.0;
        a[2 * e][2 * r + 1] = -1.0;
        a[2 * e + 1][2 * r] = 1.0;
        a[2 * e + 1][2 * r + 1] = -1.0;
        b[2 * e] = t0 - p[e];
        b[2 * e + 1] = t0 + p[e];
    }
    let mut c = vec![0.0; nvars];
    c[2 * r] = 1.0;
    c[2 * r + 1] = -1.0;
    let x = maximize(&c, &a, &b);
    (0..r).map(|k| x[k] - x[r + k]).collect()
}

/// Dense tableau simplex for `max cᵀx, Ax ≤ b, x ≥ 0` with `b ≥ 0`.
///
/// Dantzig pricing, switching to Bland's rule after a run of degenerate
/// pivots. Returns the primal solution (zeros when the problem is unbounded
/// along the final pivot column, which cannot happen for the norm LP).
pub(crate) fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i].max(0.0);
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = 1e-12;
    let mut degenerate_run = 0usize;
    let max_pivots = 50 * (m + n).max(10);
    for _ in 0..max_pivots {
        let bland = degenerate_run > 50;
        let entering = if bland {
            (0..n + m).find(|&j| t[m][j] < -eps)
        } else {
            let mut best = None;
            let mut val = -eps;
            for j in 0..n + m {
                if t[m][j] < val {
                    val = t[m][j];
                    best = Some(j);
                }
            }
            best
        };
        let Some(col) = entering else { break };
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > eps {
                let r = t[i][width - 1] / t[i][col];
                let better = r < ratio - 1e-14
                    || (r <= ratio + 1e-14 && leave.is_none_or(|l: usize| basis[i] < basis[l]));
                if better {
                    ratio = r;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else { break };
        if ratio <= 1e-14 {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        let piv = t[row][col];
        for v in t[row].iter_mut() {
            *v /= piv;
        }
        let pivot_row = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (x, p) in r.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        basis[row] = col;
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1];
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_dimensional_chebyshev_center() {
        // min_mu max |x_i + mu| = (max x - min x) / 2
        let p = [0.3, -0.7, 0.1, 0.9];
        let d = [1.0; 4];
        let mu = chebyshev_1d(&p, &d, 10.0);
        assert_abs_diff_eq!(mu, -0.1, epsilon = 1e-12);
    }

    #[test]
    fn simplex_agrees_with_direct_minimization() {
        let p = vec![0.5, -0.2, 0.8, -0.9, 0.1];
        let d1 = vec![1.0, 1.0, 0.0, 0.0, 1.0];
        let d2 = vec![0.0, 1.0, -1.0, 1.0, 0.0];
        let dirs = vec![d1, d2];
        let direct = min_inf_norm(&p, &dirs, &[5.0, 5.0]);
        let lp = simplex_min_inf_norm(&p, &dirs);
        let a = inf_norm_at(&p, &dirs, &direct);
        let b = inf_norm_at(&p, &dirs, &lp);
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        assert!(b <= inf_norm_at(&p, &dirs, &[0.0, 0.0]) + 1e-12);
    }

    #[test]
    fn small_lp() {
        // max x + y, x + 2y <= 4, 3x + y <= 6
        let x = maximize(&[1.0, 1.0], &[vec![1.0, 2.0], vec![3.0, 1.0]], &[4.0, 6.0]);
        assert_abs_diff_eq!(x[0], 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1.2, epsilon = 1e-12);
    }
}

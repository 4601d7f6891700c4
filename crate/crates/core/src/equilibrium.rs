//! Equilibria of the sinusoidally coupled network: Newton on the fixed-point
//! equations `ω = B diag(a) sin(Bᵀθ)`, Jacobian assembly, stability and
//! phase cohesiveness.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SyncError};
use crate::graph::{self, WeightedGraph};

/// Above this size the reduced Jacobian's condition number is not computed by
/// a full eigendecomposition; a failed LU solve is reported as singular.
const CONDITION_CHECK_LIMIT: usize = 400;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn geodesic_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// Whether two angle vectors coincide after removing a common rotation.
pub fn same_up_to_gauge(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() || a.is_empty() {
        return false;
    }
    let shift = a[0] - b[0];
    a.iter()
        .zip(b)
        .all(|(x, y)| geodesic_distance(*x, *y + shift) <= tol)
}

/// Largest gauge-free distance between two angle vectors.
pub fn gauge_distance(a: &[f64], b: &[f64]) -> f64 {
    let shift = a[0] - b[0];
    a.iter()
        .zip(b)
        .map(|(x, y)| geodesic_distance(*x, *y + shift))
        .fold(0.0, f64::max)
}

/// Right-hand side of the first-order model, `ω_i - Σ_j a_ij sin(θ_i - θ_j)`.
pub fn kuramoto_rhs(g: &WeightedGraph, omega: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut out = omega.to_vec();
    for e in g.edges() {
        let f = e.weight * (theta[e.source] - theta[e.sink]).sin();
        out[e.source] -= f;
        out[e.sink] += f;
    }
    out
}

/// `‖ω - B diag(a) sin(Bᵀθ)‖∞`.
pub fn fixed_point_residual(g: &WeightedGraph, omega: &[f64], theta: &[f64]) -> f64 {
    kuramoto_rhs(g, omega, theta)
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Maximum geodesic distance across edges.
pub fn phase_cohesiveness(theta: &[f64], g: &WeightedGraph) -> f64 {
    g.edges()
        .iter()
        .map(|e| geodesic_distance(theta[e.source], theta[e.sink]))
        .fold(0.0, f64::max)
}

/// `J(θ) = -B diag(a_ij cos(θ_i - θ_j)) Bᵀ`.
pub fn jacobian(g: &WeightedGraph, theta: &[f64]) -> Result<DMatrix<f64>> {
    g.require_len(theta)?;
    let n = g.n();
    let mut j = DMatrix::zeros(n, n);
    for e in g.edges() {
        let w = e.weight * (theta[e.source] - theta[e.sink]).cos();
        j[(e.source, e.source)] -= w;
        j[(e.sink, e.sink)] -= w;
        j[(e.source, e.sink)] += w;
        j[(e.sink, e.source)] += w;
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub stable: bool,
    /// Second-smallest eigenvalue of `-J(θ)`.
    pub lambda2_of_minus_j: f64,
}

fn stability_of(g: &WeightedGraph, theta: &[f64]) -> Stability {
    let minus_j = -jacobian(g, theta).expect("dimension checked by caller");
    let mut eig: Vec<f64> = SymmetricEigen::new(minus_j).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let scale = eig.last().map(|v| v.abs()).unwrap_or(1.0).max(1.0);
    let lambda2 = if eig.len() > 1 { eig[1] } else { 0.0 };
    // the smallest eigenvalue is the rotational zero mode; a negative one
    // anywhere pushes lambda2 to or below zero
    let stable = lambda2 > 1e-12 * scale && eig[0] > -1e-9 * scale;
    Stability { stable, lambda2_of_minus_j: lambda2 }
}

/// Local exponential stability of an equilibrium (modulo rotations).
pub fn assess_stability(g: &WeightedGraph, omega: &[f64], theta: &[f64]) -> Result<Stability> {
    g.require_len(theta)?;
    g.require_len(omega)?;
    let residual = fixed_point_residual(g, omega, theta);
    let scale = omega.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if residual > 1e-8 * scale {
        return Err(SyncError::NotAnEquilibrium(residual));
    }
    Ok(stability_of(g, theta))
}

/// A phase-locked state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    /// Angles with `θ_1 = 0`, wrapped into `(-π, π]`.
    pub theta: Vec<f64>,
    pub cohesiveness: f64,
    pub stable: bool,
    pub residual: f64,
    pub iterations: usize,
}

impl EquilibriumSolution {
    /// Fixes the gauge and evaluates cohesiveness, residual and stability.
    pub fn from_angles(g: &WeightedGraph, omega: &[f64], theta: &[f64], iterations: usize) -> Self {
        let residual = fixed_point_residual(g, omega, theta);
        let stable = stability_of(g, theta).stable;
        let cohesiveness = phase_cohesiveness(theta, g);
        let theta = theta.iter().map(|t| wrap_angle(t - theta[0])).collect();
        Self { theta, cohesiveness, stable, residual, iterations }
    }

    /// Whether the solution lies in the closed cohesive set for `gamma`.
    pub fn is_cohesive(&self, gamma: f64) -> bool {
        self.cohesiveness <= gamma
    }

    /// Edge differences `Bᵀθ`, wrapped.
    pub fn edge_angles(&self, g: &WeightedGraph) -> Vec<f64> {
        g.edge_differences(&self.theta).into_iter().map(wrap_angle).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub max_condition: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 50, max_halvings: 20, max_condition: 1e12 }
    }
}

pub(crate) fn check_zero_mean(omega: &[f64]) -> Result<()> {
    let mean = omega.iter().sum::<f64>() / omega.len().max(1) as f64;
    let scale = omega.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if mean.abs() > 1e-9 * scale {
        return Err(SyncError::NonZeroMeanFrequencies { mean });
    }
    Ok(())
}

/// Newton iteration on the fixed-point equations with node 1 grounded.
///
/// `theta0` defaults to the linear (DC) solution `L†ω`. Steps are halved while
/// the residual fails to decrease. Whether the result is cohesive for a target
/// level is left to [`EquilibriumSolution::is_cohesive`].
pub fn solve_equilibrium(
    g: &WeightedGraph,
    omega: &[f64],
    theta0: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<EquilibriumSolution> {
    g.require_connected()?;
    g.require_len(omega)?;
    check_zero_mean(omega)?;
    let n = g.n();
    let mut theta = match theta0 {
        Some(t) => {
            g.require_len(t)?;
            t.to_vec()
        }
        None => graph::pinv_apply(g, omega)?,
    };
    let mut residual = fixed_point_residual(g, omega, &theta);
    let mut iterations = 0;
    while residual > opts.tolerance {
        if iterations >= opts.max_iterations {
            return Err(SyncError::NoConvergence { residual, iterations, theta });
        }
        iterations += 1;
        let f = kuramoto_rhs(g, omega, &theta);
        let j = jacobian(g, &theta)?;
        let j_red = j.view((1, 1), (n - 1, n - 1)).into_owned();
        let rhs = DVector::from_iterator(n - 1, f[1..].iter().map(|v| -v));
        let step = reduced_solve(j_red, rhs, opts.max_condition)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = theta.clone();
            for i in 1..n {
                trial[i] += t * step[i - 1];
            }
            let r = fixed_point_residual(g, omega, &trial);
            if r < residual {
                theta = trial;
                residual = r;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(SyncError::NoConvergence { residual, iterations, theta });
        }
    }
    Ok(EquilibriumSolution::from_angles(g, omega, &theta, iterations))
}

fn reduced_solve(j_red: DMatrix<f64>, rhs: DVector<f64>, max_condition: f64) -> Result<DVector<f64>> {
    let m = j_red.nrows();
    if m == 0 {
        return Ok(rhs);
    }
    if m <= CONDITION_CHECK_LIMIT {
        let eig = SymmetricEigen::new(j_red);
        let abs: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
        let max = abs.iter().copied().fold(0.0, f64::max);
        let min = abs.iter().copied().fold(f64::INFINITY, f64::min);
        let cond = if min > 0.0 { max / min } else { f64::INFINITY };
        if cond > max_condition {
            return Err(SyncError::SingularJacobian(cond));
        }
        let coeffs = eig.eigenvectors.transpose() * rhs;
        let scaled = DVector::from_iterator(m, coeffs.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l));
        Ok(eig.eigenvectors * scaled)
    } else {
        j_red.lu().solve(&rhs).ok_or(SyncError::SingularJacobian(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_nodes(a: f64) -> WeightedGraph {
        WeightedGraph::new(2, [(0, 1, a)]).unwrap()
    }

    #[test]
    fn wrap_and_geodesic() {
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(geodesic_distance(0.0, 3.0 * PI / 2.0), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn cohesiveness_examples() {
        let g = two_nodes(1.0);
        assert_eq!(phase_cohesiveness(&[0.7, 0.7], &g), 0.0);
        assert_abs_diff_eq!(phase_cohesiveness(&[0.0, 3.0 * PI / 2.0], &g), PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_at_zero_is_minus_laplacian() {
        let g = WeightedGraph::new(3, [(0, 1, 2.0), (1, 2, 0.5), (0, 2, 1.0)]).unwrap();
        let j = jacobian(&g, &[0.0; 3]).unwrap();
        assert_eq!(j, -g.laplacian());
    }

    #[test]
    fn edge_at_quarter_turn_contributes_nothing() {
        let g = two_nodes(3.0);
        let j = jacobian(&g, &[PI / 2.0, 0.0]).unwrap();
        assert!(j.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn two_node_newton() {
        let a = 2.0;
        let w = 1.0; // w / a = 0.5
        let g = two_nodes(a);
        let s = solve_equilibrium(&g, &[w, -w], None, &NewtonOptions::default()).unwrap();
        assert_abs_diff_eq!(s.theta[0] - s.theta[1], PI / 6.0, epsilon = 1e-10);
        assert!(s.stable);
        assert!(s.is_cohesive(PI / 2.0));
    }

    #[test]
    fn zero_frequencies_give_phase_sync() {
        let g = WeightedGraph::unweighted(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let seed = [0.05, -0.03, 0.02, 0.01];
        let s = solve_equilibrium(&g, &[0.0; 4], Some(&seed), &NewtonOptions::default()).unwrap();
        assert!(s.cohesiveness < 1e-9);
    }

    #[test]
    fn unstable_branch_is_detected() {
        let g = two_nodes(2.0);
        let omega = [1.0, -1.0];
        let theta = [PI - PI / 6.0, 0.0];
        let st = assess_stability(&g, &omega, &theta).unwrap();
        assert!(!st.stable);
        let good = assess_stability(&g, &omega, &[PI / 6.0, 0.0]).unwrap();
        assert!(good.stable);
    }

    #[test]
    fn stability_at_rest_matches_algebraic_connectivity() {
        let g = WeightedGraph::unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let st = assess_stability(&g, &[0.0; 3], &[0.0; 3]).unwrap();
        assert!(st.stable);
        assert_abs_diff_eq!(st.lambda2_of_minus_j, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn not_an_equilibrium() {
        let g = two_nodes(1.0);
        assert!(matches!(
            assess_stability(&g, &[0.5, -0.5], &[0.0, 0.0]),
            Err(SyncError::NotAnEquilibrium(_))
        ));
    }

    #[test]
    fn infeasible_two_node_does_not_converge() {
        let g = two_nodes(1.0);
        let r = solve_equilibrium(&g, &[1.2, -1.2], None, &NewtonOptions::default());
        assert!(matches!(
            r,
            Err(SyncError::NoConvergence { .. }) | Err(SyncError::SingularJacobian(_))
        ));
    }

    #[test]
    fn rejects_nonzero_mean() {
        let g = two_nodes(1.0);
        assert!(matches!(
            solve_equilibrium(&g, &[1.0, 0.0], None, &NewtonOptions::default()),
            Err(SyncError::NonZeroMeanFrequencies { .. })
        ));
    }
}

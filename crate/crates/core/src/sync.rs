//! Synchronization assessment via the cut-set projection `ψ = BᵀL†ω`.
//!
//! The central quantity is the sync margin `‖BᵀL†ω‖∞`: when it is at most
//! `sin(γ)` an exponentially stable equilibrium with all edge differences
//! bounded by `γ` is predicted. Exact counterparts are provided for trees and
//! single cycles, together with necessary conditions and the minimum ∞-norm
//! certificate.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{check_zero_mean, EquilibriumSolution};
use crate::error::{Result, SyncError};
use crate::graph::{self, cycle_basis, spanning_tree, CycleBasis, LaplacianBundle, WeightedGraph};
use crate::lp;

/// Slack used when comparing the margin against `sin(γ)`.
pub const CONDITION_SLACK: f64 = 1e-12;

/// Result of evaluating the sync condition for one `(G, ω)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncAssessment {
    /// `‖BᵀL†ω‖∞`.
    pub margin: f64,
    /// `arcsin(margin)` when the margin is at most one.
    pub gamma_pred: Option<f64>,
    /// Particular solution `BᵀL†ω`, one entry per edge.
    pub psi_particular: Vec<f64>,
    /// Linearized angles `L†ω`.
    pub dc_angles: Vec<f64>,
}

impl SyncAssessment {
    /// `margin ≤ sin(γ)` up to [`CONDITION_SLACK`].
    pub fn condition_holds(&self, gamma: f64) -> bool {
        self.margin <= gamma.sin() + CONDITION_SLACK
    }
}

/// Rejects `γ` outside `[0, π/2)`.
pub fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..FRAC_PI_2).contains(&gamma) {
        return Err(SyncError::GammaOutOfRange(gamma));
    }
    Ok(())
}

/// Evaluates the sync condition. `omega` must already be zero-mean.
pub fn sync_margin(g: &WeightedGraph, omega: &[f64]) -> Result<SyncAssessment> {
    g.require_connected()?;
    g.require_len(omega)?;
    check_zero_mean(omega)?;
    let dc_angles = graph::pinv_apply(g, omega)?;
    let psi = g.edge_differences(&dc_angles);
    let margin = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gamma_pred = (margin <= 1.0).then(|| margin.asin());
    Ok(SyncAssessment { margin, gamma_pred, psi_particular: psi, dc_angles })
}

/// The same margin computed through the Laplacian eigenbasis,
/// `‖Bᵀ U diag(0, 1/λ₂, …, 1/λ_n) Uᵀ ω‖∞`.
pub fn spectral_margin(bundle: &LaplacianBundle, g: &WeightedGraph, omega: &[f64]) -> Result<f64> {
    g.require_len(omega)?;
    check_zero_mean(omega)?;
    let n = g.n();
    let tol = bundle.zero_tolerance();
    let mut x = vec![0.0; n];
    for (k, &lam) in bundle.eigenvalues.iter().enumerate() {
        if lam.abs() < tol {
            continue;
        }
        let u = bundle.eigenvectors.column(k);
        let coeff = u.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>() / lam;
        for i in 0..n {
            x[i] += coeff * u[i];
        }
    }
    graph::edge_infinity_norm(g, &x)
}

/// Absolute and incremental boundedness checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessaryCheck {
    pub absolute_ok: bool,
    pub incremental_ok: bool,
    /// 0-based nodes with `deg_i sin(γ) < |ω_i|`.
    pub violating_nodes: Vec<usize>,
    /// Edge indices with `(deg_i + deg_j) sin(γ) < |ω_i - ω_j|`.
    pub violating_edges: Vec<usize>,
}

/// Necessary conditions for an equilibrium with all edge differences `≤ γ`.
///
/// Equality cases count as satisfied within a relative `1e-9`.
pub fn necessary_conditions(g: &WeightedGraph, omega: &[f64], gamma: f64) -> Result<NecessaryCheck> {
    check_gamma(gamma)?;
    g.require_len(omega)?;
    let s = gamma.sin();
    let deg: Vec<f64> = (0..g.n()).map(|i| g.weighted_degree(i)).collect();
    let tol = |v: f64| 1e-9 * v.abs().max(1.0);
    let violating_nodes: Vec<usize> = (0..g.n())
        .filter(|&i| deg[i] * s < omega[i].abs() - tol(omega[i]))
        .collect();
    let violating_edges: Vec<usize> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            let diff = (omega[e.source] - omega[e.sink]).abs();
            (deg[e.source] + deg[e.sink]) * s < diff - tol(diff)
        })
        .map(|(k, _)| k)
        .collect();
    Ok(NecessaryCheck {
        absolute_ok: violating_nodes.is_empty(),
        incremental_ok: violating_edges.is_empty(),
        violating_nodes,
        violating_edges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Feasibility {
    Feasible(EquilibriumSolution),
    Infeasible { margin: f64 },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn solution(&self) -> Option<&EquilibriumSolution> {
        match self {
            Feasibility::Feasible(s) => Some(s),
            Feasibility::Infeasible { .. } => None,
        }
    }
}

/// Exact equilibrium on a tree: `Bᵀθ* = arcsin(BᵀL†ω)`, assembled by walking
/// a spanning tree from node 1 (which is fixed at angle 0).
pub fn acyclic_equilibrium(g: &WeightedGraph, omega: &[f64], gamma: f64) -> Result<Feasibility> {
    g.require_connected()?;
    if !g.is_tree() {
        return Err(SyncError::NotAcyclic);
    }
    check_gamma(gamma)?;
    let assessment = sync_margin(g, omega)?;
    if !assessment.condition_holds(gamma) {
        return Ok(Feasibility::Infeasible { margin: assessment.margin });
    }
    let edge_angles: Vec<f64> = assessment
        .psi_particular
        .iter()
        .map(|p| p.clamp(-1.0, 1.0).asin())
        .collect();
    let theta = angles_from_tree(g, &edge_angles);
    Ok(Feasibility::Feasible(EquilibriumSolution::from_angles(g, omega, &theta, 0)))
}

/// Node angles with `θ_0 = 0` whose tree-edge differences match `edge_angles`.
fn angles_from_tree(g: &WeightedGraph, edge_angles: &[f64]) -> Vec<f64> {
    let tree = spanning_tree(g);
    let mut theta = vec![0.0; g.n()];
    for &v in tree.order.iter().skip(1) {
        let (u, k) = tree.parent[v].unwrap();
        let e = g.edges()[k];
        // (Bᵀθ)_k = θ_source - θ_sink
        theta[v] = if e.source == u {
            theta[u] - edge_angles[k]
        } else {
            theta[u] + edge_angles[k]
        };
    }
    theta
}

/// A single cycle traversed in a fixed direction.
#[derive(Debug, Clone)]
pub(crate) struct CycleWalk {
    /// Visited nodes; step `k` goes from `nodes[k]` to `nodes[(k+1) % n]`.
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    /// `+1` when the edge is oriented along the walk.
    pub signs: Vec<f64>,
}

pub(crate) fn walk_cycle(g: &WeightedGraph) -> Result<CycleWalk> {
    if !g.is_cycle() {
        return Err(SyncError::NotACycle);
    }
    let n = g.n();
    let mut nodes = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    let mut cur = 0usize;
    let mut came_by = usize::MAX;
    for _ in 0..n {
        let &(next, k) = g
            .neighbors(cur)
            .iter()
            .find(|&&(_, k)| k != came_by)
            .expect("cycle nodes have degree two");
        nodes.push(cur);
        edges.push(k);
        signs.push(if g.edges()[k].source == cur { 1.0 } else { -1.0 });
        came_by = k;
        cur = next;
    }
    Ok(CycleWalk { nodes, edges, signs })
}

/// Outcome of the single-cycle feasibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleFeasibility {
    pub feasible: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Root of `f` when feasible.
    pub lambda_star: Option<f64>,
    /// `f(λ_min)`, absent when the domain is empty.
    pub f_lmin: Option<f64>,
    pub f_lmax: Option<f64>,
    pub solution: Option<EquilibriumSolution>,
}

/// Exact existence test for equilibria on a single cycle.
///
/// With `x = BᵀL†ω` and `y = 1/a` read along a consistently oriented walk, the
/// edge flows of every solution are `x + λy`. The cycle constraint is
/// `f(λ) = Σ arcsin(x_k + λ y_k) = 0`; the norm constraint restricts `λ` to
/// `[λ_min, λ_max]`. `f` is strictly increasing, so feasibility is a sign
/// check at the ends and the root is found by bisection.
pub fn single_cycle_feasibility(g: &WeightedGraph, omega: &[f64], gamma: f64) -> Result<CycleFeasibility> {
    let walk = walk_cycle(g)?;
    check_gamma(gamma)?;
    let assessment = sync_margin(g, omega)?;
    let s = gamma.sin();
    let x: Vec<f64> = walk
        .edges
        .iter()
        .zip(&walk.signs)
        .map(|(&k, sg)| sg * assessment.psi_particular[k])
        .collect();
    let y: Vec<f64> = walk.edges.iter().map(|&k| 1.0 / g.edges()[k].weight).collect();
    let lambda_min = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (-s - xi) / yi)
        .fold(f64::NEG_INFINITY, f64::max);
    let lambda_max = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (s - xi) / yi)
        .fold(f64::INFINITY, f64::min);
    let mut out = CycleFeasibility {
        feasible: false,
        lambda_min,
        lambda_max,
        lambda_star: None,
        f_lmin: None,
        f_lmax: None,
        solution: None,
    };
    if lambda_min > lambda_max {
        return Ok(out);
    }
    let f = |lam: f64| -> f64 {
        x.iter()
            .zip(&y)
            .map(|(xi, yi)| (xi + lam * yi).clamp(-1.0, 1.0).asin())
            .sum()
    };
    let (f_lo, f_hi) = (f(lambda_min), f(lambda_max));
    out.f_lmin = Some(f_lo);
    out.f_lmax = Some(f_hi);
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        return Ok(out);
    }
    let lambda_star = bisect_increasing(&f, lambda_min, lambda_max);
    let flows: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| xi + lambda_star * yi).collect();
    // walk the cycle: θ_{next} = θ_cur - arcsin(flow along the walk)
    let mut theta = vec![0.0; g.n()];
    for k in 0..g.n() - 1 {
        let (cur, next) = (walk.nodes[k], walk.nodes[k + 1]);
        theta[next] = theta[cur] - flows[k].clamp(-1.0, 1.0).asin();
    }
    out.feasible = true;
    out.lambda_star = Some(lambda_star);
    out.solution = Some(EquilibriumSolution::from_angles(g, omega, &theta, 0));
    Ok(out)
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`,
/// bisected until the bracket stops shrinking in floating point.
fn bisect_increasing<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    if f(lo) == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Sufficient condition on a cycle:
/// `‖BᵀL†ω‖∞ ≤ sin(γ) · min(a) / (max(a) + min(a))`.
pub fn cycle_sufficient_bound(g: &WeightedGraph, omega: &[f64], gamma: f64) -> Result<bool> {
    if !g.is_cycle() {
        return Err(SyncError::NotACycle);
    }
    let margin = sync_margin(g, omega)?.margin;
    let w = g.weights();
    let amin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let amax = w.iter().copied().fold(0.0, f64::max);
    Ok(margin <= gamma.sin() * amin / (amax + amin) + CONDITION_SLACK)
}

/// Particular solution of `ω = B diag(a) ψ` together with the cycle space
/// that parametrizes all other solutions.
#[derive(Debug, Clone)]
pub struct AuxiliarySolutionSpace {
    pub psi_particular: Vec<f64>,
    pub basis: CycleBasis,
}

impl AuxiliarySolutionSpace {
    /// `cᵀ arcsin(ψ)` for every basis cycle `c`. All zero iff
    /// `arcsin(ψ) ∈ Im(Bᵀ)`.
    pub fn cycle_residuals(&self, psi: &[f64]) -> Result<Vec<f64>> {
        if let Some((edge, &value)) = psi.iter().enumerate().find(|(_, v)| v.abs() > 1.0) {
            return Err(SyncError::PsiOutOfRange { edge, value });
        }
        let angles: Vec<f64> = psi.iter().map(|p| p.asin()).collect();
        Ok(self
            .basis
            .vectors
            .iter()
            .map(|c| c.iter().zip(&angles).map(|(ci, a)| ci * a).sum())
            .collect())
    }
}

pub fn auxiliary_solution_space(g: &WeightedGraph, omega: &[f64]) -> Result<AuxiliarySolutionSpace> {
    let assessment = sync_margin(g, omega)?;
    let basis = cycle_basis(g)?;
    Ok(AuxiliarySolutionSpace { psi_particular: assessment.psi_particular, basis })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNormSolution {
    pub psi: Vec<f64>,
    pub norm: f64,
}

/// Minimum ∞-norm solution of `ω = B diag(a) ψ`.
///
/// Solutions are `ψ_pt + Σ μ_k diag(1/a) c_k` over the fundamental cycles.
/// A norm above `sin(γ)` rules out equilibria with edge differences `≤ γ`.
pub fn min_infinity_norm_solution(g: &WeightedGraph, omega: &[f64]) -> Result<MinNormSolution> {
    let space = auxiliary_solution_space(g, omega)?;
    let p = &space.psi_particular;
    let w = g.weights();
    let dirs: Vec<Vec<f64>> = space
        .basis
        .vectors
        .iter()
        .map(|c| c.iter().zip(&w).map(|(ci, a)| ci / a).collect())
        .collect();
    // each chord appears in exactly one fundamental cycle, so |μ_k| / a_chord
    // is bounded by twice the particular solution's norm at any minimizer
    let pnorm = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bounds: Vec<f64> = space
        .basis
        .chords
        .iter()
        .map(|&k| 2.0 * pnorm * w[k] + 1e-12)
        .collect();
    let mu = lp::min_inf_norm(p, &dirs, &bounds);
    let mut psi = p.clone();
    for (d, m) in dirs.iter().zip(&mu) {
        for (v, de) in psi.iter_mut().zip(d) {
            *v += m * de;
        }
    }
    let norm = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm > pnorm {
        return Ok(MinNormSolution { psi: p.clone(), norm: pnorm });
    }
    Ok(MinNormSolution { psi, norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn ring(n: usize) -> WeightedGraph {
        WeightedGraph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn zero_frequencies() {
        let a = sync_margin(&ring(5), &[0.0; 5]).unwrap();
        assert_eq!(a.margin, 0.0);
        assert_eq!(a.gamma_pred, Some(0.0));
    }

    #[test]
    fn two_node_margin() {
        let g = WeightedGraph::new(2, [(0, 1, 4.0)]).unwrap();
        let a = sync_margin(&g, &[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(a.margin, 0.25, epsilon = 1e-15);
        assert!(a.condition_holds(0.25f64.asin()));
        assert!(!a.condition_holds(0.2f64.asin()));
    }

    #[test]
    fn infeasible_margin_has_no_gamma() {
        let g = WeightedGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let a = sync_margin(&g, &[1.5, -1.5]).unwrap();
        assert_eq!(a.gamma_pred, None);
    }

    #[test]
    fn k3_spectral() {
        let g = WeightedGraph::unweighted(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let b = graph::build_laplacian(&g).unwrap();
        let m = spectral_margin(&b, &g, &[1.0, -1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(m, 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn gamma_range() {
        let g = ring(3);
        assert!(matches!(necessary_conditions(&g, &[0.0; 3], FRAC_PI_2), Err(SyncError::GammaOutOfRange(_))));
        assert!(matches!(necessary_conditions(&g, &[0.0; 3], -0.1), Err(SyncError::GammaOutOfRange(_))));
    }

    #[test]
    fn necessary_star_violation() {
        let g = WeightedGraph::unweighted(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let gamma: f64 = 1.0;
        let w1 = 1.1 * 3.0 * gamma.sin();
        let omega = [w1, -w1 / 3.0, -w1 / 3.0, -w1 / 3.0];
        let c = necessary_conditions(&g, &omega, gamma).unwrap();
        assert!(!c.absolute_ok);
        // the leaves carry a third of the imbalance each and also exceed sin(γ)
        assert_eq!(c.violating_nodes, vec![0, 1, 2, 3]);
        let ok = necessary_conditions(&g, &[0.0; 4], gamma).unwrap();
        assert!(ok.absolute_ok && ok.incremental_ok);
        assert!(ok.violating_nodes.is_empty() && ok.violating_edges.is_empty());
    }

    #[test]
    fn acyclic_requires_tree() {
        assert_eq!(acyclic_equilibrium(&ring(4), &[0.0; 4], 1.0).unwrap_err(), SyncError::NotAcyclic);
    }

    #[test]
    fn two_node_acyclic() {
        let g = WeightedGraph::new(2, [(0, 1, 2.0)]).unwrap();
        let sol = acyclic_equilibrium(&g, &[1.0, -1.0], 1.2).unwrap();
        let s = sol.solution().unwrap();
        assert_abs_diff_eq!(s.theta[0] - s.theta[1], PI / 6.0, epsilon = 1e-14);
        let tight = acyclic_equilibrium(&g, &[1.0, -1.0], 0.5).unwrap();
        assert!(!tight.is_feasible());
    }

    #[test]
    fn path_at_rest() {
        let g = WeightedGraph::unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let s = acyclic_equilibrium(&g, &[0.0; 3], 0.5).unwrap();
        assert!(s.solution().unwrap().theta.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn cycle_requires_cycle() {
        let g = WeightedGraph::unweighted(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(single_cycle_feasibility(&g, &[0.0; 3], 1.0).unwrap_err(), SyncError::NotACycle);
        assert_eq!(cycle_sufficient_bound(&g, &[0.0; 3], 1.0).unwrap_err(), SyncError::NotACycle);
    }

    #[test]
    fn cycle_at_rest() {
        let r = single_cycle_feasibility(&ring(5), &[0.0; 5], 0.3).unwrap();
        assert!(r.feasible);
        assert_eq!(r.lambda_star, Some(0.0));
        assert!(r.solution.unwrap().cohesiveness < 1e-15);
        assert!(cycle_sufficient_bound(&ring(5), &[0.0; 5], 0.0).unwrap());
    }

    #[test]
    fn residuals_reject_out_of_range() {
        let space = auxiliary_solution_space(&ring(3), &[0.0; 3]).unwrap();
        assert!(matches!(space.cycle_residuals(&[1.5, 0.0, 0.0]), Err(SyncError::PsiOutOfRange { edge: 0, .. })));
    }

    #[test]
    fn min_norm_at_rest_and_on_trees() {
        let r = min_infinity_norm_solution(&ring(4), &[0.0; 4]).unwrap();
        assert_eq!(r.norm, 0.0);
        let tree = WeightedGraph::new(3, [(0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        let omega = [0.3, 0.1, -0.4];
        let r = min_infinity_norm_solution(&tree, &omega).unwrap();
        let a = sync_margin(&tree, &omega).unwrap();
        assert_eq!(r.psi, a.psi_particular);
        assert_eq!(r.norm, a.margin);
    }
}

//! Algebraic graph primitives.
//!
//! A [`WeightedGraph`] fixes an oriented edge list once at construction: every
//! edge runs from the smaller node index to the larger one, and edges are kept
//! in lexicographic order. The incidence matrix `B` (nodes × edges) has `+1` at
//! the source and `-1` at the sink, so `Bᵀx` is the vector of edge differences
//! `x_source - x_sink` and `L = B diag(a) Bᵀ`.
//!
//! Node indices are 0-based inside the library; file formats use 1-based ids.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, SyncError};

/// Above this node count the Laplacian pseudoinverse is never formed densely.
pub const DENSE_PINV_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub sink: usize,
    pub weight: f64,
}

/// Undirected, simple, positively weighted graph with a fixed orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    // (neighbor, edge index) per node
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    /// Builds a graph from 0-based `(i, j, weight)` triples.
    ///
    /// Endpoints are reordered so that `source < sink`; the edge list is then
    /// sorted lexicographically. Self-loops, repeated pairs and non-positive or
    /// non-finite weights are rejected.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list = Vec::new();
        for (i, j, w) in edges {
            if i >= n || j >= n {
                return Err(SyncError::InvalidGraph(format!(
                    "edge ({}, {}) references a node outside 1..={}",
                    i + 1,
                    j + 1,
                    n
                )));
            }
            if i == j {
                return Err(SyncError::InvalidGraph(format!("self-loop at node {}", i + 1)));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(SyncError::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    i + 1,
                    j + 1,
                    w
                )));
            }
            let (source, sink) = if i < j { (i, j) } else { (j, i) };
            list.push(Edge { source, sink, weight: w });
        }
        list.sort_by_key(|e| (e.source, e.sink));
        for pair in list.windows(2) {
            if pair[0].source == pair[1].source && pair[0].sink == pair[1].sink {
                return Err(SyncError::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    pair[0].source + 1,
                    pair[0].sink + 1
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in list.iter().enumerate() {
            adjacency[e.source].push((e.sink, k));
            adjacency[e.sink].push((e.source, k));
        }
        Ok(Self { n, edges: list, adjacency })
    }

    /// Unit-weight graph from 0-based pairs.
    pub fn unweighted<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// `(neighbor, edge index)` pairs incident to `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Weighted degree `Σ_j a_ij`.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adjacency[i]
            .iter()
            .map(|&(_, k)| self.edges[k].weight)
            .sum()
    }

    pub fn find_edge(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency
            .get(i)?
            .iter()
            .find(|&&(nb, _)| nb == j)
            .map(|&(_, k)| k)
    }

    /// Same topology, weights replaced by `f(edge index, edge)`.
    pub fn map_weights<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &Edge) -> f64,
    {
        let triples: Vec<_> = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| (e.source, e.sink, f(k, e)))
            .collect();
        Self::new(self.n, triples)
    }

    /// All weights multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        self.map_weights(|_, e| e.weight * k)
    }

    /// Connectivity via union-find over the edge list.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut uf = UnionFind::new(self.n);
        let mut components = self.n;
        for e in &self.edges {
            if uf.union(e.source, e.sink) {
                components -= 1;
            }
        }
        components == 1
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() + 1 == self.n && self.is_connected()
    }

    /// Connected, every node of degree two, as many edges as nodes.
    pub fn is_cycle(&self) -> bool {
        self.n >= 3
            && self.edges.len() == self.n
            && self.adjacency.iter().all(|a| a.len() == 2)
            && self.is_connected()
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SyncError::DegenerateGraph(self.n));
        }
        if !self.is_connected() {
            return Err(SyncError::DisconnectedGraph);
        }
        Ok(())
    }

    pub(crate) fn require_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(SyncError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    /// Dense incidence matrix `B` (n × |E|).
    pub fn incidence(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            b[(e.source, k)] = 1.0;
            b[(e.sink, k)] = -1.0;
        }
        b
    }

    /// Dense Laplacian `B diag(a) Bᵀ`, assembled edge by edge.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.source, e.source)] += e.weight;
            l[(e.sink, e.sink)] += e.weight;
            l[(e.source, e.sink)] -= e.weight;
            l[(e.sink, e.source)] -= e.weight;
        }
        l
    }

    /// `Bᵀx`: per-edge differences `x_source - x_sink`.
    pub fn edge_differences(&self, x: &[f64]) -> Vec<f64> {
        self.edges.iter().map(|e| x[e.source] - x[e.sink]).collect()
    }

    /// `B f`: net outflow at every node for edge flows `f`.
    pub fn node_balance(&self, flows: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (e, f) in self.edges.iter().zip(flows) {
            out[e.source] += f;
            out[e.sink] -= f;
        }
        out
    }

    /// `L x` without forming `L`.
    pub fn laplacian_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for e in &self.edges {
            let f = e.weight * (x[e.source] - x[e.sink]);
            out[e.source] += f;
            out[e.sink] -= f;
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Laplacian, its pseudoinverse and spectrum.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub laplacian: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl LaplacianBundle {
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Threshold below which an eigenvalue counts as zero.
    pub fn zero_tolerance(&self) -> f64 {
        1e-9 * self.lambda_max().abs().max(f64::MIN_POSITIVE)
    }

    pub fn pinv_apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.pinv * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }
}

/// Laplacian of a connected graph with spectrum and pseudoinverse.
///
/// The pseudoinverse is assembled from the eigendecomposition, inverting every
/// eigenvalue above `1e-9 · λ_n` and mapping the rest to zero.
pub fn build_laplacian(g: &WeightedGraph) -> Result<LaplacianBundle> {
    g.require_connected()?;
    let laplacian = g.laplacian();
    let eig = SymmetricEigen::new(laplacian.clone());
    let n = g.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let lambda_n = eigenvalues[n - 1];
    let tol = 1e-9 * lambda_n;
    let mut pinv = DMatrix::zeros(n, n);
    for (k, &lam) in eigenvalues.iter().enumerate() {
        if lam.abs() < tol {
            continue;
        }
        let u = eigenvectors.column(k);
        pinv += (u * u.transpose()) / lam;
    }
    // symmetrize rounding noise
    let pinv = (&pinv + pinv.transpose()) * 0.5;
    Ok(LaplacianBundle { laplacian, pinv, eigenvalues, eigenvectors })
}

/// `L†x` for a connected graph.
///
/// Small graphs go through the dense pseudoinverse; graphs above
/// [`DENSE_PINV_LIMIT`] nodes solve `(L + 11ᵀ/n) y = x - mean(x)` by
/// conjugate gradients instead.
pub fn pinv_apply(g: &WeightedGraph, x: &[f64]) -> Result<Vec<f64>> {
    g.require_connected()?;
    g.require_len(x)?;
    if g.n() <= DENSE_PINV_LIMIT {
        Ok(grounded_pinv_apply(g, x))
    } else {
        augmented_cg(g, x)
    }
}

/// Solves the grounded system (node 0 removed) by Cholesky and projects the
/// result onto `1⊥`. Equals `L†x` for connected graphs.
fn grounded_pinv_apply(g: &WeightedGraph, x: &[f64]) -> Vec<f64> {
    let n = g.n();
    let mean = x.iter().sum::<f64>() / n as f64;
    let l = g.laplacian();
    let reduced = l.view((1, 1), (n - 1, n - 1)).into_owned();
    let rhs = DVector::from_iterator(n - 1, x[1..].iter().map(|v| v - mean));
    let sol = match reduced.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => reduced.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(n - 1)),
    };
    let mut y = Vec::with_capacity(n);
    y.push(0.0);
    y.extend(sol.iter());
    let shift = y.iter().sum::<f64>() / n as f64;
    y.iter_mut().for_each(|v| *v -= shift);
    y
}

fn augmented_cg(g: &WeightedGraph, x: &[f64]) -> Result<Vec<f64>> {
    let n = g.n();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let b: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let s = v.iter().sum::<f64>() / nf;
        let mut out = g.laplacian_apply(v);
        out.iter_mut().for_each(|o| *o += s);
        out
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let mut y = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = dot(&r, &r);
    let target = 1e-28 * dot(&b, &b).max(f64::MIN_POSITIVE);
    for _ in 0..(10 * n).max(1000) {
        if rs <= target {
            break;
        }
        let ap = apply(&p);
        let alpha = rs / dot(&p, &ap);
        for i in 0..n {
            y[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    if rs > 1e-16 * dot(&b, &b).max(1.0) {
        return Err(SyncError::SingularSystem);
    }
    let s = y.iter().sum::<f64>() / nf;
    y.iter_mut().for_each(|v| *v -= s);
    Ok(y)
}

/// `max_{(i,j) ∈ E} |x_i - x_j|`, i.e. `‖Bᵀx‖∞`.
pub fn edge_infinity_norm(g: &WeightedGraph, x: &[f64]) -> Result<f64> {
    g.require_len(x)?;
    Ok(g.edges
        .iter()
        .map(|e| (x[e.source] - x[e.sink]).abs())
        .fold(0.0, f64::max))
}

/// Signed cycle vectors spanning `Ker(B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleBasis {
    pub vectors: Vec<Vec<f64>>,
    /// Edge index of the non-tree edge that closes each fundamental cycle.
    pub chords: Vec<usize>,
}

impl CycleBasis {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Breadth-first spanning tree rooted at node 0.
#[derive(Debug, Clone)]
pub(crate) struct SpanningTree {
    /// `(parent, edge index)`; `None` at the root.
    pub parent: Vec<Option<(usize, usize)>>,
    pub depth: Vec<usize>,
    /// Nodes in visiting order, root first.
    pub order: Vec<usize>,
    pub in_tree: Vec<bool>,
}

pub(crate) fn spanning_tree(g: &WeightedGraph) -> SpanningTree {
    let n = g.n();
    let mut parent = vec![None; n];
    let mut depth = vec![0; n];
    let mut seen = vec![false; n];
    let mut in_tree = vec![false; g.edge_count()];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    if n > 0 {
        seen[0] = true;
        queue.push_back(0);
    }
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, k) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, k));
                depth[v] = depth[u] + 1;
                in_tree[k] = true;
                queue.push_back(v);
            }
        }
    }
    SpanningTree { parent, depth, order, in_tree }
}

/// Fundamental cycles of a breadth-first spanning tree.
///
/// Each vector has `+1` on its chord and `±1` on the tree path closing it,
/// signed so that `B c = 0`.
pub fn cycle_basis(g: &WeightedGraph) -> Result<CycleBasis> {
    g.require_connected()?;
    let tree = spanning_tree(g);
    let m = g.edge_count();
    let mut vectors = Vec::new();
    let mut chords = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        if tree.in_tree[k] {
            continue;
        }
        let mut c = vec![0.0; m];
        c[k] = 1.0;
        // unit flow source -> sink over the chord, returned sink -> source
        // through the tree
        let (mut a, mut b) = (e.sink, e.source);
        let mut from_a = Vec::new();
        let mut into_b = Vec::new();
        while a != b {
            if tree.depth[a] >= tree.depth[b] {
                let (p, pk) = tree.parent[a].unwrap();
                from_a.push((a, p, pk));
                a = p;
            } else {
                let (p, pk) = tree.parent[b].unwrap();
                into_b.push((p, b, pk));
                b = p;
            }
        }
        for (u, w, pk) in from_a.into_iter().chain(into_b) {
            let edge = g.edges()[pk];
            c[pk] = if edge.source == u && edge.sink == w { 1.0 } else { -1.0 };
        }
        vectors.push(c);
        chords.push(k);
    }
    Ok(CycleBasis { vectors, chords })
}

#[derive(Debug, Clone)]
pub struct ConnectivityMetrics {
    pub lambda2: f64,
    pub lambda_n: f64,
    pub max_degree: f64,
    resistance: DMatrix<f64>,
}

impl ConnectivityMetrics {
    /// `R_ij = L†_ii + L†_jj - 2 L†_ij`.
    pub fn effective_resistance(&self, i: usize, j: usize) -> f64 {
        self.resistance[(i, j)]
    }

    pub fn resistance_matrix(&self) -> &DMatrix<f64> {
        &self.resistance
    }
}

pub fn connectivity_metrics(g: &WeightedGraph) -> Result<ConnectivityMetrics> {
    let bundle = build_laplacian(g)?;
    let n = g.n();
    let p = &bundle.pinv;
    let resistance = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            p[(i, i)] + p[(j, j)] - 2.0 * p[(i, j)]
        }
    });
    let max_degree = (0..n).map(|i| g.weighted_degree(i)).fold(0.0, f64::max);
    Ok(ConnectivityMetrics {
        lambda2: bundle.lambda2(),
        lambda_n: bundle.lambda_max(),
        max_degree,
        resistance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn k3() -> WeightedGraph {
        WeightedGraph::unweighted(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn orientation_is_lexicographic() {
        let g = WeightedGraph::new(3, [(2, 0, 1.0), (1, 0, 2.0)]).unwrap();
        let e = g.edges();
        assert_eq!((e[0].source, e[0].sink), (0, 1));
        assert_eq!((e[1].source, e[1].sink), (0, 2));
        assert_eq!(e[0].weight, 2.0);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(WeightedGraph::new(2, [(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(WeightedGraph::new(2, [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn single_edge_pseudoinverse() {
        let a = 2.5;
        let g = WeightedGraph::new(2, [(0, 1, a)]).unwrap();
        let b = build_laplacian(&g).unwrap();
        assert_abs_diff_eq!(b.laplacian[(0, 1)], -a);
        let expected = 1.0 / (4.0 * a);
        assert_abs_diff_eq!(b.pinv[(0, 0)], expected, epsilon = 1e-14);
        assert_abs_diff_eq!(b.pinv[(0, 1)], -expected, epsilon = 1e-14);
    }

    #[test]
    fn k3_spectrum() {
        let b = build_laplacian(&k3()).unwrap();
        assert_abs_diff_eq!(b.eigenvalues[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.eigenvalues[1], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.eigenvalues[2], 3.0, epsilon = 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { -1.0 };
                assert_abs_diff_eq!(b.laplacian[(i, j)], want);
            }
        }
    }

    #[test]
    fn errors_on_disconnected_and_degenerate() {
        let g = WeightedGraph::unweighted(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(build_laplacian(&g).unwrap_err(), SyncError::DisconnectedGraph);
        let g1 = WeightedGraph::new(1, []).unwrap();
        assert_eq!(build_laplacian(&g1).unwrap_err(), SyncError::DegenerateGraph(1));
        assert_eq!(cycle_basis(&g).unwrap_err(), SyncError::DisconnectedGraph);
    }

    #[test]
    fn edge_norm_examples() {
        let path = WeightedGraph::unweighted(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(edge_infinity_norm(&path, &[0.0, 1.0, 3.0]).unwrap(), 2.0);
        assert_eq!(edge_infinity_norm(&path, &[4.0; 3]).unwrap(), 0.0);
        let v = edge_infinity_norm(&k3(), &[1.0 / 3.0, -1.0 / 3.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(
            edge_infinity_norm(&path, &[0.0]),
            Err(SyncError::DimensionMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn tree_has_empty_cycle_basis() {
        let star = WeightedGraph::unweighted(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(cycle_basis(&star).unwrap().is_empty());
    }

    #[test]
    fn ring_cycle_basis_is_a_signed_all_ones_vector() {
        let n = 6;
        let ring = WeightedGraph::unweighted(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let basis = cycle_basis(&ring).unwrap();
        assert_eq!(basis.rank(), 1);
        let c = &basis.vectors[0];
        assert!(c.iter().all(|v| v.abs() == 1.0));
        let bc = ring.node_balance(c);
        assert!(bc.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn metrics_single_edge_and_k3() {
        let g = WeightedGraph::new(2, [(0, 1, 4.0)]).unwrap();
        let m = connectivity_metrics(&g).unwrap();
        assert_abs_diff_eq!(m.effective_resistance(0, 1), 0.25, epsilon = 1e-14);
        let m3 = connectivity_metrics(&k3()).unwrap();
        assert_abs_diff_eq!(m3.lambda2, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m3.lambda_n, 3.0, epsilon = 1e-12);
        assert_eq!(m3.max_degree, 2.0);
        for i in 0..3 {
            assert_eq!(m3.effective_resistance(i, i), 0.0);
            for j in 0..3 {
                if i != j {
                    assert_abs_diff_eq!(m3.effective_resistance(i, j), 2.0 / 3.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn grounded_solve_matches_dense_pinv() {
        let g = WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (0, 3, 3.0), (0, 2, 1.5)])
            .unwrap();
        let x = [1.0, -0.5, 2.0, -2.5];
        let b = build_laplacian(&g).unwrap();
        let dense = b.pinv_apply(&x);
        let grounded = pinv_apply(&g, &x).unwrap();
        let cg = augmented_cg(&g, &x).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(dense[i], grounded[i], epsilon = 1e-12);
            assert_abs_diff_eq!(dense[i], cg[i], epsilon = 1e-10);
        }
    }
}

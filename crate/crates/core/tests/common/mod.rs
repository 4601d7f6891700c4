#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use syncgrid::WeightedGraph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus independent extra edges with probability `p`.
pub fn connected_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> WeightedGraph {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for j in 1..n {
        let i = rng.random_range(0..j);
        edges.push((i, j, rng.random_range(0.5..3.0)));
        seen.insert((i, j));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !seen.contains(&(i, j)) && rng.random::<f64>() < p {
                edges.push((i, j, rng.random_range(0.5..3.0)));
            }
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

pub fn tree<R: Rng>(rng: &mut R, n: usize) -> WeightedGraph {
    connected_graph(rng, n, 0.0)
}

pub fn cycle(n: usize, w: f64) -> WeightedGraph {
    WeightedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, w))).unwrap()
}

/// Zero-mean frequencies of spread `scale`.
pub fn frequencies<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    w.iter().map(|v| v - mean).collect()
}

/// Frequencies rescaled so that the sync margin equals `target`.
pub fn frequencies_with_margin<R: Rng>(rng: &mut R, g: &WeightedGraph, target: f64) -> Vec<f64> {
    let w = frequencies(rng, g.n(), 1.0);
    let m = syncgrid::sync::sync_margin(g, &w).unwrap().margin;
    w.iter().map(|v| v * target / m).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

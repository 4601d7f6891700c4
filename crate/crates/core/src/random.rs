//! Random network ensembles.
//!
//! Every random draw comes from a ChaCha8 substream keyed by
//! `(seed, sample index, attempt)` with the stream id selecting the stage
//! (topology, weights, frequencies). A sample is therefore a pure function of
//! its key, independent of how samples are distributed over threads.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SyncError};
use crate::graph::WeightedGraph;
use crate::sync::sync_margin;

pub const MAX_ATTEMPTS: usize = 10_000;
pub const DEFAULT_WEIGHT_RANGE: (f64, f64) = (0.5, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Topology = 1,
    Weights = 2,
    Frequencies = 3,
    Experiment = 4,
}

/// Generator for one `(seed, index, attempt, stage)` key.
pub fn substream(seed: u64, index: u64, attempt: u64, stage: Stage) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&attempt.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stage as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphModel {
    /// Each pair independently with probability `p`.
    Erg { p: f64 },
    /// Uniform points in the unit square, edge iff distance `≤ p`.
    Rgg { p: f64 },
    /// Ring where each node is coupled to its `k` nearest neighbors on either
    /// side, each ring edge rewired with probability `p`. `k = 1` is a cycle.
    Smn { p: f64, k: usize },
}

impl GraphModel {
    pub fn erg(p: f64) -> Self {
        GraphModel::Erg { p }
    }

    pub fn rgg(p: f64) -> Self {
        GraphModel::Rgg { p }
    }

    pub fn smn(p: f64, k: usize) -> Self {
        GraphModel::Smn { p, k }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            GraphModel::Erg { p } | GraphModel::Rgg { p } | GraphModel::Smn { p, .. } => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::Erg { .. } => "erg",
            GraphModel::Rgg { .. } => "rgg",
            GraphModel::Smn { .. } => "smn",
        }
    }

    /// `erg`, `rgg` or `smn` (with `k = 1`).
    pub fn from_name(name: &str, p: f64) -> Result<Self> {
        let m = match name.to_ascii_lowercase().as_str() {
            "erg" => GraphModel::erg(p),
            "rgg" => GraphModel::rgg(p),
            "smn" => GraphModel::smn(p, 1),
            other => return Err(SyncError::InvalidParameter(format!("unknown graph model '{other}'"))),
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let p = self.parameter();
        let upper = if matches!(self, GraphModel::Rgg { .. }) { std::f64::consts::SQRT_2 } else { 1.0 };
        if !(0.0..=upper).contains(&p) {
            return Err(SyncError::InvalidParameter(format!("{} parameter {p} outside [0, {upper}]", self.name())));
        }
        if let GraphModel::Smn { k, .. } = self {
            if *k == 0 {
                return Err(SyncError::InvalidParameter("small-world neighborhood k must be positive".into()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphModel::Smn { p, k } if *k != 1 => write!(f, "smn({p}, k={k})"),
            _ => write!(f, "{}({})", self.name(), self.parameter()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrequencyDistribution {
    /// `q ~ U[-α/2, α/2]`.
    Uniform { alpha: f64 },
    /// `q ~ U[-1, 1]`.
    UnitUniform,
    /// `q ∈ {-1, +1}` with equal probability.
    Bipolar,
}

impl FrequencyDistribution {
    fn validate(&self) -> Result<()> {
        if let FrequencyDistribution::Uniform { alpha } = self {
            if !(*alpha > 0.0 && alpha.is_finite()) {
                return Err(SyncError::InvalidParameter(format!("alpha {alpha} must be positive")));
            }
        }
        Ok(())
    }
}

impl FromStr for FrequencyDistribution {
    type Err = SyncError;

    /// `uniform`, `bipolar`, or a positive number taken as the width `α`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(FrequencyDistribution::UnitUniform),
            "bipolar" => Ok(FrequencyDistribution::Bipolar),
            other => {
                let alpha: f64 = other
                    .parse()
                    .map_err(|_| SyncError::InvalidParameter(format!("bad frequency distribution '{s}'")))?;
                let d = FrequencyDistribution::Uniform { alpha };
                d.validate()?;
                Ok(d)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightSpec {
    Unit,
    Uniform { low: f64, high: f64 },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Uniform { low: DEFAULT_WEIGHT_RANGE.0, high: DEFAULT_WEIGHT_RANGE.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NominalNetworkSpec {
    pub n: usize,
    pub model: GraphModel,
    pub frequencies: FrequencyDistribution,
    pub weights: WeightSpec,
    pub seed: u64,
}

impl NominalNetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SyncError::DegenerateGraph(self.n));
        }
        self.model.validate()?;
        self.frequencies.validate()?;
        if let WeightSpec::Uniform { low, high } = self.weights {
            if !(low > 0.0 && high >= low && high.is_finite()) {
                return Err(SyncError::InvalidParameter(format!("weight range [{low}, {high}]")));
            }
        }
        Ok(())
    }
}

fn sample_pairs<R: Rng>(n: usize, model: GraphModel, rng: &mut R) -> Vec<(usize, usize)> {
    match model {
        GraphModel::Erg { p } => {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
        GraphModel::Rgg { p: r } => {
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let d = (pts[i].0 - pts[j].0).hypot(pts[i].1 - pts[j].1);
                    if d <= r {
                        pairs.push((i, j));
                    }
                }
            }
            pairs
        }
        GraphModel::Smn { p, k } => {
            let mut set: HashSet<(usize, usize)> = HashSet::new();
            let key = |a: usize, b: usize| (a.min(b), a.max(b));
            let reach = k.min((n - 1) / 2).max(1);
            let mut ring = Vec::new();
            for d in 1..=reach {
                for i in 0..n {
                    let e = key(i, (i + d) % n);
                    if set.insert(e) {
                        ring.push((i, (i + d) % n));
                    }
                }
            }
            for (i, j) in ring {
                if rng.random::<f64>() >= p || !set.contains(&key(i, j)) {
                    continue;
                }
                let candidates: Vec<usize> = (0..n).filter(|&m| m != i && !set.contains(&key(i, m))).collect();
                if let Some(&m) = candidates.choose(rng) {
                    set.remove(&key(i, j));
                    set.insert(key(i, m));
                }
            }
            let mut pairs: Vec<_> = set.into_iter().collect();
            pairs.sort_unstable();
            pairs
        }
    }
}

/// Unit-weight connected topology; disconnected draws are discarded.
pub fn generate_graph_with<R: Rng>(n: usize, model: GraphModel, rng: &mut R) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(SyncError::DegenerateGraph(n));
    }
    model.validate()?;
    for _ in 0..MAX_ATTEMPTS {
        let g = WeightedGraph::unweighted(n, sample_pairs(n, model, rng))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(SyncError::ConnectivityRetryExceeded(MAX_ATTEMPTS))
}

pub fn generate_graph(spec: &NominalNetworkSpec) -> Result<WeightedGraph> {
    spec.validate()?;
    generate_graph_with(spec.n, spec.model, &mut substream(spec.seed, 0, 0, Stage::Topology))
}

/// Replaces every weight by an i.i.d. draw.
pub fn sample_weights<R: Rng>(g: &WeightedGraph, weights: WeightSpec, rng: &mut R) -> Result<WeightedGraph> {
    match weights {
        WeightSpec::Unit => g.map_weights(|_, _| 1.0),
        WeightSpec::Uniform { low, high } => {
            let dist = Uniform::new_inclusive(low, high)
                .map_err(|e| SyncError::InvalidParameter(format!("weight range: {e}")))?;
            g.map_weights(|_, _| dist.sample(rng))
        }
    }
}

/// Draws `q` and returns `q - mean(q)`.
pub fn sample_frequencies<R: Rng>(n: usize, dist: FrequencyDistribution, rng: &mut R) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(SyncError::DegenerateGraph(n));
    }
    dist.validate()?;
    let q: Vec<f64> = match dist {
        FrequencyDistribution::Uniform { alpha } => {
            (0..n).map(|_| rng.random_range(-alpha / 2.0..=alpha / 2.0)).collect()
        }
        FrequencyDistribution::UnitUniform => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        FrequencyDistribution::Bipolar => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    };
    Ok(crate::dynamics::recentre(&q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NominalNetwork {
    pub graph: WeightedGraph,
    pub omega: Vec<f64>,
    pub margin: f64,
    /// Number of draws including the accepted one.
    pub attempts: usize,
}

/// Draws `(G, ω)` until the sync margin is below one.
pub fn nominal_network(spec: &NominalNetworkSpec) -> Result<NominalNetwork> {
    nominal_network_indexed(spec, 0)
}

/// Sample `index` of the ensemble defined by `spec`.
pub fn nominal_network_indexed(spec: &NominalNetworkSpec, index: u64) -> Result<NominalNetwork> {
    spec.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let a = attempt as u64;
        let topo = generate_graph_with(spec.n, spec.model, &mut substream(spec.seed, index, a, Stage::Topology))?;
        let graph = sample_weights(&topo, spec.weights, &mut substream(spec.seed, index, a, Stage::Weights))?;
        let omega = sample_frequencies(spec.n, spec.frequencies, &mut substream(spec.seed, index, a, Stage::Frequencies))?;
        let margin = sync_margin(&graph, &omega)?.margin;
        if margin < 1.0 {
            return Ok(NominalNetwork { graph, omega, margin, attempts: attempt + 1 });
        }
    }
    Err(SyncError::MarginRetryExceeded(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph_limits() {
        let mut rng = substream(1, 0, 0, Stage::Topology);
        let g = generate_graph_with(7, GraphModel::erg(1.0), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 21);
        let g = generate_graph_with(7, GraphModel::rgg(std::f64::consts::SQRT_2), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 21);
    }

    #[test]
    fn unrewired_small_world_is_a_ring() {
        let mut rng = substream(1, 0, 0, Stage::Topology);
        let g = generate_graph_with(10, GraphModel::smn(0.0, 1), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 10);
        assert!(g.is_cycle());
        let g = generate_graph_with(10, GraphModel::smn(0.0, 2), &mut rng).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert!((0..10).all(|i| g.degree(i) == 4));
    }

    #[test]
    fn impossible_connectivity() {
        let mut rng = substream(1, 0, 0, Stage::Topology);
        let r = generate_graph_with(5, GraphModel::erg(0.0), &mut rng);
        assert_eq!(r.unwrap_err(), SyncError::ConnectivityRetryExceeded(MAX_ATTEMPTS));
    }

    #[test]
    fn bipolar_pair() {
        for seed in 0..20 {
            let w = sample_frequencies(2, FrequencyDistribution::Bipolar, &mut substream(seed, 0, 0, Stage::Frequencies))
                .unwrap();
            assert!(w == vec![0.0, 0.0] || w == vec![1.0, -1.0] || w == vec![-1.0, 1.0]);
        }
    }

    #[test]
    fn parsing() {
        assert_eq!("bipolar".parse::<FrequencyDistribution>().unwrap(), FrequencyDistribution::Bipolar);
        assert_eq!("6".parse::<FrequencyDistribution>().unwrap(), FrequencyDistribution::Uniform { alpha: 6.0 });
        assert!("-1".parse::<FrequencyDistribution>().is_err());
        assert!(GraphModel::from_name("erg", 1.5).is_err());
        assert_eq!(GraphModel::from_name("SMN", 0.2).unwrap(), GraphModel::smn(0.2, 1));
    }
}

//! Monte Carlo validation of the sync condition and the critical-coupling
//! accuracy study.

pub mod report;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::critical_coupling_search;
use crate::equilibrium::{solve_equilibrium, NewtonOptions};
use crate::error::{Result, SyncError};
use crate::graph;
use crate::random::{
    generate_graph_with, nominal_network_indexed, sample_frequencies, substream, FrequencyDistribution, GraphModel,
    NominalNetworkSpec, Stage, WeightSpec,
};
use crate::sync::sync_margin;

/// Residual tolerance of the equilibrium solves in the hypothesis test.
pub const SOLVE_TOLERANCE: f64 = 1e-6;
/// Slack on the predicted cohesiveness before a sample counts as a failure.
pub const COHESIVENESS_TOLERANCE: f64 = 1e-4;
pub const RANDOM_RESTARTS: usize = 5;

fn check_level(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(SyncError::InvalidLevel(format!("{name} = {v} outside (0, 1)")));
    }
    Ok(())
}

/// Smallest `N ≥ ln(2/η) / (2ε²)`.
pub fn chernoff_samples(epsilon: f64, eta: f64) -> Result<u64> {
    check_level("epsilon", epsilon)?;
    check_level("eta", eta)?;
    let bound = (2.0 / eta).ln() / (2.0 * epsilon * epsilon);
    // guard against the bound landing a hair above an integer
    let n = (bound - 1e-9 * bound).ceil().max(1.0);
    Ok(n as u64)
}

/// Accuracy guaranteed by `samples` draws at confidence `1 - η`.
pub fn chernoff_epsilon(samples: u64, eta: f64) -> Result<f64> {
    check_level("eta", eta)?;
    if samples == 0 {
        return Err(SyncError::InvalidParameter("samples must be positive".into()));
    }
    Ok(((2.0 / eta).ln() / (2.0 * samples as f64)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSample {
    pub index: u64,
    pub margin: f64,
    /// `arcsin(margin)`.
    pub gamma: f64,
    /// Cohesiveness of the best equilibrium found, if any converged.
    pub cohesiveness: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub spec: NominalNetworkSpec,
    pub samples: u64,
    pub failures: u64,
    pub empirical_probability: f64,
    pub tolerance_used: f64,
    pub records: Vec<HypothesisSample>,
}

/// Tests "margin ≤ sin γ ⇒ an equilibrium with cohesiveness ≤ γ exists" on
/// `samples` nominal networks, with `γ = arcsin(margin)`.
///
/// Each network is solved from the linear seed and then from
/// [`RANDOM_RESTARTS`] perturbed seeds before it is counted as a failure.
pub fn hypothesis_experiment(spec: &NominalNetworkSpec, samples: u64) -> Result<HypothesisResult> {
    if samples == 0 {
        return Err(SyncError::InvalidParameter("samples must be positive".into()));
    }
    let records: Vec<HypothesisSample> = (0..samples)
        .into_par_iter()
        .map(|index| hypothesis_sample(spec, index))
        .collect::<Result<_>>()?;
    let failures = records.iter().filter(|r| !r.holds).count() as u64;
    Ok(HypothesisResult {
        spec: *spec,
        samples,
        failures,
        empirical_probability: (samples - failures) as f64 / samples as f64,
        tolerance_used: COHESIVENESS_TOLERANCE,
        records,
    })
}

fn hypothesis_sample(spec: &NominalNetworkSpec, index: u64) -> Result<HypothesisSample> {
    let net = nominal_network_indexed(spec, index)?;
    let gamma = net.margin.asin();
    let opts = NewtonOptions { tolerance: SOLVE_TOLERANCE, ..Default::default() };
    let dc = graph::pinv_apply(&net.graph, &net.omega)?;
    let mut rng = substream(spec.seed, index, 0, Stage::Experiment);
    let mut best: Option<f64> = None;
    for attempt in 0..=RANDOM_RESTARTS {
        let seed: Vec<f64> = if attempt == 0 {
            dc.clone()
        } else {
            let scale = rng.random_range(0.8..1.6);
            dc.iter().map(|t| scale * t + rng.random_range(-0.1..0.1) * gamma).collect()
        };
        if let Ok(sol) = solve_equilibrium(&net.graph, &net.omega, Some(&seed), &opts) {
            best = Some(best.map_or(sol.cohesiveness, |b| b.min(sol.cohesiveness)));
            if sol.cohesiveness <= gamma + COHESIVENESS_TOLERANCE {
                break;
            }
        }
    }
    let holds = best.is_some_and(|c| c <= gamma + COHESIVENESS_TOLERANCE);
    Ok(HypothesisSample { index, margin: net.margin, gamma, cohesiveness: best, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub n: usize,
    pub model: GraphModel,
    pub distribution: FrequencyDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyResult {
    pub cell: AccuracyCell,
    pub seed: u64,
    /// `K_min / ‖BᵀL†ω‖∞` per sample.
    pub ratios: Vec<f64>,
    pub mean_ratio: f64,
}

/// Mean of `K_min / K_critical` over unit-weight networks of one cell.
pub fn accuracy_experiment(cell: &AccuracyCell, samples: u64, seed: u64) -> Result<AccuracyResult> {
    if samples == 0 {
        return Err(SyncError::InvalidParameter("samples must be positive".into()));
    }
    let ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|index| accuracy_sample(cell, seed, index))
        .collect::<Result<_>>()?;
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(AccuracyResult { cell: *cell, seed, ratios, mean_ratio })
}

fn accuracy_sample(cell: &AccuracyCell, seed: u64, index: u64) -> Result<f64> {
    for attempt in 0..crate::random::MAX_ATTEMPTS as u64 {
        let g = generate_graph_with(cell.n, cell.model, &mut substream(seed, index, attempt, Stage::Topology))?;
        let omega = sample_frequencies(cell.n, cell.distribution, &mut substream(seed, index, attempt, Stage::Frequencies))?;
        // an all-equal bipolar draw recentres to zero and has no threshold
        if sync_margin(&g, &omega)?.margin < 1e-12 {
            continue;
        }
        let r = critical_coupling_search(&g, &omega, std::f64::consts::FRAC_PI_2)?;
        return Ok(r.ratio);
    }
    Err(SyncError::MarginRetryExceeded(crate::random::MAX_ATTEMPTS))
}

/// Default parameter grid per model: a sparse, a medium and a dense value.
pub fn default_p_grid(model: &str, n: usize) -> Vec<f64> {
    match model {
        "erg" => vec![(2.5 / n as f64).min(1.0), 0.5, 1.0],
        "rgg" => vec![(2.0 * (n as f64).ln() / n as f64).sqrt().min(1.0), 0.7, std::f64::consts::SQRT_2],
        _ => vec![0.1, 0.5, 1.0],
    }
}

/// Spec for a Monte Carlo cell with the ensemble's default weights.
pub fn hypothesis_spec(n: usize, model: GraphModel, distribution: FrequencyDistribution, seed: u64) -> NominalNetworkSpec {
    NominalNetworkSpec { n, model, frequencies: distribution, weights: WeightSpec::default(), seed }
}

/// Seed of cell `k` derived from a master seed.
pub fn cell_seed(master: u64, k: u64) -> u64 {
    let mut rng = substream(master, k, 0, Stage::Experiment);
    rng.random()
}

//! Randomized operating points: fluctuating loads and generation balanced by
//! a few adjustable sources.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ac_power_flow, build_oscillator_model, AcFlow, PowerCase};
use crate::error::{Result, SyncError};
use crate::random::{substream, Stage};
use crate::sync::sync_margin;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub load_fluct_fraction: f64,
    pub gen_fluct_fraction: f64,
    /// Standard deviation of the fluctuations in p.u.
    pub sigma: f64,
    pub fast_ramp_fraction: f64,
    pub controllable_load_fraction: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            load_fluct_fraction: 0.5,
            gen_fluct_fraction: 0.33,
            sigma: 0.3,
            fast_ramp_fraction: 0.10,
            controllable_load_fraction: 0.10,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("load_fluct_fraction", self.load_fluct_fraction),
            ("gen_fluct_fraction", self.gen_fluct_fraction),
            ("fast_ramp_fraction", self.fast_ramp_fraction),
            ("controllable_load_fraction", self.controllable_load_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(SyncError::InvalidParameter(format!("{name} = {f} outside [0, 1]")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(SyncError::InvalidParameter(format!("sigma {} must be nonnegative", self.sigma)));
        }
        Ok(())
    }
}

/// `ceil(fraction · count)` distinct members, uniformly.
fn select<R: Rng>(pool: &[usize], fraction: f64, rng: &mut R) -> Vec<usize> {
    let k = ((fraction * pool.len() as f64).ceil() as usize).min(pool.len());
    pool.choose_multiple(rng, k).copied().collect()
}

/// Scenario `index` of the ensemble defined by `cfg`.
///
/// Selected loads and generators are redrawn from a normal distribution
/// centred at their nominal value. The resulting imbalance is shared equally
/// by the fast-ramping generators and controllable loads.
pub fn randomize_scenario(case: &PowerCase, cfg: &ScenarioConfig, index: u64) -> Result<PowerCase> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, index, 0, Stage::Experiment);
    let mut out = case.clone();
    let loads: Vec<usize> = (0..case.buses.len()).filter(|&k| case.buses[k].pd > 0.0).collect();
    let gens: Vec<usize> = (0..case.generators.len()).filter(|&k| case.generators[k].in_service).collect();
    let fluct_loads = select(&loads, cfg.load_fluct_fraction, &mut rng);
    let fluct_gens = select(&gens, cfg.gen_fluct_fraction, &mut rng);
    let ramp_gens = select(&gens, cfg.fast_ramp_fraction, &mut rng);
    let ctrl_loads = select(&loads, cfg.controllable_load_fraction, &mut rng);
    let adjustable = ramp_gens.len() + ctrl_loads.len();
    if adjustable == 0 {
        return Err(SyncError::NoAdjustableSources);
    }
    let sd = cfg.sigma * case.base_mva;
    let noise = Normal::new(0.0, sd).map_err(|e| SyncError::InvalidParameter(e.to_string()))?;
    // net injection change caused by the fluctuations, in MW
    let mut imbalance = 0.0;
    for &k in &fluct_loads {
        let d = noise.sample(&mut rng);
        out.buses[k].pd += d;
        imbalance -= d;
    }
    for &k in &fluct_gens {
        let d = noise.sample(&mut rng);
        out.generators[k].pg += d;
        imbalance += d;
    }
    let share = imbalance / adjustable as f64;
    for &k in &ramp_gens {
        out.generators[k].pg -= share;
    }
    for &k in &ctrl_loads {
        out.buses[k].pd += share;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub index: u64,
    pub margin: f64,
    /// `arcsin(margin)`, absent when the margin exceeds one.
    pub predicted: Option<f64>,
    /// Cohesiveness of the AC solution when one was found.
    pub realized: Option<f64>,
}

impl ScenarioOutcome {
    pub fn error(&self) -> Option<f64> {
        Some(self.realized? - self.predicted?)
    }
}

/// Evaluates `samples` scenarios in parallel.
pub fn scenario_batch(case: &PowerCase, cfg: &ScenarioConfig, samples: u64) -> Result<Vec<ScenarioOutcome>> {
    (0..samples)
        .into_par_iter()
        .map(|index| {
            let sc = randomize_scenario(case, cfg, index)?;
            let model = build_oscillator_model(&sc, false)?;
            let margin = sync_margin(model.graph(), model.omega())?.margin;
            let realized = match ac_power_flow(&model)? {
                AcFlow::Converged(sol) => Some(sol.cohesiveness),
                AcFlow::Infeasible { .. } => None,
            };
            let predicted = (margin <= 1.0).then(|| margin.asin());
            Ok(ScenarioOutcome { index, margin, predicted, realized })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerflow::parse_case;

    fn case() -> PowerCase {
        parse_case(
            r#"{"base_mva": 100,
                "buses": [{"id": 1, "type": "generator"}, {"id": 2, "type": "load", "pd": 30},
                          {"id": 3, "type": "load", "pd": 20}],
                "generators": [{"bus": 1, "pg": 50}],
                "branches": [{"from": 1, "to": 2, "x": 0.1}, {"from": 2, "to": 3, "x": 0.1}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn zero_sigma_keeps_the_case() {
        let cfg = ScenarioConfig { sigma: 0.0, ..Default::default() };
        let out = randomize_scenario(&case(), &cfg, 3).unwrap();
        assert_eq!(out, case());
    }

    #[test]
    fn dispatch_balances_fluctuations() {
        let cfg = ScenarioConfig { seed: 9, ..Default::default() };
        for i in 0..20 {
            let out = randomize_scenario(&case(), &cfg, i).unwrap();
            let total: f64 = out.injections_mw().iter().sum();
            assert!(total.abs() < 1e-9, "{total}");
        }
    }

    #[test]
    fn no_adjustable_sources() {
        let cfg = ScenarioConfig { fast_ramp_fraction: 0.0, controllable_load_fraction: 0.0, ..Default::default() };
        assert_eq!(randomize_scenario(&case(), &cfg, 0).unwrap_err(), SyncError::NoAdjustableSources);
    }
}

//! Lossless power networks as coupled oscillators.
//!
//! A case maps to the structure-preserving model with coupling
//! `a_ij = |V_i||V_j| Im(Y_ij)` and injections `ω_i = (P_g - P_d) / base`.
//! Generator buses are second order, load buses first order.

pub mod case;
pub mod contingency;
pub mod scenario;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

pub use case::{parse_case, parse_json_case, parse_matpower, Branch, Bus, BusKind, Generator, PowerCase, RampDefinition};
pub use contingency::{contingency_scan, ContingencyScan, LineLimit, ScanPoint, Trip};
pub use scenario::{randomize_scenario, ScenarioConfig};

use crate::dynamics::{rotating_frame, OscillatorNetwork};
use crate::equilibrium::{solve_equilibrium, EquilibriumSolution, NewtonOptions};
use crate::error::{Result, SyncError};
use crate::graph::{self, WeightedGraph};
use crate::sync::sync_margin;

/// Names accepted by [`bundled_case`].
pub const BUNDLED_CASES: [&str; 2] = ["case9", "rts96"];

/// Cases shipped with the library: the 9-bus system and the three-area
/// 73-bus system.
pub fn bundled_case(name: &str) -> Result<PowerCase> {
    let text = match name {
        "case9" => include_str!("../../data/case9.m"),
        "rts96" => include_str!("../../data/rts96.json"),
        other => return Err(SyncError::InvalidParameter(format!("no bundled case '{other}'"))),
    };
    parse_case(text)
}

pub const DEFAULT_GEN_INERTIA: f64 = 1.0;
pub const DEFAULT_GEN_DAMPING: f64 = 1.0;
pub const DEFAULT_LOAD_DAMPING: f64 = 0.1;

/// A case mapped onto the oscillator model.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    /// Case bus id of every node.
    pub bus_ids: Vec<u32>,
    /// Natural frequencies already shifted to the rotating frame.
    pub network: OscillatorNetwork,
    /// Angle limit per edge, `π/2` where the line is unconstrained.
    pub line_limits: Vec<f64>,
    pub approximations: Vec<String>,
}

impl PowerNetwork {
    pub fn graph(&self) -> &WeightedGraph {
        self.network.graph()
    }

    pub fn omega(&self) -> &[f64] {
        self.network.omega()
    }

    /// `(from bus, to bus)` of an edge.
    pub fn edge_buses(&self, k: usize) -> (u32, u32) {
        let e = self.graph().edges()[k];
        (self.bus_ids[e.source], self.bus_ids[e.sink])
    }
}

struct MergedLine {
    susceptance: f64,
    rate: f64,
    unlimited: bool,
    angle_limit: Option<f64>,
}

/// Builds the oscillator model. With `strict`, resistive branches are
/// rejected instead of approximated.
pub fn build_oscillator_model(case: &PowerCase, strict: bool) -> Result<PowerNetwork> {
    let mut case = case.clone();
    case.validate()?;
    if strict && case.has_losses() {
        return Err(SyncError::NonLosslessCase("branches with nonzero resistance".into()));
    }
    let idx = case.bus_index();
    let n = case.buses.len();
    let mut merged: BTreeMap<(usize, usize), MergedLine> = BTreeMap::new();
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (i, j) = (idx[&br.from], idx[&br.to]);
        let key = (i.min(j), i.max(j));
        let line = merged
            .entry(key)
            .or_insert(MergedLine { susceptance: 0.0, rate: 0.0, unlimited: false, angle_limit: None });
        line.susceptance += br.susceptance();
        line.rate += br.rate;
        line.unlimited |= br.rate <= 0.0;
        if let Some(lim) = br.angle_limit {
            line.angle_limit = Some(line.angle_limit.map_or(lim, |l: f64| l.min(lim)));
        }
    }
    let vm: Vec<f64> = case.buses.iter().map(|b| b.vm).collect();
    let graph = WeightedGraph::new(
        n,
        merged.iter().map(|(&(i, j), l)| (i, j, vm[i] * vm[j] * l.susceptance)),
    )?;
    // edges come back sorted by (source, sink), matching the BTreeMap order
    let line_limits: Vec<f64> = merged
        .iter()
        .zip(graph.edges())
        .map(|(((_, _), l), e)| match l.angle_limit {
            Some(lim) => lim,
            None if l.unlimited => FRAC_PI_2,
            None => {
                let ratio = l.rate / case.base_mva / e.weight;
                if ratio >= 1.0 {
                    FRAC_PI_2
                } else {
                    ratio.asin()
                }
            }
        })
        .collect();
    let omega: Vec<f64> = case.injections_mw().iter().map(|p| p / case.base_mva).collect();
    let mut inertia = vec![0.0; n];
    let mut damping = vec![0.0; n];
    for (k, b) in case.buses.iter().enumerate() {
        match b.kind {
            BusKind::Generator => {
                inertia[k] = b.inertia.unwrap_or(DEFAULT_GEN_INERTIA);
                damping[k] = b.damping.unwrap_or(DEFAULT_GEN_DAMPING);
            }
            BusKind::Load => {
                inertia[k] = 0.0;
                damping[k] = b.damping.unwrap_or(DEFAULT_LOAD_DAMPING);
            }
        }
    }
    let network = rotating_frame(&OscillatorNetwork::new(graph, omega, inertia, damping)?);
    Ok(PowerNetwork {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        network,
        line_limits,
        approximations: case.approximations.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcFlow {
    /// Solution of `Lδ = ω` with `δ_1 = 0`.
    pub delta: Vec<f64>,
    pub max_angle_diff: f64,
}

fn as_singular(e: SyncError) -> SyncError {
    match e {
        SyncError::DisconnectedGraph => SyncError::SingularSystem,
        other => other,
    }
}

pub fn dc_power_flow(model: &PowerNetwork) -> Result<DcFlow> {
    let g = model.graph();
    let x = graph::pinv_apply(g, model.omega()).map_err(as_singular)?;
    let delta: Vec<f64> = x.iter().map(|v| v - x[0]).collect();
    let max_angle_diff = graph::edge_infinity_norm(g, &delta)?;
    Ok(DcFlow { delta, max_angle_diff })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AcFlow {
    Converged(EquilibriumSolution),
    Infeasible { margin: f64, reason: String },
}

/// Newton on the lossless AC flow equations from the DC solution. Only
/// solutions with all line angles below `π/2` are reported as converged.
pub fn ac_power_flow(model: &PowerNetwork) -> Result<AcFlow> {
    let g = model.graph();
    let omega = model.omega();
    let margin = sync_margin(g, omega).map_err(as_singular)?.margin;
    match solve_equilibrium(g, omega, None, &NewtonOptions::default()) {
        Ok(sol) if sol.cohesiveness < FRAC_PI_2 => Ok(AcFlow::Converged(sol)),
        Ok(sol) => Ok(AcFlow::Infeasible {
            margin,
            reason: format!("solution has cohesiveness {} beyond pi/2", sol.cohesiveness),
        }),
        Err(e @ (SyncError::NoConvergence { .. } | SyncError::SingularJacobian(_))) => {
            Ok(AcFlow::Infeasible { margin, reason: e.to_string() })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn two_bus(w_mw: f64, x: f64) -> PowerCase {
        let text = format!(
            r#"{{"base_mva": 100,
                "buses": [{{"id": 1, "type": "generator"}}, {{"id": 2, "type": "load", "pd": {w_mw}}}],
                "generators": [{{"bus": 1, "pg": {w_mw}}}],
                "branches": [{{"from": 1, "to": 2, "x": {x}, "rate": 60}}]}}"#
        );
        parse_case(&text).unwrap()
    }

    #[test]
    fn two_bus_model() {
        let m = build_oscillator_model(&two_bus(50.0, 0.5), true).unwrap();
        assert_abs_diff_eq!(m.graph().edges()[0].weight, 2.0, epsilon = 1e-15);
        assert_eq!(m.omega(), &[0.5, -0.5]);
        assert_abs_diff_eq!(m.network.sync_frequency(), 0.0, epsilon = 1e-15);
        assert_eq!(m.network.inertia(), &[1.0, 0.0]);
        assert_eq!(m.network.damping(), &[1.0, 0.1]);
        assert_abs_diff_eq!(m.line_limits[0], 0.3f64.asin(), epsilon = 1e-15);
    }

    #[test]
    fn two_bus_flows() {
        // w/a = 0.5
        let m = build_oscillator_model(&two_bus(50.0, 1.0), true).unwrap();
        let dc = dc_power_flow(&m).unwrap();
        assert_abs_diff_eq!(dc.max_angle_diff, 0.5, epsilon = 1e-14);
        let AcFlow::Converged(sol) = ac_power_flow(&m).unwrap() else { panic!() };
        assert_abs_diff_eq!(sol.cohesiveness, PI / 6.0, epsilon = 1e-10);
        let heavy = build_oscillator_model(&two_bus(120.0, 1.0), true).unwrap();
        assert!(matches!(ac_power_flow(&heavy).unwrap(), AcFlow::Infeasible { .. }));
    }

    #[test]
    fn strict_mode_rejects_resistance() {
        let mut c = two_bus(50.0, 0.5);
        c.branches[0].r = 0.01;
        assert!(matches!(build_oscillator_model(&c, true), Err(SyncError::NonLosslessCase(_))));
        assert!(build_oscillator_model(&c, false).is_ok());
    }

    #[test]
    fn parallel_lines_merge() {
        let mut c = two_bus(50.0, 0.5);
        let mut second = c.branches[0].clone();
        second.x = 0.25;
        c.branches.push(second);
        let m = build_oscillator_model(&c, true).unwrap();
        assert_eq!(m.graph().edge_count(), 1);
        assert_abs_diff_eq!(m.graph().edges()[0].weight, 6.0, epsilon = 1e-14);
    }
}

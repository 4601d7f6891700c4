//! Line and generator outages followed by a regional load ramp.
//!
//! Injections are affine in the loading `ℓ`, and so is `ψ(ℓ) = BᵀL†ω(ℓ)`.
//! The loading at which a line's predicted flow reaches its thermal angle
//! limit, or the margin reaches one, is therefore found edge by edge in
//! closed form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{build_oscillator_model, dc_power_flow, PowerCase, PowerNetwork};
use crate::dynamics::{detect_sync, simulate, SyncDetection};
use crate::error::{Result, SyncError};
use crate::sync::sync_margin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trip {
    /// Every generator at the bus.
    Gen { bus: u32 },
    /// Every branch between the two buses.
    Branch { from: u32, to: u32 },
}

impl FromStr for Trip {
    type Err = SyncError;

    /// `gen:323` or `branch:121-325`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || SyncError::InvalidParameter(format!("bad trip '{s}', expected gen:BUS or branch:FROM-TO"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "gen" => Ok(Trip::Gen { bus: rest.trim().parse().map_err(|_| bad())? }),
            "branch" => {
                let (a, b) = rest.split_once('-').ok_or_else(bad)?;
                Ok(Trip::Branch { from: a.trim().parse().map_err(|_| bad())?, to: b.trim().parse().map_err(|_| bad())? })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Trip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trip::Gen { bus } => write!(f, "gen:{bus}"),
            Trip::Branch { from, to } => write!(f, "branch:{from}-{to}"),
        }
    }
}

pub fn apply_trips(case: &PowerCase, trips: &[Trip]) -> Result<PowerCase> {
    let mut out = case.clone();
    for t in trips {
        let hit = match *t {
            Trip::Gen { bus } => out
                .generators
                .iter_mut()
                .filter(|g| g.bus == bus && g.in_service)
                .map(|g| g.in_service = false)
                .count(),
            Trip::Branch { from, to } => out
                .branches
                .iter_mut()
                .filter(|b| b.in_service && ((b.from, b.to) == (from, to) || (b.from, b.to) == (to, from)))
                .map(|b| b.in_service = false)
                .count(),
        };
        if hit == 0 {
            return Err(SyncError::InvalidParameter(format!("{t} matches nothing in service")));
        }
    }
    Ok(out)
}

/// Every loaded bus in the ramp's load areas takes the same extra demand,
/// `loading` times the areas' nominal total divided by the number of loads;
/// the generators of its generation areas cover it in equal shares.
pub fn ramped_case(case: &PowerCase, ramp: &str, loading: f64) -> Result<PowerCase> {
    let def = case
        .ramps
        .get(ramp)
        .ok_or_else(|| SyncError::InvalidParameter(format!("case defines no ramp '{ramp}'")))?;
    let mut out = case.clone();
    let ramped: Vec<usize> = (0..out.buses.len())
        .filter(|&k| def.load_areas.contains(&out.buses[k].area) && out.buses[k].pd > 0.0)
        .collect();
    let extra = loading * ramped.iter().map(|&k| out.buses[k].pd).sum::<f64>();
    for &k in &ramped {
        out.buses[k].pd += extra / ramped.len() as f64;
    }
    let area_of: std::collections::HashMap<u32, u32> = case.buses.iter().map(|b| (b.id, b.area)).collect();
    let gens: Vec<usize> = (0..out.generators.len())
        .filter(|&k| out.generators[k].in_service && def.gen_areas.contains(&area_of[&out.generators[k].bus]))
        .collect();
    if gens.is_empty() {
        return Err(SyncError::NoAdjustableSources);
    }
    for k in &gens {
        out.generators[*k].pg += extra / gens.len() as f64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub loading: f64,
    pub margin: f64,
    /// `arcsin(margin)` when the margin is at most one.
    pub predicted_angle: Option<f64>,
    /// Largest `|ψ_e| / sin(γ_e)` over lines.
    pub max_line_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineLimit {
    pub from: u32,
    pub to: u32,
    pub limit_angle: f64,
    /// Smallest nonnegative loading at which the predicted line angle reaches
    /// its limit; absent if it never does.
    pub loading_at_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyScan {
    pub trips: Vec<Trip>,
    pub ramp: Option<String>,
    pub points: Vec<ScanPoint>,
    /// Loading at which the margin reaches one.
    pub margin_crossing: Option<f64>,
    /// Loading at which the first line reaches its thermal limit.
    pub predicted_limit_loading: Option<f64>,
    pub limiting_line: Option<(u32, u32)>,
    pub lines: Vec<LineLimit>,
}

/// Smallest `ℓ ≥ 0` with `|p + ℓ d| ≥ level`.
fn first_reach(p: f64, d: f64, level: f64) -> Option<f64> {
    if p.abs() >= level {
        return Some(0.0);
    }
    let mut best: Option<f64> = None;
    for target in [level, -level] {
        if d != 0.0 {
            let l = (target - p) / d;
            if l >= 0.0 {
                best = Some(best.map_or(l, |b| b.min(l)));
            }
        }
    }
    best
}

fn model_checked(case: &PowerCase) -> Result<PowerNetwork> {
    let m = build_oscillator_model(case, false)?;
    if !m.graph().is_connected() {
        return Err(SyncError::IslandingDetected);
    }
    Ok(m)
}

pub fn contingency_scan(case: &PowerCase, trips: &[Trip], ramp: Option<&str>, loadings: &[f64]) -> Result<ContingencyScan> {
    let tripped = apply_trips(case, trips)?;
    let base = model_checked(&tripped)?;
    let g = base.graph();
    let psi0 = sync_margin(g, base.omega())?.psi_particular;
    let psi1 = match ramp {
        Some(r) => {
            let unit = model_checked(&ramped_case(&tripped, r, 1.0)?)?;
            let d: Vec<f64> = unit.omega().iter().zip(base.omega()).map(|(a, b)| a - b).collect();
            sync_margin(g, &d)?.psi_particular
        }
        None => vec![0.0; psi0.len()],
    };
    let at = |l: f64| -> Vec<f64> { psi0.iter().zip(&psi1).map(|(a, b)| a + l * b).collect() };
    let points = loadings
        .iter()
        .map(|&loading| {
            let psi = at(loading);
            let margin = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let max_line_ratio = psi
                .iter()
                .zip(&base.line_limits)
                .map(|(p, lim)| p.abs() / lim.sin())
                .fold(0.0, f64::max);
            ScanPoint { loading, margin, predicted_angle: (margin <= 1.0).then(|| margin.asin()), max_line_ratio }
        })
        .collect();
    let margin_crossing = psi0
        .iter()
        .zip(&psi1)
        .filter_map(|(p, d)| first_reach(*p, *d, 1.0))
        .reduce(f64::min);
    let lines: Vec<LineLimit> = (0..g.edge_count())
        .map(|k| {
            let (from, to) = base.edge_buses(k);
            LineLimit {
                from,
                to,
                limit_angle: base.line_limits[k],
                loading_at_limit: first_reach(psi0[k], psi1[k], base.line_limits[k].sin()),
            }
        })
        .collect();
    let first = lines
        .iter()
        .filter_map(|l| l.loading_at_limit.map(|v| (v, (l.from, l.to))))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ContingencyScan {
        trips: trips.to_vec(),
        ramp: ramp.map(str::to_string),
        points,
        margin_crossing,
        predicted_limit_loading: first.map(|f| f.0),
        limiting_line: first.map(|f| f.1),
        lines,
    })
}

/// Simulates the full model at a given loading, starting from the linear
/// operating point, and reports whether it synchronizes.
pub fn simulate_loading(
    case: &PowerCase,
    trips: &[Trip],
    ramp: Option<&str>,
    loading: f64,
    t_end: f64,
    step: f64,
) -> Result<SyncDetection> {
    let tripped = apply_trips(case, trips)?;
    let loaded = match ramp {
        Some(r) => ramped_case(&tripped, r, loading)?,
        None => tripped,
    };
    let model = model_checked(&loaded)?;
    let theta0 = dc_power_flow(&model)?.delta;
    let traj = simulate(&model.network, &theta0, &vec![0.0; theta0.len()], t_end, step)?;
    Ok(detect_sync(&traj, model.graph(), 1e-3, std::f64::consts::FRAC_PI_2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trip_parsing() {
        assert_eq!("gen:323".parse::<Trip>().unwrap(), Trip::Gen { bus: 323 });
        assert_eq!("branch:121-325".parse::<Trip>().unwrap(), Trip::Branch { from: 121, to: 325 });
        assert!("line:1".parse::<Trip>().is_err());
        assert_eq!(Trip::Branch { from: 1, to: 2 }.to_string(), "branch:1-2");
    }

    #[test]
    fn first_reach_cases() {
        assert_eq!(first_reach(0.5, 0.25, 1.0), Some(2.0));
        assert_eq!(first_reach(-0.5, -0.5, 1.0), Some(1.0));
        assert_eq!(first_reach(0.5, 0.0, 1.0), None);
        assert_eq!(first_reach(1.5, 0.0, 1.0), Some(0.0));
    }
}

//! Power-case data and ingestion.
//!
//! Two input formats are accepted: the native JSON schema (see the README)
//! and MATPOWER-style `mpc.*` tables. Quantities are stored as read (MW,
//! p.u. impedances); conversion to the oscillator model happens in
//! [`super::build_oscillator_model`].

use std::collections::{BTreeMap, HashMap, HashSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SyncError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Generator,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    #[serde(rename = "type")]
    pub kind: BusKind,
    /// Active load in MW.
    #[serde(default)]
    pub pd: f64,
    /// Voltage magnitude in p.u.
    #[serde(default = "one")]
    pub vm: f64,
    #[serde(default = "one_u32")]
    pub area: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: u32,
    /// Dispatched active power in MW.
    pub pg: f64,
    #[serde(default)]
    pub pmax: f64,
    #[serde(default = "yes")]
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    /// Off-nominal transformer ratio; 0 means 1.
    #[serde(default)]
    pub tap: f64,
    /// Long-term MVA rating; 0 means unlimited.
    #[serde(default)]
    pub rate: f64,
    /// Explicit angle limit in radians, overriding `rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_limit: Option<f64>,
    #[serde(default = "yes")]
    pub in_service: bool,
}

impl Branch {
    pub fn ratio(&self) -> f64 {
        if self.tap == 0.0 {
            1.0
        } else {
            self.tap
        }
    }

    /// `Im(Y_ij)` of the lossless line.
    pub fn susceptance(&self) -> f64 {
        1.0 / (self.x * self.ratio())
    }
}

/// Load ramp: loads in `load_areas` grow, generators in `gen_areas` pick up
/// the extra demand in equal shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampDefinition {
    pub load_areas: Vec<u32>,
    pub gen_areas: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCase {
    #[serde(default)]
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ramps: BTreeMap<String, RampDefinition>,
    /// Approximations applied during ingestion, e.g. dropped resistances.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub approximations: Vec<String>,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

fn yes() -> bool {
    true
}

impl PowerCase {
    pub fn bus_index(&self) -> HashMap<u32, usize> {
        self.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect()
    }

    /// Checks ids, references and impedances; records dropped resistances.
    pub fn validate(&mut self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(SyncError::InconsistentCase(format!("base MVA {} must be positive", self.base_mva)));
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(SyncError::InconsistentCase(format!("duplicate bus {}", b.id)));
            }
            if !(b.vm > 0.0) {
                return Err(SyncError::InconsistentCase(format!("bus {} has voltage {}", b.id, b.vm)));
            }
        }
        for g in &self.generators {
            if !seen.contains(&g.bus) {
                return Err(SyncError::InconsistentCase(format!("generator at missing bus {}", g.bus)));
            }
        }
        let mut lossy = 0;
        for br in &self.branches {
            for end in [br.from, br.to] {
                if !seen.contains(&end) {
                    return Err(SyncError::InconsistentCase(format!(
                        "branch {}-{} references missing bus {}",
                        br.from, br.to, end
                    )));
                }
            }
            if br.from == br.to {
                return Err(SyncError::InconsistentCase(format!("branch {}-{} is a self-loop", br.from, br.to)));
            }
            if !(br.x > 0.0) || !(br.ratio() > 0.0) {
                return Err(SyncError::NonLosslessCase(format!(
                    "branch {}-{} has reactance {} and ratio {}",
                    br.from,
                    br.to,
                    br.x,
                    br.ratio()
                )));
            }
            if br.r != 0.0 && br.in_service {
                lossy += 1;
            }
        }
        if lossy > 0 {
            let note = format!("dropped resistance on {lossy} branches");
            if !self.approximations.contains(&note) {
                self.approximations.push(note);
            }
        }
        Ok(())
    }

    pub fn has_losses(&self) -> bool {
        self.branches.iter().any(|b| b.in_service && b.r != 0.0)
    }

    /// Net injection per bus in MW, in bus order.
    pub fn injections_mw(&self) -> Vec<f64> {
        let idx = self.bus_index();
        let mut p: Vec<f64> = self.buses.iter().map(|b| -b.pd).collect();
        for g in self.generators.iter().filter(|g| g.in_service) {
            p[idx[&g.bus]] += g.pg;
        }
        p
    }
}

/// Parses either format, choosing by the first non-blank character.
pub fn parse_case(text: &str) -> Result<PowerCase> {
    if text.trim_start().starts_with('{') {
        parse_json_case(text)
    } else {
        parse_matpower(text)
    }
}

pub fn parse_json_case(text: &str) -> Result<PowerCase> {
    let mut case: PowerCase = serde_json::from_str(text).map_err(|e| SyncError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    case.validate()?;
    Ok(case)
}

struct Table {
    rows: Vec<Vec<f64>>,
    line: usize,
}

/// Reads MATPOWER `mpc.baseMVA`, `mpc.bus`, `mpc.gen` and `mpc.branch`.
///
/// Other tables (cost data, bus names) are skipped. Bus types 2 and 3 and
/// any bus carrying an in-service generator become generator buses.
pub fn parse_matpower(text: &str) -> Result<PowerCase> {
    let mut base_mva = None;
    let mut name = String::new();
    let mut tables: HashMap<String, Table> = HashMap::new();
    let mut current: Option<(String, Table)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = raw.split('%').next().unwrap_or("");
        let trimmed = code.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some((key, ref mut table)) = current {
            let (body, done) = match trimmed.find(']') {
                Some(p) => (&trimmed[..p], true),
                None => (trimmed, false),
            };
            let offset = code.find(body.trim()).unwrap_or(0);
            for row in body.split(';') {
                if row.trim().is_empty() {
                    continue;
                }
                table.rows.push(parse_row(row, line, offset + 1)?);
            }
            if done {
                tables.insert(key, std::mem::replace(table, Table { rows: Vec::new(), line: 0 }));
                current = None;
            } else {
                current = Some((key, std::mem::replace(table, Table { rows: Vec::new(), line: 0 })));
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("function") {
            if let Some(eq) = rest.find('=') {
                name = rest[eq + 1..].trim().trim_end_matches(';').to_string();
            }
            continue;
        }
        let Some(rest) = trimmed.strip_prefix("mpc.") else {
            continue;
        };
        let Some(eq) = rest.find('=') else {
            return Err(SyncError::Parse { line, column: 1, message: "expected '='".into() });
        };
        let key = rest[..eq].trim().to_string();
        let value = rest[eq + 1..].trim();
        if key == "baseMVA" {
            let v = value.trim_end_matches(';').trim();
            base_mva = Some(v.parse::<f64>().map_err(|_| SyncError::Parse {
                line,
                column: code.find(v).unwrap_or(0) + 1,
                message: format!("bad baseMVA '{v}'"),
            })?);
        } else if let Some(body) = value.strip_prefix('[') {
            let mut table = Table { rows: Vec::new(), line };
            let (inner, done) = match body.find(']') {
                Some(p) => (&body[..p], true),
                None => (body, false),
            };
            for row in inner.split(';') {
                if !row.trim().is_empty() {
                    table.rows.push(parse_row(row, line, 1)?);
                }
            }
            if done {
                tables.insert(key, table);
            } else {
                current = Some((key, table));
            }
        } else if key != "version" {
            warn!("ignoring mpc.{key}");
        }
    }
    if let Some((key, table)) = current {
        return Err(SyncError::Parse { line: table.line, column: 1, message: format!("unterminated table mpc.{key}") });
    }
    let base_mva = base_mva.ok_or(SyncError::Parse { line: 1, column: 1, message: "missing mpc.baseMVA".into() })?;
    let bus_t = tables
        .remove("bus")
        .ok_or(SyncError::Parse { line: 1, column: 1, message: "missing mpc.bus".into() })?;
    let branch_t = tables
        .remove("branch")
        .ok_or(SyncError::Parse { line: 1, column: 1, message: "missing mpc.branch".into() })?;
    let gen_t = tables.remove("gen").unwrap_or(Table { rows: Vec::new(), line: 0 });
    for (k, _) in tables {
        warn!("ignoring table mpc.{k}");
    }

    let need = |t: &Table, cols: usize, what: &str| -> Result<()> {
        for (k, r) in t.rows.iter().enumerate() {
            if r.len() < cols {
                return Err(SyncError::Parse {
                    line: t.line,
                    column: 1,
                    message: format!("{what} row {} has {} columns, need {cols}", k + 1, r.len()),
                });
            }
        }
        Ok(())
    };
    need(&bus_t, 8, "bus")?;
    need(&gen_t, 8, "gen")?;
    need(&branch_t, 6, "branch")?;

    let generators: Vec<Generator> = gen_t
        .rows
        .iter()
        .map(|r| Generator {
            bus: r[0] as u32,
            pg: r[1],
            pmax: r.get(8).copied().unwrap_or(r[1]),
            in_service: r[7] > 0.0,
        })
        .collect();
    let gen_buses: HashSet<u32> = generators.iter().filter(|g| g.in_service).map(|g| g.bus).collect();
    let buses = bus_t
        .rows
        .iter()
        .map(|r| {
            let id = r[0] as u32;
            let kind = if r[1] == 2.0 || r[1] == 3.0 || gen_buses.contains(&id) {
                BusKind::Generator
            } else {
                BusKind::Load
            };
            Bus { id, kind, pd: r[2], vm: r[7], area: r[6] as u32, inertia: None, damping: None }
        })
        .collect();
    let branches = branch_t
        .rows
        .iter()
        .map(|r| Branch {
            from: r[0] as u32,
            to: r[1] as u32,
            r: r[2],
            x: r[3],
            tap: r.get(8).copied().unwrap_or(0.0),
            rate: r[5],
            angle_limit: None,
            in_service: r.get(10).is_none_or(|s| *s > 0.0),
        })
        .collect();
    let mut case = PowerCase {
        name,
        base_mva,
        buses,
        generators,
        branches,
        ramps: BTreeMap::new(),
        approximations: Vec::new(),
    };
    case.validate()?;
    Ok(case)
}

fn parse_row(row: &str, line: usize, column: usize) -> Result<Vec<f64>> {
    row.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| SyncError::Parse {
                line,
                column: column + row.find(t).unwrap_or(0),
                message: format!("bad number '{t}'"),
            })
        })
        .collect()
}

//! File formats of the command-line tool. Node ids in files are 1-based.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Map, Value};
use syncgrid::dynamics::{recentre, OscillatorNetwork};
use syncgrid::experiments::report::{fmt_g, normalize_json, SCHEMA_VERSION};
use syncgrid::powerflow::{bundled_case, parse_case, PowerCase, BUNDLED_CASES};
use syncgrid::WeightedGraph;

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Numeric rows of a CSV file; `#` lines and a non-numeric first row are skipped.
fn numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: malformed CSV", path.display()))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if !v.is_empty() => rows.push(v),
            Ok(_) => {}
            Err(_) if k == 0 => {}
            Err(_) => bail!("{}: line {}: expected numbers, got {:?}", path.display(), k + 1, record),
        }
    }
    Ok(rows)
}

fn node(v: f64, n: usize) -> Result<usize> {
    if v.fract() != 0.0 || v < 1.0 || v > n as f64 {
        bail!("node id {v} outside 1..={n}");
    }
    Ok(v as usize - 1)
}

fn graph_from_json(v: &Value) -> Result<WeightedGraph> {
    let n = v["n"].as_u64().ok_or_else(|| anyhow!("graph needs an integer field \"n\""))? as usize;
    let edges = v["edges"].as_array().ok_or_else(|| anyhow!("graph needs an array field \"edges\""))?;
    let mut list = Vec::with_capacity(edges.len());
    for e in edges {
        let t = e.as_array().filter(|t| t.len() == 2 || t.len() == 3).ok_or_else(|| anyhow!("edge {e} is not [i, j, weight]"))?;
        let num = |x: &Value| x.as_f64().ok_or_else(|| anyhow!("edge {e} has a non-numeric entry"));
        let w = if t.len() == 3 { num(&t[2])? } else { 1.0 };
        list.push((node(num(&t[0])?, n)?, node(num(&t[1])?, n)?, w));
    }
    Ok(WeightedGraph::new(n, list)?)
}

/// `{"n", "edges": [[i, j, w]]}` or a CSV edge list `i,j,weight`.
pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    if is_json(path) {
        let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        return graph_from_json(&v);
    }
    let rows = numeric_rows(path)?;
    let n = rows.iter().flat_map(|r| r.iter().take(2)).fold(0.0f64, |m, v| m.max(*v)) as usize;
    let mut list = Vec::with_capacity(rows.len());
    for r in &rows {
        if r.len() < 2 {
            bail!("{}: edge rows need i,j[,weight]", path.display());
        }
        list.push((node(r[0], n)?, node(r[1], n)?, r.get(2).copied().unwrap_or(1.0)));
    }
    Ok(WeightedGraph::new(n, list)?)
}

/// One value per line, or `i,value` pairs.
pub fn read_vector(path: &Path, n: usize) -> Result<Vec<f64>> {
    let rows = numeric_rows(path)?;
    let mut out = vec![f64::NAN; n];
    if rows.iter().all(|r| r.len() == 1) {
        if rows.len() != n {
            bail!("{}: expected {n} values, found {}", path.display(), rows.len());
        }
        return Ok(rows.into_iter().map(|r| r[0]).collect());
    }
    for r in rows {
        out[node(r[0], n)?] = *r.get(1).ok_or_else(|| anyhow!("{}: rows need i,value", path.display()))?;
    }
    if let Some(i) = out.iter().position(|v| v.is_nan()) {
        bail!("{}: no value for node {}", path.display(), i + 1);
    }
    Ok(out)
}

/// Shifts ω to zero mean, which only moves the common rotating frame.
pub fn centred(omega: Vec<f64>) -> Vec<f64> {
    let mean = omega.iter().sum::<f64>() / omega.len() as f64;
    if mean.abs() > 1e-12 {
        log::warn!("natural frequencies have mean {mean}; analysing in the rotating frame");
    }
    recentre(&omega)
}

/// Graph plus `omega` and optional `inertia` / `damping` arrays.
pub fn read_network(path: &Path) -> Result<OscillatorNetwork> {
    let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let g = graph_from_json(&v)?;
    let n = g.n();
    let array = |key: &str, default: f64| -> Result<Vec<f64>> {
        match &v[key] {
            Value::Null => Ok(vec![default; n]),
            Value::Array(a) => a.iter().map(|x| x.as_f64().ok_or_else(|| anyhow!("\"{key}\" holds a non-number"))).collect(),
            _ => bail!("\"{key}\" must be an array"),
        }
    };
    let omega = array("omega", f64::NAN)?;
    if omega.iter().any(|x| x.is_nan()) {
        bail!("{}: network needs an \"omega\" array", path.display());
    }
    Ok(OscillatorNetwork::new(g, omega, array("inertia", 0.0)?, array("damping", 1.0)?)?)
}

pub fn graph_json(g: &WeightedGraph) -> Value {
    let edges: Vec<Value> = g.edges().iter().map(|e| json!([e.source + 1, e.sink + 1, e.weight])).collect();
    json!({"n": g.n(), "edges": edges})
}

/// A file path, or the name of a bundled case.
pub fn read_case(spec: &str) -> Result<PowerCase> {
    let path = Path::new(spec);
    if !path.exists() && BUNDLED_CASES.contains(&spec) {
        return Ok(bundled_case(spec)?);
    }
    parse_case(&read(path)?).with_context(|| format!("parsing {spec}"))
}

/// Adds `kind` and `schema_version`, rounds floats and writes to `out` or stdout.
pub fn write_json(out: Option<&Path>, kind: &str, body: Value) -> Result<()> {
    let mut top = match body {
        Value::Object(m) => m,
        other => Map::from_iter([("result".to_string(), other)]),
    };
    top.insert("kind".into(), Value::from(kind));
    top.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    let mut text = serde_json::to_string_pretty(&normalize_json(Value::Object(top)))?;
    text.push('\n');
    write_text(out, &text)
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn csv_line(values: &[f64]) -> String {
    values.iter().map(|v| fmt_g(*v)).collect::<Vec<_>>().join(",")
}

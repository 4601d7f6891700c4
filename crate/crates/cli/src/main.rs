mod io;

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use syncgrid::dynamics::{
    critical_coupling_search, detect_sync, rotating_frame, simulate_with, SimulationOptions, DEFAULT_SAMPLE_INTERVAL,
};
use syncgrid::equilibrium::{solve_equilibrium, NewtonOptions};
use syncgrid::experiments::report::{emit_report, Cell, Format, Report};
use syncgrid::experiments::{
    accuracy_experiment, cell_seed, chernoff_epsilon, default_p_grid, hypothesis_experiment, hypothesis_spec,
    AccuracyCell,
};
use syncgrid::powerflow::contingency::simulate_loading;
use syncgrid::powerflow::scenario::scenario_batch;
use syncgrid::powerflow::{
    ac_power_flow, build_oscillator_model, contingency_scan, dc_power_flow, AcFlow, ScenarioConfig, Trip,
};
use syncgrid::random::{
    nominal_network_indexed, FrequencyDistribution, GraphModel, NominalNetworkSpec, WeightSpec,
};
use syncgrid::sync::{
    acyclic_equilibrium, min_infinity_norm_solution, necessary_conditions, single_cycle_feasibility, sync_margin,
};

#[derive(Parser)]
#[command(name = "syncgrid", version, about = "Synchronization analysis for oscillator networks and power grids")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the sync condition and the necessary conditions.
    Analyze {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        omega: PathBuf,
        /// Target phase cohesiveness in radians.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for an equilibrium with Newton's method.
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        omega: PathBuf,
        /// Initial angles; the linear solution by default.
        #[arg(long)]
        theta0: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the oscillator model with fixed-step RK4.
    Simulate {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_INTERVAL)]
        sample_interval: f64,
        #[arg(long)]
        theta0: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest coupling gain with a stable cohesive equilibrium.
    Kcritical {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        omega: PathBuf,
        #[arg(long, default_value_t = FRAC_PI_2)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a nominal random network.
    Gen {
        #[arg(long, value_enum)]
        model: ModelName,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        /// Width of the uniform frequency distribution.
        #[arg(long, conflicts_with = "dist")]
        alpha: Option<f64>,
        /// `uniform` (on [-1, 1]) or `bipolar`.
        #[arg(long)]
        dist: Option<FrequencyDistribution>,
        /// Small-world neighbors on each side.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        unit_weights: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// DC or AC power flow of a case.
    Powerflow {
        /// Case file, or `case9` / `rts96` for a bundled case.
        #[arg(long)]
        case: String,
        #[arg(long, value_enum, default_value_t = Mode::Dc)]
        mode: Mode,
        /// Reject resistive branches instead of dropping the resistance.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized load and generation scenarios.
    Scenario {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Outages followed by a regional load ramp.
    Contingency {
        #[arg(long)]
        case: String,
        /// `gen:BUS` or `branch:FROM-TO`; repeatable.
        #[arg(long)]
        trip: Vec<Trip>,
        #[arg(long)]
        ramp: Option<String>,
        /// Largest loading increase of the sweep, as a fraction.
        #[arg(long, default_value_t = 2.0)]
        max_loading: f64,
        #[arg(long, default_value_t = 0.01)]
        loading_step: f64,
        /// Also simulate the dynamics at this loading.
        #[arg(long)]
        simulate_at: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo test of the sync condition on random network cells.
    Montecarlo {
        /// JSON array of `{"n", "model", "p", "alpha"[, "k"]}`.
        #[arg(long)]
        cells: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ratio of the true critical coupling to the predicted one.
    Accuracy {
        #[arg(long, value_delimiter = ',', default_value = "erg,rgg,smn")]
        models: Vec<ModelName>,
        #[arg(long, value_delimiter = ',', default_value = "bipolar,uniform")]
        dists: Vec<FrequencyDistribution>,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40")]
        sizes: Vec<usize>,
        /// Model parameters; a sparse, medium and dense default per model.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Erg,
    Rgg,
    Smn,
}

impl ModelName {
    fn as_str(self) -> &'static str {
        match self {
            ModelName::Erg => "erg",
            ModelName::Rgg => "rgg",
            ModelName::Smn => "smn",
        }
    }

    fn build(self, p: f64, k: usize) -> Result<GraphModel> {
        let m = GraphModel::from_name(self.as_str(), p)?;
        Ok(match m {
            GraphModel::Smn { p, .. } => GraphModel::smn(p, k),
            other => other,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Dc,
    Ac,
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { graph, omega, gamma, out } => analyze(&graph, &omega, gamma, out.as_deref()),
        Command::Solve { graph, omega, theta0, out } => solve(&graph, &omega, theta0.as_deref(), out.as_deref()),
        Command::Simulate { net, t_end, step, sample_interval, theta0, out } => {
            simulate_cmd(&net, t_end, step, sample_interval, theta0.as_deref(), out.as_deref())
        }
        Command::Kcritical { graph, omega, gamma, out } => kcritical(&graph, &omega, gamma, out.as_deref()),
        Command::Gen { model, n, p, alpha, dist, k, unit_weights, seed, index, out } => {
            let frequencies = match (alpha, dist) {
                (Some(alpha), _) => FrequencyDistribution::Uniform { alpha },
                (None, Some(d)) => d,
                (None, None) => FrequencyDistribution::UnitUniform,
            };
            let weights = if unit_weights { WeightSpec::Unit } else { WeightSpec::default() };
            let spec = NominalNetworkSpec { n, model: model.build(p, k)?, frequencies, weights, seed };
            gen(&spec, index, out.as_deref())
        }
        Command::Powerflow { case, mode, strict, out } => powerflow(&case, mode, strict, out.as_deref()),
        Command::Scenario { case, samples, seed, sigma, out } => scenario(&case, samples, seed, sigma, &out),
        Command::Contingency { case, trip, ramp, max_loading, loading_step, simulate_at, out } => {
            contingency(&case, &trip, ramp.as_deref(), max_loading, loading_step, simulate_at, &out)
        }
        Command::Montecarlo { cells, samples, seed, eta, out } => montecarlo(&cells, samples, seed, eta, &out),
        Command::Accuracy { models, dists, sizes, p, samples, seed, out } => {
            accuracy(&models, &dists, &sizes, &p, samples, seed, &out)
        }
    }
}

fn load_pair(graph: &Path, omega: &Path) -> Result<(syncgrid::WeightedGraph, Vec<f64>)> {
    let g = io::read_graph(graph)?;
    let w = io::centred(io::read_vector(omega, g.n())?);
    Ok((g, w))
}

fn analyze(graph: &Path, omega: &Path, gamma: Option<f64>, out: Option<&Path>) -> Result<()> {
    let (g, w) = load_pair(graph, omega)?;
    let a = sync_margin(&g, &w)?;
    let level = gamma.unwrap_or(FRAC_PI_2 - 1e-9);
    let nec = necessary_conditions(&g, &w, level)?;
    let psi: Vec<Value> = g
        .edges()
        .iter()
        .zip(&a.psi_particular)
        .map(|(e, p)| json!({"i": e.source + 1, "j": e.sink + 1, "psi": p}))
        .collect();
    let mut body = json!({
        "n": g.n(),
        "edges": g.edge_count(),
        "margin": a.margin,
        "gamma_pred": a.gamma_pred,
        "psi": psi,
        "necessary": {
            "gamma": level,
            "absolute_ok": nec.absolute_ok,
            "incremental_ok": nec.incremental_ok,
            "violating_nodes": nec.violating_nodes.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "violating_edges": nec.violating_edges.iter().map(|&k| {
                let e = g.edges()[k];
                json!([e.source + 1, e.sink + 1])
            }).collect::<Vec<_>>(),
        },
        "min_norm_bound": min_infinity_norm_solution(&g, &w)?.norm,
    });
    if let Some(gm) = gamma {
        body["gamma"] = json!(gm);
        body["condition_holds"] = json!(a.condition_holds(gm));
    }
    if g.is_tree() {
        body["topology"] = json!("tree");
        body["exact_feasible"] = json!(acyclic_equilibrium(&g, &w, level)?.is_feasible());
    } else if g.is_cycle() {
        body["topology"] = json!("cycle");
        body["exact_feasible"] = json!(single_cycle_feasibility(&g, &w, level)?.feasible);
    } else {
        body["topology"] = json!("general");
    }
    io::write_json(out, "analyze", body)
}

fn solve(graph: &Path, omega: &Path, theta0: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let (g, w) = load_pair(graph, omega)?;
    let t0 = theta0.map(|p| io::read_vector(p, g.n())).transpose()?;
    let sol = solve_equilibrium(&g, &w, t0.as_deref(), &NewtonOptions::default())?;
    io::write_json(
        out,
        "solve",
        json!({
            "theta": sol.theta,
            "cohesiveness": sol.cohesiveness,
            "stable": sol.stable,
            "residual": sol.residual,
            "iterations": sol.iterations,
            "edge_angles": sol.edge_angles(&g),
        }),
    )
}

fn simulate_cmd(
    net: &Path,
    t_end: f64,
    step: f64,
    sample_interval: f64,
    theta0: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let network = rotating_frame(&io::read_network(net)?);
    let n = network.n();
    let t0 = match theta0 {
        Some(p) => io::read_vector(p, n)?,
        None => vec![0.0; n],
    };
    let opts = SimulationOptions { step, t_end, sample_interval: sample_interval.max(step), stop_when_steady: false };
    let traj = simulate_with(&network, &t0, &vec![0.0; n], &opts)?;
    let d = detect_sync(&traj, network.graph(), 1e-3, FRAC_PI_2);
    log::info!("frequency synchronized: {}, t_sync: {:?}", d.freq_synced, d.t_sync);
    let mut text = String::from("t");
    for prefix in ["theta", "thetadot"] {
        for i in 1..=n {
            text.push_str(&format!(",{prefix}_{i}"));
        }
    }
    text.push('\n');
    for k in 0..traj.len() {
        let mut row = vec![traj.times[k]];
        row.extend(&traj.theta[k]);
        row.extend(&traj.theta_dot[k]);
        text.push_str(&io::csv_line(&row));
        text.push('\n');
    }
    io::write_text(out, &text)
}

fn kcritical(graph: &Path, omega: &Path, gamma: f64, out: Option<&Path>) -> Result<()> {
    let (g, w) = load_pair(graph, omega)?;
    let r = critical_coupling_search(&g, &w, gamma)?;
    io::write_json(
        out,
        "kcritical",
        json!({"gamma": gamma, "k_min": r.k_min, "k_critical": r.k_critical, "ratio": r.ratio, "evaluations": r.evaluations}),
    )
}

fn gen(spec: &NominalNetworkSpec, index: u64, out: Option<&Path>) -> Result<()> {
    let net = nominal_network_indexed(spec, index)?;
    let mut body = io::graph_json(&net.graph);
    body["omega"] = json!(net.omega);
    body["margin"] = json!(net.margin);
    body["attempts"] = json!(net.attempts);
    body["spec"] = serde_json::to_value(spec)?;
    body["index"] = json!(index);
    io::write_json(out, "network", body)
}

fn powerflow(case: &str, mode: Mode, strict: bool, out: Option<&Path>) -> Result<()> {
    let c = io::read_case(case)?;
    let model = build_oscillator_model(&c, strict)?;
    let margin = sync_margin(model.graph(), model.omega())?.margin;
    let mut body = json!({
        "case": c.name,
        "buses": model.bus_ids,
        "margin": margin,
        "gamma_pred": (margin <= 1.0).then(|| margin.asin()),
        "approximations": model.approximations,
    });
    match mode {
        Mode::Dc => {
            let dc = dc_power_flow(&model)?;
            body["mode"] = json!("dc");
            body["angles"] = json!(dc.delta);
            body["max_angle_diff"] = json!(dc.max_angle_diff);
        }
        Mode::Ac => {
            body["mode"] = json!("ac");
            match ac_power_flow(&model)? {
                AcFlow::Converged(sol) => {
                    let shift = sol.theta[0];
                    body["status"] = json!("converged");
                    body["angles"] = json!(sol.theta.iter().map(|t| t - shift).collect::<Vec<_>>());
                    body["cohesiveness"] = json!(sol.cohesiveness);
                    body["stable"] = json!(sol.stable);
                }
                AcFlow::Infeasible { reason, .. } => {
                    body["status"] = json!("infeasible");
                    body["reason"] = json!(reason);
                }
            }
        }
    }
    io::write_json(out, "powerflow", body)
}

fn scenario(case: &str, samples: u64, seed: u64, sigma: f64, out: &Path) -> Result<()> {
    let c = io::read_case(case)?;
    let cfg = ScenarioConfig { seed, sigma, ..Default::default() };
    let outcomes = scenario_batch(&c, &cfg, samples)?;
    let config = json!({"case": case, "samples": samples, "config": serde_json::to_value(cfg)?});
    let mut r = Report::new("scenario", Some(seed), config, &["index", "margin", "predicted", "realized", "error", "correct"]);
    for o in &outcomes {
        let correct = match (o.predicted, o.realized) {
            (Some(p), Some(c)) => Cell::from(c <= p + 1e-4),
            _ => Cell::Missing,
        };
        r.push(vec![o.index.into(), o.margin.into(), o.predicted.into(), o.realized.into(), o.error().into(), correct]);
    }
    let errs: Vec<f64> = outcomes.iter().filter_map(|o| o.error()).collect();
    if !errs.is_empty() {
        log::info!("mean accuracy {} over {} solved scenarios", errs.iter().sum::<f64>() / errs.len() as f64, errs.len());
    }
    emit_report(&r, Format::from_path(out), out)?;
    Ok(())
}

fn contingency(
    case: &str,
    trips: &[Trip],
    ramp: Option<&str>,
    max_loading: f64,
    step: f64,
    simulate_at: Option<f64>,
    out: &Path,
) -> Result<()> {
    if !(step > 0.0 && max_loading >= 0.0) {
        bail!("loading step must be positive and the maximum loading nonnegative");
    }
    let c = io::read_case(case)?;
    let count = (max_loading / step).round() as usize;
    let loadings: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    let scan = contingency_scan(&c, trips, ramp, &loadings)?;
    let mut config = json!({
        "case": case,
        "trips": trips.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "ramp": ramp,
        "margin_crossing": scan.margin_crossing,
        "predicted_limit_loading": scan.predicted_limit_loading,
        "limiting_line": scan.limiting_line.map(|(a, b)| format!("{a}-{b}")),
    });
    if let Some(l) = simulate_at {
        let d = simulate_loading(&c, trips, ramp, l, 100.0, 1e-3).context("simulating the loaded case")?;
        config["simulation"] = json!({"loading": l, "freq_synced": d.freq_synced, "cohesive": d.cohesive, "t_sync": d.t_sync});
    }
    let mut r = Report::new("contingency", None, config, &["loading", "margin", "predicted_angle", "max_line_ratio"]);
    for p in &scan.points {
        r.push(vec![p.loading.into(), p.margin.into(), p.predicted_angle.into(), p.max_line_ratio.into()]);
    }
    emit_report(&r, Format::from_path(out), out)?;
    Ok(())
}

#[derive(serde::Deserialize)]
struct CellSpec {
    n: usize,
    model: String,
    p: f64,
    alpha: f64,
    #[serde(default = "one")]
    k: usize,
}

fn one() -> usize {
    1
}

fn montecarlo(cells: &Path, samples: u64, seed: u64, eta: f64, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(cells).with_context(|| format!("reading {}", cells.display()))?;
    let specs: Vec<CellSpec> = serde_json::from_str(&text).with_context(|| format!("parsing {}", cells.display()))?;
    let epsilon = chernoff_epsilon(samples, eta)?;
    let config = json!({"samples": samples, "eta": eta, "epsilon": epsilon});
    let mut r = Report::new(
        "montecarlo",
        Some(seed),
        config,
        &["n", "model", "p", "alpha", "k", "cell_seed", "samples", "failures", "probability", "mean_cohesiveness"],
    );
    for (idx, c) in specs.iter().enumerate() {
        let mut model = GraphModel::from_name(&c.model, c.p)?;
        if let GraphModel::Smn { p, .. } = model {
            model = GraphModel::smn(p, c.k);
        }
        let s = cell_seed(seed, idx as u64);
        let spec = hypothesis_spec(c.n, model, FrequencyDistribution::Uniform { alpha: c.alpha }, s);
        let res = hypothesis_experiment(&spec, samples)?;
        let coh: Vec<f64> = res.records.iter().filter_map(|x| x.cohesiveness).collect();
        let mean = (!coh.is_empty()).then(|| coh.iter().sum::<f64>() / coh.len() as f64);
        log::info!("cell {}: ({}, {}, {}, {}) probability {}", idx + 1, c.n, c.model, c.p, c.alpha, res.empirical_probability);
        r.push(vec![
            c.n.into(),
            c.model.to_ascii_lowercase().into(),
            c.p.into(),
            c.alpha.into(),
            c.k.into(),
            s.to_string().into(),
            samples.into(),
            res.failures.into(),
            res.empirical_probability.into(),
            mean.into(),
        ]);
    }
    emit_report(&r, Format::from_path(out), out)?;
    Ok(())
}

fn dist_name(d: FrequencyDistribution) -> String {
    match d {
        FrequencyDistribution::Bipolar => "bipolar".into(),
        FrequencyDistribution::UnitUniform => "uniform".into(),
        FrequencyDistribution::Uniform { alpha } => format!("uniform{alpha}"),
    }
}

/// Writes the combined grid to `out` and one `p,n,mean_ratio` file per
/// model and distribution next to it.
fn accuracy(
    models: &[ModelName],
    dists: &[FrequencyDistribution],
    sizes: &[usize],
    ps: &[f64],
    samples: u64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let format = Format::from_path(out);
    let config = json!({
        "models": models.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
        "dists": dists.iter().map(|d| dist_name(*d)).collect::<Vec<_>>(),
        "sizes": sizes,
        "samples": samples,
    });
    let mut all = Report::new("accuracy", Some(seed), config, &["model", "distribution", "p", "n", "mean_ratio", "max_ratio"]);
    let mut cell = 0u64;
    for &m in models {
        for &d in dists {
            let group_config = json!({"model": m.as_str(), "distribution": dist_name(d), "samples": samples});
            let mut group = Report::new("accuracy", Some(seed), group_config, &["p", "n", "mean_ratio"]);
            for &n in sizes {
                let grid = if ps.is_empty() { default_p_grid(m.as_str(), n) } else { ps.to_vec() };
                for p in grid {
                    let ac = AccuracyCell { n, model: m.build(p, 1)?, distribution: d };
                    let res = accuracy_experiment(&ac, samples, cell_seed(seed, cell))?;
                    cell += 1;
                    let max = res.ratios.iter().fold(0.0f64, |a, b| a.max(*b));
                    log::info!("{} {} n={n} p={p}: mean ratio {}", m.as_str(), dist_name(d), res.mean_ratio);
                    all.push(vec![m.as_str().into(), dist_name(d).into(), p.into(), n.into(), res.mean_ratio.into(), max.into()]);
                    group.push(vec![p.into(), n.into(), res.mean_ratio.into()]);
                }
            }
            emit_report(&group, format, &sibling(out, &format!("{}_{}", m.as_str(), dist_name(d))))?;
        }
    }
    emit_report(&all, format, out)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

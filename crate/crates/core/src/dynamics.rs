//! Time-domain simulation of mixed first/second-order oscillator networks.
//!
//! Nodes with positive inertia follow `M θ̈ + D θ̇ = ω - Σ a sin(θ_i - θ_j)`,
//! the remaining ones `D θ̇ = ω - Σ a sin(θ_i - θ_j)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, kuramoto_rhs, phase_cohesiveness, solve_equilibrium, NewtonOptions};
use crate::error::{Result, SyncError};
use crate::graph::{self, WeightedGraph};
use crate::sync::{self, min_infinity_norm_solution, sync_margin};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 100.0;
pub const DEFAULT_SAMPLE_INTERVAL: f64 = 1e-2;
pub const STEADY_STATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorNetwork {
    graph: WeightedGraph,
    omega: Vec<f64>,
    /// Zero for first-order nodes.
    inertia: Vec<f64>,
    damping: Vec<f64>,
}

impl OscillatorNetwork {
    /// Validates lengths, `M ≥ 0` and `D > 0`.
    pub fn new(graph: WeightedGraph, omega: Vec<f64>, inertia: Vec<f64>, damping: Vec<f64>) -> Result<Self> {
        for v in [&omega, &inertia, &damping] {
            graph.require_len(v)?;
        }
        if let Some(m) = inertia.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(SyncError::InvalidParameter(format!("inertia {m} must be nonnegative")));
        }
        if let Some(d) = damping.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(SyncError::InvalidParameter(format!("damping {d} must be positive")));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(SyncError::InvalidParameter("non-finite natural frequency".into()));
        }
        Ok(Self { graph, omega, inertia, damping })
    }

    /// All nodes first order with unit damping.
    pub fn first_order(graph: WeightedGraph, omega: Vec<f64>) -> Result<Self> {
        let n = graph.n();
        Self::new(graph, omega, vec![0.0; n], vec![1.0; n])
    }

    /// All nodes second order with the given uniform inertia and damping.
    pub fn second_order(graph: WeightedGraph, omega: Vec<f64>, inertia: f64, damping: f64) -> Result<Self> {
        let n = graph.n();
        Self::new(graph, omega, vec![inertia; n], vec![damping; n])
    }

    /// Skips validation so that zero damping can be used in conservative checks.
    #[cfg(test)]
    pub(crate) fn unchecked(graph: WeightedGraph, omega: Vec<f64>, inertia: Vec<f64>, damping: Vec<f64>) -> Self {
        Self { graph, omega, inertia, damping }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn inertia(&self) -> &[f64] {
        &self.inertia
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn is_second_order(&self, i: usize) -> bool {
        self.inertia[i] > 0.0
    }

    /// `Σ ω_i / Σ D_i`.
    pub fn sync_frequency(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.damping.iter().sum::<f64>()
    }

    pub fn with_omega(&self, omega: Vec<f64>) -> Result<Self> {
        Self::new(self.graph.clone(), omega, self.inertia.clone(), self.damping.clone())
    }
}

/// Shifts into the frame rotating at the synchronization frequency:
/// `ω_i ← ω_i - D_i ω_sync`.
pub fn rotating_frame(net: &OscillatorNetwork) -> OscillatorNetwork {
    let ws = net.sync_frequency();
    let mut out = net.clone();
    for (w, d) in out.omega.iter_mut().zip(&net.damping) {
        *w -= d * ws;
    }
    out
}

/// Subtracts the mean so that `Σ ω = 0` (unit dampings).
pub fn recentre(omega: &[f64]) -> Vec<f64> {
    let mean = omega.iter().sum::<f64>() / omega.len().max(1) as f64;
    omega.iter().map(|w| w - mean).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub method: String,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    pub theta_dot: Vec<Vec<f64>>,
    pub integrator: Integrator,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_theta(&self) -> &[f64] {
        self.theta.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_theta_dot(&self) -> &[f64] {
        self.theta_dot.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub step: f64,
    pub t_end: f64,
    /// Spacing of stored samples; rounded to a whole number of steps.
    pub sample_interval: f64,
    /// Stop once `‖θ̇‖∞` stays below [`STEADY_STATE_TOL`] over a full sample window.
    pub stop_when_steady: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            t_end: DEFAULT_T_END,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            stop_when_steady: false,
        }
    }
}

/// State layout: all angles, then the frequencies of second-order nodes.
struct System<'a> {
    net: &'a OscillatorNetwork,
    second: Vec<usize>,
}

impl System<'_> {
    fn derivative(&self, state: &[f64], out: &mut [f64]) {
        let n = self.net.n();
        let (theta, vel) = state.split_at(n);
        let p = kuramoto_rhs(&self.net.graph, &self.net.omega, theta);
        for i in 0..n {
            if !self.net.is_second_order(i) {
                out[i] = p[i] / self.net.damping[i];
            }
        }
        for (k, &i) in self.second.iter().enumerate() {
            out[i] = vel[k];
            out[n + k] = (p[i] - self.net.damping[i] * vel[k]) / self.net.inertia[i];
        }
    }

    fn frequencies(&self, state: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; state.len()];
        self.derivative(state, &mut d);
        d.truncate(self.net.n());
        d
    }

    fn rk4_step(&self, state: &mut [f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64]) {
        self.derivative(state, &mut k[0]);
        for (t, (s, d)) in tmp.iter_mut().zip(state.iter().zip(&k[0])) {
            *t = s + 0.5 * h * d;
        }
        self.derivative(tmp, &mut k[1]);
        for (t, (s, d)) in tmp.iter_mut().zip(state.iter().zip(&k[1])) {
            *t = s + 0.5 * h * d;
        }
        self.derivative(tmp, &mut k[2]);
        for (t, (s, d)) in tmp.iter_mut().zip(state.iter().zip(&k[2])) {
            *t = s + h * d;
        }
        self.derivative(tmp, &mut k[3]);
        for (i, s) in state.iter_mut().enumerate() {
            *s += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }
}

/// Fixed-step RK4 with default sampling.
///
/// `theta_dot0` gives initial frequencies; entries of first-order nodes are
/// ignored since their frequency is determined by the angles.
pub fn simulate(
    net: &OscillatorNetwork,
    theta0: &[f64],
    theta_dot0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    let opts = SimulationOptions { step, t_end, sample_interval: DEFAULT_SAMPLE_INTERVAL.max(step), stop_when_steady: false };
    simulate_with(net, theta0, theta_dot0, &opts)
}

pub fn simulate_with(
    net: &OscillatorNetwork,
    theta0: &[f64],
    theta_dot0: &[f64],
    opts: &SimulationOptions,
) -> Result<Trajectory> {
    let n = net.n();
    net.graph.require_len(theta0)?;
    net.graph.require_len(theta_dot0)?;
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(SyncError::InvalidParameter(format!("step {} must be positive", opts.step)));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(SyncError::InvalidParameter(format!("t_end {} must be nonnegative", opts.t_end)));
    }
    let sys = System { net, second: (0..n).filter(|&i| net.is_second_order(i)).collect() };
    let mut state: Vec<f64> = theta0.to_vec();
    state.extend(sys.second.iter().map(|&i| theta_dot0[i]));
    let steps = (opts.t_end / opts.step).round() as usize;
    let every = ((opts.sample_interval / opts.step).round() as usize).max(1);
    let mut traj = Trajectory {
        times: vec![0.0],
        theta: vec![theta0.to_vec()],
        theta_dot: vec![sys.frequencies(&state)],
        integrator: Integrator { method: "rk4".into(), step: opts.step },
    };
    let mut k = [vec![0.0; state.len()], vec![0.0; state.len()], vec![0.0; state.len()], vec![0.0; state.len()]];
    let mut tmp = vec![0.0; state.len()];
    let mut window_quiet = true;
    for s in 1..=steps {
        sys.rk4_step(&mut state, opts.step, &mut k, &mut tmp);
        let t = s as f64 * opts.step;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(SyncError::NonFiniteState(t));
        }
        if opts.stop_when_steady {
            let fast = k[0][..n].iter().any(|v| v.abs() > STEADY_STATE_TOL);
            window_quiet &= !fast;
        }
        if s % every == 0 || s == steps {
            let freq = sys.frequencies(&state);
            traj.times.push(t);
            traj.theta.push(state[..n].to_vec());
            let quiet_now = freq.iter().all(|v| v.abs() <= STEADY_STATE_TOL);
            traj.theta_dot.push(freq);
            if opts.stop_when_steady && window_quiet && quiet_now {
                break;
            }
            window_quiet = true;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncDetection {
    pub freq_synced: bool,
    pub cohesive: bool,
    /// Earliest sample from which both properties hold until the end.
    pub t_sync: Option<f64>,
}

fn frequency_spread(freq: &[f64]) -> f64 {
    let mean = freq.iter().sum::<f64>() / freq.len().max(1) as f64;
    freq.iter().fold(0.0, |m, v| m.max((v - mean).abs()))
}

pub fn detect_sync(traj: &Trajectory, g: &WeightedGraph, tol_freq: f64, gamma: f64) -> SyncDetection {
    let holds = |k: usize| {
        frequency_spread(&traj.theta_dot[k]) <= tol_freq && phase_cohesiveness(&traj.theta[k], g) <= gamma
    };
    let Some(last) = traj.len().checked_sub(1) else {
        return SyncDetection { freq_synced: false, cohesive: false, t_sync: None };
    };
    let freq_synced = frequency_spread(&traj.theta_dot[last]) <= tol_freq;
    let cohesive = phase_cohesiveness(&traj.theta[last], g) <= gamma;
    let mut t_sync = None;
    for k in (0..traj.len()).rev() {
        if !holds(k) {
            break;
        }
        t_sync = Some(traj.times[k]);
    }
    SyncDetection { freq_synced, cohesive, t_sync }
}

/// `E(θ) = Σ_E a (1 - cos(θ_i - θ_j)) - Σ ω_i θ_i`.
pub fn energy(net: &OscillatorNetwork, theta: &[f64]) -> f64 {
    let coupling: f64 = net
        .graph
        .edges()
        .iter()
        .map(|e| e.weight * (1.0 - (theta[e.source] - theta[e.sink]).cos()))
        .sum();
    coupling - dot(&net.omega, theta)
}

/// `E₀(θ) = Σ_E a (θ_i - θ_j)² / 2 - Σ ω_i θ_i`.
pub fn quadratic_energy(net: &OscillatorNetwork, theta: &[f64]) -> f64 {
    let coupling: f64 = net
        .graph
        .edges()
        .iter()
        .map(|e| 0.5 * e.weight * (theta[e.source] - theta[e.sink]).powi(2))
        .sum();
    coupling - dot(&net.omega, theta)
}

/// `∇E(θ)`, which equals the negated first-order right-hand side.
pub fn energy_gradient(net: &OscillatorNetwork, theta: &[f64]) -> Vec<f64> {
    kuramoto_rhs(&net.graph, &net.omega, theta).into_iter().map(|v| -v).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCoupling {
    /// Smallest gain with a stable cohesive equilibrium, to relative `1e-3`.
    pub k_min: f64,
    /// `‖BᵀL†ω‖∞` of the unit-gain graph.
    pub k_critical: f64,
    pub ratio: f64,
    pub evaluations: usize,
}

/// Relative bracket width at which the critical-coupling bisection stops.
pub const COUPLING_TOLERANCE: f64 = 1e-3;
const MAX_BRACKET_DOUBLINGS: u32 = 10;
const MAX_LP_CYCLE_RANK: usize = 60;

/// Bisection on the gain `K` of `K·g` for the smallest value admitting a
/// stable equilibrium with cohesiveness at most `gamma`.
///
/// Each test runs Newton continued from the last feasible equilibrium, then
/// from the linear seed, and falls back to simulating the first-order model.
/// The lower bracket comes from necessary conditions, so on trees the search
/// terminates immediately at the exact threshold.
pub fn critical_coupling_search(g: &WeightedGraph, omega: &[f64], gamma: f64) -> Result<CriticalCoupling> {
    if !(gamma > 0.0 && gamma <= FRAC_PI_2) {
        return Err(SyncError::GammaOutOfRange(gamma));
    }
    let k_critical = sync_margin(g, omega)?.margin;
    if k_critical == 0.0 {
        return Ok(CriticalCoupling { k_min: 0.0, k_critical, ratio: 1.0, evaluations: 0 });
    }
    let s = gamma.sin();
    let mut lower = 0.0f64;
    for (i, w) in omega.iter().enumerate() {
        lower = lower.max(w.abs() / (g.weighted_degree(i) * s));
    }
    for e in g.edges() {
        let d = g.weighted_degree(e.source) + g.weighted_degree(e.sink);
        lower = lower.max((omega[e.source] - omega[e.sink]).abs() / (d * s));
    }
    if g.edge_count() + 1 - g.n() <= MAX_LP_CYCLE_RANK {
        lower = lower.max(min_infinity_norm_solution(g, omega)?.norm / s);
    }

    let mut search = CouplingProbe { g, omega, gamma, warm: None, evaluations: 0 };
    // the necessary bound already meets the sufficient one (trees, for
    // instance): the infimum is known and only needs a feasibility witness
    // just above it
    if lower >= k_critical * (1.0 - 1e-12) {
        let witness = lower.max(k_critical) * (1.0 + 0.5 * COUPLING_TOLERANCE);
        if search.feasible(witness)? {
            let k_min = lower.max(k_critical);
            return Ok(CriticalCoupling { k_min, k_critical, ratio: k_min / k_critical, evaluations: search.evaluations });
        }
    }
    let mut hi = k_critical.max(lower);
    let mut doublings = 0;
    while !search.feasible(hi)? {
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(SyncError::NoSyncInBracket(hi));
        }
        hi *= 2.0;
    }
    let mut lo = lower.min(hi);
    if lo < hi && search.feasible(lo)? {
        hi = lo;
    }
    while hi - lo > COUPLING_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if search.feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalCoupling { k_min: hi, k_critical, ratio: hi / k_critical, evaluations: search.evaluations })
}

struct CouplingProbe<'a> {
    g: &'a WeightedGraph,
    omega: &'a [f64],
    gamma: f64,
    /// `(K, θ)` of the most recent feasible gain.
    warm: Option<(f64, Vec<f64>)>,
    evaluations: usize,
}

impl CouplingProbe<'_> {
    fn feasible(&mut self, k: f64) -> Result<bool> {
        self.evaluations += 1;
        let gk = self.g.scaled(k)?;
        let opts = NewtonOptions::default();
        let accept = |sol: &equilibrium::EquilibriumSolution| sol.stable && sol.cohesiveness <= self.gamma + 1e-9;
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        if let Some((_, t)) = &self.warm {
            seeds.push(t.clone());
        }
        seeds.push(graph::pinv_apply(&gk, self.omega)?);
        for seed in seeds {
            if let Ok(sol) = solve_equilibrium(&gk, self.omega, Some(&seed), &opts) {
                if accept(&sol) {
                    self.warm = Some((k, sol.theta));
                    return Ok(true);
                }
            }
        }
        // simulation fallback from phase sync
        let net = OscillatorNetwork::first_order(gk.clone(), self.omega.to_vec())?;
        let lmax = 2.0 * (0..gk.n()).map(|i| gk.weighted_degree(i)).fold(0.0, f64::max);
        let step = (0.01f64).min(1.0 / lmax.max(1e-12));
        let sim = SimulationOptions { step, t_end: DEFAULT_T_END, sample_interval: 1.0, stop_when_steady: true };
        let traj = match simulate_with(&net, &vec![0.0; gk.n()], &vec![0.0; gk.n()], &sim) {
            Ok(t) => t,
            Err(SyncError::NonFiniteState(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        if frequency_spread(traj.final_theta_dot()) > 1e-3 {
            return Ok(false);
        }
        match solve_equilibrium(&gk, self.omega, Some(traj.final_theta()), &opts) {
            Ok(sol) if accept(&sol) => {
                self.warm = Some((k, sol.theta));
                Ok(true)
            }
            _ => Ok(false),
        }
    }
}

/// Whether `γ` admits a cohesive state under the sync condition.
pub fn predicted_cohesive(g: &WeightedGraph, omega: &[f64], gamma: f64) -> Result<bool> {
    sync::check_gamma(gamma)?;
    Ok(sync_margin(g, omega)?.condition_holds(gamma))
}

//! Model parameters, the scenario file schema, the uniform time grid and the
//! cumulative trapezoid quadrature shared by every stage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constrained::SpeedLimit;
use crate::error::{Error, Result};
use crate::field::PairField;
use crate::network::{EdgeSpec, Network, PathSet, DEFAULT_MAX_PATHS};

/// Uniform grid `t_i = i * T / N`, `i = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Self {
        assert!(
            steps > 0 && horizon > 0.0,
            "grid needs a positive horizon and step count"
        );
        Self {
            horizon,
            steps,
            dt: horizon / steps as f64,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `N`, the number of steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `N + 1`.
    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.steps as f64
        }
    }

    /// Duration of `j - i` steps.
    pub fn span(&self, i: usize, j: usize) -> f64 {
        (j - i) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nodes()).map(|i| self.t(i)).collect()
    }

    /// Smallest node index `j` with `t_j >= t`, up to a relative snap of
    /// `1e-9` steps. May exceed `N` for `t > T`.
    pub fn ceil_index(&self, t: f64) -> usize {
        let x = t / self.dt - 1e-9;
        if x <= 0.0 {
            0
        } else {
            x.ceil() as usize
        }
    }

    /// Largest node index `j` with `t_j <= t` (same snap), clamped to `N`.
    pub fn floor_index(&self, t: f64) -> usize {
        let x = t / self.dt + 1e-9;
        if x <= 0.0 {
            0
        } else {
            (x.floor() as usize).min(self.steps)
        }
    }
}

/// Cumulative trapezoid rule: `out[i] ≈ ∫_0^{t_i} g`, with `out[0] = 0`.
pub fn prefix_integral(dt: f64, samples: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in samples.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Congestion running cost as a function of the total edge mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CongestionCost {
    /// `a * m`
    Linear { a: f64 },
    /// `a * min(m, rho_max)`
    Saturating { a: f64 },
}

impl CongestionCost {
    pub fn eval(&self, mass: f64, rho_max: f64) -> f64 {
        match *self {
            CongestionCost::Linear { a } => a * mass,
            CongestionCost::Saturating { a } => a * mass.min(rho_max),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            CongestionCost::Linear { a } | CongestionCost::Saturating { a } => a,
        }
    }

    fn coefficient(&self) -> f64 {
        self.lipschitz()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThroughputSpec {
    Constant {
        value: f64,
    },
    /// `mean + amplitude * sin(2π t / period + phase)`
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Linear interpolation, held constant outside the table.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ThroughputSpec {
    fn check(&self) -> std::result::Result<(), String> {
        match self {
            ThroughputSpec::Sinusoidal { period, .. } if period.is_nan() || *period <= 0.0 => {
                Err("sinusoidal period must be positive".into())
            }
            ThroughputSpec::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err("table needs matching, non-empty times and values".into());
                }
                if times
                    .windows(2)
                    .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
                {
                    return Err("table times must be strictly increasing".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            ThroughputSpec::Constant { value } => *value,
            ThroughputSpec::Sinusoidal {
                mean,
                amplitude,
                period,
                phase,
            } => mean + amplitude * (std::f64::consts::TAU * t / period + phase).sin(),
            ThroughputSpec::Table { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let j = times.partition_point(|&x| x <= t);
                let (t0, t1) = (times[j - 1], times[j]);
                let w = (t - t0) / (t1 - t0);
                values[j - 1] + w * (values[j] - values[j - 1])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPreference {
    /// `z0_p = λ(0) / |Γ|`
    #[default]
    Uniform,
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub vertices: Vec<String>,
    pub origin: String,
    pub destination: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_paths: Option<usize>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub horizon: f64,
    pub steps: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho_max: f64,
    pub lambda: ThroughputSpec,
    pub phi: CongestionCost,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub phi_edges: BTreeMap<String, CongestionCost>,
    #[serde(default)]
    pub z0: InitialPreference,
    /// Initial mass per `"<edge>:<path>"` label; missing pairs start empty.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rho0: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Defaults to `1e-3 * rho_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Absolute tie tolerance on arrival-time objectives; defaults to
    /// `1e-9` times the cost scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_tie: Option<f64>,
}

fn default_gamma() -> f64 {
    0.5
}

fn default_max_iter() -> usize {
    500
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            tol: None,
            max_iter: default_max_iter(),
            eps_tie: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstrainedSection {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_speed")]
    pub speed: SpeedLimit,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub speed_edges: BTreeMap<String, SpeedLimit>,
    /// Floor applied to edge mass before evaluating the speed limit;
    /// defaults to `1e-6 * rho_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_floor: Option<f64>,
    /// Upper bound on the per-edge delay as a fraction of the horizon.
    #[serde(default = "default_ktilde_cap")]
    pub ktilde_cap: f64,
}

fn default_speed() -> SpeedLimit {
    SpeedLimit::Reciprocal { c: 1.0 }
}

fn default_ktilde_cap() -> f64 {
    0.5
}

impl Default for ConstrainedSection {
    fn default() -> Self {
        Self {
            enabled: false,
            speed: default_speed(),
            speed_edges: BTreeMap::new(),
            mass_floor: None,
            ktilde_cap: default_ktilde_cap(),
        }
    }
}

/// On-disk scenario: sections `network`, `model`, `solver`, `constrained`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub network: NetworkSection,
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub constrained: ConstrainedSection,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub eps_tie: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSettings {
    pub enabled: bool,
    /// One speed limit per edge.
    pub limits: Vec<SpeedLimit>,
    pub mass_floor: f64,
    pub ktilde_cap: f64,
}

/// Validated model data on a fixed grid.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: TimeGrid,
    /// `λ(t_i)`.
    pub throughput: Vec<f64>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho_max: f64,
    /// One congestion cost per edge.
    pub congestion: Vec<CongestionCost>,
    /// Initial path preferences.
    pub z0: Vec<f64>,
    /// Initial mass `ρ(0)` per pair.
    pub rho0: Vec<f64>,
    pub solver: SolverSettings,
    pub constrained: ConstrainedSettings,
    /// Traverse delay `k` in grid steps.
    pub delay_steps: usize,
}

impl Scenario {
    /// Mass Lipschitz bound of the candidate space, `3 λ̄`.
    pub fn lipschitz_bound(&self) -> f64 {
        3.0 * self.lambda_max
    }

    pub fn congestion_bound(&self) -> f64 {
        self.congestion
            .iter()
            .map(|c| c.eval(self.rho_max, self.rho_max))
            .fold(0.0, f64::max)
    }

    /// Initial mass as a field constant in time (used for shape checks).
    pub fn initial_mass_field(&self) -> PairField {
        let mut f = PairField::zeros(self.rho0.len(), self.grid.nodes());
        for (k, &v) in self.rho0.iter().enumerate() {
            f.series_mut(k).fill(v);
        }
        f
    }
}

/// One line of the assumption report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const CHECK_NETWORK: &str = "network";
pub const CHECK_PARAMETERS: &str = "parameters";
pub const CHECK_THROUGHPUT: &str = "throughput-positive";
pub const CHECK_INITIAL_MASS: &str = "initial-mass-null";
pub const CHECK_CONGESTION: &str = "congestion-lipschitz";
pub const CHECK_HEADROOM: &str = "capacity-headroom";
pub const CHECK_PREFERENCE: &str = "initial-preference";
pub const CHECK_SOLVER: &str = "solver-settings";
pub const CHECK_SPEED: &str = "speed-limits";

/// Network, path set and scenario loaded together.
#[derive(Debug, Clone)]
pub struct Problem {
    pub network: Network,
    pub paths: PathSet,
    pub scenario: Scenario,
    pub file: ScenarioFile,
}

impl Problem {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_file(ScenarioFile::from_toml(text)?)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let (checks, built) = assess(&file);
        match built {
            Some((network, paths, scenario)) => Ok(Self {
                network,
                paths,
                scenario,
                file,
            }),
            None => {
                let failed = checks
                    .into_iter()
                    .find(|c| !c.passed)
                    .expect("assessment without a result reports a failure");
                Err(Error::Validation {
                    check: failed.name,
                    message: failed.detail,
                })
            }
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.scenario.grid
    }

    /// Same problem on a grid with `steps` steps.
    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        let mut file = self.file.clone();
        file.model.steps = steps;
        Self::from_file(file)
    }

    /// Cost charged for stopping at the tail of the pair's edge: `α ℓ_e` on
    /// a path's last edge, `α` times the shortest remaining length otherwise.
    pub fn stay_penalty(&self, k: usize) -> f64 {
        let pair = self.paths.pairs().pair(k);
        let edge = self.network.edge(pair.edge);
        if self.paths.pairs().is_last(k) {
            self.scenario.alpha * edge.length
        } else {
            self.scenario.alpha * self.network.shortest_remaining_length(edge.tail)
        }
    }

    /// Exit cost for reaching the head of an interior pair's edge exactly at
    /// `T`, before taking the minimum with the continuation value.
    pub fn horizon_exit_penalty(&self, k: usize) -> f64 {
        let edge = self.network.edge(self.paths.pairs().pair(k).edge);
        self.scenario.alpha * self.network.shortest_remaining_length(edge.tail)
    }
}

/// Delay `k` in grid steps: `min_e ℓ_e / (2α)` rounded down to a grid
/// multiple and clamped to `[Δt, T]`.
pub fn compute_k(network: &Network, alpha: f64, grid: &TimeGrid) -> usize {
    let raw = network
        .edges()
        .iter()
        .map(|e| e.length / (2.0 * alpha))
        .fold(f64::INFINITY, f64::min);
    let steps = if raw.is_finite() {
        let x = raw / grid.dt() + 1e-9;
        if x >= grid.steps() as f64 {
            grid.steps()
        } else {
            x.floor() as usize
        }
    } else {
        grid.steps()
    };
    steps.clamp(1, grid.steps())
}

/// Runs every check; returns the built model when all of them pass.
pub fn assess(file: &ScenarioFile) -> (Vec<AssumptionCheck>, Option<(Network, PathSet, Scenario)>) {
    let mut checks = Vec::new();
    let mut ok = true;
    let mut record = |name: &'static str, result: std::result::Result<String, String>| {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        ok &= passed;
        checks.push(AssumptionCheck {
            name,
            passed,
            detail,
        });
        passed
    };

    let net = &file.network;
    let built =
        Network::build(&net.vertices, &net.edges, &net.origin, &net.destination).and_then(|n| {
            let paths = n.enumerate_paths(net.max_paths.unwrap_or(DEFAULT_MAX_PATHS))?;
            Ok((n, paths))
        });
    let (network, paths) = match built {
        Ok((n, p)) => {
            record(
                CHECK_NETWORK,
                Ok(format!(
                    "{} vertices, {} edges, {} paths, {} edge-path pairs",
                    n.vertices().len(),
                    n.edges().len(),
                    p.len(),
                    p.xi()
                )),
            );
            (n, p)
        }
        Err(e) => {
            record(CHECK_NETWORK, Err(e.to_string()));
            return (checks, None);
        }
    };

    let m = &file.model;
    let finite_pos = |x: f64| x.is_finite() && x > 0.0;
    let params = if !finite_pos(m.horizon) {
        Err(format!("horizon must be positive, got {}", m.horizon))
    } else if m.steps == 0 {
        Err("steps must be at least 1".to_string())
    } else if !finite_pos(m.alpha) || !finite_pos(m.beta) || !finite_pos(m.eta) {
        Err(format!(
            "alpha, beta, eta must be positive (got {}, {}, {})",
            m.alpha, m.beta, m.eta
        ))
    } else if !finite_pos(m.rho_max) {
        Err(format!("rho_max must be positive, got {}", m.rho_max))
    } else {
        Ok(format!(
            "T = {}, N = {}, alpha = {}, beta = {}, eta = {}",
            m.horizon, m.steps, m.alpha, m.beta, m.eta
        ))
    };
    if !record(CHECK_PARAMETERS, params) {
        return (checks, None);
    }
    let grid = TimeGrid::new(m.horizon, m.steps);

    let throughput: Vec<f64> = match m.lambda.check() {
        Ok(()) => (0..grid.nodes()).map(|i| m.lambda.at(grid.t(i))).collect(),
        Err(msg) => {
            record(CHECK_THROUGHPUT, Err(msg));
            return (checks, None);
        }
    };
    let lambda_max = throughput.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lambda_min = throughput.iter().copied().fold(f64::INFINITY, f64::min);
    let positive = throughput.iter().all(|&x| x.is_finite() && x > 0.0);
    record(
        CHECK_THROUGHPUT,
        if positive {
            Ok(format!("lambda in [{lambda_min}, {lambda_max}]"))
        } else {
            Err(format!(
                "lambda(t) > 0 required for all t in [0, T]; minimum sample is {lambda_min}"
            ))
        },
    );

    let pairs = paths.pairs();
    let mut rho0 = vec![0.0; pairs.len()];
    let mut rho0_result = Ok(if m.rho0.is_empty() {
        "rho(0) = 0".to_string()
    } else {
        "rho(0) overridden explicitly".to_string()
    });
    for (label, &v) in &m.rho0 {
        match pairs.position_of_label(label) {
            Some(k) if v.is_finite() && v >= 0.0 => rho0[k] = v,
            Some(_) => rho0_result = Err(format!("initial mass for `{label}` must be >= 0")),
            None => rho0_result = Err(format!("unknown edge-path pair `{label}`")),
        }
    }
    record(CHECK_INITIAL_MASS, rho0_result);

    let mut congestion = vec![m.phi; network.edges().len()];
    let mut phi_result = Ok("congestion costs nonnegative and Lipschitz".to_string());
    for (id, &c) in &m.phi_edges {
        match network.edge_index(id) {
            Some(e) => congestion[e] = c,
            None => phi_result = Err(format!("unknown edge `{id}` in phi_edges")),
        }
    }
    if congestion
        .iter()
        .any(|c| !(c.coefficient().is_finite() && c.coefficient() >= 0.0))
    {
        phi_result = Err("congestion coefficients must be finite and >= 0".to_string());
    }
    record(CHECK_CONGESTION, phi_result);

    let headroom =
        if m.rho_max.partial_cmp(&(lambda_max * m.horizon)) != Some(std::cmp::Ordering::Greater) {
            Err(format!(
                "rho_max = {} must exceed lambda_max * T = {}",
                m.rho_max,
                lambda_max * m.horizon
            ))
        } else if let Some(e) = network
            .edges()
            .iter()
            .find(|e| e.capacity.partial_cmp(&lambda_max) != Some(std::cmp::Ordering::Greater))
        {
            Err(format!(
                "capacity of `{}` ({}) must exceed lambda_max = {}",
                e.id, e.capacity, lambda_max
            ))
        } else {
            let total0: f64 = rho0.iter().sum();
            if total0 + lambda_max * m.horizon > m.rho_max {
                Err(format!(
                    "initial mass {total0} plus lambda_max * T exceeds rho_max = {}",
                    m.rho_max
                ))
            } else {
                Ok(format!(
                    "rho_max = {} > lambda_max * T = {}; capacities exceed {}",
                    m.rho_max,
                    lambda_max * m.horizon,
                    lambda_max
                ))
            }
        };
    record(CHECK_HEADROOM, headroom);

    let z0 = match &m.z0 {
        InitialPreference::Uniform => {
            let share = throughput[0] / paths.len() as f64;
            Ok(vec![share; paths.len()])
        }
        InitialPreference::Explicit { values } => {
            let sum: f64 = values.iter().sum();
            if values.len() != paths.len() {
                Err(format!(
                    "z0 has {} entries for {} paths",
                    values.len(),
                    paths.len()
                ))
            } else if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                Err("z0 entries must be finite and >= 0".to_string())
            } else if (sum - throughput[0]).abs() > 1e-9 * throughput[0].abs().max(1.0) {
                Err(format!(
                    "z0 sums to {sum}, expected lambda(0) = {}",
                    throughput[0]
                ))
            } else {
                Ok(values.clone())
            }
        }
    };
    let z0 = match z0 {
        Ok(z) => {
            record(
                CHECK_PREFERENCE,
                Ok("z0 on the throughput simplex".to_string()),
            );
            z
        }
        Err(msg) => {
            record(CHECK_PREFERENCE, Err(msg));
            Vec::new()
        }
    };

    let cost_scale = m.alpha * network.shortest_remaining_length(network.origin())
        + congestion
            .iter()
            .map(|c| c.eval(m.rho_max, m.rho_max))
            .fold(0.0, f64::max)
            * m.horizon;
    let s = &file.solver;
    let solver = SolverSettings {
        gamma: s.gamma,
        tol: s.tol.unwrap_or(1e-3 * m.rho_max),
        max_iter: s.max_iter,
        eps_tie: s
            .eps_tie
            .unwrap_or(1e-9 * cost_scale.max(f64::MIN_POSITIVE)),
    };
    record(CHECK_SOLVER, check_solver(&solver));

    let c = &file.constrained;
    let mut limits = vec![c.speed.clone(); network.edges().len()];
    let mut speed_result = Ok(if c.enabled {
        "speed limits valid (constrained mode on)".to_string()
    } else {
        "constrained mode off".to_string()
    });
    for (id, lim) in &c.speed_edges {
        match network.edge_index(id) {
            Some(e) => limits[e] = lim.clone(),
            None => speed_result = Err(format!("unknown edge `{id}` in speed_edges")),
        }
    }
    if let Some(msg) = limits.iter().find_map(|l| l.check().err()) {
        speed_result = Err(msg);
    }
    let mass_floor = c.mass_floor.unwrap_or(1e-6 * m.rho_max);
    if !(mass_floor.is_finite() && mass_floor > 0.0) {
        speed_result = Err("mass_floor must be positive".to_string());
    }
    if !(c.ktilde_cap > 0.0 && c.ktilde_cap <= 1.0) {
        speed_result = Err("ktilde_cap must lie in ]0, 1]".to_string());
    }
    record(CHECK_SPEED, speed_result);

    if !ok {
        return (checks, None);
    }
    let delay_steps = compute_k(&network, m.alpha, &grid);
    let scenario = Scenario {
        grid,
        throughput,
        lambda_max,
        lambda_min,
        alpha: m.alpha,
        beta: m.beta,
        eta: m.eta,
        rho_max: m.rho_max,
        congestion,
        z0,
        rho0,
        solver,
        constrained: ConstrainedSettings {
            enabled: c.enabled,
            limits,
            mass_floor,
            ktilde_cap: c.ktilde_cap,
        },
        delay_steps,
    };
    (checks, Some((network, paths, scenario)))
}

pub fn check_solver(s: &SolverSettings) -> std::result::Result<String, String> {
    if !(s.gamma > 0.0 && s.gamma <= 1.0) {
        Err(format!("damping gamma must lie in ]0, 1], got {}", s.gamma))
    } else if !(s.tol.is_finite() && s.tol > 0.0) {
        Err(format!("tolerance must be positive, got {}", s.tol))
    } else if s.max_iter == 0 {
        Err("max_iter must be at least 1".to_string())
    } else if !(s.eps_tie.is_finite() && s.eps_tie >= 0.0) {
        Err(format!("eps_tie must be >= 0, got {}", s.eps_tie))
    } else {
        Ok(format!(
            "gamma = {}, tol = {}, max_iter = {}",
            s.gamma, s.tol, s.max_iter
        ))
    }
}

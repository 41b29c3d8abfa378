//! Path costs along the arrival policy, the logit response and the
//! preference dynamics `ż - Ḟ = -η (z - F)`.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::scenario::{Problem, TimeGrid};
use crate::value::{move_cost, CongestionTables, Policy};

/// Path costs `J^p(t_i)` and the entry nodes they were accumulated from.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCostTable {
    /// `costs[p][i]`.
    pub costs: Vec<Vec<f64>>,
    /// `entries[k][i]`: entry node on pair `k`'s edge for an agent leaving
    /// the origin at node `i`; `None` if it never gets there.
    pub entries: Vec<Vec<Option<usize>>>,
}

/// Preferences `z_p(t_i)` and logit targets `F_β^p(t_i)`, path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceTrajectory {
    pub z: Vec<Vec<f64>>,
    pub f_beta: Vec<Vec<f64>>,
}

impl PreferenceTrajectory {
    pub fn z_at(&self, i: usize) -> Vec<f64> {
        self.z.iter().map(|s| s[i]).collect()
    }
}

/// Entry node on every edge of path `p` for an agent leaving the origin at
/// node `i`.
pub fn path_entry_times(
    problem: &Problem,
    policy: &Policy,
    p: usize,
    i: usize,
) -> Vec<Option<usize>> {
    let mut entry = Some(i);
    problem
        .paths
        .pairs()
        .of_path(p)
        .map(|k| {
            let here = entry;
            entry = here.and_then(|s| policy.arrival(k, s));
            here
        })
        .collect()
}

/// `J^p(t_i)`: sum of edge costs along the entry nodes.
pub fn path_cost(
    problem: &Problem,
    policy: &Policy,
    tables: &CongestionTables,
    p: usize,
    entries: &[Option<usize>],
) -> f64 {
    let grid = problem.grid();
    let n = grid.steps();
    let pairs = problem.paths.pairs();
    let mut acc = 0.0;
    for (k, entry) in pairs.of_path(p).zip(entries).rev() {
        let Some(s) = *entry else { continue };
        let edge = pairs.pair(k).edge;
        let cost = match policy.arrival(k, s) {
            Some(j) => {
                move_cost(problem.network.edge(edge).length, grid.span(s, j))
                    + tables.cost_between(edge, s, j)
            }
            None => problem.stay_penalty(k) + tables.cost_between(edge, s, n),
        };
        acc += cost;
    }
    acc
}

pub fn path_costs(
    problem: &Problem,
    policy: &Policy,
    tables: &CongestionTables,
    exec: Exec,
) -> PathCostTable {
    let nodes = problem.grid().nodes();
    let pairs = problem.paths.pairs();
    let per_path = exec.map(problem.paths.len(), |p| {
        (0..nodes)
            .map(|i| {
                let entries = path_entry_times(problem, policy, p, i);
                (path_cost(problem, policy, tables, p, &entries), entries)
            })
            .collect::<Vec<_>>()
    });
    let mut entries = vec![vec![None; nodes]; pairs.len()];
    let mut costs = Vec::with_capacity(per_path.len());
    for (p, rows) in per_path.into_iter().enumerate() {
        let mut c = Vec::with_capacity(nodes);
        for (i, (cost, ent)) in rows.into_iter().enumerate() {
            c.push(cost);
            for (k, e) in pairs.of_path(p).zip(ent) {
                entries[k][i] = e;
            }
        }
        costs.push(c);
    }
    PathCostTable { costs, entries }
}

/// `F_β^p = λ e^{-β J^p} / Σ_q e^{-β J^q}`, evaluated on `J - min J`.
pub fn logit_response(costs: &[f64], lambda: f64, beta: f64) -> Vec<f64> {
    let least = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = costs.iter().map(|&j| (-beta * (j - least)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| lambda * (w / total)).collect()
}

/// Logit targets at every node, path-major.
pub fn best_response(problem: &Problem, costs: &PathCostTable) -> Vec<Vec<f64>> {
    let s = &problem.scenario;
    let paths = costs.costs.len();
    let mut out = vec![Vec::with_capacity(s.grid.nodes()); paths];
    for i in 0..s.grid.nodes() {
        let j: Vec<f64> = costs.costs.iter().map(|c| c[i]).collect();
        for (p, f) in logit_response(&j, s.throughput[i], s.beta)
            .into_iter()
            .enumerate()
        {
            out[p].push(f);
        }
    }
    out
}

/// Exact solution `z(t) = F(t) + (z0 - F(0)) e^{-η t}`.
pub fn preference_evolution(
    f_beta: &[Vec<f64>],
    z0: &[f64],
    eta: f64,
    grid: &TimeGrid,
    lambda0: f64,
) -> Result<Vec<Vec<f64>>> {
    let sum: f64 = z0.iter().sum();
    if (sum - lambda0).abs() > 1e-9 * lambda0.abs().max(1.0) {
        return Err(Error::SimplexViolation {
            sum,
            expected: lambda0,
        });
    }
    if z0.len() != f_beta.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} paths", f_beta.len()),
            got: format!("{} initial preferences", z0.len()),
        });
    }
    let decay: Vec<f64> = (0..grid.nodes())
        .map(|i| (-eta * grid.t(i)).exp())
        .collect();
    Ok(f_beta
        .iter()
        .zip(z0)
        .map(|(f, &z)| {
            let offset = z - f[0];
            f.iter()
                .zip(&decay)
                .map(|(fi, d)| fi + offset * d)
                .collect()
        })
        .collect())
}

//! Backward value functions per (edge, path) pair and the constant-speed
//! arrival policy they induce.
//!
//! An agent entering edge `e` of path `p` at `t_i` either stops at the tail
//! for good, paying the remaining congestion plus a distance penalty, or
//! picks an arrival node `τ > t_i` at the head and travels at the constant
//! speed `ℓ_e / (τ - t_i)`. Values are computed path by path from the last
//! edge backwards; arrival times are searched on grid nodes only.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{MassField, PairField};
use crate::scenario::{prefix_integral, Problem, TimeGrid};

/// `V^e_p(t_i)` per pair.
pub type ValueTable = PairField;

/// Kinetic cost of crossing an edge of length `len` in `duration`.
#[inline]
pub fn move_cost(len: f64, duration: f64) -> f64 {
    len * len / (2.0 * duration)
}

/// Total edge masses and the prefix integral of the congestion cost along
/// them, per edge.
#[derive(Debug, Clone)]
pub struct CongestionTables {
    /// `m_e(t_i) = Σ_{p ∋ e} ρ^e_p(t_i)`.
    pub totals: Vec<Vec<f64>>,
    /// `∫_0^{t_i} φ_e(m_e)`.
    pub integrals: Vec<Vec<f64>>,
}

impl CongestionTables {
    /// `∫_{t_i}^{t_j} φ_e`.
    #[inline]
    pub fn cost_between(&self, e: usize, i: usize, j: usize) -> f64 {
        self.integrals[e][j] - self.integrals[e][i]
    }
}

pub fn congestion_total(problem: &Problem, mass: &MassField) -> CongestionTables {
    let s = &problem.scenario;
    let nodes = s.grid.nodes();
    let pairs = problem.paths.pairs();
    let mut totals = Vec::with_capacity(problem.network.edges().len());
    let mut integrals = Vec::with_capacity(totals.capacity());
    for e in 0..problem.network.edges().len() {
        let on = pairs.on_edge(e);
        let m: Vec<f64> = (0..nodes).map(|i| mass.sum_at(on, i)).collect();
        let phi: Vec<f64> = m
            .iter()
            .map(|&x| s.congestion[e].eval(x, s.rho_max))
            .collect();
        integrals.push(prefix_integral(s.grid.dt(), &phi));
        totals.push(m);
    }
    CongestionTables { totals, integrals }
}

/// Optimal arrival node per pair and entry node; `None` means stop.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    nodes: usize,
    arrivals: Vec<Option<usize>>,
}

impl Policy {
    pub fn new(pairs: usize, nodes: usize) -> Self {
        Self {
            nodes,
            arrivals: vec![None; pairs * nodes],
        }
    }

    pub fn pairs(&self) -> usize {
        self.arrivals.len() / self.nodes.max(1)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn arrival(&self, k: usize, i: usize) -> Option<usize> {
        self.arrivals[k * self.nodes + i]
    }

    pub fn set(&mut self, k: usize, i: usize, tau: Option<usize>) {
        self.arrivals[k * self.nodes + i] = tau;
    }

    pub fn series(&self, k: usize) -> &[Option<usize>] {
        &self.arrivals[k * self.nodes..(k + 1) * self.nodes]
    }

    /// `sign(u)`: whether an agent entering at node `i` moves.
    pub fn moves(&self, k: usize, i: usize) -> bool {
        self.arrival(k, i).is_some()
    }

    /// Arrival time, `+∞` for a stop.
    pub fn arrival_time(&self, k: usize, i: usize, grid: &TimeGrid) -> f64 {
        self.arrival(k, i).map_or(f64::INFINITY, |j| grid.t(j))
    }

    /// Constant speed `ℓ / (τ* - t_i)`, zero for a stop.
    pub fn control(&self, k: usize, i: usize, length: f64, grid: &TimeGrid) -> f64 {
        self.arrival(k, i).map_or(0.0, |j| length / grid.span(i, j))
    }
}

/// Earliest admissible arrival node for an agent entering edge `e` at node
/// `i`. Values above `N` close the moving branch.
pub trait ArrivalBound: Sync {
    fn earliest(&self, edge: usize, i: usize) -> usize;
}

/// Any node after the entry node.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained {
    /// Extra nodes skipped at the front of the search. Zero in normal use;
    /// nonzero only to exercise the oracle comparison.
    #[doc(hidden)]
    pub fault_offset: usize,
}

impl ArrivalBound for Unconstrained {
    fn earliest(&self, _edge: usize, i: usize) -> usize {
        i + 1 + self.fault_offset
    }
}

pub fn value_backward(problem: &Problem, mass: &MassField, exec: Exec) -> (ValueTable, Policy) {
    let tables = congestion_total(problem, mass);
    value_backward_with(problem, &tables, &Unconstrained::default(), exec)
}

/// Backward recursion with an arbitrary lower bound on arrival nodes.
pub fn value_backward_with(
    problem: &Problem,
    tables: &CongestionTables,
    bound: &dyn ArrivalBound,
    exec: Exec,
) -> (ValueTable, Policy) {
    let pairs = problem.paths.pairs();
    let nodes = problem.grid().nodes();
    let per_path = exec.map(problem.paths.len(), |p| {
        let range = pairs.of_path(p);
        let mut out: Vec<(Vec<f64>, Vec<Option<usize>>)> = Vec::with_capacity(range.len());
        let mut next: Option<Vec<f64>> = None;
        for k in range.rev() {
            let (v, tau) = pair_backward(problem, tables, bound, k, next.as_deref());
            next = Some(v.clone());
            out.push((v, tau));
        }
        out.reverse();
        out
    });
    let mut values = PairField::zeros(pairs.len(), nodes);
    let mut policy = Policy::new(pairs.len(), nodes);
    for (p, series) in per_path.into_iter().enumerate() {
        for (k, (v, tau)) in pairs.of_path(p).zip(series) {
            values.series_mut(k).copy_from_slice(&v);
            for (i, t) in tau.into_iter().enumerate() {
                policy.set(k, i, t);
            }
        }
    }
    (values, policy)
}

fn pair_backward(
    problem: &Problem,
    tables: &CongestionTables,
    bound: &dyn ArrivalBound,
    k: usize,
    successor: Option<&[f64]>,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let grid = problem.grid();
    let n = grid.steps();
    let pair = problem.paths.pairs().pair(k);
    let len = problem.network.edge(pair.edge).length;
    let eps = problem.scenario.solver.eps_tie;
    let stay_penalty = problem.stay_penalty(k);
    // Continuation after arriving at node j; only the interior case needs it.
    let cont: Option<Vec<f64>> = successor.map(|succ| {
        let exit = problem.horizon_exit_penalty(k);
        let mut c = succ.to_vec();
        c[n] = exit.min(succ[n]);
        c
    });

    let mut values = vec![0.0; n + 1];
    let mut arrivals = vec![None; n + 1];
    let mut objective = Vec::with_capacity(n);
    for i in 0..=n {
        let stay = stay_penalty + tables.cost_between(pair.edge, i, n);
        let lo = bound.earliest(pair.edge, i).max(i + 1);
        objective.clear();
        let first = match &cont {
            None => n.max(lo),
            Some(_) => lo,
        };
        for j in first..=n {
            let mut obj = move_cost(len, grid.span(i, j)) + tables.cost_between(pair.edge, i, j);
            if let Some(c) = &cont {
                obj += c[j];
            }
            objective.push(obj);
        }
        let best = objective.iter().copied().fold(f64::INFINITY, f64::min);
        if objective.is_empty() || stay < best {
            values[i] = stay;
            arrivals[i] = None;
        } else {
            let pick = objective
                .iter()
                .rposition(|&o| o <= best + eps)
                .expect("minimum is attained");
            values[i] = best;
            arrivals[i] = Some(first + pick);
        }
    }
    (values, arrivals)
}

/// Linear interpolation of a pair's value between grid nodes.
pub fn value_at(values: &ValueTable, k: usize, t: f64, grid: &TimeGrid) -> Result<f64> {
    if !(0.0..=grid.horizon()).contains(&t) {
        return Err(Error::OutOfRange {
            t,
            horizon: grid.horizon(),
        });
    }
    let x = t / grid.dt();
    let i = (x.floor() as usize).min(grid.steps());
    if i == grid.steps() {
        return Ok(values.get(k, i));
    }
    let w = x - i as f64;
    let (a, b) = (values.get(k, i), values.get(k, i + 1));
    Ok(if w == 0.0 { a } else { a + w * (b - a) })
}

/// Time-Lipschitz constant valid for every value table of `problem`,
/// whatever the admissible mass field.
///
/// Moving only beats stopping when the kinetic cost stays below the stop
/// cost bound `S`, so travel durations are at least `h = ℓ² / (2S)`. On
/// such durations the objective changes at rate at most
/// `M = ℓ² / (2h²) + ‖φ‖`, and the minimum at rate at most `2M`.
pub fn value_lipschitz_bound(problem: &Problem) -> f64 {
    let s = &problem.scenario;
    let phi = s.congestion_bound();
    let pairs = problem.paths.pairs();
    (0..pairs.len())
        .map(|k| {
            let len = problem.network.edge(pairs.pair(k).edge).length;
            let stop = problem.stay_penalty(k) + phi * s.grid.horizon();
            let h = len * len / (2.0 * stop);
            2.0 * (len * len / (2.0 * h * h) + phi) + phi
        })
        .fold(0.0, f64::max)
}

/// Largest discrete difference quotient of any series in the field.
pub fn max_slope(field: &PairField, dt: f64) -> f64 {
    (0..field.pairs())
        .flat_map(|k| {
            field
                .series(k)
                .windows(2)
                .map(|w| (w[1] - w[0]).abs() / dt)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

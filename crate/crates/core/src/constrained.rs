//! Speed-limited traversal: arrival bounds from `∫ U(ρ_e) ds = ℓ_e` and the
//! per-edge delays derived from them.

use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::field::MassField;
use crate::scenario::{prefix_integral, Problem, TimeGrid};
use crate::value::{congestion_total, value_backward_with, ArrivalBound, Policy, ValueTable};

/// Maximal speed as a function of edge mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedLimit {
    /// `U(ξ) = c / ξ`.
    Reciprocal { c: f64 },
    /// Piecewise linear through `(mass, speed)`, strictly decreasing;
    /// continued as `speed_end * mass_end / ξ` beyond either end.
    Table { mass: Vec<f64>, speed: Vec<f64> },
}

impl SpeedLimit {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Self::Reciprocal { c } => c / xi,
            Self::Table { mass, speed } => {
                let last = mass.len() - 1;
                if xi <= mass[0] {
                    return speed[0] * mass[0] / xi;
                }
                if xi >= mass[last] {
                    return speed[last] * mass[last] / xi;
                }
                let j = mass.partition_point(|&m| m <= xi);
                let w = (xi - mass[j - 1]) / (mass[j] - mass[j - 1]);
                speed[j - 1] + w * (speed[j] - speed[j - 1])
            }
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match self {
            Self::Reciprocal { c } => {
                if c.is_finite() && *c > 0.0 {
                    Ok(())
                } else {
                    Err(format!(
                        "reciprocal speed constant must be positive, got {c}"
                    ))
                }
            }
            Self::Table { mass, speed } => {
                if mass.is_empty() || mass.len() != speed.len() {
                    return Err(
                        "speed table needs matching, non-empty mass and speed columns".into(),
                    );
                }
                if !mass.iter().chain(speed).all(|x| x.is_finite() && *x > 0.0) {
                    return Err("speed table entries must be positive".into());
                }
                if mass.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("speed table masses must increase".into());
                }
                if speed.windows(2).any(|w| w[1] >= w[0]) {
                    return Err("speed table speeds must strictly decrease".into());
                }
                Ok(())
            }
        }
    }
}

/// `min_arrival(t_i)` for every node: the time at which `∫_{t_i}^τ U ds`
/// reaches `length`, with the edge mass floored at `floor`.
///
/// Inside the last step the prefix integral is interpolated linearly; past
/// the horizon the speed is frozen at its value at `T`.
pub fn arrival_times(
    grid: &TimeGrid,
    masses: &[f64],
    limit: &SpeedLimit,
    length: f64,
    floor: f64,
) -> Vec<f64> {
    let speed: Vec<f64> = masses.iter().map(|&m| limit.eval(m.max(floor))).collect();
    let w = prefix_integral(grid.dt(), &speed);
    let n = grid.steps();
    (0..=n)
        .map(|i| {
            let target = w[i] + length;
            let j = i + 1 + w[i + 1..].partition_point(|&x| x < target);
            if j <= n {
                let frac = (target - w[j - 1]) / (w[j] - w[j - 1]);
                grid.t(j - 1) + frac * grid.dt()
            } else {
                grid.horizon() + (target - w[n]) / speed[n]
            }
        })
        .collect()
}

pub fn min_arrival(
    grid: &TimeGrid,
    i: usize,
    masses: &[f64],
    limit: &SpeedLimit,
    length: f64,
    floor: f64,
) -> f64 {
    arrival_times(grid, masses, limit, length, floor)[i]
}

/// Arrival bounds for every edge and node.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalConstraint {
    grid: TimeGrid,
    /// `tau[e][i]`.
    pub tau: Vec<Vec<f64>>,
    /// Time average of `τ(t) - t` per edge.
    pub mean_traverse: Vec<f64>,
}

impl ArrivalBound for ArrivalConstraint {
    fn earliest(&self, edge: usize, i: usize) -> usize {
        self.grid.ceil_index(self.tau[edge][i]).max(i + 1)
    }
}

pub fn arrival_constraint(problem: &Problem, totals: &[Vec<f64>], exec: Exec) -> ArrivalConstraint {
    let s = &problem.scenario;
    let grid = s.grid;
    let tau = exec.map(totals.len(), |e| {
        arrival_times(
            &grid,
            &totals[e],
            &s.constrained.limits[e],
            problem.network.edge(e).length,
            s.constrained.mass_floor,
        )
    });
    let mean_traverse = tau.iter().map(|t| mean_traverse(&grid, t)).collect();
    ArrivalConstraint {
        grid,
        tau,
        mean_traverse,
    }
}

/// `(1/T) ∫ (τ(t) - t) dt` by the trapezoid rule.
pub fn mean_traverse(grid: &TimeGrid, tau: &[f64]) -> f64 {
    let gap: Vec<f64> = tau.iter().enumerate().map(|(i, x)| x - grid.t(i)).collect();
    prefix_integral(grid.dt(), &gap)[grid.steps()] / grid.horizon()
}

/// `k̃_e = max(k, τ̄_e)` in grid steps, capped at `ktilde_cap · N`.
pub fn ktilde_steps(problem: &Problem, constraint: &ArrivalConstraint) -> Vec<usize> {
    let s = &problem.scenario;
    let cap = ((s.constrained.ktilde_cap * s.grid.steps() as f64 + 1e-9).floor() as usize).max(1);
    constraint
        .mean_traverse
        .iter()
        .map(|tbar| {
            let steps = (tbar / s.grid.dt()).round() as usize;
            steps.max(s.delay_steps).min(cap)
        })
        .collect()
}

pub fn value_backward_constrained(
    problem: &Problem,
    mass: &MassField,
    exec: Exec,
) -> (ValueTable, Policy, ArrivalConstraint) {
    let tables = congestion_total(problem, mass);
    let constraint = arrival_constraint(problem, &tables.totals, exec);
    let (v, pol) = value_backward_with(problem, &tables, &constraint, exec);
    (v, pol, constraint)
}

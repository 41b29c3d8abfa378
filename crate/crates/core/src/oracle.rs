//! Brute-force references for the fast pipeline: exhaustive enumeration of
//! arrival plans, an independent recount of mass conservation, and an
//! explicit Euler integrator for the preference dynamics.

use crate::error::{Error, Result};
use crate::field::PairField;
use crate::flow::{origin_split, ConservationCheck, Lattice, PsiOutput};
use crate::scenario::{Problem, TimeGrid};
use crate::value::{move_cost, ArrivalBound, CongestionTables, ValueTable};

/// Largest grid the plan enumeration accepts by default.
pub const DEFAULT_MAX_STEPS: usize = 16;

/// Cost of every complete plan for an agent entering pair `k` at node `i`.
///
/// A plan fixes, edge after edge, either a stop or an arrival node; reaching
/// an interior head exactly at `T` may also end the plan with the exit cost.
/// Costs are summed from the last edge backwards.
fn plan_costs(
    problem: &Problem,
    tables: &CongestionTables,
    bound: &dyn ArrivalBound,
    k: usize,
    i: usize,
    out: &mut Vec<f64>,
) {
    let pairs = problem.paths.pairs();
    let n = problem.grid().steps();
    let grid = problem.grid();
    let edge = pairs.pair(k).edge;
    let len = problem.network.edge(edge).length;
    out.push(problem.stay_penalty(k) + tables.cost_between(edge, i, n));
    let lo = bound.earliest(edge, i).max(i + 1);
    let next = pairs.next(k);
    for j in lo..=n {
        if next.is_none() && j != n {
            continue;
        }
        let here = move_cost(len, grid.span(i, j)) + tables.cost_between(edge, i, j);
        match next {
            None => out.push(here),
            Some(nk) => {
                let mut tails = Vec::new();
                plan_costs(problem, tables, bound, nk, j, &mut tails);
                if j == n {
                    tails.push(problem.horizon_exit_penalty(k));
                }
                out.extend(tails.into_iter().map(|c| here + c));
            }
        }
    }
}

/// Values by minimising over every plan.
pub fn enumerate_values(
    problem: &Problem,
    tables: &CongestionTables,
    bound: &dyn ArrivalBound,
    max_steps: usize,
) -> Result<ValueTable> {
    let grid = problem.grid();
    if grid.steps() > max_steps {
        return Err(Error::Validation {
            check: "oracle-size",
            message: format!(
                "plan enumeration limited to {max_steps} steps, grid has {}",
                grid.steps()
            ),
        });
    }
    let pairs = problem.paths.pairs();
    let mut v = PairField::zeros(pairs.len(), grid.nodes());
    let mut costs = Vec::new();
    for k in 0..pairs.len() {
        for i in 0..grid.nodes() {
            costs.clear();
            plan_costs(problem, tables, bound, k, i, &mut costs);
            v.set(k, i, costs.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    Ok(v)
}

/// Where two value tables differ the most.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub max_abs_diff: f64,
    /// `(pair, node)` of the largest difference, if any differs.
    pub worst: Option<(usize, usize)>,
    pub compared: usize,
}

impl Comparison {
    pub fn exact(&self) -> bool {
        self.worst.is_none()
    }
}

pub fn compare(a: &PairField, b: &PairField) -> Result<Comparison> {
    a.same_shape(b)?;
    let mut c = Comparison {
        max_abs_diff: 0.0,
        worst: None,
        compared: a.values().len(),
    };
    for k in 0..a.pairs() {
        for i in 0..a.nodes() {
            let (x, y) = (a.get(k, i), b.get(k, i));
            if x != y {
                let d = (x - y).abs();
                if c.worst.is_none() || d > c.max_abs_diff {
                    c.max_abs_diff = d;
                    c.worst = Some((k, i));
                }
            }
        }
    }
    Ok(c)
}

/// Recounts the mass balance of `ψ`'s output without its transfer tables.
///
/// Mass reaching the destination from path `p` at step `i` left the origin
/// `Σ delays` steps earlier, provided the agents moved at every entry node
/// along the way.
pub fn conservation_recount(problem: &Problem, out: &PsiOutput) -> ConservationCheck {
    let s = &problem.scenario;
    let grid = s.grid;
    let lattice = Lattice::for_problem(problem);
    let pairs = problem.paths.pairs();
    let z = &out.preferences.z;
    let origin: Vec<f64> = s
        .throughput
        .iter()
        .map(|l| lattice.snap(grid.dt() * l))
        .collect();
    let shares: Vec<Vec<f64>> = (0..grid.nodes())
        .map(|i| {
            let sum: f64 = z.iter().map(|zp| zp[i]).sum();
            let at: Vec<f64> = z.iter().map(|zp| zp[i] / sum).collect();
            origin_split(&lattice, origin[i], &at)
        })
        .collect();

    let arriving = |p: usize, i: usize| -> f64 {
        let ks: Vec<usize> = pairs.of_path(p).collect();
        let total: usize = ks.iter().map(|&k| out.delays[pairs.pair(k).edge]).sum();
        let Some(mut at) = i.checked_sub(total) else {
            return 0.0;
        };
        let start = at;
        for &k in &ks {
            if !out.policy.moves(k, at) {
                return 0.0;
            }
            at += out.delays[pairs.pair(k).edge];
        }
        shares[start][p]
    };

    let mut check = ConservationCheck {
        exact: true,
        max_abs_error: 0.0,
        first_violation: None,
    };
    let mass = &out.mass;
    let total = |i: usize| -> f64 { (0..mass.pairs()).map(|k| mass.get(k, i)).sum() };
    for (i, inflow) in origin.iter().enumerate().take(grid.steps()) {
        let leaving: f64 = (0..problem.paths.len()).map(|p| arriving(p, i)).sum();
        let lhs = total(i + 1) - total(i);
        let rhs = inflow - leaving;
        if lhs != rhs {
            check.exact = false;
            check.first_violation.get_or_insert(i);
        }
        check.max_abs_error = check.max_abs_error.max((lhs - rhs).abs());
    }
    check
}

/// Explicit Euler for `ż = Ḟ - η (z - F)`, path-major.
pub fn euler_preferences(
    f_beta: &[Vec<f64>],
    z0: &[f64],
    eta: f64,
    grid: &TimeGrid,
) -> Vec<Vec<f64>> {
    let dt = grid.dt();
    f_beta
        .iter()
        .zip(z0)
        .map(|(f, &z)| {
            let mut out = Vec::with_capacity(f.len());
            let mut cur = z;
            out.push(cur);
            for w in f.windows(2) {
                cur += (w[1] - w[0]) - eta * dt * (cur - w[0]);
                out.push(cur);
            }
            out
        })
        .collect()
}

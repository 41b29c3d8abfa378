//! Local decisions, delayed outgoing flows, mass conservation and the full
//! map `ρ ↦ ψ(ρ)`.
//!
//! Mass moves between pairs as per-step transfers snapped to a fixed dyadic
//! lattice. Every transfer leaving a pair enters its successor with the same
//! bits, so the discrete balance
//! `Σρ(t_{i+1}) - Σρ(t_i) = Δt λ(t_i) - Δt · destination outflow(t_i)`
//! holds without rounding error.

use serde::Serialize;

use crate::constrained::{self, ArrivalConstraint};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{MassField, PairField};
use crate::preference::{
    best_response, path_costs, preference_evolution, PathCostTable, PreferenceTrajectory,
};
use crate::scenario::Problem;
use crate::value::{
    congestion_total, value_backward_with, ArrivalBound, CongestionTables, Policy, Unconstrained,
    ValueTable,
};

/// Outgoing flow `f^e_p(t_i)` per pair.
pub type FlowField = PairField;

/// Dyadic grid every mass transfer is snapped to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    quantum: f64,
}

impl Lattice {
    /// Quantum `2^(e - 50)` with `2^e >= 8 * scale`: sums of lattice values
    /// below `2^(e + 3)` are exact in `f64`.
    pub fn for_scale(scale: f64) -> Self {
        let e = (8.0 * scale.max(1e-300)).log2().ceil() as i32;
        Self {
            quantum: 2f64.powi(e - 50),
        }
    }

    pub fn for_problem(problem: &Problem) -> Self {
        Self::for_scale(problem.scenario.rho_max)
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    pub fn snap(&self, x: f64) -> f64 {
        (x / self.quantum).round() * self.quantum
    }
}

/// `G[t]^e_p(z) = z_p / Σ_q z_q` on a path's first edge, zero elsewhere.
pub fn local_decision(problem: &Problem, z: &[f64], node: usize) -> Result<Vec<f64>> {
    let sum: f64 = z.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(Error::DegenerateSimplex { node, sum });
    }
    let pairs = problem.paths.pairs();
    let mut g = vec![0.0; pairs.len()];
    for (p, &zp) in z.iter().enumerate() {
        g[pairs.of_path(p).start] = zp / sum;
    }
    Ok(g)
}

/// Route shares `z_p / Σ z` per path and node.
fn route_shares(prefs: &PreferenceTrajectory) -> Result<Vec<Vec<f64>>> {
    let nodes = prefs.z.first().map_or(0, Vec::len);
    let mut shares = vec![Vec::with_capacity(nodes); prefs.z.len()];
    for i in 0..nodes {
        let sum: f64 = prefs.z.iter().map(|s| s[i]).sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::DegenerateSimplex { node: i, sum });
        }
        for (p, s) in prefs.z.iter().enumerate() {
            shares[p].push(s[i] / sum);
        }
    }
    Ok(shares)
}

/// Splits the snapped origin inflow `I = snap(Δt λ)` over paths by
/// cumulative rounding, so the shares sum to `I` exactly.
pub fn origin_split(lattice: &Lattice, inflow: f64, shares: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(shares.len());
    let mut cum = 0.0;
    let mut prev = 0.0;
    for (p, s) in shares.iter().enumerate() {
        cum += s;
        let here = if p + 1 == shares.len() {
            inflow
        } else {
            lattice.snap(inflow * cum.min(1.0))
        };
        out.push(here - prev);
        prev = here;
    }
    out
}

/// Per-step mass transfers into and out of every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfers {
    /// Mass entering pair `k` during step `i`.
    pub inflow: PairField,
    /// Mass leaving pair `k` during step `i`.
    pub outflow: PairField,
    /// Snapped origin inflow `snap(Δt λ(t_i))`.
    pub origin: Vec<f64>,
}

/// Builds the delayed transfers: the first edge of each path receives its
/// share of the origin inflow, every other edge the outflow of its
/// predecessor, and an edge releases what entered `delay` steps earlier
/// when agents entering then move (`sign(u) = 1`).
pub fn compute_transfers(
    problem: &Problem,
    policy: &Policy,
    prefs: &PreferenceTrajectory,
    delays: &[usize],
    exec: Exec,
) -> Result<Transfers> {
    let s = &problem.scenario;
    let lattice = Lattice::for_problem(problem);
    let nodes = s.grid.nodes();
    let dt = s.grid.dt();
    let shares = route_shares(prefs)?;
    let origin: Vec<f64> = s.throughput.iter().map(|l| lattice.snap(dt * l)).collect();
    let mut split = vec![Vec::with_capacity(nodes); shares.len()];
    for i in 0..nodes {
        let at: Vec<f64> = shares.iter().map(|sh| sh[i]).collect();
        for (p, v) in origin_split(&lattice, origin[i], &at)
            .into_iter()
            .enumerate()
        {
            split[p].push(v);
        }
    }

    let pairs = problem.paths.pairs();
    let per_path = exec.map(problem.paths.len(), |p| {
        let mut upstream = split[p].clone();
        let mut series = Vec::new();
        for k in pairs.of_path(p) {
            let d = delays[pairs.pair(k).edge];
            let out: Vec<f64> = (0..nodes)
                .map(|i| match i.checked_sub(d) {
                    Some(src) if policy.moves(k, src) => upstream[src],
                    _ => 0.0,
                })
                .collect();
            series.push((std::mem::replace(&mut upstream, out.clone()), out));
        }
        series
    });

    let mut inflow = PairField::zeros(pairs.len(), nodes);
    let mut outflow = PairField::zeros(pairs.len(), nodes);
    for (p, series) in per_path.into_iter().enumerate() {
        for (k, (inc, out)) in pairs.of_path(p).zip(series) {
            inflow.series_mut(k).copy_from_slice(&inc);
            outflow.series_mut(k).copy_from_slice(&out);
        }
    }
    Ok(Transfers {
        inflow,
        outflow,
        origin,
    })
}

/// Outgoing flow rates `f = outflow / Δt`.
pub fn compute_flows(problem: &Problem, transfers: &Transfers) -> FlowField {
    scale(&transfers.outflow, 1.0 / problem.grid().dt())
}

/// `H^e_p = λ G^e_p + f^{prec} - f^e_p` as rates.
pub fn mass_rhs(problem: &Problem, transfers: &Transfers) -> PairField {
    let dt = problem.grid().dt();
    let mut h = transfers.inflow.clone();
    for k in 0..h.pairs() {
        for (x, out) in h.series_mut(k).iter_mut().zip(transfers.outflow.series(k)) {
            *x = (*x - out) / dt;
        }
    }
    h
}

fn scale(field: &PairField, factor: f64) -> PairField {
    let series = (0..field.pairs())
        .map(|k| field.series(k).iter().map(|x| x * factor).collect())
        .collect();
    PairField::from_series(series).expect("same shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClipDiagnostics {
    /// Total mass added by clipping negative undershoots to zero.
    pub total: f64,
    pub largest: f64,
    pub count: usize,
}

/// Explicit Euler `ρ(t_{i+1}) = ρ(t_i) + transfers in - transfers out`,
/// starting from the snapped initial mass; negative values are clipped.
pub fn integrate_mass(
    problem: &Problem,
    transfers: &Transfers,
) -> Result<(MassField, ClipDiagnostics)> {
    let s = &problem.scenario;
    let lattice = Lattice::for_problem(problem);
    let nodes = s.grid.nodes();
    let pairs = problem.paths.pairs();
    let mut mass = PairField::zeros(pairs.len(), nodes);
    let mut clip = ClipDiagnostics::default();
    for k in 0..pairs.len() {
        let mut rho = lattice.snap(s.rho0[k]);
        mass.set(k, 0, rho);
        for i in 0..nodes - 1 {
            rho = (rho + transfers.inflow.get(k, i)) - transfers.outflow.get(k, i);
            if rho < 0.0 {
                clip.total -= rho;
                clip.largest = clip.largest.max(-rho);
                clip.count += 1;
                rho = 0.0;
            }
            mass.set(k, i + 1, rho);
        }
    }
    for e in 0..problem.network.edges().len() {
        let on = pairs.on_edge(e);
        for i in 0..nodes {
            let m = mass.sum_at(on, i);
            if m > s.rho_max {
                return Err(Error::MassBoundExceeded {
                    edge: problem.network.edge(e).id.clone(),
                    node: i,
                    mass: m,
                    limit: s.rho_max,
                });
            }
        }
    }
    Ok((mass, clip))
}

/// Exactness of the discrete balance at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationCheck {
    pub exact: bool,
    pub max_abs_error: f64,
    /// First step where the balance fails.
    pub first_violation: Option<usize>,
}

/// Compares `Σρ(t_{i+1}) - Σρ(t_i)` with origin inflow minus destination
/// outflow for every step, summing pairs in index order.
pub fn conservation_check(
    problem: &Problem,
    mass: &MassField,
    destination_outflow: &[f64],
    origin: &[f64],
) -> ConservationCheck {
    let all: Vec<usize> = (0..mass.pairs()).collect();
    let mut check = ConservationCheck {
        exact: true,
        max_abs_error: 0.0,
        first_violation: None,
    };
    for i in 0..problem.grid().steps() {
        let lhs = mass.sum_at(&all, i + 1) - mass.sum_at(&all, i);
        let rhs = origin[i] - destination_outflow[i];
        let err = (lhs - rhs).abs();
        if lhs != rhs {
            check.exact = false;
            check.first_violation.get_or_insert(i);
        }
        check.max_abs_error = check.max_abs_error.max(err);
    }
    check
}

/// Destination outflow per step: transfers leaving the last pair of each
/// path, summed in path order.
pub fn destination_outflow(problem: &Problem, transfers: &Transfers) -> Vec<f64> {
    let last: Vec<usize> = (0..problem.paths.len())
        .map(|p| problem.paths.pairs().of_path(p).end - 1)
        .collect();
    (0..problem.grid().nodes())
        .map(|i| transfers.outflow.sum_at(&last, i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsiConfig {
    pub exec: Exec,
    pub constrained: bool,
    #[doc(hidden)]
    pub fault_offset: usize,
}

impl PsiConfig {
    pub fn for_problem(problem: &Problem) -> Self {
        Self {
            exec: Exec::default(),
            constrained: problem.scenario.constrained.enabled,
            fault_offset: 0,
        }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// Every stage of one evaluation of `ψ`.
#[derive(Debug, Clone)]
pub struct PsiOutput {
    pub mass: MassField,
    pub tables: CongestionTables,
    pub values: ValueTable,
    pub policy: Policy,
    pub costs: PathCostTable,
    pub preferences: PreferenceTrajectory,
    pub transfers: Transfers,
    pub flows: FlowField,
    /// Delay per edge in grid steps.
    pub delays: Vec<usize>,
    pub constraint: Option<ArrivalConstraint>,
    pub clip: ClipDiagnostics,
}

struct Shifted<'a> {
    inner: &'a dyn ArrivalBound,
    offset: usize,
}

impl ArrivalBound for Shifted<'_> {
    fn earliest(&self, edge: usize, i: usize) -> usize {
        self.inner.earliest(edge, i).max(i + 1) + self.offset
    }
}

/// `ρ → (V, τ*) → (J, F_β, z), f → (G, H) → ρ'`.
pub fn apply_psi(problem: &Problem, mass: &MassField, config: PsiConfig) -> Result<PsiOutput> {
    let s = &problem.scenario;
    let expected = PairField::zeros(problem.paths.pairs().len(), s.grid.nodes());
    expected.same_shape(mass)?;
    let exec = config.exec;
    let tables = congestion_total(problem, mass);

    let constraint = config
        .constrained
        .then(|| constrained::arrival_constraint(problem, &tables.totals, exec));
    let unconstrained = Unconstrained::default();
    let bound: &dyn ArrivalBound = match &constraint {
        Some(c) => c,
        None => &unconstrained,
    };
    let shifted = Shifted {
        inner: bound,
        offset: config.fault_offset,
    };
    let (values, policy) = value_backward_with(problem, &tables, &shifted, exec);
    let delays = match &constraint {
        Some(c) => constrained::ktilde_steps(problem, c),
        None => vec![s.delay_steps; problem.network.edges().len()],
    };

    let costs = path_costs(problem, &policy, &tables, exec);
    let f_beta = best_response(problem, &costs);
    let z = preference_evolution(&f_beta, &s.z0, s.eta, &s.grid, s.throughput[0])?;
    let preferences = PreferenceTrajectory { z, f_beta };

    let transfers = compute_transfers(problem, &policy, &preferences, &delays, exec)?;
    let flows = compute_flows(problem, &transfers);
    let (next, clip) = integrate_mass(problem, &transfers)?;
    Ok(PsiOutput {
        mass: next,
        tables,
        values,
        policy,
        costs,
        preferences,
        transfers,
        flows,
        delays,
        constraint,
        clip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::three_route;

    fn uniform_prefs(problem: &Problem) -> PreferenceTrajectory {
        let nodes = problem.grid().nodes();
        let z = vec![vec![1.0 / 3.0; nodes]; 3];
        PreferenceTrajectory {
            z: z.clone(),
            f_beta: z,
        }
    }

    fn all_moving(problem: &Problem) -> Policy {
        let nodes = problem.grid().nodes();
        let mut pol = Policy::new(problem.paths.pairs().len(), nodes);
        for k in 0..problem.paths.pairs().len() {
            for i in 0..nodes - 1 {
                pol.set(k, i, Some(i + 1));
            }
        }
        pol
    }

    #[test]
    fn decision_on_origin_pairs_only() {
        let p = three_route(10);
        let g = local_decision(&p, &[1.0, 1.0, 1.0], 0).unwrap();
        let pairs = p.paths.pairs();
        for (k, pair) in pairs.iter() {
            let expected = if pair.pos == 0 { 1.0 / 3.0 } else { 0.0 };
            assert_eq!(g[k], expected, "{}", pairs.label(k));
        }
        let g = local_decision(&p, &[1.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(g[pairs.find(0, 0).unwrap()], 1.0);
        assert_eq!(g.iter().sum::<f64>(), 1.0);
        assert!(matches!(
            local_decision(&p, &[0.0, 0.0, 0.0], 4),
            Err(Error::DegenerateSimplex { node: 4, .. })
        ));
    }

    #[test]
    fn split_is_exact() {
        let lat = Lattice::for_scale(20.0);
        let inflow = lat.snap(0.02);
        let parts = origin_split(&lat, inflow, &[0.3, 0.45, 0.25]);
        assert_eq!(parts.iter().sum::<f64>(), inflow);
        assert!(parts.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn flows_vanish_before_delay_and_propagate_after() {
        let p = three_route(100);
        let k = p.scenario.delay_steps;
        assert_eq!(k, 5);
        let pol = all_moving(&p);
        let tr =
            compute_transfers(&p, &pol, &uniform_prefs(&p), &[k; 5], Exec::Sequential).unwrap();
        let f = compute_flows(&p, &tr);
        let pairs = p.paths.pairs();
        for kk in 0..pairs.len() {
            for i in 0..k {
                assert_eq!(f.get(kk, i), 0.0);
            }
        }
        let e4 = pairs.find(p.network.edge_index("e4").unwrap(), 0).unwrap();
        for i in 2 * k..100 {
            assert!((f.get(e4, i) - 1.0 / 3.0).abs() < 1e-9, "{}", f.get(e4, i));
        }
        assert_eq!(f.get(e4, 2 * k - 1), 0.0);
    }

    #[test]
    fn stopped_edge_has_no_flow() {
        let p = three_route(60);
        let mut pol = all_moving(&p);
        let e3 = p
            .paths
            .pairs()
            .find(p.network.edge_index("e3").unwrap(), 2)
            .unwrap();
        for i in 0..61 {
            pol.set(e3, i, None);
        }
        let tr =
            compute_transfers(&p, &pol, &uniform_prefs(&p), &[3; 5], Exec::Sequential).unwrap();
        assert!(tr.outflow.series(e3).iter().all(|&x| x == 0.0));
        assert!(tr.inflow.series(e3 + 1).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rhs_before_delay_is_pure_inflow() {
        let p = three_route(100);
        let tr = compute_transfers(
            &p,
            &all_moving(&p),
            &uniform_prefs(&p),
            &[5; 5],
            Exec::Sequential,
        )
        .unwrap();
        let h = mass_rhs(&p, &tr);
        let e1p1 = p.paths.pairs().find(0, 0).unwrap();
        for i in 0..5 {
            assert!((h.get(e1p1, i) - 1.0 / 3.0).abs() < 1e-9);
        }
        // Summed rates telescope to inflow minus destination outflow.
        let out = destination_outflow(&p, &tr);
        let dt = p.grid().dt();
        for (i, o) in out.iter().enumerate().take(100) {
            let total: f64 = (0..h.pairs()).map(|k| h.get(k, i)).sum();
            assert!((total - (1.0 - o / dt)).abs() < 1e-9);
        }
    }

    #[test]
    fn single_route_preference_feeds_one_path() {
        let p = three_route(50);
        let nodes = 51;
        let prefs = PreferenceTrajectory {
            z: vec![vec![1.0; nodes], vec![0.0; nodes], vec![0.0; nodes]],
            f_beta: vec![vec![1.0; nodes], vec![0.0; nodes], vec![0.0; nodes]],
        };
        let tr = compute_transfers(&p, &all_moving(&p), &prefs, &[2; 5], Exec::Sequential).unwrap();
        let pairs = p.paths.pairs();
        for k in pairs.of_path(1).chain(pairs.of_path(2)) {
            assert!(tr.inflow.series(k).iter().all(|&x| x == 0.0));
        }
        assert!(tr.inflow.series(0).iter().all(|&x| x > 0.0));
    }

    #[test]
    fn constant_rate_integrates_linearly() {
        let p = three_route(40);
        let lat = Lattice::for_problem(&p);
        let dt = p.grid().dt();
        let c = 0.37;
        let pairs = p.paths.pairs().len();
        let mut inflow = PairField::zeros(pairs, 41);
        inflow.series_mut(0).fill(lat.snap(c * dt));
        let tr = Transfers {
            inflow,
            outflow: PairField::zeros(pairs, 41),
            origin: vec![0.0; 41],
        };
        let (m, clip) = integrate_mass(&p, &tr).unwrap();
        for i in 0..=40 {
            assert!((m.get(0, i) - c * p.grid().t(i)).abs() <= i as f64 * lat.quantum());
        }
        assert_eq!(clip.count, 0);
        let still = Transfers {
            inflow: PairField::zeros(pairs, 41),
            outflow: PairField::zeros(pairs, 41),
            origin: vec![0.0; 41],
        };
        let (m, _) = integrate_mass(&p, &still).unwrap();
        assert!(m.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn undershoot_is_clipped_and_reported() {
        let p = three_route(10);
        let pairs = p.paths.pairs().len();
        let mut outflow = PairField::zeros(pairs, 11);
        outflow.set(0, 0, 0.25);
        let tr = Transfers {
            inflow: PairField::zeros(pairs, 11),
            outflow,
            origin: vec![0.0; 11],
        };
        let (m, clip) = integrate_mass(&p, &tr).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(clip.count, 1);
        assert_eq!(clip.total, 0.25);
    }

    #[test]
    fn overfull_edge_is_an_error() {
        let p = three_route(10);
        let pairs = p.paths.pairs().len();
        let mut inflow = PairField::zeros(pairs, 11);
        inflow.set(0, 3, 25.0);
        let tr = Transfers {
            inflow,
            outflow: PairField::zeros(pairs, 11),
            origin: vec![0.0; 11],
        };
        assert!(matches!(
            integrate_mass(&p, &tr),
            Err(Error::MassBoundExceeded { .. })
        ));
    }

    #[test]
    fn psi_of_zero_is_balanced_and_deterministic() {
        let p = three_route(200);
        let zero = PairField::zeros(p.paths.pairs().len(), 201);
        let a = apply_psi(&p, &zero, PsiConfig::for_problem(&p)).unwrap();
        let b = apply_psi(
            &p,
            &zero,
            PsiConfig::for_problem(&p).with_exec(Exec::Sequential),
        )
        .unwrap();
        assert_eq!(a.mass, b.mass);
        assert_eq!(a.flows, b.flows);
        for k in 0..a.mass.pairs() {
            assert_eq!(a.mass.get(k, 0), 0.0);
        }
        let out = destination_outflow(&p, &a.transfers);
        let c = conservation_check(&p, &a.mass, &out, &a.transfers.origin);
        assert!(c.exact, "{c:?}");
        assert_eq!(a.clip.count, 0);
    }

    #[test]
    fn psi_rejects_wrong_shape() {
        let p = three_route(20);
        let bad = PairField::zeros(3, 21);
        assert!(matches!(
            apply_psi(&p, &bad, PsiConfig::for_problem(&p)),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}

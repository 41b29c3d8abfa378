//! Damped fixed-point iteration `ρ ← (1-γ) ρ + γ ψ(ρ)` and the checks run on
//! its result.

use serde::Serialize;

use crate::error::Result;
use crate::field::{MassField, PairField};
use crate::flow::{
    apply_psi, conservation_check, destination_outflow, ClipDiagnostics, ConservationCheck,
    PsiConfig, PsiOutput,
};
use crate::scenario::Problem;
use crate::value::{max_slope, Policy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub psi: PsiConfig,
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SolveConfig {
    pub fn for_problem(problem: &Problem) -> Self {
        let s = &problem.scenario.solver;
        Self {
            psi: PsiConfig::for_problem(problem),
            gamma: s.gamma,
            tol: s.tol,
            max_iter: s.max_iter,
        }
    }
}

/// Whether a mass field lies in the candidate space: bounded edge totals
/// and time slopes at most `3 λ̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XMembership {
    pub max_edge_mass: f64,
    pub mass_limit: f64,
    pub max_slope: f64,
    pub slope_limit: f64,
}

impl XMembership {
    pub fn mass_ok(&self) -> bool {
        self.max_edge_mass <= self.mass_limit
    }

    pub fn slope_ok(&self) -> bool {
        self.max_slope <= self.slope_limit + 1e-9
    }

    pub fn passed(&self) -> bool {
        self.mass_ok() && self.slope_ok()
    }
}

pub fn verify_x_membership(problem: &Problem, mass: &MassField) -> XMembership {
    let s = &problem.scenario;
    let pairs = problem.paths.pairs();
    let max_edge_mass = (0..problem.network.edges().len())
        .flat_map(|e| (0..s.grid.nodes()).map(move |i| mass.sum_at(pairs.on_edge(e), i)))
        .fold(0.0, f64::max);
    XMembership {
        max_edge_mass,
        mass_limit: s.rho_max,
        max_slope: max_slope(mass, s.grid.dt()),
        slope_limit: s.lipschitz_bound(),
    }
}

/// `‖ψ(ρ) - ρ‖_∞`.
pub fn residual(rho: &MassField, image: &MassField) -> Result<f64> {
    rho.sup_distance(image)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub x_membership: XMembership,
    pub conservation: ConservationCheck,
    /// Largest `|Σ_p z_p - λ| / λ` over the grid.
    pub simplex_error: f64,
    pub min_preference: f64,
    /// Largest `f / C_e` over edges and nodes.
    pub capacity_ratio: f64,
    pub clip: ClipDiagnostics,
    /// Arrival nodes never decrease with the entry node.
    pub policy_monotone: bool,
    /// Iterations whose residual exceeds the previous one.
    pub nonmonotone_residuals: Vec<usize>,
}

pub struct EquilibriumReport {
    /// Last iterate `ρ_n`.
    pub mass: MassField,
    /// Every stage of `ψ(ρ_n)`.
    pub psi: PsiOutput,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Diagnostics,
}

pub fn policy_monotone(policy: &Policy) -> bool {
    (0..policy.pairs()).all(|k| {
        let s = policy.series(k);
        // Once stopped, later entries stop too; moving arrivals never decrease.
        s.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b >= a,
            (Some(_), None) | (None, None) => true,
            (None, Some(_)) => false,
        })
    })
}

pub fn diagnose(
    problem: &Problem,
    mass: &MassField,
    psi: &PsiOutput,
    residuals: &[f64],
) -> Diagnostics {
    let s = &problem.scenario;
    let out = destination_outflow(problem, &psi.transfers);
    let conservation = conservation_check(problem, &psi.mass, &out, &psi.transfers.origin);
    let z = &psi.preferences.z;
    let mut simplex_error: f64 = 0.0;
    let mut min_preference = f64::INFINITY;
    for i in 0..s.grid.nodes() {
        let sum: f64 = z.iter().map(|zp| zp[i]).sum();
        simplex_error = simplex_error.max((sum - s.throughput[i]).abs() / s.throughput[i]);
        for zp in z {
            min_preference = min_preference.min(zp[i]);
        }
    }
    let pairs = problem.paths.pairs();
    let capacity_ratio = (0..problem.network.edges().len())
        .flat_map(|e| {
            let cap = problem.network.edge(e).capacity;
            (0..s.grid.nodes()).map(move |i| psi.flows.sum_at(pairs.on_edge(e), i) / cap)
        })
        .fold(0.0, f64::max);
    Diagnostics {
        x_membership: verify_x_membership(problem, mass),
        conservation,
        simplex_error,
        min_preference,
        capacity_ratio,
        clip: psi.clip,
        policy_monotone: policy_monotone(&psi.policy),
        nonmonotone_residuals: (1..residuals.len())
            .filter(|&n| residuals[n] > residuals[n - 1])
            .collect(),
    }
}

/// Iterates from the zero field until `‖ψ(ρ_n) - ρ_n‖_∞ <= tol` or
/// `max_iter` evaluations. Not converging is reported, not an error.
pub fn solve(problem: &Problem, config: SolveConfig) -> Result<EquilibriumReport> {
    let s = &problem.scenario;
    let mut rho = PairField::zeros(problem.paths.pairs().len(), s.grid.nodes());
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut psi = apply_psi(problem, &rho, config.psi)?;
    for n in 0..config.max_iter.max(1) {
        if n > 0 {
            psi = apply_psi(problem, &rho, config.psi)?;
        }
        let r = residual(&rho, &psi.mass)?;
        residuals.push(r);
        if r <= config.tol {
            converged = true;
            break;
        }
        if n + 1 < config.max_iter {
            rho = rho.blend(&psi.mass, config.gamma)?;
        }
    }
    let diagnostics = diagnose(problem, &rho, &psi, &residuals);
    Ok(EquilibriumReport {
        mass: rho,
        psi,
        iterations: residuals.len(),
        residuals,
        converged,
        diagnostics,
    })
}

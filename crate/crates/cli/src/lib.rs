//! Commands behind the `netmfg` binary.
//!
//! Exit codes: 0 success, 1 validation failure or oracle mismatch, 2 parse
//! error, 3 solve finished without converging.

pub mod io;

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use netmfg::equilibrium::{diagnose, residual, solve, SolveConfig};
use netmfg::field::PairField;
use netmfg::flow::{apply_psi, conservation_check, destination_outflow, PsiConfig};
use netmfg::oracle::{compare, conservation_recount, enumerate_values};
use netmfg::scenario::{assess, check_solver, ScenarioFile, SolverSettings};
use netmfg::value::{congestion_total, value_backward_with, ArrivalBound, Unconstrained};
use netmfg::{constrained, Error, Exec, Problem};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for an error that escaped a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_)) => EXIT_PARSE,
        _ => EXIT_INVALID,
    }
}

/// Reads a scenario as JSON (`.json`) or TOML (anything else).
pub fn read_scenario(path: &Path) -> Result<ScenarioFile> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        ScenarioFile::from_toml(&text)?
    };
    Ok(file)
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    Ok(Problem::from_file(read_scenario(path)?)?)
}

fn exec_for(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

struct Manifest {
    command: &'static str,
    scenario: PathBuf,
    parameters: Value,
    started: Instant,
}

impl Manifest {
    fn new(command: &'static str, scenario: &Path, problem: &Problem, flags: Value) -> Self {
        Self {
            command,
            scenario: scenario.to_path_buf(),
            parameters: json!({ "scenario": problem.file, "flags": flags }),
            started: Instant::now(),
        }
    }

    fn fields(&self, status: i32) -> Value {
        json!({
            "command": self.command,
            "scenario": self.scenario.display().to_string(),
            "parameters": self.parameters,
            "version": VERSION,
            "duration_seconds": self.started.elapsed().as_secs_f64(),
            "exit_status": status,
        })
    }

    fn write(&self, dir: &Path, status: i32) -> Result<()> {
        io::write_json(&dir.join("manifest.json"), &self.fields(status))
    }
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

/// Prints every assumption check; 0 iff all pass.
pub fn cmd_validate(scenario: &Path) -> Result<i32> {
    let file = read_scenario(scenario)?;
    let (checks, _) = assess(&file);
    for c in &checks {
        println!(
            "{}: {} ({})",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    Ok(if checks.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_INVALID
    })
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub gamma: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub constrained: bool,
    pub sequential: bool,
}

pub fn cmd_solve(scenario: &Path, out: &Path, opts: &SolveOptions) -> Result<i32> {
    let problem = load_problem(scenario)?;
    let mut config = SolveConfig::for_problem(&problem);
    config.gamma = opts.gamma.unwrap_or(config.gamma);
    config.tol = opts.tol.unwrap_or(config.tol);
    config.max_iter = opts.max_iter.unwrap_or(config.max_iter);
    config.psi.constrained |= opts.constrained;
    config.psi.exec = exec_for(opts.sequential);
    let settings = SolverSettings {
        gamma: config.gamma,
        tol: config.tol,
        max_iter: config.max_iter,
        eps_tie: problem.scenario.solver.eps_tie,
    };
    if let Err(message) = check_solver(&settings) {
        return Err(Error::Validation {
            check: netmfg::scenario::CHECK_SOLVER,
            message,
        }
        .into());
    }
    let manifest = Manifest::new(
        "solve",
        scenario,
        &problem,
        json!({
            "gamma": config.gamma,
            "tol": config.tol,
            "max_iter": config.max_iter,
            "constrained": config.psi.constrained,
        }),
    );

    let report = solve(&problem, config)?;
    std::fs::create_dir_all(out)?;
    io::write_masses(&out.join("masses.csv"), &problem, &report.mass)?;
    io::write_stages(out, &problem, &report.psi)?;
    io::write_residuals(&out.join("residuals.csv"), &report.residuals)?;
    let status = if report.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    let body = json!({
        "residuals": report.residuals,
        "iterations": report.iterations,
        "converged": report.converged,
        "tol": config.tol,
        "delays": report.psi.delays,
        "diagnostics": report.diagnostics,
    });
    io::write_json(
        &out.join("report.json"),
        &merge(manifest.fields(status), body),
    )?;
    manifest.write(out, status)?;
    println!(
        "{} after {} iterations, residual {:e} (tol {:e})",
        if report.converged {
            "converged"
        } else {
            "not converged"
        },
        report.iterations,
        report.residuals.last().copied().unwrap_or(f64::NAN),
        config.tol,
    );
    Ok(status)
}

#[derive(Debug, Clone, Default)]
pub struct PsiOnceOptions {
    /// Input masses; `None` means the zero field.
    pub mass: Option<PathBuf>,
    pub constrained: bool,
    pub sequential: bool,
}

/// Evaluates `ψ` once and writes every stage; prints `‖ψ(ρ) - ρ‖_∞`.
pub fn cmd_psi_once(scenario: &Path, out: &Path, opts: &PsiOnceOptions) -> Result<i32> {
    let problem = load_problem(scenario)?;
    let rho = match &opts.mass {
        Some(path) => io::read_masses(path, &problem)?,
        None => PairField::zeros(problem.paths.pairs().len(), problem.grid().nodes()),
    };
    let mut config = PsiConfig::for_problem(&problem).with_exec(exec_for(opts.sequential));
    config.constrained |= opts.constrained;
    let manifest = Manifest::new(
        "psi-once",
        scenario,
        &problem,
        json!({
            "mass": opts.mass.as_ref().map(|p| p.display().to_string()),
            "constrained": config.constrained,
        }),
    );
    let image = apply_psi(&problem, &rho, config)?;
    let r = residual(&rho, &image.mass)?;
    std::fs::create_dir_all(out)?;
    io::write_masses(&out.join("masses.csv"), &problem, &image.mass)?;
    io::write_stages(out, &problem, &image)?;
    let body = json!({
        "residual": r,
        "delays": image.delays,
        "diagnostics": diagnose(&problem, &rho, &image, &[]),
    });
    io::write_json(
        &out.join("report.json"),
        &merge(manifest.fields(EXIT_OK), body),
    )?;
    manifest.write(out, EXIT_OK)?;
    println!("residual {r:e}");
    Ok(EXIT_OK)
}

#[derive(Debug, Clone)]
pub struct OracleOptions {
    pub max_steps: usize,
    /// Overrides the scenario's step count.
    pub steps: Option<usize>,
    /// Shifts the fast pipeline's arrival search; zero in normal use.
    pub fault_offset: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            max_steps: netmfg::oracle::DEFAULT_MAX_STEPS,
            steps: None,
            fault_offset: 0,
        }
    }
}

/// Result of cross-checking the pipeline against the brute-force oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub value_deviation: f64,
    /// `(pair label, node)` of the worst value deviation.
    pub value_mismatch: Option<(String, usize)>,
    pub conservation_exact: bool,
    pub recount_exact: bool,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.value_mismatch.is_none() && self.conservation_exact && self.recount_exact
    }
}

/// Compares value tables at the congestion of `ψ(0)` and recounts the mass
/// balance of `ψ(ψ(0))`.
pub fn run_oracle(
    problem: &Problem,
    fault_offset: usize,
    max_steps: usize,
) -> Result<OracleSummary> {
    let nodes = problem.grid().nodes();
    let zero = PairField::zeros(problem.paths.pairs().len(), nodes);
    let config = PsiConfig::for_problem(problem);
    let rho = apply_psi(problem, &zero, config)?.mass;

    let tables = congestion_total(problem, &rho);
    let limits = config
        .constrained
        .then(|| constrained::arrival_constraint(problem, &tables.totals, Exec::Sequential));
    let free = Unconstrained::default();
    let bound: &dyn ArrivalBound = match &limits {
        Some(c) => c,
        None => &free,
    };
    let brute = enumerate_values(problem, &tables, bound, max_steps)?;
    let fast = if fault_offset == 0 {
        value_backward_with(problem, &tables, bound, config.exec).0
    } else {
        let faulty = Unconstrained { fault_offset };
        value_backward_with(problem, &tables, &faulty, config.exec).0
    };
    let cmp = compare(&fast, &brute)?;

    let image = apply_psi(problem, &rho, config)?;
    let balance = conservation_check(
        problem,
        &image.mass,
        &destination_outflow(problem, &image.transfers),
        &image.transfers.origin,
    );
    let recount = conservation_recount(problem, &image);
    Ok(OracleSummary {
        value_deviation: cmp.max_abs_diff,
        value_mismatch: cmp
            .worst
            .map(|(k, i)| (problem.paths.pairs().label(k).to_string(), i)),
        conservation_exact: balance.exact,
        recount_exact: recount.exact,
    })
}

pub fn cmd_oracle(scenario: &Path, opts: &OracleOptions) -> Result<i32> {
    let mut problem = load_problem(scenario)?;
    if let Some(n) = opts.steps {
        problem = problem.with_steps(n)?;
    }
    let n = problem.grid().steps();
    if n > opts.max_steps {
        println!(
            "refusing: grid has {n} steps, oracle limit is {}",
            opts.max_steps
        );
        return Ok(EXIT_INVALID);
    }
    let s = run_oracle(&problem, opts.fault_offset, opts.max_steps)?;
    println!("value deviation: {:e}", s.value_deviation);
    if let Some((label, i)) = &s.value_mismatch {
        println!(
            "value mismatch at {label} node {i} (t = {})",
            problem.grid().t(*i)
        );
    }
    println!(
        "conservation: {}",
        if s.conservation_exact && s.recount_exact {
            "exact"
        } else {
            "mismatch"
        }
    );
    Ok(if s.passed() { EXIT_OK } else { EXIT_INVALID })
}

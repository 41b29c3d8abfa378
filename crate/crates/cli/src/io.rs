//! CSV trajectories and JSON documents written by the commands.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use netmfg::field::PairField;
use netmfg::flow::PsiOutput;
use netmfg::value::Policy;
use netmfg::{Problem, TimeGrid};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

/// One row per grid node: `t` followed by the given columns.
fn write_columns(
    path: &Path,
    grid: &TimeGrid,
    header: Vec<String>,
    columns: &[Vec<f64>],
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(std::iter::once("t".to_string()).chain(header))?;
    for i in 0..grid.nodes() {
        let row = std::iter::once(num(grid.t(i))).chain(columns.iter().map(|c| num(c[i])));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn pair_header(problem: &Problem, name: &str) -> Vec<String> {
    let pairs = problem.paths.pairs();
    (0..pairs.len())
        .map(|k| format!("{name}[{}]", pairs.label(k)))
        .collect()
}

fn path_header(problem: &Problem, name: &str) -> Vec<String> {
    problem
        .paths
        .paths()
        .iter()
        .map(|p| format!("{name}[{}]", p.id))
        .collect()
}

fn pair_columns(field: &PairField) -> Vec<Vec<f64>> {
    (0..field.pairs())
        .map(|k| field.series(k).to_vec())
        .collect()
}

pub fn write_pair_field(
    path: &Path,
    problem: &Problem,
    name: &str,
    field: &PairField,
) -> Result<()> {
    write_columns(
        path,
        &problem.grid(),
        pair_header(problem, name),
        &pair_columns(field),
    )
}

pub fn write_masses(path: &Path, problem: &Problem, mass: &PairField) -> Result<()> {
    write_pair_field(path, problem, "rho", mass)
}

/// Arrival times `τ*`, `inf` where the agent stops.
pub fn write_policy(path: &Path, problem: &Problem, policy: &Policy) -> Result<()> {
    let grid = problem.grid();
    let columns: Vec<Vec<f64>> = (0..policy.pairs())
        .map(|k| {
            (0..grid.nodes())
                .map(|i| policy.arrival_time(k, i, &grid))
                .collect()
        })
        .collect();
    write_columns(path, &grid, pair_header(problem, "tau"), &columns)
}

/// Every stage of one `ψ` evaluation except the resulting masses.
pub fn write_stages(dir: &Path, problem: &Problem, out: &PsiOutput) -> Result<()> {
    let grid = problem.grid();
    write_pair_field(&dir.join("values.csv"), problem, "V", &out.values)?;
    write_pair_field(&dir.join("flows.csv"), problem, "f", &out.flows)?;
    write_policy(&dir.join("policy.csv"), problem, &out.policy)?;
    write_columns(
        &dir.join("costs.csv"),
        &grid,
        path_header(problem, "J"),
        &out.costs.costs,
    )?;
    let mut header = path_header(problem, "z");
    header.extend(path_header(problem, "F_beta"));
    let columns: Vec<Vec<f64>> = out
        .preferences
        .z
        .iter()
        .chain(&out.preferences.f_beta)
        .cloned()
        .collect();
    write_columns(&dir.join("preferences.csv"), &grid, header, &columns)
}

pub fn write_residuals(path: &Path, residuals: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iteration", "residual"])?;
    for (n, r) in residuals.iter().enumerate() {
        w.write_record([n.to_string(), num(*r)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// A CSV written by this tool: header plus rows of numbers (`inf` allowed).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| match s.trim() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                x => x
                    .parse::<f64>()
                    .with_context(|| format!("bad number `{x}` in {}", path.display())),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Reads a `masses.csv` back into a field shaped for `problem`.
pub fn read_masses(path: &Path, problem: &Problem) -> Result<PairField> {
    let table = read_table(path)?;
    let nodes = problem.grid().nodes();
    if table.rows.len() != nodes {
        bail!(netmfg::Error::ShapeMismatch {
            expected: format!("{nodes} rows"),
            got: format!("{} rows", table.rows.len()),
        });
    }
    let series = pair_header(problem, "rho")
        .iter()
        .map(|name| {
            table.column(name).ok_or_else(|| {
                anyhow::Error::new(netmfg::Error::ShapeMismatch {
                    expected: format!("column `{name}`"),
                    got: format!("columns {:?}", table.header),
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairField::from_series(series)?)
}

//! Per-(edge, path) trajectories sampled on the time grid.

use crate::error::{Error, Result};
use crate::network::{Network, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub edge: usize,
    pub path: usize,
    /// Position of the edge along the path.
    pub pos: usize,
}

/// Enumerates the (edge, path) pairs with the edge on the path, path-major
/// and in travel order along each path.
#[derive(Debug, Clone)]
pub struct PairIndex {
    pairs: Vec<Pair>,
    path_start: Vec<usize>,
    on_edge: Vec<Vec<usize>>,
    labels: Vec<String>,
}

impl PairIndex {
    pub(crate) fn new(network: &Network, paths: &[Path]) -> Self {
        let mut pairs = Vec::new();
        let mut path_start = Vec::with_capacity(paths.len() + 1);
        let mut on_edge = vec![Vec::new(); network.edges().len()];
        let mut labels = Vec::new();
        for (p, path) in paths.iter().enumerate() {
            path_start.push(pairs.len());
            for (pos, &edge) in path.edges.iter().enumerate() {
                on_edge[edge].push(pairs.len());
                labels.push(format!("{}:{}", network.edge(edge).id, path.id));
                pairs.push(Pair { edge, path: p, pos });
            }
        }
        path_start.push(pairs.len());
        Self {
            pairs,
            path_start,
            on_edge,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> Pair {
        self.pairs[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Pair)> + '_ {
        self.pairs.iter().copied().enumerate()
    }

    /// Pair indices of path `p`, in travel order.
    pub fn of_path(&self, p: usize) -> std::ops::Range<usize> {
        self.path_start[p]..self.path_start[p + 1]
    }

    /// Pair indices carrying edge `e`.
    pub fn on_edge(&self, e: usize) -> &[usize] {
        &self.on_edge[e]
    }

    pub fn find(&self, edge: usize, path: usize) -> Option<usize> {
        self.of_path(path).find(|&k| self.pairs[k].edge == edge)
    }

    /// Preceding pair on the same path.
    pub fn prev(&self, k: usize) -> Option<usize> {
        (self.pairs[k].pos > 0).then(|| k - 1)
    }

    /// Following pair on the same path.
    pub fn next(&self, k: usize) -> Option<usize> {
        let p = self.pairs[k].path;
        (k + 1 < self.path_start[p + 1]).then_some(k + 1)
    }

    pub fn is_last(&self, k: usize) -> bool {
        self.next(k).is_none()
    }

    /// `"<edge id>:<path id>"`.
    pub fn label(&self, k: usize) -> &str {
        &self.labels[k]
    }

    pub fn position_of_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A scalar trajectory per pair, `len() × nodes` samples stored pair-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairField {
    pairs: usize,
    nodes: usize,
    data: Vec<f64>,
}

/// Mass per (edge, path) pair.
pub type MassField = PairField;

impl PairField {
    pub fn zeros(pairs: usize, nodes: usize) -> Self {
        Self::filled(pairs, nodes, 0.0)
    }

    pub fn filled(pairs: usize, nodes: usize, value: f64) -> Self {
        Self {
            pairs,
            nodes,
            data: vec![value; pairs * nodes],
        }
    }

    pub fn from_series(series: Vec<Vec<f64>>) -> Result<Self> {
        let nodes = series.first().map_or(0, Vec::len);
        if let Some(bad) = series.iter().find(|s| s.len() != nodes) {
            return Err(Error::ShapeMismatch {
                expected: format!("{nodes} nodes"),
                got: format!("{} nodes", bad.len()),
            });
        }
        Ok(Self {
            pairs: series.len(),
            nodes,
            data: series.into_iter().flatten().collect(),
        })
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.nodes + i]
    }

    pub fn set(&mut self, k: usize, i: usize, v: f64) {
        self.data[k * self.nodes + i] = v;
    }

    pub fn series(&self, k: usize) -> &[f64] {
        &self.data[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn series_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.nodes..(k + 1) * self.nodes]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.pairs == other.pairs && self.nodes == other.nodes {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.pairs, self.nodes),
                got: format!("{}x{}", other.pairs, other.nodes),
            })
        }
    }

    /// `(1 - gamma) * self + gamma * other`.
    pub fn blend(&self, other: &Self, gamma: f64) -> Result<Self> {
        self.same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (1.0 - gamma) * a + gamma * b)
            .collect();
        Ok(Self { data, ..*self })
    }

    /// Largest absolute entrywise difference.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Sum over the pairs listed in `ks` at node `i`, in the given order.
    pub fn sum_at(&self, ks: &[usize], i: usize) -> f64 {
        ks.iter().map(|&k| self.get(k, i)).sum()
    }
}

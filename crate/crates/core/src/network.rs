//! Directed acyclic multigraph with a single origin and destination, its
//! origin-destination path set and the edge-path incidence structure.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PairIndex;

/// Default cap on the number of enumerated paths.
pub const DEFAULT_MAX_PATHS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub length: f64,
    pub capacity: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    origin: usize,
    destination: usize,
    /// Vertices in topological order.
    topo: Vec<usize>,
    /// Shortest distance to the destination, per vertex.
    remaining: Vec<f64>,
}

impl Network {
    /// Validates and builds a network.
    pub fn build(
        vertices: &[String],
        edges: &[EdgeSpec],
        origin: &str,
        destination: &str,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.as_str(), i).is_some() {
                return Err(Error::DuplicateId(v.clone()));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(name.to_string()))
        };
        let origin = lookup(origin)?;
        let destination = lookup(destination)?;

        let mut seen = HashMap::new();
        let mut built = Vec::with_capacity(edges.len());
        for spec in edges {
            if seen.insert(spec.id.as_str(), ()).is_some() {
                return Err(Error::DuplicateId(spec.id.clone()));
            }
            let tail = lookup(&spec.tail)?;
            let head = lookup(&spec.head)?;
            let bad = |reason: &str| Error::BadEdge {
                edge: spec.id.clone(),
                reason: reason.to_string(),
            };
            if tail == head {
                return Err(bad("tail and head coincide"));
            }
            if !(spec.length.is_finite() && spec.length > 0.0) {
                return Err(bad("length must be positive and finite"));
            }
            if !(spec.capacity.is_finite() && spec.capacity > 0.0) {
                return Err(bad("capacity must be positive and finite"));
            }
            built.push(Edge {
                id: spec.id.clone(),
                tail,
                head,
                length: spec.length,
                capacity: spec.capacity,
            });
        }

        let topo = topological_order(vertices.len(), &built)
            .map_err(|v| Error::CycleDetected(vertices[v].clone()))?;

        let forward = reachable(vertices.len(), origin, |v| {
            built.iter().filter(move |e| e.tail == v).map(|e| e.head)
        });
        let backward = reachable(vertices.len(), destination, |v| {
            built.iter().filter(move |e| e.head == v).map(|e| e.tail)
        });
        for v in 0..vertices.len() {
            if !forward[v] {
                return Err(Error::Unreachable {
                    vertex: vertices[v].clone(),
                    reason: "not reachable from the origin",
                });
            }
            if !backward[v] {
                return Err(Error::Unreachable {
                    vertex: vertices[v].clone(),
                    reason: "unable to reach the destination",
                });
            }
        }

        // Relaxation in reverse topological order.
        let mut remaining = vec![f64::INFINITY; vertices.len()];
        remaining[destination] = 0.0;
        for &v in topo.iter().rev() {
            for e in built.iter().filter(|e| e.tail == v) {
                let via = e.length + remaining[e.head];
                if via < remaining[v] {
                    remaining[v] = via;
                }
            }
        }

        Ok(Self {
            vertices: vertices.to_vec(),
            edges: built,
            origin,
            destination,
            topo,
            remaining,
        })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    /// Length of the shortest route from `v` to the destination.
    pub fn shortest_remaining_length(&self, v: usize) -> f64 {
        self.remaining[v]
    }

    /// All simple origin-destination paths, ordered by hop count and then
    /// lexicographically by edge identifier.
    pub fn enumerate_paths(&self, limit: usize) -> Result<PathSet> {
        let mut found: Vec<Vec<usize>> = Vec::new();
        let mut stack = Vec::new();
        self.walk(self.origin, &mut stack, &mut found, limit)?;
        found.sort_by(|a, b| {
            a.len().cmp(&b.len()).then_with(|| {
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| natural_cmp(&self.edges[x].id, &self.edges[y].id))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
        });
        let paths = found
            .into_iter()
            .enumerate()
            .map(|(i, edges)| Path {
                id: format!("p{}", i + 1),
                edges,
            })
            .collect();
        Ok(PathSet::new(self, paths))
    }

    fn walk(
        &self,
        v: usize,
        stack: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> Result<()> {
        if v == self.destination {
            if found.len() >= limit {
                return Err(Error::TooManyPaths(limit));
            }
            found.push(stack.clone());
            return Ok(());
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail == v {
                stack.push(i);
                self.walk(e.head, stack, found, limit)?;
                stack.pop();
            }
        }
        Ok(())
    }
}

/// Kahn's algorithm; on failure returns a vertex lying on a cycle.
fn topological_order(n: usize, edges: &[Edge]) -> std::result::Result<Vec<usize>, usize> {
    let mut indegree = vec![0usize; n];
    for e in edges {
        indegree[e.head] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for e in edges.iter().filter(|e| e.tail == v) {
            indegree[e.head] -= 1;
            if indegree[e.head] == 0 {
                ready.push(e.head);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).find(|&v| indegree[v] > 0).unwrap_or(0))
    }
}

fn reachable<F, I>(n: usize, start: usize, next: F) -> Vec<bool>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for w in next(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Compares identifiers so that `e2 < e10`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let split = |s: &str| {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (stem, num) = s.split_at(s.len() - digits);
        (stem.to_string(), num.parse::<u64>().ok())
    };
    let (sa, na) = split(a);
    let (sb, nb) = split(b);
    sa.cmp(&sb).then(na.cmp(&nb)).then_with(|| a.cmp(b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub id: String,
    /// Edge indices from the origin to the destination.
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PathSet {
    paths: Vec<Path>,
    /// `incidence[e][p]`.
    incidence: Vec<Vec<bool>>,
    pairs: PairIndex,
    edge_ids: Vec<String>,
}

impl PathSet {
    fn new(network: &Network, paths: Vec<Path>) -> Self {
        let mut incidence = vec![vec![false; paths.len()]; network.edges.len()];
        for (p, path) in paths.iter().enumerate() {
            for &e in &path.edges {
                incidence[e][p] = true;
            }
        }
        let pairs = PairIndex::new(network, &paths);
        Self {
            paths,
            incidence,
            pairs,
            edge_ids: network.edges.iter().map(|e| e.id.clone()).collect(),
        }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path(&self, p: usize) -> &Path {
        &self.paths[p]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path_index(&self, id: &str) -> Option<usize> {
        self.paths.iter().position(|p| p.id == id)
    }

    pub fn incidence(&self, e: usize, p: usize) -> bool {
        self.incidence[e][p]
    }

    /// Number of (edge, path) pairs with the edge on the path.
    pub fn xi(&self) -> usize {
        self.incidence
            .iter()
            .map(|row| row.iter().filter(|&&a| a).count())
            .sum()
    }

    pub fn pairs(&self) -> &PairIndex {
        &self.pairs
    }

    fn position(&self, p: usize, e: usize) -> Result<usize> {
        self.paths[p]
            .edges
            .iter()
            .position(|&x| x == e)
            .ok_or_else(|| Error::EdgeNotOnPath {
                edge: self.edge_ids[e].clone(),
                path: self.paths[p].id.clone(),
            })
    }

    pub fn prec_edge(&self, p: usize, e: usize) -> Result<Option<usize>> {
        let pos = self.position(p, e)?;
        Ok(pos.checked_sub(1).map(|q| self.paths[p].edges[q]))
    }

    pub fn succ_edge(&self, p: usize, e: usize) -> Result<Option<usize>> {
        let pos = self.position(p, e)?;
        Ok(self.paths[p].edges.get(pos + 1).copied())
    }

    pub fn last_edge(&self, p: usize) -> usize {
        *self.paths[p].edges.last().expect("paths are non-empty")
    }
}

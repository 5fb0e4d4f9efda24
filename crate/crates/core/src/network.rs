//! Communication topologies, Metropolis consensus matrices and their spectra.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Redraws attempted by [`random_geometric_graph`] before giving up.
pub const CONNECTIVITY_RETRY_CAP: usize = 100;

/// Undirected, simple, connected graph on `node_count` nodes.
///
/// Self-loops are implicit at every node and never stored in `edges`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds and validates a topology. Pairs are normalized to `(min, max)`;
    /// duplicates (in either orientation) and self-edges are rejected.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidTopology("node count must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a}, {b}) references a node >= {node_count}"
                )));
            }
            if a == b {
                return Err(Error::InvalidTopology(format!("explicit self-edge at node {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidTopology(format!("duplicate edge ({a}, {b})")));
            }
        }
        let topo = Self::from_set_unchecked(node_count, set);
        if !topo.is_connected() {
            return Err(Error::InvalidTopology("graph is not connected".into()));
        }
        Ok(topo)
    }

    fn from_set_unchecked(node_count: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); node_count];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { node_count, edges, neighbors }
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        let edges = (0..node_count).flat_map(|i| (i + 1..node_count).map(move |j| (i, j)));
        Self::new(node_count, edges)
    }

    pub fn path(node_count: usize) -> Result<Self> {
        Self::new(node_count, (1..node_count).map(|i| (i - 1, i)))
    }

    pub fn ring(node_count: usize) -> Result<Self> {
        if node_count < 3 {
            return Self::path(node_count);
        }
        Self::new(node_count, (0..node_count).map(|i| (i, (i + 1) % node_count)))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// Neighbors of `i`, excluding `i` itself, in ascending order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// `sum_i deg_i`, the number of directed edges.
    pub fn directed_edge_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Longest shortest path (0 for a single node).
    pub fn diameter(&self) -> usize {
        (0..self.node_count)
            .map(|s| self.bfs_distances(s).into_iter().map(|d| d.unwrap_or(usize::MAX)).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Edge-list text: first line `N`, then one `i j` pair per line, 0-indexed.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidTopology("empty edge list".into()))?;
        let node_count: usize = header
            .parse()
            .map_err(|_| Error::InvalidTopology(format!("line 1: expected node count, got {header:?}")))?;
        let mut edges = Vec::new();
        for (no, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidTopology(format!("line {no}: bad node index {s:?}")))
            };
            match parts.as_slice() {
                [a, b] => edges.push((parse(a)?, parse(b)?)),
                _ => {
                    return Err(Error::InvalidTopology(format!(
                        "line {no}: expected two node indices, got {line:?}"
                    )))
                }
            }
        }
        Self::new(node_count, edges)
    }
}

/// Connectivity radius used by the logistic and quadratic recipes,
/// `sqrt(ln(N) / N)`, or 1 for a single node (which has no pairs to link).
pub fn default_radius(node_count: usize) -> f64 {
    if node_count <= 1 {
        return 1.0;
    }
    let n = node_count as f64;
    (n.ln() / n).sqrt()
}

/// Places `n_nodes` points uniformly in the unit square and links pairs at
/// Euclidean distance `<= radius`. Disconnected draws are discarded and
/// redrawn from the same seeded stream, up to [`CONNECTIVITY_RETRY_CAP`]
/// attempts.
pub fn random_geometric_graph(n_nodes: usize, radius: f64, rng_seed: u64) -> Result<Topology> {
    if n_nodes == 0 {
        return Err(Error::InvalidParameter("n_nodes must be >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius}")));
    }
    let mut rng = stream_rng(rng_seed, Stream::Topology);
    for _ in 0..CONNECTIVITY_RETRY_CAP {
        let points: Vec<(f64, f64)> = (0..n_nodes).map(|_| (rng.random(), rng.random())).collect();
        let mut edges = BTreeSet::new();
        for i in 0..n_nodes {
            for j in i + 1..n_nodes {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                if (dx * dx + dy * dy).sqrt() <= radius {
                    edges.insert((i, j));
                }
            }
        }
        let topo = Topology::from_set_unchecked(n_nodes, edges);
        if topo.is_connected() {
            return Ok(topo);
        }
    }
    Err(Error::DisconnectedTopology {
        seed: rng_seed,
        radius,
        attempts: CONNECTIVITY_RETRY_CAP,
    })
}

/// Symmetric doubly stochastic weights that respect a topology.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusMatrix {
    weights: DMatrix<f64>,
    topology: Topology,
}

impl ConsensusMatrix {
    /// Validates every consensus-matrix invariant before accepting `weights`.
    pub fn new(weights: DMatrix<f64>, topology: Topology) -> Result<Self> {
        let n = topology.node_count();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::InvalidConsensusMatrix(format!(
                "expected {n}x{n}, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            let row_sum: f64 = weights.row(i).sum();
            let col_sum: f64 = weights.column(i).sum();
            if (row_sum - 1.0).abs() > 1e-12 || (col_sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConsensusMatrix(format!(
                    "row/column {i} sums to {row_sum}/{col_sum}"
                )));
            }
            if !(weights[(i, i)] > 0.0) {
                return Err(Error::InvalidConsensusMatrix(format!("w_{i}{i} must be positive")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if w != weights[(j, i)] {
                    return Err(Error::InvalidConsensusMatrix(format!("w_{i}{j} != w_{j}{i}")));
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidConsensusMatrix(format!("w_{i}{j} = {w} outside [0,1]")));
                }
                if i != j && (w > 0.0) != topology.has_edge(i, j) {
                    return Err(Error::InvalidConsensusMatrix(format!(
                        "sparsity of w_{i}{j} does not match the topology"
                    )));
                }
            }
        }
        Ok(Self { weights, topology })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn node_count(&self) -> usize {
        self.topology.node_count()
    }

    /// `max_i w_ii`.
    pub fn w_bar(&self) -> f64 {
        (0..self.node_count()).map(|i| self.weights[(i, i)]).fold(f64::MIN, f64::max)
    }
}

/// Metropolis rule: `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges and the
/// diagonal takes up the slack.
pub fn metropolis_weights(topology: &Topology) -> ConsensusMatrix {
    let n = topology.node_count();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in topology.edges() {
        let v = 1.0 / (1.0 + topology.degree(i).max(topology.degree(j)) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = topology.neighbors(i).iter().map(|&j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    ConsensusMatrix::new(w, topology.clone()).expect("Metropolis weights satisfy the consensus invariants")
}

/// Second-largest eigenvalue and largest diagonal entry of a consensus matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralInfo {
    pub lambda2: f64,
    pub w_bar: f64,
    /// Set for a single node, where `lambda2` is reported as 1 by convention
    /// and `1 - lambda2` must not be used as a divisor.
    pub degenerate: bool,
}

pub fn spectral_gap(matrix: &ConsensusMatrix) -> SpectralInfo {
    let w_bar = matrix.w_bar();
    if matrix.node_count() == 1 {
        return SpectralInfo { lambda2: 1.0, w_bar, degenerate: true };
    }
    let eig = SymmetricEigen::new(matrix.weights().clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    SpectralInfo { lambda2: values[1], w_bar, degenerate: false }
}

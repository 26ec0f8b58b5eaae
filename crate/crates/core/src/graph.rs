//! Communication topologies and the doubly stochastic mixing matrix built
//! from their Laplacian.
//!
//! Edge `(i, j, w)` means agent `i` sends to agent `j`. The adjacency matrix
//! stores it as `A[i][j] = w`, so `L = Δ − A` has zero row sums and the
//! mixing step of agent `j` reads column `j` of `P`.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};

/// Edge probability of the random topology.
pub const RANDOM_EDGE_PROBABILITY: f64 = 0.35;
const RANDOM_MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Path,
    Star,
    Cycle,
    Random,
    Cube,
    Complete,
}

impl TopologyKind {
    /// The six families of the formation benchmark, in plotting order.
    pub const ALL: [TopologyKind; 6] = [
        TopologyKind::Path,
        TopologyKind::Star,
        TopologyKind::Cycle,
        TopologyKind::Random,
        TopologyKind::Cube,
        TopologyKind::Complete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Path => "path",
            TopologyKind::Star => "star",
            TopologyKind::Cycle => "cycle",
            TopologyKind::Random => "random",
            TopologyKind::Cube => "cube",
            TopologyKind::Complete => "complete",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TopologyKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown topology '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    directed: bool,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<Edge>, directed: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one node"));
        }
        for e in &edges {
            if e.from >= n || e.to >= n {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::invalid(format!("self-loop at node {}", e.from)));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.from, e.to, e.weight
                )));
            }
        }
        Ok(Self { n, edges, directed })
    }

    pub fn undirected_unit(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges = pairs.iter().map(|&(from, to)| Edge { from, to, weight: 1.0 }).collect();
        Self::new(n, edges, false)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// `A[i][j] = w` for every arc `i → j`; undirected edges fill both slots.
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.from, e.to)] += e.weight;
            if !self.directed {
                a[(e.to, e.from)] += e.weight;
            }
        }
        a
    }

    /// Weighted degree of every node (row sums of the adjacency matrix).
    pub fn degrees(&self) -> Vec<f64> {
        let a = self.adjacency();
        (0..self.n).map(|i| a.row(i).iter().sum()).collect()
    }

    pub fn max_degree(&self) -> f64 {
        self.degrees().into_iter().fold(0.0, f64::max)
    }

    /// Every node's in-weight equals its out-weight.
    pub fn is_balanced(&self) -> bool {
        if !self.directed {
            return true;
        }
        let a = self.adjacency();
        (0..self.n).all(|i| {
            let out: f64 = a.row(i).iter().sum();
            let inw: f64 = (0..self.n).map(|j| a[(j, i)]).sum();
            (out - inw).abs() <= 1e-12 * out.abs().max(1.0)
        })
    }

    /// Read the edge-list format: a header `n m directed` followed by `i j w`.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::invalid("empty edge list"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::invalid(format!("bad edge-list header '{header}'")));
        }
        let n: usize = parse_field(fields[0], "node count")?;
        let m: usize = parse_field(fields[1], "edge count")?;
        let directed = match fields[2].to_ascii_lowercase().as_str() {
            "1" | "true" | "directed" => true,
            "0" | "false" | "undirected" => false,
            other => return Err(Error::invalid(format!("bad directed flag '{other}'"))),
        };
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::invalid(format!("bad edge line '{line}'")));
            }
            edges.push(Edge {
                from: parse_field(f[0], "edge source")?,
                to: parse_field(f[1], "edge target")?,
                weight: parse_field(f[2], "edge weight")?,
            });
        }
        if edges.len() != m {
            return Err(Error::invalid(format!(
                "header announces {m} edges, found {}",
                edges.len()
            )));
        }
        Self::new(n, edges, directed)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.edges.len(), u8::from(self.directed));
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.from, e.to, e.weight));
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }
}

fn parse_field<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("cannot parse {what} from '{s}'")))
}

pub fn build_topology(kind: TopologyKind, n: usize, seed: u64) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::invalid(format!("topology needs n >= 2, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = match kind {
        TopologyKind::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        TopologyKind::Star => (1..n).map(|i| (0, i)).collect(),
        TopologyKind::Cycle => {
            if n < 3 {
                return Err(Error::invalid("cycle needs n >= 3"));
            }
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        TopologyKind::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        TopologyKind::Cube => {
            if !n.is_power_of_two() {
                return Err(Error::invalid(format!(
                    "cube topology needs a power-of-two node count, got {n}"
                )));
            }
            (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| (i ^ j).count_ones() == 1)
                .collect()
        }
        TopologyKind::Random => return random_connected(n, seed),
    };
    WeightedGraph::undirected_unit(n, &pairs)
}

fn random_connected(n: usize, seed: u64) -> Result<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_MAX_RESAMPLES {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < RANDOM_EDGE_PROBABILITY)
            .collect();
        let g = WeightedGraph::undirected_unit(n, &pairs)?;
        if is_strongly_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::Structural(format!(
        "no connected random graph on {n} nodes after {RANDOM_MAX_RESAMPLES} draws"
    )))
}

pub fn laplacian(g: &WeightedGraph) -> Matrix {
    let a = g.adjacency();
    let mut l = Matrix::zeros(g.n(), g.n());
    for i in 0..g.n() {
        let d: f64 = a.row(i).iter().sum();
        for j in 0..g.n() {
            l[(i, j)] = -a[(i, j)];
        }
        l[(i, i)] = d;
    }
    l
}

pub fn is_strongly_connected(g: &WeightedGraph) -> bool {
    let n = g.n();
    let mut fwd = vec![Vec::new(); n];
    let mut rev = vec![Vec::new(); n];
    for e in g.edges() {
        fwd[e.from].push(e.to);
        rev[e.to].push(e.from);
        if !g.is_directed() {
            fwd[e.to].push(e.from);
            rev[e.from].push(e.to);
        }
    }
    reaches_all(&fwd) && reaches_all(&rev)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    /// `d_max + 1` for balanced graphs, `max_i v_i d_i + 1` otherwise.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone)]
pub struct ConsensusMatrix {
    p: Matrix,
    epsilon: f64,
    sigma2: f64,
}

impl ConsensusMatrix {
    /// Takes the matrix as given after checking it is doubly stochastic.
    pub fn from_matrix(p: Matrix, epsilon: f64) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::invalid("consensus matrix must be square"));
        }
        let n = p.rows();
        for i in 0..n {
            let row: f64 = p.row(i).iter().sum();
            let col: f64 = (0..n).map(|j| p[(j, i)]).sum();
            if (row - 1.0).abs() > 1e-10 || (col - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(format!("row/column {i} of P sums to {row}/{col}")));
            }
            if p.row(i).iter().any(|&x| x < -1e-12) {
                return Err(Error::invalid("P has negative entries"));
            }
        }
        let sigma2 = second_singular_value(&p)?;
        Ok(Self { p, epsilon, sigma2 })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Weight with which agent `to` mixes the value received from `from`.
    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.p[(from, to)]
    }
}

fn second_singular_value(p: &Matrix) -> Result<f64> {
    if p.rows() < 2 {
        return Ok(0.0);
    }
    Ok(numerics::singular_values(p)?[1])
}

/// Second-largest singular value of `P`.
pub fn sigma2(p: &ConsensusMatrix) -> f64 {
    p.sigma2
}

/// Positive left null vector of `L`, scaled so its largest entry is 1.
pub fn left_null_vector(l: &Matrix) -> Result<Vec<f64>> {
    let n = l.rows();
    // null vector of Lᵀ is the bottom eigenvector of L Lᵀ
    let e = numerics::sym_eigen(&l.transpose().gram())?;
    let mut v: Vec<f64> = (0..n).map(|i| e.vectors[(i, 0)]).collect();
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let vmax = v.iter().cloned().fold(f64::MIN, f64::max);
    v.iter_mut().for_each(|x| *x /= vmax);
    if let Some(i) = v.iter().position(|&x| x <= 1e-10) {
        return Err(Error::Structural(format!(
            "left null vector of L has non-positive component {} at node {i}",
            v[i]
        )));
    }
    Ok(v)
}

pub fn doubly_stochastic(g: &WeightedGraph, epsilon: Epsilon) -> Result<ConsensusMatrix> {
    if !is_strongly_connected(g) {
        return Err(Error::Structural("graph is not strongly connected".into()));
    }
    let n = g.n();
    let l = laplacian(g);
    let d = g.degrees();
    let v = if g.is_balanced() {
        vec![1.0; n]
    } else {
        left_null_vector(&l)?
    };
    let threshold = v.iter().zip(&d).map(|(vi, di)| vi * di).fold(0.0, f64::max);
    let eps = match epsilon {
        Epsilon::Auto => threshold + 1.0,
        Epsilon::Value(e) => {
            if !(e.is_finite() && e > threshold) {
                return Err(Error::invalid(format!("epsilon {e} must exceed {threshold}")));
            }
            e
        }
    };
    let mut p = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] -= v[i] * l[(i, j)] / eps;
        }
    }
    for i in 0..n {
        for j in 0..n {
            if p[(i, j)] < 0.0 && p[(i, j)] >= -1e-12 {
                p[(i, j)] = 0.0;
            }
        }
    }
    if !g.is_directed() {
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (p[(i, j)] + p[(j, i)]);
                p[(i, j)] = avg;
                p[(j, i)] = avg;
            }
        }
    }
    ConsensusMatrix::from_matrix(p, eps)
}

/// Second-smallest Laplacian eigenvalue of an undirected graph.
pub fn algebraic_connectivity(g: &WeightedGraph) -> Result<f64> {
    let ev = numerics::sym_eigenvalues(&laplacian(g))?;
    Ok(ev.get(1).copied().unwrap_or(0.0))
}

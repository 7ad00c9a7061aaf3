//! Complex-network graph models and fixed catalog graphs.
//!
//! Graphs are unweighted and undirected, stored as dense 0/1 adjacency
//! matrices: node counts stay small enough (n ≲ 1000) that the dense
//! linear algebra downstream dominates anyway. Three statistical families
//! are provided (Barabási-Albert, Erdős–Rényi, Watts-Strogatz) plus
//! deterministic catalog graphs (grids, complete, dual-rail, custom edge
//! lists). Every generator is a pure function of its parameters and a
//! 64-bit seed.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seed for a deterministic random stream. Identical seed and parameters
/// reproduce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Root RNG for this seed (stream 0).
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.0)
    }

    /// Independent substream `stream` of this seed. Substreams never
    /// overlap, so trials keyed by counter can run in any order or in
    /// parallel and still reproduce.
    pub fn stream_rng(self, stream: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

/// Undirected unweighted graph with symmetric 0/1 adjacency matrix and
/// zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: DMatrix<f64>,
}

impl Graph {
    /// Validates and wraps an adjacency matrix: square, symmetric, zero
    /// diagonal, entries exactly 0 or 1.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Format(format!(
                "adjacency must be square, got {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::Format("graph must have at least one node".into()));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Format(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let a = adjacency[(i, j)];
                if a != 0.0 && a != 1.0 {
                    return Err(Error::Format(format!(
                        "adjacency entry ({i},{j}) = {a}, expected 0 or 1"
                    )));
                }
                if a != adjacency[(j, i)] {
                    return Err(Error::Format(format!(
                        "adjacency not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Graph { n, adjacency })
    }

    fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = DMatrix::zeros(n, n);
        for &(i, j) in edges {
            debug_assert!(i != j && i < n && j < n);
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
        Graph { n, adjacency }
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adjacency: DMatrix::zeros(n, n),
        }
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let adjacency = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        Graph { n, adjacency }
    }

    /// Rectangular lattice, row-major node numbering: node `r*cols + c`
    /// connects to its horizontal and vertical lattice neighbours.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Param("grid dimensions must be positive".into()));
        }
        let n = rows * cols;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Ok(Graph::from_edges(n, &edges))
    }

    /// Ladder graph on `n` nodes (n even): two rails of n/2 nodes each,
    /// numbered 0..n/2 and n/2..n, with rungs between opposite positions.
    pub fn dual_rail(n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Param(format!(
                "dual-rail needs an even node count >= 4, got {n}"
            )));
        }
        Graph::grid(2, n / 2)
    }

    /// Cycle on `n >= 3` nodes.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Param(format!("cycle needs n >= 3, got {n}")));
        }
        let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        edges.push((n - 1, 0));
        Ok(Graph::from_edges(n, &edges))
    }

    /// Path on `n >= 1` nodes.
    pub fn path(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Param("path needs n >= 1".into()));
        }
        let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        Ok(Graph::from_edges(n, &edges))
    }

    /// Star with center 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Param("star needs n >= 1".into()));
        }
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Ok(Graph::from_edges(n, &edges))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The 0/1 adjacency matrix V.
    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] != 0.0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row(i).iter().filter(|&&a| a != 0.0).count()
    }

    pub fn edge_count(&self) -> usize {
        let nonzero = self.adjacency.iter().filter(|&&a| a != 0.0).count();
        nonzero / 2
    }

    /// Edges as ordered pairs (i, j) with i < j.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Relabels nodes: node `perm[i]` of the result is node `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Dimension(format!(
                "permutation length {} != node count {}",
                perm.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::Param("not a permutation".into()));
            }
            seen[p] = true;
        }
        let adjacency = DMatrix::from_fn(self.n, self.n, |i, j| {
            self.adjacency[(inverse_position(perm, i), inverse_position(perm, j))]
        });
        Ok(Graph {
            n: self.n,
            adjacency,
        })
    }

    /// Reorders nodes so that the nodes listed in `order` become 0, 1, ...
    /// `order` must enumerate every node exactly once.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n {
            return Err(Error::Dimension(format!(
                "order length {} != node count {}",
                order.len(),
                self.n
            )));
        }
        let mut seen = vec![false; self.n];
        for &p in order {
            if p >= self.n || seen[p] {
                return Err(Error::Param("order is not a permutation".into()));
            }
            seen[p] = true;
        }
        let adjacency =
            DMatrix::from_fn(self.n, self.n, |i, j| self.adjacency[(order[i], order[j])]);
        Ok(Graph {
            n: self.n,
            adjacency,
        })
    }

    pub fn degree_stats(&self) -> DegreeStats {
        degree_stats(self)
    }

    /// Parses the edge-list text format: a header line `nodes N` followed
    /// by one line `i j` per edge (0-based).
    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::Format("empty edge list".into()))?;
        let n: usize = header
            .strip_prefix("nodes")
            .map(str::trim)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("line {ln}: expected header `nodes N`")))?;
        if n == 0 {
            return Err(Error::Format("node count must be positive".into()));
        }
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format(format!("line {ln}: expected `i j`")))
            };
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Format(format!("line {ln}: trailing tokens")));
            }
            if i >= n || j >= n {
                return Err(Error::Format(format!(
                    "line {ln}: node index out of range (n = {n})"
                )));
            }
            if i == j {
                return Err(Error::Format(format!("line {ln}: self-loop at node {i}")));
            }
            edges.push((i, j));
        }
        Ok(Graph::from_edges(n, &edges))
    }

    /// Serializes to the edge-list text format parsed by
    /// [`Graph::from_edge_list_str`].
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("nodes {}\n", self.n);
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

fn inverse_position(perm: &[usize], target: usize) -> usize {
    perm.iter().position(|&p| p == target).unwrap()
}

/// Per-node degrees with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub degrees: Vec<usize>,
    pub mean_degree: f64,
    pub max_degree: usize,
}

/// Exact per-node degree counts, mean 2·|E|/n and maximum.
pub fn degree_stats(g: &Graph) -> DegreeStats {
    let degrees: Vec<usize> = (0..g.n()).map(|i| g.degree(i)).collect();
    let total: usize = degrees.iter().sum();
    DegreeStats {
        mean_degree: total as f64 / g.n() as f64,
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        degrees,
    }
}

/// Barabási-Albert preferential-attachment graph.
///
/// Starts from a complete graph on `m` nodes; each of the remaining
/// `n - m` nodes attaches `m` edges to distinct existing nodes, chosen
/// with probability proportional to current degree + 1 (the +1 keeps the
/// seed step well defined when all degrees are zero). Edge count is
/// deterministic: m(n-m) + m(m-1)/2.
pub fn gen_barabasi_albert(n: usize, m: usize, seed: RngSeed) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Param("node count must be positive".into()));
    }
    if m < 1 || m > n - 1 {
        return Err(Error::Param(format!(
            "attachment parameter m = {m} outside 1..={}",
            n - 1
        )));
    }
    let mut rng = seed.rng();
    let mut adjacency = DMatrix::zeros(n, n);
    let mut degrees = vec![0usize; n];
    let add_edge = |adj: &mut DMatrix<f64>, deg: &mut [usize], i: usize, j: usize| {
        adj[(i, j)] = 1.0;
        adj[(j, i)] = 1.0;
        deg[i] += 1;
        deg[j] += 1;
    };
    for i in 0..m {
        for j in i + 1..m {
            add_edge(&mut adjacency, &mut degrees, i, j);
        }
    }
    for v in m..n {
        // Weighted sampling without replacement over the existing nodes.
        let mut weights: Vec<f64> = degrees[..v].iter().map(|&d| (d + 1) as f64).collect();
        let mut total: f64 = weights.iter().sum();
        let mut picked = Vec::with_capacity(m);
        for _ in 0..m {
            let mut t = rng.random::<f64>() * total;
            let mut chosen = v - 1;
            for (u, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    t -= w;
                    if t <= 0.0 {
                        chosen = u;
                        break;
                    }
                }
            }
            picked.push(chosen);
            total -= weights[chosen];
            weights[chosen] = 0.0;
        }
        for &u in &picked {
            add_edge(&mut adjacency, &mut degrees, u, v);
        }
    }
    Ok(Graph { n, adjacency })
}

/// Erdős–Rényi G(n, p): each unordered pair connected independently with
/// probability `p`.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: RngSeed) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Param("node count must be positive".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!("edge probability p = {p} outside [0, 1]")));
    }
    let mut rng = seed.rng();
    let mut adjacency = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            // random::<f64>() is in [0, 1), so p = 1 always connects.
            if rng.random::<f64>() < p {
                adjacency[(i, j)] = 1.0;
                adjacency[(j, i)] = 1.0;
            }
        }
    }
    Ok(Graph { n, adjacency })
}

/// Watts-Strogatz small-world graph.
///
/// Builds the ring lattice where every node connects to its `k` nearest
/// neighbours (`k` even), then walks the edges in canonical ring order
/// (offset 1..k/2, node 0..n) rewiring the far endpoint of each edge with
/// probability `p` to a uniformly chosen non-neighbour. Self-loops and
/// duplicate edges are excluded, so the edge count n·k/2 is preserved for
/// every seed and p.
pub fn gen_watts_strogatz(n: usize, k: usize, p: f64, seed: RngSeed) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Param("node count must be positive".into()));
    }
    if k % 2 != 0 || k < 2 || k > n.saturating_sub(2) {
        return Err(Error::Param(format!(
            "ring degree k = {k} must be even and within 2..={}",
            n.saturating_sub(2)
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Param(format!(
            "rewiring probability p = {p} outside [0, 1]"
        )));
    }
    let mut rng = seed.rng();
    let mut adjacency: DMatrix<f64> = DMatrix::zeros(n, n);
    for offset in 1..=k / 2 {
        for i in 0..n {
            let j = (i + offset) % n;
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
    }
    for offset in 1..=k / 2 {
        for i in 0..n {
            let j = (i + offset) % n;
            if rng.random::<f64>() >= p {
                continue;
            }
            let candidates: Vec<usize> = (0..n)
                .filter(|&w| w != i && adjacency[(i, w)] == 0.0)
                .collect();
            if candidates.is_empty() {
                continue; // node saturated, keep the edge
            }
            let w = candidates[rng.random_range(0..candidates.len())];
            adjacency[(i, j)] = 0.0;
            adjacency[(j, i)] = 0.0;
            adjacency[(i, w)] = 1.0;
            adjacency[(w, i)] = 1.0;
        }
    }
    Ok(Graph { n, adjacency })
}

/// Named catalog graph, parsed from specs like `grid(2,3)`, `complete(6)`,
/// `dual_rail(8)`, `cycle(6)`, `path(4)`, `star(5)`.
pub fn catalog_graph(name: &str) -> Result<Graph> {
    let spec = name.trim();
    let (kind, args) = match spec.find('(') {
        Some(open) if spec.ends_with(')') => {
            (&spec[..open], &spec[open + 1..spec.len() - 1])
        }
        _ => {
            return Err(Error::Format(format!(
                "unknown catalog graph `{spec}`, expected name(args)"
            )))
        }
    };
    let nums: Vec<usize> = args
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad catalog argument `{t}` in `{spec}`")))
        })
        .collect::<Result<_>>()?;
    let want = |count: usize| -> Result<()> {
        if nums.len() == count {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "`{kind}` takes {count} argument(s), got {}",
                nums.len()
            )))
        }
    };
    match kind {
        "grid" => {
            want(2)?;
            Graph::grid(nums[0], nums[1])
        }
        "complete" => {
            want(1)?;
            Ok(Graph::complete(nums[0]))
        }
        "dual_rail" => {
            want(1)?;
            Graph::dual_rail(nums[0])
        }
        "cycle" => {
            want(1)?;
            Graph::cycle(nums[0])
        }
        "path" => {
            want(1)?;
            Graph::path(nums[0])
        }
        "star" => {
            want(1)?;
            Graph::star(nums[0])
        }
        other => Err(Error::Format(format!("unknown catalog graph `{other}`"))),
    }
}

//! Undirected simple connected graphs: construction, generators, BFS
//! distances, balls, diameter and exhaustive vertex expansion.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

/// Largest graph for which exhaustive subset enumeration is attempted.
pub const EXHAUSTIVE_LIMIT: usize = 24;

/// Immutable, connected, simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    /// `edge_ids[v][i]` is the id of the edge `{v, adjacency[v][i]}`.
    edge_ids: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates an edge list. Edges are stored canonically as `(min, max)`
    /// in input order.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { index: v, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let id = canonical.len();
            let e = (a.min(b), a.max(b));
            canonical.push(e);
            adjacency[e.0].push((e.1, id));
            adjacency[e.1].push((e.0, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        for (v, list) in adjacency.iter().enumerate() {
            if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::DuplicateEdge(v.min(w[0].0), v.max(w[0].0)));
            }
        }
        let graph = Self {
            edge_ids: adjacency
                .iter()
                .map(|l| l.iter().map(|&(_, id)| id).collect())
                .collect(),
            adjacency: adjacency
                .into_iter()
                .map(|l| l.into_iter().map(|(u, _)| u).collect())
                .collect(),
            edges: canonical,
        };
        if let Some(v) = graph.first_unreachable() {
            return Err(Error::Disconnected(v));
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbour list of `v`.
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Edge ids aligned with [`Graph::neighbours`].
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.edge_ids[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.min_degree();
        (d == self.max_degree()).then_some(d)
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        let list = self.adjacency.get(u)?;
        list.binary_search(&v).ok().map(|i| self.edge_ids[u][i])
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_id(u, v).is_some()
    }

    /// Adjacency rows as bitmasks; requires `n <= 64`.
    pub fn adjacency_masks(&self) -> Result<Vec<u64>> {
        if self.n() > 64 {
            return Err(Error::SizeGuard {
                what: "bitmask adjacency",
                limit: 64,
                actual: self.n(),
            });
        }
        Ok(self
            .adjacency
            .iter()
            .map(|l| l.iter().fold(0u64, |m, &u| m | 1 << u))
            .collect())
    }

    fn first_unreachable(&self) -> Option<usize> {
        let dist = self.bfs(std::iter::once(0));
        dist.iter().position(|d| d.is_none())
    }

    fn bfs(&self, sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let next = dist[v].map(|d| d + 1);
            for &u in &self.adjacency[v] {
                if dist[u].is_none() {
                    dist[u] = next;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Multi-source BFS distance `dist(v, U)` for every vertex.
    pub fn distances_from(&self, sources: &VertexSet) -> Result<Vec<usize>> {
        self.check_universe(sources)?;
        if sources.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(self
            .bfs(sources.iter())
            .into_iter()
            .map(|d| d.expect("connected graph"))
            .collect())
    }

    pub fn distances_from_vertex(&self, v: usize) -> Vec<usize> {
        self.bfs(std::iter::once(v))
            .into_iter()
            .map(|d| d.expect("connected graph"))
            .collect()
    }

    /// `B_k(U) = {v : dist(v, U) <= k}`.
    pub fn ball(&self, centre: &VertexSet, k: usize) -> Result<VertexSet> {
        let dist = self.distances_from(centre)?;
        let mut out = VertexSet::empty(self.n());
        for (v, &d) in dist.iter().enumerate() {
            if d <= k {
                out.insert(v);
            }
        }
        Ok(out)
    }

    /// Outer vertex boundary `Γ(S) \ S`.
    pub fn outer_boundary(&self, set: &VertexSet) -> VertexSet {
        let mut out = VertexSet::empty(self.n());
        for v in set.iter() {
            for &u in &self.adjacency[v] {
                if !set.contains(u) {
                    out.insert(u);
                }
            }
        }
        out
    }

    /// Number of edges between `S` and its complement.
    pub fn edge_boundary(&self, set: &VertexSet) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| set.contains(a) != set.contains(b))
            .count()
    }

    /// Whether the vertices split into two classes with every edge between them.
    pub fn is_bipartite(&self) -> bool {
        let dist = self.distances_from_vertex(0);
        self.edges.iter().all(|&(a, b)| dist[a] % 2 != dist[b] % 2)
    }

    /// Diameter together with the lexicographically smallest diametral pair `(u, v)`, `u < v`.
    pub fn diameter(&self) -> (usize, (usize, usize)) {
        let mut best = (0, (0, 0));
        for u in 0..self.n() {
            let dist = self.distances_from_vertex(u);
            for (v, &d) in dist.iter().enumerate().skip(u + 1) {
                if d > best.0 {
                    best = (d, (u, v));
                }
            }
        }
        best
    }

    /// Minimum of `|Γ(S) \ S| / |S|` over non-empty `S` with `|S| <= n/2`.
    pub fn vertex_expansion_exact(&self) -> Result<Expansion> {
        let n = self.n();
        if n > EXHAUSTIVE_LIMIT {
            return Err(Error::SizeGuard {
                what: "exhaustive vertex expansion",
                limit: EXHAUSTIVE_LIMIT,
                actual: n,
            });
        }
        if n < 2 {
            return Err(Error::InvalidParameter(
                "vertex expansion needs at least two vertices".into(),
            ));
        }
        let adj = self.adjacency_masks()?;
        let low_bits = n / 2;
        let high_bits = n - low_bits;
        let neighbourhood_table = |offset: usize, bits: usize| -> Vec<u64> {
            let mut table = vec![0u64; 1 << bits];
            for mask in 1usize..1 << bits {
                let low = mask.trailing_zeros() as usize;
                table[mask] = table[mask & (mask - 1)] | adj[offset + low];
            }
            table
        };
        let low_table = neighbourhood_table(0, low_bits);
        let high_table = neighbourhood_table(low_bits, high_bits);
        let max_size = n / 2;
        let low_mask = (1u64 << low_bits) - 1;

        let best = (0u64..1 << high_bits)
            .into_par_iter()
            .map(|high| {
                let mut best: Option<(usize, usize, u64)> = None;
                let high_nbrs = high_table[high as usize];
                for low in 0..=low_mask {
                    let mask = high << low_bits | low;
                    let size = mask.count_ones() as usize;
                    if size == 0 || size > max_size {
                        continue;
                    }
                    let boundary = ((low_table[low as usize] | high_nbrs) & !mask).count_ones() as usize;
                    if better_ratio((boundary, size, mask), best) {
                        best = Some((boundary, size, mask));
                    }
                }
                best
            })
            .reduce(
                || None,
                |a, b| match (a, b) {
                    (Some(x), y) if !better_ratio_opt(y, x) => Some(x),
                    (_, y) => y,
                },
            )
            .expect("n >= 2 has a set of size 1");
        Ok(Expansion {
            value: best.0 as f64 / best.1 as f64,
            boundary: best.0,
            size: best.1,
            argmin: VertexSet::from_mask(n, best.2)?,
        })
    }

    /// `|B_k(S)| >= min{(1+ψ)^k |S|, n/2}`.
    pub fn ball_growth_audit(&self, set: &VertexSet, k: usize, psi: f64) -> Result<bool> {
        let ball = self.ball(set, k)?;
        let rhs = ((1.0 + psi).powi(k as i32) * set.len() as f64).min(self.n() as f64 / 2.0);
        Ok(ball.len() as f64 >= rhs - 1e-9)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.m());
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    fn check_universe(&self, set: &VertexSet) -> Result<()> {
        if set.universe() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: set.universe(),
            });
        }
        Ok(())
    }
}

fn better_ratio(candidate: (usize, usize, u64), current: Option<(usize, usize, u64)>) -> bool {
    better_ratio_opt(Some(candidate), current.unwrap_or((usize::MAX, 1, u64::MAX)))
}

/// Strictly smaller ratio, ties broken by smaller mask.
fn better_ratio_opt(candidate: Option<(usize, usize, u64)>, current: (usize, usize, u64)) -> bool {
    let Some((b, s, m)) = candidate else {
        return false;
    };
    let lhs = b as u128 * current.1 as u128;
    let rhs = current.0 as u128 * s as u128;
    lhs < rhs || (lhs == rhs && m < current.2)
}

/// Result of the exhaustive vertex expansion search.
#[derive(Clone, Debug, Serialize)]
pub struct Expansion {
    pub value: f64,
    pub boundary: usize,
    pub size: usize,
    pub argmin: VertexSet,
}

/// Named graph families.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Cycle {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Hypercube {
        dim: usize,
    },
    /// `i ~ i ± s (mod n)` for each offset `s`.
    Circulant {
        n: usize,
        offsets: Vec<usize>,
    },
    RandomRegular {
        n: usize,
        d: usize,
    },
}

impl GraphKind {
    /// Parses `cycle:6`, `complete:4`, `hypercube:3`, `circulant:8:1,2` or `random_regular:16:3`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut parts = spec.split(':');
        let kind = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("`{spec}`: missing argument {}", i + 1)))?
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("`{spec}`: argument {} is not an integer", i + 1)))
        };
        let expect_args = |k: usize| -> Result<()> {
            if args.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "`{spec}`: expected {k} argument(s), got {}",
                    args.len()
                )))
            }
        };
        match kind {
            "cycle" => expect_args(1).and(Ok(Self::Cycle { n: num(0)? })),
            "complete" => expect_args(1).and(Ok(Self::Complete { n: num(0)? })),
            "hypercube" => expect_args(1).and(Ok(Self::Hypercube { dim: num(0)? })),
            "random_regular" | "random-regular" => {
                expect_args(2).and(Ok(Self::RandomRegular { n: num(0)?, d: num(1)? }))
            }
            "circulant" => {
                expect_args(2)?;
                let offsets = args[1]
                    .split(',')
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::InvalidParameter(format!("`{spec}`: bad circulant offset `{s}`")))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                Ok(Self::Circulant { n: num(0)?, offsets })
            }
            other => Err(Error::InvalidParameter(format!("unknown graph family `{other}`"))),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::RandomRegular { .. })
    }
}

const MAX_CONFIGURATION_ATTEMPTS: usize = 1_000_000;

/// Builds a graph of the requested family. Only `RandomRegular` consumes the seed.
pub fn generate(kind: &GraphKind, seed: u64) -> Result<Graph> {
    match *kind {
        GraphKind::Cycle { n } => {
            if n < 3 {
                return Err(Error::InvalidParameter(format!("cycle needs n >= 3, got {n}")));
            }
            Graph::new(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
        }
        GraphKind::Complete { n } => {
            if n < 2 {
                return Err(Error::InvalidParameter(format!("complete graph needs n >= 2, got {n}")));
            }
            let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            Graph::new(n, &edges)
        }
        GraphKind::Hypercube { dim } => {
            if dim == 0 || dim > 20 {
                return Err(Error::InvalidParameter(format!(
                    "hypercube dimension must be in 1..=20, got {dim}"
                )));
            }
            let n = 1usize << dim;
            let edges: Vec<_> = (0..n)
                .flat_map(|v| (0..dim).map(move |b| (v, v ^ 1 << b)))
                .filter(|&(a, b)| a < b)
                .collect();
            Graph::new(n, &edges)
        }
        GraphKind::Circulant { n, ref offsets } => {
            if n < 3 || offsets.is_empty() {
                return Err(Error::InvalidParameter("circulant needs n >= 3 and an offset".into()));
            }
            let mut edges = Vec::new();
            for &s in offsets {
                if s == 0 || s > n / 2 {
                    return Err(Error::InvalidParameter(format!(
                        "circulant offset {s} outside 1..={}",
                        n / 2
                    )));
                }
                for i in 0..n {
                    let j = (i + s) % n;
                    edges.push((i.min(j), i.max(j)));
                }
            }
            edges.sort_unstable();
            edges.dedup();
            Graph::new(n, &edges)
        }
        GraphKind::RandomRegular { n, d } => random_regular(n, d, seed),
    }
}

/// Configuration model with full resampling until simple and connected.
fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || d >= n || (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "no connected simple {d}-regular graph on {n} vertices can be sampled (need 1 <= d < n, nd even)"
        )));
    }
    if d == 1 && n != 2 {
        return Err(Error::InvalidParameter(
            "a connected 1-regular graph has exactly 2 vertices".into(),
        ));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..MAX_CONFIGURATION_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut seen = vec![Vec::with_capacity(d); n];
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in points.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || seen[a].contains(&b) {
                continue 'attempt;
            }
            seen[a].push(b);
            seen[b].push(a);
            edges.push((a.min(b), a.max(b)));
        }
        match Graph::new(n, &edges) {
            Ok(g) => return Ok(g),
            Err(Error::Disconnected(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidParameter(format!(
        "configuration model did not produce a simple connected {d}-regular graph on {n} vertices"
    )))
}

/// Parses the `n m` / `u v` edge-list format; `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing `n m` header".into(),
    })?;
    let (n, m) = parse_pair(header_line, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, content) in lines {
        let (a, b) = parse_pair(line, content)?;
        if a >= n || b >= n {
            return Err(Error::Parse {
                line,
                message: format!("vertex index out of range for n = {n}"),
            });
        }
        edges.push((a, b));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: header_line,
            message: format!("header declares {m} edges but {} were listed", edges.len()),
        });
    }
    Graph::new(n, &edges)
}

fn parse_pair(line: usize, content: &str) -> Result<(usize, usize)> {
    let fields: Vec<&str> = content.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line,
            message: format!("expected two integers, found `{content}`"),
        });
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("`{s}` is not a non-negative integer"),
        })
    };
    Ok((parse(fields[0])?, parse(fields[1])?))
}

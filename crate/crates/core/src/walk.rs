//! Trajectory simulation for the simple, biased, time-biased and choice
//! random walks, bias-matrix extraction, the phase-halving cover strategy
//! and seeded Monte Carlo cover-time estimation.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::ReversibleChain;
use crate::error::{Error, Result};
use crate::graph::{Graph, EXHAUSTIVE_LIMIT};
use crate::vertex_set::VertexSet;
use crate::weighting::{target_decay_weighting, EdgeWeighting};

/// Tolerance for negative bias entries and the reconstruction identity.
pub const BIAS_TOL: f64 = 1e-12;
/// Expansion assumed by the phase strategy when it cannot be computed.
pub const DEFAULT_PSI: f64 = 0.1;
/// Largest `n` for which cover estimates rotate the start over all vertices.
pub const ROTATING_START_LIMIT: usize = 64;
/// Safety cap on a single cover run.
pub const MAX_COVER_STEPS: u64 = 1 << 36;

/// Position, elapsed steps, visited set and the RNG stream of one walk.
#[derive(Clone, Debug)]
pub struct WalkState {
    pub current: usize,
    pub steps: u64,
    pub visited: VertexSet,
    rng: SplitMix64,
}

impl WalkState {
    pub fn new(graph: &Graph, start: usize, seed: u64) -> Result<Self> {
        let mut visited = VertexSet::empty(graph.n());
        if start >= graph.n() {
            return Err(Error::VertexOutOfRange {
                index: start,
                n: graph.n(),
            });
        }
        visited.insert(start);
        Ok(Self {
            current: start,
            steps: 0,
            visited,
            rng: SplitMix64::seed_from_u64(seed),
        })
    }

    pub fn covered(&self) -> bool {
        self.visited.len() == self.visited.universe()
    }

    fn advance(&mut self, next: usize) {
        self.current = next;
        self.steps += 1;
        self.visited.insert(next);
    }
}

/// A controller: maps the walk history summary to a distribution over the
/// current vertex's neighbours, aligned with `graph.neighbours(current)`.
pub trait BiasPolicy: Sync {
    fn distribution(&self, graph: &Graph, state: &WalkState, out: &mut Vec<f64>);
}

/// The uniform distribution; the time-biased walk then coincides with SRW.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformPolicy;

impl BiasPolicy for UniformPolicy {
    fn distribution(&self, graph: &Graph, state: &WalkState, out: &mut Vec<f64>) {
        let d = graph.degree(state.current);
        out.clear();
        out.resize(d, 1.0 / d as f64);
    }
}

/// Point mass on the neighbour closest to a fixed target set (lowest id on ties).
#[derive(Clone, Debug)]
pub struct TowardTarget {
    dist: Vec<usize>,
}

impl TowardTarget {
    pub fn new(graph: &Graph, targets: &VertexSet) -> Result<Self> {
        Ok(Self {
            dist: graph.distances_from(targets)?,
        })
    }
}

fn point_mass(d: usize, at: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(d, 0.0);
    out[at] = 1.0;
}

fn argmin_first(values: impl Iterator<Item = usize>) -> usize {
    let mut best = (usize::MAX, 0);
    for (i, v) in values.enumerate() {
        if v < best.0 {
            best = (v, i);
        }
    }
    best.1
}

impl BiasPolicy for TowardTarget {
    fn distribution(&self, graph: &Graph, state: &WalkState, out: &mut Vec<f64>) {
        let nbrs = graph.neighbours(state.current);
        point_mass(nbrs.len(), argmin_first(nbrs.iter().map(|&y| self.dist[y])), out);
    }
}

/// Point mass on the first step of a shortest path to the nearest unvisited
/// vertex. On a path or cycle this pushes one end of the visited interval
/// until it is exhausted and then flips to the other end.
#[derive(Clone, Copy, Debug, Default)]
pub struct NearestUnvisited;

impl BiasPolicy for NearestUnvisited {
    fn distribution(&self, graph: &Graph, state: &WalkState, out: &mut Vec<f64>) {
        let nbrs = graph.neighbours(state.current);
        if state.covered() {
            return point_mass(nbrs.len(), 0, out);
        }
        // BFS from the current vertex, remembering which neighbour each
        // vertex was first reached through; neighbours are scanned in
        // ascending id order so ties favour the lowest id.
        let n = graph.n();
        let mut via = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        via[state.current] = 0;
        for (i, &y) in nbrs.iter().enumerate() {
            if via[y] == usize::MAX {
                via[y] = i;
                queue.push_back(y);
            }
        }
        while let Some(x) = queue.pop_front() {
            if !state.visited.contains(x) {
                return point_mass(nbrs.len(), via[x], out);
            }
            for &y in graph.neighbours(x) {
                if via[y] == usize::MAX {
                    via[y] = via[x];
                    queue.push_back(y);
                }
            }
        }
        point_mass(nbrs.len(), 0, out);
    }
}

/// State-independent bias `B`, one row per vertex aligned with its neighbours.
#[derive(Clone, Debug)]
pub struct StaticBias {
    rows: Vec<Vec<f64>>,
}

impl StaticBias {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Dense `n × n` form.
    pub fn to_dense(&self, graph: &Graph) -> Vec<f64> {
        let n = graph.n();
        let mut out = vec![0.0; n * n];
        for (x, row) in self.rows.iter().enumerate() {
            for (&y, &b) in graph.neighbours(x).iter().zip(row) {
                out[x * n + y] = b;
            }
        }
        out
    }

    pub fn min_entry(&self) -> f64 {
        self.rows.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

impl BiasPolicy for StaticBias {
    fn distribution(&self, _graph: &Graph, state: &WalkState, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.rows[state.current].iter().map(|&b| b.max(0.0)));
    }
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// One step of the ε-time-biased walk: a uniform neighbour with probability
/// `1 - ε`, otherwise a draw from the policy's distribution.
pub fn step<P: BiasPolicy + ?Sized>(
    graph: &Graph,
    state: &mut WalkState,
    eps: f64,
    policy: &P,
    buf: &mut Vec<f64>,
) -> usize {
    let nbrs = graph.neighbours(state.current);
    let next = if state.rng.random_bool(eps) {
        policy.distribution(graph, state, buf);
        nbrs[sample_index(buf, &mut state.rng)]
    } else {
        nbrs[state.rng.random_range(0..nbrs.len())]
    };
    state.advance(next);
    next
}

/// One step of the choice random walk: two independent uniform neighbours
/// are offered and the one the policy weights higher is taken (lower id on
/// ties).
pub fn crw_step<P: BiasPolicy + ?Sized>(graph: &Graph, state: &mut WalkState, policy: &P, buf: &mut Vec<f64>) -> usize {
    let nbrs = graph.neighbours(state.current);
    let i = state.rng.random_range(0..nbrs.len());
    let j = state.rng.random_range(0..nbrs.len());
    let pick = if i == j {
        i
    } else {
        policy.distribution(graph, state, buf);
        match buf[i].total_cmp(&buf[j]) {
            std::cmp::Ordering::Greater => i,
            std::cmp::Ordering::Less => j,
            std::cmp::Ordering::Equal => i.min(j),
        }
    };
    let next = nbrs[pick];
    state.advance(next);
    next
}

/// `B(u, v) = (q(u, v) - (1-ε)/d(u)) / ε` row by row, where `q(u, i)` is the
/// target transition probability to the `i`-th neighbour of `u`.
fn decompose_rows(graph: &Graph, eps: f64, q: impl Fn(usize, usize) -> f64) -> Result<StaticBias> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("ε must lie in [0, 1], got {eps}")));
    }
    let mut rows = Vec::with_capacity(graph.n());
    for u in 0..graph.n() {
        let d = graph.degree(u) as f64;
        let mut row = Vec::with_capacity(graph.degree(u));
        for i in 0..graph.degree(u) {
            let target = q(u, i);
            let b = if eps == 0.0 {
                if (target - 1.0 / d).abs() > BIAS_TOL {
                    return Err(Error::Precondition("ε = 0 admits only the simple random walk".into()));
                }
                1.0 / d
            } else {
                (target - (1.0 - eps) / d) / eps
            };
            if b < -BIAS_TOL {
                return Err(Error::NegativeBias {
                    row: u,
                    col: graph.neighbours(u)[i],
                    value: b,
                });
            }
            row.push(b);
        }
        rows.push(row);
    }
    Ok(StaticBias { rows })
}

fn require_min_degree_3(graph: &Graph) -> Result<()> {
    if graph.min_degree() < 3 {
        return Err(Error::Precondition(format!(
            "bias decomposition needs minimum degree >= 3, got {}",
            graph.min_degree()
        )));
    }
    Ok(())
}

/// Writes `Q = (1-ε)P + εB` with `P` the simple random walk on `graph`.
pub fn extract_bias_matrix(q: &ReversibleChain, graph: &Graph, eps: f64) -> Result<StaticBias> {
    if q.n() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            actual: q.n(),
        });
    }
    require_min_degree_3(graph)?;
    for u in 0..graph.n() {
        let off: f64 = (0..graph.n())
            .filter(|&v| !graph.has_edge(u, v))
            .map(|v| q.p(u, v).abs())
            .sum();
        if off > BIAS_TOL {
            return Err(Error::Precondition(format!(
                "Q puts mass {off:e} outside the neighbourhood of {u}"
            )));
        }
    }
    decompose_rows(graph, eps, |u, i| q.p(u, graph.neighbours(u)[i]))
}

/// As [`extract_bias_matrix`], reading `Q` straight from a weighting.
pub fn bias_from_weighting(graph: &Graph, w: &EdgeWeighting, eps: f64) -> Result<StaticBias> {
    require_min_degree_3(graph)?;
    decompose_rows(graph, eps, |u, i| w.weight(graph.incident_edges(u)[i]) / w.strength(u))
}

/// `max |(1-ε)P + εB - Q|` over all entries.
pub fn reconstruction_error(q: &ReversibleChain, graph: &Graph, eps: f64, b: &StaticBias) -> f64 {
    let n = graph.n();
    let dense = b.to_dense(graph);
    let mut worst = 0.0f64;
    for u in 0..n {
        let p = 1.0 / graph.degree(u) as f64;
        for v in 0..n {
            let srw = if graph.has_edge(u, v) { p } else { 0.0 };
            let mix = (1.0 - eps) * srw + eps * dense[u * n + v];
            worst = worst.max((mix - q.p(u, v)).abs());
        }
    }
    worst
}

/// How the phase strategy chooses the decay parameter `θ` from `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThetaRule {
    /// `θ = min(ε, 1 - e^{-ψ/32})`; `ψ` is the exact expansion for
    /// `n <= 24` and otherwise the given value (default 0.1).
    Capped { psi: Option<f64> },
    /// `θ = ε`.
    Full,
    /// An explicit `θ <= ε`.
    Fixed { theta: f64 },
}

impl Default for ThetaRule {
    fn default() -> Self {
        ThetaRule::Capped { psi: None }
    }
}

impl ThetaRule {
    pub fn theta(&self, graph: &Graph, eps: f64) -> Result<f64> {
        match *self {
            ThetaRule::Full => Ok(eps),
            ThetaRule::Fixed { theta } => Ok(theta),
            ThetaRule::Capped { psi } => {
                let psi = match psi {
                    Some(p) => p,
                    None if graph.n() <= EXHAUSTIVE_LIMIT => graph.vertex_expansion_exact()?.value,
                    None => DEFAULT_PSI,
                };
                Ok(eps.min(1.0 - (-psi / 32.0).exp()))
            }
        }
    }
}

/// Runs the phase-halving ε-TBRW from `start` until every vertex is visited.
/// Each phase fixes `U` = the unvisited set, biases with the decomposition
/// of `Q(U, θ)` and lasts until at most `⌊|U|/2⌋` vertices of `U` remain.
pub fn phase_cover_run(graph: &Graph, eps: f64, theta: f64, start: usize, seed: u64) -> Result<u64> {
    if graph.regular_degree().is_none() {
        return Err(Error::NotRegular);
    }
    if !(0.0..1.0).contains(&eps) || !(0.0..=eps).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= θ <= ε < 1, got θ = {theta}, ε = {eps}"
        )));
    }
    let mut state = WalkState::new(graph, start, seed)?;
    let mut buf = Vec::new();
    while !state.covered() {
        let targets = state.visited.complement();
        let w = target_decay_weighting(graph, &targets, theta)?;
        let bias = bias_from_weighting(graph, &w, eps)?;
        let stop = targets.len() / 2;
        let mut remaining = targets.len();
        while remaining > stop {
            let before = state.visited.len();
            step(graph, &mut state, eps, &bias, &mut buf);
            remaining -= state.visited.len() - before;
            if state.steps >= MAX_COVER_STEPS {
                return Err(Error::NoConvergence(state.steps as usize));
            }
        }
    }
    Ok(state.steps)
}

/// Controller families selectable from configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PolicyKind {
    Uniform,
    TowardVertex { target: usize },
    NearestUnvisited,
}

impl PolicyKind {
    fn build(&self, graph: &Graph) -> Result<Box<dyn BiasPolicy>> {
        Ok(match *self {
            PolicyKind::Uniform => Box::new(UniformPolicy),
            PolicyKind::TowardVertex { target } => {
                Box::new(TowardTarget::new(graph, &VertexSet::singleton(graph.n(), target)?)?)
            }
            PolicyKind::NearestUnvisited => Box::new(NearestUnvisited),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "walk", rename_all = "snake_case")]
pub enum WalkSpec {
    Srw,
    Tbrw { eps: f64, policy: PolicyKind },
    Phase { eps: f64, theta: ThetaRule },
    Crw { policy: PolicyKind },
}

impl WalkSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            WalkSpec::Srw => "srw",
            WalkSpec::Tbrw { .. } => "tbrw",
            WalkSpec::Phase { .. } => "phase",
            WalkSpec::Crw { .. } => "crw",
        }
    }

    pub fn eps(&self) -> f64 {
        match *self {
            WalkSpec::Srw | WalkSpec::Crw { .. } => 0.0,
            WalkSpec::Tbrw { eps, .. } | WalkSpec::Phase { eps, .. } => eps,
        }
    }
}

/// Count, mean and sum of squared deviations, mergeable across partitions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Self { count, mean, m2 }
    }

    /// Sample standard deviation (0 for a single observation).
    pub fn stddev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    /// Normal-approximation 95% confidence interval for the mean.
    pub fn ci95(&self) -> (f64, f64) {
        let half = 1.96 * self.stddev() / (self.count.max(1) as f64).sqrt();
        (self.mean - half, self.mean + half)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub start_vertex: usize,
    pub steps: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverEstimate {
    pub mean: f64,
    pub stddev: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub trials: u64,
    /// Largest per-start mean when starts rotate over all vertices.
    pub worst_start_mean: Option<f64>,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

/// One cover run of `spec` from `start` driven by the stream `seed`.
pub fn cover_run(graph: &Graph, spec: &WalkSpec, start: usize, seed: u64) -> Result<u64> {
    let run = |eps: f64, policy: &dyn BiasPolicy, choice: bool| -> Result<u64> {
        let mut state = WalkState::new(graph, start, seed)?;
        let mut buf = Vec::new();
        while !state.covered() {
            if choice {
                crw_step(graph, &mut state, policy, &mut buf);
            } else {
                step(graph, &mut state, eps, policy, &mut buf);
            }
            if state.steps >= MAX_COVER_STEPS {
                return Err(Error::NoConvergence(state.steps as usize));
            }
        }
        Ok(state.steps)
    };
    match spec {
        WalkSpec::Srw => run(0.0, &UniformPolicy, false),
        WalkSpec::Tbrw { eps, policy } => {
            if !(0.0..=1.0).contains(eps) {
                return Err(Error::InvalidParameter(format!("ε must lie in [0, 1], got {eps}")));
            }
            run(*eps, policy.build(graph)?.as_ref(), false)
        }
        WalkSpec::Crw { policy } => run(0.0, policy.build(graph)?.as_ref(), true),
        WalkSpec::Phase { eps, theta } => {
            let theta = theta.theta(graph, *eps)?;
            phase_cover_run(graph, *eps, theta, start, seed)
        }
    }
}

/// Independent cover runs; trial `i` uses the stream `seed ^ i` and starts
/// at `i mod n` when `n <= 64`, otherwise at `start` (default 0).
pub fn estimate_cover_time(
    graph: &Graph,
    spec: &WalkSpec,
    trials: u64,
    seed: u64,
    start: Option<usize>,
) -> Result<CoverEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let n = graph.n();
    let rotate = n <= ROTATING_START_LIMIT && start.is_none();
    let fixed = start.unwrap_or(0);
    if fixed >= n {
        return Err(Error::VertexOutOfRange { index: fixed, n });
    }
    // resolve θ once instead of per trial
    let spec = match spec {
        WalkSpec::Phase { eps, theta } => WalkSpec::Phase {
            eps: *eps,
            theta: ThetaRule::Fixed {
                theta: theta.theta(graph, *eps)?,
            },
        },
        other => other.clone(),
    };
    estimate_resolved(graph, &spec, trials, seed, rotate, fixed)
}

fn estimate_resolved(
    graph: &Graph,
    spec: &WalkSpec,
    trials: u64,
    seed: u64,
    rotate: bool,
    fixed: usize,
) -> Result<CoverEstimate> {
    let n = graph.n();
    let records: Vec<TrialRecord> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let start = if rotate { (trial % n as u64) as usize } else { fixed };
            Ok(TrialRecord {
                trial,
                start_vertex: start,
                steps: cover_run(graph, spec, start, seed ^ trial)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut stats = RunningStats::default();
    let mut per_start = vec![RunningStats::default(); n];
    for r in &records {
        stats.push(r.steps as f64);
        per_start[r.start_vertex].push(r.steps as f64);
    }
    let worst_start_mean = rotate.then(|| {
        per_start
            .iter()
            .filter(|s| s.count > 0)
            .map(|s| s.mean)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let (ci95_lo, ci95_hi) = stats.ci95();
    Ok(CoverEstimate {
        mean: stats.mean,
        stddev: stats.stddev(),
        ci95_lo,
        ci95_hi,
        trials,
        worst_start_mean,
        records,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoostAudit {
    pub theta: f64,
    pub targets: usize,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `π_Q(u) / bound` over `u ∈ U`.
    pub min_ratio: f64,
    pub bound: f64,
}

impl BoostAudit {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// `π_Q(u) >= (1/(2d|U|)) (|U|/n)^{1 + ln(1-θ)/ln d}` for every `u ∈ U`.
pub fn stationary_boost_audit(graph: &Graph, targets: &VertexSet, theta: f64) -> Result<BoostAudit> {
    let d = graph.regular_degree().ok_or(Error::NotRegular)?;
    if d < 3 {
        return Err(Error::Precondition(format!("degree must be >= 3, got {d}")));
    }
    if !(0.0..=1.0 / 3.0).contains(&theta) {
        return Err(Error::Precondition(format!("θ must lie in [0, 1/3], got {theta}")));
    }
    if targets.is_empty() {
        return Err(Error::EmptySet);
    }
    let w = target_decay_weighting(graph, targets, theta)?;
    let (n, u, d) = (graph.n() as f64, targets.len() as f64, d as f64);
    let exponent = 1.0 + (1.0 - theta).ln() / d.ln();
    let bound = (u / n).powf(exponent) / (2.0 * d * u);
    let mut audit = BoostAudit {
        theta,
        targets: targets.len(),
        checked: 0,
        violations: 0,
        min_ratio: f64::INFINITY,
        bound,
    };
    for x in targets.iter() {
        let pi = w.strength(x) / w.total();
        audit.checked += 1;
        audit.min_ratio = audit.min_ratio.min(pi / bound);
        audit.violations += (pi < bound * (1.0 - BIAS_TOL)) as usize;
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::weighting::{induced_chain, simple_random_walk};
    use proptest::prelude::*;

    fn k4() -> Graph {
        generate(&GraphKind::Complete { n: 4 }, 0).unwrap()
    }

    /// `|x - np| <= 3 sqrt(np(1-p))`.
    fn within_three_sigma(hits: u64, total: u64, p: f64) -> bool {
        let mean = total as f64 * p;
        (hits as f64 - mean).abs() <= 3.0 * (mean * (1.0 - p)).sqrt()
    }

    fn count_hits(mut advance: impl FnMut() -> usize, target: usize, total: u64) -> u64 {
        (0..total).filter(|_| advance() == target).count() as u64
    }

    #[test]
    fn eps_extremes_give_pure_marginals() {
        let g = k4();
        let toward = TowardTarget::new(&g, &VertexSet::singleton(4, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        let mut s = WalkState::new(&g, 0, 1).unwrap();
        for _ in 0..1000 {
            s.current = 0;
            assert_eq!(step(&g, &mut s, 1.0, &toward, &mut buf), 3);
        }
        assert_eq!(s.steps, 1000);
    }

    #[test]
    fn half_bias_toward_vertex() {
        let g = k4();
        let toward = TowardTarget::new(&g, &VertexSet::singleton(4, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        let mut s = WalkState::new(&g, 0, 42).unwrap();
        let total = 1_000_000;
        let hits = count_hits(
            || {
                s.current = 0;
                step(&g, &mut s, 0.5, &toward, &mut buf)
            },
            3,
            total,
        );
        assert!(within_three_sigma(hits, total, 2.0 / 3.0), "{hits}");
    }

    #[test]
    fn zero_bias_marginals_pass_chi_square() {
        let g = k4();
        let toward = TowardTarget::new(&g, &VertexSet::singleton(4, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        let mut s = WalkState::new(&g, 0, 9).unwrap();
        let total = 1_000_000u64;
        let mut counts = [0u64; 4];
        for _ in 0..total {
            s.current = 0;
            counts[step(&g, &mut s, 0.0, &toward, &mut buf)] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = total as f64 / 3.0;
        let chi2: f64 = counts[1..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // upper 1e-6 quantile of chi-square with 2 degrees of freedom: -2 ln(1e-6)
        assert!(chi2 < -2.0 * 1e-6f64.ln(), "{chi2}");
    }

    #[test]
    fn choice_walk_emulates_time_biased_walk_at_eps_one_over_d() {
        let g = k4();
        let toward = TowardTarget::new(&g, &VertexSet::singleton(4, 3).unwrap()).unwrap();
        let mut buf = Vec::new();
        let total = 400_000;
        let mut s = WalkState::new(&g, 0, 5).unwrap();
        let crw = count_hits(
            || {
                s.current = 0;
                crw_step(&g, &mut s, &toward, &mut buf)
            },
            3,
            total,
        );
        let d = 3.0;
        let exact = 2.0 / d - 1.0 / (d * d);
        assert!(within_three_sigma(crw, total, exact));
        let eps = 1.0 / d;
        assert!(((1.0 - eps) / d + eps - exact).abs() < 1e-15);
        let mut s = WalkState::new(&g, 0, 6).unwrap();
        let tbrw = count_hits(
            || {
                s.current = 0;
                step(&g, &mut s, eps, &toward, &mut buf)
            },
            3,
            total,
        );
        assert!(within_three_sigma(tbrw, total, exact));
    }

    #[test]
    fn choice_ties_prefer_lower_id() {
        let g = k4();
        let mut buf = Vec::new();
        let mut s = WalkState::new(&g, 0, 3).unwrap();
        // uniform policy: every offered pair ties, so the lower id wins;
        // vertex 3 only appears when both draws pick it
        let total = 200_000;
        let hits = count_hits(
            || {
                s.current = 0;
                crw_step(&g, &mut s, &UniformPolicy, &mut buf)
            },
            3,
            total,
        );
        assert!(within_three_sigma(hits, total, 1.0 / 9.0));
    }

    #[test]
    fn bias_extraction() {
        let g = k4();
        let srw = simple_random_walk(&g);
        let b = extract_bias_matrix(&srw, &g, 0.3).unwrap();
        assert!(b.rows().iter().flatten().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert!(extract_bias_matrix(&srw, &g, 0.0).is_ok());

        let u = VertexSet::singleton(4, 3).unwrap();
        let q = induced_chain(&g, &target_decay_weighting(&g, &u, 0.25).unwrap());
        let b = extract_bias_matrix(&q, &g, 0.25).unwrap();
        assert!(b.min_entry() >= 0.0);
        assert!(reconstruction_error(&q, &g, 0.25, &b) <= 1e-12);
        assert!(b.rows().iter().all(|r| (r.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        // on K4 every edge touches U or lies at distance 1, so Q is the SRW;
        // the cube has two weight classes per vertex
        let cube = generate(&GraphKind::Hypercube { dim: 3 }, 0).unwrap();
        let u = VertexSet::singleton(8, 0).unwrap();
        let q = induced_chain(&cube, &target_decay_weighting(&cube, &u, 0.8).unwrap());
        assert!(extract_bias_matrix(&q, &cube, 0.8).is_ok());
        assert!(matches!(
            extract_bias_matrix(&q, &cube, 0.4),
            Err(Error::NegativeBias { .. })
        ));
        let c6 = generate(&GraphKind::Cycle { n: 6 }, 0).unwrap();
        assert!(extract_bias_matrix(&simple_random_walk(&c6), &c6, 0.5).is_err());
    }

    #[test]
    fn phase_run_basics() {
        let g = generate(&GraphKind::RandomRegular { n: 20, d: 3 }, 4).unwrap();
        let steps = phase_cover_run(&g, 0.3, 0.3, 0, 1).unwrap();
        assert!(steps >= 19);
        // ε = 0 reduces to the simple random walk, stream for stream
        let srw = cover_run(&g, &WalkSpec::Srw, 2, 77).unwrap();
        assert_eq!(phase_cover_run(&g, 0.0, 0.0, 2, 77).unwrap(), srw);
        let c6 = generate(&GraphKind::Cycle { n: 6 }, 0).unwrap();
        let irregular = Graph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        assert!(phase_cover_run(&irregular, 0.1, 0.1, 0, 0).is_err());
        assert!(phase_cover_run(&c6, 0.1, 0.1, 0, 0).is_err());
        assert!(phase_cover_run(&g, 0.1, 0.2, 0, 0).is_err());
    }

    #[test]
    fn capped_theta() {
        let g = generate(&GraphKind::RandomRegular { n: 32, d: 3 }, 1).unwrap();
        let t = ThetaRule::default().theta(&g, 0.25).unwrap();
        assert!((t - (1.0 - (-DEFAULT_PSI / 32.0).exp())).abs() < 1e-15);
        assert_eq!(ThetaRule::Full.theta(&g, 0.25).unwrap(), 0.25);
        assert_eq!(ThetaRule::Capped { psi: Some(50.0) }.theta(&g, 0.25).unwrap(), 0.25);
    }

    #[test]
    fn estimates_are_deterministic_and_bounded_below() {
        let g = generate(&GraphKind::Cycle { n: 10 }, 0).unwrap();
        let a = estimate_cover_time(&g, &WalkSpec::Srw, 300, 8, None).unwrap();
        let b = estimate_cover_time(&g, &WalkSpec::Srw, 300, 8, None).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.records, b.records);
        assert!(a.records.iter().all(|r| r.steps >= 9));
        assert_eq!(a.records[13].start_vertex, 3);
        assert!(a.worst_start_mean.unwrap() >= a.mean);
        assert!(a.ci95_lo < a.mean && a.mean < a.ci95_hi);
        assert!(estimate_cover_time(&g, &WalkSpec::Srw, 0, 8, None).is_err());
    }

    #[test]
    fn complete_graph_cover_mean() {
        let g = k4();
        let e = estimate_cover_time(&g, &WalkSpec::Srw, 10_000, 1, None).unwrap();
        assert!((e.mean - 5.5).abs() <= 0.05 * 5.5, "{}", e.mean);
    }

    #[test]
    fn flip_strategy_on_cycle() {
        let g = generate(&GraphKind::Cycle { n: 256 }, 0).unwrap();
        let spec = WalkSpec::Tbrw {
            eps: 0.5,
            policy: PolicyKind::NearestUnvisited,
        };
        let e = estimate_cover_time(&g, &spec, 100, 2, None).unwrap();
        assert!(e.mean <= 3.0 * 256.0 / 0.5, "{}", e.mean);
    }

    #[test]
    fn boost_audit() {
        let g = k4();
        let u = VertexSet::singleton(4, 0).unwrap();
        let a = stationary_boost_audit(&g, &u, 0.25).unwrap();
        assert!(a.holds() && a.min_ratio > 1.0);
        let all = VertexSet::full(4);
        let a = stationary_boost_audit(&g, &all, 0.0).unwrap();
        // uniform π = 1/4 against bound 1/(2·3·4)
        assert!((a.bound - 1.0 / 24.0).abs() < 1e-15 && a.holds());
        assert!(stationary_boost_audit(&g, &u, 0.5).is_err());
        let g = generate(&GraphKind::RandomRegular { n: 256, d: 3 }, 3).unwrap();
        let mut rng = SplitMix64::seed_from_u64(0);
        let picked = rand::seq::index::sample(&mut rng, 256, 16);
        let u = VertexSet::from_indices(256, picked.iter()).unwrap();
        assert!(stationary_boost_audit(&g, &u, 0.2).unwrap().holds());
    }

    proptest! {
        #[test]
        fn stats_merge_matches_sequential(xs in proptest::collection::vec(0.0f64..1e4, 1..60), cut in 0usize..60) {
            let cut = cut.min(xs.len());
            let mut all = RunningStats::default();
            xs.iter().for_each(|&x| all.push(x));
            let (mut a, mut b) = (RunningStats::default(), RunningStats::default());
            xs[..cut].iter().for_each(|&x| a.push(x));
            xs[cut..].iter().for_each(|&x| b.push(x));
            let merged = a.merge(&b);
            prop_assert_eq!(merged.count, all.count);
            prop_assert!((merged.mean - all.mean).abs() <= 1e-9 * all.mean.abs().max(1.0));
            prop_assert!((merged.m2 - all.m2).abs() <= 1e-6 * all.m2.abs().max(1.0));
        }

        #[test]
        fn decomposition_identity(seed in 0u64..500, theta in 0.0f64..0.9, extra in 0.0f64..1.0) {
            let g = generate(&GraphKind::RandomRegular { n: 12, d: 3 }, seed).unwrap();
            let mut rng = SplitMix64::seed_from_u64(seed);
            let u = crate::weighting::random_nonempty_subset(12, &mut rng);
            let eps = theta + (1.0 - theta) * extra;
            let q = induced_chain(&g, &target_decay_weighting(&g, &u, theta).unwrap());
            let b = extract_bias_matrix(&q, &g, eps).unwrap();
            prop_assert!(b.min_entry() >= -BIAS_TOL);
            prop_assert!(reconstruction_error(&q, &g, eps, &b) <= BIAS_TOL);
        }

        #[test]
        fn policies_are_distributions(seed in 0u64..200, start in 0usize..16) {
            let g = generate(&GraphKind::RandomRegular { n: 16, d: 4 }, seed).unwrap();
            let mut s = WalkState::new(&g, start, seed).unwrap();
            let mut buf = Vec::new();
            for _ in 0..20 {
                step(&g, &mut s, 0.3, &UniformPolicy, &mut buf);
            }
            let target = VertexSet::singleton(16, 5).unwrap();
            let toward = TowardTarget::new(&g, &target).unwrap();
            let policies: [&dyn BiasPolicy; 3] = [&UniformPolicy, &toward, &NearestUnvisited];
            for p in policies {
                p.distribution(&g, &s, &mut buf);
                prop_assert_eq!(buf.len(), g.degree(s.current));
                prop_assert!((buf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(buf.iter().all(|&x| x >= 0.0));
            }
        }
    }
}

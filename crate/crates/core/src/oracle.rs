//! Exact finite-horizon event probabilities for the simple random walk and
//! for the best possible ε-biased controller.
//!
//! Events are predicates on the set of visited vertices, so the trajectory
//! tree collapses onto states `(current vertex, visited targets, steps left)`.
//! A node of the tree is worth the mean of its children under the SRW; the
//! optimal controller puts all of its bias on the best child, which gives
//! `(1-ε)·mean + ε·max`.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::vertex_set::VertexSet;

/// Largest number of tracked target vertices.
pub const TARGET_LIMIT: usize = 20;
/// Largest horizon accepted by the raw trajectory-tree reference.
pub const TREE_LIMIT: usize = 8;
/// Largest graph for the exact lifted-chain cover time.
pub const COVER_LIMIT: usize = 14;
/// Largest number of stored DP entries when every layer is retained.
pub const LAYER_LIMIT: usize = 1 << 24;
/// Relative slack on every bound comparison.
pub const BOUND_RTOL: f64 = 1e-12;
/// Absolute slack on orderings between DP values.
pub const ORDER_SLACK: f64 = 1e-14;

/// Arithmetic needed by the DP, for `f64` and exact rationals.
pub trait Scalar:
    Clone
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    fn from_count(c: usize) -> Self;
    fn as_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_count(c: usize) -> Self {
        c as f64
    }
    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_count(c: usize) -> Self {
        BigRational::from_integer(BigInt::from(c))
    }
    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// The exact rational `num / den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "targets", rename_all = "snake_case")]
pub enum EventKind {
    HitAll(VertexSet),
    HitAny(VertexSet),
    CoverAll,
    /// Revisit the start after at least one step.
    ReturnToStart,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &VertexSet| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        match self {
            EventKind::HitAll(s) => write!(f, "hit_all:{}", list(s)),
            EventKind::HitAny(s) => write!(f, "hit_any:{}", list(s)),
            EventKind::CoverAll => write!(f, "cover"),
            EventKind::ReturnToStart => write!(f, "return"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EventSpec {
    pub kind: EventKind,
    pub horizon: usize,
}

impl EventSpec {
    pub fn new(kind: EventKind, horizon: usize) -> Self {
        Self { kind, horizon }
    }

    pub fn hit(n: usize, target: usize, horizon: usize) -> Result<Self> {
        Ok(Self::new(EventKind::HitAny(VertexSet::singleton(n, target)?), horizon))
    }
}

/// Bit bookkeeping for one event and one start vertex.
#[derive(Clone, Debug)]
struct Tracker {
    slot: Vec<Option<u32>>,
    k: usize,
    full: u32,
    need_all: bool,
    init: u32,
}

impl Tracker {
    fn new(graph: &Graph, kind: &EventKind, start: usize) -> Result<Self> {
        let n = graph.n();
        if start >= n {
            return Err(Error::VertexOutOfRange { index: start, n });
        }
        let (targets, need_all, start_counts): (Vec<usize>, bool, bool) = match kind {
            EventKind::HitAll(s) | EventKind::HitAny(s) => {
                if s.universe() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: s.universe(),
                    });
                }
                (s.to_vec(), matches!(kind, EventKind::HitAll(_)), true)
            }
            EventKind::CoverAll => ((0..n).collect(), true, true),
            EventKind::ReturnToStart => (vec![start], false, false),
        };
        if targets.len() > TARGET_LIMIT {
            return Err(Error::SizeGuard {
                what: "tracked targets",
                limit: TARGET_LIMIT,
                actual: targets.len(),
            });
        }
        let mut slot = vec![None; n];
        for (i, &v) in targets.iter().enumerate() {
            slot[v] = Some(i as u32);
        }
        let k = targets.len();
        let init = match (start_counts, slot[start]) {
            (true, Some(i)) => 1 << i,
            _ => 0,
        };
        Ok(Self {
            slot,
            k,
            full: ((1u64 << k) - 1) as u32,
            need_all,
            init,
        })
    }

    fn success(&self, mask: u32) -> bool {
        if self.need_all {
            mask == self.full
        } else {
            mask != 0
        }
    }

    fn step(&self, mask: u32, y: usize) -> u32 {
        match self.slot[y] {
            Some(i) => mask | (1 << i),
            None => mask,
        }
    }
}

/// Backward DP for one event, one start and one bias level.
#[derive(Clone, Debug)]
pub struct EventTable<S: Scalar> {
    graph: Graph,
    tracker: Tracker,
    start: usize,
    horizon: usize,
    eps: S,
    /// `roots[t]` is the value at the start with `t` steps to go.
    roots: Vec<S>,
    /// `layers[r][x << k | mask]`, retained on request.
    layers: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> EventTable<S> {
    pub fn build(
        graph: &Graph,
        kind: &EventKind,
        start: usize,
        horizon: usize,
        eps: S,
        keep_layers: bool,
    ) -> Result<Self> {
        if !(eps >= S::zero() && eps <= S::one()) {
            return Err(Error::InvalidParameter(format!(
                "ε must lie in [0, 1], got {}",
                eps.as_f64()
            )));
        }
        let tracker = Tracker::new(graph, kind, start)?;
        let width = graph.n() << tracker.k;
        if keep_layers && width * (horizon + 1) > LAYER_LIMIT {
            return Err(Error::SizeGuard {
                what: "retained DP entries",
                limit: LAYER_LIMIT,
                actual: width * (horizon + 1),
            });
        }
        let k = tracker.k;
        let masks = 1usize << k;
        let terminal: Vec<S> = (0..width)
            .map(|i| {
                if tracker.success((i & (masks - 1)) as u32) {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        let root_index = (start << k) | tracker.init as usize;
        let mut roots = vec![terminal[root_index].clone()];
        let mut layers = keep_layers.then(Vec::new);
        let mut prev = terminal;
        let one_minus = S::one() - eps.clone();
        for _ in 1..=horizon {
            let mut next = Vec::with_capacity(width);
            for x in 0..graph.n() {
                let nb = graph.neighbours(x);
                let deg = S::from_count(nb.len());
                for mask in 0..masks as u32 {
                    if tracker.success(mask) {
                        next.push(S::one());
                        continue;
                    }
                    if nb.is_empty() {
                        next.push(S::zero());
                        continue;
                    }
                    let mut sum = S::zero();
                    let mut best = S::zero();
                    for &y in nb {
                        let v = &prev[(y << k) | tracker.step(mask, y) as usize];
                        sum = sum + v.clone();
                        if *v > best {
                            best = v.clone();
                        }
                    }
                    next.push(one_minus.clone() * sum / deg.clone() + eps.clone() * best);
                }
            }
            roots.push(next[root_index].clone());
            if let Some(l) = layers.as_mut() {
                l.push(prev);
            }
            prev = next;
        }
        if let Some(l) = layers.as_mut() {
            l.push(prev);
        }
        Ok(Self {
            graph: graph.clone(),
            tracker,
            start,
            horizon,
            eps,
            roots,
            layers,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn eps(&self) -> &S {
        &self.eps
    }

    /// Value at the start for horizon `t <= horizon`.
    pub fn root(&self, t: usize) -> Result<S> {
        self.roots
            .get(t)
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("horizon {t} exceeds table horizon {}", self.horizon)))
    }

    fn walk_prefix(&self, prefix: &[usize]) -> Result<(usize, u32, usize)> {
        if prefix.first() != Some(&self.start) {
            return Err(Error::InvalidParameter("prefix must begin at the start vertex".into()));
        }
        if prefix.len() > self.horizon + 1 {
            return Err(Error::InvalidParameter("prefix longer than the horizon".into()));
        }
        let mut mask = self.tracker.init;
        for w in prefix.windows(2) {
            if !self.graph.has_edge(w[0], w[1]) {
                return Err(Error::InvalidParameter(format!("{} -> {} is not an edge", w[0], w[1])));
            }
            mask = self.tracker.step(mask, w[1]);
        }
        Ok((*prefix.last().unwrap(), mask, self.horizon + 1 - prefix.len()))
    }

    /// Conditional value of a partial trajectory `prefix` (which starts at
    /// the start vertex) when extended to the full horizon.
    pub fn value_at(&self, prefix: &[usize]) -> Result<S> {
        let layers = self
            .layers
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("table was built without layers".into()))?;
        let (x, mask, remaining) = self.walk_prefix(prefix)?;
        Ok(layers[remaining][(x << self.tracker.k) | mask as usize].clone())
    }

    /// The neighbour an optimal controller steers towards after `prefix`,
    /// lowest id on ties; `None` once no steps remain.
    pub fn optimal_choice(&self, prefix: &[usize]) -> Result<Option<usize>> {
        let layers = self
            .layers
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("table was built without layers".into()))?;
        let (x, mask, remaining) = self.walk_prefix(prefix)?;
        if remaining == 0 {
            return Ok(None);
        }
        let child = &layers[remaining - 1];
        let mut best: Option<(usize, &S)> = None;
        for &y in self.graph.neighbours(x) {
            let v = &child[(y << self.tracker.k) | self.tracker.step(mask, y) as usize];
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((y, v));
            }
        }
        Ok(best.map(|(y, _)| y))
    }

    /// Every retained DP entry, for range checks.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &S)> {
        self.layers
            .iter()
            .flat_map(|l| l.iter().enumerate())
            .flat_map(|(r, layer)| layer.iter().map(move |v| (r, v)))
    }
}

pub fn srw_event_prob(graph: &Graph, start: usize, event: &EventSpec) -> Result<f64> {
    optimal_tbrw_event_prob(graph, start, event, 0.0)
}

pub fn optimal_tbrw_event_prob(graph: &Graph, start: usize, event: &EventSpec, eps: f64) -> Result<f64> {
    EventTable::build(graph, &event.kind, start, event.horizon, eps, false)?.root(event.horizon)
}

pub fn srw_event_prob_exact(graph: &Graph, start: usize, event: &EventSpec) -> Result<BigRational> {
    optimal_tbrw_event_prob_exact(graph, start, event, &BigRational::zero())
}

pub fn optimal_tbrw_event_prob_exact(
    graph: &Graph,
    start: usize,
    event: &EventSpec,
    eps: &BigRational,
) -> Result<BigRational> {
    EventTable::build(graph, &event.kind, start, event.horizon, eps.clone(), false)?.root(event.horizon)
}

/// Whether a complete trajectory belongs to the event.
pub fn event_holds(kind: &EventKind, n: usize, trajectory: &[usize]) -> bool {
    match kind {
        EventKind::HitAll(s) => s.iter().all(|v| trajectory.contains(&v)),
        EventKind::HitAny(s) => s.iter().any(|v| trajectory.contains(&v)),
        EventKind::CoverAll => {
            let mut seen = vec![false; n];
            trajectory.iter().for_each(|&v| seen[v] = true);
            seen.iter().all(|&b| b)
        }
        EventKind::ReturnToStart => trajectory[1..].contains(&trajectory[0]),
    }
}

/// Reference value from the unreduced trajectory tree: every length-`t`
/// trajectory is enumerated and each node combines its children directly.
pub fn tree_event_prob(graph: &Graph, start: usize, event: &EventSpec, eps: f64) -> Result<f64> {
    if event.horizon > TREE_LIMIT {
        return Err(Error::SizeGuard {
            what: "trajectory tree depth",
            limit: TREE_LIMIT,
            actual: event.horizon,
        });
    }
    if start >= graph.n() {
        return Err(Error::VertexOutOfRange {
            index: start,
            n: graph.n(),
        });
    }
    fn node(g: &Graph, kind: &EventKind, eps: f64, path: &mut Vec<usize>, left: usize) -> f64 {
        if left == 0 {
            return f64::from(u8::from(event_holds(kind, g.n(), path)));
        }
        let x = *path.last().unwrap();
        let nb = g.neighbours(x);
        if nb.is_empty() {
            return node(g, kind, eps, path, 0);
        }
        let mut values = Vec::with_capacity(nb.len());
        for &y in nb {
            path.push(y);
            values.push(node(g, kind, eps, path, left - 1));
            path.pop();
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let max = values.iter().copied().fold(0.0, f64::max);
        (1.0 - eps) * mean + eps * max
    }
    Ok(node(graph, &event.kind, eps, &mut vec![start], event.horizon))
}

/// `{0.25, 0.5, ln ln d / ln d (d >= 3), 1}`.
pub fn eta_grid(d: usize) -> Vec<f64> {
    let mut grid = vec![0.25, 0.5];
    if d >= 3 {
        let l = (d as f64).ln();
        grid.push(l.ln() / l);
    }
    grid.push(1.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Clone, Debug, Serialize)]
pub struct BoostBoundReport {
    pub t: usize,
    pub eps: f64,
    pub eta: f64,
    pub p: f64,
    pub q_star: f64,
    /// `(1 + ε(d_max - 1))^t p`.
    pub bound1: f64,
    /// `exp(4t / d_min^η) p^{η/(1+η)}`, when `ε <= d_max^{-2η}`.
    pub bound2: Option<f64>,
    pub margin1: f64,
    pub margin2: Option<f64>,
    pub holds: bool,
}

fn within(q: f64, bound: f64) -> bool {
    q <= bound + BOUND_RTOL * bound.abs().max(1e-300) + 1e-15
}

/// Evaluates both bounds from already computed `p` and `q*`.
pub fn boost_bounds(graph: &Graph, t: usize, eps: f64, eta: f64, p: f64, q_star: f64) -> Result<BoostBoundReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("η must lie in (0, 1], got {eta}")));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("ε must lie in [0, 1], got {eps}")));
    }
    let (dmin, dmax) = (graph.min_degree() as f64, graph.max_degree() as f64);
    let bound1 = (1.0 + eps * (dmax - 1.0)).powi(t as i32) * p;
    let bound2 = (t > 0 && eps <= dmax.powf(-2.0 * eta))
        .then(|| (4.0 * t as f64 / dmin.powf(eta)).exp() * p.powf(eta / (1.0 + eta)));
    let holds = within(q_star, bound1) && bound2.is_none_or(|b| within(q_star, b));
    Ok(BoostBoundReport {
        t,
        eps,
        eta,
        p,
        q_star,
        bound1,
        bound2,
        margin1: bound1 - q_star,
        margin2: bound2.map(|b| b - q_star),
        holds,
    })
}

pub fn boost_bound_audit(
    graph: &Graph,
    start: usize,
    event: &EventSpec,
    eps: f64,
    eta: f64,
) -> Result<BoostBoundReport> {
    let p = srw_event_prob(graph, start, event)?;
    let q = optimal_tbrw_event_prob(graph, start, event, eps)?;
    boost_bounds(graph, event.horizon, eps, eta, p, q)
}

/// One JSON line of an audit.
#[derive(Clone, Debug, Serialize)]
pub struct BoostAuditLine {
    pub graph_id: String,
    pub event: String,
    pub start: usize,
    pub t: usize,
    pub eps: f64,
    pub eta: f64,
    pub p: f64,
    pub q_star: f64,
    pub bound1: f64,
    pub bound2: Option<f64>,
    pub margin1: f64,
    pub margin2: Option<f64>,
}

impl BoostAuditLine {
    pub fn new(graph_id: &str, event: &EventKind, start: usize, r: &BoostBoundReport) -> Self {
        Self {
            graph_id: graph_id.to_string(),
            event: event.to_string(),
            start,
            t: r.t,
            eps: r.eps,
            eta: r.eta,
            p: r.p,
            q_star: r.q_star,
            bound1: r.bound1,
            bound2: r.bound2,
            margin1: r.margin1,
            margin2: r.margin2,
        }
    }
}

/// Exact expected SRW cover time from every start, by solving the lifted
/// chain on pairs `(x, S)` in order of decreasing `|S|`.
pub fn exact_srw_cover_time(graph: &Graph) -> Result<Vec<f64>> {
    let n = graph.n();
    if n > COVER_LIMIT {
        return Err(Error::SizeGuard {
            what: "exact cover time vertices",
            limit: COVER_LIMIT,
            actual: n,
        });
    }
    let full = (1usize << n) - 1;
    let mut expect = vec![Vec::<f64>::new(); 1 << n];
    expect[full] = vec![0.0; n];
    let mut order: Vec<usize> = (1..full).collect();
    order.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for s in order {
        let members: Vec<usize> = (0..n).filter(|&v| s >> v & 1 == 1).collect();
        let mut local = vec![usize::MAX; n];
        for (i, &v) in members.iter().enumerate() {
            local[v] = i;
        }
        let m = members.len();
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut rhs = DVector::<f64>::from_element(m, 1.0);
        for (i, &x) in members.iter().enumerate() {
            let nb = graph.neighbours(x);
            let p = 1.0 / nb.len() as f64;
            for &y in nb {
                if local[y] != usize::MAX {
                    a[(i, local[y])] -= p;
                } else {
                    rhs[i] += p * expect[s | 1 << y][y];
                }
            }
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Precondition("singular lifted cover system".into()))?;
        let mut row = vec![0.0; n];
        for (i, &v) in members.iter().enumerate() {
            row[v] = sol[i];
        }
        expect[s] = row;
    }
    Ok((0..n).map(|u| expect[1 << u][u]).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverLowerReport {
    pub n: usize,
    pub start: usize,
    pub c: f64,
    pub eps: f64,
    /// `⌈3Cn⌉`.
    pub t: usize,
    pub p: f64,
    pub q_star: f64,
    /// `t (1 - q*)`, a lower bound on the expected cover time of any
    /// ε-biased controller from `start`.
    pub lower_bound: f64,
    pub exact_srw_cover_time: f64,
    pub consistent: bool,
}

pub fn cover_lower_demo(graph: &Graph, start: usize, c: f64, eps: f64) -> Result<CoverLowerReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let n = graph.n();
    let exact = exact_srw_cover_time(graph)?;
    if start >= n {
        return Err(Error::VertexOutOfRange { index: start, n });
    }
    let t = (3.0 * c * n as f64).ceil() as usize;
    let p = EventTable::build(graph, &EventKind::CoverAll, start, t, 0.0, false)?.root(t)?;
    let q = EventTable::build(graph, &EventKind::CoverAll, start, t, eps, false)?.root(t)?;
    let lower_bound = t as f64 * (1.0 - q);
    Ok(CoverLowerReport {
        n,
        start,
        c,
        eps,
        t,
        p,
        q_star: q,
        lower_bound,
        exact_srw_cover_time: exact[start],
        consistent: lower_bound <= exact[start] * (1.0 + BOUND_RTOL),
    })
}

/// `Δ(C) = exp(exp((24C + 2) / α))`.
pub fn delta_constant(c: f64, alpha: f64) -> f64 {
    ((24.0 * c + 2.0) / alpha).exp().exp()
}

/// Every connected simple graph on `n <= 6` vertices up to isomorphism,
/// each in its lexicographically least labelling.
pub fn connected_graphs(n: usize) -> Result<Vec<Graph>> {
    if n == 0 || n > 6 {
        return Err(Error::SizeGuard {
            what: "catalog vertices",
            limit: 6,
            actual: n,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut index = vec![vec![0usize; n]; n];
    for (i, &(a, b)) in pairs.iter().enumerate() {
        index[a][b] = i;
        index[b][a] = i;
    }
    let perms = permutations(n);
    let maps: Vec<Vec<usize>> = perms
        .iter()
        .map(|p| pairs.iter().map(|&(a, b)| index[p[a]][p[b]]).collect())
        .collect();
    let canon = |mask: u32| -> u32 {
        maps.iter()
            .map(|map| {
                map.iter()
                    .enumerate()
                    .filter(|&(i, _)| mask >> i & 1 == 1)
                    .fold(0u32, |acc, (_, &j)| acc | 1 << j)
            })
            .min()
            .unwrap()
    };
    let mut reps: Vec<u32> = (0..1u32 << pairs.len())
        .into_par_iter()
        .filter(|&mask| connected(n, &pairs, mask) && canon(mask) == mask)
        .collect();
    reps.sort_unstable();
    reps.into_iter()
        .map(|mask| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            Graph::new(n, &edges)
        })
        .collect()
}

fn connected(n: usize, pairs: &[(usize, usize)], mask: u32) -> bool {
    let mut reach = 1u32;
    loop {
        let mut next = reach;
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if mask >> i & 1 == 1 && (reach >> a & 1 == 1 || reach >> b & 1 == 1) {
                next |= 1 << a | 1 << b;
            }
        }
        if next == reach {
            return reach.count_ones() as usize == n;
        }
        reach = next;
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// A bias level usable both in floating point and exactly.
#[derive(Clone, Debug)]
pub struct EpsPoint {
    pub value: f64,
    pub exact: BigRational,
}

/// `{0, 1/20, 1/d²}` sorted and deduplicated.
pub fn sweep_eps_grid(d: usize) -> Vec<EpsPoint> {
    let d = d.max(1) as i64;
    let mut pts: Vec<EpsPoint> = [ratio(0, 1), ratio(1, 20), ratio(1, d * d)]
        .into_iter()
        .map(|r| EpsPoint {
            value: r.as_f64(),
            exact: r,
        })
        .collect();
    pts.sort_by(|a, b| a.exact.cmp(&b.exact));
    pts.dedup_by(|a, b| a.exact == b.exact);
    pts
}

/// Which audited instances a sweep keeps as output lines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LineSelection {
    #[default]
    None,
    Failures,
    All,
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub max_t: usize,
    pub max_targets: usize,
    pub include_cover: bool,
    /// Exact rational cross-check for graphs with at most this many vertices.
    pub exact_n: usize,
    /// ... and horizons up to this.
    pub exact_t: usize,
    pub lines: LineSelection,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            max_t: 5,
            max_targets: 2,
            include_cover: true,
            exact_n: 5,
            exact_t: 4,
            lines: LineSelection::None,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SweepOutcome {
    pub graphs: usize,
    pub instances: usize,
    pub bound_failures: usize,
    pub second_bound_checked: usize,
    /// `q*` decreasing somewhere along the ε grid.
    pub monotone_violations: usize,
    /// `q* < p`, or `q* != p` at `ε = 0`.
    pub dominance_violations: usize,
    pub exact_checked: usize,
    pub exact_mismatches: usize,
    pub min_margin1: f64,
    #[serde(skip)]
    pub lines: Vec<BoostAuditLine>,
}

impl SweepOutcome {
    fn merge(mut self, other: Self) -> Self {
        self.graphs += other.graphs;
        self.instances += other.instances;
        self.bound_failures += other.bound_failures;
        self.second_bound_checked += other.second_bound_checked;
        self.monotone_violations += other.monotone_violations;
        self.dominance_violations += other.dominance_violations;
        self.exact_checked += other.exact_checked;
        self.exact_mismatches += other.exact_mismatches;
        self.min_margin1 = self.min_margin1.min(other.min_margin1);
        self.lines.extend(other.lines);
        self
    }

    pub fn holds(&self) -> bool {
        self.bound_failures == 0
            && self.monotone_violations == 0
            && self.dominance_violations == 0
            && self.exact_mismatches == 0
    }
}

/// The events audited on `graph`: `HitAll` of every target set of size
/// `1..=max_targets`, plus `CoverAll` when requested.
pub fn sweep_events(graph: &Graph, max_targets: usize, include_cover: bool) -> Result<Vec<EventKind>> {
    let n = graph.n();
    let mut events = Vec::new();
    for mask in 1u64..(1 << n) {
        let size = mask.count_ones() as usize;
        if size <= max_targets {
            events.push((size, mask));
        }
    }
    events.sort();
    let mut out: Vec<EventKind> = events
        .into_iter()
        .map(|(_, m)| VertexSet::from_mask(n, m).map(EventKind::HitAll))
        .collect::<Result<_>>()?;
    if include_cover {
        out.push(EventKind::CoverAll);
    }
    Ok(out)
}

fn sweep_graph(id: &str, graph: &Graph, cfg: &SweepConfig) -> Result<SweepOutcome> {
    let mut out = SweepOutcome {
        graphs: 1,
        min_margin1: f64::INFINITY,
        ..Default::default()
    };
    let grid = sweep_eps_grid(graph.max_degree());
    let etas = eta_grid(graph.max_degree());
    let exact = graph.n() <= cfg.exact_n;
    for event in sweep_events(graph, cfg.max_targets, cfg.include_cover)? {
        for u in 0..graph.n() {
            let tables: Vec<EventTable<f64>> = grid
                .iter()
                .map(|e| EventTable::build(graph, &event, u, cfg.max_t, e.value, false))
                .collect::<Result<_>>()?;
            if exact {
                let t = cfg.exact_t.min(cfg.max_t);
                for (e, table) in grid.iter().zip(&tables) {
                    let q = EventTable::build(graph, &event, u, t, e.exact.clone(), false)?;
                    for s in 0..=t {
                        out.exact_checked += 1;
                        let (a, b) = (table.root(s)?, q.root(s)?.as_f64());
                        if (a - b).abs() > 1e-12 {
                            out.exact_mismatches += 1;
                        }
                    }
                }
            }
            for t in 0..=cfg.max_t {
                let p = tables[0].root(t)?;
                let qs: Vec<f64> = tables.iter().map(|tb| tb.root(t)).collect::<Result<_>>()?;
                if qs[0] != p || qs.iter().any(|&q| q < p - ORDER_SLACK) {
                    out.dominance_violations += 1;
                }
                if qs.windows(2).any(|w| w[1] < w[0] - ORDER_SLACK) {
                    out.monotone_violations += 1;
                }
                if t == 0 {
                    continue;
                }
                for (e, &q) in grid.iter().zip(&qs) {
                    for &eta in &etas {
                        let r = boost_bounds(graph, t, e.value, eta, p, q)?;
                        out.instances += 1;
                        out.second_bound_checked += usize::from(r.bound2.is_some());
                        out.bound_failures += usize::from(!r.holds);
                        out.min_margin1 = out.min_margin1.min(r.margin1);
                        let keep = match cfg.lines {
                            LineSelection::None => false,
                            LineSelection::Failures => !r.holds,
                            LineSelection::All => true,
                        };
                        if keep {
                            out.lines.push(BoostAuditLine::new(id, &event, u, &r));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Audits both boosting bounds, monotonicity in ε and `q* >= p` over every
/// graph, event, start, horizon, ε and η. Graphs run in parallel; the
/// merged outcome (and line order) is independent of scheduling.
pub fn boost_sweep(graphs: &[(String, Graph)], cfg: &SweepConfig) -> Result<SweepOutcome> {
    let parts: Vec<SweepOutcome> = graphs
        .par_iter()
        .map(|(id, g)| sweep_graph(id, g, cfg))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(
        SweepOutcome {
            min_margin1: f64::INFINITY,
            ..Default::default()
        },
        SweepOutcome::merge,
    ))
}

/// The six-vertex illustration graph `u, v, w, x, y, z = 0..5`.
pub fn illustration_graph() -> Graph {
    Graph::new(6, &[(0, 1), (0, 4), (0, 2), (2, 3), (2, 5), (1, 3), (5, 4)]).expect("valid graph")
}

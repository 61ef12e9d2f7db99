//! Positive edge weightings, their Lipschitz constants, and the reversible
//! chains they induce.

use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::chain::ReversibleChain;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::vertex_set::VertexSet;

/// Relative slack used when comparing Lipschitz ratios.
pub const LIPSCHITZ_RTOL: f64 = 1e-12;

/// Strictly positive weights indexed by the graph's edge ids.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeighting {
    weights: Vec<f64>,
    strengths: Vec<f64>,
    total: f64,
}

impl EdgeWeighting {
    pub fn new(graph: &Graph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.m() {
            return Err(Error::DimensionMismatch {
                expected: graph.m(),
                actual: weights.len(),
            });
        }
        if let Some((e, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "edge {:?} has non-positive or non-finite weight {w}",
                graph.edges()[e]
            )));
        }
        let strengths: Vec<f64> = (0..graph.n())
            .map(|v| graph.incident_edges(v).iter().map(|&e| weights[e]).sum())
            .collect();
        let total = strengths.iter().sum();
        Ok(Self {
            weights,
            strengths,
            total,
        })
    }

    /// Weight by edge id.
    pub fn weight(&self, edge: usize) -> f64 {
        self.weights[edge]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `w(x) = Σ_{z ~ x} w(x, z)`.
    pub fn strength(&self, v: usize) -> f64 {
        self.strengths[v]
    }

    /// `W = Σ_x w(x) = 2 Σ_e w(e)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn to_text(&self, graph: &Graph) -> String {
        let mut out = String::new();
        for (&(a, b), w) in graph.edges().iter().zip(&self.weights) {
            let _ = writeln!(out, "{a} {b} {w:e}");
        }
        out
    }
}

pub fn uniform_weighting(graph: &Graph) -> EdgeWeighting {
    EdgeWeighting::new(graph, vec![1.0; graph.m()]).expect("unit weights are valid")
}

/// Smallest `β` for which `w` is `β`-Lipschitz: the largest ratio between
/// two edges sharing a vertex.
pub fn lipschitz_beta(graph: &Graph, w: &EdgeWeighting) -> f64 {
    (0..graph.n()).map(|v| vertex_ratio(graph, w, v)).fold(1.0, f64::max)
}

fn vertex_ratio(graph: &Graph, w: &EdgeWeighting, v: usize) -> f64 {
    let (lo, hi) = graph
        .incident_edges(v)
        .iter()
        .map(|&e| w.weight(e))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

/// `β' >= lipschitz_beta` up to [`LIPSCHITZ_RTOL`].
pub fn is_lipschitz(graph: &Graph, w: &EdgeWeighting, beta: f64) -> bool {
    lipschitz_beta(graph, w) <= beta * (1.0 + LIPSCHITZ_RTOL)
}

/// `w(u, v) = (1-θ)^{max(dist(u,U), dist(v,U))}`.
pub fn target_decay_weighting(graph: &Graph, targets: &VertexSet, theta: f64) -> Result<EdgeWeighting> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!("θ must lie in [0, 1), got {theta}")));
    }
    let dist = graph.distances_from(targets)?;
    let weights = graph
        .edges()
        .iter()
        .map(|&(a, b)| (1.0 - theta).powi(dist[a].max(dist[b]) as i32))
        .collect();
    EdgeWeighting::new(graph, weights)
}

/// Weighting that decays geometrically away from the diametral pair:
/// `w(x, y) = β^{-min(dist(x, {u,v}), dist(y, {u,v}))}`.
pub fn bottleneck_weighting(graph: &Graph, beta: f64) -> Result<EdgeWeighting> {
    let (diameter, (u, v)) = graph.diameter();
    if diameter < 4 {
        return Err(Error::Precondition(format!(
            "bottleneck weighting needs diameter >= 4, got {diameter}"
        )));
    }
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("β must exceed 1, got {beta}")));
    }
    let pair = VertexSet::from_indices(graph.n(), [u, v])?;
    let dist = graph.distances_from(&pair)?;
    let weights = graph
        .edges()
        .iter()
        .map(|&(a, b)| beta.powi(-(dist[a].min(dist[b]) as i32)))
        .collect();
    EdgeWeighting::new(graph, weights)
}

/// `P_w(x, y) = w(x, y) / w(x)` with `π_w(x) = w(x) / W`.
pub fn induced_chain(graph: &Graph, w: &EdgeWeighting) -> ReversibleChain {
    let n = graph.n();
    let mut matrix = vec![0.0; n * n];
    for x in 0..n {
        let sx = w.strength(x);
        for (&y, &e) in graph.neighbours(x).iter().zip(graph.incident_edges(x)) {
            matrix[x * n + y] = w.weight(e) / sx;
        }
    }
    let pi = (0..n).map(|x| w.strength(x) / w.total()).collect();
    ReversibleChain::from_parts_unchecked(n, matrix, pi, false)
}

/// Simple random walk, i.e. the chain induced by the uniform weighting.
pub fn simple_random_walk(graph: &Graph) -> ReversibleChain {
    induced_chain(graph, &uniform_weighting(graph))
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryRatioAudit {
    pub beta: f64,
    pub k: usize,
    pub pairs_checked: usize,
    pub violations: usize,
    /// Smallest `log(bound) - |log(π(x)/π(y))|` over checked pairs.
    pub min_log_margin: f64,
}

impl StationaryRatioAudit {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `(d_min/(d_max β²))^k <= π(x)/π(y) <= (d_max β²/d_min)^k` for all
/// pairs with `dist(x, y) <= k`, using `β = lipschitz_beta(G, w)`.
pub fn stationary_ratio_audit(graph: &Graph, w: &EdgeWeighting, k: usize) -> StationaryRatioAudit {
    let beta = lipschitz_beta(graph, w);
    let step = (graph.max_degree() as f64 * beta * beta / graph.min_degree() as f64).ln();
    // step * k may be 0; allow rounding in the log-ratio.
    let log_bound = step * k as f64;
    let mut audit = StationaryRatioAudit {
        beta,
        k,
        pairs_checked: 0,
        violations: 0,
        min_log_margin: f64::INFINITY,
    };
    for x in 0..graph.n() {
        let dist = graph.distances_from_vertex(x);
        for (y, &d) in dist.iter().enumerate() {
            if y == x || d > k {
                continue;
            }
            let log_ratio = (w.strength(x) / w.strength(y)).ln().abs();
            let margin = log_bound - log_ratio;
            audit.pairs_checked += 1;
            audit.min_log_margin = audit.min_log_margin.min(margin);
            if margin < -1e-12 * log_bound.max(1.0) {
                audit.violations += 1;
            }
        }
    }
    audit
}

/// Members of the randomized σ-Lipschitz test family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzBase {
    Uniform,
    TargetDecay,
    Bottleneck,
}

/// Samples a σ-Lipschitz weighting: a base member (uniform, target decay with
/// `θ = 1 - 1/σ` toward a random non-empty set, or bottleneck with `β = σ`
/// when the diameter allows), followed by `perturbations` multiplicative
/// edge perturbations with factors in `[1/σ, σ]`, each rejected if it breaks
/// the σ-Lipschitz property.
pub fn random_lipschitz_weighting<R: Rng + ?Sized>(
    graph: &Graph,
    sigma: f64,
    perturbations: usize,
    rng: &mut R,
) -> Result<(LipschitzBase, EdgeWeighting)> {
    if !(sigma >= 1.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("σ must be >= 1, got {sigma}")));
    }
    let mut bases = vec![LipschitzBase::Uniform];
    if sigma > 1.0 {
        bases.push(LipschitzBase::TargetDecay);
        if graph.diameter().0 >= 4 {
            bases.push(LipschitzBase::Bottleneck);
        }
    }
    let base = bases[rng.random_range(0..bases.len())];
    let w = match base {
        LipschitzBase::Uniform => uniform_weighting(graph),
        LipschitzBase::TargetDecay => {
            let targets = random_nonempty_subset(graph.n(), rng);
            target_decay_weighting(graph, &targets, 1.0 - 1.0 / sigma)?
        }
        LipschitzBase::Bottleneck => bottleneck_weighting(graph, sigma)?,
    };
    if sigma == 1.0 {
        return Ok((base, w));
    }
    let mut weights = w.weights;
    let log_sigma = sigma.ln();
    for _ in 0..perturbations {
        let e = rng.random_range(0..graph.m());
        let factor = rng.random_range(-log_sigma..=log_sigma).exp();
        let old = weights[e];
        weights[e] = old * factor;
        let (a, b) = graph.edges()[e];
        let ok = [a, b].iter().all(|&x| {
            let (lo, hi) = graph
                .incident_edges(x)
                .iter()
                .map(|&f| weights[f])
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
            hi / lo <= sigma * (1.0 + LIPSCHITZ_RTOL)
        });
        if !ok {
            weights[e] = old;
        }
    }
    Ok((base, EdgeWeighting::new(graph, weights)?))
}

/// Uniformly random non-empty subset of `0..n`.
pub fn random_nonempty_subset<R: Rng + ?Sized>(n: usize, rng: &mut R) -> VertexSet {
    loop {
        let mut set = VertexSet::empty(n);
        for v in 0..n {
            if rng.random_bool(0.5) {
                set.insert(v);
            }
        }
        if !set.is_empty() {
            return set;
        }
    }
}

/// Parses `u v weight` lines that must match the graph's edge set exactly.
pub fn parse_weighting(graph: &Graph, text: &str) -> Result<EdgeWeighting> {
    let mut weights: Vec<Option<f64>> = vec![None; graph.m()];
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse { line, message };
        if fields.len() != 3 {
            return Err(parse_err(format!("expected `u v weight`, found `{content}`")));
        }
        let u: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("`{}` is not a vertex index", fields[0])))?;
        let v: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("`{}` is not a vertex index", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("`{}` is not a number", fields[2])))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(parse_err(format!("weight {w} must be positive and finite")));
        }
        let e = graph
            .edge_id(u, v)
            .ok_or_else(|| parse_err(format!("{{{u}, {v}}} is not an edge of the graph")))?;
        if weights[e].replace(w).is_some() {
            return Err(parse_err(format!("edge {{{u}, {v}}} listed twice")));
        }
    }
    let weights = weights
        .into_iter()
        .enumerate()
        .map(|(e, w)| {
            w.ok_or_else(|| Error::Parse {
                line: last_line.max(1),
                message: format!("missing weight for edge {:?}", graph.edges()[e]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EdgeWeighting::new(graph, weights)
}

//! Numeric audits of the conductance argument for Lipschitz-weighted walks
//! on regular expanders: the stationary-mass bucket partition, the
//! representative block decomposition of a set, per-lemma margins, and the
//! two endpoint checks (robust gap lower bound, bottleneck witness).

use std::f64::consts::E;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{
    candidate_conductance, edge_conductance_exact, flow_between, power_chain, spectral_gap, ReversibleChain,
};
use crate::error::{Error, Result};
use crate::graph::{Graph, EXHAUSTIVE_LIMIT};
use crate::vertex_set::VertexSet;
use crate::weighting::{induced_chain, lipschitz_beta, simple_random_walk, EdgeWeighting};

/// Block growth rate `α = e²`.
pub const ALPHA: f64 = E * E;
/// Relative tolerance applied when `-ln π` sits on a bucket boundary.
pub const BUCKET_RTOL: f64 = 1e-12;
/// Slack for the integer-count ball escape inequality.
pub const COUNT_SLACK: f64 = 1e-9;
/// Slack for mass and flow inequalities.
pub const MASS_SLACK: f64 = 1e-12;
/// Largest `n` for the exhaustive conductance claim of [`gap_robustness_check`].
pub const PHI_CLAIM_LIMIT: usize = 20;

/// `V_i = {v : π(v) ∈ (e^{-i}, e^{-(i-1)}]}` for `i >= 1`.
#[derive(Clone, Debug, Serialize)]
pub struct BucketPartition {
    index: Vec<usize>,
    max_index: usize,
}

impl BucketPartition {
    pub fn bucket_of(&self, v: usize) -> usize {
        self.index[v]
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn bucket(&self, i: usize) -> VertexSet {
        let mut set = VertexSet::empty(self.index.len());
        for (v, &b) in self.index.iter().enumerate() {
            if b == i {
                set.insert(v);
            }
        }
        set
    }

    /// `sizes[i] = |S ∩ V_i|` for `i` in `0..=max_index + 1`; entry 0 is always 0.
    pub fn sizes(&self, set: &VertexSet) -> Vec<usize> {
        let mut sizes = vec![0; self.max_index + 2];
        for v in set.iter() {
            sizes[self.index[v]] += 1;
        }
        sizes
    }

    /// Members of `set` lying in buckets `lo..=hi`.
    pub fn restrict(&self, set: &VertexSet, lo: usize, hi: usize) -> VertexSet {
        let mut out = VertexSet::empty(set.universe());
        for v in set.iter().filter(|&v| (lo..=hi).contains(&self.index[v])) {
            out.insert(v);
        }
        out
    }
}

pub fn bucket_index(p: f64) -> usize {
    let x = -p.ln();
    (x + BUCKET_RTOL * x.max(1.0)).floor().max(0.0) as usize + 1
}

pub fn bucket_partition(chain: &ReversibleChain) -> Result<BucketPartition> {
    let pi = chain.pi();
    if let Some(v) = pi.iter().position(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "stationary mass of vertex {v} is {} (must lie in (0, 1])",
            pi[v]
        )));
    }
    let index: Vec<usize> = pi.iter().map(|&p| bucket_index(p)).collect();
    let max_index = index.iter().copied().max().unwrap_or(1);
    Ok(BucketPartition { index, max_index })
}

/// Index pairs `(a_ℓ, b_ℓ)` for bucket counts `sizes` (index 0 unused).
///
/// `b_ℓ` is the first `b >= a_ℓ` with `|S_{b+1}| <= (α/2)|S_{a_ℓ} ∪ .. ∪ S_b|`;
/// the next block starts at the first `a >= b_ℓ + 2` with `|S_a| > |S_{a-1}|`.
/// Bucket `b_ℓ + 1` is the one that stopped the block, so it never opens the
/// next one.
pub fn representative_runs(sizes: &[usize], alpha: f64) -> Result<Vec<(usize, usize)>> {
    let at = |i: usize| sizes.get(i).copied().unwrap_or(0);
    let top = match sizes.iter().rposition(|&s| s > 0) {
        Some(t) if t >= 1 => t,
        _ => return Err(Error::EmptySet),
    };
    let mut a = (1..=top).find(|&i| at(i) > 0).expect("top is non-empty");
    let mut runs = Vec::new();
    loop {
        let mut b = a;
        let mut total = at(a);
        while at(b + 1) as f64 > 0.5 * alpha * total as f64 {
            b += 1;
            total += at(b);
        }
        runs.push((a, b));
        match (b + 2..=top).find(|&i| at(i) > at(i - 1)) {
            Some(next) => a = next,
            None => return Ok(runs),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentativeDecomposition {
    pub runs: Vec<(usize, usize)>,
    pub blocks: Vec<VertexSet>,
    pub union: VertexSet,
    /// Bucket ranges skipped between consecutive blocks (and after the last).
    pub gaps: Vec<(usize, usize)>,
}

pub fn representative_indices(
    set: &VertexSet,
    partition: &BucketPartition,
    alpha: f64,
) -> Result<RepresentativeDecomposition> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let sizes = partition.sizes(set);
    let runs = representative_runs(&sizes, alpha)?;
    let top = sizes.iter().rposition(|&s| s > 0).unwrap_or(0);
    let blocks: Vec<VertexSet> = runs.iter().map(|&(a, b)| partition.restrict(set, a, b)).collect();
    let mut union = VertexSet::empty(set.universe());
    for block in &blocks {
        union = union.union(block);
    }
    let mut gaps = Vec::new();
    for (l, &(_, b)) in runs.iter().enumerate() {
        let end = runs.get(l + 1).map_or(top, |&(a, _)| a - 1);
        if end > b {
            gaps.push((b + 1, end));
        }
    }
    Ok(RepresentativeDecomposition {
        runs,
        blocks,
        union,
        gaps,
    })
}

/// `K = ⌈2 / ln(1 + ψ)⌉`.
pub fn block_radius(psi: f64) -> Result<usize> {
    if !(psi > 0.0 && psi.is_finite()) {
        return Err(Error::InvalidParameter(format!("ψ must be positive, got {psi}")));
    }
    Ok((2.0 / psi.ln_1p()).ceil() as usize)
}

/// `σ = e^{1/(2K)}`.
pub fn lipschitz_budget(k: usize) -> f64 {
    (1.0 / (2.0 * k as f64)).exp()
}

/// Resolves ψ: the given value, the exact expansion when `n` allows, and
/// otherwise the spectral lower bound `γ_SRW / 2 <= Ψ`.
pub fn resolve_psi(graph: &Graph, psi: Option<f64>) -> Result<(f64, bool)> {
    match psi {
        Some(p) => Ok((p, false)),
        None if graph.n() <= EXHAUSTIVE_LIMIT => Ok((graph.vertex_expansion_exact()?.value, true)),
        None => Ok((spectral_gap(&simple_random_walk(graph))?.gap / 2.0, false)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub holds: bool,
    /// `lhs - rhs`; negative values are violations.
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SetAudit {
    Checked {
        runs: Vec<(usize, usize)>,
        checks: Vec<LemmaCheck>,
    },
    Skipped {
        reason: String,
    },
}

impl SetAudit {
    pub fn failures(&self) -> usize {
        match self {
            SetAudit::Checked { checks, .. } => checks.iter().filter(|c| !c.holds).count(),
            SetAudit::Skipped { .. } => 0,
        }
    }
}

pub const REPRESENTATIVE_MASS: &str = "representative_mass";
pub const TOP_BUCKET_MASS: &str = "top_bucket_mass";
pub const BALL_ESCAPE: &str = "ball_escape";
pub const BLOCK_FLOW: &str = "block_flow";
pub const BUCKET_LOCALITY: &str = "bucket_locality";

/// Everything the per-set audits share for a fixed `(G, w)`.
pub struct RobustnessContext<'a> {
    graph: &'a Graph,
    pub d: Option<usize>,
    pub psi: f64,
    pub psi_exact: bool,
    pub k: usize,
    pub sigma: f64,
    pub beta: f64,
    pub chain: ReversibleChain,
    pub chain_2k: ReversibleChain,
    pub partition: BucketPartition,
}

impl<'a> RobustnessContext<'a> {
    pub fn new(graph: &'a Graph, w: &EdgeWeighting, psi: Option<f64>) -> Result<Self> {
        let (psi, psi_exact) = resolve_psi(graph, psi)?;
        let k = block_radius(psi)?;
        let chain = induced_chain(graph, w);
        let chain_2k = power_chain(&chain, 2 * k)?;
        let partition = bucket_partition(&chain)?;
        Ok(Self {
            graph,
            d: graph.regular_degree(),
            psi,
            psi_exact,
            k,
            sigma: lipschitz_budget(k),
            beta: lipschitz_beta(graph, w),
            chain,
            chain_2k,
            partition,
        })
    }

    pub fn within_budget(&self) -> bool {
        self.beta <= self.sigma * (1.0 + MASS_SLACK)
    }

    fn skip_reason(&self, set: &VertexSet) -> Option<String> {
        if self.d.is_none() {
            return Some("graph is not regular".into());
        }
        if !self.within_budget() {
            return Some(format!(
                "weighting is {}-Lipschitz, budget σ = {}",
                self.beta, self.sigma
            ));
        }
        if 2 * set.len() > self.graph.n() {
            return Some(format!("|S| = {} exceeds n/2", set.len()));
        }
        None
    }

    /// Checks every block inequality for one set `S`. Sets outside the
    /// hypotheses are reported as skipped.
    pub fn audit(&self, set: &VertexSet) -> Result<SetAudit> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(reason) = self.skip_reason(set) {
            return Ok(SetAudit::Skipped { reason });
        }
        let d = self.d.expect("checked regular") as f64;
        let pi = |s: &VertexSet| self.chain.mass(s);
        let decomposition = representative_indices(set, &self.partition, ALPHA)?;
        let mut checks = Vec::new();
        let mass_check = |name, lhs: f64, rhs: f64| LemmaCheck {
            name,
            holds: lhs - rhs >= -MASS_SLACK * rhs.max(1e-300),
            margin: lhs - rhs,
        };
        checks.push(mass_check(
            REPRESENTATIVE_MASS,
            pi(&decomposition.union),
            pi(set) / 22.0,
        ));
        let flow_scale = d.powi(-2 * self.k as i32) / 90.0;
        for (&(_, b), block) in decomposition.runs.iter().zip(&decomposition.blocks) {
            let top = self.partition.restrict(set, b, b);
            checks.push(mass_check(TOP_BUCKET_MASS, pi(&top), pi(block) / 11.0));
            let escaped = self.graph.ball(block, 2 * self.k)?.difference(set).len() as f64;
            let needed = block.len() as f64 / 3.0;
            checks.push(LemmaCheck {
                name: BALL_ESCAPE,
                holds: escaped - needed >= -COUNT_SLACK,
                margin: escaped - needed,
            });
            let flow = flow_between(&self.chain_2k, block, set);
            checks.push(mass_check(BLOCK_FLOW, flow, flow_scale * pi(block)));
        }
        Ok(SetAudit::Checked {
            runs: decomposition.runs,
            checks,
        })
    }

    /// `B_K(V_i) ⊆ V_{i-1} ∪ V_i ∪ V_{i+1}` for every occupied bucket.
    pub fn bucket_locality(&self) -> Result<LemmaCheck> {
        let mut worst = i64::MAX;
        for i in 1..=self.partition.max_index() {
            let bucket = self.partition.bucket(i);
            if bucket.is_empty() {
                continue;
            }
            for v in self.graph.ball(&bucket, self.k)?.iter() {
                let j = self.partition.bucket_of(v) as i64;
                worst = worst.min(1 - (j - i as i64).abs());
            }
        }
        Ok(LemmaCheck {
            name: BUCKET_LOCALITY,
            holds: worst >= 0,
            margin: worst as f64,
        })
    }
}

/// Aggregate of one named inequality across audited instances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaTally {
    pub name: &'static str,
    pub instances: usize,
    pub min_margin: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LemmaReport {
    pub tallies: Vec<LemmaTally>,
    pub sets_checked: usize,
    pub sets_skipped: usize,
}

impl LemmaReport {
    pub fn record(&mut self, check: &LemmaCheck) {
        let tally = match self.tallies.iter_mut().find(|t| t.name == check.name) {
            Some(t) => t,
            None => {
                self.tallies.push(LemmaTally {
                    name: check.name,
                    instances: 0,
                    min_margin: f64::INFINITY,
                    failures: 0,
                });
                self.tallies.last_mut().expect("just pushed")
            }
        };
        tally.instances += 1;
        tally.min_margin = tally.min_margin.min(check.margin);
        tally.failures += !check.holds as usize;
    }

    pub fn record_set(&mut self, audit: &SetAudit) {
        match audit {
            SetAudit::Checked { checks, .. } => {
                self.sets_checked += 1;
                for c in checks {
                    self.record(c);
                }
            }
            SetAudit::Skipped { .. } => self.sets_skipped += 1,
        }
    }

    pub fn merge(&mut self, other: &LemmaReport) {
        self.sets_checked += other.sets_checked;
        self.sets_skipped += other.sets_skipped;
        for t in &other.tallies {
            match self.tallies.iter_mut().find(|s| s.name == t.name) {
                Some(s) => {
                    s.instances += t.instances;
                    s.min_margin = s.min_margin.min(t.min_margin);
                    s.failures += t.failures;
                }
                None => self.tallies.push(t.clone()),
            }
        }
    }

    pub fn failures(&self) -> usize {
        self.tallies.iter().map(|t| t.failures).sum()
    }
}

/// Uniformly random set with `1 <= |S| <= n/2`.
pub fn random_small_set<R: Rng + ?Sized>(n: usize, rng: &mut R) -> VertexSet {
    let size = rng.random_range(1..=(n / 2).max(1));
    let picked = sample(rng, n, size);
    VertexSet::from_indices(n, picked.iter()).expect("distinct indices")
}

/// Audits `samples` random sets; sample `i` draws from the stream `seed ^ i`.
/// Results are in sample order.
pub fn random_set_audits(ctx: &RobustnessContext<'_>, samples: usize, seed: u64) -> Result<Vec<(VertexSet, SetAudit)>> {
    let n = ctx.graph.n();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::seed_from_u64(seed ^ i);
            let set = random_small_set(n, &mut rng);
            let audit = ctx.audit(&set)?;
            Ok((set, audit))
        })
        .collect()
}

/// [`random_set_audits`] tallied per inequality, plus the bucket locality check.
pub fn audit_random_sets(ctx: &RobustnessContext<'_>, samples: usize, seed: u64) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for (_, a) in &random_set_audits(ctx, samples, seed)? {
        report.record_set(a);
    }
    report.record(&ctx.bucket_locality()?);
    Ok(report)
}

/// Lower bounds on `Φ(P_w^{2K})` and `γ(P_w)` for σ-Lipschitz weightings.
#[derive(Clone, Debug, Serialize)]
pub struct GapRobustnessReport {
    pub n: usize,
    pub d: usize,
    pub psi: f64,
    pub psi_exact: bool,
    pub k: usize,
    pub sigma: f64,
    pub beta: f64,
    /// For bipartite graphs `P_w^{2K}` is reducible and `Φ(P_w^{2K}) = 0`.
    pub bipartite: bool,
    pub phi_2k: Option<f64>,
    pub phi_bound: f64,
    pub phi_holds: Option<bool>,
    pub gap: Option<f64>,
    pub gap_bound: f64,
    /// `log10` of the gap bound, which underflows for large `K`.
    pub log10_gap_bound: f64,
    pub gap_holds: Option<bool>,
}

impl GapRobustnessReport {
    /// Both evaluated claims hold; unevaluated claims are ignored.
    pub fn holds(&self) -> bool {
        self.phi_holds != Some(false) && self.gap_holds != Some(false)
    }
}

/// Checks `Φ(P_w^{2K}) >= d^{-2K}/4000` (exhaustively, `n <= 20`) and
/// `γ(P_w) >= 1e-8 d^{-4K}` (`n <= 512`) with `K = ⌈2/ln(1+ψ)⌉`.
pub fn gap_robustness_check(graph: &Graph, w: &EdgeWeighting, psi: Option<f64>) -> Result<GapRobustnessReport> {
    let d = graph.regular_degree().ok_or(Error::NotRegular)?;
    let (psi, psi_exact) = resolve_psi(graph, psi)?;
    let k = block_radius(psi)?;
    let sigma = lipschitz_budget(k);
    let beta = lipschitz_beta(graph, w);
    if beta > sigma * (1.0 + MASS_SLACK) {
        return Err(Error::Precondition(format!(
            "weighting is {beta}-Lipschitz but the budget is σ = {sigma} (K = {k})"
        )));
    }
    let n = graph.n();
    let chain = induced_chain(graph, w);
    let d_f = d as f64;
    let phi_bound = d_f.powi(-2 * k as i32) / 4000.0;
    let log10_gap_bound = -8.0 - 4.0 * k as f64 * d_f.log10();
    let gap_bound = 10f64.powf(log10_gap_bound);
    let phi_2k = if n <= PHI_CLAIM_LIMIT {
        Some(edge_conductance_exact(&power_chain(&chain, 2 * k)?)?.phi)
    } else {
        None
    };
    let gap = if n <= crate::chain::SPECTRAL_LIMIT {
        Some(spectral_gap(&chain)?.gap)
    } else {
        None
    };
    Ok(GapRobustnessReport {
        n,
        d,
        psi,
        psi_exact,
        k,
        sigma,
        beta,
        bipartite: graph.is_bipartite(),
        phi_holds: phi_2k.map(|p| p >= phi_bound * (1.0 - MASS_SLACK)),
        phi_2k,
        phi_bound,
        gap_holds: gap.map(|g| g >= gap_bound * (1.0 - MASS_SLACK)),
        gap,
        gap_bound,
        log10_gap_bound,
    })
}

/// Conductance of the explicit witness ball for the bottleneck weighting.
#[derive(Clone, Debug, Serialize)]
pub struct BottleneckWitnessReport {
    pub diameter: usize,
    pub pair: (usize, usize),
    pub beta: f64,
    pub radius: usize,
    pub centre: usize,
    pub witness: VertexSet,
    pub witness_mass: f64,
    pub conductance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// For `D >= 4`, the ball of radius `⌊D/2⌋ - 1` around one end of a
/// diametral pair (whichever has mass at most 1/2) has conductance at most
/// `min{d^{⌊D/2⌋-1}, n} β^{3-⌊D/2⌋}` under the bottleneck weighting.
pub fn bottleneck_witness_check(graph: &Graph, beta: f64) -> Result<BottleneckWitnessReport> {
    let d = graph.regular_degree().ok_or(Error::NotRegular)?;
    let w = crate::weighting::bottleneck_weighting(graph, beta)?;
    let (diameter, (u, v)) = graph.diameter();
    let chain = induced_chain(graph, &w);
    let half = (diameter / 2) as i32;
    let radius = diameter / 2 - 1;
    let n = graph.n();
    let mut candidates = Vec::with_capacity(2);
    for centre in [u, v] {
        let ball = graph.ball(&VertexSet::singleton(n, centre)?, radius)?;
        candidates.push((centre, chain.mass(&ball), ball));
    }
    let (centre, witness_mass, witness) = candidates
        .into_iter()
        .find(|c| c.1 <= 0.5 + MASS_SLACK)
        .ok_or_else(|| Error::Precondition("neither witness ball has mass <= 1/2".into()))?;
    let conductance = candidate_conductance(&chain, &witness)?;
    let bound = (d as f64).powi(half - 1).min(n as f64) * beta.powi(3 - half);
    Ok(BottleneckWitnessReport {
        diameter,
        pair: (u, v),
        beta,
        radius,
        centre,
        witness,
        witness_mass,
        holds: conductance <= bound * (1.0 + MASS_SLACK),
        conductance,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::weighting::{target_decay_weighting, uniform_weighting};
    use proptest::prelude::*;

    /// Direct transcription of the defining inequalities, used to recheck
    /// the recursion output.
    fn runs_are_valid(sizes: &[usize], runs: &[(usize, usize)]) -> bool {
        let at = |i: usize| sizes.get(i).copied().unwrap_or(0);
        let half = ALPHA / 2.0;
        let first = (1..sizes.len()).find(|&i| at(i) > 0);
        if runs.first().map(|r| r.0) != first {
            return false;
        }
        for (l, &(a, b)) in runs.iter().enumerate() {
            if b < a {
                return false;
            }
            // every b' in a..b fails the stopping rule, b satisfies it
            let mut total = 0;
            for i in a..=b {
                total += at(i);
                let stops = at(i + 1) as f64 <= half * total as f64;
                if stops != (i == b) {
                    return false;
                }
            }
            let next = (b + 2..sizes.len()).find(|&i| at(i) > at(i - 1));
            if runs.get(l + 1).map(|r| r.0) != next {
                return false;
            }
        }
        true
    }

    #[test]
    fn uniform_mass_lands_in_second_bucket() {
        let k4 = generate(&GraphKind::Complete { n: 4 }, 0).unwrap();
        let p = bucket_partition(&simple_random_walk(&k4)).unwrap();
        assert_eq!(p.max_index(), 2);
        assert_eq!(p.bucket(2).len(), 4);
        assert_eq!(bucket_index(1.0), 1);
        assert_eq!(bucket_index((-1.0f64).exp()), 2);
        assert_eq!(bucket_index((-1.0f64).exp() * 0.999), 2);
        assert_eq!(bucket_index((-1.0f64).exp() * 1.001), 1);
    }

    #[test]
    fn illustrated_bucket_sizes() {
        let mut sizes = vec![0, 0];
        sizes.extend([2, 12, 52, 70, 8, 5, 6, 32, 68]);
        let runs = representative_runs(&sizes, ALPHA).unwrap();
        assert_eq!(runs, vec![(2, 4), (8, 9)]);
        assert!(runs_are_valid(&sizes, &runs));
    }

    #[test]
    fn single_bucket_is_one_block() {
        assert_eq!(representative_runs(&[0, 0, 0, 5], ALPHA).unwrap(), vec![(3, 3)]);
        assert_eq!(representative_runs(&[0, 0, 0], ALPHA), Err(Error::EmptySet));
    }

    #[test]
    fn decomposition_sets_and_gaps() {
        let c6 = generate(&GraphKind::Cycle { n: 6 }, 0).unwrap();
        let p = bucket_partition(&simple_random_walk(&c6)).unwrap();
        let s = VertexSet::from_indices(6, [0, 1]).unwrap();
        let dec = representative_indices(&s, &p, ALPHA).unwrap();
        assert_eq!(dec.union, s);
        assert!(dec.gaps.is_empty());
        assert!(representative_indices(&VertexSet::empty(6), &p, ALPHA).is_err());
    }

    #[test]
    fn complete_graph_uniform_audit() {
        let k4 = generate(&GraphKind::Complete { n: 4 }, 0).unwrap();
        let ctx = RobustnessContext::new(&k4, &uniform_weighting(&k4), None).unwrap();
        assert_eq!(ctx.k, 3);
        for mask in 1u64..16 {
            let s = VertexSet::from_mask(4, mask).unwrap();
            let audit = ctx.audit(&s).unwrap();
            if s.len() <= 2 {
                assert!(matches!(audit, SetAudit::Checked { .. }));
                assert_eq!(audit.failures(), 0, "{audit:?}");
            } else {
                assert!(matches!(audit, SetAudit::Skipped { .. }));
            }
        }
        assert!(ctx.audit(&VertexSet::empty(4)).is_err());
        assert!(ctx.bucket_locality().unwrap().holds);
    }

    #[test]
    fn target_decay_at_budget_passes_random_sets() {
        let g = generate(&GraphKind::RandomRegular { n: 16, d: 3 }, 11).unwrap();
        let psi = g.vertex_expansion_exact().unwrap().value;
        let k = block_radius(psi).unwrap();
        let theta = 1.0 - (-1.0 / (2.0 * k as f64)).exp();
        let targets = VertexSet::from_indices(16, [0, 5]).unwrap();
        let w = target_decay_weighting(&g, &targets, theta).unwrap();
        let ctx = RobustnessContext::new(&g, &w, None).unwrap();
        assert!(ctx.within_budget());
        let report = audit_random_sets(&ctx, 100, 3).unwrap();
        assert_eq!(report.failures(), 0, "{report:?}");
        assert_eq!(report.sets_checked, 100);
    }

    #[test]
    fn over_budget_is_skipped_or_rejected() {
        let g = generate(&GraphKind::RandomRegular { n: 16, d: 3 }, 11).unwrap();
        let targets = VertexSet::singleton(16, 0).unwrap();
        let w = target_decay_weighting(&g, &targets, 0.5).unwrap();
        let ctx = RobustnessContext::new(&g, &w, None).unwrap();
        let s = VertexSet::singleton(16, 3).unwrap();
        assert!(matches!(ctx.audit(&s).unwrap(), SetAudit::Skipped { .. }));
        assert!(matches!(
            gap_robustness_check(&g, &w, None),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn endpoint_on_small_regular_graphs() {
        for kind in [
            GraphKind::Complete { n: 4 },
            GraphKind::Circulant {
                n: 6,
                offsets: vec![2, 3],
            },
        ] {
            let g = generate(&kind, 0).unwrap();
            let r = gap_robustness_check(&g, &uniform_weighting(&g), None).unwrap();
            assert!(
                r.holds() && r.phi_holds == Some(true) && r.gap_holds == Some(true),
                "{r:?}"
            );
        }
    }

    #[test]
    fn bipartite_graphs_have_reducible_even_powers() {
        let g = generate(&GraphKind::Hypercube { dim: 3 }, 0).unwrap();
        let r = gap_robustness_check(&g, &uniform_weighting(&g), None).unwrap();
        assert!(r.bipartite);
        assert!(r.phi_2k.unwrap().abs() < 1e-12);
        assert_eq!(r.phi_holds, Some(false));
        assert_eq!(r.gap_holds, Some(true));
    }

    #[test]
    fn witness_on_cycles() {
        let c40 = generate(&GraphKind::Cycle { n: 40 }, 0).unwrap();
        let r = bottleneck_witness_check(&c40, 2.0).unwrap();
        assert!((r.bound - 0.3125).abs() < 1e-15);
        assert!(r.holds, "{r:?}");
        assert_eq!(r.radius, 9);
        let c12 = generate(&GraphKind::Cycle { n: 12 }, 0).unwrap();
        let r = bottleneck_witness_check(&c12, 2.0).unwrap();
        assert!((r.bound - 4.0).abs() < 1e-15 && r.holds && r.conductance <= 1.0);
        let k4 = generate(&GraphKind::Complete { n: 4 }, 0).unwrap();
        assert!(matches!(
            bottleneck_witness_check(&k4, 2.0),
            Err(Error::Precondition(_))
        ));
    }

    proptest! {
        #[test]
        fn recursion_satisfies_its_definition(raw in proptest::collection::vec(0usize..80, 1..14)) {
            let mut sizes = vec![0];
            sizes.extend(raw);
            if sizes.iter().any(|&s| s > 0) {
                let runs = representative_runs(&sizes, ALPHA).unwrap();
                prop_assert!(runs_are_valid(&sizes, &runs));
                for w in runs.windows(2) {
                    prop_assert!(w[0].1 < w[1].0);
                }
                // sizes keep growing inside each block
                for &(a, b) in &runs {
                    let mut total = sizes[a];
                    for &s in &sizes[a + 1..=b] {
                        prop_assert!(s as f64 >= ALPHA / 2.0 * total as f64);
                        total += s;
                    }
                }
            }
        }

        #[test]
        fn buckets_are_ordered(p in 1e-9f64..=1.0, q in 1e-9f64..=1.0) {
            let (i, j) = (bucket_index(p), bucket_index(q));
            if i < j {
                prop_assert!(p > q);
            }
            prop_assert!(p <= (-(i as f64 - 1.0)).exp() * (1.0 + 1e-11));
            prop_assert!(p > (-(i as f64)).exp() * (1.0 - 1e-11));
        }
    }
}

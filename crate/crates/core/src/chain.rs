//! Reversible Markov chains on small vertex sets: spectra, conductance,
//! ergodic flow, powers and total-variation mixing.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::eigen::{jacobi_eigen, SymmetricEigen};
use crate::error::{Error, Result};
use crate::graph::EXHAUSTIVE_LIMIT;
use crate::vertex_set::VertexSet;

/// Dense spectral computations are limited to this many states.
pub const SPECTRAL_LIMIT: usize = 512;
/// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-11;
/// Tolerance for row sums and detailed balance.
pub const BALANCE_TOL: f64 = 1e-12;

/// Row-stochastic `n × n` matrix with a strictly positive stationary vector
/// satisfying detailed balance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversibleChain {
    n: usize,
    matrix: Vec<f64>,
    pi: Vec<f64>,
    lazy: bool,
}

impl ReversibleChain {
    /// Validates stochasticity, positivity of `pi` and detailed balance.
    pub fn from_parts(n: usize, matrix: Vec<f64>, pi: Vec<f64>, lazy: bool) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: matrix.len(),
            });
        }
        if pi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: pi.len(),
            });
        }
        if matrix.iter().any(|&p| !(0.0..=1.0 + BALANCE_TOL).contains(&p)) {
            return Err(Error::NotReversible("entries must lie in [0, 1]".into()));
        }
        if pi.iter().any(|&p| p.is_nan() || p <= 0.0) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::NotReversible(
                "stationary vector must be positive and sum to 1".into(),
            ));
        }
        let chain = Self::from_parts_unchecked(n, matrix, pi, lazy);
        let rows = chain.row_sum_error();
        if rows > BALANCE_TOL {
            return Err(Error::NotReversible(format!("row sums deviate from 1 by {rows:e}")));
        }
        let balance = chain.detailed_balance_error();
        if balance > BALANCE_TOL {
            return Err(Error::NotReversible(format!(
                "detailed balance violated by {balance:e}"
            )));
        }
        Ok(chain)
    }

    pub(crate) fn from_parts_unchecked(n: usize, matrix: Vec<f64>, pi: Vec<f64>, lazy: bool) -> Self {
        Self { n, matrix, pi, lazy }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.n + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.n..(x + 1) * self.n]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_lazy(&self) -> bool {
        self.lazy
    }

    pub fn mass(&self, set: &VertexSet) -> f64 {
        set.iter().map(|v| self.pi[v]).sum()
    }

    pub fn row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|x| (self.row(x).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |π(x)P(x,y) - π(y)P(y,x)|`.
    pub fn detailed_balance_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.n {
            for y in x + 1..self.n {
                worst = worst.max((self.pi[x] * self.p(x, y) - self.pi[y] * self.p(y, x)).abs());
            }
        }
        worst
    }

    /// `(P + I) / 2`.
    pub fn lazy(&self) -> Self {
        let mut matrix: Vec<f64> = self.matrix.iter().map(|p| p / 2.0).collect();
        for x in 0..self.n {
            matrix[x * self.n + x] += 0.5;
        }
        Self::from_parts_unchecked(self.n, matrix, self.pi.clone(), true)
    }

    /// `μ ↦ μ P`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(x)) {
                *o += m * p;
            }
        }
        out
    }

    /// Symmetrized ergodic flow matrix `F(x, y) = π(x)P(x, y)`.
    fn flow_matrix(&self) -> Vec<f64> {
        let n = self.n;
        let mut f = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                f[x * n + y] = 0.5 * (self.pi[x] * self.p(x, y) + self.pi[y] * self.p(y, x));
            }
        }
        f
    }

    fn check_set(&self, set: &VertexSet) -> Result<()> {
        if set.universe() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: set.universe(),
            });
        }
        Ok(())
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in row.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                *o += aik * bkj;
            }
        }
    });
    out
}

/// `P^m` by repeated squaring; the stationary vector is carried over.
pub fn power_chain(chain: &ReversibleChain, m: usize) -> Result<ReversibleChain> {
    if m == 0 {
        return Err(Error::InvalidParameter("chain power must be >= 1".into()));
    }
    let n = chain.n;
    let mut result: Option<Vec<f64>> = None;
    let mut base = chain.matrix.clone();
    let mut e = m;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => matmul(&r, &base, n),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = matmul(&base, &base, n);
    }
    Ok(ReversibleChain::from_parts_unchecked(
        n,
        result.expect("m >= 1"),
        chain.pi.clone(),
        chain.lazy && m == 1,
    ))
}

/// Spectrum of a reversible chain.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// `γ = 1 - λ₂`.
    pub gap: f64,
    pub lambda_min: f64,
    /// Gap of `(P + I)/2`, equal to `γ/2`.
    pub lazy_gap: f64,
    pub sweeps: usize,
    /// `‖V Λ Vᵀ - S‖_F` for the symmetrized matrix `S`.
    pub reconstruction_error: f64,
}

/// Full spectrum via the similarity `D^{1/2} P D^{-1/2}` and cyclic Jacobi.
pub fn spectral_gap(chain: &ReversibleChain) -> Result<SpectralReport> {
    let (eigen, sym) = symmetric_eigen(chain)?;
    let reconstruction_error = eigen.reconstruction_error(&sym);
    let values = eigen.values;
    let lambda2 = values.get(1).copied().unwrap_or(values[0]);
    let gap = 1.0 - lambda2;
    Ok(SpectralReport {
        gap,
        lambda_min: *values.last().expect("n >= 1"),
        lazy_gap: gap / 2.0,
        sweeps: eigen.sweeps,
        reconstruction_error,
        eigenvalues: values,
    })
}

fn symmetric_eigen(chain: &ReversibleChain) -> Result<(SymmetricEigen, Vec<f64>)> {
    let n = chain.n;
    if n > SPECTRAL_LIMIT {
        return Err(Error::SizeGuard {
            what: "dense spectral decomposition",
            limit: SPECTRAL_LIMIT,
            actual: n,
        });
    }
    let balance = chain.detailed_balance_error();
    if balance > BALANCE_TOL {
        return Err(Error::NotReversible(format!(
            "detailed balance violated by {balance:e}"
        )));
    }
    let root: Vec<f64> = chain.pi.iter().map(|p| p.sqrt()).collect();
    let mut sym = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            let forward = root[x] * chain.p(x, y) / root[y];
            let backward = root[y] * chain.p(y, x) / root[x];
            sym[x * n + y] = 0.5 * (forward + backward);
        }
    }
    Ok((jacobi_eigen(&sym, n, JACOBI_TOL)?, sym))
}

/// `Q(S, S^c) = Σ_{x ∈ S, y ∉ S} π(x) P(x, y)`.
pub fn ergodic_flow(chain: &ReversibleChain, set: &VertexSet) -> Result<f64> {
    chain.check_set(set)?;
    if set.is_empty() || set.len() == chain.n {
        return Err(Error::ImproperSubset);
    }
    Ok(set
        .iter()
        .map(|x| {
            let row = chain.row(x);
            chain.pi[x] * (0..chain.n).filter(|&y| !set.contains(y)).map(|y| row[y]).sum::<f64>()
        })
        .sum())
}

/// `Σ_{x ∈ from, y ∉ avoid} π(x) P(x, y)`.
pub fn flow_between(chain: &ReversibleChain, from: &VertexSet, avoid: &VertexSet) -> f64 {
    from.iter()
        .map(|x| {
            let row = chain.row(x);
            chain.pi[x]
                * (0..chain.n)
                    .filter(|&y| !avoid.contains(y))
                    .map(|y| row[y])
                    .sum::<f64>()
        })
        .sum()
}

/// `Q(S, S^c) / π(S)` for a set with `0 < π(S) <= 1/2`; an upper bound on Φ.
pub fn candidate_conductance(chain: &ReversibleChain, set: &VertexSet) -> Result<f64> {
    let flow = ergodic_flow(chain, set)?;
    let mass = chain.mass(set);
    if mass > 0.5 + BALANCE_TOL {
        return Err(Error::Precondition(format!(
            "candidate set has stationary mass {mass} > 1/2"
        )));
    }
    Ok(flow / mass)
}

#[derive(Clone, Debug, Serialize)]
pub struct Conductance {
    pub phi: f64,
    pub argmin: VertexSet,
}

/// Bits enumerated incrementally inside one chunk of the subset sweep.
const CHUNK_BITS: usize = 12;
/// Ratios within this relative distance count as ties.
const TIE_RTOL: f64 = 1e-12;

/// Exhaustive `Φ = min_{0 < π(S) <= 1/2} Q(S, S^c)/π(S)`; ties resolved
/// toward the numerically smallest bitmask.
pub fn edge_conductance_exact(chain: &ReversibleChain) -> Result<Conductance> {
    let n = chain.n;
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::SizeGuard {
            what: "exhaustive edge conductance",
            limit: EXHAUSTIVE_LIMIT,
            actual: n,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("conductance needs at least two states".into()));
    }
    let f = chain.flow_matrix();
    let pi = &chain.pi;
    let low_bits = n.min(CHUNK_BITS);
    let chunks = 1u64 << (n - low_bits);
    let full = (1u64 << n) - 1;

    let per_chunk: Vec<Option<(f64, u64)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let base = chunk << low_bits;
            let mut inner = vec![0.0; n];
            let mut mass = 0.0;
            let mut flow = 0.0;
            for x in (0..n).filter(|&x| base >> x & 1 == 1) {
                mass += pi[x];
                for y in 0..n {
                    inner[y] += f[x * n + y];
                    if base >> y & 1 == 0 {
                        flow += f[x * n + y];
                    }
                }
            }
            let mut best: Option<(f64, u64)> = None;
            let mut low = 0u64;
            loop {
                let mask = base | low;
                if mask != 0 && mask != full && mass > 0.0 && mass <= 0.5 + BALANCE_TOL {
                    let ratio = flow / mass;
                    if best.is_none_or(|(b, _)| ratio < b - TIE_RTOL * b) {
                        best = Some((ratio, mask));
                    }
                }
                if low == (1 << low_bits) - 1 {
                    break;
                }
                // increment: clear trailing ones, then set the next bit
                let next = low + 1;
                let changed = low ^ next;
                for v in (0..low_bits).filter(|&v| changed >> v & 1 == 1) {
                    let fvv = f[v * n + v];
                    if low >> v & 1 == 1 {
                        flow += 2.0 * inner[v] - pi[v] - fvv;
                        mass -= pi[v];
                        for y in 0..n {
                            inner[y] -= f[v * n + y];
                        }
                    } else {
                        flow += pi[v] - fvv - 2.0 * inner[v];
                        mass += pi[v];
                        for y in 0..n {
                            inner[y] += f[v * n + y];
                        }
                    }
                }
                low = next;
            }
            best
        })
        .collect();

    let mut best: Option<(f64, u64)> = None;
    for candidate in per_chunk.into_iter().flatten() {
        best = match best {
            Some((b, m)) if candidate.0 >= b - TIE_RTOL * b => Some((b, m)),
            _ => Some(candidate),
        };
    }
    let (phi, mask) = best.ok_or_else(|| Error::InvalidParameter("no admissible set".into()))?;
    Ok(Conductance {
        phi,
        argmin: VertexSet::from_mask(n, mask)?,
    })
}

/// Outcome of a total-variation mixing computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingTime {
    /// Smallest `t >= 1` with `‖P^t(u, ·) - π‖_TV <= 1/4`, or `None` if the
    /// threshold was not met within `horizon` steps.
    pub t: Option<usize>,
    pub horizon: usize,
    pub final_tv: f64,
    /// Whether the TV distance never increased along the run.
    pub tv_monotone: bool,
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Iterates `δ_u P^t` until TV distance to π is at most 1/4, up to `10 n²` steps.
pub fn mixing_time_tv(chain: &ReversibleChain, start: usize) -> Result<MixingTime> {
    let n = chain.n;
    if start >= n {
        return Err(Error::VertexOutOfRange { index: start, n });
    }
    let horizon = 10 * n * n;
    let mut mu = vec![0.0; n];
    mu[start] = 1.0;
    let mut previous = total_variation(&mu, &chain.pi);
    let mut monotone = true;
    for t in 1..=horizon {
        mu = chain.push_forward(&mu);
        let tv = total_variation(&mu, &chain.pi);
        monotone &= tv <= previous + 1e-12;
        previous = tv;
        if tv <= 0.25 {
            return Ok(MixingTime {
                t: Some(t),
                horizon,
                final_tv: tv,
                tv_monotone: monotone,
            });
        }
    }
    Ok(MixingTime {
        t: None,
        horizon,
        final_tv: previous,
        tv_monotone: monotone,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheegerAudit {
    pub phi: f64,
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `Φ²/2 <= γ <= 2Φ` with `1e-9` slack.
pub fn cheeger_audit(chain: &ReversibleChain) -> Result<CheegerAudit> {
    let phi = edge_conductance_exact(chain)?.phi;
    let gap = spectral_gap(chain)?.gap;
    let lower = phi * phi / 2.0;
    let upper = 2.0 * phi;
    Ok(CheegerAudit {
        phi,
        gap,
        lower,
        upper,
        holds: lower <= gap + 1e-9 && gap <= upper + 1e-9,
    })
}

fn round12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to_12(*x))
}

fn round12_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|&x| round_to_12(x)))
}

fn round12_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_to_12(*v)),
        None => s.serialize_none(),
    }
}

pub fn round_to_12(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Serialized form of a spectral analysis; `phi` is present only when the
/// exhaustive conductance search was within its size guard.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    #[serde(serialize_with = "round12_vec")]
    pub eigenvalues: Vec<f64>,
    #[serde(serialize_with = "round12")]
    pub gap: f64,
    #[serde(serialize_with = "round12")]
    pub lazy_gap: f64,
    #[serde(serialize_with = "round12_opt")]
    pub phi: Option<f64>,
    pub phi_argmin: Option<VertexSet>,
}

pub fn spectral_summary(chain: &ReversibleChain) -> Result<SpectralSummary> {
    let report = spectral_gap(chain)?;
    let conductance = if chain.n() <= EXHAUSTIVE_LIMIT {
        Some(edge_conductance_exact(chain)?)
    } else {
        None
    };
    Ok(SpectralSummary {
        eigenvalues: report.eigenvalues,
        gap: report.gap,
        lazy_gap: report.lazy_gap,
        phi: conductance.as_ref().map(|c| c.phi),
        phi_argmin: conductance.map(|c| c.argmin),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Graph, GraphKind};
    use crate::weighting::simple_random_walk;

    fn graph(kind: GraphKind) -> Graph {
        generate(&kind, 0).unwrap()
    }

    fn set(n: usize, v: &[usize]) -> VertexSet {
        VertexSet::from_indices(n, v.iter().copied()).unwrap()
    }

    #[test]
    fn complete_graph_spectrum() {
        let srw = simple_random_walk(&graph(GraphKind::Complete { n: 4 }));
        let report = spectral_gap(&srw).unwrap();
        assert!((report.eigenvalues[0] - 1.0).abs() < 1e-9);
        for &l in &report.eigenvalues[1..] {
            assert!((l + 1.0 / 3.0).abs() < 1e-9);
        }
        assert!((report.gap - 4.0 / 3.0).abs() < 1e-9);
        assert!(report.reconstruction_error < 1e-8);
    }

    #[test]
    fn cycle_spectrum_and_lazy_gap() {
        let srw = simple_random_walk(&graph(GraphKind::Cycle { n: 6 }));
        let report = spectral_gap(&srw).unwrap();
        assert!((report.gap - 0.5).abs() < 1e-9);
        assert!((report.lambda_min + 1.0).abs() < 1e-9);
        let lazy = spectral_gap(&srw.lazy()).unwrap();
        assert!((lazy.gap - 0.25).abs() < 1e-9);
        assert!((lazy.gap - report.lazy_gap).abs() < 1e-9);
        assert!(srw.lazy().pi() == srw.pi());
        assert!((0..6).all(|x| srw.lazy().p(x, x) >= 0.5));
    }

    #[test]
    fn flow_examples() {
        let k4 = simple_random_walk(&graph(GraphKind::Complete { n: 4 }));
        assert!((ergodic_flow(&k4, &set(4, &[0])).unwrap() - 0.25).abs() < 1e-15);
        assert!((candidate_conductance(&k4, &set(4, &[0])).unwrap() - 1.0).abs() < 1e-12);
        let c6 = simple_random_walk(&graph(GraphKind::Cycle { n: 6 }));
        let s = set(6, &[0, 1, 2]);
        assert!((ergodic_flow(&c6, &s).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let back = ergodic_flow(&c6, &s.complement()).unwrap();
        assert!((back - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(ergodic_flow(&c6, &VertexSet::empty(6)), Err(Error::ImproperSubset));
        assert_eq!(ergodic_flow(&c6, &VertexSet::full(6)), Err(Error::ImproperSubset));
        assert!(candidate_conductance(&c6, &set(6, &[0, 1, 2, 3])).is_err());
    }

    #[test]
    fn conductance_examples() {
        let k4 = simple_random_walk(&graph(GraphKind::Complete { n: 4 }));
        let c = edge_conductance_exact(&k4).unwrap();
        assert!((c.phi - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.argmin.to_vec(), vec![0, 1]);
        let c6 = simple_random_walk(&graph(GraphKind::Cycle { n: 6 }));
        let c = edge_conductance_exact(&c6).unwrap();
        assert!((c.phi - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.argmin.to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn powers() {
        let c6 = simple_random_walk(&graph(GraphKind::Cycle { n: 6 }));
        assert_eq!(power_chain(&c6, 1).unwrap(), c6);
        let sq = power_chain(&c6, 2).unwrap();
        assert_eq!(sq.pi(), c6.pi());
        let mu = sq.push_forward(c6.pi());
        assert!(total_variation(&mu, c6.pi()) < 1e-15);
        let base = spectral_gap(&c6).unwrap();
        let mut expected: Vec<f64> = base.eigenvalues.iter().map(|l| l * l).collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        let got = spectral_gap(&sq).unwrap();
        for (a, b) in got.eigenvalues.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(power_chain(&c6, 0).is_err());
    }

    #[test]
    fn mixing_examples() {
        let k4 = simple_random_walk(&graph(GraphKind::Complete { n: 4 }));
        let m = mixing_time_tv(&k4, 2).unwrap();
        assert_eq!(m.t, Some(1));
        assert!((m.final_tv - 0.25).abs() < 1e-15);
        let c6 = simple_random_walk(&graph(GraphKind::Cycle { n: 6 }));
        assert_eq!(mixing_time_tv(&c6, 0).unwrap().t, None);
        let lazy = c6.lazy();
        let from0 = mixing_time_tv(&lazy, 0).unwrap();
        assert!(from0.t.is_some() && from0.tv_monotone);
        assert_eq!(mixing_time_tv(&lazy, 4).unwrap().t, from0.t);
    }

    #[test]
    fn cheeger_examples() {
        for kind in [GraphKind::Complete { n: 4 }, GraphKind::Cycle { n: 6 }] {
            let audit = cheeger_audit(&simple_random_walk(&graph(kind))).unwrap();
            assert!(audit.holds, "{audit:?}");
        }
    }

    #[test]
    fn rejects_non_reversible() {
        // directed 3-cycle: stochastic, uniform stationary, not reversible
        let m = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let pi = vec![1.0 / 3.0; 3];
        assert!(matches!(
            ReversibleChain::from_parts(3, m.clone(), pi.clone(), false),
            Err(Error::NotReversible(_))
        ));
        let chain = ReversibleChain::from_parts_unchecked(3, m, pi, false);
        assert!(matches!(spectral_gap(&chain), Err(Error::NotReversible(_))));
    }

    #[test]
    fn summary_rounds_to_twelve_places() {
        let k4 = simple_random_walk(&graph(GraphKind::Complete { n: 4 }));
        let json = serde_json::to_value(spectral_summary(&k4).unwrap()).unwrap();
        assert_eq!(json["gap"].as_f64().unwrap(), round_to_12(4.0 / 3.0));
        assert_eq!(json["phi_argmin"], serde_json::json!([0, 1]));
    }
}

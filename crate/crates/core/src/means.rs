//! The biased one-step operator, power means, and majorization.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

/// `B_{ε,b}(v) = Σ ((1-ε)/d + ε b_i) v_i`.
pub fn biased_operator(eps: f64, b: &[f64], v: &[f64]) -> Result<f64> {
    if b.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            actual: b.len(),
        });
    }
    if v.is_empty() {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("ε must lie in [0, 1], got {eps}")));
    }
    if b.iter().any(|&x| x < -TOL) || (b.iter().sum::<f64>() - 1.0).abs() > TOL {
        return Err(Error::InvalidParameter("b must be a probability vector".into()));
    }
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter("v must be non-negative".into()));
    }
    let d = v.len() as f64;
    Ok(b.iter()
        .zip(v)
        .map(|(&bi, &vi)| ((1.0 - eps) / d + eps * bi) * vi)
        .sum())
}

/// `M_r(v) = (Σ v_i^r / d)^{1/r}` for `r >= 1`; `r = ∞` gives `max v`.
pub fn power_mean(r: f64, v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("empty vector".into()));
    }
    if r.is_nan() || r < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "power mean order must be >= 1, got {r}"
        )));
    }
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidParameter("v must be non-negative".into()));
    }
    let max = v.iter().copied().fold(0.0, f64::max);
    if r == f64::INFINITY || max == 0.0 {
        return Ok(max);
    }
    // scale by the maximum to avoid overflow for large r
    let mean = v.iter().map(|&x| (x / max).powf(r)).sum::<f64>() / v.len() as f64;
    Ok(max * mean.powf(1.0 / r))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn le(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs + TOL * rhs.abs().max(1.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityAudit {
    /// `B(v) <= (1 + ε(d-1)) M₁(v)`.
    pub mean_bound: InequalityCheck,
    /// `B(v) <= exp(4/d^η) M_{(1+η)/η}(v)`, evaluated only when `ε <= d^{-2η}`.
    pub power_bound: Option<InequalityCheck>,
}

impl ConvexityAudit {
    pub fn holds(&self) -> bool {
        self.mean_bound.holds && self.power_bound.as_ref().is_none_or(|c| c.holds)
    }
}

pub fn conv_lemma_audit(eps: f64, eta: f64, v: &[f64], b: &[f64]) -> Result<ConvexityAudit> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("η must lie in (0, 1], got {eta}")));
    }
    let lhs = biased_operator(eps, b, v)?;
    let d = v.len() as f64;
    let mean_bound = InequalityCheck::le(lhs, (1.0 + eps * (d - 1.0)) * power_mean(1.0, v)?);
    let power_bound = if eps <= d.powf(-2.0 * eta) {
        let rhs = (4.0 / d.powf(eta)).exp() * power_mean((1.0 + eta) / eta, v)?;
        Some(InequalityCheck::le(lhs, rhs))
    } else {
        None
    };
    Ok(ConvexityAudit {
        mean_bound,
        power_bound,
    })
}

fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `x` majorizes `y`: equal totals and every descending prefix sum of `x`
/// at least that of `y` (relative tolerance `1e-12`).
pub fn majorizes(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let (xs, ys) = (sorted_desc(x), sorted_desc(y));
    let scale = xs.iter().chain(&ys).map(|v| v.abs()).sum::<f64>().max(1.0);
    let tol = TOL * scale;
    let (mut px, mut py) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        if px < py - tol {
            return Ok(false);
        }
    }
    Ok((px - py).abs() <= tol)
}

/// Checks `majorizes(x, y) ⇒ M_r(x) >= M_r(y)`.
pub fn schur_audit(r: f64, x: &[f64], y: &[f64]) -> Result<bool> {
    if !majorizes(x, y)? {
        return Ok(true);
    }
    let (mx, my) = (power_mean(r, x)?, power_mean(r, y)?);
    Ok(mx >= my - TOL * my.max(1.0))
}

/// A Robin Hood transfer: moves `δ ∈ [0, x_i - x_j]` from a richer entry
/// `i` to a poorer entry `j`. The result is majorized by the input.
pub fn robin_hood<R: Rng + ?Sized>(x: &mut [f64], rng: &mut R) {
    let d = x.len();
    if d < 2 {
        return;
    }
    let (mut i, mut j) = (rng.random_range(0..d), rng.random_range(0..d));
    if x[i] < x[j] {
        std::mem::swap(&mut i, &mut j);
    }
    let delta = rng.random::<f64>() * (x[i] - x[j]);
    x[i] -= delta;
    x[j] += delta;
}

/// A random non-negative vector of length `d` and the image of
/// `transfers` Robin Hood transfers applied to it, so that the first
/// majorizes the second.
pub fn majorization_pair<R: Rng + ?Sized>(d: usize, transfers: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..d)
        .map(|_| {
            let u: f64 = rng.random();
            // mix of small and large magnitudes, some exact zeros
            if u < 0.1 {
                0.0
            } else {
                (rng.random_range(-3.0..3.0f64)).exp()
            }
        })
        .collect();
    let mut y = x.clone();
    for _ in 0..transfers {
        robin_hood(&mut y, rng);
    }
    (x, y)
}

/// `(1-ε+dε b_i)_i`, the weight profile of the biased operator scaled by `d`.
pub fn bias_profile(eps: f64, b: &[f64]) -> Vec<f64> {
    let d = b.len() as f64;
    b.iter().map(|&bi| 1.0 - eps + d * eps * bi).collect()
}

/// `(1-ε+dε, 1-ε, .., 1-ε)`, which majorizes every [`bias_profile`].
pub fn extreme_profile(eps: f64, d: usize) -> Vec<f64> {
    let mut v = vec![1.0 - eps; d];
    v[0] += d as f64 * eps;
    v
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RandomAuditSummary {
    pub draws: usize,
    pub violations: usize,
    /// Draws where the second inequality's precondition held.
    pub power_checked: usize,
}

fn random_distribution<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    if rng.random_bool(0.25) {
        let mut b = vec![0.0; d];
        b[rng.random_range(0..d)] = 1.0;
        return b;
    }
    let raw: Vec<f64> = (0..d)
        .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Checks both convexity inequalities on `draws` random `(v, b)` pairs
/// with `v ∈ [0, 1]^d`.
pub fn random_convexity_audit(d: usize, eps: f64, eta: f64, draws: usize, seed: u64) -> Result<RandomAuditSummary> {
    use rand::SeedableRng;
    if d == 0 {
        return Err(Error::InvalidParameter("d must be positive".into()));
    }
    let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(seed);
    let mut out = RandomAuditSummary::default();
    for _ in 0..draws {
        let v: Vec<f64> = (0..d).map(|_| rng.random()).collect();
        let b = random_distribution(d, &mut rng);
        let audit = conv_lemma_audit(eps, eta, &v, &b)?;
        out.draws += 1;
        out.power_checked += usize::from(audit.power_bound.is_some());
        out.violations += usize::from(!audit.holds());
    }
    Ok(out)
}

/// Schur-convexity over `pairs` Robin Hood pairs of dimension `2..=8`,
/// each checked at every order in `orders`.
pub fn random_schur_audit(orders: &[f64], pairs: usize, seed: u64) -> Result<RandomAuditSummary> {
    use rand::SeedableRng;
    let mut rng = rand_xoshiro::SplitMix64::seed_from_u64(seed);
    let mut out = RandomAuditSummary::default();
    for _ in 0..pairs {
        let d = rng.random_range(2..=8);
        let transfers = rng.random_range(1..=6);
        let (x, y) = majorization_pair(d, transfers, &mut rng);
        out.draws += 1;
        if !majorizes(&x, &y)? {
            out.violations += 1;
            continue;
        }
        for &r in orders {
            out.power_checked += 1;
            out.violations += usize::from(!schur_audit(r, &x, &y)?);
        }
    }
    Ok(out)
}

//! Parameter arithmetic for the oscillation-rigidity guarantee.
//!
//! The guarantee only kicks in at astronomically large ambient dimension
//! (the universal constant defaults to 1/200, so an admissible k >= 1 needs
//! n beyond e^2000-scale). Everything here therefore works in log space and
//! accepts the dimension either exactly or as log n.

use crate::error::{Error, Result};
use crate::stats::Kahan;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Default universal constant of the dimension formula.
pub const DEFAULT_C: f64 = 1.0 / 200.0;

/// Ambient dimension, exact or log-space. Admissible dimensions are far too
/// large for integers, so all arithmetic runs on `log_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dim {
    log_n: f64,
    exact: Option<u64>,
}

impl Dim {
    pub fn exact(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        Ok(Self {
            log_n: (n as f64).ln(),
            exact: Some(n),
        })
    }

    pub fn from_log(log_n: f64) -> Result<Self> {
        if !log_n.is_finite() || log_n < 0.0 {
            return Err(Error::InvalidInput(format!(
                "log n must be finite and >= 0, got {log_n}"
            )));
        }
        Ok(Self { log_n, exact: None })
    }

    /// Natural logarithm of n.
    pub fn log(&self) -> f64 {
        self.log_n
    }

    pub fn exact_value(&self) -> Option<u64> {
        self.exact
    }

    /// Parse `<integer>` or `log:<real>`.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("log:") {
            let v: f64 = rest
                .parse()
                .map_err(|e| Error::Parse(format!("bad log dimension '{rest}': {e}")))?;
            Self::from_log(v)
        } else {
            let n: u64 = s
                .parse()
                .map_err(|e| Error::Parse(format!("bad dimension '{s}': {e}")))?;
            Self::exact(n)
        }
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.exact {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "log:{}", self.log_n),
        }
    }
}

fn validate_eps_alpha(eps: f64, alpha: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// The full symbol tuple (n, eps, alpha, k, p, delta, c). Construction
/// computes p = (1+alpha) k and delta from the closed formulas bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub dim: Dim,
    pub eps: f64,
    pub alpha: f64,
    pub k: u64,
    pub p: f64,
    pub delta: f64,
    pub c: f64,
}

impl BoundParams {
    pub fn new(dim: Dim, eps: f64, alpha: f64, k: u64) -> Result<Self> {
        Self::with_constant(dim, eps, alpha, k, DEFAULT_C)
    }

    pub fn with_constant(dim: Dim, eps: f64, alpha: f64, k: u64, c: f64) -> Result<Self> {
        validate_eps_alpha(eps, alpha)?;
        if k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidInput(format!("constant c must be positive, got {c}")));
        }
        Ok(Self {
            dim,
            eps,
            alpha,
            k,
            p: (1.0 + alpha) * k as f64,
            delta: coordinate_threshold(eps, alpha, k)?,
            c,
        })
    }
}

/// Subtorus dimension with a guaranteed eps-oscillation subtorus:
/// floor(c log n / (log log(3n) + |log eps|)). Zero means the guarantee
/// says nothing at this dimension.
pub fn guaranteed_subtorus_dim(dim: Dim, eps: f64) -> Result<u64> {
    guaranteed_subtorus_dim_with_constant(dim, eps, DEFAULT_C)
}

pub fn guaranteed_subtorus_dim_with_constant(dim: Dim, eps: f64, c: f64) -> Result<u64> {
    validate_eps_alpha(eps, 1.0)?;
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("constant c must be positive, got {c}")));
    }
    let log_n = dim.log();
    let denom = (3f64.ln() + log_n).ln() + eps.ln().abs();
    Ok((c * log_n / denom).floor().max(0.0) as u64)
}

/// Largest k satisfying the standing admissibility bound
/// k <= c log n / (log log(5n) + |log eps| + |log alpha|), or 0 if none.
pub fn max_admissible_k(dim: Dim, eps: f64, alpha: f64) -> Result<u64> {
    max_admissible_k_with_constant(dim, eps, alpha, DEFAULT_C)
}

pub fn max_admissible_k_with_constant(dim: Dim, eps: f64, alpha: f64, c: f64) -> Result<u64> {
    validate_eps_alpha(eps, alpha)?;
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("constant c must be positive, got {c}")));
    }
    let log_n = dim.log();
    let denom = (5f64.ln() + log_n).ln() + eps.ln().abs() + alpha.ln().abs();
    Ok((c * log_n / denom).floor().max(0.0) as u64)
}

/// The coordinate-size threshold delta = alpha/(16(1+alpha)) * eps/k^(3/2)
/// that splits a unit vector into few large and many small coordinates.
pub fn coordinate_threshold(eps: f64, alpha: f64, k: u64) -> Result<f64> {
    validate_eps_alpha(eps, alpha)?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    Ok(alpha / (16.0 * (1.0 + alpha)) * eps / (k as f64).powf(1.5))
}

/// One log-space inequality: holds iff lhs_log <= rhs_log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs_log: f64, rhs_log: f64) -> Self {
        Self {
            lhs_log,
            rhs_log,
            holds: lhs_log <= rhs_log,
        }
    }

    /// rhs - lhs in log scale; positive means the inequality holds with room.
    pub fn slack(&self) -> f64 {
        self.rhs_log - self.lhs_log
    }
}

/// Diagnostics for the admissibility chain at one parameter tuple, all
/// evaluated in log space so enormous n stay representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub params: BoundParams,
    /// (2k/(delta^2 n))^(1/p) <= sqrt(k) delta — the balance between the
    /// avoidance-failure tail and the small-coordinate mass.
    pub tail_balance: InequalityCheck,
    /// k <= n/2
    pub k_at_most_half_n: InequalityCheck,
    /// (32 k/alpha)^(2p+8) <= n — the sufficient polynomial growth condition.
    pub growth_2p_plus_8: InequalityCheck,
    /// (32 k/alpha)^(12k) <= n — the stronger condition that implies it.
    pub growth_12k: InequalityCheck,
    /// Both guaranteed conclusions (tail balance and k <= n/2) hold.
    pub holds: bool,
}

/// Evaluate the admissibility chain for (n, eps, alpha, k).
pub fn admissibility_report(dim: Dim, eps: f64, alpha: f64, k: u64) -> Result<AdmissibilityReport> {
    let params = BoundParams::new(dim, eps, alpha, k)?;
    let log_n = dim.log();
    let kf = k as f64;
    let log_delta = params.delta.ln();

    let tail_lhs = {
        let mut acc = Kahan::new();
        acc.add((2.0 * kf).ln());
        acc.add(-2.0 * log_delta);
        acc.add(-log_n);
        acc.value() / params.p
    };
    let tail_rhs = {
        let mut acc = Kahan::new();
        acc.add(0.5 * kf.ln());
        acc.add(log_delta);
        acc.value()
    };
    let tail_balance = InequalityCheck::new(tail_lhs, tail_rhs);

    let k_at_most_half_n = InequalityCheck::new(kf.ln(), log_n - 2f64.ln());

    let log_base = (32.0 * kf / alpha).ln();
    let growth_2p_plus_8 = InequalityCheck::new((2.0 * params.p + 8.0) * log_base, log_n);
    let growth_12k = InequalityCheck::new(12.0 * kf * log_base, log_n);

    Ok(AdmissibilityReport {
        params,
        tail_balance,
        k_at_most_half_n,
        growth_2p_plus_8,
        growth_12k,
        holds: tail_balance.holds && k_at_most_half_n.holds,
    })
}

/// Exact probability that a uniform k-subset of {0, .., n-1} avoids a fixed
/// m-subset: the hypergeometric product of (n-m-j)/(n-j) over j < k.
pub fn avoidance_probability_exact(n: u64, k: u64, m: u64) -> Result<BigRational> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if m > n {
        return Err(Error::InvalidInput(format!("need m <= n, got m = {m}, n = {n}")));
    }
    if m + k > n {
        return Ok(BigRational::zero());
    }
    let mut acc = BigRational::one();
    for j in 0..k {
        acc *= BigRational::new(BigInt::from(n - m - j), BigInt::from(n - j));
    }
    Ok(acc)
}

/// Avoidance probability as f64: exact rational arithmetic for n <= 64,
/// a plain floating product beyond.
pub fn avoidance_probability(n: u64, k: u64, m: u64) -> Result<f64> {
    if n <= 64 {
        return Ok(avoidance_probability_exact(n, k, m)?
            .to_f64()
            .expect("small rational fits f64"));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if m > n {
        return Err(Error::InvalidInput(format!("need m <= n, got m = {m}, n = {n}")));
    }
    if m + k > n {
        return Ok(0.0);
    }
    let mut acc = 1.0f64;
    for j in 0..k {
        acc *= (n - m - j) as f64 / (n - j) as f64;
    }
    Ok(acc)
}

/// Closed-form lower bound max(0, 1 - 2k/(delta^2 n)) on the probability
/// that a uniform k-subset avoids the above-threshold coordinates.
pub fn avoidance_lower_bound(n: u64, k: u64, delta: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
    }
    Ok((1.0 - 2.0 * k as f64 / (delta * delta * n as f64)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::for_each_subset;
    use rand::{Rng, SeedableRng};

    #[test]
    fn guaranteed_dim_desk_scale_examples() {
        assert_eq!(
            guaranteed_subtorus_dim(Dim::exact(1_000_000).unwrap(), 1.0).unwrap(),
            0
        );
        assert_eq!(guaranteed_subtorus_dim(Dim::exact(2).unwrap(), 1.0).unwrap(), 0);
        // the raw ratio at n = 1e6 is about 0.0256
        let d = Dim::exact(1_000_000).unwrap();
        let ratio = DEFAULT_C * d.log() / ((3f64.ln() + d.log()).ln());
        assert!((ratio - 0.02556).abs() < 1e-4, "ratio = {ratio}");
    }

    #[test]
    fn guaranteed_dim_monotone_in_n() {
        let mut prev = 0;
        for j in 1..=18u32 {
            let n = 10u64.pow(j);
            let k = guaranteed_subtorus_dim(Dim::exact(n).unwrap(), 1.0).unwrap();
            assert!(k >= prev, "k({n}) = {k} < {prev}");
            prev = k;
        }
        // and eventually positive at synthetic log-space dimensions
        let huge = Dim::from_log(1e4).unwrap();
        assert!(guaranteed_subtorus_dim(huge, 1.0).unwrap() >= 1);
    }

    #[test]
    fn max_admissible_examples_and_monotonicity() {
        assert_eq!(
            max_admissible_k(Dim::exact(1_000_000_000).unwrap(), 1.0, 1.0).unwrap(),
            0
        );
        let dim = Dim::from_log(5000.0).unwrap();
        let mut prev = u64::MAX;
        for alpha in [1.0, 0.5, 0.25, 0.1, 0.01] {
            let k = max_admissible_k(dim, 1.0, alpha).unwrap();
            assert!(k <= prev, "k not monotone in |log alpha|");
            prev = k;
        }
        assert!(max_admissible_k(dim, 1.0, 1.0).unwrap() >= 1);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(coordinate_threshold(1.0, 1.0, 1).unwrap(), 1.0 / 32.0);
        let d = coordinate_threshold(0.5, 1.0, 4).unwrap();
        assert!((d - 0.5 / 256.0).abs() < 1e-18);
        // linear in eps
        let a = coordinate_threshold(0.3, 0.7, 5).unwrap();
        let b = coordinate_threshold(0.6, 0.7, 5).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-18);
    }

    #[test]
    fn bound_params_invariants() {
        let p = BoundParams::new(Dim::from_log(3000.0).unwrap(), 0.5, 0.75, 3).unwrap();
        assert_eq!(p.p, 1.75 * 3.0);
        assert_eq!(p.delta, coordinate_threshold(0.5, 0.75, 3).unwrap());
        assert_eq!(p.c, DEFAULT_C);
    }

    #[test]
    fn admissible_tuples_pass_the_chain() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut nontrivial = 0;
        for _ in 0..2000 {
            let log_n = rng.gen_range(1.0..1e4);
            let eps = rng.gen_range(1e-3..1.0f64);
            let alpha = rng.gen_range(1e-3..1.0f64);
            let dim = Dim::from_log(log_n).unwrap();
            let k = max_admissible_k(dim, eps, alpha).unwrap();
            if k == 0 {
                continue;
            }
            nontrivial += 1;
            let rep = admissibility_report(dim, eps, alpha, k).unwrap();
            assert!(
                rep.holds,
                "chain failed at log n = {log_n}, eps = {eps}, alpha = {alpha}, k = {k}: {rep:?}"
            );
        }
        assert!(nontrivial > 200, "only {nontrivial} admissible tuples drawn");
    }

    #[test]
    fn desk_scale_tuple_fails_with_diagnostics() {
        let rep = admissibility_report(Dim::exact(100).unwrap(), 1.0, 1.0, 5).unwrap();
        assert!(!rep.holds);
        assert!(!rep.tail_balance.holds, "tail balance should be the failing link");
        assert!(rep.k_at_most_half_n.holds);
        assert!(rep.tail_balance.slack() < 0.0);
    }

    #[test]
    fn strong_growth_implies_weak_growth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let dim = Dim::from_log(rng.gen_range(1.0..1e4)).unwrap();
            let eps = rng.gen_range(1e-3..1.0f64);
            let alpha = rng.gen_range(1e-3..1.0f64);
            let k = rng.gen_range(1..50u64);
            let rep = admissibility_report(dim, eps, alpha, k).unwrap();
            if rep.growth_12k.holds {
                assert!(rep.growth_2p_plus_8.holds, "{rep:?}");
            }
        }
    }

    #[test]
    fn avoidance_probability_examples() {
        assert!((avoidance_probability(10, 2, 3).unwrap() - 7.0 / 15.0).abs() < 1e-15);
        assert_eq!(avoidance_probability(10, 2, 0).unwrap(), 1.0);
        assert_eq!(avoidance_probability(10, 3, 10).unwrap(), 0.0);
        assert!(avoidance_probability(10, 0, 1).is_err());
        assert!(avoidance_probability(10, 11, 1).is_err());
    }

    #[test]
    fn avoidance_matches_brute_force_enumeration() {
        // exact equality against direct subset counting for all n <= 12
        for n in 1..=12u64 {
            for k in 1..=n {
                for m in 0..=n {
                    let mut avoid = 0u64;
                    let mut total = 0u64;
                    for_each_subset(n as usize, k as usize, |s| {
                        total += 1;
                        if s.iter().all(|&j| j as u64 >= m) {
                            avoid += 1;
                        }
                    });
                    let brute = BigRational::new(BigInt::from(avoid), BigInt::from(total));
                    let formula = avoidance_probability_exact(n, k, m).unwrap();
                    assert_eq!(brute, formula, "n={n} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn avoidance_chain_small_exhaustive() {
        // product >= (1 - m/(n-k+1))^k >= 1 - km/(n-k+1), exactly
        for n in 1..=30u64 {
            for k in 1..=n.min(5) {
                for m in 0..=(n - k) {
                    let exact = avoidance_probability_exact(n, k, m).unwrap();
                    let base = BigRational::one()
                        - BigRational::new(BigInt::from(m), BigInt::from(n - k + 1));
                    let mut mid = BigRational::one();
                    for _ in 0..k {
                        mid *= base.clone();
                    }
                    let last = BigRational::one()
                        - BigRational::new(BigInt::from(k * m), BigInt::from(n - k + 1));
                    assert!(exact >= mid, "n={n} k={k} m={m}");
                    assert!(mid >= last, "n={n} k={k} m={m}");
                }
            }
        }
    }

    #[test]
    fn avoidance_lower_bound_clamps() {
        assert_eq!(avoidance_lower_bound(10, 2, 0.01).unwrap(), 0.0);
        let d = 1.0;
        let b = avoidance_lower_bound(100, 2, d).unwrap();
        assert!((b - (1.0 - 4.0 / 100.0)).abs() < 1e-15);
    }

    #[test]
    fn avoidance_bound_is_actually_a_lower_bound() {
        // whenever the bound is positive it sits below the exact probability
        // for every m <= 1/delta^2 (the threshold cardinality cap)
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let n = rng.gen_range(4..60u64);
            let k = rng.gen_range(1..=(n / 2));
            let delta = rng.gen_range(0.05..1.0f64);
            let m_max = (1.0 / (delta * delta)).floor() as u64;
            let bound = avoidance_lower_bound(n, k, delta).unwrap();
            for m in 0..=m_max.min(n) {
                let exact = avoidance_probability(n, k, m).unwrap();
                assert!(
                    exact >= bound - 1e-12,
                    "n={n} k={k} m={m} delta={delta}: {exact} < {bound}"
                );
            }
        }
    }

    #[test]
    fn dim_parsing() {
        assert_eq!(Dim::parse("42").unwrap(), Dim::exact(42).unwrap());
        let d = Dim::parse("log:2500.5").unwrap();
        assert_eq!(d.log(), 2500.5);
        assert!(d.exact_value().is_none());
        assert!(Dim::parse("0").is_err());
        assert!(Dim::parse("log:-1").is_err());
        assert!(Dim::parse("abc").is_err());
    }
}

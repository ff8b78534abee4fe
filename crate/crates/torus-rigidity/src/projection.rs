//! Moments of random coordinate projections, exactly and by Monte Carlo,
//! plus restricted gradient p-norms over coordinate subtori.
//!
//! For a uniform k-subset J and the projection P_J that zeroes coordinates
//! off J, the quantity (E |P_J v|^p)^(1/p) is tiny compared to |v| at
//! admissible parameters; this module computes it, the closed-form bound
//! alpha/(8(1+alpha)) * eps/k * |v|, and the subtorus-restricted analogue
//! (integral over M of |P_J grad f|^p)^(1/p).

use crate::combinat::{binomial, for_each_subset};
use crate::error::{Error, Result};
use crate::sampling::{sample_subset, SeedSpec};
use crate::stats::{bootstrap_root_se, mean_std_error, root_delta_std_error, Kahan};
use crate::torus::{SubtorusSpec, TorusPoint};
use crate::zoo::FunctionSpec;
use rand::Rng;
use serde::Serialize;

/// Enumeration cap for exact moments; beyond it, use Monte Carlo.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Bound-comparison tolerance.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ExactEnumeration,
    MonteCarlo,
}

impl std::fmt::Display for MomentMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MomentMethod::ExactEnumeration => "exact-enumeration",
            MomentMethod::MonteCarlo => "monte-carlo",
        })
    }
}

/// (E |P_J v|^p)^(1/p), optionally compared against the closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentResult {
    pub method: MomentMethod,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub vnorm: f64,
    pub value: f64,
    /// zero for the exact method
    pub std_error: f64,
    pub bound: Option<f64>,
    pub satisfied: Option<bool>,
}

impl MomentResult {
    /// Attach a bound; `satisfied` becomes value <= bound + BOUND_TOL.
    pub fn against_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self.satisfied = Some(self.value <= bound + BOUND_TOL);
        self
    }
}

fn validate_vector(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::InvalidInput("vector must be nonempty".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("vector coordinates must be finite".into()));
    }
    Ok(v.iter().map(|x| x * x).sum::<f64>().sqrt())
}

fn validate_kp(n: usize, k: usize, p: f64) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

/// Exact (E |P_J v|^p)^(1/p) by enumerating all C(n, k) subsets with
/// compensated summation. Errors when the enumeration exceeds the budget.
pub fn exact_projection_moment(v: &[f64], k: usize, p: f64) -> Result<MomentResult> {
    let n = v.len();
    let vnorm = validate_vector(v)?;
    validate_kp(n, k, p)?;
    let count = binomial(n as u64, k as u64);
    if count > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: count,
            budget: ENUMERATION_BUDGET,
            hint: "use mc_projection_moment instead".into(),
        });
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let mut acc = Kahan::new();
    for_each_subset(n, k, |subset| {
        let mass: f64 = subset.iter().map(|&j| sq[j]).sum();
        acc.add(mass.powf(p / 2.0));
    });
    let mean = acc.value() / count as f64;
    Ok(MomentResult {
        method: MomentMethod::ExactEnumeration,
        n,
        k,
        p,
        vnorm,
        value: mean.max(0.0).powf(1.0 / p),
        std_error: 0.0,
        bound: None,
        satisfied: None,
    })
}

/// Monte Carlo (E |P_J v|^p)^(1/p) over uniform random subsets, with a
/// delta-method standard error (bootstrap near zero). Deterministic in the
/// seed triple.
pub fn mc_projection_moment(
    v: &[f64],
    k: usize,
    p: f64,
    samples: u64,
    seed: SeedSpec,
) -> Result<MomentResult> {
    let n = v.len();
    let vnorm = validate_vector(v)?;
    validate_kp(n, k, p)?;
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let mut powers = Vec::with_capacity(samples as usize);
    for i in 0..samples {
        let subset = sample_subset(n, k, seed.with_index(i))?;
        let mass: f64 = subset.iter().map(|&j| sq[j]).sum();
        powers.push(mass.powf(p / 2.0));
    }
    let (mean, se_mean) = mean_std_error(&powers);
    let value = mean.max(0.0).powf(1.0 / p);
    let std_error = if value < 1e-9 * vnorm.max(1.0) {
        bootstrap_root_se(&powers, p, 100, seed.master_seed ^ 0xb007)
    } else {
        root_delta_std_error(mean, se_mean, p)
    };
    Ok(MomentResult {
        method: MomentMethod::MonteCarlo,
        n,
        k,
        p,
        vnorm,
        value,
        std_error,
        bound: None,
        satisfied: None,
    })
}

/// Closed-form bound alpha/(8(1+alpha)) * eps/k * |v| on the projected
/// moment at admissible parameters.
pub fn projected_moment_bound(eps: f64, alpha: f64, k: u64, vnorm: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) || !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(
            "eps and alpha must lie in (0, 1]".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if !(vnorm >= 0.0) {
        return Err(Error::InvalidInput(format!("|v| must be >= 0, got {vnorm}")));
    }
    Ok(alpha / (8.0 * (1.0 + alpha)) * eps / k as f64 * vnorm)
}

/// Moment estimate with p = (1+alpha) k, compared against the bound.
/// `samples = None` selects exact enumeration.
pub fn check_moment_bound(
    v: &[f64],
    eps: f64,
    alpha: f64,
    k: usize,
    samples: Option<u64>,
    seed: SeedSpec,
) -> Result<MomentResult> {
    let p = (1.0 + alpha) * k as f64;
    let vnorm = validate_vector(v)?;
    let result = match samples {
        None => exact_projection_moment(v, k, p)?,
        Some(s) => mc_projection_moment(v, k, p, s, seed)?,
    };
    let bound = projected_moment_bound(eps, alpha, k as u64, vnorm)?;
    Ok(result.against_bound(bound))
}

/// Quadrature rule for subtorus integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Midpoint lattice with the given points per axis (m^k evaluations).
    Grid { points_per_axis: usize },
    /// Uniform Monte Carlo with the given sample count.
    MonteCarlo { samples: u64 },
}

/// Estimate of (integral over M of |P_J grad f|^p)^(1/p).
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedPNorm {
    pub value: f64,
    /// zero for grid quadrature
    pub std_error: f64,
    pub evaluations: u64,
    /// non-smooth points skipped (grid) or redrawn (Monte Carlo)
    pub skipped: u64,
}

/// Restricted gradient components along the free axes of the subtorus,
/// from the analytic gradient or the finite-difference fallback.
fn restricted_grad(f: &FunctionSpec, sub: &SubtorusSpec, x: &TorusPoint) -> Result<Vec<f64>> {
    let full = if f.has_analytic_gradient() {
        f.grad(x)?
    } else {
        if !f.is_smooth_at(x)? {
            return Err(Error::NonDifferentiablePoint);
        }
        f.grad_fd(x)?
    };
    Ok(sub.free_axes().iter().map(|&j| full[j]).collect())
}

/// (integral over M of |grad_M f|^p)^(1/p) where grad_M f = P_J grad f,
/// by midpoint-grid quadrature or seeded Monte Carlo. Non-smooth points are
/// skipped (they have measure zero in the zoo); the count is reported.
pub fn restricted_grad_pnorm(
    f: &FunctionSpec,
    sub: &SubtorusSpec,
    p: f64,
    quadrature: Quadrature,
    seed: SeedSpec,
) -> Result<RestrictedPNorm> {
    if f.ambient_dim() != sub.ambient_dim() {
        return Err(Error::DimensionMismatch(f.ambient_dim(), sub.ambient_dim()));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
    }
    let k = sub.k();
    match quadrature {
        Quadrature::Grid { points_per_axis: m } => {
            if m < 2 {
                return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
            }
            let total = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
            if total > ENUMERATION_BUDGET {
                return Err(Error::BudgetExceeded {
                    needed: total,
                    budget: ENUMERATION_BUDGET,
                    hint: "use Monte Carlo quadrature instead".into(),
                });
            }
            let mut acc = Kahan::new();
            let mut used = 0u64;
            let mut skipped = 0u64;
            let mut failure: Option<Error> = None;
            let mut u = vec![0.0f64; k];
            crate::combinat::for_each_lattice(&vec![m; k], |idx| {
                if failure.is_some() {
                    return;
                }
                for (ui, &i) in u.iter_mut().zip(idx) {
                    *ui = (i as f64 + 0.5) / m as f64;
                }
                let x = match sub.embed(&u) {
                    Ok(x) => x,
                    Err(e) => {
                        failure = Some(e);
                        return;
                    }
                };
                match restricted_grad(f, sub, &x) {
                    Ok(g) => {
                        let norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
                        acc.add(norm.powf(p));
                        used += 1;
                    }
                    Err(Error::NonDifferentiablePoint) => skipped += 1,
                    Err(e) => failure = Some(e),
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            if used == 0 {
                return Err(Error::NonDifferentiablePoint);
            }
            Ok(RestrictedPNorm {
                value: (acc.value() / used as f64).max(0.0).powf(1.0 / p),
                std_error: 0.0,
                evaluations: used + skipped,
                skipped,
            })
        }
        Quadrature::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::InvalidInput("need at least one sample".into()));
            }
            let mut powers = Vec::with_capacity(samples as usize);
            let mut skipped = 0u64;
            for i in 0..samples {
                let mut rng = seed.with_index(i).rng();
                let mut done = false;
                for _ in 0..10 {
                    let u: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
                    let x = sub.embed(&u)?;
                    match restricted_grad(f, sub, &x) {
                        Ok(g) => {
                            let norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
                            powers.push(norm.powf(p));
                            done = true;
                            break;
                        }
                        Err(Error::NonDifferentiablePoint) => skipped += 1,
                        Err(e) => return Err(e),
                    }
                }
                if !done {
                    return Err(Error::NonDifferentiablePoint);
                }
            }
            let (mean, se_mean) = mean_std_error(&powers);
            let value = mean.max(0.0).powf(1.0 / p);
            let std_error = if value < 1e-9 {
                bootstrap_root_se(&powers, p, 100, seed.master_seed ^ 0x9e57)
            } else {
                root_delta_std_error(mean, se_mean, p)
            };
            Ok(RestrictedPNorm {
                value,
                std_error,
                evaluations: samples + skipped,
                skipped,
            })
        }
    }
}

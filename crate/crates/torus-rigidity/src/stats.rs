//! Small statistics helpers shared by the estimators and the test batteries.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier-compensated accumulator. Exact enumeration sums up to 10^7
/// terms; naive summation loses digits the oracle comparisons need.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut acc = Kahan::new();
    for &x in xs {
        acc.add(x);
    }
    let mean = acc.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut sq = Kahan::new();
    for &x in xs {
        let d = x - mean;
        sq.add(d * d);
    }
    let var = sq.value() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Standard error of `mean^(1/p)` from the standard error of the mean,
/// by the delta method. Degenerates as the mean approaches zero; callers
/// that can hit zero should bootstrap instead (see `bootstrap_root_se`).
pub fn root_delta_std_error(mean: f64, se_mean: f64, p: f64) -> f64 {
    if mean <= 0.0 {
        return f64::INFINITY;
    }
    let value = mean.powf(1.0 / p);
    se_mean / (p * value.powf(p - 1.0))
}

/// Spread of `mean^(1/p)` over `resamples` bootstrap resamples of `xs`.
/// Used where the delta method degenerates (value near zero).
pub fn bootstrap_root_se(xs: &[f64], p: f64, resamples: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut roots = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut acc = Kahan::new();
        for _ in 0..n {
            acc.add(xs[rng.gen_range(0..n)]);
        }
        let m = (acc.value() / n as f64).max(0.0);
        roots.push(m.powf(1.0 / p));
    }
    let (_, se) = mean_std_error(&roots);
    // mean_std_error returns the se of the bootstrap mean; the spread of the
    // bootstrap distribution itself is sqrt(resamples) times larger.
    se * (resamples as f64).sqrt()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
/// Sorts internally.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic p-value of the KS statistic (Kolmogorov distribution tail).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        p += term;
        sign = -sign;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Upper-tail p-value of a chi-square statistic with `dof` degrees of freedom.
pub fn chi_square_pvalue(stat: f64, dof: f64) -> f64 {
    if stat <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof).expect("dof > 0");
    1.0 - dist.cdf(stat)
}

//! The default verification battery: every module's key identities and
//! inequalities at fixed seeds, in a few seconds, with one pass/fail line
//! per check. The injected-bug mode perturbs the coordinate threshold by
//! 10% to prove the battery actually notices a broken formula.

use crate::bounds::{
    admissibility_report, avoidance_probability_exact, coordinate_threshold, max_admissible_k,
    Dim,
};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::morrey::{
    build_path, density_qnorm_integral, density_qnorm_mc, mc_chord_verify, PathMode,
};
use crate::oscillation::grid_osc;
use crate::projection::{exact_projection_moment, mc_projection_moment};
use crate::sampling::{sample_subtorus, SeedSpec};
use crate::torus::{Segment, TorusPoint};
use crate::zoo::{FunctionSpec, TrigTerm};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct BatteryCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub duration_ms: u64,
}

#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub checks: Vec<BatteryCheck>,
    pub passed: bool,
}

impl BatteryReport {
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                format!(
                    "{} {:<32} {:>6} ms  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.duration_ms,
                    c.detail
                )
            })
            .collect();
        lines.push(format!(
            "battery: {}/{} checks passed",
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        ));
        lines
    }
}

fn run_check(
    checks: &mut Vec<BatteryCheck>,
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) {
    let started = Instant::now();
    let (passed, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    checks.push(BatteryCheck {
        name,
        passed,
        detail,
        duration_ms: started.elapsed().as_millis() as u64,
    });
}

/// Run every check; `config.master_seed` keys the randomized ones and
/// `config.inject_delta_bug` feeds a perturbed threshold into the formula
/// consistency check (which must then fail).
pub fn run_battery(config: &ExperimentConfig) -> Result<BatteryReport> {
    let seed = config.master_seed;
    let bug_factor = if config.inject_delta_bug { 1.1 } else { 1.0 };
    let mut checks = Vec::new();

    run_check(&mut checks, "threshold-formula-consistency", || {
        // the threshold in use must match alpha/(16(1+alpha)) eps k^-3/2
        // written out independently here
        let mut worst: f64 = 0.0;
        for &eps in &[0.05, 0.3, 1.0] {
            for &alpha in &[0.1, 0.5, 1.0] {
                for k in 1..=6u64 {
                    let used = coordinate_threshold(eps, alpha, k)? * bug_factor;
                    let independent =
                        alpha / (16.0 * (1.0 + alpha)) * eps / (k as f64).powf(1.5);
                    worst = worst.max((used - independent).abs() / independent);
                }
            }
        }
        Ok((
            worst <= 1e-15,
            format!("worst relative deviation {worst:.3e}"),
        ))
    });

    run_check(&mut checks, "hypergeometric-chain", || {
        for n in 1..=40u64 {
            for k in 1..=n.min(5) {
                for m in 0..=(n - k) {
                    let exact = avoidance_probability_exact(n, k, m)?;
                    let base = BigRational::one()
                        - BigRational::new(BigInt::from(m), BigInt::from(n - k + 1));
                    let mut mid = BigRational::one();
                    for _ in 0..k {
                        mid *= base.clone();
                    }
                    let last = BigRational::one()
                        - BigRational::new(BigInt::from(k * m), BigInt::from(n - k + 1));
                    if !(exact >= mid && mid >= last) {
                        return Ok((false, format!("chain broken at n={n} k={k} m={m}")));
                    }
                }
            }
        }
        Ok((true, "exact chain holds for n <= 40, k <= 5".into()))
    });

    run_check(&mut checks, "avoidance-vs-enumeration", || {
        for n in 1..=12u64 {
            for k in 1..=n {
                for m in 0..=n {
                    let mut avoid = 0u64;
                    let mut total = 0u64;
                    crate::combinat::for_each_subset(n as usize, k as usize, |s| {
                        total += 1;
                        if s.iter().all(|&j| j as u64 >= m) {
                            avoid += 1;
                        }
                    });
                    let brute = BigRational::new(BigInt::from(avoid), BigInt::from(total));
                    if brute != avoidance_probability_exact(n, k, m)? {
                        return Ok((false, format!("mismatch at n={n} k={k} m={m}")));
                    }
                }
            }
        }
        Ok((true, "product formula equals enumeration for n <= 12".into()))
    });

    run_check(&mut checks, "moment-exact-vs-mc", || {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xa1);
        let mut within = 0;
        let total = 10;
        for t in 0..total {
            let v: Vec<f64> = loop {
                let raw: Vec<f64> = (0..12).map(|_| rng.gen::<f64>() - 0.5).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    break raw.into_iter().map(|x| x / norm).collect();
                }
            };
            let p = if t % 2 == 0 { 2.0 } else { 4.0 };
            let exact = exact_projection_moment(&v, 3, p)?;
            let mc = mc_projection_moment(&v, 3, p, 20_000, SeedSpec::new(seed, 900 + t, 0))?;
            if (mc.value - exact.value).abs() <= 4.0 * mc.std_error {
                within += 1;
            }
        }
        Ok((
            within >= total - 1,
            format!("{within}/{total} within 4 sigma"),
        ))
    });

    run_check(&mut checks, "moment-basis-closed-form", || {
        let mut worst: f64 = 0.0;
        for (n, k, p) in [(8usize, 2usize, 2.0), (10, 3, 4.0), (12, 4, 3.0)] {
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            let want = (k as f64 / n as f64).powf(1.0 / p);
            let got = exact_projection_moment(&e1, k, p)?.value;
            worst = worst.max((got - want).abs());
        }
        Ok((worst <= 1e-12, format!("max |error| {worst:.3e}")))
    });

    run_check(&mut checks, "moment-split-bound", || {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xb2);
        for _ in 0..30 {
            let n = rng.gen_range(4..13usize);
            let k = rng.gen_range(1..=(n / 2));
            let eps = rng.gen_range(0.05..1.0f64);
            let alpha = rng.gen_range(0.05..1.0f64);
            let p = (1.0 + alpha) * k as f64;
            let delta = coordinate_threshold(eps, alpha, k as u64)? * bug_factor;
            let v: Vec<f64> = loop {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-9 {
                    break raw.into_iter().map(|x| x / norm).collect();
                }
            };
            let moment_p = exact_projection_moment(&v, k, p)?.value.powf(p);
            let bound = 2.0 * k as f64 / (delta * delta * n as f64)
                + (k as f64 * delta * delta).powf(p / 2.0);
            if moment_p > bound + 1e-12 {
                return Ok((
                    false,
                    format!("split bound violated at n={n} k={k} eps={eps} alpha={alpha}"),
                ));
            }
        }
        Ok((true, "split bound holds on 30 random unit vectors".into()))
    });

    run_check(&mut checks, "admissibility-chain", || {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xc3);
        let mut nontrivial = 0;
        for _ in 0..1000 {
            let dim = Dim::from_log(rng.gen_range(1.0..1e4))?;
            let eps = rng.gen_range(1e-3..1.0f64);
            let alpha = rng.gen_range(1e-3..1.0f64);
            let k = max_admissible_k(dim, eps, alpha)?;
            if k == 0 {
                continue;
            }
            nontrivial += 1;
            let rep = admissibility_report(dim, eps, alpha, k)?;
            if !rep.holds {
                return Ok((false, format!("chain failed at {rep:?}")));
            }
            if rep.growth_12k.holds && !rep.growth_2p_plus_8.holds {
                return Ok((false, "strong growth did not imply weak growth".into()));
            }
        }
        Ok((
            nontrivial >= 100,
            format!("{nontrivial}/1000 admissible tuples, all pass"),
        ))
    });

    run_check(&mut checks, "density-constant-pin", || {
        for k in [2u64, 3] {
            let closed = density_qnorm_integral(k, 1.0)?;
            let mc = density_qnorm_mc(k, 1.0, 20_000, SeedSpec::new(seed, 700 + k, 0))?;
            if (mc.value - closed).abs() > 4.0 * mc.std_error {
                return Ok((
                    false,
                    format!("k={k}: mc {} vs closed {closed} (se {})", mc.value, mc.std_error),
                ));
            }
        }
        // the doubled pi exponent must be rejected at k = 3
        let k = 3u64;
        let p = 2.0 * k as f64;
        let q = p / (p - 1.0);
        let closed = density_qnorm_integral(k, 1.0)?;
        let doubled = closed * PI.powf(-((k - 1) as f64 / 2.0) * (q - 1.0));
        let mc = density_qnorm_mc(k, 1.0, 20_000, SeedSpec::new(seed, 703, 0))?;
        let separation = (mc.value - doubled).abs() / mc.std_error;
        Ok((
            separation > 5.0,
            format!("doubled-pi variant {separation:.1} sigma away"),
        ))
    });

    run_check(&mut checks, "chord-bound", || {
        let n = 5;
        let specs = [
            FunctionSpec::dist_to_point(n, TorusPoint::wrap(&[0.2, 0.4, 0.6, 0.8, 0.1])?)?,
            FunctionSpec::smoothed_dist(n, TorusPoint::origin(n), 0.2)?,
            FunctionSpec::trig_poly(
                n,
                vec![TrigTerm {
                    amplitude: 1.0,
                    freq: vec![1, 0, -2, 0, 1],
                    phase: 0.7,
                }],
            )?,
        ];
        for (i, f) in specs.iter().enumerate() {
            let sub = sample_subtorus(n, 2, SeedSpec::new(seed, 800 + i as u64, 0))?;
            let x = TorusPoint::wrap(&[0.15, 0.35])?;
            let y = TorusPoint::wrap(&[0.55, 0.6])?;
            let seg = Segment::new(x, y)?;
            let rep =
                mc_chord_verify(f, &sub, &seg, 1.0, 2000, SeedSpec::new(seed, 810 + i as u64, 0))?;
            if !rep.satisfied || !rep.triangle_ok {
                return Ok((false, format!("{} violates the chord bound", f.family_name())));
            }
        }
        Ok((true, "3 zoo functions within the chord bound".into()))
    });

    run_check(&mut checks, "path-invariants", || {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xd4);
        for k in 1..=5usize {
            for _ in 0..200 {
                let x = TorusPoint::wrap(&(0..k).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())?;
                let y = TorusPoint::wrap(&(0..k).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())?;
                build_path(&x, &y, PathMode::EqualSubdivision)?.validate()?;
                if k >= 2 {
                    build_path(&x, &y, PathMode::IsoscelesClosing)?.validate()?;
                }
            }
        }
        Ok((true, "1800 random paths valid in both modes".into()))
    });

    run_check(&mut checks, "oscillation-enclosure", || {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xe5);
        for trial in 0..10u64 {
            let n = rng.gen_range(3..6usize);
            let k = rng.gen_range(1..=2usize);
            let sub = sample_subtorus(n, k, SeedSpec::new(seed, 850 + trial, 0))?;
            let axis = rng.gen_range(0..n);
            let f = FunctionSpec::sawtooth(n, axis)?;
            let truth = if sub.free_axes().contains(&axis) { 0.5 } else { 0.0 };
            let cert = grid_osc(&f, &sub, 20)?;
            if !(cert.osc_lower <= truth + 1e-12 && truth <= cert.osc_upper + 1e-12) {
                return Ok((
                    false,
                    format!(
                        "[{}, {}] misses {truth}",
                        cert.osc_lower, cert.osc_upper
                    ),
                ));
            }
        }
        Ok((true, "10 sawtooth certificates enclose the oracle".into()))
    });

    run_check(&mut checks, "gradient-consistency", || {
        let n = 4;
        let center = TorusPoint::wrap(&[0.15, 0.45, 0.75, 0.05])?;
        let zoo = [
            FunctionSpec::dist_to_point(n, center.clone())?,
            FunctionSpec::sawtooth_at(n, 1, 0.2)?,
            FunctionSpec::max_sawtooth_at(n, &[0, 2], &[0.0, 0.4])?,
            FunctionSpec::trig_poly(
                n,
                vec![TrigTerm {
                    amplitude: 0.4,
                    freq: vec![1, -1, 0, 2],
                    phase: 0.3,
                }],
            )?,
            FunctionSpec::smoothed_dist(n, center, 0.15)?,
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xf6);
        for f in &zoo {
            let mut checked = 0;
            while checked < 30 {
                let x =
                    TorusPoint::wrap(&(0..n).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())?;
                if f.smoothness_margin(&x)? < 1e-4 {
                    continue;
                }
                let ga = f.grad(&x)?;
                let gf = f.grad_fd(&x)?;
                let diff: f64 = ga
                    .iter()
                    .zip(&gf)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = ga.iter().map(|a| a * a).sum::<f64>().sqrt();
                if diff / norm.max(1e-3) > 1e-5 {
                    return Ok((
                        false,
                        format!("{}: gradient mismatch {diff:.3e}", f.family_name()),
                    ));
                }
                checked += 1;
            }
        }
        Ok((true, "analytic matches finite differences, 5 families".into()))
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(BatteryReport { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, ExperimentKind};

    #[test]
    fn default_battery_passes() {
        let cfg = ExperimentConfig::new(ExperimentKind::Battery);
        let report = run_battery(&cfg).unwrap();
        for line in report.summary_lines() {
            eprintln!("{line}");
        }
        assert!(report.passed);
    }

    #[test]
    fn injected_delta_bug_is_detected() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Battery);
        cfg.inject_delta_bug = true;
        let report = run_battery(&cfg).unwrap();
        assert!(!report.passed);
        let consistency = report
            .checks
            .iter()
            .find(|c| c.name == "threshold-formula-consistency")
            .unwrap();
        assert!(!consistency.passed, "the perturbed threshold must be caught");
    }
}

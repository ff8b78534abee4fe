//! Catalog of locally-Lipschitz test functions on T^n.
//!
//! Five families, all wrap-invariant, each with a declared (conservative)
//! global Lipschitz constant and an analytic gradient away from an explicit,
//! measure-zero non-smooth locus:
//!
//! * `dist-to-point`   f(x) = dist(x, x0), L = 1
//! * `sawtooth`        f(x) = dist_T1(x_i, offset), L = 1
//! * `max-sawtooth`    max of sawtooths over an index set, L = 1
//! * `trig-poly`       sum of a_j sin(2 pi m_j . x + phi_j), integer m_j,
//!                     amplitudes rescaled at construction so L = 1
//! * `smoothed-dist`   everywhere-smooth surrogate of dist-to-point with a
//!                     quadratic cap of width c at the center, L = amplitude
//!
//! Gradient estimators skip-and-resample the non-smooth loci; the loci have
//! measure zero so integrals are unaffected beyond machine scale.

use crate::error::{Error, Result};
use crate::sampling::SeedSpec;
use crate::stats::{bootstrap_root_se, mean_std_error, root_delta_std_error};
use crate::torus::{circle_dist, signed_circle_diff, wrap_coord, TorusPoint};
use rand::Rng;
use std::f64::consts::PI;

/// Proximity below which a point counts as sitting on a non-smooth locus
/// (cut locus, sawtooth kink, argmax tie).
pub const NONSMOOTH_TOL: f64 = 1e-9;

/// Central finite-difference step for the fallback gradient.
pub const FD_STEP: f64 = 1e-6;

/// Safety margin applied when rescaling a function to unit gradient p-norm.
pub const NORMALIZE_MARGIN: f64 = 0.99;

/// One term of a trigonometric polynomial: amplitude * sin(2 pi m.x + phase).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub freq: Vec<i64>,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    DistToPoint {
        center: TorusPoint,
    },
    Sawtooth {
        axis: usize,
        offset: f64,
    },
    MaxSawtooth {
        axes: Vec<usize>,
        offsets: Vec<f64>,
    },
    TrigPoly {
        terms: Vec<TrigTerm>,
    },
    SmoothedDist {
        center: TorusPoint,
        smoothing: f64,
        amplitude: f64,
    },
}

/// A member of the zoo: family plus the contract data the certifiers need.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    family: Family,
    ambient_dim: usize,
    lipschitz: f64,
    analytic_gradient: bool,
}

/// Monte Carlo estimate of the gradient p-norm (integral over the
/// unit-volume torus, reported as the 1/p-th power of the p-th moment).
#[derive(Debug, Clone, PartialEq)]
pub struct GradPNormEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sample_count: u64,
    pub p: f64,
    /// true when the finite-difference fallback supplied the gradients
    pub used_fd: bool,
    /// non-smooth points skipped and redrawn
    pub resampled: u64,
}

fn sawtooth_value(x: f64, offset: f64) -> f64 {
    circle_dist(x, offset)
}

/// Slope of dist_T1(x, offset) with respect to x, or None at a kink.
fn sawtooth_slope(x: f64, offset: f64) -> Option<f64> {
    let u = wrap_coord(x - offset);
    if circle_dist(u, 0.0) < NONSMOOTH_TOL || (u - 0.5).abs() < NONSMOOTH_TOL {
        return None;
    }
    Some(if u < 0.5 { 1.0 } else { -1.0 })
}

fn conservative_trig_lipschitz(terms: &[TrigTerm]) -> f64 {
    terms
        .iter()
        .map(|t| {
            let fnorm = t.freq.iter().map(|&m| (m as f64) * (m as f64)).sum::<f64>().sqrt();
            t.amplitude.abs() * 2.0 * PI * fnorm
        })
        .sum()
}

impl FunctionSpec {
    // ------------------------------------------------------------------
    // constructors
    // ------------------------------------------------------------------

    pub fn dist_to_point(n: usize, center: TorusPoint) -> Result<Self> {
        if center.dim() != n {
            return Err(Error::DimensionMismatch(n, center.dim()));
        }
        Ok(Self {
            family: Family::DistToPoint { center },
            ambient_dim: n,
            lipschitz: 1.0,
            analytic_gradient: true,
        })
    }

    pub fn sawtooth(n: usize, axis: usize) -> Result<Self> {
        Self::sawtooth_at(n, axis, 0.0)
    }

    pub fn sawtooth_at(n: usize, axis: usize, offset: f64) -> Result<Self> {
        if axis >= n {
            return Err(Error::InvalidInput(format!("axis {axis} out of range for n = {n}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidInput("offset must be finite".into()));
        }
        Ok(Self {
            family: Family::Sawtooth {
                axis,
                offset: wrap_coord(offset),
            },
            ambient_dim: n,
            lipschitz: 1.0,
            analytic_gradient: true,
        })
    }

    pub fn max_sawtooth(n: usize, axes: &[usize]) -> Result<Self> {
        Self::max_sawtooth_at(n, axes, &vec![0.0; axes.len()])
    }

    pub fn max_sawtooth_at(n: usize, axes: &[usize], offsets: &[f64]) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("max-sawtooth needs at least one axis".into()));
        }
        if axes.len() != offsets.len() {
            return Err(Error::DimensionMismatch(axes.len(), offsets.len()));
        }
        let mut sorted = axes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != axes.len() {
            return Err(Error::InvalidInput("max-sawtooth axes must be distinct".into()));
        }
        if axes.iter().any(|&a| a >= n) {
            return Err(Error::InvalidInput(format!("axis out of range for n = {n}")));
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput("offsets must be finite".into()));
        }
        Ok(Self {
            family: Family::MaxSawtooth {
                axes: axes.to_vec(),
                offsets: offsets.iter().map(|&o| wrap_coord(o)).collect(),
            },
            ambient_dim: n,
            lipschitz: 1.0,
            analytic_gradient: true,
        })
    }

    /// Trigonometric polynomial, rescaled so the declared Lipschitz
    /// constant (sum of |a_j| 2 pi |m_j|) equals 1. Zero-amplitude input is
    /// kept as the zero function with the trivially valid constant L = 1.
    pub fn trig_poly(n: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        let raw = Self::trig_poly_raw(n, terms)?;
        let lip = raw.lipschitz;
        if lip > 0.0 && (lip - 1.0).abs() > 1e-15 {
            raw.scaled(1.0 / lip)
        } else {
            Ok(raw)
        }
    }

    /// Trigonometric polynomial with amplitudes kept as given; the declared
    /// Lipschitz constant is the conservative sum of |a_j| 2 pi |m_j|.
    pub fn trig_poly_raw(n: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        for t in &terms {
            if t.freq.len() != n {
                return Err(Error::DimensionMismatch(n, t.freq.len()));
            }
            if t.freq.iter().all(|&m| m == 0) {
                return Err(Error::InvalidInput(
                    "trig-poly frequency vectors must be nonzero".into(),
                ));
            }
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::InvalidInput("trig-poly parameters must be finite".into()));
            }
        }
        let lip = conservative_trig_lipschitz(&terms);
        Ok(Self {
            family: Family::TrigPoly { terms },
            ambient_dim: n,
            // the zero function takes the smallest positive constant: the
            // declared L stays > 0 while certificates collapse immediately
            lipschitz: if lip > 0.0 { lip } else { f64::MIN_POSITIVE },
            analytic_gradient: true,
        })
    }

    /// The zero function, represented as an empty trigonometric polynomial.
    pub fn constant_zero(n: usize) -> Self {
        Self::trig_poly_raw(n, Vec::new()).expect("empty trig poly is valid")
    }

    /// Smooth surrogate of dist-to-point: per axis the squared distance is
    /// replaced by sin^2(pi t)/pi^2 (exact to second order at t = 0), and
    /// the center kink is capped via sqrt(. + c^2) - c. The gradient norm
    /// is strictly below the amplitude everywhere, so L = amplitude.
    pub fn smoothed_dist(n: usize, center: TorusPoint, smoothing: f64) -> Result<Self> {
        Self::smoothed_dist_scaled(n, center, smoothing, 1.0)
    }

    pub fn smoothed_dist_scaled(
        n: usize,
        center: TorusPoint,
        smoothing: f64,
        amplitude: f64,
    ) -> Result<Self> {
        if center.dim() != n {
            return Err(Error::DimensionMismatch(n, center.dim()));
        }
        if !(smoothing > 0.0 && smoothing <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "smoothing parameter must lie in (0, 1], got {smoothing}"
            )));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "amplitude must be positive and finite, got {amplitude}"
            )));
        }
        Ok(Self {
            family: Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            },
            ambient_dim: n,
            lipschitz: amplitude,
            analytic_gradient: true,
        })
    }

    // ------------------------------------------------------------------
    // accessors
    // ------------------------------------------------------------------

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::DistToPoint { .. } => "dist-to-point",
            Family::Sawtooth { .. } => "sawtooth",
            Family::MaxSawtooth { .. } => "max-sawtooth",
            Family::TrigPoly { .. } => "trig-poly",
            Family::SmoothedDist { .. } => "smoothed-dist",
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Declared global Lipschitz constant (possibly conservative, never an
    /// under-estimate: certified oscillation bounds depend on this).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.analytic_gradient
    }

    /// Copy that pretends to have no analytic gradient, forcing estimators
    /// onto the finite-difference fallback.
    pub fn without_analytic_gradient(&self) -> Self {
        Self {
            analytic_gradient: false,
            ..self.clone()
        }
    }

    // ------------------------------------------------------------------
    // evaluation
    // ------------------------------------------------------------------

    pub fn eval(&self, x: &TorusPoint) -> Result<f64> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, x.dim()));
        }
        Ok(self.eval_canonical(x.coords()))
    }

    /// Evaluation on a raw canonical coordinate slice (each entry in [0, 1),
    /// length equal to the ambient dimension). Certifier hot loops call this
    /// to skip per-point allocations.
    pub(crate) fn eval_canonical(&self, c: &[f64]) -> f64 {
        debug_assert_eq!(c.len(), self.ambient_dim);
        match &self.family {
            Family::DistToPoint { center } => center
                .coords()
                .iter()
                .zip(c)
                .map(|(&c0, &x0)| {
                    let d = circle_dist(c0, x0);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            Family::Sawtooth { axis, offset } => sawtooth_value(c[*axis], *offset),
            Family::MaxSawtooth { axes, offsets } => axes
                .iter()
                .zip(offsets)
                .map(|(&a, &o)| sawtooth_value(c[a], o))
                .fold(f64::NEG_INFINITY, f64::max),
            Family::TrigPoly { terms } => terms
                .iter()
                .map(|t| {
                    let dot: f64 = t.freq.iter().zip(c).map(|(&m, &x)| m as f64 * x).sum();
                    t.amplitude * (2.0 * PI * dot + t.phase).sin()
                })
                .sum(),
            Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            } => {
                let s: f64 = center
                    .coords()
                    .iter()
                    .zip(c)
                    .map(|(&c0, &x0)| {
                        let sn = (PI * (x0 - c0)).sin();
                        sn * sn / (PI * PI)
                    })
                    .sum();
                amplitude * ((s + smoothing * smoothing).sqrt() - smoothing)
            }
        }
    }

    /// How far the point is from the family's non-smooth locus, in the
    /// quantities the detector thresholds. Infinite for smooth families.
    pub fn smoothness_margin(&self, x: &TorusPoint) -> Result<f64> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, x.dim()));
        }
        let c = x.coords();
        Ok(match &self.family {
            Family::DistToPoint { center } => {
                let f = crate::torus::torus_dist(x, center)?;
                let cut = center
                    .coords()
                    .iter()
                    .zip(c)
                    .map(|(&c0, &x0)| 0.5 - signed_circle_diff(c0, x0).abs())
                    .fold(f64::INFINITY, f64::min);
                f.min(cut)
            }
            Family::Sawtooth { axis, offset } => {
                let u = wrap_coord(c[*axis] - offset);
                circle_dist(u, 0.0).min((u - 0.5).abs())
            }
            Family::MaxSawtooth { axes, offsets } => {
                let vals: Vec<f64> = axes
                    .iter()
                    .zip(offsets)
                    .map(|(&a, &o)| sawtooth_value(c[a], o))
                    .collect();
                let mut best = f64::NEG_INFINITY;
                let mut second = f64::NEG_INFINITY;
                let mut best_i = 0;
                for (i, &v) in vals.iter().enumerate() {
                    if v > best {
                        second = best;
                        best = v;
                        best_i = i;
                    } else if v > second {
                        second = v;
                    }
                }
                let tie_gap = if vals.len() == 1 {
                    f64::INFINITY
                } else {
                    best - second
                };
                let u = wrap_coord(c[axes[best_i]] - offsets[best_i]);
                tie_gap.min(circle_dist(u, 0.0)).min((u - 0.5).abs())
            }
            Family::TrigPoly { .. } | Family::SmoothedDist { .. } => f64::INFINITY,
        })
    }

    pub fn is_smooth_at(&self, x: &TorusPoint) -> Result<bool> {
        Ok(self.smoothness_margin(x)? >= NONSMOOTH_TOL)
    }

    /// Analytic gradient. Errors with `NonDifferentiablePoint` within
    /// `NONSMOOTH_TOL` of cut loci, kinks, or argmax ties.
    pub fn grad(&self, x: &TorusPoint) -> Result<Vec<f64>> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, x.dim()));
        }
        if !self.is_smooth_at(x)? {
            return Err(Error::NonDifferentiablePoint);
        }
        let c = x.coords();
        let n = self.ambient_dim;
        Ok(match &self.family {
            Family::DistToPoint { center } => {
                let f = crate::torus::torus_dist(x, center)?;
                center
                    .coords()
                    .iter()
                    .zip(c)
                    .map(|(&c0, &x0)| signed_circle_diff(c0, x0) / f)
                    .collect()
            }
            Family::Sawtooth { axis, offset } => {
                let mut g = vec![0.0; n];
                g[*axis] = sawtooth_slope(c[*axis], *offset)
                    .ok_or(Error::NonDifferentiablePoint)?;
                g
            }
            Family::MaxSawtooth { axes, offsets } => {
                let (best_i, _) = axes
                    .iter()
                    .zip(offsets)
                    .enumerate()
                    .map(|(i, (&a, &o))| (i, sawtooth_value(c[a], o)))
                    .fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                        if v > acc.1 {
                            (i, v)
                        } else {
                            acc
                        }
                    });
                let mut g = vec![0.0; n];
                g[axes[best_i]] = sawtooth_slope(c[axes[best_i]], offsets[best_i])
                    .ok_or(Error::NonDifferentiablePoint)?;
                g
            }
            Family::TrigPoly { terms } => {
                let mut g = vec![0.0; n];
                for t in terms {
                    let dot: f64 = t.freq.iter().zip(c).map(|(&m, &x)| m as f64 * x).sum();
                    let common = t.amplitude * 2.0 * PI * (2.0 * PI * dot + t.phase).cos();
                    for (gi, &m) in g.iter_mut().zip(&t.freq) {
                        *gi += common * m as f64;
                    }
                }
                g
            }
            Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            } => {
                let s: f64 = center
                    .coords()
                    .iter()
                    .zip(c)
                    .map(|(&c0, &x0)| {
                        let sn = (PI * (x0 - c0)).sin();
                        sn * sn / (PI * PI)
                    })
                    .sum();
                let denom = (s + smoothing * smoothing).sqrt();
                center
                    .coords()
                    .iter()
                    .zip(c)
                    .map(|(&c0, &x0)| {
                        amplitude * (2.0 * PI * (x0 - c0)).sin() / (2.0 * PI * denom)
                    })
                    .collect()
            }
        })
    }

    /// Central finite differences with step `FD_STEP`. Defined wherever
    /// evaluation is (kinks included, where it returns the average slope).
    pub fn grad_fd(&self, x: &TorusPoint) -> Result<Vec<f64>> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, x.dim()));
        }
        let mut g = vec![0.0; self.ambient_dim];
        let mut plus = x.coords().to_vec();
        let mut minus = x.coords().to_vec();
        for i in 0..self.ambient_dim {
            let orig = x.coords()[i];
            plus[i] = orig + FD_STEP;
            minus[i] = orig - FD_STEP;
            let fp = self.eval(&TorusPoint::wrap(&plus)?)?;
            let fm = self.eval(&TorusPoint::wrap(&minus)?)?;
            g[i] = (fp - fm) / (2.0 * FD_STEP);
            plus[i] = orig;
            minus[i] = orig;
        }
        Ok(g)
    }

    // ------------------------------------------------------------------
    // transforms
    // ------------------------------------------------------------------

    /// The translate f(. - t): centers and offsets shift, trig phases absorb
    /// the shift. Oscillation certificates are invariant under translating
    /// function and subtorus together.
    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, shift.len()));
        }
        let family = match &self.family {
            Family::DistToPoint { center } => Family::DistToPoint {
                center: center.translate(shift)?,
            },
            Family::Sawtooth { axis, offset } => Family::Sawtooth {
                axis: *axis,
                offset: wrap_coord(offset + shift[*axis]),
            },
            Family::MaxSawtooth { axes, offsets } => Family::MaxSawtooth {
                axes: axes.clone(),
                offsets: axes
                    .iter()
                    .zip(offsets)
                    .map(|(&a, &o)| wrap_coord(o + shift[a]))
                    .collect(),
            },
            Family::TrigPoly { terms } => Family::TrigPoly {
                terms: terms
                    .iter()
                    .map(|t| {
                        let dot: f64 =
                            t.freq.iter().zip(shift).map(|(&m, &s)| m as f64 * s).sum();
                        TrigTerm {
                            amplitude: t.amplitude,
                            freq: t.freq.clone(),
                            phase: t.phase - 2.0 * PI * dot,
                        }
                    })
                    .collect(),
            },
            Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            } => Family::SmoothedDist {
                center: center.translate(shift)?,
                smoothing: *smoothing,
                amplitude: *amplitude,
            },
        };
        Ok(Self {
            family,
            ..self.clone()
        })
    }

    /// f scaled by a positive factor; only the amplitude-scalable families
    /// (trig-poly, smoothed-dist) support it.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        let family = match &self.family {
            Family::TrigPoly { terms } => Family::TrigPoly {
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        amplitude: t.amplitude * factor,
                        freq: t.freq.clone(),
                        phase: t.phase,
                    })
                    .collect(),
            },
            Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            } => Family::SmoothedDist {
                center: center.clone(),
                smoothing: *smoothing,
                amplitude: amplitude * factor,
            },
            _ => {
                return Err(Error::Unsupported(format!(
                    "family {} has a pinned amplitude and cannot be rescaled",
                    self.family_name()
                )))
            }
        };
        let lipschitz = match &family {
            Family::TrigPoly { terms } => {
                let l = conservative_trig_lipschitz(terms);
                if l > 0.0 {
                    l
                } else {
                    f64::MIN_POSITIVE
                }
            }
            Family::SmoothedDist { amplitude, .. } => *amplitude,
            _ => unreachable!(),
        };
        Ok(Self {
            family,
            ambient_dim: self.ambient_dim,
            lipschitz,
            analytic_gradient: self.analytic_gradient,
        })
    }

    /// Reinstantiate the family in a different ambient dimension (sweeps
    /// over n). Centers pad with zeros or truncate; axis families require
    /// their axes to stay in range; trig frequency vectors pad/truncate and
    /// must stay nonzero.
    pub fn with_ambient_dim(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("ambient dimension must be >= 1".into()));
        }
        let resize_point = |p: &TorusPoint| -> Result<TorusPoint> {
            let mut c = p.coords().to_vec();
            c.resize(n, 0.0);
            TorusPoint::wrap(&c)
        };
        match &self.family {
            Family::DistToPoint { center } => Self::dist_to_point(n, resize_point(center)?),
            Family::Sawtooth { axis, offset } => Self::sawtooth_at(n, *axis, *offset),
            Family::MaxSawtooth { axes, offsets } => Self::max_sawtooth_at(n, axes, offsets),
            Family::TrigPoly { terms } => Self::trig_poly_raw(
                n,
                terms
                    .iter()
                    .map(|t| {
                        let mut freq = t.freq.clone();
                        freq.resize(n, 0);
                        TrigTerm {
                            amplitude: t.amplitude,
                            freq,
                            phase: t.phase,
                        }
                    })
                    .collect(),
            ),
            Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            } => Self::smoothed_dist_scaled(n, resize_point(center)?, *smoothing, *amplitude),
        }
    }

    // ------------------------------------------------------------------
    // gradient p-norm
    // ------------------------------------------------------------------

    /// Gradient at a uniform random point, redrawing (from the same
    /// per-sample generator) when the point lands on the non-smooth locus.
    fn sampled_grad(
        &self,
        rng: &mut impl Rng,
        use_fd: bool,
        resampled: &mut u64,
    ) -> Result<Vec<f64>> {
        for _ in 0..10 {
            let coords: Vec<f64> = (0..self.ambient_dim).map(|_| rng.gen::<f64>()).collect();
            let x = TorusPoint::wrap(&coords)?;
            if use_fd {
                if self.is_smooth_at(&x)? {
                    return self.grad_fd(&x);
                }
            } else {
                match self.grad(&x) {
                    Ok(g) => return Ok(g),
                    Err(Error::NonDifferentiablePoint) => {}
                    Err(e) => return Err(e),
                }
            }
            *resampled += 1;
        }
        Err(Error::NonDifferentiablePoint)
    }

    /// Monte Carlo estimate of (integral over T^n of |grad f|^p)^(1/p).
    /// Deterministic in the seed triple; per-sample randomness is keyed by
    /// sample_index so the estimate is independent of evaluation order.
    pub fn estimate_grad_pnorm(
        &self,
        p: f64,
        samples: u64,
        seed: SeedSpec,
    ) -> Result<GradPNormEstimate> {
        if p < 1.0 {
            return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
        }
        if samples == 0 {
            return Err(Error::InvalidInput("need at least one sample".into()));
        }
        let use_fd = !self.analytic_gradient;
        let mut resampled = 0u64;
        let mut powers = Vec::with_capacity(samples as usize);
        for i in 0..samples {
            let mut rng = seed.with_index(i).rng();
            let g = self.sampled_grad(&mut rng, use_fd, &mut resampled)?;
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            powers.push(norm.powf(p));
        }
        let (mean, se_mean) = mean_std_error(&powers);
        let value = mean.max(0.0).powf(1.0 / p);
        let std_error = if value < 1e-9 {
            bootstrap_root_se(&powers, p, 100, seed.master_seed ^ 0x5eed)
        } else {
            root_delta_std_error(mean, se_mean, p)
        };
        Ok(GradPNormEstimate {
            value,
            std_error,
            sample_count: samples,
            p,
            used_fd: use_fd,
            resampled,
        })
    }

    /// Rescale a scalable family so the estimated gradient p-norm lands at
    /// `NORMALIZE_MARGIN`; returns the rescaled function and the factor.
    pub fn normalize_to_unit_pnorm(
        &self,
        p: f64,
        samples: u64,
        seed: SeedSpec,
    ) -> Result<(Self, f64)> {
        let est = self.estimate_grad_pnorm(p, samples, seed)?;
        if est.value <= f64::EPSILON {
            return Err(Error::Unsupported(
                "zero gradient p-norm cannot be normalized into [0.5, 1]".into(),
            ));
        }
        let factor = NORMALIZE_MARGIN / est.value;
        Ok((self.scaled(factor)?, factor))
    }
}

// ----------------------------------------------------------------------
// text-record serialization
// ----------------------------------------------------------------------

fn fmt_floats(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad float '{t}': {e}")))
        })
        .collect()
}

fn parse_usizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad index '{t}': {e}")))
        })
        .collect()
}

impl FunctionSpec {
    /// One-line key=value record; lossless round-trip with `from_record`.
    ///
    /// ```text
    /// family=dist-to-point n=3 center=0.1,0.2,0.3
    /// family=sawtooth n=4 axis=0 offset=0
    /// family=max-sawtooth n=4 axes=0,2 offsets=0,0.25
    /// family=trig-poly n=2 terms=0.25:0:1,0;0.1:1.5707:0,2
    /// family=smoothed-dist n=2 center=0,0 c=0.1 amp=1
    /// ```
    ///
    /// Trig-poly terms are amplitude:phase:freq-components; `terms=none`
    /// encodes the zero function. A trailing `grad=fd` marks a spec whose
    /// estimators must use the finite-difference fallback.
    pub fn to_record(&self) -> String {
        let mut s = format!("family={} n={}", self.family_name(), self.ambient_dim);
        match &self.family {
            Family::DistToPoint { center } => {
                s.push_str(&format!(" center={}", fmt_floats(center.coords())));
            }
            Family::Sawtooth { axis, offset } => {
                s.push_str(&format!(" axis={axis} offset={offset}"));
            }
            Family::MaxSawtooth { axes, offsets } => {
                let axes_s = axes
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                s.push_str(&format!(" axes={axes_s} offsets={}", fmt_floats(offsets)));
            }
            Family::TrigPoly { terms } => {
                if terms.is_empty() {
                    s.push_str(" terms=none");
                } else {
                    let terms_s = terms
                        .iter()
                        .map(|t| {
                            let freq_s = t
                                .freq
                                .iter()
                                .map(|m| m.to_string())
                                .collect::<Vec<_>>()
                                .join(",");
                            format!("{}:{}:{}", t.amplitude, t.phase, freq_s)
                        })
                        .collect::<Vec<_>>()
                        .join(";");
                    s.push_str(&format!(" terms={terms_s}"));
                }
            }
            Family::SmoothedDist {
                center,
                smoothing,
                amplitude,
            } => {
                s.push_str(&format!(
                    " center={} c={smoothing} amp={amplitude}",
                    fmt_floats(center.coords())
                ));
            }
        }
        if !self.analytic_gradient {
            s.push_str(" grad=fd");
        }
        s
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for token in record.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{token}'")))?;
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parse(format!("duplicate key '{k}'")));
            }
        }
        let take = |map: &mut std::collections::BTreeMap<String, String>, k: &str| {
            map.remove(k)
                .ok_or_else(|| Error::Parse(format!("missing key '{k}'")))
        };
        let family = take(&mut map, "family")?;
        let n: usize = take(&mut map, "n")?
            .parse()
            .map_err(|e| Error::Parse(format!("bad n: {e}")))?;
        let fd = match map.remove("grad").as_deref() {
            None | Some("analytic") => false,
            Some("fd") => true,
            Some(other) => return Err(Error::Parse(format!("bad grad mode '{other}'"))),
        };
        let spec = match family.as_str() {
            "dist-to-point" => {
                let center = match map.remove("center") {
                    Some(v) => TorusPoint::wrap(&parse_floats(&v)?)?,
                    None => TorusPoint::origin(n),
                };
                Self::dist_to_point(n, center)?
            }
            "sawtooth" => {
                let axis = take(&mut map, "axis")?
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad axis: {e}")))?;
                let offset = map
                    .remove("offset")
                    .map(|v| v.parse::<f64>())
                    .transpose()
                    .map_err(|e| Error::Parse(format!("bad offset: {e}")))?
                    .unwrap_or(0.0);
                Self::sawtooth_at(n, axis, offset)?
            }
            "max-sawtooth" => {
                let axes = parse_usizes(&take(&mut map, "axes")?)?;
                let offsets = match map.remove("offsets") {
                    Some(v) => parse_floats(&v)?,
                    None => vec![0.0; axes.len()],
                };
                Self::max_sawtooth_at(n, &axes, &offsets)?
            }
            "trig-poly" => {
                let raw = take(&mut map, "terms")?;
                let terms = if raw == "none" {
                    Vec::new()
                } else {
                    raw.split(';')
                        .map(|chunk| {
                            let parts: Vec<&str> = chunk.splitn(3, ':').collect();
                            if parts.len() != 3 {
                                return Err(Error::Parse(format!(
                                    "trig term '{chunk}' is not amp:phase:freqs"
                                )));
                            }
                            Ok(TrigTerm {
                                amplitude: parts[0].parse().map_err(|e| {
                                    Error::Parse(format!("bad amplitude: {e}"))
                                })?,
                                phase: parts[1]
                                    .parse()
                                    .map_err(|e| Error::Parse(format!("bad phase: {e}")))?,
                                freq: parts[2]
                                    .split(',')
                                    .map(|m| {
                                        m.parse::<i64>().map_err(|e| {
                                            Error::Parse(format!("bad frequency: {e}"))
                                        })
                                    })
                                    .collect::<Result<Vec<_>>>()?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                Self::trig_poly_raw(n, terms)?
            }
            "smoothed-dist" => {
                let center = match map.remove("center") {
                    Some(v) => TorusPoint::wrap(&parse_floats(&v)?)?,
                    None => TorusPoint::origin(n),
                };
                let c: f64 = take(&mut map, "c")?
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad c: {e}")))?;
                let amp = map
                    .remove("amp")
                    .map(|v| v.parse::<f64>())
                    .transpose()
                    .map_err(|e| Error::Parse(format!("bad amp: {e}")))?
                    .unwrap_or(1.0);
                Self::smoothed_dist_scaled(n, center, c, amp)?
            }
            other => return Err(Error::Parse(format!("unknown family '{other}'"))),
        };
        if let Some((k, _)) = map.into_iter().next() {
            return Err(Error::Parse(format!("unknown key '{k}'")));
        }
        Ok(if fd {
            spec.without_analytic_gradient()
        } else {
            spec
        })
    }
}

/// Family identifiers and one-line descriptions for `zoo list`.
pub fn family_catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "dist-to-point",
            "geodesic distance to a fixed point; L = 1, |grad| = 1 a.e.",
        ),
        (
            "sawtooth",
            "circle distance of one coordinate to an offset; L = 1",
        ),
        (
            "max-sawtooth",
            "max of coordinate sawtooths over an index set; L = 1",
        ),
        (
            "trig-poly",
            "sum of a_j sin(2 pi m_j.x + phi_j), integer m_j, rescaled to L = 1",
        ),
        (
            "smoothed-dist",
            "smooth surrogate of dist-to-point with quadratic cap c; L = amplitude",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SeedSpec;
    use crate::stats::Kahan;
    use crate::torus::torus_dist;
    use rand::{Rng, SeedableRng};

    fn roster(n: usize) -> Vec<FunctionSpec> {
        let center = TorusPoint::wrap(&(0..n).map(|i| 0.1 + 0.07 * i as f64).collect::<Vec<_>>())
            .unwrap();
        vec![
            FunctionSpec::dist_to_point(n, center.clone()).unwrap(),
            FunctionSpec::sawtooth_at(n, 0, 0.3).unwrap(),
            FunctionSpec::max_sawtooth_at(n, &[0, n - 1], &[0.0, 0.25]).unwrap(),
            FunctionSpec::trig_poly(
                n,
                vec![
                    TrigTerm {
                        amplitude: 0.5,
                        freq: {
                            let mut m = vec![0i64; n];
                            m[0] = 1;
                            m
                        },
                        phase: 0.3,
                    },
                    TrigTerm {
                        amplitude: 0.25,
                        freq: {
                            let mut m = vec![0i64; n];
                            m[n - 1] = 2;
                            if n > 1 {
                                m[0] = -1;
                            }
                            m
                        },
                        phase: 1.1,
                    },
                ],
            )
            .unwrap(),
            FunctionSpec::smoothed_dist(n, center, 0.15).unwrap(),
        ]
    }

    #[test]
    fn construct_examples() {
        let saw = FunctionSpec::sawtooth(2, 0).unwrap();
        let x = TorusPoint::wrap(&[0.25, 0.9]).unwrap();
        assert!((saw.eval(&x).unwrap() - 0.25).abs() < 1e-15);

        let dist = FunctionSpec::dist_to_point(2, TorusPoint::origin(2)).unwrap();
        let anti = TorusPoint::wrap(&[0.5, 0.5]).unwrap();
        assert!((dist.eval(&anti).unwrap() - 2f64.sqrt() / 2.0).abs() < 1e-15);

        let tp = FunctionSpec::trig_poly(
            3,
            vec![TrigTerm {
                amplitude: 1.0 / (2.0 * PI),
                freq: vec![1, 0, 0],
                phase: 0.0,
            }],
        )
        .unwrap();
        assert!((tp.lipschitz() - 1.0).abs() < 1e-12);
        let x = TorusPoint::wrap(&[0.25, 0.4, 0.9]).unwrap();
        assert!((tp.eval(&x).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn eval_trivia() {
        let zero = FunctionSpec::constant_zero(3);
        let x = TorusPoint::wrap(&[0.1, 0.7, 0.3]).unwrap();
        assert_eq!(zero.eval(&x).unwrap(), 0.0);

        let c = TorusPoint::wrap(&[0.2, 0.9]).unwrap();
        let dist = FunctionSpec::dist_to_point(2, c.clone()).unwrap();
        assert_eq!(dist.eval(&c).unwrap(), 0.0);

        let saw = FunctionSpec::sawtooth(1, 0).unwrap();
        let peak = TorusPoint::wrap(&[0.5]).unwrap();
        assert!((saw.eval(&peak).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn construction_errors() {
        assert!(FunctionSpec::sawtooth(2, 2).is_err());
        assert!(FunctionSpec::max_sawtooth(3, &[]).is_err());
        assert!(FunctionSpec::max_sawtooth(3, &[0, 0]).is_err());
        assert!(FunctionSpec::trig_poly(
            2,
            vec![TrigTerm {
                amplitude: 1.0,
                freq: vec![0, 0],
                phase: 0.0
            }]
        )
        .is_err());
        assert!(
            FunctionSpec::smoothed_dist(2, TorusPoint::origin(2), 0.0).is_err()
        );
    }

    #[test]
    fn gradient_examples() {
        let saw = FunctionSpec::sawtooth(3, 0).unwrap();
        let x = TorusPoint::wrap(&[0.25, 0.6, 0.6]).unwrap();
        assert_eq!(saw.grad(&x).unwrap(), vec![1.0, 0.0, 0.0]);

        let tp = FunctionSpec::trig_poly(
            3,
            vec![TrigTerm {
                amplitude: 1.0 / (2.0 * PI),
                freq: vec![1, 0, 0],
                phase: 0.0,
            }],
        )
        .unwrap();
        let origin = TorusPoint::origin(3);
        let g = tp.grad(&origin).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!(g[1].abs() < 1e-15 && g[2].abs() < 1e-15);
    }

    #[test]
    fn gradient_errors_on_kinks() {
        let saw = FunctionSpec::sawtooth(2, 0).unwrap();
        let kink = TorusPoint::wrap(&[0.5, 0.1]).unwrap();
        assert!(matches!(
            saw.grad(&kink),
            Err(Error::NonDifferentiablePoint)
        ));
        let dist = FunctionSpec::dist_to_point(2, TorusPoint::origin(2)).unwrap();
        assert!(matches!(
            dist.grad(&TorusPoint::origin(2)),
            Err(Error::NonDifferentiablePoint)
        ));
        // argmax tie of max-sawtooth
        let ms = FunctionSpec::max_sawtooth(2, &[0, 1]).unwrap();
        let tie = TorusPoint::wrap(&[0.2, 0.2]).unwrap();
        assert!(matches!(ms.grad(&tie), Err(Error::NonDifferentiablePoint)));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for f in roster(4) {
            let mut checked = 0;
            while checked < 100 {
                let x = TorusPoint::wrap(&(0..4).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())
                    .unwrap();
                if f.smoothness_margin(&x).unwrap() < 1e-4 {
                    continue;
                }
                let ga = f.grad(&x).unwrap();
                let gf = f.grad_fd(&x).unwrap();
                let diff: f64 = ga
                    .iter()
                    .zip(&gf)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let norm: f64 = ga.iter().map(|a| a * a).sum::<f64>().sqrt();
                let rel = diff / norm.max(1e-3);
                assert!(
                    rel <= 1e-5,
                    "family {}: rel gradient error {rel} at {:?}",
                    f.family_name(),
                    x.coords()
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn lipschitz_property_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for f in roster(4) {
            for _ in 0..1000 {
                let x = TorusPoint::wrap(&(0..4).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())
                    .unwrap();
                let y = TorusPoint::wrap(&(0..4).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())
                    .unwrap();
                let lhs = (f.eval(&x).unwrap() - f.eval(&y).unwrap()).abs();
                let rhs = f.lipschitz() * torus_dist(&x, &y).unwrap();
                assert!(
                    lhs <= rhs + 1e-9,
                    "family {}: |df| = {lhs} > L d = {rhs}",
                    f.family_name()
                );
            }
        }
    }

    #[test]
    fn wrap_invariance_exact_for_integer_shifts() {
        // grid-valued coordinates plus small integer shifts stay exactly
        // representable, so evaluation must agree bitwise
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for f in roster(3) {
            for _ in 0..50 {
                let v: Vec<f64> = (0..3)
                    .map(|_| rng.gen_range(0..1024) as f64 / 1024.0)
                    .collect();
                let shift: Vec<f64> = (0..3).map(|_| rng.gen_range(-50..50) as f64).collect();
                let shifted: Vec<f64> = v.iter().zip(&shift).map(|(a, b)| a + b).collect();
                let fx = f.eval(&TorusPoint::wrap(&v).unwrap()).unwrap();
                let fy = f.eval(&TorusPoint::wrap(&shifted).unwrap()).unwrap();
                assert_eq!(fx, fy, "family {}", f.family_name());
            }
        }
    }

    #[test]
    fn dist_gradient_has_unit_norm() {
        let c = TorusPoint::wrap(&[0.3, 0.6, 0.1]).unwrap();
        let f = FunctionSpec::dist_to_point(3, c).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut checked = 0;
        while checked < 200 {
            let x =
                TorusPoint::wrap(&(0..3).map(|_| rng.gen::<f64>()).collect::<Vec<_>>()).unwrap();
            match f.grad(&x) {
                Ok(g) => {
                    let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() < 1e-9, "norm = {norm}");
                    checked += 1;
                }
                Err(Error::NonDifferentiablePoint) => continue,
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn smoothed_dist_gradient_below_amplitude() {
        let c = TorusPoint::wrap(&[0.4, 0.8]).unwrap();
        let f = FunctionSpec::smoothed_dist(2, c, 0.05).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        for _ in 0..2000 {
            let x =
                TorusPoint::wrap(&(0..2).map(|_| rng.gen::<f64>()).collect::<Vec<_>>()).unwrap();
            let g = f.grad(&x).unwrap();
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(norm < 1.0, "|grad| = {norm} must stay below amplitude 1");
        }
    }

    #[test]
    fn grad_pnorm_unit_for_dist_family() {
        let f = FunctionSpec::dist_to_point(3, TorusPoint::origin(3)).unwrap();
        let est = f
            .estimate_grad_pnorm(4.0, 500, SeedSpec::new(101, 0, 0))
            .unwrap();
        assert!((est.value - 1.0).abs() < 1e-12, "value = {}", est.value);
        assert!(est.std_error < 1e-12);
        assert!(!est.used_fd);
    }

    #[test]
    fn grad_pnorm_zero_function() {
        let f = FunctionSpec::constant_zero(2);
        let est = f
            .estimate_grad_pnorm(2.0, 200, SeedSpec::new(5, 0, 0))
            .unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn grad_pnorm_single_cosine_against_quadrature() {
        // |grad f| = |cos(2 pi x_1)| for the unit-Lipschitz single term;
        // oracle: composite quadrature of cos^2 over one period = 1/2
        let f = FunctionSpec::trig_poly(
            2,
            vec![TrigTerm {
                amplitude: 1.0 / (2.0 * PI),
                freq: vec![1, 0],
                phase: 0.0,
            }],
        )
        .unwrap();
        let mut quad = Kahan::new();
        let m = 10_000;
        for i in 0..m {
            let t = (i as f64 + 0.5) / m as f64;
            let c = (2.0 * PI * t).cos();
            quad.add(c * c);
        }
        let oracle = (quad.value() / m as f64).sqrt();
        assert!((oracle - 0.5f64.sqrt()).abs() < 1e-6);

        let est = f
            .estimate_grad_pnorm(2.0, 20_000, SeedSpec::new(303, 0, 0))
            .unwrap();
        assert!(
            (est.value - oracle).abs() < 4.0 * est.std_error,
            "mc {} vs quadrature {oracle} (se {})",
            est.value,
            est.std_error
        );
    }

    #[test]
    fn fd_fallback_flag_recorded() {
        let f = FunctionSpec::dist_to_point(2, TorusPoint::origin(2))
            .unwrap()
            .without_analytic_gradient();
        let est = f
            .estimate_grad_pnorm(2.0, 100, SeedSpec::new(7, 7, 0))
            .unwrap();
        assert!(est.used_fd);
        assert!((est.value - 1.0).abs() < 1e-4, "fd value = {}", est.value);
    }

    #[test]
    fn normalize_scales_towards_target() {
        // p-norm about 2 -> amplitudes roughly halved
        let base = FunctionSpec::trig_poly_raw(
            2,
            vec![TrigTerm {
                amplitude: 2.0 * 2f64.sqrt() / (2.0 * PI),
                freq: vec![1, 0],
                phase: 0.0,
            }],
        )
        .unwrap();
        let seed = SeedSpec::new(404, 0, 0);
        let est = base.estimate_grad_pnorm(2.0, 20_000, seed).unwrap();
        assert!((est.value - 2.0).abs() < 0.02, "pnorm = {}", est.value);
        let (normed, factor) = base.normalize_to_unit_pnorm(2.0, 20_000, seed).unwrap();
        assert!((factor - 0.99 / est.value).abs() < 1e-12);
        let re = normed
            .estimate_grad_pnorm(2.0, 20_000, seed.substream(1))
            .unwrap();
        assert!(
            re.value > 0.5 && re.value <= 1.0,
            "renormalized p-norm = {}",
            re.value
        );
    }

    #[test]
    fn normalize_rejects_pinned_and_zero_families() {
        let dist = FunctionSpec::dist_to_point(2, TorusPoint::origin(2)).unwrap();
        assert!(dist
            .normalize_to_unit_pnorm(2.0, 50, SeedSpec::new(1, 1, 0))
            .is_err());
        let zero = FunctionSpec::constant_zero(2);
        assert!(zero
            .normalize_to_unit_pnorm(2.0, 50, SeedSpec::new(1, 2, 0))
            .is_err());
    }

    #[test]
    fn normalized_pnorm_lands_in_band_for_random_trig_polys() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for trial in 0..10 {
            let n = 3;
            let terms: Vec<TrigTerm> = (0..rng.gen_range(1..4))
                .map(|_| TrigTerm {
                    amplitude: rng.gen_range(0.05..3.0),
                    freq: loop {
                        let f: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
                        if f.iter().any(|&m| m != 0) {
                            break f;
                        }
                    },
                    phase: rng.gen_range(0.0..6.28),
                })
                .collect();
            let f = FunctionSpec::trig_poly_raw(n, terms).unwrap();
            let p = 2.0 + (trial % 3) as f64;
            let seed = SeedSpec::new(500 + trial, 0, 0);
            let (normed, _) = f.normalize_to_unit_pnorm(p, 4000, seed).unwrap();
            let re = normed
                .estimate_grad_pnorm(p, 4000, seed.substream(9))
                .unwrap();
            assert!(
                re.value >= 0.5 && re.value <= 1.0,
                "trial {trial}: renormalized p-norm {}",
                re.value
            );
        }
    }

    #[test]
    fn translate_commutes_with_eval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        for f in roster(3) {
            let shift: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let ft = f.translate(&shift).unwrap();
            for _ in 0..50 {
                let x = TorusPoint::wrap(&(0..3).map(|_| rng.gen::<f64>()).collect::<Vec<_>>())
                    .unwrap();
                let moved = x.translate(&shift).unwrap();
                let a = f.eval(&x).unwrap();
                let b = ft.eval(&moved).unwrap();
                assert!(
                    (a - b).abs() < 1e-12,
                    "family {}: {a} vs {b}",
                    f.family_name()
                );
            }
        }
    }

    #[test]
    fn record_round_trip() {
        for f in roster(4) {
            let rec = f.to_record();
            let back = FunctionSpec::from_record(&rec).unwrap();
            assert_eq!(f, back, "record: {rec}");
            assert_eq!(rec, back.to_record());
        }
        let fd = roster(4)[0].without_analytic_gradient();
        let back = FunctionSpec::from_record(&fd.to_record()).unwrap();
        assert!(!back.has_analytic_gradient());
    }

    #[test]
    fn record_rejects_unknown_keys_and_bad_values() {
        assert!(FunctionSpec::from_record("family=sawtooth n=2 axis=0 bogus=1").is_err());
        assert!(FunctionSpec::from_record("family=unknown n=2").is_err());
        assert!(FunctionSpec::from_record("family=sawtooth n=2").is_err());
        assert!(FunctionSpec::from_record("family=trig-poly n=2 terms=1:0:0,0").is_err());
    }

    #[test]
    fn with_ambient_dim_adapts_families() {
        for f in roster(3) {
            let g = f.with_ambient_dim(6).unwrap();
            assert_eq!(g.ambient_dim(), 6);
            assert_eq!(g.family_name(), f.family_name());
        }
        // sawtooth axis out of range for smaller n
        let saw = FunctionSpec::sawtooth(4, 3).unwrap();
        assert!(saw.with_ambient_dim(2).is_err());
    }
}

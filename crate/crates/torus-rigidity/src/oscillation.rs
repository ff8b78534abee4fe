//! Certified two-sided enclosures of Osc(f; M) = sup_M f - inf_M f on a
//! coordinate subtorus.
//!
//! Both certifiers rest on the covering argument: a Lipschitz function
//! cannot move more than L r away from an observed value within radius r.
//! `grid_osc` evaluates a full lattice (covering radius sqrt(k)/(2m) on the
//! torus, wraparound included); `refine_osc` runs a branch-and-bound sweep
//! on subboxes, splitting the widest axis of any box whose Lipschitz bound
//! still reaches past the observed extrema plus half the requested gap.
//! Certificates are sound by construction:
//! osc_lower <= Osc(f; M) <= osc_upper.

use crate::error::{Error, Result};
use crate::torus::{wrap_coord, SubtorusSpec, TorusPoint};
use crate::zoo::FunctionSpec;
use rayon::prelude::*;
use std::cmp::Ordering;

/// Lattice evaluation cap (m^k).
pub const GRID_BUDGET: u128 = 10_000_000;

/// Two-sided oscillation enclosure with audit metadata.
#[derive(Debug, Clone)]
pub struct OscCertificate {
    /// max observed - min observed; never exceeds the true oscillation
    pub osc_lower: f64,
    /// certified upper bound on the true oscillation
    pub osc_upper: f64,
    pub evaluations: u64,
    /// grid spacing 1/m for lattice certificates; the largest box
    /// half-diagonal still open when refinement stopped
    pub mesh: f64,
    pub lipschitz_used: f64,
    /// embedded ambient points of the observed extrema, ties broken by
    /// lexicographic parameter order
    pub argmax: TorusPoint,
    pub argmin: TorusPoint,
    /// true when refinement stopped on its evaluation budget rather than
    /// on the requested gap
    pub budget_exhausted: bool,
}

impl OscCertificate {
    pub fn gap(&self) -> f64 {
        self.osc_upper - self.osc_lower
    }
}

/// Tri-state decision of "Osc(f; M) <= eps".
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OscOutcome {
    /// certified: osc_upper <= eps
    Success,
    /// certified: osc_lower > eps
    Failure,
    /// the enclosure straddles eps; reported, never silently coerced
    Undecided,
}

/// How hard the success indicator works before conceding `Undecided`.
#[derive(Debug, Clone, Copy)]
pub struct GapPolicy {
    /// initial lattice resolution
    pub grid_m: usize,
    /// whether to branch-and-bound when the grid is inconclusive
    pub refine: bool,
    pub target_gap: f64,
    pub refine_budget: u64,
}

impl Default for GapPolicy {
    fn default() -> Self {
        Self {
            grid_m: 32,
            refine: true,
            target_gap: 1e-3,
            refine_budget: 200_000,
        }
    }
}

/// Evaluates f at subtorus parameter points through a reused ambient
/// buffer; the certifier loops burn millions of evaluations.
struct SubtorusEval<'a> {
    f: &'a FunctionSpec,
    free_axes: &'a [usize],
    ambient: Vec<f64>,
}

impl<'a> SubtorusEval<'a> {
    fn new(f: &'a FunctionSpec, sub: &'a SubtorusSpec) -> Result<Self> {
        if f.ambient_dim() != sub.ambient_dim() {
            return Err(Error::DimensionMismatch(f.ambient_dim(), sub.ambient_dim()));
        }
        Ok(Self {
            f,
            free_axes: sub.free_axes(),
            ambient: sub.base().coords().to_vec(),
        })
    }

    /// `u` must be canonical ([0, 1) per coordinate).
    fn eval(&mut self, u: &[f64]) -> f64 {
        for (&axis, &v) in self.free_axes.iter().zip(u) {
            self.ambient[axis] = v;
        }
        self.f.eval_canonical(&self.ambient)
    }
}

struct Extrema {
    max_val: f64,
    max_u: Vec<f64>,
    min_val: f64,
    min_u: Vec<f64>,
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap() {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

impl Extrema {
    fn observe(&mut self, val: f64, u: &[f64]) {
        if val > self.max_val || (val == self.max_val && lex_less(u, &self.max_u)) {
            self.max_val = val;
            self.max_u = u.to_vec();
        }
        if val < self.min_val || (val == self.min_val && lex_less(u, &self.min_u)) {
            self.min_val = val;
            self.min_u = u.to_vec();
        }
    }

    fn merge(mut self, other: Extrema) -> Extrema {
        self.observe(other.max_val, &other.max_u);
        self.observe(other.min_val, &other.min_u);
        self
    }

    fn empty() -> Self {
        Extrema {
            max_val: f64::NEG_INFINITY,
            max_u: Vec::new(),
            min_val: f64::INFINITY,
            min_u: Vec::new(),
        }
    }
}

/// Exhaustive lattice certificate: evaluates f on the uniform m^k lattice
/// of the subtorus. osc_upper = osc_lower + 2 L r_mesh with covering radius
/// r_mesh = sqrt(k)/(2m) (half cell diagonal, valid under wraparound).
pub fn grid_osc(f: &FunctionSpec, sub: &SubtorusSpec, m: usize) -> Result<OscCertificate> {
    if f.ambient_dim() != sub.ambient_dim() {
        return Err(Error::DimensionMismatch(f.ambient_dim(), sub.ambient_dim()));
    }
    if m < 2 {
        return Err(Error::InvalidInput("need at least 2 grid points per axis".into()));
    }
    let k = sub.k();
    let total = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > GRID_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: total,
            budget: GRID_BUDGET,
            hint: "lower m or use refine_osc".into(),
        });
    }

    // parallel over the first axis; the ordered fold keeps argmax/argmin
    // tie-breaking independent of thread count
    let slices: Result<Vec<Extrema>> = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut eval = SubtorusEval::new(f, sub)?;
            let mut ext = Extrema::empty();
            let mut u = vec![0.0f64; k];
            u[0] = i0 as f64 / m as f64;
            crate::combinat::for_each_lattice(&vec![m; k - 1], |idx| {
                for (slot, &i) in u[1..].iter_mut().zip(idx) {
                    *slot = i as f64 / m as f64;
                }
                let v = eval.eval(&u);
                ext.observe(v, &u);
            });
            Ok(ext)
        })
        .collect();
    let ext = slices?
        .into_iter()
        .fold(Extrema::empty(), |acc, e| acc.merge(e));

    let lipschitz = f.lipschitz();
    let r_mesh = (k as f64).sqrt() / (2.0 * m as f64);
    let osc_lower = ext.max_val - ext.min_val;
    Ok(OscCertificate {
        osc_lower,
        osc_upper: osc_lower + 2.0 * lipschitz * r_mesh,
        evaluations: total as u64,
        mesh: 1.0 / m as f64,
        lipschitz_used: lipschitz,
        argmax: sub.embed(&ext.max_u)?,
        argmin: sub.embed(&ext.min_u)?,
        budget_exhausted: false,
    })
}

struct BnbBox {
    center: Vec<f64>,
    half_sides: Vec<f64>,
    value: f64,
    radius: f64,
}

/// Branch-and-bound refinement: returns a certificate with
/// osc_upper - osc_lower <= target_gap, or the best certificate achieved
/// when the evaluation budget runs out (flagged, not an error).
///
/// Depth-first fathoming sweep: a box is closed once its Lipschitz bound
/// value +- L r stays within half the target gap of the observed extrema;
/// otherwise it splits along its widest axis. The observed extrema only
/// grow, so a box closed early stays validly closed, and the live set
/// stays O(split depth) deep regardless of how flat the function is.
pub fn refine_osc(
    f: &FunctionSpec,
    sub: &SubtorusSpec,
    target_gap: f64,
    budget: u64,
) -> Result<OscCertificate> {
    if f.ambient_dim() != sub.ambient_dim() {
        return Err(Error::DimensionMismatch(f.ambient_dim(), sub.ambient_dim()));
    }
    if !(target_gap > 0.0) {
        return Err(Error::InvalidInput(format!(
            "target gap must be positive, got {target_gap}"
        )));
    }
    if budget == 0 {
        return Err(Error::InvalidInput("refine budget must be >= 1".into()));
    }
    let k = sub.k();
    let lipschitz = f.lipschitz();
    let slack = target_gap / 2.0;
    let mut eval = SubtorusEval::new(f, sub)?;
    let mut observed = Extrema::empty();
    let mut evaluations = 0u64;
    let mut stack: Vec<BnbBox> = Vec::new();

    let push = |center: Vec<f64>,
                    half_sides: Vec<f64>,
                    eval: &mut SubtorusEval,
                    observed: &mut Extrema,
                    evaluations: &mut u64,
                    stack: &mut Vec<BnbBox>| {
        let value = eval.eval(&center);
        *evaluations += 1;
        observed.observe(value, &center);
        let radius = half_sides.iter().map(|s| s * s).sum::<f64>().sqrt();
        stack.push(BnbBox {
            center,
            half_sides,
            value,
            radius,
        });
    };

    // seed cover: coarse regular subdivision of the parameter torus
    let seed_per_axis: usize = if k <= 3 { 4 } else { 2 };
    let half = 0.5 / seed_per_axis as f64;
    crate::combinat::for_each_lattice(&vec![seed_per_axis; k], |idx| {
        let center: Vec<f64> = idx.iter().map(|&i| (2 * i + 1) as f64 * half).collect();
        push(
            center,
            vec![half; k],
            &mut eval,
            &mut observed,
            &mut evaluations,
            &mut stack,
        );
    });

    let mut exhausted = false;
    let mut open_mesh = 0.0f64;
    // envelope of the boxes still open at exhaustion, if any
    let mut open_sup = f64::NEG_INFINITY;
    let mut open_inf = f64::INFINITY;
    while let Some(b) = stack.pop() {
        let reach = lipschitz * b.radius;
        if b.value + reach <= observed.max_val + slack
            && b.value - reach >= observed.min_val - slack
        {
            continue;
        }
        if evaluations >= budget {
            exhausted = true;
            for rest in std::iter::once(&b).chain(stack.iter()) {
                let r = lipschitz * rest.radius;
                open_sup = open_sup.max(rest.value + r);
                open_inf = open_inf.min(rest.value - r);
                open_mesh = open_mesh.max(rest.radius);
            }
            break;
        }
        let axis = b
            .half_sides
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .expect("boxes have at least one axis");
        let mut half_sides = b.half_sides;
        half_sides[axis] /= 2.0;
        for dir in [-1.0, 1.0] {
            let mut center = b.center.clone();
            center[axis] = wrap_coord(center[axis] + dir * half_sides[axis]);
            push(
                center,
                half_sides.clone(),
                &mut eval,
                &mut observed,
                &mut evaluations,
                &mut stack,
            );
        }
    }

    // every closed box satisfied value + L r <= max_obs + slack at close
    // time, and the observed extrema only grew afterwards, so the closed
    // cover certifies sup f <= max_obs + slack (inf symmetrically); open
    // boxes at exhaustion contribute their raw Lipschitz envelope
    let sup_bound = (observed.max_val + slack).max(if exhausted {
        open_sup
    } else {
        f64::NEG_INFINITY
    });
    let inf_bound = (observed.min_val - slack).min(if exhausted {
        open_inf
    } else {
        f64::INFINITY
    });
    Ok(OscCertificate {
        osc_lower: observed.max_val - observed.min_val,
        osc_upper: sup_bound - inf_bound,
        evaluations,
        mesh: if exhausted {
            open_mesh
        } else {
            (slack / lipschitz).min((k as f64).sqrt() / 2.0)
        },
        lipschitz_used: lipschitz,
        argmax: sub.embed(&observed.max_u)?,
        argmin: sub.embed(&observed.min_u)?,
        budget_exhausted: exhausted,
    })
}

/// Decide "Osc(f; M) <= eps" with certificates: grid first, branch-and-bound
/// refinement when the grid straddles eps. Returns the outcome and the
/// certificate that produced it.
pub fn osc_success_indicator(
    f: &FunctionSpec,
    sub: &SubtorusSpec,
    eps: f64,
    policy: &GapPolicy,
) -> Result<(OscOutcome, OscCertificate)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let classify = |cert: &OscCertificate| {
        if cert.osc_upper <= eps {
            OscOutcome::Success
        } else if cert.osc_lower > eps {
            OscOutcome::Failure
        } else {
            OscOutcome::Undecided
        }
    };
    let cert = grid_osc(f, sub, policy.grid_m)?;
    let outcome = classify(&cert);
    if outcome != OscOutcome::Undecided || !policy.refine {
        return Ok((outcome, cert));
    }
    let refined = refine_osc(f, sub, policy.target_gap, policy.refine_budget)?;
    let outcome = classify(&refined);
    Ok((outcome, refined))
}

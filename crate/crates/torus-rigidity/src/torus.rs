//! Flat-torus geometry: wrapped coordinates on T^n = R^n/Z^n, geodesic
//! distance, coordinate-subtorus embedding, and isometric charts for
//! geodesic balls strictly inside the injectivity radius 1/2.
//!
//! Every type is an immutable value and every operation is pure; the whole
//! module is safe to use from any number of threads.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Comparison tolerance for canonical-coordinate equality.
pub const COORD_TOL: f64 = 1e-12;

/// Charts are only issued up to this radius: strictly inside the
/// injectivity radius 1/2, and the only radius the chaining bound needs.
pub const MAX_CHART_RADIUS: f64 = 0.25;

/// Wrap a single real to its canonical representative in [0, 1).
#[inline]
pub fn wrap_coord(x: f64) -> f64 {
    let f = x - x.floor();
    // x.floor() rounding can land f exactly on 1.0 for tiny negatives
    if f >= 1.0 {
        f - 1.0
    } else {
        f
    }
}

/// Geodesic distance on the unit circle R/Z between canonical coordinates.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Signed representative of `b - a` in [-1/2, 1/2): the shortest arc from
/// `a` to `b`, with the tie at distance exactly 1/2 broken towards +1/2.
#[inline]
pub fn signed_circle_diff(a: f64, b: f64) -> f64 {
    let d = b - a;
    let s = d - d.round();
    if s == -0.5 {
        0.5
    } else {
        s
    }
}

/// A point of T^n as n canonical coordinates in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Canonicalize arbitrary real coordinates to their representatives in
    /// [0, 1). Rejects empty and non-finite input.
    pub fn wrap(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidInput("torus point needs dimension >= 1".into()));
        }
        if let Some(bad) = raw.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinate {bad}")));
        }
        Ok(Self {
            coords: raw.iter().map(|&x| wrap_coord(x)).collect(),
        })
    }

    /// The origin of T^n.
    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be >= 1");
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate-wise equality of canonical forms within `COORD_TOL`,
    /// measured along the circle so 0 and 1-1e-15 compare equal.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(&a, &b)| circle_dist(a, b) <= COORD_TOL)
    }

    /// The point translated by `shift`, re-canonicalized.
    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), shift.len()));
        }
        Self::wrap(
            &self
                .coords
                .iter()
                .zip(shift)
                .map(|(&x, &t)| x + t)
                .collect::<Vec<_>>(),
        )
    }

    /// Lexicographic order on coordinates; used for deterministic
    /// tie-breaking of argmax/argmin points.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.coords.iter().zip(&other.coords) {
            match a.partial_cmp(b).unwrap() {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

/// Geodesic (quotient-metric) distance on T^n:
/// sqrt of the sum over axes of min(|x_i - y_i|, 1 - |x_i - y_i|)^2.
/// Maximum possible value is sqrt(n)/2, attained at antipodal pairs.
pub fn torus_dist(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    let mut acc = 0.0;
    for (&a, &b) in x.coords.iter().zip(&y.coords) {
        let d = circle_dist(a, b);
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// A k-dimensional coordinate subtorus of T^n: the free axes J plus fixed
/// values for the remaining n-k axes. Canonical form stores 0 at every
/// free axis of `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtorusSpec {
    ambient_dim: usize,
    free_axes: Vec<usize>,
    base: TorusPoint,
}

impl SubtorusSpec {
    /// Build a subtorus from its free axes and a base point. The free axes
    /// must be distinct and in range; `base` coordinates at free axes are
    /// discarded (stored as 0).
    pub fn new(ambient_dim: usize, free_axes: &[usize], base: &TorusPoint) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::InvalidInput("ambient dimension must be >= 1".into()));
        }
        if free_axes.is_empty() || free_axes.len() > ambient_dim {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k <= n free axes, got k = {}, n = {}",
                free_axes.len(),
                ambient_dim
            )));
        }
        let mut axes = free_axes.to_vec();
        axes.sort_unstable();
        axes.dedup();
        if axes.len() != free_axes.len() {
            return Err(Error::InvalidInput("free axes must be distinct".into()));
        }
        if *axes.last().unwrap() >= ambient_dim {
            return Err(Error::InvalidInput(format!(
                "free axis {} out of range for n = {}",
                axes.last().unwrap(),
                ambient_dim
            )));
        }
        if base.dim() != ambient_dim {
            return Err(Error::DimensionMismatch(ambient_dim, base.dim()));
        }
        let mut coords = base.coords().to_vec();
        for &j in &axes {
            coords[j] = 0.0;
        }
        Ok(Self {
            ambient_dim,
            free_axes: axes,
            base: TorusPoint::wrap(&coords)?,
        })
    }

    /// The full torus T^n viewed as a subtorus of itself.
    pub fn full(ambient_dim: usize) -> Self {
        let axes: Vec<usize> = (0..ambient_dim).collect();
        Self::new(ambient_dim, &axes, &TorusPoint::origin(ambient_dim)).unwrap()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Subtorus dimension k.
    pub fn k(&self) -> usize {
        self.free_axes.len()
    }

    pub fn free_axes(&self) -> &[usize] {
        &self.free_axes
    }

    pub fn base(&self) -> &TorusPoint {
        &self.base
    }

    /// Embed parameter coordinates u in T^k onto the subtorus: the output
    /// agrees with `base` off the free axes and with `u` on them. This is
    /// an isometry from T^k onto the subtorus.
    pub fn embed(&self, u: &[f64]) -> Result<TorusPoint> {
        if u.len() != self.k() {
            return Err(Error::DimensionMismatch(self.k(), u.len()));
        }
        let mut coords = self.base.coords().to_vec();
        for (&j, &v) in self.free_axes.iter().zip(u) {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coordinate {v}")));
            }
            coords[j] = wrap_coord(v);
        }
        TorusPoint::wrap(&coords)
    }

    /// Parameter coordinates of an ambient point that lies on the subtorus
    /// (its free-axis coordinates, in free-axis order).
    pub fn project_params(&self, x: &TorusPoint) -> Result<Vec<f64>> {
        if x.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch(self.ambient_dim, x.dim()));
        }
        Ok(self.free_axes.iter().map(|&j| x.coords()[j]).collect())
    }

    /// Whether `other` uses a subset of our free axes with the same base
    /// values off its own axes. Used by restriction-monotonicity tests.
    pub fn contains_subtorus(&self, other: &SubtorusSpec) -> bool {
        other.ambient_dim == self.ambient_dim
            && other
                .free_axes
                .iter()
                .all(|a| self.free_axes.binary_search(a).is_ok())
    }

    /// Subtorus with the base translated by `shift` (free-axis components
    /// of the shift are absorbed into the canonical zero).
    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        let moved = self.base.translate(shift)?;
        Self::new(self.ambient_dim, &self.free_axes, &moved)
    }

    /// One-line key=value record, e.g. `n=4 free=1,3 base=0.1,0,0.2,0`;
    /// lossless round-trip with `from_record`.
    pub fn to_record(&self) -> String {
        let free = self
            .free_axes
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let base = self
            .base
            .coords()
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!("n={} free={} base={}", self.ambient_dim, free, base)
    }

    pub fn from_record(record: &str) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for token in record.split_whitespace() {
            let (key, val) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{token}'")))?;
            if map.insert(key.to_string(), val.to_string()).is_some() {
                return Err(Error::Parse(format!("duplicate key '{key}'")));
            }
        }
        let n: usize = map
            .remove("n")
            .ok_or_else(|| Error::Parse("missing key 'n'".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad n: {e}")))?;
        let free: Vec<usize> = map
            .remove("free")
            .ok_or_else(|| Error::Parse("missing key 'free'".into()))?
            .split(',')
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad axis '{t}': {e}")))
            })
            .collect::<Result<_>>()?;
        let base = match map.remove("base") {
            Some(v) => TorusPoint::wrap(
                &v.split(',')
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bad coordinate '{t}': {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?,
            )?,
            None => TorusPoint::origin(n),
        };
        if let Some((key, _)) = map.into_iter().next() {
            return Err(Error::Parse(format!("unknown key '{key}'")));
        }
        Self::new(n, &free, &base)
    }
}

/// A geodesic segment inside one injectivity-radius chart: endpoints at
/// geodesic distance `length` <= 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    start: TorusPoint,
    end: TorusPoint,
    length: f64,
}

impl Segment {
    pub fn new(start: TorusPoint, end: TorusPoint) -> Result<Self> {
        let length = torus_dist(&start, &end)?;
        if length > 0.5 + COORD_TOL {
            return Err(Error::InvalidInput(format!(
                "segment length {length} exceeds the injectivity radius chart limit 1/2"
            )));
        }
        Ok(Self { start, end, length })
    }

    pub fn start(&self) -> &TorusPoint {
        &self.start
    }

    pub fn end(&self) -> &TorusPoint {
        &self.end
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Midpoint along the shortest geodesic from start to end.
    pub fn midpoint(&self) -> TorusPoint {
        let coords: Vec<f64> = self
            .start
            .coords()
            .iter()
            .zip(self.end.coords())
            .map(|(&a, &b)| a + 0.5 * signed_circle_diff(a, b))
            .collect();
        TorusPoint::wrap(&coords).expect("midpoint of finite points is finite")
    }
}

/// Bijective, distance-preserving identification of the geodesic ball
/// B(center, radius) on T^d with the Euclidean ball of the same radius,
/// available for radius <= 1/4 (strictly inside the injectivity radius).
#[derive(Debug, Clone)]
pub struct Chart {
    center: TorusPoint,
    radius: f64,
}

impl Chart {
    pub fn new(center: TorusPoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("chart radius {radius} must be positive")));
        }
        if radius > MAX_CHART_RADIUS {
            return Err(Error::ChartTooLarge(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &TorusPoint {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Euclidean coordinates of a ball point relative to the center.
    /// The center lifts to the origin; distances are preserved exactly.
    pub fn lift(&self, x: &TorusPoint) -> Result<Vec<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), x.dim()));
        }
        let v: Vec<f64> = self
            .center
            .coords()
            .iter()
            .zip(x.coords())
            .map(|(&c, &p)| signed_circle_diff(c, p))
            .collect();
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > self.radius + COORD_TOL {
            return Err(Error::OutsideChart {
                dist: norm,
                radius: self.radius,
            });
        }
        Ok(v)
    }

    /// Torus point of a Euclidean ball vector. Inverse of `lift`.
    pub fn project(&self, v: &[f64]) -> Result<TorusPoint> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), v.len()));
        }
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > self.radius + COORD_TOL {
            return Err(Error::OutsideChart {
                dist: norm,
                radius: self.radius,
            });
        }
        let coords: Vec<f64> = self
            .center
            .coords()
            .iter()
            .zip(v)
            .map(|(&c, &d)| c + d)
            .collect();
        TorusPoint::wrap(&coords)
    }
}

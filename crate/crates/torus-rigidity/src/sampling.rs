//! Deterministic, parallelism-independent randomness.
//!
//! Every drawn sample is keyed by a (master_seed, stream_id, sample_index)
//! triple. The triple is hashed into a ChaCha8 key, so the value of sample i
//! is a pure function of the triple: results do not depend on evaluation
//! order, thread count, or how many other samples were drawn first. Monte
//! Carlo loops parallelize by splitting sample_index ranges.

use crate::error::{Error, Result};
use crate::torus::{SubtorusSpec, TorusPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Key of one logical random draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
    pub sample_index: u64,
}

#[inline]
fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64, sample_index: u64) -> Self {
        Self {
            master_seed,
            stream_id,
            sample_index,
        }
    }

    /// Same stream, different sample.
    pub fn with_index(&self, sample_index: u64) -> Self {
        Self {
            sample_index,
            ..*self
        }
    }

    /// Derived stream for a sub-experiment; keeps the master seed.
    pub fn substream(&self, offset: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id: mix(self.stream_id ^ offset.wrapping_mul(0xd134_2543_de82_ef95)),
            sample_index: 0,
        }
    }

    /// The generator for this triple. Construction cost is a few
    /// multiplications; build one per sample.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = mix(self.master_seed)
            ^ mix(self.stream_id.wrapping_mul(0xa076_1d64_78bd_642f))
            ^ mix(self.sample_index.wrapping_mul(0xe703_7ed1_a0b4_28db));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            splitmix64(&mut state);
            chunk.copy_from_slice(&mix(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Uniform k-subset of {0, .., n-1}, sorted ascending. Floyd's algorithm:
/// exactly uniform over all C(n, k) subsets, O(k) draws.
pub fn sample_subset(n: usize, k: usize, seed: SeedSpec) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "subset size must satisfy 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut rng = seed.rng();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for j in (n - k)..n {
        let t = rng.gen_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Uniform random k-dimensional coordinate subtorus of T^n: free axes are a
/// uniform k-subset, fixed coordinates are independent uniforms in [0, 1).
/// This is the unique distribution invariant under translations and
/// coordinate permutations.
pub fn sample_subtorus(n: usize, k: usize, seed: SeedSpec) -> Result<SubtorusSpec> {
    let mut rng = seed.rng();
    let axes = {
        // same draw order as sample_subset so k = n consumes no extra state
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "subtorus dimension must satisfy 1 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        for j in (n - k)..n {
            let t = rng.gen_range(0..=j);
            if chosen.contains(&t) {
                chosen.push(j);
            } else {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        chosen
    };
    let mut base = vec![0.0f64; n];
    for (i, b) in base.iter_mut().enumerate() {
        if axes.binary_search(&i).is_err() {
            *b = rng.gen::<f64>();
        }
    }
    SubtorusSpec::new(n, &axes, &TorusPoint::wrap(&base)?)
}

/// Uniform point in the Euclidean ball of the given radius in R^dim.
/// dim = 0 returns the empty vector (the ball is a single point).
/// Gaussian direction times U^(1/dim) radius: exact in every dimension.
pub fn sample_ball(dim: usize, radius: f64, seed: SeedSpec) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("ball radius {radius} must be positive")));
    }
    Ok(ball_from_rng(dim, radius, &mut seed.rng()))
}

/// Ball sampling off an existing generator; estimators that redraw within
/// one sample index use this.
pub(crate) fn ball_from_rng(dim: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    if dim == 0 {
        return Vec::new();
    }
    let mut dir: Vec<f64>;
    let mut norm: f64;
    loop {
        dir = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            break;
        }
    }
    let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
    dir.into_iter().map(|x| x * r / norm).collect()
}

/// Point (1-T) x + T z with T uniform on [0, 1], for chart coordinates x, z.
pub fn sample_chord_point(x: &[f64], z: &[f64], seed: SeedSpec) -> Result<Vec<f64>> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch(x.len(), z.len()));
    }
    let t: f64 = seed.rng().gen();
    Ok(x.iter()
        .zip(z)
        .map(|(&a, &b)| (1.0 - t) * a + t * b)
        .collect())
}

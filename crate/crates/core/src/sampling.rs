//! Deterministic, seeded generation of X ~ N(0, Sigma), streamed in batches
//! so n x d never has to sit in memory.
//!
//! Sub-seeding: vector `i` draws its innovations from a SplitMix64 generator
//! seeded with `splitmix_mix(seed, i)` (the SplitMix64 finalizer applied to
//! `seed XOR i`). The delivered sample multiset is therefore a function of
//! `(model, n, seed)` alone: batch size and the number of worker threads
//! cannot change it. Normal variates come from `rand_distr`'s ziggurat,
//! which is fixed within a release by the lockfile; tests on the stream are
//! statistical, never bit-exact across generator implementations.
//!
//! Toeplitz models are sampled by the exact AR(1) recursion
//! `x[0] = z[0]`, `x[j] = c*x[j-1] + sqrt(1-c^2)*z[j]` (O(d) per vector,
//! covariance exactly `c^|i-j|`); explicit models go through a cached
//! Cholesky factor. Permuted Toeplitz models sample the base vector and
//! then permute coordinates, which has exactly the permuted covariance.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::{CovarianceKind, CovarianceModel};
use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, SquareMat};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream-splitting mix: the SplitMix64 finalizer applied to `seed ^ i`.
///
/// Used for per-vector innovation seeds, per-cell experiment seeds, and
/// derived streams (coverage, permutations).
#[inline]
pub fn splitmix_mix(seed: u64, i: u64) -> u64 {
    splitmix_finalize(seed ^ i)
}

/// SplitMix64 generator. Small, fast, and equidistributed enough for
/// Monte Carlo work; one instance per sampled vector.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }
}

impl RngCore for SplitMix64 {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        splitmix_finalize(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Iterator of i.i.d. N(0,1) draws for a fixed seed.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: SplitMix64,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: SplitMix64::new(seed),
        }
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        Some(self.rng.sample(StandardNormal))
    }
}

/// `count` i.i.d. standard normal draws; identical sequence for identical seed.
pub fn standard_normal_stream(seed: u64, count: usize) -> impl Iterator<Item = f64> {
    NormalStream::new(seed).take(count)
}

/// AR(1) vector from explicit innovations: `x[0] = z[0]`,
/// `x[j] = c*x[j-1] + sqrt(1-c^2)*z[j]`. The result has covariance exactly
/// `Sigma_c`; fed with the same innovations it agrees entrywise with the
/// Cholesky sampler (the recursion is the Cholesky factor of `Sigma_c`).
pub fn sample_ar1_vector(c: f64, innovations: &[f64]) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::domain(format!(
            "AR(1) recursion requires 0 <= c < 1, got {c}"
        )));
    }
    let mut out = vec![0.0; innovations.len()];
    ar1_fill(c, innovations, &mut out);
    Ok(out)
}

#[inline]
fn ar1_fill(c: f64, innovations: &[f64], out: &mut [f64]) {
    let scale = (1.0 - c * c).sqrt();
    let mut prev = 0.0;
    for (j, (&z, x)) in innovations.iter().zip(out.iter_mut()).enumerate() {
        prev = if j == 0 { z } else { c * prev + scale * z };
        *x = prev;
    }
}

/// Configuration for a sample stream: how many vectors, from which seed,
/// delivered in batches of which size.
#[derive(Debug, Clone)]
pub struct SampleStreamConfig {
    pub n: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl SampleStreamConfig {
    pub const DEFAULT_BATCH_SIZE: usize = 1024;

    pub fn new(n: usize, seed: u64) -> Self {
        SampleStreamConfig {
            n,
            seed,
            batch_size: Self::DEFAULT_BATCH_SIZE,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::domain("sample count must be at least 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::domain("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// One delivered batch: vectors `start .. start + len` of the stream,
/// stored contiguously row-major.
#[derive(Debug)]
pub struct SampleBatch<'a> {
    start: usize,
    d: usize,
    data: &'a [f64],
}

impl<'a> SampleBatch<'a> {
    /// Global index of the first vector in the batch.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [f64]> {
        self.data.chunks_exact(self.d)
    }
}

/// Per-vector sampler for a covariance model. For explicit models the
/// Cholesky factor is computed once here and reused for every vector.
struct VectorSampler<'a> {
    model: &'a CovarianceModel,
    cholesky: Option<SquareMat>,
}

impl<'a> VectorSampler<'a> {
    fn new(model: &'a CovarianceModel) -> Result<Self> {
        let cholesky = match model.kind() {
            CovarianceKind::Toeplitz { .. } => None,
            CovarianceKind::Explicit(m) => Some(cholesky_lower(m)?),
        };
        Ok(VectorSampler { model, cholesky })
    }

    /// Fill `out` with vector `index` of the stream identified by `seed`.
    /// `scratch` must have length d.
    fn fill(&self, seed: u64, index: u64, out: &mut [f64], scratch: &mut [f64]) {
        let mut rng = SplitMix64::new(splitmix_mix(seed, index));
        match self.model.kind() {
            CovarianceKind::Toeplitz { c } => match self.model.permutation() {
                None => {
                    let scale = (1.0 - c * c).sqrt();
                    let mut prev = 0.0;
                    for (j, x) in out.iter_mut().enumerate() {
                        let z: f64 = rng.sample(StandardNormal);
                        prev = if j == 0 { z } else { c * prev + scale * z };
                        *x = prev;
                    }
                }
                Some(perm) => {
                    for z in scratch.iter_mut() {
                        *z = rng.sample(StandardNormal);
                    }
                    // Base AR(1) vector in place, then gather through the
                    // permutation.
                    let innovations = &mut *scratch;
                    ar1_fill_in_place(*c, innovations);
                    for (x, &p) in out.iter_mut().zip(perm) {
                        *x = innovations[p];
                    }
                }
            },
            CovarianceKind::Explicit(_) => {
                for z in scratch.iter_mut() {
                    *z = rng.sample(StandardNormal);
                }
                self.cholesky
                    .as_ref()
                    .expect("explicit models always carry a factor")
                    .lower_tri_matvec(scratch, out);
            }
        }
    }
}

#[inline]
fn ar1_fill_in_place(c: f64, buf: &mut [f64]) {
    let scale = (1.0 - c * c).sqrt();
    let mut prev = 0.0;
    for (j, v) in buf.iter_mut().enumerate() {
        prev = if j == 0 { *v } else { c * prev + scale * *v };
        *v = prev;
    }
}

/// Stream `cfg.n` vectors to `consumer` in batches. Batches may be
/// delivered concurrently from worker threads; batch contents depend only
/// on `(model, n, seed)`, never on scheduling or batch size.
///
/// A consumer error aborts the stream and is propagated.
pub fn sample_batches<F>(model: &CovarianceModel, cfg: &SampleStreamConfig, consumer: F) -> Result<()>
where
    F: Fn(&SampleBatch<'_>) -> Result<()> + Sync,
{
    map_sample_batches(model, cfg, |batch| {
        consumer(batch)?;
        Ok(Vec::<()>::new())
    })
    .map(|_| ())
}

/// Workhorse behind every statistic pipeline: runs `f` on each batch (in
/// parallel) and concatenates the per-batch outputs in batch order, so the
/// result is a deterministic function of `(model, cfg, f)`.
pub fn map_sample_batches<T, F>(
    model: &CovarianceModel,
    cfg: &SampleStreamConfig,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SampleBatch<'_>) -> Result<Vec<T>> + Sync,
{
    cfg.validate()?;
    let sampler = VectorSampler::new(model)?;
    let d = model.dim();
    let num_batches = cfg.n.div_ceil(cfg.batch_size);

    let per_batch: Vec<Result<Vec<T>>> = (0..num_batches)
        .into_par_iter()
        .map(|b| {
            let start = b * cfg.batch_size;
            let len = cfg.batch_size.min(cfg.n - start);
            let mut buf = vec![0.0; len * d];
            let mut scratch = vec![0.0; d];
            for r in 0..len {
                sampler.fill(
                    cfg.seed,
                    (start + r) as u64,
                    &mut buf[r * d..(r + 1) * d],
                    &mut scratch,
                );
            }
            f(&SampleBatch {
                start,
                d,
                data: &buf,
            })
        })
        .collect();

    let mut out = Vec::with_capacity(cfg.n);
    for chunk in per_batch {
        out.extend(chunk?);
    }
    Ok(out)
}

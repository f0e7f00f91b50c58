//! Deterministic Monte Carlo fan-out.
//!
//! Replica `i` always draws from its own ChaCha8 stream seeded by a hash of
//! `(master_seed, i)`. Replicas are grouped into fixed-size chunks; each chunk
//! folds into a fresh accumulator and the chunk accumulators are merged in
//! index order, so results do not depend on how many workers ran the chunks.

pub mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ReplicaRng = ChaCha8Rng;

/// Replicas per chunk; the unit of scheduling and of the merge tree.
pub const CHUNK: u64 = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub replicas: u64,
    pub master_seed: u64,
    /// `None` uses every available core; written as `"auto"` in configs.
    #[serde(default, with = "workers_field")]
    pub workers: Option<usize>,
}

mod workers_field {
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Count(usize),
        Word(String),
    }

    pub fn serialize<S: Serializer>(w: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
        match w {
            Some(n) => s.serialize_u64(*n as u64),
            None => s.serialize_str("auto"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Count(n)) => Ok(Some(n)),
            Some(Raw::Word(w)) if w == "auto" => Ok(None),
            Some(Raw::Word(w)) => Err(de::Error::custom(format!(
                "workers: expected a count or \"auto\", got {w:?}"
            ))),
        }
    }
}

impl McConfig {
    pub fn new(replicas: u64, master_seed: u64) -> Self {
        McConfig {
            replicas,
            master_seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::invalid("replicas", "need at least one replica"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "need at least one worker"));
        }
        Ok(())
    }

    /// Scheduling implied by `workers` and the `parallel` feature.
    pub fn execution(&self) -> Execution {
        if cfg!(feature = "parallel") && self.workers != Some(1) {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` under `master_seed`.
pub fn replica_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

pub fn replica_rng(master_seed: u64, index: u64) -> ReplicaRng {
    ChaCha8Rng::seed_from_u64(replica_seed(master_seed, index))
}

/// Accumulators that can absorb another accumulator of the same kind.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

/// Streaming mean and variance (Welford updates, Chan merges).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McEstimate {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl McEstimate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut e = Self::new();
        for &x in xs {
            e.push(x);
        }
        e
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    /// `(mean − expected) / SE`; zero when both the gap and the SE vanish.
    pub fn z_score(&self, expected: f64) -> f64 {
        let gap = self.mean - expected;
        let se = self.standard_error();
        if se == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                gap.signum() * f64::INFINITY
            }
        } else {
            gap / se
        }
    }
}

impl Merge for McEstimate {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }
}

/// Streaming covariance of a pair (bivariate Welford, Chan merges).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CovarianceAccumulator {
    pub n: u64,
    mean_x: f64,
    mean_y: f64,
    m2x: f64,
    m2y: f64,
    cxy: f64,
}

impl CovarianceAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        self.mean_x += dx / n;
        let dy = y - self.mean_y;
        self.mean_y += dy / n;
        self.m2x += dx * (x - self.mean_x);
        self.m2y += dy * (y - self.mean_y);
        self.cxy += dx * (y - self.mean_y);
    }

    pub fn covariance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.cxy / (self.n - 1) as f64
    }

    /// Pearson correlation; zero when either coordinate is constant.
    pub fn correlation(&self) -> f64 {
        if self.m2x == 0.0 || self.m2y == 0.0 {
            return 0.0;
        }
        self.cxy / (self.m2x * self.m2y).sqrt()
    }

    /// `r √n`, approximately standard normal under zero correlation.
    pub fn correlation_z(&self) -> f64 {
        self.correlation() * (self.n as f64).sqrt()
    }
}

impl Merge for CovarianceAccumulator {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        self.cxy += other.cxy + dx * dy * na * nb / n;
        self.m2x += other.m2x + dx * dx * na * nb / n;
        self.m2y += other.m2y + dy * dy * na * nb / n;
        self.mean_x += dx * nb / n;
        self.mean_y += dy * nb / n;
        self.n += other.n;
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// Several estimates updated in lockstep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiEstimate(pub Vec<McEstimate>);

impl MultiEstimate {
    pub fn new(k: usize) -> Self {
        MultiEstimate(vec![McEstimate::new(); k])
    }

    pub fn push(&mut self, xs: &[f64]) {
        debug_assert_eq!(xs.len(), self.0.len());
        for (e, &x) in self.0.iter_mut().zip(xs) {
            e.push(x);
        }
    }
}

impl Merge for MultiEstimate {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            a.merge(b);
        }
    }
}

/// Counts of nonnegative integer outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, k: usize) {
        if k >= self.counts.len() {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.counts.get(k).copied().unwrap_or(0) as f64 / total as f64
    }
}

impl Merge for Histogram {
    fn merge(&mut self, other: Self) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

/// Ordered collection of per-replica outputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collect<T>(pub Vec<T>);

impl<T> Merge for Collect<T> {
    fn merge(&mut self, mut other: Self) {
        self.0.append(&mut other.0);
    }
}

impl<A: Merge, B: Merge> Merge for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

impl<A: Merge, B: Merge, C: Merge> Merge for (A, B, C) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
        self.2.merge(other.2);
    }
}

fn fold_chunk<A, I, K>(config: &McConfig, chunk: u64, init: &I, kernel: &K) -> Result<A>
where
    I: Fn() -> A,
    K: Fn(&mut ReplicaRng, u64, &mut A) -> Result<()>,
{
    let mut acc = init();
    let start = chunk * CHUNK;
    let end = (start + CHUNK).min(config.replicas);
    for index in start..end {
        let mut rng = replica_rng(config.master_seed, index);
        kernel(&mut rng, index, &mut acc).map_err(|e| Error::Replica {
            index,
            source: Box::new(e),
        })?;
    }
    Ok(acc)
}

fn merge_ordered<A: Merge>(parts: Vec<Result<A>>) -> Result<A> {
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one chunk")?;
    for part in iter {
        acc.merge(part?);
    }
    Ok(acc)
}

/// Fold every replica into an accumulator. `kernel` receives the replica's
/// stream, its index and the accumulator of the chunk it belongs to.
pub fn run_fold<A, I, K>(config: &McConfig, init: I, kernel: K) -> Result<A>
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    K: Fn(&mut ReplicaRng, u64, &mut A) -> Result<()> + Sync,
{
    run_fold_with(config, config.execution(), init, kernel)
}

/// [`run_fold`] with the scheduling chosen explicitly.
pub fn run_fold_with<A, I, K>(
    config: &McConfig,
    execution: Execution,
    init: I,
    kernel: K,
) -> Result<A>
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    K: Fn(&mut ReplicaRng, u64, &mut A) -> Result<()> + Sync,
{
    config.validate()?;
    let chunks = config.replicas.div_ceil(CHUNK);
    let parts: Vec<Result<A>> = match execution {
        Execution::Sequential => (0..chunks)
            .map(|c| fold_chunk(config, c, &init, &kernel))
            .collect(),
        Execution::Parallel => parallel_chunks(config, chunks, &init, &kernel)?,
    };
    merge_ordered(parts)
}

#[cfg(feature = "parallel")]
fn parallel_chunks<A, I, K>(
    config: &McConfig,
    chunks: u64,
    init: &I,
    kernel: &K,
) -> Result<Vec<Result<A>>>
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    K: Fn(&mut ReplicaRng, u64, &mut A) -> Result<()> + Sync,
{
    use rayon::prelude::*;
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| fold_chunk(config, c, init, kernel))
            .collect::<Vec<_>>()
    };
    match config.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_chunks<A, I, K>(
    config: &McConfig,
    chunks: u64,
    init: &I,
    kernel: &K,
) -> Result<Vec<Result<A>>>
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    K: Fn(&mut ReplicaRng, u64, &mut A) -> Result<()> + Sync,
{
    Ok((0..chunks)
        .map(|c| fold_chunk(config, c, init, kernel))
        .collect())
}

/// Mean and standard error of a scalar kernel.
pub fn run_replicas<K>(config: &McConfig, kernel: K) -> Result<McEstimate>
where
    K: Fn(&mut ReplicaRng) -> Result<f64> + Sync,
{
    run_fold(config, McEstimate::new, |rng, _, acc| {
        acc.push(kernel(rng)?);
        Ok(())
    })
}

/// Histogram of an integer-valued kernel.
pub fn run_histogram<K>(config: &McConfig, kernel: K) -> Result<Histogram>
where
    K: Fn(&mut ReplicaRng) -> Result<usize> + Sync,
{
    run_fold(config, Histogram::new, |rng, _, acc| {
        acc.push(kernel(rng)?);
        Ok(())
    })
}

/// Every replica's output, in replica order.
pub fn run_map<T, K>(config: &McConfig, kernel: K) -> Result<Vec<T>>
where
    T: Send,
    K: Fn(&mut ReplicaRng, u64) -> Result<T> + Sync,
{
    run_fold(
        config,
        || Collect(Vec::new()),
        |rng, i, acc: &mut Collect<T>| {
            acc.0.push(kernel(rng, i)?);
            Ok(())
        },
    )
    .map(|c| c.0)
}

//! Labeled synthetic embeddings on the unit hypersphere.
//!
//! Identity means are uniform on the sphere. A sample is its identity mean
//! plus isotropic Gaussian noise with standard deviation `1 / concentration`,
//! renormalized to unit length. This is a tangent-Gaussian stand-in for von
//! Mises-Fisher sampling.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the seed and the
//! index of the thing being drawn, so output is independent of thread count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::embedding::{norm, EmbeddingSet};
use crate::error::{Error, Result};

const MEAN_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1 << 62;
const NOISE_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq)]
pub enum SamplesPerIdentity {
    Uniform(usize),
    PerIdentity(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_identities: usize,
    pub samples_per_identity: SamplesPerIdentity,
    pub dim: usize,
    pub concentration: f64,
    /// Fraction of samples whose label is moved to a different identity.
    pub noise_fraction: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(num_identities: usize, per_identity: usize, dim: usize, concentration: f64, seed: u64) -> Self {
        Self {
            num_identities,
            samples_per_identity: SamplesPerIdentity::Uniform(per_identity),
            dim,
            concentration,
            noise_fraction: 0.0,
            seed,
        }
    }

    pub fn with_noise(mut self, noise_fraction: f64) -> Self {
        self.noise_fraction = noise_fraction;
        self
    }

    fn counts(&self) -> Vec<usize> {
        match &self.samples_per_identity {
            SamplesPerIdentity::Uniform(n) => vec![*n; self.num_identities],
            SamplesPerIdentity::PerIdentity(v) => v.clone(),
        }
    }

    fn noisy_count(&self, total: usize) -> usize {
        (self.noise_fraction * total as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_identities == 0 || self.dim == 0 {
            return Err(Error::Config("identity count and dimension must be at least 1".into()));
        }
        let counts = self.counts();
        if counts.len() != self.num_identities {
            return Err(Error::Config(format!(
                "{} per-identity counts given for {} identities",
                counts.len(),
                self.num_identities
            )));
        }
        if counts.contains(&0) {
            return Err(Error::Config("every identity needs at least one sample".into()));
        }
        if !(self.concentration.is_finite() && self.concentration > 0.0) {
            return Err(Error::Config(format!(
                "concentration must be positive, got {}",
                self.concentration
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return Err(Error::Config(format!(
                "noise fraction must be in [0, 1], got {}",
                self.noise_fraction
            )));
        }
        let total: usize = counts.iter().sum();
        if self.num_identities == 1 && self.noisy_count(total) > 0 {
            return Err(Error::Config("label noise needs at least two identities".into()));
        }
        Ok(())
    }
}

/// A generated set. `set.labels()` holds the observed (possibly noisy)
/// labels; `true_labels` the identity each vector was drawn from.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub set: EmbeddingSet,
    pub true_labels: Vec<i64>,
    pub noisy: Vec<usize>,
}

fn keyed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let counts = cfg.counts();
    let dim = cfg.dim;
    let sigma = 1.0 / cfg.concentration;

    let means: Vec<Vec<f64>> = (0..cfg.num_identities)
        .into_par_iter()
        .map(|c| random_unit(&mut keyed_rng(cfg.seed, MEAN_STREAM + c as u64), dim))
        .collect();
    let true_labels: Vec<i64> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c as i64, n))
        .collect();
    let total = true_labels.len();

    let rows: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mean = &means[true_labels[i] as usize];
            let mut rng = keyed_rng(cfg.seed, SAMPLE_STREAM + i as u64);
            loop {
                let v: Vec<f64> = mean
                    .iter()
                    .map(|m| m + sigma * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let n = norm(&v);
                if n > 0.0 {
                    return v.into_iter().map(|x| x / n).collect();
                }
            }
        })
        .collect();

    let mut labels = true_labels.clone();
    let mut rng = keyed_rng(cfg.seed, NOISE_STREAM);
    let mut noisy = index::sample(&mut rng, total, cfg.noisy_count(total)).into_vec();
    noisy.sort_unstable();
    for &i in &noisy {
        let others = cfg.num_identities as i64 - 1;
        let r = rng.random_range(0..others);
        labels[i] = if r < true_labels[i] { r } else { r + 1 };
    }

    let set = EmbeddingSet::from_rows(&rows)?.with_labels(labels)?;
    Ok(Synthetic {
        set,
        true_labels,
        noisy,
    })
}

//! Gaussian simulation designs: one-sided p-values from unit-variance test
//! statistics with equicorrelated noise.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfdr::{AltConfig, MeanConfig};
use crate::normal;
use crate::sample::PValueSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub m: usize,
    pub pi0: f64,
    pub kind: MeanConfig,
    /// Equicorrelation of the noise, in `[0, 1]`.
    pub rho: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(m: usize, pi0: f64, kind: MeanConfig) -> Self {
        Self {
            m,
            pi0,
            kind,
            rho: 0.0,
            seed: 0,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn null_count(&self) -> usize {
        (self.pi0 * self.m as f64).round() as usize
    }

    pub fn alt_count(&self) -> usize {
        self.m - self.null_count()
    }

    pub fn alt_config(&self) -> AltConfig {
        AltConfig {
            kind: self.kind,
            pi0: self.pi0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.pi0) {
            return Err(Error::Config(format!("pi0 must lie in [0, 1], got {}", self.pi0)));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.kind == MeanConfig::Alternating && self.alt_count() % 4 != 0 {
            return Err(Error::Config(format!(
                "alternating configuration needs m1 divisible by 4, got m1 = {}",
                self.alt_count()
            )));
        }
        Ok(())
    }
}

/// Independent random stream for `(seed, stream)`; identical on every call.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Means: the first `m1` coordinates carry the configuration's alternative
/// means (cycled), the remaining `m0` are zero.
pub fn mean_vector(config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let m1 = config.alt_count();
    let means = config.kind.alternative_means();
    Ok((0..config.m)
        .map(|i| if i < m1 { means[i % means.len()] } else { 0.0 })
        .collect())
}

/// One replication: `Z_i = mu_i + sqrt(rho) W + sqrt(1 - rho) e_i`,
/// `p_i = 1 - Phi(Z_i)`. Randomness depends only on `(seed, replication)`.
pub fn sample_pvalues(config: &SimConfig, replication: u64) -> Result<PValueSample> {
    let mu = mean_vector(config)?;
    let mut rng = stream_rng(config.seed, replication);
    let shared: f64 = rng.sample(StandardNormal);
    let (a, b) = (config.rho.sqrt(), (1.0 - config.rho).sqrt());
    let values = mu
        .iter()
        .map(|&m| {
            let e: f64 = rng.sample(StandardNormal);
            normal::sf(m + a * shared + b * e)
        })
        .collect();
    PValueSample::new(values)?.with_truth(mu.iter().map(|&m| m == 0.0).collect())
}

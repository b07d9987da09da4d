//! Seeded Gaussian noise.
//!
//! Gaussian variates come from the basic Box–Muller transform applied to a
//! ChaCha20 keystream. Each `(seed, stream)` pair names an independent,
//! reproducible sequence, so per-sample streams can be consumed in any order
//! or in parallel without changing results.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

/// Additive white Gaussian noise level. `alpha` is the variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    sigma: f64,
}

impl NoiseSpec {
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        Ok(NoiseSpec { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.sigma * self.sigma
    }
}

pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: RngSeed, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed.0);
        rng.set_stream(stream);
        GaussianStream { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64], std_dev: f64) {
        for v in out {
            *v = std_dev * self.standard_normal();
        }
    }
}

/// Returns `u + e` with `e` i.i.d. `N(0, sigma²)`.
pub fn add_awgn(u: &Signal, noise: NoiseSpec, seed: RngSeed) -> Signal {
    if noise.sigma() == 0.0 {
        return u.clone();
    }
    let mut stream = GaussianStream::new(seed, 0);
    let data = u
        .as_slice()
        .iter()
        .map(|&v| v + noise.sigma() * stream.standard_normal())
        .collect();
    u.like(data).with_domain(crate::signal::Domain::Unbounded)
}

//! The Gaussian noise stream shared by the MPS and dense trajectory codes.
//!
//! Contract: `ChaCha8Rng::seed_from_u64(seed)`, one standard normal `f64`
//! per noise sub-step, drawn in time order after the unitary part of a step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    substeps: usize,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self::with_substeps(seed, 1)
    }

    /// Each Wiener increment over `dt` is the sum of `substeps` draws over
    /// `dt / substeps`; a run at `dt` with `2m` sub-steps sees the same
    /// Brownian path as a run at `dt / 2` with `m`.
    pub fn with_substeps(seed: u64, substeps: usize) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), substeps: substeps.max(1) }
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Wiener increment `ΔW` over `dt`, variance `dt`.
    pub fn wiener(&mut self, dt: f64) -> f64 {
        let sub = dt / self.substeps as f64;
        let scale = sub.sqrt();
        (0..self.substeps).map(|_| scale * self.standard_normal()).sum()
    }
}

/// `dy = √κ ⟨a + a†⟩ dt + ΔW`.
pub fn homodyne_signal(field_mean: f64, kappa: f64, dt: f64, noise: &mut NoiseStream) -> f64 {
    kappa.sqrt() * field_mean * dt + noise.wiener(dt)
}

//! Stochastic intervention policies and coupled policy pairs.
//!
//! A [`Policy`] samples a treatment value, possibly conditionally on the
//! covariate point (the empirical policy resamples the observed treatments
//! of the conditioning stratum). A [`PolicyPair`] draws the joint
//! `(x0, x1)`; shift pairs couple the two draws explicitly, mirroring the
//! `(X, X + d)` construction, instead of sampling two independent marginals.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// A sampler for one stochastic intervention.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Always returns the given treatment value.
    Dirac(f64),
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    /// Resamples observed treatment values (the "current treatment" policy).
    Empirical(Arc<[f64]>),
}

impl Policy {
    pub fn empirical(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid("empirical policy needs at least one value".into()));
        }
        Ok(Policy::Empirical(values.into()))
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Policy::Dirac(x) => *x,
            Policy::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Policy::Normal { mean, sd } => {
                Normal::new(*mean, *sd).expect("valid normal").sample(rng)
            }
            Policy::Empirical(values) => values[rng.random_range(0..values.len())],
        }
    }

    /// Measure-preserving reflection of a draw, where the family admits one.
    /// Empirical policies fall back to returning the draw unchanged.
    pub fn reflect(&self, x: f64) -> f64 {
        match self {
            Policy::Dirac(v) => *v,
            Policy::Uniform { lo, hi } => lo + hi - x,
            Policy::Normal { mean, .. } => 2.0 * mean - x,
            Policy::Empirical(_) => x,
        }
    }
}

/// The joint sampler for `(x0, x1)`, honoring any coupling between the arms.
#[derive(Debug, Clone)]
pub enum PolicyPair {
    /// `x0` and `x1` drawn independently from two marginals.
    Independent { pi0: Policy, pi1: Policy },
    /// `x0` from the base policy, `x1 = x0 + shift`.
    SingleShift { base: Policy, shift: f64 },
    /// `(x0, x1) = (b - shift, b + shift)` for a base draw `b`.
    DoubleShift { base: Policy, shift: f64 },
}

impl PolicyPair {
    pub fn dirac(x0: f64, x1: f64) -> Self {
        PolicyPair::Independent {
            pi0: Policy::Dirac(x0),
            pi1: Policy::Dirac(x1),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match self {
            PolicyPair::Independent { pi0, pi1 } => (pi0.sample(rng), pi1.sample(rng)),
            PolicyPair::SingleShift { base, shift } => {
                let b = base.sample(rng);
                (b, b + shift)
            }
            PolicyPair::DoubleShift { base, shift } => {
                let b = base.sample(rng);
                (b - shift, b + shift)
            }
        }
    }

    /// The antithetic mate of a sampled pair: base draws are reflected and
    /// the coupling is reapplied.
    pub fn reflect(&self, pair: (f64, f64)) -> (f64, f64) {
        match self {
            PolicyPair::Independent { pi0, pi1 } => (pi0.reflect(pair.0), pi1.reflect(pair.1)),
            PolicyPair::SingleShift { base, shift } => {
                let b = base.reflect(pair.0);
                (b, b + shift)
            }
            PolicyPair::DoubleShift { base, shift } => {
                let b = base.reflect(pair.0 + shift);
                (b - shift, b + shift)
            }
        }
    }

    /// Draws `n1` joint samples.
    pub fn sample_n(&self, n1: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
        (0..n1).map(|_| self.sample(rng)).collect()
    }
}

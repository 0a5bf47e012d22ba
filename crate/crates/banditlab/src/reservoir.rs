//! Arm reservoir with polynomial tail mass near the optimum.
//!
//! New arms draw their initial mean from a distribution whose upper tail is
//! exactly polynomial:
//!
//! ```text
//! P(mean > 1 - x) = x^beta          for x in [0, 1]
//! ```
//!
//! The draw inverts the tail CDF: `mean = 1 - U^(1/beta)` with `U` uniform on
//! [0, 1). Larger `beta` makes near-optimal arms rarer. `beta = 1` is the
//! uniform reservoir.
//!
//! Rewards are Bernoulli in the arm's current mean; one uniform variate is
//! consumed per draw so reward streams can be replayed exactly.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How initial means are generated from the tail law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ReservoirKind {
    /// Invert the tail CDF directly; realizes the polynomial tail with
    /// equality (both regularity constants are 1).
    #[default]
    InverseCdfCanonical,
}

/// Reservoir of fresh arms with `P(mean > 1 - x) = x^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaRegularReservoir {
    beta: f64,
    kind: ReservoirKind,
}

impl BetaRegularReservoir {
    /// A reservoir with tail exponent `beta > 0`.
    pub fn new(beta: f64) -> Result<BetaRegularReservoir> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "reservoir exponent must be positive and finite, got {beta}"
            )));
        }
        Ok(BetaRegularReservoir {
            beta,
            kind: ReservoirKind::InverseCdfCanonical,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Probability that a fresh arm's mean exceeds `1 - x`.
    pub fn tail_probability(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!(
                "tail argument must lie in [0, 1], got {x}"
            )));
        }
        Ok(x.powf(self.beta))
    }

    /// Draw one initial mean; consumes exactly one uniform variate.
    pub fn sample_initial_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self.kind {
            ReservoirKind::InverseCdfCanonical => 1.0 - u.powf(1.0 / self.beta),
        }
    }
}

/// Reward noise around the current mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RewardModel {
    /// Reward is 1 with probability `mean`, else 0.
    #[default]
    Bernoulli,
}

/// Draw one reward at the given mean; consumes exactly one uniform variate.
pub fn draw_reward<R: Rng + ?Sized>(mean: f64, model: RewardModel, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&mean) {
        return Err(Error::Domain(format!(
            "reward mean must lie in [0, 1], got {mean}"
        )));
    }
    let u: f64 = rng.random();
    match model {
        RewardModel::Bernoulli => Ok(if u < mean { 1.0 } else { 0.0 }),
    }
}

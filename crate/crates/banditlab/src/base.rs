//! Finite-armed base policies used inside the restart schemes.
//!
//! Both policies know their horizon up front and use base-2 logarithms in
//! their confidence radii. The optimism index is
//!
//! ```text
//! index(a) = mean(a) + sqrt(e * log2(horizon) / count(a))
//! ```
//!
//! with `index = +inf` for unplayed arms and exploration constant `e = 2` by
//! default. Ties break toward the lowest arm index, so replays are exactly
//! reproducible.
//!
//! Successive elimination plays the surviving arms round-robin and drops an
//! arm once its empirical mean falls more than twice the confidence radius
//! below the best survivor. Both policies keep a suboptimal arm's pull count
//! logarithmic in the horizon, which is what the restart layer on top
//! relies on.

use crate::error::{Error, Result};

/// Optimism index for one arm.
pub fn ucb_index(count: u64, reward_sum: f64, horizon: u64, exploration: f64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    let n = count as f64;
    reward_sum / n + (exploration * (horizon as f64).log2() / n).sqrt()
}

/// A finite-armed policy driven by select/update calls. `select` returns a
/// local arm index; the caller reports the observed reward for that arm via
/// `update` before the next `select`.
pub trait BasePolicy: Send {
    fn select(&mut self, t: u64) -> usize;
    fn update(&mut self, arm: usize, reward: f64);
    fn num_arms(&self) -> usize;
}

/// Which base policy a restart scheme instantiates per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BaseKind {
    Ucb,
    SuccessiveElimination,
}

impl BaseKind {
    pub fn instantiate(
        &self,
        horizon: u64,
        num_arms: usize,
        exploration: f64,
    ) -> Result<Box<dyn BasePolicy>> {
        Ok(match self {
            BaseKind::Ucb => Box::new(UcbPolicy::new(horizon, num_arms, exploration)?),
            BaseKind::SuccessiveElimination => {
                Box::new(SuccessiveEliminationPolicy::new(horizon, num_arms, exploration)?)
            }
        })
    }
}

fn validate(horizon: u64, num_arms: usize, exploration: f64) -> Result<()> {
    if horizon < 2 {
        return Err(Error::Config(format!(
            "base policy horizon must be at least 2, got {horizon}"
        )));
    }
    if num_arms == 0 {
        return Err(Error::Config("base policy needs at least one arm".into()));
    }
    if !(exploration > 0.0) || !exploration.is_finite() {
        return Err(Error::Config(format!(
            "exploration constant must be positive, got {exploration}"
        )));
    }
    Ok(())
}

/// Horizon-aware optimism over a fixed arm set.
pub struct UcbPolicy {
    horizon: u64,
    exploration: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl UcbPolicy {
    pub fn new(horizon: u64, num_arms: usize, exploration: f64) -> Result<UcbPolicy> {
        validate(horizon, num_arms, exploration)?;
        Ok(UcbPolicy {
            horizon,
            exploration,
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
        })
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    fn index(&self, arm: usize) -> f64 {
        ucb_index(self.counts[arm], self.sums[arm], self.horizon, self.exploration)
    }
}

impl BasePolicy for UcbPolicy {
    fn select(&mut self, _t: u64) -> usize {
        let mut best = 0;
        let mut best_index = self.index(0);
        for arm in 1..self.counts.len() {
            let idx = self.index(arm);
            if idx > best_index {
                best = arm;
                best_index = idx;
            }
        }
        best
    }

    fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }

    fn num_arms(&self) -> usize {
        self.counts.len()
    }
}

/// Round-robin over a surviving set with confidence-gap elimination.
pub struct SuccessiveEliminationPolicy {
    horizon: u64,
    exploration: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    surviving: Vec<usize>,
    cursor: usize,
}

impl SuccessiveEliminationPolicy {
    pub fn new(horizon: u64, num_arms: usize, exploration: f64) -> Result<SuccessiveEliminationPolicy> {
        validate(horizon, num_arms, exploration)?;
        Ok(SuccessiveEliminationPolicy {
            horizon,
            exploration,
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
            surviving: (0..num_arms).collect(),
            cursor: 0,
        })
    }

    pub fn surviving(&self) -> &[usize] {
        &self.surviving
    }

    /// Drop survivors whose empirical mean trails the best by more than
    /// twice the shared confidence radius. Called at the end of each pass,
    /// when all survivors have equal counts.
    fn eliminate(&mut self) {
        let n = self.counts[self.surviving[0]] as f64;
        let radius = (self.exploration * (self.horizon as f64).log2() / n).sqrt();
        let best = self
            .surviving
            .iter()
            .map(|&a| self.sums[a] / self.counts[a] as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let (counts, sums) = (&self.counts, &self.sums);
        self.surviving
            .retain(|&a| best - sums[a] / counts[a] as f64 <= 2.0 * radius);
    }
}

impl BasePolicy for SuccessiveEliminationPolicy {
    fn select(&mut self, _t: u64) -> usize {
        self.surviving[self.cursor]
    }

    fn update(&mut self, arm: usize, reward: f64) {
        debug_assert_eq!(arm, self.surviving[self.cursor], "update out of protocol order");
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.cursor += 1;
        if self.cursor >= self.surviving.len() {
            self.eliminate();
            self.cursor = 0;
        }
    }

    fn num_arms(&self) -> usize {
        self.counts.len()
    }
}

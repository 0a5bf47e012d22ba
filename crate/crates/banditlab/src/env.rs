//! Bandit environment with a growing arm pool and a rested adversary.
//!
//! Arms are created on demand; each new arm gets a dense id in sampling
//! order. Playing an arm draws a Bernoulli reward at the arm's current mean.
//! After the reward is emitted the adversary may modify the mean of the
//! played arm only (a rested adversary), and the result is clipped to [0, 1].
//!
//! The environment keeps running totals of the realized non-stationarity:
//!
//! ```text
//! V   = sum over rounds of |mean change of the played arm|
//! L   = number of rounds whose play actually changed a mean
//! V_R = like V but counting only decreases (rotting part)
//! L_R = number of rounds whose play decreased a mean
//! ```
//!
//! The change applied after round `t` becomes visible at round `t + 1`; the
//! final round of the horizon has no successor, so no post-play modification
//! is applied or counted there.
//!
//! Every play is logged in a [`Trace`] together with a sparse mean-change
//! history, from which exact per-round means of every sampled arm can be
//! reconstructed offline.

use crate::error::{Error, Result};
use crate::reservoir::{draw_reward, BetaRegularReservoir, RewardModel};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;

/// Dense arm identifier, assigned in sampling order starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArmId(pub usize);

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which arm an abrupt change targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmSelector {
    /// Whatever arm is played at or after the scheduled round.
    Any,
    /// One specific arm.
    Arm(ArmId),
}

/// One scheduled mean rewrite. Because the adversary is rested, the rewrite
/// takes effect when a matching arm is next played at round >= `at_round`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbruptChange {
    pub at_round: u64,
    pub arm: ArmSelector,
    pub new_mean: f64,
}

/// Time index used by rate-based adversaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RateBasis {
    /// `t` is the global round index (1-based).
    #[default]
    GlobalRound,
    /// `t` is the played arm's play count (1-based, including this play).
    ArmPlays,
}

/// Callback deciding a mean delta for the played arm from the history so
/// far. The trace already contains the current round's outcome when the
/// callback runs; future randomness is never visible.
pub type ScriptedFn = Box<dyn Fn(&Trace, ArmId, f64) -> f64 + Send + Sync>;

/// Post-play mean dynamics.
pub enum Adversary {
    /// Means never change.
    Stationary,
    /// Played arm's mean decreases by `c / t`.
    Rotting { c: f64, basis: RateBasis },
    /// Played arm's mean increases by `c / t`.
    Rising { c: f64, basis: RateBasis },
    /// Scheduled rewrites; the latest entry with `at_round <= t` matching the
    /// played arm wins.
    Abrupt(Vec<AbruptChange>),
    /// Arbitrary history-dependent delta for the played arm.
    Scripted(ScriptedFn),
}

impl fmt::Debug for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adversary::Stationary => write!(f, "Stationary"),
            Adversary::Rotting { c, basis } => write!(f, "Rotting {{ c: {c}, basis: {basis:?} }}"),
            Adversary::Rising { c, basis } => write!(f, "Rising {{ c: {c}, basis: {basis:?} }}"),
            Adversary::Abrupt(v) => write!(f, "Abrupt({v:?})"),
            Adversary::Scripted(_) => write!(f, "Scripted(..)"),
        }
    }
}

/// Where initial means of new arms come from. `Reservoir` is the normal
/// mode; the other two give deterministic pools for diagnostics and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub enum MeanPool {
    #[default]
    Reservoir,
    /// Every new arm starts at this mean.
    Fixed(f64),
    /// New arms take these means in order, cycling when exhausted.
    Script(Vec<f64>),
}

/// Running totals of realized non-stationarity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RealizedMeasures {
    /// Total variation of played-arm means.
    pub v: f64,
    /// Number of rounds that changed a mean.
    pub l: u64,
    /// Variation counting decreases only.
    pub v_r: f64,
    /// Number of rounds that decreased a mean.
    pub l_r: u64,
}

impl RealizedMeasures {
    /// Fold one post-play change into the totals. `delta` is
    /// `mean_before - mean_after`.
    pub(crate) fn record(&mut self, delta: f64) {
        if delta != 0.0 {
            self.v += delta.abs();
            self.l += 1;
            if delta > 0.0 {
                self.v_r += delta;
                self.l_r += 1;
            }
        }
    }
}

/// Episode and block labels the agent attaches to each play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTag {
    pub episode: u32,
    pub block: u32,
}

impl Default for PhaseTag {
    fn default() -> Self {
        PhaseTag { episode: 1, block: 1 }
    }
}

/// What one play produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u64,
    pub arm: ArmId,
    /// Mean of the played arm when the reward was drawn (pre-update).
    pub mean_at_play: f64,
    pub reward: f64,
    /// `1 - mean_at_play`; regret is measured against the reservoir optimum.
    pub instantaneous_regret: f64,
}

/// One trace row; identical content to [`RoundOutcome`] plus phase labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u64,
    pub arm: ArmId,
    pub mean_at_play: f64,
    pub reward: f64,
    pub episode: u32,
    pub block: u32,
}

/// Birth record of a sampled arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmOrigin {
    pub initial_mean: f64,
    /// Round about to be played when the arm was sampled (1-based).
    pub sampled_at: u64,
}

/// One sparse mean-change event: for rounds `s > after_round` (until the
/// next event) the arm's mean is `new_mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanChange {
    pub after_round: u64,
    pub new_mean: f64,
}

/// Complete record of a run: per-round rows, arm origins in sampling order,
/// and per-arm sparse mean histories sufficient to reconstruct every mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub horizon: u64,
    pub arms: Vec<ArmOrigin>,
    /// Indexed by arm id; events sorted by `after_round`.
    pub mean_changes: Vec<Vec<MeanChange>>,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    fn new(horizon: u64) -> Trace {
        Trace {
            horizon,
            arms: Vec::new(),
            mean_changes: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Number of rounds actually recorded.
    pub fn rounds(&self) -> u64 {
        self.rows.len() as u64
    }

    /// Mean of `arm` at round `round` (1-based).
    pub fn mean_at(&self, arm: ArmId, round: u64) -> Result<f64> {
        let origin = self
            .arms
            .get(arm.0)
            .ok_or_else(|| Error::Usage(format!("unknown arm id {arm}")))?;
        let mut mean = origin.initial_mean;
        for ch in &self.mean_changes[arm.0] {
            if ch.after_round < round {
                mean = ch.new_mean;
            } else {
                break;
            }
        }
        Ok(mean)
    }

    /// Dense mean sequence of `arm` over rounds `1..=n`.
    pub fn dense_means(&self, arm: ArmId, n: u64) -> Result<Vec<f64>> {
        let origin = self
            .arms
            .get(arm.0)
            .ok_or_else(|| Error::Usage(format!("unknown arm id {arm}")))?;
        let changes = &self.mean_changes[arm.0];
        let mut out = Vec::with_capacity(n as usize);
        let mut cur = origin.initial_mean;
        let mut idx = 0;
        for s in 1..=n {
            while idx < changes.len() && changes[idx].after_round < s {
                cur = changes[idx].new_mean;
                idx += 1;
            }
            out.push(cur);
        }
        Ok(out)
    }

    /// Total regret against the reservoir optimum, summed in round order.
    pub fn cumulative_regret(&self) -> f64 {
        self.rows.iter().map(|r| 1.0 - r.mean_at_play).sum()
    }

    /// Columnar export: one row per round with a running regret total.
    /// This format drops the mean-change history; shift detection needs the
    /// JSON export instead.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,arm_id,mean_at_play,reward,episode,block,cum_regret")?;
        let mut cum = 0.0;
        for row in &self.rows {
            cum += 1.0 - row.mean_at_play;
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                row.round, row.arm, row.mean_at_play, row.reward, row.episode, row.block, cum
            )?;
        }
        Ok(())
    }

    /// Full-fidelity export, suitable for offline analysis.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(r: R) -> Result<Trace> {
        let trace: Trace = serde_json::from_reader(r)?;
        if trace.mean_changes.len() != trace.arms.len() {
            return Err(Error::Usage(
                "trace mean history does not cover every arm".into(),
            ));
        }
        Ok(trace)
    }
}

/// Static description of an environment.
pub struct EnvConfig {
    pub reservoir: BetaRegularReservoir,
    pub reward_model: RewardModel,
    pub adversary: Adversary,
    pub horizon: u64,
    pub pool: MeanPool,
}

impl EnvConfig {
    /// Reservoir environment with the default reward model.
    pub fn new(reservoir: BetaRegularReservoir, adversary: Adversary, horizon: u64) -> EnvConfig {
        EnvConfig {
            reservoir,
            reward_model: RewardModel::Bernoulli,
            adversary,
            horizon,
            pool: MeanPool::Reservoir,
        }
    }
}

struct ArmState {
    current_mean: f64,
    plays: u64,
}

/// Live environment; owns its reward and arm-draw streams.
pub struct Environment {
    reservoir: BetaRegularReservoir,
    reward_model: RewardModel,
    adversary: Adversary,
    horizon: u64,
    pool: MeanPool,
    pool_cursor: usize,
    arms: Vec<ArmState>,
    rounds_played: u64,
    measures: RealizedMeasures,
    trace: Trace,
    arm_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(cfg: EnvConfig, arm_rng: ChaCha8Rng, reward_rng: ChaCha8Rng) -> Result<Environment> {
        if cfg.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        match &cfg.pool {
            MeanPool::Reservoir => {}
            MeanPool::Fixed(m) => {
                if !(0.0..=1.0).contains(m) {
                    return Err(Error::Domain(format!("pool mean {m} outside [0, 1]")));
                }
            }
            MeanPool::Script(v) => {
                if v.is_empty() {
                    return Err(Error::Config("scripted mean pool is empty".into()));
                }
                if let Some(m) = v.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                    return Err(Error::Domain(format!("pool mean {m} outside [0, 1]")));
                }
            }
        }
        Ok(Environment {
            reservoir: cfg.reservoir,
            reward_model: cfg.reward_model,
            adversary: cfg.adversary,
            horizon: cfg.horizon,
            pool: cfg.pool,
            pool_cursor: 0,
            arms: Vec::new(),
            rounds_played: 0,
            measures: RealizedMeasures::default(),
            trace: Trace::new(cfg.horizon),
            arm_rng,
            reward_rng,
        })
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn rounds_played(&self) -> u64 {
        self.rounds_played
    }

    pub fn remaining_rounds(&self) -> u64 {
        self.horizon - self.rounds_played
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn current_mean(&self, arm: ArmId) -> Result<f64> {
        self.arms
            .get(arm.0)
            .map(|a| a.current_mean)
            .ok_or_else(|| Error::Usage(format!("unknown arm id {arm}")))
    }

    pub fn measures(&self) -> RealizedMeasures {
        self.measures
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Draw a fresh arm from the pool; ids are dense and follow sampling
    /// order. Reservoir draws consume the arm stream only, so sampling never
    /// perturbs reward draws.
    pub fn sample_new_arm(&mut self) -> ArmId {
        let mean = match &self.pool {
            MeanPool::Reservoir => self.reservoir.sample_initial_mean(&mut self.arm_rng),
            MeanPool::Fixed(m) => *m,
            MeanPool::Script(v) => {
                let m = v[self.pool_cursor % v.len()];
                self.pool_cursor += 1;
                m
            }
        };
        let id = ArmId(self.arms.len());
        self.arms.push(ArmState {
            current_mean: mean,
            plays: 0,
        });
        self.trace.arms.push(ArmOrigin {
            initial_mean: mean,
            sampled_at: self.rounds_played + 1,
        });
        self.trace.mean_changes.push(Vec::new());
        id
    }

    /// Play one round: draw the reward at the arm's current mean, log the
    /// outcome, then let the adversary rewrite the played arm's mean
    /// (skipped after the final round) and fold the change into the realized
    /// measures.
    pub fn play(&mut self, arm: ArmId, tag: PhaseTag) -> Result<RoundOutcome> {
        if self.rounds_played >= self.horizon {
            return Err(Error::Usage(format!(
                "cannot play past the horizon of {} rounds",
                self.horizon
            )));
        }
        if arm.0 >= self.arms.len() {
            return Err(Error::Usage(format!("unknown arm id {arm}")));
        }
        let round = self.rounds_played + 1;
        let mean_before = self.arms[arm.0].current_mean;
        self.arms[arm.0].plays += 1;
        let reward = draw_reward(mean_before, self.reward_model, &mut self.reward_rng)?;

        self.trace.rows.push(TraceRow {
            round,
            arm,
            mean_at_play: mean_before,
            reward,
            episode: tag.episode,
            block: tag.block,
        });

        if round < self.horizon {
            let new_mean = self.adversary_update(arm, round, mean_before);
            let new_mean = new_mean.clamp(0.0, 1.0);
            if new_mean != mean_before {
                self.arms[arm.0].current_mean = new_mean;
                self.trace.mean_changes[arm.0].push(MeanChange {
                    after_round: round,
                    new_mean,
                });
            }
            self.measures.record(mean_before - new_mean);
        }

        self.rounds_played = round;
        Ok(RoundOutcome {
            round,
            arm,
            mean_at_play: mean_before,
            reward,
            instantaneous_regret: 1.0 - mean_before,
        })
    }

    /// New mean for the played arm (pre-clip).
    fn adversary_update(&self, arm: ArmId, round: u64, mean: f64) -> f64 {
        match &self.adversary {
            Adversary::Stationary => mean,
            Adversary::Rotting { c, basis } => mean - c / self.rate_time(arm, round, *basis),
            Adversary::Rising { c, basis } => mean + c / self.rate_time(arm, round, *basis),
            Adversary::Abrupt(changes) => {
                let mut chosen = None;
                let mut best_round = 0;
                for ch in changes {
                    let matches = match ch.arm {
                        ArmSelector::Any => true,
                        ArmSelector::Arm(a) => a == arm,
                    };
                    if matches && ch.at_round <= round && ch.at_round >= best_round {
                        best_round = ch.at_round;
                        chosen = Some(ch.new_mean);
                    }
                }
                chosen.unwrap_or(mean)
            }
            Adversary::Scripted(f) => mean + f(&self.trace, arm, mean),
        }
    }

    fn rate_time(&self, arm: ArmId, round: u64, basis: RateBasis) -> f64 {
        match basis {
            RateBasis::GlobalRound => round as f64,
            RateBasis::ArmPlays => self.arms[arm.0].plays as f64,
        }
    }
}

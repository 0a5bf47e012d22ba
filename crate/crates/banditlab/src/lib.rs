//! Simulation library for non-stationary infinite-armed bandits.
//!
//! Arms are drawn from a reservoir whose near-optimal tail follows a power
//! law; a rested adversary may move the played arm's mean after each play.
//! The crate provides:
//!
//! * [`reservoir`]: the arm-mean reservoir and the Bernoulli reward model.
//! * [`env`]: the environment loop, adversaries, realized non-stationarity
//!   accounting (V, L, and their rotting-only variants), and full traces.
//! * [`base`]: finite-armed base policies (UCB, successive elimination).
//! * [`agents`]: the two restarting schemes and the subsample-once baseline.
//! * [`analysis`]: offline significant-shift detection, regret curves, and
//!   concentration checks over traces.
//! * [`harness`]: seeded parallel Monte Carlo experiments with CSV output.
//! * [`plot`]: dependency-free SVG rendering of regret curves.
//!
//! Determinism is a design contract: every run is a pure function of its
//! configuration and master seed, independent of thread count.

pub mod agents;
pub mod analysis;
pub mod base;
pub mod env;
pub mod error;
pub mod harness;
pub mod plot;
pub mod reservoir;
pub mod rng;

pub use agents::{Agent, BlackboxAgent, BlackboxConfig, EliminationAgent, EliminationConfig, SsucbAgent};
pub use env::{Adversary, EnvConfig, Environment, RealizedMeasures, Trace};
pub use error::{Error, Result};
pub use harness::{run_experiment, ExperimentConfig};
pub use reservoir::BetaRegularReservoir;

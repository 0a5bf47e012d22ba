//! Shared helpers for the integration suites: a tiny deterministic RNG, a
//! random-trace generator, and oracle reimplementations of the library's
//! realized-measure accounting and shift detection. The oracles share no
//! code with the library; where float results must agree bit-for-bit they
//! repeat the same literal expressions and accumulate in the same order,
//! which is documented inline at each site.

// Each test target pulls in its own subset of these helpers.
#![allow(dead_code)]

use banditlab::env::{
    Adversary, ArmId, ArmOrigin, ArmSelector, AbruptChange, EnvConfig, Environment, MeanChange,
    PhaseTag, RateBasis, RealizedMeasures, Trace, TraceRow,
};
use banditlab::reservoir::BetaRegularReservoir;
use banditlab::rng::Streams;

/// xorshift64* generator; enough randomness for test-case shapes and fully
/// independent of the crate's ChaCha streams.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> TestRng {
        TestRng(seed | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in [lo, hi).
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo < hi);
        lo + self.next_u64() % (hi - lo)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Dense mean sequence of one arm over rounds 1..=n, rebuilt from the arm's
/// origin and sparse change list without calling into the library.
pub fn dense_means_oracle(trace: &Trace, arm: usize, n: u64) -> Vec<f64> {
    let changes = &trace.mean_changes[arm];
    let mut cur = trace.arms[arm].initial_mean;
    let mut idx = 0;
    let mut out = Vec::with_capacity(n as usize);
    for s in 1..=n {
        while idx < changes.len() && changes[idx].after_round < s {
            cur = changes[idx].new_mean;
            idx += 1;
        }
        out.push(cur);
    }
    out
}

/// A structurally valid random trace: nondecreasing sampling rounds starting
/// at round 1, sparse per-arm mean histories (all changes strictly before the
/// final round), and one played row per round. Mean regimes are skewed so the
/// corpus contains quiet traces, shift-heavy traces, and everything between.
pub fn random_trace(rng: &mut TestRng) -> Trace {
    let horizon = match rng.range(0, 10) {
        0..=4 => rng.range(4, 96),
        5..=7 => rng.range(96, 256),
        _ => rng.range(256, 513),
    };
    let n_arms = rng.range(1, 33) as usize;
    let regime = rng.range(0, 3);
    let mut draw_mean = {
        let mut r = TestRng::new(rng.next_u64());
        move || match regime {
            0 => 0.5 * r.unit(),
            1 => r.unit(),
            _ => 0.75 + 0.25 * r.unit(),
        }
    };

    let mut sampled_at: Vec<u64> = (1..n_arms).map(|_| rng.range(1, horizon + 1)).collect();
    sampled_at.push(1);
    sampled_at.sort_unstable();

    let mut arms = Vec::with_capacity(n_arms);
    let mut mean_changes = Vec::with_capacity(n_arms);
    for &s in &sampled_at {
        arms.push(ArmOrigin { initial_mean: draw_mean(), sampled_at: s });
        let mut rounds: Vec<u64> = (0..rng.range(0, 6))
            .filter(|_| horizon > 1)
            .map(|_| rng.range(1, horizon))
            .collect();
        rounds.sort_unstable();
        rounds.dedup();
        mean_changes.push(
            rounds
                .into_iter()
                .map(|after_round| MeanChange { after_round, new_mean: draw_mean() })
                .collect::<Vec<_>>(),
        );
    }

    let trace = Trace { horizon, arms, mean_changes, rows: Vec::new() };
    let mut rows = Vec::with_capacity(horizon as usize);
    for round in 1..=horizon {
        let eligible = trace.arms.partition_point(|a| a.sampled_at <= round);
        let arm = ArmId(rng.range(0, eligible as u64) as usize);
        let mean = trace.mean_at(arm, round).unwrap();
        rows.push(TraceRow {
            round,
            arm,
            mean_at_play: mean,
            reward: f64::from(u8::from(rng.chance(mean))),
            episode: 1,
            block: 1,
        });
    }
    Trace { rows, ..trace }
}

/// Shift detection from first principles: taus and phase lengths only.
///
/// Every arm's per-start gap sums are rebuilt each phase by folding rounds in
/// temporal order (`sums[s1] += gap` for each new round), matching the
/// library's accumulation order so sums agree bit-for-bit; the threshold
/// `kappa_inv * len^(beta/(beta+1))` and budget `ceil(w^(beta/(beta+1)))`
/// expressions are repeated literally for the same reason. Everything else
/// (candidate windows, the all-unsafe rule, phase resets) is recomputed the
/// slow way.
pub fn oracle_detect(
    trace: &Trace,
    beta: f64,
    kappa_inv: f64,
    windowed: bool,
) -> (Vec<u64>, Vec<u64>) {
    let horizon = trace.horizon;
    let n = trace.arms.len();
    let expo = beta / (beta + 1.0);
    let dense: Vec<Vec<f64>> = (0..n).map(|a| dense_means_oracle(trace, a, horizon)).collect();
    let sampled: Vec<u64> = trace.arms.iter().map(|o| o.sampled_at).collect();
    let thresholds: Vec<f64> = (0..=horizon)
        .map(|len| kappa_inv * (len as f64).powf(expo))
        .collect();
    let budget = |w: u64| (w as f64).powf(expo).ceil() as usize;

    let mut taus = Vec::new();
    let mut tau = 1u64;
    let mut rowsums: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut unsafe_arm = vec![false; n];
    let mut folded = 0u64;

    for t in 2..=horizon {
        let from = folded.max(tau - 1) + 1;
        for s in from..=t {
            for a in 0..n {
                // A violating interval keeps violating as the window grows,
                // so an unsafe arm's sums are dead weight: stop extending.
                if unsafe_arm[a] {
                    continue;
                }
                rowsums[a].push(0.0);
                let gap = 1.0 - dense[a][(s - 1) as usize];
                for v in rowsums[a].iter_mut() {
                    *v += gap;
                }
                for (i, &v) in rowsums[a].iter().enumerate() {
                    let len = s - (tau + i as u64) + 1;
                    if v > thresholds[len as usize] {
                        unsafe_arm[a] = true;
                        break;
                    }
                }
            }
        }
        folded = t;

        let by_t = sampled.partition_point(|&x| x <= t);
        let (lo, hi) = if windowed {
            let lo = sampled.partition_point(|&x| x < tau);
            (lo, by_t.min(lo + budget(t - tau + 1)))
        } else {
            (0, by_t.min(budget(t)))
        };
        if lo < hi && (lo..hi).all(|a| unsafe_arm[a]) {
            taus.push(t);
            tau = t;
            for v in rowsums.iter_mut() {
                v.clear();
            }
            unsafe_arm.fill(false);
            folded = tau - 1;
        }
    }

    let mut phase_lengths = Vec::with_capacity(taus.len() + 1);
    let mut prev = 1u64;
    for &x in &taus {
        phase_lengths.push(x - prev);
        prev = x;
    }
    phase_lengths.push(horizon - prev + 1);
    (taus, phase_lengths)
}

/// Realized-measure totals recomputed from the trace's dense mean histories,
/// folded in row order with the same update rule the environment applies
/// live (so agreement is exact, not approximate).
pub fn oracle_measures(trace: &Trace) -> RealizedMeasures {
    let dense: Vec<Vec<f64>> = (0..trace.arms.len())
        .map(|a| dense_means_oracle(trace, a, trace.horizon))
        .collect();
    let mut m = RealizedMeasures::default();
    for row in &trace.rows {
        if row.round >= trace.horizon {
            continue;
        }
        let before = dense[row.arm.0][(row.round - 1) as usize];
        let after = dense[row.arm.0][row.round as usize];
        let delta = before - after;
        if delta != 0.0 {
            m.v += delta.abs();
            m.l += 1;
            if delta > 0.0 {
                m.v_r += delta;
                m.l_r += 1;
            }
        }
    }
    m
}

/// Drive a fresh environment for `horizon` rounds with arbitrary play and a
/// randomly drawn adversary (all five kinds), returning the live accounting
/// next to the finished trace.
pub fn random_env_run(rng: &mut TestRng, horizon: u64) -> (RealizedMeasures, Trace) {
    let adversary = match rng.range(0, 6) {
        0 => Adversary::Stationary,
        1 => Adversary::Rotting { c: 0.2 + rng.unit(), basis: RateBasis::GlobalRound },
        2 => Adversary::Rotting { c: 0.2 + rng.unit(), basis: RateBasis::ArmPlays },
        3 => Adversary::Rising { c: 0.2 + rng.unit(), basis: RateBasis::ArmPlays },
        4 => {
            let changes = (0..rng.range(1, 8))
                .map(|_| AbruptChange {
                    at_round: rng.range(1, horizon + 1),
                    arm: if rng.chance(0.5) {
                        ArmSelector::Any
                    } else {
                        ArmSelector::Arm(ArmId(rng.range(0, 4) as usize))
                    },
                    new_mean: rng.unit(),
                })
                .collect();
            Adversary::Abrupt(changes)
        }
        _ => Adversary::Scripted(Box::new(|trace: &Trace, arm: ArmId, mean: f64| {
            // Pure function of visible history: a hash of (round, arm, mean)
            // turned into a delta in [-0.25, 0.25).
            let mut z = (trace.rows.len() as u64)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ ((arm.0 as u64) << 32)
                ^ mean.to_bits();
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z ^= z >> 31;
            ((z >> 11) as f64 / (1u64 << 53) as f64) * 0.5 - 0.25
        })),
    };
    let beta = 0.6 + rng.unit();
    let cfg = EnvConfig::new(BetaRegularReservoir::new(beta).unwrap(), adversary, horizon);
    let streams = Streams::for_rep(rng.next_u64(), 0);
    let mut env = Environment::new(cfg, streams.arms, streams.rewards).unwrap();
    for _ in 1..=horizon {
        let n = env.arm_count();
        let arm = if n == 0 || rng.chance(0.25) {
            env.sample_new_arm()
        } else {
            ArmId(rng.range(0, n as u64) as usize)
        };
        env.play(arm, PhaseTag::default()).unwrap();
    }
    (env.measures(), env.into_trace())
}

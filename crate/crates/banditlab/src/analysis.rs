//! Offline analytics over traces: significant-shift detection, regret
//! curves, realized-measure recomputation, and a concentration sanity check.
//!
//! The shift detector segments `[1, T]` into phases. Within a phase starting
//! at `tau`, an arm is safe at round `t` when no subinterval `[s1, s2]` of
//! `[tau, t]` has gap mass `sum(1 - mean)` above `kappa_inv *
//! (s2 - s1 + 1)^(beta/(beta+1))`. A shift fires at the first `t` where every
//! arm within the sampling budget is unsafe; the next phase then starts at
//! `t`. Everything here runs offline on complete traces; agents never
//! consult it.
//!
//! Float discipline: the detector and any reimplementation of it agree bit
//! for bit as long as interval sums are accumulated left to right, one gap
//! at a time. All sums below do exactly that; none are formed by subtracting
//! prefix sums.

use crate::env::{ArmId, RealizedMeasures, Trace};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which arms count against the sampling budget at round `t` of a phase
/// that started at `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetRule {
    /// First `ceil((t - tau + 1)^(beta/(beta+1)))` arms sampled since `tau`.
    #[default]
    Windowed,
    /// First `ceil(t^(beta/(beta+1)))` arms sampled since round 1.
    Global,
}

impl std::str::FromStr for BudgetRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<BudgetRule> {
        match s {
            "windowed" => Ok(BudgetRule::Windowed),
            "global" => Ok(BudgetRule::Global),
            other => Err(Error::Usage(format!(
                "unknown budget rule {other:?}; expected windowed or global"
            ))),
        }
    }
}

/// Parameters of the safety predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyParams {
    pub beta: f64,
    /// Multiplier on the interval threshold.
    pub kappa_inv: f64,
    pub budget_rule: BudgetRule,
}

impl SafetyParams {
    pub fn new(beta: f64, kappa_inv: f64) -> Result<SafetyParams> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("tail exponent must be positive, got {beta}")));
        }
        if !(kappa_inv > 0.0) || !kappa_inv.is_finite() {
            return Err(Error::Config(format!("kappa_inv must be positive, got {kappa_inv}")));
        }
        Ok(SafetyParams { beta, kappa_inv, budget_rule: BudgetRule::Windowed })
    }

    pub fn with_rule(mut self, rule: BudgetRule) -> SafetyParams {
        self.budget_rule = rule;
        self
    }

    /// Exponent on window lengths, both for thresholds and arm budgets.
    fn exponent(&self) -> f64 {
        self.beta / (self.beta + 1.0)
    }

    fn threshold(&self, len: u64) -> f64 {
        self.kappa_inv * (len as f64).powf(self.exponent())
    }

    fn budget(&self, window_len: u64) -> usize {
        (window_len as f64).powf(self.exponent()).ceil() as usize
    }
}

/// Whether a window of per-round gaps stays under the interval threshold
/// everywhere, plus the first violating interval otherwise (0-based indices
/// into the window, scanned in lexicographic start/end order).
pub fn is_arm_safe(gaps: &[f64], params: &SafetyParams) -> (bool, Option<(usize, usize)>) {
    for s1 in 0..gaps.len() {
        let mut sum = 0.0;
        for (s2, &g) in gaps.iter().enumerate().skip(s1) {
            sum += g;
            if sum > params.threshold((s2 - s1 + 1) as u64) {
                return (false, Some((s1, s2)));
            }
        }
    }
    (true, None)
}

/// One detected shift with a failing candidate as evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftWitness {
    /// The shift round this entry explains.
    pub tau: u64,
    /// Lowest-id candidate arm at that round (unsafe like all the others).
    pub arm: ArmId,
    /// Its first violating interval, in absolute rounds, earliest end first.
    pub interval: (u64, u64),
    /// Size of the candidate set at the shift round.
    pub candidates: usize,
}

/// Detected shifts and the phase partition they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    /// Strictly increasing shift rounds.
    pub taus: Vec<u64>,
    /// Lengths of the phases `[1, tau_1), [tau_1, tau_2), ..., [tau_k, T]`;
    /// sums to the horizon.
    pub phase_lengths: Vec<u64>,
    /// One witness per shift.
    pub witnesses: Vec<ShiftWitness>,
}

impl ShiftReport {
    pub fn count(&self) -> usize {
        self.taus.len()
    }
}

/// Per-arm scan state within one phase. `rowsums[i]` is the left-to-right
/// sum of gaps over `[tau + i, updated_to]`; once a violation is recorded
/// the sums go stale and are never read again (a violating interval keeps
/// violating as the window grows).
struct ArmScan {
    rowsums: Vec<f64>,
    updated_to: u64,
    violation: Option<(u64, u64)>,
}

impl ArmScan {
    fn fresh(tau: u64) -> ArmScan {
        ArmScan { rowsums: Vec::new(), updated_to: tau - 1, violation: None }
    }

    /// Extend the scan through round `t`, checking new intervals in
    /// (end round, then start round) order.
    fn catch_up(&mut self, means: &[f64], tau: u64, t: u64, params: &SafetyParams) {
        while self.violation.is_none() && self.updated_to < t {
            let s = self.updated_to + 1;
            self.rowsums.push(0.0);
            let gap = 1.0 - means[(s - 1) as usize];
            for v in self.rowsums.iter_mut() {
                *v += gap;
            }
            for (i, &v) in self.rowsums.iter().enumerate() {
                let s1 = tau + i as u64;
                if v > params.threshold(s - s1 + 1) {
                    self.violation = Some((s1, s));
                    break;
                }
            }
            self.updated_to = s;
        }
    }
}

fn validate_trace_for_detection(trace: &Trace) -> Result<()> {
    if trace.mean_changes.len() != trace.arms.len() {
        return Err(Error::Usage(
            "trace lacks mean history: change lists do not cover the arm list".into(),
        ));
    }
    if let Some(row) = trace.rows.iter().find(|r| r.arm.0 >= trace.arms.len()) {
        return Err(Error::Usage(format!(
            "trace lacks mean history: round {} plays arm {} with no origin record",
            row.round, row.arm
        )));
    }
    let sampled: Vec<u64> = trace.arms.iter().map(|a| a.sampled_at).collect();
    if sampled.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Usage(
            "arm ids must be assigned in sampling order for budget counting".into(),
        ));
    }
    Ok(())
}

/// Ids of the arms the budget admits at round `t` of the phase based at
/// `tau`. Arm ids follow sampling order, so both rules select a contiguous
/// id range.
fn candidate_ids(sampled_at: &[u64], params: &SafetyParams, tau: u64, t: u64) -> (usize, usize) {
    let sampled_by_t = sampled_at.partition_point(|&s| s <= t);
    match params.budget_rule {
        BudgetRule::Windowed => {
            let lo = sampled_at.partition_point(|&s| s < tau);
            let budget = params.budget(t - tau + 1);
            (lo, sampled_by_t.min(lo + budget))
        }
        BudgetRule::Global => (0, sampled_by_t.min(params.budget(t))),
    }
}

/// Segment a trace into phases separated by significant shifts.
///
/// A shift fires at the first round `t` where the budgeted candidate set is
/// nonempty and every candidate has some subinterval of `[tau, t]` above the
/// safety threshold. Rounds with an empty candidate set (possible under the
/// windowed rule before any arm is sampled in the phase) are safe: a shift
/// needs an unsafe witness.
pub fn detect_significant_shifts(trace: &Trace, params: &SafetyParams) -> Result<ShiftReport> {
    validate_trace_for_detection(trace)?;
    let horizon = trace.horizon;
    let sampled_at: Vec<u64> = trace.arms.iter().map(|a| a.sampled_at).collect();
    // Dense means are phase-independent; built lazily, kept for the run.
    let mut means: Vec<Option<Vec<f64>>> = vec![None; trace.arms.len()];
    let mut taus = Vec::new();
    let mut witnesses = Vec::new();
    let mut tau = 1u64;
    let mut scans: Vec<Option<ArmScan>> = vec![];

    let mut t = 2u64;
    while t <= horizon {
        let (lo, hi) = candidate_ids(&sampled_at, params, tau, t);
        let mut all_unsafe = lo < hi;
        for a in lo..hi {
            if scans.len() < trace.arms.len() {
                scans.resize_with(trace.arms.len(), || None);
            }
            let scan = scans[a].get_or_insert_with(|| ArmScan::fresh(tau));
            if scan.violation.is_none() {
                let m = means[a].get_or_insert_with(|| {
                    trace.dense_means(ArmId(a), horizon).expect("arm id validated")
                });
                scan.catch_up(m, tau, t, params);
            }
            if scan.violation.is_none() {
                // One safe candidate keeps the whole round safe; later
                // candidates stay lazily un-extended until needed.
                all_unsafe = false;
                break;
            }
        }
        if all_unsafe {
            let first = scans[lo].as_ref().expect("candidate was scanned");
            witnesses.push(ShiftWitness {
                tau: t,
                arm: ArmId(lo),
                interval: first.violation.expect("candidate was unsafe"),
                candidates: hi - lo,
            });
            taus.push(t);
            tau = t;
            scans.clear();
        }
        t += 1;
    }

    let mut phase_lengths = Vec::with_capacity(taus.len() + 1);
    let mut prev = 1u64;
    for &x in &taus {
        phase_lengths.push(x - prev);
        prev = x;
    }
    if horizon > 0 {
        phase_lengths.push(horizon - prev + 1);
    }
    Ok(ShiftReport { taus, phase_lengths, witnesses })
}

/// Result of the empirical-vs-true regret concentration scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    /// Max over intervals of `|sum(1-Y) - sum(gap)| - (band)`.
    pub max_slack: f64,
    /// True when `max_slack <= 0`.
    pub passes: bool,
    /// Interval attaining the max, in rounds; `(0, 0)` for empty traces.
    pub worst_interval: (u64, u64),
}

/// Scan every interval of the trace for a gap between empirical regret
/// `sum(1 - reward)` and true regret `sum(1 - mean)`, beyond the slack
/// `half the true regret + 6.5 * log2(2 T^3)`. A run with honestly labeled
/// means should never exceed it; mislabeled means show up immediately. This
/// is a test utility, not part of any algorithm.
pub fn concentration_check(trace: &Trace) -> ConcentrationReport {
    let n = trace.rows.len();
    let t_f = trace.horizon.max(1) as f64;
    let band = 6.5 * (2.0 * t_f * t_f * t_f).log2();
    let mut max_slack = f64::NEG_INFINITY;
    let mut worst = (0, 0);
    for s1 in 0..n {
        let mut emp = 0.0;
        let mut true_reg = 0.0;
        for (s2, row) in trace.rows.iter().enumerate().skip(s1) {
            emp += 1.0 - row.reward;
            true_reg += 1.0 - row.mean_at_play;
            let slack = (emp - true_reg).abs() - (0.5 * true_reg + band);
            if slack > max_slack {
                max_slack = slack;
                worst = (s1 as u64 + 1, s2 as u64 + 1);
            }
        }
    }
    ConcentrationReport {
        max_slack,
        passes: max_slack <= 0.0,
        worst_interval: worst,
    }
}

/// Per-round cumulative regret against the reservoir optimum.
pub fn regret_curve(trace: &Trace) -> Vec<f64> {
    let mut out = Vec::with_capacity(trace.rows.len());
    let mut cum = 0.0;
    for row in &trace.rows {
        cum += 1.0 - row.mean_at_play;
        out.push(cum);
    }
    out
}

/// Mean change of the played arm across round `s`, or None past the trace.
fn played_delta(trace: &Trace, s: usize) -> Option<f64> {
    let row = trace.rows.get(s)?;
    // The adversary acts right after the reward of round s, so the effect
    // shows in the arm's mean at round s + 1. The final round never has one.
    if row.round >= trace.horizon {
        return None;
    }
    let before = trace.mean_at(row.arm, row.round).ok()?;
    let after = trace.mean_at(row.arm, row.round + 1).ok()?;
    Some(before - after)
}

/// Recompute realized non-stationarity totals from a trace alone. Matches
/// the environment's live accounting exactly.
pub fn recompute_measures(trace: &Trace) -> RealizedMeasures {
    let mut m = RealizedMeasures::default();
    for s in 0..trace.rows.len() {
        if let Some(delta) = played_delta(trace, s) {
            m.record(delta);
        }
    }
    m
}

/// Realized-measure totals at each requested round (1-based, ascending).
/// A checkpoint at round `r` covers the changes caused by plays `1..=r`.
pub fn measures_at_checkpoints(trace: &Trace, rounds: &[u64]) -> Vec<RealizedMeasures> {
    debug_assert!(rounds.windows(2).all(|w| w[0] <= w[1]));
    let mut out = Vec::with_capacity(rounds.len());
    let mut m = RealizedMeasures::default();
    let mut s = 0usize;
    for &r in rounds {
        while s < trace.rows.len() && trace.rows[s].round <= r {
            if let Some(delta) = played_delta(trace, s) {
                m.record(delta);
            }
            s += 1;
        }
        out.push(m);
    }
    out
}

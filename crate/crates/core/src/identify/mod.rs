//! Best-channel identification by successive elimination, and the two
//! `(eps, delta)`-PAC policies it uses as a pivot subroutine.
//!
//! All three policies sense through an [`Environment`] and never look at
//! the ground-truth channels. Every sense is a uniform spread of the round's
//! count over the input alphabet (see [`allocate_inputs`]); estimates are
//! plug-in capacities of the empirical channel from that round's counts
//! only. Ties go to the lowest channel index.

mod schedule;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use schedule::{
    alg1_schedule, median_budget, median_rounds, median_schedule, naive_budget, naive_pulls,
    MedianSecondTerm, RoundSchedule,
};

use crate::error::{Error, Result};
use crate::estimation::{allocate_inputs, estimate_capacity};
use crate::output::fmt_real;
use crate::sensing::Environment;

/// PAC subroutine used to choose the elimination pivot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacKind {
    #[default]
    Naive,
    Median,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyOptions {
    pub pac: PacKind,
    pub median_second: MedianSecondTerm,
    /// Stop before a round that would take the total past this many senses.
    pub budget_cap: Option<u64>,
}

/// One round of a PAC policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacRound {
    pub schedule: RoundSchedule,
    pub candidates: Vec<usize>,
    pub estimates: Vec<f64>,
    /// Senses consumed so far, this round included.
    pub total_senses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacOutcome {
    pub channel: usize,
    pub senses: u64,
    pub rounds: Vec<PacRound>,
}

impl PacOutcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }

    /// CSV `round,eps_r,delta_r,T_r,survivors,total_senses`.
    pub fn rounds_csv(&self) -> String {
        rounds_csv(self.rounds.iter().map(|r| (&r.schedule, r.candidates.len(), r.total_senses)))
    }
}

/// One round of best-channel identification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyRound {
    pub schedule: RoundSchedule,
    /// The set sensed this round.
    pub survivors: Vec<usize>,
    /// Estimates aligned with `survivors`.
    pub estimates: Vec<f64>,
    pub pac_pivot: usize,
    pub pac_senses: u64,
    pub eliminated: Vec<usize>,
    /// Senses consumed so far, this round and its subroutine included.
    pub total_senses: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifyReport {
    pub output_channel: usize,
    pub rounds: Vec<IdentifyRound>,
    pub total_senses: u64,
    /// Filled in by [`IdentifyReport::judge`] when the truth is known.
    pub succeeded: Option<bool>,
    /// Set when the budget cap (or sense-count overflow) ended the run.
    pub truncated: bool,
    pub pac: PacKind,
}

impl IdentifyReport {
    pub fn judge(&mut self, best: usize) {
        self.succeeded = Some(self.output_channel == best);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV `round,eps_r,delta_r,T_r,survivors,total_senses`, where
    /// `survivors` counts the channels sensed in that round.
    pub fn rounds_csv(&self) -> String {
        rounds_csv(self.rounds.iter().map(|r| (&r.schedule, r.survivors.len(), r.total_senses)))
    }
}

fn rounds_csv<'a>(rows: impl Iterator<Item = (&'a RoundSchedule, usize, u64)>) -> String {
    let mut out = String::from("round,eps_r,delta_r,T_r,survivors,total_senses\n");
    for (s, n, total) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.round,
            fmt_real(s.eps_r),
            fmt_real(s.delta_r),
            s.pulls,
            n,
            total
        );
    }
    out
}

/// Sorted copy of `set` after checking it is nonempty, in range, and free
/// of duplicates.
fn candidate_set(env: &Environment, set: &[usize]) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if let Some(&bad) = sorted.iter().find(|&&j| j >= env.len()) {
        return Err(Error::BadIndex { index: bad, len: env.len() });
    }
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::BadParameter(format!("channel {} listed twice", w[0])));
    }
    Ok(sorted)
}

/// Senses every channel of `set` `pulls` times and estimates capacities.
fn sense_round(env: &mut Environment, set: &[usize], pulls: u64) -> Result<Vec<f64>> {
    let per_input = allocate_inputs(pulls, env.input_size());
    set.iter()
        .map(|&j| estimate_capacity(&env.sense_batch(j, &per_input)?))
        .collect()
}

/// Position of the largest estimate; the first one on ties.
fn argmax_pos(values: &[f64]) -> usize {
    crate::sensing::argmax(values)
}

/// Senses each candidate [`naive_pulls`] times and returns the best estimate.
pub fn naive_pac(env: &mut Environment, set: &[usize], eps: f64, delta: f64) -> Result<PacOutcome> {
    let set = candidate_set(env, set)?;
    let pulls = naive_pulls(set.len(), eps, delta, env.input_size(), env.output_size())?;
    let start = env.ledger().total();
    let estimates = sense_round(env, &set, pulls)?;
    let channel = set[argmax_pos(&estimates)];
    let senses = env.ledger().total() - start;
    let schedule = RoundSchedule { round: 1, eps_r: eps, delta_r: delta, pulls };
    Ok(PacOutcome {
        channel,
        senses,
        rounds: vec![PacRound { schedule, candidates: set, estimates, total_senses: senses }],
    })
}

/// Median elimination: each round senses the survivors, keeps the upper
/// half (`ceil(n/2)` channels, ordered by estimate then index) and tightens
/// `(eps_r, delta_r)` by `(3/4, 1/2)`.
pub fn median_pac(
    env: &mut Environment,
    set: &[usize],
    eps: f64,
    delta: f64,
    second: MedianSecondTerm,
) -> Result<PacOutcome> {
    let mut alive = candidate_set(env, set)?;
    let (inputs, outputs) = (env.input_size(), env.output_size());
    // validates eps and delta even when no round runs
    median_schedule(1, eps, delta, inputs, outputs, second)?;
    let start = env.ledger().total();
    let mut rounds = Vec::new();
    let mut r = 1;
    while alive.len() > 1 {
        let schedule = median_schedule(r, eps, delta, inputs, outputs, second)?;
        let estimates = sense_round(env, &alive, schedule.pulls)?;
        let mut order: Vec<usize> = (0..alive.len()).collect();
        order.sort_by(|&a, &b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(&b)));
        let mut next: Vec<usize> = order[..alive.len().div_ceil(2)].iter().map(|&i| alive[i]).collect();
        next.sort_unstable();
        rounds.push(PacRound {
            schedule,
            candidates: std::mem::replace(&mut alive, next),
            estimates,
            total_senses: env.ledger().total() - start,
        });
        r += 1;
    }
    Ok(PacOutcome { channel: alive[0], senses: env.ledger().total() - start, rounds })
}

fn run_pac(
    env: &mut Environment,
    set: &[usize],
    eps: f64,
    delta: f64,
    opts: &IdentifyOptions,
) -> Result<PacOutcome> {
    match opts.pac {
        PacKind::Naive => naive_pac(env, set, eps, delta),
        PacKind::Median => median_pac(env, set, eps, delta, opts.median_second),
    }
}

fn pac_budget(k: usize, eps: f64, delta: f64, env: &Environment, opts: &IdentifyOptions) -> Result<u64> {
    let (i, o) = (env.input_size(), env.output_size());
    match opts.pac {
        PacKind::Naive => naive_budget(k, eps, delta, i, o),
        PacKind::Median => median_budget(k, eps, delta, i, o, opts.median_second),
    }
}

/// Identifies the channel of largest capacity with confidence `1 - delta`.
///
/// Round `r` senses every survivor `T_r` times (see [`alg1_schedule`]),
/// runs the PAC subroutine with `(eps_r/2, delta_r)` on the survivors to get
/// a pivot, and drops every channel whose estimate falls more than `eps_r`
/// below the pivot's estimate from the same round.
pub fn best_channel_id(env: &mut Environment, delta: f64, opts: &IdentifyOptions) -> Result<IdentifyReport> {
    schedule::check_delta(delta)?;
    let (inputs, outputs) = (env.input_size(), env.output_size());
    let start = env.ledger().total();
    let mut alive: Vec<usize> = (0..env.len()).collect();
    let mut rounds: Vec<IdentifyRound> = Vec::new();
    let mut truncated = false;
    let mut r = 1;
    while alive.len() > 1 {
        let schedule = alg1_schedule(r, delta, inputs, outputs)?;
        let k = alive.len();
        let sub = pac_budget(k, schedule.eps_r / 2.0, schedule.delta_r, env, opts)?;
        let cost = (k as u64).saturating_mul(schedule.pulls).saturating_add(sub);
        let used = env.ledger().total() - start;
        let over_cap = opts.budget_cap.is_some_and(|cap| used.saturating_add(cost) > cap);
        if cost == u64::MAX || used.saturating_add(cost) == u64::MAX || over_cap {
            truncated = true;
            break;
        }
        let estimates = sense_round(env, &alive, schedule.pulls)?;
        let pac = run_pac(env, &alive, schedule.eps_r / 2.0, schedule.delta_r, opts)?;
        let pivot_est = estimates[alive.iter().position(|&j| j == pac.channel).expect("pivot is a survivor")];
        let threshold = pivot_est - schedule.eps_r;
        let (mut kept, mut eliminated) = (Vec::new(), Vec::new());
        for (&j, &e) in alive.iter().zip(&estimates) {
            if e >= threshold { kept.push(j) } else { eliminated.push(j) }
        }
        rounds.push(IdentifyRound {
            schedule,
            survivors: std::mem::replace(&mut alive, kept),
            estimates,
            pac_pivot: pac.channel,
            pac_senses: pac.senses,
            eliminated,
            total_senses: env.ledger().total() - start,
        });
        r += 1;
    }
    let output_channel = if alive.len() == 1 {
        alive[0]
    } else {
        // truncated: best surviving estimate from the last completed round
        match rounds.last() {
            Some(last) => {
                let surv: Vec<f64> = alive
                    .iter()
                    .map(|j| last.estimates[last.survivors.iter().position(|s| s == j).unwrap()])
                    .collect();
                alive[argmax_pos(&surv)]
            }
            None => alive[0],
        }
    };
    Ok(IdentifyReport {
        output_channel,
        rounds,
        total_senses: env.ledger().total() - start,
        succeeded: None,
        truncated,
        pac: opts.pac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Channel;

    fn env(ps: &[f64], seed: u64) -> Environment {
        Environment::new(ps.iter().map(|&p| Channel::bsc(p).unwrap()).collect(), seed).unwrap()
    }

    #[test]
    fn single_channel_needs_no_senses() {
        let mut e = env(&[0.2], 1);
        let rep = best_channel_id(&mut e, 0.1, &IdentifyOptions::default()).unwrap();
        assert_eq!(rep.output_channel, 0);
        assert_eq!(rep.total_senses, 0);
        assert!(rep.rounds.is_empty());
    }

    #[test]
    fn naive_singleton_still_senses() {
        let mut e = env(&[0.2, 0.3], 1);
        let out = naive_pac(&mut e, &[1], 0.5, 0.1).unwrap();
        assert_eq!(out.channel, 1);
        assert_eq!(out.senses, naive_pulls(1, 0.5, 0.1, 2, 2).unwrap());
        assert_eq!(e.ledger().channel_total(0), 0);
    }

    #[test]
    fn naive_total_equals_budget() {
        let mut e = env(&[0.05, 0.1, 0.2, 0.3], 3);
        let out = naive_pac(&mut e, &[0, 1, 2, 3], 0.3, 0.1).unwrap();
        assert_eq!(out.senses, naive_budget(4, 0.3, 0.1, 2, 2).unwrap());
        assert_eq!(out.senses, e.ledger().total());
    }

    #[test]
    fn median_rounds_and_budget() {
        let v = MedianSecondTerm::EpsSquared;
        let mut e = env(&[0.05, 0.1, 0.2, 0.3, 0.35], 3);
        let out = median_pac(&mut e, &[0, 1, 2, 3, 4], 0.5, 0.1, v).unwrap();
        assert_eq!(out.rounds.len(), 3);
        let sizes: Vec<usize> = out.rounds.iter().map(|r| r.candidates.len()).collect();
        assert_eq!(sizes, vec![5, 3, 2]);
        assert!(out.senses <= median_budget(5, 0.5, 0.1, 2, 2, v).unwrap());
        assert_eq!(out.senses, e.ledger().total());
    }

    #[test]
    fn median_pair_is_one_round() {
        let mut e = env(&[0.1, 0.4], 9);
        let out = median_pac(&mut e, &[0, 1], 0.5, 0.1, MedianSecondTerm::EpsSquared).unwrap();
        assert_eq!(out.rounds.len(), 1);
        assert_eq!(out.channel, 0);
    }

    #[test]
    fn candidate_checks() {
        let mut e = env(&[0.1, 0.4], 9);
        assert!(matches!(naive_pac(&mut e, &[], 0.5, 0.1), Err(Error::EmptySet)));
        assert!(matches!(naive_pac(&mut e, &[2], 0.5, 0.1), Err(Error::BadIndex { .. })));
        assert!(naive_pac(&mut e, &[1, 1], 0.5, 0.1).is_err());
        assert!(matches!(naive_pac(&mut e, &[0], 3.0, 0.1), Err(Error::BadEps(_))));
        assert!(matches!(best_channel_id(&mut e, 0.0, &IdentifyOptions::default()), Err(Error::BadDelta(_))));
    }

    #[test]
    fn well_separated_pair_is_identified() {
        let mut e = env(&[0.4, 0.1], 5);
        let mut rep = best_channel_id(&mut e, 0.1, &IdentifyOptions::default()).unwrap();
        rep.judge(1);
        assert_eq!(rep.output_channel, 1);
        assert_eq!(rep.succeeded, Some(true));
        assert_eq!(rep.total_senses, e.ledger().total());
        let first = &rep.rounds[0];
        assert!(!first.eliminated.contains(&first.pac_pivot));
        assert!(rep.rounds_csv().starts_with("round,eps_r,delta_r,T_r,survivors,total_senses\n1,"));
    }

    #[test]
    fn budget_cap_truncates() {
        let mut e = env(&[0.4, 0.1], 5);
        let opts = IdentifyOptions { budget_cap: Some(1000), ..Default::default() };
        let rep = best_channel_id(&mut e, 0.1, &opts).unwrap();
        assert!(rep.truncated);
        assert_eq!(rep.total_senses, 0);
    }

    #[test]
    fn report_json_round_trip() {
        let mut e = env(&[0.4, 0.1], 2);
        let rep = best_channel_id(&mut e, 0.2, &IdentifyOptions::default()).unwrap();
        let back: IdentifyReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}

//! Change-of-measure lower bound on the expected number of senses any
//! `delta`-correct identification policy needs.
//!
//! With `c = ln(1 / (2.4 delta))`, best channel `j*` and, for each other
//! channel `a`, a relabelling `(pi_x, pi_y)` of its alphabets giving
//! `W'_a(y|x) = W_a(pi_y(y) | pi_x(x))`:
//!
//! ```text
//! D_a = max_x D(W'_a(.|x) || W_j*(.|x))
//! E_a = max_x D(W_j*(.|x) || W'_a(.|x))
//! bound = sum_a c / D_a  +  c / max_a E_a
//! ```
//!
//! maximised over the relabellings. A term whose divergence is infinite
//! contributes zero: one sense tells the channels apart.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::capacity::capacity_value;
use crate::channel::{bsc_capacity, Channel};
use crate::dist::kl_unchecked;
use crate::error::{Error, Result};
use crate::sensing::gaps;

/// Largest number of `(pi_x, pi_y)` pairs searched for one channel.
pub const MAX_PAIRS: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Exact maximum of the full bound over all relabellings.
    #[default]
    Joint,
    /// Each channel minimises its own `D_a`; may be below the joint value.
    Independent,
}

/// One suboptimal channel's contribution and the relabelling chosen for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTerm {
    pub channel: usize,
    pub term: f64,
    /// `D_a`; `null` in JSON when infinite.
    pub kl_forward: f64,
    /// `E_a`; `null` in JSON when infinite.
    pub kl_reverse: f64,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub value: f64,
    pub best_channel: usize,
    pub best_channel_term: f64,
    pub per_channel_terms: Vec<ChannelTerm>,
    pub log_factor: f64,
    pub mode: SearchMode,
}

impl LowerBoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `max_x D(W'_a(.|x) || W_j*(.|x))` for the relabelling `(row_perm, col_perm)`.
pub fn kl_row_term(a: &Channel, jstar: &Channel, row_perm: &[usize], col_perm: &[usize]) -> Result<f64> {
    check_perm(row_perm, a.input_size())?;
    check_perm(col_perm, a.output_size())?;
    if !a.same_alphabets(jstar) {
        return Err(Error::AlphabetMismatch("kl_row_term needs equal alphabets".into()));
    }
    Ok(divergences(&a.permuted(row_perm, col_perm), jstar).0)
}

fn check_perm(p: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if p.len() != n {
        return Err(Error::LengthMismatch { left: n, right: p.len() });
    }
    for &i in p {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::BadParameter(format!("{p:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// `(max_x D(W'_x || W*_x), max_x D(W*_x || W'_x))`.
fn divergences(permuted: &Channel, best: &Channel) -> (f64, f64) {
    permuted.rows().iter().zip(best.rows()).fold((0.0f64, 0.0f64), |(d, e), (w, s)| {
        (d.max(kl_unchecked(w, s)), e.max(kl_unchecked(s, w)))
    })
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).try_fold(1u128, |acc, i| acc.checked_mul(i)).unwrap_or(u128::MAX)
}

#[derive(Debug, Clone)]
struct Candidate {
    d: f64,
    e: f64,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
}

/// All relabellings of `a` against `best`, in lexicographic order with the
/// identity first.
fn enumerate(a: &Channel, best: &Channel) -> Vec<Candidate> {
    let (nx, ny) = (a.input_size(), a.output_size());
    let cols: Vec<Vec<usize>> = (0..ny).permutations(ny).collect();
    (0..nx)
        .permutations(nx)
        .flat_map(|rp| {
            cols.iter()
                .map(|cp| {
                    let (d, e) = divergences(&a.permuted(&rp, cp), best);
                    Candidate { d, e, row_perm: rp.clone(), col_perm: cp.clone() }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Points not dominated in `(d, e)` (both smaller is better), keeping the
/// earliest relabelling among equal points.
fn pareto(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    // stable sort keeps enumeration order among exact ties
    cands.sort_by(|x, y| x.e.total_cmp(&y.e).then(x.d.total_cmp(&y.d)));
    let mut front: Vec<Candidate> = Vec::new();
    for c in cands {
        if front.last().is_none_or(|last| c.d < last.d) {
            front.push(c);
        }
    }
    front
}

fn ratio(c: f64, denom: f64) -> f64 {
    if denom.is_infinite() {
        0.0
    } else {
        c / denom
    }
}

/// Bound value for one choice of relabellings.
fn objective(c: f64, picks: &[&Candidate]) -> f64 {
    let max_e = picks.iter().map(|p| p.e).fold(0.0, f64::max);
    picks.iter().map(|p| ratio(c, p.d)).sum::<f64>() + ratio(c, max_e)
}

pub fn lower_bound(channels: &[Channel], delta: f64, mode: SearchMode) -> Result<LowerBoundReport> {
    if !(delta > 0.0 && delta < 1.0 / 2.4) {
        return Err(Error::BadDelta(delta));
    }
    let first = channels.first().ok_or(Error::EmptySet)?;
    if channels.iter().any(|ch| !ch.same_alphabets(first)) {
        return Err(Error::AlphabetMismatch("all channels must share alphabets".into()));
    }
    let pairs = factorial(first.input_size()).saturating_mul(factorial(first.output_size()));
    if pairs > MAX_PAIRS {
        return Err(Error::SearchTooLarge(pairs));
    }
    let g = gaps(channels)?;
    let best = g.iter().position(|&x| x == 0.0).expect("best channel has zero gap");
    let c = (1.0 / (2.4 * delta)).ln();
    let others: Vec<usize> = (0..channels.len()).filter(|&a| a != best).collect();
    let fronts: Vec<Vec<Candidate>> =
        crate::par::map(&others, |&a| pareto(enumerate(&channels[a], &channels[best])));

    let picks: Vec<&Candidate> = match mode {
        SearchMode::Independent => fronts.iter().map(|f| f.iter().min_by(|x, y| x.d.total_cmp(&y.d).then(x.e.total_cmp(&y.e))).unwrap()).collect(),
        SearchMode::Joint => {
            // the optimum has some channel's E as the shared maximum; for a
            // threshold t every channel takes its smallest D with E <= t
            let mut thresholds: Vec<f64> = fronts.iter().flatten().map(|p| p.e).collect();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();
            let mut best_pick: Option<(f64, Vec<&Candidate>)> = None;
            for t in thresholds {
                let choice: Option<Vec<&Candidate>> = fronts
                    .iter()
                    .map(|f| f.iter().filter(|p| p.e <= t).min_by(|x, y| x.d.total_cmp(&y.d)))
                    .collect();
                if let Some(choice) = choice {
                    let v = objective(c, &choice);
                    if best_pick.as_ref().is_none_or(|(bv, _)| v > *bv) {
                        best_pick = Some((v, choice));
                    }
                }
            }
            best_pick.map(|(_, p)| p).unwrap_or_default()
        }
    };

    let per_channel_terms: Vec<ChannelTerm> = others
        .iter()
        .zip(&picks)
        .map(|(&a, p)| ChannelTerm {
            channel: a,
            term: ratio(c, p.d),
            kl_forward: p.d,
            kl_reverse: p.e,
            row_perm: p.row_perm.clone(),
            col_perm: p.col_perm.clone(),
        })
        .collect();
    let max_e = picks.iter().map(|p| p.e).fold(0.0, f64::max);
    // a lone channel needs no senses at all
    let best_channel_term = if picks.is_empty() { 0.0 } else { ratio(c, max_e) };
    let value = per_channel_terms.iter().map(|t| t.term).sum::<f64>() + best_channel_term;
    Ok(LowerBoundReport { value, best_channel: best, best_channel_term, per_channel_terms, log_factor: c, mode })
}

/// Crossover `p` in `(0, 1/2)` with `ln 2 - h_b(p) = target`.
pub fn bsc_with_capacity(target: f64) -> Result<f64> {
    if !(target > 0.0 && target < std::f64::consts::LN_2) {
        return Err(Error::BadParameter(format!("capacity {target} not in (0, ln 2)")));
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // capacity falls as p rises towards 1/2
        if bsc_capacity(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapKlRow {
    pub eps: f64,
    /// `|C(Z_eps) - C(BSC(p))|`.
    pub gap: f64,
    /// `min` over relabellings of `max_x D(BSC(.|x) || Z'_eps(.|x))`.
    pub kl_term: f64,
}

/// Compares the perturbed Z-channel `[[1-eps, eps], [q, 1-q]]` with
/// `BSC(p)`: as `eps -> 0` the capacity gap settles while the divergence
/// the lower bound depends on blows up like `ln(1/eps)`.
///
/// Choosing `p = bsc_with_capacity(C(Z_0))` makes the gap vanish in the
/// limit.
pub fn gap_vs_kl_demo(q: f64, p: f64, eps_seq: &[f64]) -> Result<Vec<GapKlRow>> {
    if !(q > 0.0 && q < 1.0 && p > 0.0 && p < 1.0) {
        return Err(Error::BadParameter(format!("need q, p in (0,1), got q = {q}, p = {p}")));
    }
    if eps_seq.is_empty() || eps_seq.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::BadParameter("eps values must lie in (0,1)".into()));
    }
    if eps_seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::BadParameter("eps sequence must be strictly decreasing".into()));
    }
    let bsc = Channel::bsc(p)?;
    let c_bsc = capacity_value(&bsc);
    eps_seq
        .iter()
        .map(|&eps| {
            let z = Channel::z_channel(q, eps)?;
            let kl_term = enumerate(&z, &bsc)
                .iter()
                .map(|cand| cand.e)
                .fold(f64::INFINITY, f64::min);
            Ok(GapKlRow { eps, gap: (capacity_value(&z) - c_bsc).abs(), kl_term })
        })
        .collect()
}

//! Per-round sense counts and the closed-form budgets they add up to.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{ceil_count, log_squared_term, ConfidenceSpec};

/// Tolerances and sense count of one elimination round. `pulls` is per
/// surviving channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSchedule {
    pub round: u32,
    pub eps_r: f64,
    pub delta_r: f64,
    pub pulls: u64,
}

/// Which second argument of the median-elimination round count to use.
///
/// `EpsSquared` is `2 n_a / eps_r^2`, `Eps` is `2 n_a / eps_r`, the form
/// that follows from the single-channel sample bound. The former is the
/// default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianSecondTerm {
    #[default]
    EpsSquared,
    Eps,
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::BadDelta(delta))
    }
}

pub(crate) fn check_eps(eps: f64, max: f64) -> Result<()> {
    if eps > 0.0 && eps <= max {
        Ok(())
    } else {
        Err(Error::BadEps(eps))
    }
}

fn check_round(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::BadParameter("rounds are numbered from 1".into()));
    }
    Ok(())
}

/// Round `r` of best-channel identification: `eps_r = 2^-r / 4`,
/// `delta_r = delta / (50 r^3)` and
/// `T_r = ceil(4 C_lin n / eps_r^2 ln^2(4 beta_bar n / eps_r^2))` with `n`,
/// `beta_bar` taken at `alpha = delta_r`.
pub fn alg1_schedule(r: u32, delta: f64, inputs: usize, outputs: usize) -> Result<RoundSchedule> {
    check_round(r)?;
    check_delta(delta)?;
    let eps_r = 0.25 * 0.5f64.powi(r as i32);
    let delta_r = delta / (50.0 * f64::from(r).powi(3));
    let spec = ConfidenceSpec::new(delta_r, inputs, outputs)?;
    let pulls = ceil_count(log_squared_term(spec.n_alpha(), spec.beta_bar(), eps_r, 4.0));
    Ok(RoundSchedule { round: r, eps_r, delta_r, pulls })
}

/// Per-channel senses of the naive PAC policy on `k` candidates:
/// `max{4 C_lin n / eps^2 ln^2(4 beta_bar n / eps^2), 2 n / eps}` at
/// `alpha = delta / (2k)`.
pub fn naive_pulls(k: usize, eps: f64, delta: f64, inputs: usize, outputs: usize) -> Result<u64> {
    check_eps(eps, 2.0)?;
    check_delta(delta)?;
    if k == 0 {
        return Err(Error::EmptySet);
    }
    let spec = ConfidenceSpec::new(delta / (2.0 * k as f64), inputs, outputs)?;
    let na = spec.n_alpha();
    Ok(ceil_count(log_squared_term(na, spec.beta_bar(), eps, 4.0).max(2.0 * na / eps)))
}

/// Round `r` of median elimination started at `(eps, delta)`:
/// `eps_r = eps/4 (3/4)^(r-1)`, `delta_r = delta/2 (1/2)^(r-1)`, and the
/// sense count uses `alpha = delta_r / 3` with `beta_bar` fixed at its
/// `alpha = 1` value.
pub fn median_schedule(
    r: u32,
    eps: f64,
    delta: f64,
    inputs: usize,
    outputs: usize,
    second: MedianSecondTerm,
) -> Result<RoundSchedule> {
    check_round(r)?;
    check_eps(eps, 4.0)?;
    check_delta(delta)?;
    let eps_r = eps / 4.0 * 0.75f64.powi(r as i32 - 1);
    let delta_r = delta / 2.0 * 0.5f64.powi(r as i32 - 1);
    let spec = ConfidenceSpec::new(delta_r / 3.0, inputs, outputs)?;
    let na = spec.n_alpha();
    let first = log_squared_term(na, spec.beta_bar_bound()?, eps_r, 4.0);
    let tail = match second {
        MedianSecondTerm::EpsSquared => 2.0 * na / (eps_r * eps_r),
        MedianSecondTerm::Eps => 2.0 * na / eps_r,
    };
    Ok(RoundSchedule { round: r, eps_r, delta_r, pulls: ceil_count(first.max(tail)) })
}

/// Number of halving rounds to reduce `k` candidates to one.
pub fn median_rounds(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

/// Total senses of the naive policy: `k` channels times [`naive_pulls`].
pub fn naive_budget(k: usize, eps: f64, delta: f64, inputs: usize, outputs: usize) -> Result<u64> {
    Ok(naive_pulls(k, eps, delta, inputs, outputs)?.saturating_mul(k as u64))
}

/// Total senses of median elimination, `sum_r ceil(k / 2^(r-1)) T_r`.
pub fn median_budget(
    k: usize,
    eps: f64,
    delta: f64,
    inputs: usize,
    outputs: usize,
    second: MedianSecondTerm,
) -> Result<u64> {
    if k == 0 {
        return Err(Error::EmptySet);
    }
    let mut alive = k as u64;
    let mut total = 0u64;
    for r in 1..=median_rounds(k) {
        let s = median_schedule(r, eps, delta, inputs, outputs, second)?;
        total = total.saturating_add(alive.saturating_mul(s.pulls));
        alive = alive.div_ceil(2);
    }
    // validate parameters even when k = 1 needs no round
    if k == 1 {
        median_schedule(1, eps, delta, inputs, outputs, second)?;
    }
    Ok(total)
}

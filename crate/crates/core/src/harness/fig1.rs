//! Total senses of best-channel identification against the confidence
//! level, on random binary channel sets with a prescribed smallest gap.

use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::capacity_value;
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::identify::{
    alg1_schedule, best_channel_id, median_budget, naive_budget, IdentifyOptions, PacKind,
};
use crate::output::fmt_real;
use crate::sensing::{argmax, Environment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1Config {
    pub ks: Vec<usize>,
    pub delta_mins: Vec<f64>,
    pub deltas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Accepted deviation of the realised smallest gap from its target.
    pub gap_tolerance: f64,
    /// Random channels drawn per generation attempt pool.
    pub pool_size: usize,
    pub max_attempts: usize,
    pub identify: IdentifyOptions,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            ks: vec![5, 10],
            delta_mins: vec![0.08, 0.2],
            deltas: vec![0.1, 0.3, 0.5],
            seeds: (0..20).collect(),
            gap_tolerance: 0.005,
            pool_size: 1024,
            max_attempts: 10_000,
            identify: IdentifyOptions::default(),
        }
    }
}

impl Fig1Config {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 2) {
            return Err(Error::config("fig1.ks", "need at least one k, each >= 2"));
        }
        if self.delta_mins.is_empty() || self.delta_mins.iter().any(|&d| !(d > 0.0 && d < std::f64::consts::LN_2)) {
            return Err(Error::config("fig1.delta_mins", "each target gap must lie in (0, ln 2)"));
        }
        super::check_deltas(&self.deltas)?;
        if self.seeds.is_empty() {
            return Err(Error::config("--seed", "seed list must not be empty"));
        }
        if !(self.gap_tolerance >= 0.0) {
            return Err(Error::config("fig1.gap_tolerance", "must be nonnegative"));
        }
        if self.pool_size < self.ks.iter().copied().max().unwrap_or(2) {
            return Err(Error::config("fig1.pool_size", "pool must hold at least max(k) channels"));
        }
        if self.max_attempts == 0 {
            return Err(Error::config("fig1.max_attempts", "must be positive"));
        }
        Ok(())
    }
}

/// A generated instance: channels in random order and the index of the best.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub channels: Vec<Channel>,
    pub best: usize,
    /// Realised smallest gap.
    pub delta_min: f64,
}

/// Draws `k` binary channels (rows uniform on the simplex) whose smallest
/// suboptimality gap is within `tol` of `target`.
///
/// A pool of `pool_size` random channels is drawn once; each attempt picks
/// a best channel, one partner whose gap hits the target window, and `k-2`
/// further channels at least that far below the best.
pub fn generate_channel_set(
    k: usize,
    target: f64,
    tol: f64,
    pool_size: usize,
    max_attempts: usize,
    rng: &mut impl Rng,
) -> Result<ChannelSet> {
    if k < 2 {
        return Err(Error::BadParameter(format!("channel set needs k >= 2, got {k}")));
    }
    let pool: Vec<Channel> = (0..pool_size)
        .map(|_| Channel::random_dirichlet(2, 2, 1.0, rng))
        .collect::<Result<_>>()?;
    let caps: Vec<f64> = pool.iter().map(capacity_value).collect();
    let idx: Vec<usize> = (0..pool_size).collect();
    for _ in 0..max_attempts {
        let b = *idx.choose(rng).expect("pool is nonempty");
        let window: Vec<usize> =
            idx.iter().copied().filter(|&j| ((caps[b] - caps[j]) - target).abs() <= tol).collect();
        let Some(&partner) = window.choose(rng) else { continue };
        let gap = caps[b] - caps[partner];
        let rest: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&j| j != b && j != partner && caps[b] - caps[j] >= gap)
            .collect();
        if rest.len() < k - 2 {
            continue;
        }
        let mut chosen: Vec<usize> = rest.choose_multiple(rng, k - 2).copied().collect();
        chosen.push(b);
        chosen.push(partner);
        chosen.shuffle(rng);
        let best = chosen.iter().position(|&j| j == b).unwrap();
        return Ok(ChannelSet {
            channels: chosen.iter().map(|&j| pool[j].clone()).collect(),
            best,
            delta_min: gap,
        });
    }
    Err(Error::GenerationTimeout(max_attempts))
}

/// Separate stream per (k, target) so sets for different settings are
/// independent while staying a pure function of the seed.
fn generation_rng(seed: u64, k: usize, target_idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1 << 40) + ((k as u64) << 16) + target_idx as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub k: usize,
    pub delta_min: f64,
    pub delta: f64,
    pub seed: u64,
    pub total_senses: u64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Point {
    pub k: usize,
    pub delta_min: f64,
    pub delta: f64,
    pub mean_total_senses: f64,
    pub success_rate: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Result {
    pub rows: Vec<Fig1Row>,
    pub summary: Vec<Fig1Point>,
}

/// Runs every (k, target gap, seed, delta) combination. The channel set
/// depends on (k, target, seed) only, and the sensing seed is the listed
/// seed, so curves for different deltas share random numbers.
pub fn run_fig1(cfg: &Fig1Config) -> Result<Fig1Result> {
    cfg.validate()?;
    let mut instances = Vec::new();
    for &k in &cfg.ks {
        for (ti, &target) in cfg.delta_mins.iter().enumerate() {
            for &seed in &cfg.seeds {
                instances.push((k, ti, target, seed));
            }
        }
    }
    let sets: Vec<Result<ChannelSet>> = crate::par::map(&instances, |&(k, ti, target, seed)| {
        let mut rng = generation_rng(seed, k, ti);
        generate_channel_set(k, target, cfg.gap_tolerance, cfg.pool_size, cfg.max_attempts, &mut rng)
    });
    let sets: Vec<ChannelSet> = sets.into_iter().collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..instances.len()).flat_map(|i| (0..cfg.deltas.len()).map(move |d| (i, d))).collect();
    let rows: Vec<Result<Fig1Row>> = crate::par::map(&jobs, |&(i, d)| {
        let (k, _, target, seed) = instances[i];
        let delta = cfg.deltas[d];
        let set = &sets[i];
        let mut env = Environment::new(set.channels.clone(), seed)?;
        let mut rep = best_channel_id(&mut env, delta, &cfg.identify)?;
        rep.judge(set.best);
        Ok(Fig1Row {
            k,
            delta_min: target,
            delta,
            seed,
            total_senses: rep.total_senses,
            success: rep.succeeded == Some(true),
        })
    });
    let mut rows: Vec<Fig1Row> = rows.into_iter().collect::<Result<_>>()?;
    // CSV order: setting, then delta, then seed
    rows.sort_by(|a, b| {
        let key = |r: &Fig1Row| {
            (
                cfg.ks.iter().position(|&k| k == r.k),
                cfg.delta_mins.iter().position(|&x| x == r.delta_min),
                cfg.deltas.iter().position(|&x| x == r.delta),
                cfg.seeds.iter().position(|&s| s == r.seed),
            )
        };
        key(a).cmp(&key(b))
    });
    let summary = summarize(&rows);
    Ok(Fig1Result { rows, summary })
}

fn summarize(rows: &[Fig1Row]) -> Vec<Fig1Point> {
    let mut out: Vec<Fig1Point> = Vec::new();
    for group in rows.chunk_by(|a, b| (a.k, a.delta_min, a.delta) == (b.k, b.delta_min, b.delta)) {
        let n = group.len() as f64;
        out.push(Fig1Point {
            k: group[0].k,
            delta_min: group[0].delta_min,
            delta: group[0].delta,
            mean_total_senses: group.iter().map(|r| r.total_senses as f64).sum::<f64>() / n,
            success_rate: group.iter().filter(|r| r.success).count() as f64 / n,
            runs: group.len(),
        });
    }
    out
}

impl Fig1Result {
    /// CSV `k,delta_min,delta,total_senses,success`, one line per run.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,delta_min,delta,total_senses,success\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                fmt_real(r.delta_min),
                fmt_real(r.delta),
                r.total_senses,
                u8::from(r.success)
            );
        }
        out
    }

    /// CSV of the per-setting means.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("k,delta_min,delta,mean_total_senses,success_rate,runs\n");
        for p in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.k,
                fmt_real(p.delta_min),
                fmt_real(p.delta),
                fmt_real(p.mean_total_senses),
                fmt_real(p.success_rate),
                p.runs
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    fn mean(&self, k: usize, delta_min: f64, delta: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|p| p.k == k && p.delta_min == delta_min && p.delta == delta)
            .map(|p| p.mean_total_senses)
    }

    /// Checks the three expected orderings of the mean curves, pointwise:
    /// non-increasing as delta grows, non-decreasing in k, non-increasing
    /// in the target gap.
    pub fn monotonicity(&self) -> Monotonicity {
        let ks = unique(self.summary.iter().map(|p| p.k as f64));
        let gaps = unique(self.summary.iter().map(|p| p.delta_min));
        let deltas = unique(self.summary.iter().map(|p| p.delta));
        let m = |k: f64, g: f64, d: f64| self.mean(k as usize, g, d).unwrap_or(f64::NAN);
        let mut res = Monotonicity { in_delta: true, in_k: true, in_delta_min: true };
        for &k in &ks {
            for &g in &gaps {
                for w in deltas.windows(2) {
                    res.in_delta &= m(k, g, w[1]) <= m(k, g, w[0]);
                }
                for &d in &deltas {
                    for kw in ks.windows(2).filter(|kw| kw[0] == k) {
                        res.in_k &= m(kw[1], g, d) >= m(kw[0], g, d);
                    }
                    for gw in gaps.windows(2).filter(|gw| gw[0] == g) {
                        res.in_delta_min &= m(k, gw[1], d) <= m(k, gw[0], d);
                    }
                }
            }
        }
        res
    }
}

fn unique(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub in_delta: bool,
    pub in_k: bool,
    pub in_delta_min: bool,
}

impl Monotonicity {
    pub fn all(&self) -> bool {
        self.in_delta && self.in_k && self.in_delta_min
    }
}

/// Senses best-channel identification would spend if every estimate were
/// exact and every pivot were the true best channel: round `r` costs
/// `|C_r| T_r` plus the PAC subroutine's budget on `|C_r|` channels, and
/// drops every channel more than `eps_r` below the best.
pub fn projected_total_senses(
    capacities: &[f64],
    delta: f64,
    inputs: usize,
    outputs: usize,
    opts: &IdentifyOptions,
) -> Result<u64> {
    if capacities.is_empty() {
        return Err(Error::EmptySet);
    }
    let best = capacities[argmax(capacities)];
    let mut alive: Vec<f64> = capacities.to_vec();
    let mut total = 0u64;
    let mut r = 1;
    while alive.len() > 1 {
        let s = alg1_schedule(r, delta, inputs, outputs)?;
        let k = alive.len();
        let sub = match opts.pac {
            PacKind::Naive => naive_budget(k, s.eps_r / 2.0, s.delta_r, inputs, outputs)?,
            PacKind::Median => median_budget(k, s.eps_r / 2.0, s.delta_r, inputs, outputs, opts.median_second)?,
        };
        total = total.saturating_add((k as u64).saturating_mul(s.pulls)).saturating_add(sub);
        alive.retain(|&c| c >= best - s.eps_r);
        if total == u64::MAX {
            break;
        }
        // exact ties with the best never separate
        if alive.len() > 1 && alive.iter().all(|&c| c == best) {
            break;
        }
        r += 1;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_set_hits_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = generate_channel_set(6, 0.13, 0.005, 1024, 1000, &mut rng).unwrap();
        assert_eq!(set.channels.len(), 6);
        let caps: Vec<f64> = set.channels.iter().map(capacity_value).collect();
        assert_eq!(argmax(&caps), set.best);
        let mut gaps: Vec<f64> =
            caps.iter().enumerate().filter(|&(j, _)| j != set.best).map(|(_, c)| caps[set.best] - c).collect();
        gaps.sort_by(f64::total_cmp);
        assert!((gaps[0] - 0.13).abs() <= 0.005 + 1e-9, "{gaps:?}");
    }

    #[test]
    fn impossible_target_times_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = generate_channel_set(3, 0.69, 0.0, 16, 50, &mut rng).unwrap_err();
        assert_eq!(err, Error::GenerationTimeout(50));
    }

    #[test]
    fn tiny_run_is_reproducible() {
        let cfg = Fig1Config {
            ks: vec![3],
            delta_mins: vec![0.2],
            deltas: vec![0.2, 0.4],
            seeds: vec![1, 2],
            ..Default::default()
        };
        let a = run_fig1(&cfg).unwrap();
        let b = run_fig1(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.summary.len(), 2);
        assert!(a.to_csv().starts_with("k,delta_min,delta,total_senses,success\n3,"));
    }

    #[test]
    fn projection_of_separated_pair_is_one_round() {
        let caps = [0.3, 0.0];
        let opts = IdentifyOptions::default();
        let s = alg1_schedule(1, 0.1, 2, 2).unwrap();
        let expected = 2 * s.pulls + naive_budget(2, s.eps_r / 2.0, s.delta_r, 2, 2).unwrap();
        assert_eq!(projected_total_senses(&caps, 0.1, 2, 2, &opts).unwrap(), expected);
    }
}

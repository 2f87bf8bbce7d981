//! Simulated sensing environment.
//!
//! Each channel owns its own ChaCha stream (same seed, stream id = channel
//! index), so the counts a channel produces depend only on the seed and on
//! how often that channel was sensed, never on the interleaving of calls.
//! Sensing `n` times with input `x` draws one multinomial vector, which has
//! exactly the law of `n` independent channel uses.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use serde::{Deserialize, Serialize};

use crate::capacity::{capacity, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::estimation::CountMatrix;

/// Capacities closer than this are treated as tied for the best.
pub const TIE_TOL: f64 = 1e-9;

/// Sends per (channel, input symbol).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SenseLedger {
    sends: Vec<Vec<u64>>,
    total: u64,
}

impl SenseLedger {
    fn new(channels: usize, inputs: usize) -> Self {
        Self { sends: vec![vec![0; inputs]; channels], total: 0 }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn sends(&self) -> &[Vec<u64>] {
        &self.sends
    }

    pub fn channel_total(&self, j: usize) -> u64 {
        self.sends[j].iter().sum()
    }

    /// CSV with header `channel,input,sends`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,input,sends\n");
        for (j, row) in self.sends.iter().enumerate() {
            for (x, s) in row.iter().enumerate() {
                let _ = writeln!(out, "{j},{x},{s}");
            }
        }
        out
    }
}

/// Hidden ground-truth channels plus the generator and the sense ledger.
#[derive(Debug, Clone)]
pub struct Environment {
    channels: Vec<Channel>,
    streams: Vec<ChaCha8Rng>,
    ledger: SenseLedger,
    seed: u64,
}

impl Environment {
    pub fn new(channels: Vec<Channel>, seed: u64) -> Result<Self> {
        check_alphabets(&channels)?;
        let streams = (0..channels.len())
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                rng
            })
            .collect();
        let ledger = SenseLedger::new(channels.len(), channels[0].input_size());
        Ok(Self { channels, streams, ledger, seed })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn input_size(&self) -> usize {
        self.channels[0].input_size()
    }

    pub fn output_size(&self) -> usize {
        self.channels[0].output_size()
    }

    /// Ground truth; the identification algorithms never call this.
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn ledger(&self) -> &SenseLedger {
        &self.ledger
    }

    /// Sends `per_input[x]` copies of each input `x` through channel `j` and
    /// returns the observed output tallies.
    pub fn sense_batch(&mut self, j: usize, per_input: &[u64]) -> Result<CountMatrix> {
        let len = self.channels.len();
        let ch = self.channels.get(j).ok_or(Error::BadIndex { index: j, len })?;
        if per_input.len() != ch.input_size() {
            return Err(Error::LengthMismatch { left: ch.input_size(), right: per_input.len() });
        }
        let mut counts = CountMatrix::zeros(ch.input_size(), ch.output_size());
        let rng = &mut self.streams[j];
        for (x, &n) in per_input.iter().enumerate() {
            if n > 0 {
                sample_multinomial_into(rng, n, ch.row(x), counts.row_mut(x));
            }
        }
        for (s, n) in self.ledger.sends[j].iter_mut().zip(per_input) {
            *s = s.saturating_add(*n);
        }
        let sent = per_input.iter().fold(0u64, |a, n| a.saturating_add(*n));
        self.ledger.total = self.ledger.total.saturating_add(sent);
        Ok(counts)
    }
}

fn check_alphabets(channels: &[Channel]) -> Result<()> {
    let first = channels.first().ok_or(Error::EmptySet)?;
    if let Some((j, c)) = channels.iter().enumerate().find(|(_, c)| !c.same_alphabets(first)) {
        return Err(Error::AlphabetMismatch(format!(
            "channel 0 is {}x{}, channel {j} is {}x{}",
            first.input_size(),
            first.output_size(),
            c.input_size(),
            c.output_size()
        )));
    }
    Ok(())
}

/// One multinomial draw by sequential conditional binomials.
pub fn sample_multinomial(rng: &mut impl Rng, n: u64, probs: &[f64]) -> Vec<u64> {
    let mut out = vec![0; probs.len()];
    sample_multinomial_into(rng, n, probs, &mut out);
    out
}

fn sample_multinomial_into(rng: &mut impl Rng, n: u64, probs: &[f64], out: &mut [u64]) {
    let mut remaining = n;
    let mut mass = 1.0f64;
    let last = probs.len() - 1;
    for (y, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if y == last {
            out[y] += remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            Binomial::new(remaining, cond)
                .expect("conditional probability lies in (0,1)")
                .sample(rng)
        };
        out[y] += c;
        remaining -= c;
        mass -= p;
    }
}

/// True capacities at tolerance `1e-12`.
pub fn capacities(channels: &[Channel]) -> Vec<f64> {
    channels
        .iter()
        .map(|c| {
            capacity(c, DEFAULT_TOL, DEFAULT_MAX_ITER)
                .expect("default solver arguments are valid")
                .capacity
        })
        .collect()
}

/// Index of the largest capacity, lowest index on exact ties.
pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Suboptimality gaps `C* - C_j`.
///
/// Fails with [`Error::NonUniqueBest`] when another channel is within
/// [`TIE_TOL`] of the best; [`gaps_unchecked`] skips that check.
pub fn gaps(channels: &[Channel]) -> Result<Vec<f64>> {
    if channels.is_empty() {
        return Err(Error::EmptySet);
    }
    let caps = capacities(channels);
    let best = argmax(&caps);
    if let Some(other) = (0..caps.len()).find(|&j| j != best && caps[best] - caps[j] <= TIE_TOL) {
        return Err(Error::NonUniqueBest { first: best.min(other), second: best.max(other) });
    }
    Ok(caps.iter().map(|c| caps[best] - c).collect())
}

pub fn gaps_unchecked(channels: &[Channel]) -> Vec<f64> {
    let caps = capacities(channels);
    let best = caps[argmax(&caps)];
    caps.iter().map(|c| best - c).collect()
}

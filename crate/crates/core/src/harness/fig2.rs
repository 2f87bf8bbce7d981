//! Deterministic budget curves of the naive and median-elimination PAC
//! policies over the number of channels, and where they cross.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{median_budget, naive_budget, MedianSecondTerm};
use crate::output::fmt_real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Config {
    pub ks: Vec<usize>,
    /// `(eps, delta)` pairs.
    pub settings: Vec<(f64, f64)>,
    pub inputs: usize,
    pub outputs: usize,
    pub median_second: MedianSecondTerm,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            ks: (2..=10).map(|e| 1usize << e).collect(),
            settings: vec![(0.1, 0.1), (0.1, 0.7), (0.3, 0.1)],
            inputs: 2,
            outputs: 2,
            median_second: MedianSecondTerm::EpsSquared,
        }
    }
}

impl Fig2Config {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() || self.ks.iter().any(|&k| k < 2) {
            return Err(Error::config("fig2.ks", "need at least one k, each >= 2"));
        }
        if self.ks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("fig2.ks", "k sweep must be strictly increasing"));
        }
        if self.settings.is_empty() {
            return Err(Error::config("fig2.settings", "need at least one (eps, delta) pair"));
        }
        for &(eps, delta) in &self.settings {
            if !(eps > 0.0 && eps <= 2.0) {
                return Err(Error::config("--eps", format!("{eps} not in (0, 2]")));
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::config("--delta", format!("{delta} not in (0, 1)")));
            }
        }
        if self.inputs < 2 || self.outputs < 2 {
            return Err(Error::config("fig2.inputs", "alphabets need at least two symbols"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub naive_budget: u64,
    pub median_budget: u64,
    /// Sign of `median - naive` differs from the previous `k` of the sweep.
    pub crossover: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub eps: f64,
    pub delta: f64,
    /// Sweep values of `k` at which the sign changed.
    pub ks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Result {
    pub rows: Vec<Fig2Row>,
    pub crossings: Vec<Crossing>,
}

pub fn run_fig2(cfg: &Fig2Config) -> Result<Fig2Result> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut crossings = Vec::new();
    for &(eps, delta) in &cfg.settings {
        let mut prev_sign: Option<std::cmp::Ordering> = None;
        let mut ks = Vec::new();
        for &k in &cfg.ks {
            let naive = naive_budget(k, eps, delta, cfg.inputs, cfg.outputs)?;
            let median = median_budget(k, eps, delta, cfg.inputs, cfg.outputs, cfg.median_second)?;
            let sign = median.cmp(&naive);
            let crossover = prev_sign.is_some_and(|p| p != sign);
            if crossover {
                ks.push(k);
            }
            prev_sign = Some(sign);
            rows.push(Fig2Row { k, eps, delta, naive_budget: naive, median_budget: median, crossover });
        }
        crossings.push(Crossing { eps, delta, ks });
    }
    Ok(Fig2Result { rows, crossings })
}

impl Fig2Result {
    /// CSV `k,eps,delta,naive_budget,median_budget,crossover_flag`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,eps,delta,naive_budget,median_budget,crossover_flag\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.k,
                fmt_real(r.eps),
                fmt_real(r.delta),
                r.naive_budget,
                r.median_budget,
                u8::from(r.crossover)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn crossing(&self, eps: f64, delta: f64) -> Option<&Crossing> {
        self.crossings.iter().find(|c| c.eps == eps && c.delta == delta)
    }
}

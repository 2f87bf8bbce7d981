//! Experiment configuration and drivers.
//!
//! [`ExperimentConfig`] describes one run: which experiment, where the
//! channels come from, the algorithm parameters and the seeds. It can be
//! read from JSON or assembled from command-line flags; [`execute`] turns it
//! into the text that gets written out. Configuration problems surface as
//! [`Error::Config`] naming the offending option, everything else as the
//! underlying runtime error.

mod fig1;
mod fig2;

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use fig1::{
    generate_channel_set, projected_total_senses, run_fig1, ChannelSet, Fig1Config, Fig1Point,
    Fig1Result, Fig1Row, Monotonicity,
};
pub use fig2::{run_fig2, Crossing, Fig2Config, Fig2Result, Fig2Row};

use crate::bounds::{lower_bound, SearchMode};
use crate::capacity::{capacity, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::channel::{load_channels, Channel, ChannelKind};
use crate::error::{Error, Result};
use crate::estimation::{
    allocate_inputs, confidence_radius, estimate_capacity, required_samples, ConfidenceSpec,
    CountMatrix,
};
use crate::identify::{best_channel_id, median_pac, naive_pac, IdentifyOptions};
use crate::output::fmt_real;
use crate::sensing::{argmax, capacities, Environment};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[default]
    Capacity,
    Estimate,
    Identify,
    Pac,
    LowerBound,
    Fig1,
    Fig2,
}

impl Experiment {
    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::Estimate | Self::Identify | Self::Pac | Self::Fig1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Best-channel identification by gap elimination.
    #[default]
    Gap,
    Naive,
    Median,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSource {
    File(PathBuf),
    Generate(Vec<ChannelKind>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub channels: Option<ChannelSource>,
    pub deltas: Vec<f64>,
    pub eps: Option<f64>,
    pub alg: Algorithm,
    pub identify: IdentifyOptions,
    pub mode: SearchMode,
    pub seeds: Vec<u64>,
    /// Senses per channel for `estimate`; derived from eps and delta if absent.
    pub samples: Option<u64>,
    /// Count matrix CSV for `estimate`, instead of simulating.
    pub counts: Option<PathBuf>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub fig1: Fig1Config,
    pub fig2: Fig2Config,
}

pub(crate) fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(Error::config("--delta", "need at least one value"));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::config("--delta", format!("{d} not in (0, 1)")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("--config", e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn delta(&self) -> Option<f64> {
        self.deltas.first().copied()
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        use Experiment::*;
        if !self.deltas.is_empty() {
            check_deltas(&self.deltas)?;
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::config("--eps", format!("{eps} must be positive")));
            }
        }
        let needs_channels = match self.experiment {
            Capacity | Identify | Pac | LowerBound => true,
            Estimate => self.counts.is_none(),
            Fig1 | Fig2 => false,
        };
        if needs_channels && self.channels.is_none() {
            return Err(Error::config("--channels", "a channel file is required"));
        }
        if self.experiment.is_stochastic() && self.experiment != Fig1 && self.seeds.is_empty() {
            return Err(Error::config("--seed", "a seed is required"));
        }
        match self.experiment {
            LowerBound => match self.delta() {
                None => return Err(Error::config("--delta", "required")),
                Some(d) if d >= 1.0 / 2.4 => {
                    return Err(Error::config("--delta", format!("{d} must be below 1/2.4")))
                }
                _ => {}
            },
            Pac => {
                if self.alg == Algorithm::Gap {
                    return Err(Error::config("--alg", "pac runs naive or median"));
                }
            }
            Fig1 => {
                self.fig1_config().validate()?;
            }
            Fig2 => self.fig2_config().validate()?,
            _ => {}
        }
        let pac_like = self.experiment == Pac || (self.experiment == Identify && self.alg != Algorithm::Gap);
        if pac_like {
            let max = if self.alg == Algorithm::Median { 4.0 } else { 2.0 };
            match self.eps {
                None => return Err(Error::config("--eps", "required for the PAC policies")),
                Some(e) if e > max => return Err(Error::config("--eps", format!("{e} exceeds {max}"))),
                _ => {}
            }
        }
        Ok(())
    }

    /// `fig1` settings with any top-level deltas and seeds applied.
    pub fn fig1_config(&self) -> Fig1Config {
        let mut c = self.fig1.clone();
        if !self.deltas.is_empty() {
            c.deltas = self.deltas.clone();
        }
        if !self.seeds.is_empty() {
            c.seeds = self.seeds.clone();
        }
        c.identify = self.identify;
        c
    }

    /// `fig2` settings; a top-level eps with deltas replaces the default grid.
    pub fn fig2_config(&self) -> Fig2Config {
        let mut c = self.fig2.clone();
        if let Some(eps) = self.eps {
            if !self.deltas.is_empty() {
                c.settings = self.deltas.iter().map(|&d| (eps, d)).collect();
            }
        }
        c.median_second = self.identify.median_second;
        c
    }

    fn load_channels(&self) -> Result<Vec<Channel>> {
        match &self.channels {
            Some(ChannelSource::File(p)) => load_channels(p),
            Some(ChannelSource::Generate(kinds)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seeds.first().copied().unwrap_or(0));
                kinds.iter().map(|k| Channel::make(k, &mut rng)).collect()
            }
            None => Err(Error::config("--channels", "a channel file is required")),
        }
    }
}

/// Text produced by a run plus human-readable notes for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub notes: Vec<String>,
}

/// Runs the configured experiment.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Capacity => run_capacity(cfg),
        Experiment::Estimate => run_estimate(cfg),
        Experiment::Identify | Experiment::Pac => run_identify(cfg),
        Experiment::LowerBound => run_lower_bound(cfg),
        Experiment::Fig1 => {
            let res = run_fig1(&cfg.fig1_config())?;
            let mut notes: Vec<String> = res
                .summary
                .iter()
                .map(|p| {
                    format!(
                        "k={} delta_min={} delta={} mean_total_senses={:.4e} success_rate={:.3}",
                        p.k, p.delta_min, p.delta, p.mean_total_senses, p.success_rate
                    )
                })
                .collect();
            let m = res.monotonicity();
            notes.push(format!(
                "monotone in delta: {}, in k: {}, in delta_min: {}",
                m.in_delta, m.in_k, m.in_delta_min
            ));
            let text = match cfg.format {
                Format::Csv => res.to_csv(),
                Format::Json => res.to_json(),
            };
            Ok(RunOutput { text, notes })
        }
        Experiment::Fig2 => {
            let res = run_fig2(&cfg.fig2_config())?;
            let notes = res
                .crossings
                .iter()
                .map(|c| format!("eps={} delta={}: sign changes at k = {:?}", c.eps, c.delta, c.ks))
                .collect();
            let text = match cfg.format {
                Format::Csv => res.to_csv(),
                Format::Json => res.to_json(),
            };
            Ok(RunOutput { text, notes })
        }
    }
}

#[derive(Serialize)]
struct CapacityEntry {
    channel: usize,
    capacity: f64,
    duality_gap: f64,
    iterations: usize,
    converged: bool,
    input_dist: Vec<f64>,
}

fn run_capacity(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let channels = cfg.load_channels()?;
    let entries: Vec<CapacityEntry> = channels
        .iter()
        .enumerate()
        .map(|(j, ch)| {
            let r = capacity(ch, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
            Ok(CapacityEntry {
                channel: j,
                capacity: r.capacity,
                duality_gap: r.duality_gap,
                iterations: r.iterations,
                converged: r.converged,
                input_dist: r.input_dist.into_inner(),
            })
        })
        .collect::<Result<_>>()?;
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&entries)?,
        Format::Csv => {
            let mut out = String::from("channel,capacity,duality_gap,iterations,converged\n");
            for e in &entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    e.channel,
                    fmt_real(e.capacity),
                    fmt_real(e.duality_gap),
                    e.iterations,
                    u8::from(e.converged)
                );
            }
            out
        }
    };
    Ok(RunOutput { text, notes: Vec::new() })
}

#[derive(Serialize)]
struct EstimateEntry {
    channel: usize,
    samples: u64,
    estimate: f64,
    radius: Option<f64>,
    capacity: Option<f64>,
    counts: Vec<Vec<u64>>,
}

fn run_estimate(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let alpha = cfg.delta().unwrap_or(0.1);
    let mut entries = Vec::new();
    if let Some(path) = &cfg.counts {
        let counts = CountMatrix::from_csv(&std::fs::read_to_string(path)?)?;
        let spec = ConfidenceSpec::new(alpha, counts.input_size(), counts.output_size())?;
        let n = counts.total();
        entries.push(EstimateEntry {
            channel: 0,
            samples: n,
            estimate: estimate_capacity(&counts)?,
            radius: confidence_radius(&spec, n.max(1)).ok().map(|r| r.value),
            capacity: None,
            counts: counts.counts().to_vec(),
        });
    } else {
        let channels = cfg.load_channels()?;
        let truth = capacities(&channels);
        let mut env = Environment::new(channels, cfg.seeds[0])?;
        let spec = ConfidenceSpec::new(alpha, env.input_size(), env.output_size())?;
        let n = match (cfg.samples, cfg.eps) {
            (Some(n), _) => n,
            (None, Some(eps)) => required_samples(&spec, eps)?,
            (None, None) => {
                return Err(Error::config("--samples", "give --samples or --eps to size the run"))
            }
        };
        if n < env.input_size() as u64 {
            return Err(Error::config("--samples", "must cover every input symbol at least once"));
        }
        let per_input = allocate_inputs(n, env.input_size());
        for (j, &cap) in truth.iter().enumerate() {
            let counts = env.sense_batch(j, &per_input)?;
            entries.push(EstimateEntry {
                channel: j,
                samples: n,
                estimate: estimate_capacity(&counts)?,
                radius: Some(confidence_radius(&spec, n)?.value),
                capacity: Some(cap),
                counts: counts.counts().to_vec(),
            });
        }
    }
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&entries)?,
        Format::Csv => {
            let mut out = String::from("channel,samples,estimate,radius,capacity\n");
            let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
            for e in &entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    e.channel,
                    e.samples,
                    fmt_real(e.estimate),
                    opt(e.radius),
                    opt(e.capacity)
                );
            }
            out
        }
    };
    Ok(RunOutput { text, notes: Vec::new() })
}

fn run_identify(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let channels = cfg.load_channels()?;
    let truth = capacities(&channels);
    let best = argmax(&truth);
    let delta = cfg.delta().unwrap_or(0.1);
    let mut docs = Vec::new();
    let mut csvs = Vec::new();
    let mut notes = Vec::new();
    for &seed in &cfg.seeds {
        let mut env = Environment::new(channels.clone(), seed)?;
        match cfg.alg {
            Algorithm::Gap if cfg.experiment == Experiment::Identify => {
                let mut rep = best_channel_id(&mut env, delta, &cfg.identify)?;
                rep.judge(best);
                notes.push(format!(
                    "seed {seed}: output channel {} after {} senses (true best {best})",
                    rep.output_channel, rep.total_senses
                ));
                docs.push(serde_json::to_value(&rep)?);
                csvs.push(rep.rounds_csv());
            }
            alg => {
                let eps = cfg.eps.expect("validated");
                let all: Vec<usize> = (0..env.len()).collect();
                let out = if alg == Algorithm::Median {
                    median_pac(&mut env, &all, eps, delta, cfg.identify.median_second)?
                } else {
                    naive_pac(&mut env, &all, eps, delta)?
                };
                notes.push(format!(
                    "seed {seed}: output channel {} (gap {:.6}) after {} senses",
                    out.channel,
                    truth[best] - truth[out.channel],
                    out.senses
                ));
                docs.push(serde_json::to_value(&out)?);
                csvs.push(out.rounds_csv());
            }
        }
    }
    let text = match cfg.format {
        Format::Json if docs.len() == 1 => serde_json::to_string_pretty(&docs[0])?,
        Format::Json => serde_json::to_string_pretty(&docs)?,
        Format::Csv if csvs.len() == 1 => csvs.swap_remove(0),
        Format::Csv => {
            let mut out = String::from("seed,round,eps_r,delta_r,T_r,survivors,total_senses\n");
            for (seed, csv) in cfg.seeds.iter().zip(&csvs) {
                for line in csv.lines().skip(1) {
                    let _ = writeln!(out, "{seed},{line}");
                }
            }
            out
        }
    };
    Ok(RunOutput { text, notes })
}

fn run_lower_bound(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let channels = cfg.load_channels()?;
    let rep = lower_bound(&channels, cfg.delta().expect("validated"), cfg.mode)?;
    let text = match cfg.format {
        Format::Json => rep.to_json(),
        Format::Csv => {
            let join = |p: &[usize]| p.iter().map(usize::to_string).collect::<Vec<_>>().join("|");
            let mut out = String::from("channel,role,term,kl_forward,kl_reverse,row_perm,col_perm\n");
            for t in &rep.per_channel_terms {
                let _ = writeln!(
                    out,
                    "{},suboptimal,{},{},{},{},{}",
                    t.channel,
                    fmt_real(t.term),
                    fmt_real(t.kl_forward),
                    fmt_real(t.kl_reverse),
                    join(&t.row_perm),
                    join(&t.col_perm)
                );
            }
            let _ = writeln!(out, "{},best,{},,,,", rep.best_channel, fmt_real(rep.best_channel_term));
            out
        }
    };
    Ok(RunOutput { text, notes: vec![format!("lower bound on expected senses: {}", fmt_real(rep.value))] })
}

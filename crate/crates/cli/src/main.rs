use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dmc_ident::bounds::SearchMode;
use dmc_ident::channel::load_channels;
use dmc_ident::harness::{execute, Algorithm, ChannelSource, Experiment, ExperimentConfig, Format};
use dmc_ident::Error;

#[derive(Parser, Debug)]
#[command(name = "dmc-ident", version, about = "Capacity estimation and best-channel identification for DMCs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Blahut-Arimoto capacity of every channel in the file.
    Capacity,
    /// Plug-in capacity estimates from simulated senses or a count matrix.
    Estimate,
    /// Best-channel identification (gap elimination, or a PAC policy).
    Identify,
    /// eps-best channel by the naive or median-elimination policy.
    Pac,
    /// Lower bound on the expected number of senses.
    LowerBound,
    /// Total senses against confidence on random binary channel sets.
    Fig1,
    /// Naive versus median sense budgets over the number of channels.
    Fig2,
}

#[derive(clap::Args, Debug, Default)]
struct Flags {
    /// Channel set JSON: {"channels":[{"matrix":[[..],..]},..]}.
    #[arg(long, global = true)]
    channels: Option<PathBuf>,
    /// RNG seed; repeat or comma-separate for several runs. Random if omitted.
    #[arg(long, global = true, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Confidence parameter(s).
    #[arg(long, global = true, value_delimiter = ',')]
    delta: Vec<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true, value_enum)]
    alg: Option<AlgArg>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Senses per channel for `estimate`.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Count matrix CSV for `estimate`.
    #[arg(long, global = true)]
    counts: Option<PathBuf>,
    /// Relabelling search for `lower-bound`.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum AlgArg {
    Gap,
    Naive,
    Median,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Joint,
    Independent,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Self::Capacity => Experiment::Capacity,
            Self::Estimate => Experiment::Estimate,
            Self::Identify => Experiment::Identify,
            Self::Pac => Experiment::Pac,
            Self::LowerBound => Experiment::LowerBound,
            Self::Fig1 => Experiment::Fig1,
            Self::Fig2 => Experiment::Fig2,
        }
    }

    /// Reports come out as JSON, tables as CSV.
    fn default_format(self) -> Format {
        match self {
            Self::Identify | Self::Pac | Self::LowerBound => Format::Json,
            _ => Format::Csv,
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let f = &cli.flags;
    let mut cfg = match &f.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig { format: cli.command.default_format(), ..Default::default() },
    };
    cfg.experiment = cli.command.experiment();
    if let Some(path) = &f.channels {
        // surface unreadable or malformed channel files as a flag problem
        load_channels(path).map_err(|e| Error::Config {
            key: "--channels".into(),
            message: format!("{}: {e}", path.display()),
        })?;
        cfg.channels = Some(ChannelSource::File(path.clone()));
    }
    if !f.seed.is_empty() {
        cfg.seeds = f.seed.clone();
    }
    if !f.delta.is_empty() {
        cfg.deltas = f.delta.clone();
    }
    if f.eps.is_some() {
        cfg.eps = f.eps;
    }
    if let Some(alg) = f.alg {
        cfg.alg = match alg {
            AlgArg::Gap => Algorithm::Gap,
            AlgArg::Naive => Algorithm::Naive,
            AlgArg::Median => Algorithm::Median,
        };
    } else if cli.command == Command::Pac && cfg.alg == Algorithm::Gap {
        cfg.alg = Algorithm::Naive;
    }
    if let Some(fmt) = f.format {
        cfg.format = match fmt {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(mode) = f.mode {
        cfg.mode = match mode {
            ModeArg::Joint => SearchMode::Joint,
            ModeArg::Independent => SearchMode::Independent,
        };
    }
    if f.out.is_some() {
        cfg.out = f.out.clone();
    }
    if f.samples.is_some() {
        cfg.samples = f.samples;
    }
    if f.counts.is_some() {
        cfg.counts = f.counts.clone();
    }
    let simulates = cfg.experiment.is_stochastic()
        && cfg.experiment != Experiment::Fig1
        && !(cfg.experiment == Experiment::Estimate && cfg.counts.is_some());
    if simulates && cfg.seeds.is_empty() {
        cfg.seeds = vec![rand::random()];
    }
    Ok(cfg)
}

fn seed_line(cfg: &ExperimentConfig) -> Option<String> {
    if !cfg.experiment.is_stochastic() {
        return None;
    }
    let seeds = if cfg.experiment == Experiment::Fig1 { cfg.fig1_config().seeds } else { cfg.seeds.clone() };
    if seeds.is_empty() {
        return None;
    }
    let list: Vec<String> = seeds.iter().map(u64::to_string).collect();
    Some(format!("seed{}: {}", if seeds.len() > 1 { "s" } else { "" }, list.join(",")))
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = build_config(cli)?;
    // validate first so a bad flag is not reported alongside a seed
    cfg.validate()?;
    if let Some(line) = seed_line(&cfg) {
        eprintln!("{line}");
    }
    let out = execute(&cfg)?;
    for note in &out.notes {
        eprintln!("{note}");
    }
    match &cfg.out {
        Some(path) => std::fs::write(path, &out.text)?,
        None => print!("{}", out.text),
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching config errors below
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

//! The `instab` command line: argument parsing, config resolution and the
//! five experiment commands.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use bundle::{Bundle, MANIFEST};
pub use commands::{Outcome, Prepared};
pub use config::{BacktestParams, DatasetSpec, ForestParams, RunConfig};

use crate::error::{Error, ErrorKind, Result};
use crate::explain::Algorithm;

#[derive(Debug, Parser)]
#[command(
    name = "instab",
    version,
    about = "Stability of MDA, LIME and SHAP feature rankings over random forests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Instability index of each algorithm's rankings for every k.
    Stability(Flags),
    /// Select features above the mean importance, retrain, and score on the test split.
    SelectEvaluate(Flags),
    /// Instability index of final rankings as the iteration count grows.
    Convergence(Flags),
    /// Veto trades with forests trained on all or on selected features.
    Backtest(Flags),
    /// Write a synthetic dataset to CSV.
    Synth(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stability(_) => "stability",
            Command::SelectEvaluate(_) => "select-evaluate",
            Command::Convergence(_) => "convergence",
            Command::Backtest(_) => "backtest",
            Command::Synth(_) => "synth",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Stability(f)
            | Command::SelectEvaluate(f)
            | Command::Convergence(f)
            | Command::Backtest(f)
            | Command::Synth(f) => f,
        }
    }
}

/// Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Number of consecutive seeds starting at the master seed.
    #[arg(long, value_name = "COUNT")]
    pub seeds: Option<usize>,
    /// Comma-separated subset of MDA, LIME, SHAP.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub algos: Option<Vec<Algorithm>>,
    /// Explainer iterations.
    #[arg(long, value_name = "N")]
    pub n_repeat: Option<usize>,
    /// Comma-separated iteration counts for the convergence study.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub grid: Option<Vec<usize>>,
    /// Number of top features in the headline instability index.
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also render SVG charts.
    #[arg(long)]
    pub plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Validation rows explained by LIME and SHAP.
    #[arg(long, value_name = "N")]
    pub subsample: Option<usize>,
}

impl Flags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.seeds {
            cfg.seeds = v;
        }
        if let Some(v) = &self.algos {
            cfg.algos = v.clone();
        }
        if let Some(v) = self.n_repeat {
            cfg.n_repeat = Some(v);
        }
        if let Some(v) = &self.grid {
            cfg.grid = v.clone();
        }
        if let Some(v) = self.k {
            cfg.k = Some(v);
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if self.plot {
            cfg.plot = true;
        }
        if let Some(v) = self.subsample {
            cfg.subsample = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn execute(command: &str, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        "stability" => commands::cmd_stability(cfg),
        "select-evaluate" => commands::cmd_select_evaluate(cfg),
        "convergence" => commands::cmd_convergence(cfg),
        "backtest" => commands::cmd_backtest(cfg),
        "synth" => commands::cmd_synth(cfg),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

/// Resolve the config, run the command on a pool of `--workers` threads and
/// write the bundle. Returns the headline lines.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let flags = cli.command.flags();
    let mut cfg = flags.resolve()?;
    let name = cli.command.name();
    // record the default source so the manifest alone reruns the command
    cfg.dataset.get_or_insert_with(|| match name {
        "backtest" => DatasetSpec::synth_trades(),
        _ => DatasetSpec::synth_classification(),
    });
    let workers = match flags.workers {
        Some(0) => return Err(Error::Config("workers must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let outcome = pool.install(|| execute(name, &cfg))?;
    outcome.bundle.write(&cfg.out, name, &cfg, workers)?;
    Ok(outcome.summary)
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_config_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut f, b"seed = 3\nseeds = 2\nalgos = [\"LIME\"]\n").unwrap();
        let cli = Cli::try_parse_from([
            "instab",
            "stability",
            "--config",
            f.path().to_str().unwrap(),
            "--seed",
            "9",
            "--algos",
            "mda,shap",
            "--grid",
            "1,5,10",
        ])
        .unwrap();
        let cfg = cli.command.flags().resolve().unwrap();
        assert_eq!((cfg.seed, cfg.seeds), (9, 2));
        assert_eq!(cfg.algos, [Algorithm::Mda, Algorithm::Shap]);
        assert_eq!(cfg.grid, [1, 5, 10]);
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [ErrorKind::Config, ErrorKind::Data, ErrorKind::Numeric].map(exit_code);
        assert_eq!(codes, [2, 3, 4]);
    }

    #[test]
    fn bad_algorithm_is_a_parse_error() {
        assert!(Cli::try_parse_from(["instab", "stability", "--algos", "tree"]).is_err());
    }
}

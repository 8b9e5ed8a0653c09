//! Declarative run configuration: a TOML file, with command-line flags
//! applied on top.

use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::{self, ClassificationGeometry, FeatureProvenance, LabeledDataset, Task};
use crate::error::{Error, Result};
use crate::explain::{Algorithm, ExplainerConfig, LimeConfig, ShapConfig};
use crate::forest::{ForestConfig, MaxFeatures};
use crate::metalabel::{self, TradeSeries};
use crate::stability::DEFAULT_GRID;

/// Where the rows come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    SynthClassification {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_informative")]
        informative: usize,
        #[serde(default = "default_redundant")]
        redundant: usize,
        #[serde(default = "default_noise")]
        noise: usize,
        #[serde(default = "default_class_sep")]
        class_sep: f64,
    },
    SynthRegression {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_informative")]
        informative: usize,
        #[serde(default = "default_redundant")]
        redundant: usize,
        #[serde(default = "default_noise")]
        noise: usize,
        #[serde(default = "default_noise_sd")]
        noise_sd: f64,
    },
    Csv {
        path: PathBuf,
        label: String,
        task: Task,
    },
    Trades {
        path: PathBuf,
    },
    SynthTrades {
        #[serde(default = "default_trades")]
        n: usize,
        #[serde(default = "default_trade_features")]
        n_features: usize,
        #[serde(default = "default_signal")]
        signal: f64,
    },
}

fn default_n() -> usize {
    1000
}
fn default_informative() -> usize {
    10
}
fn default_redundant() -> usize {
    10
}
fn default_noise() -> usize {
    20
}
fn default_class_sep() -> f64 {
    1.0
}
fn default_noise_sd() -> f64 {
    10.0
}
fn default_trades() -> usize {
    500
}
fn default_trade_features() -> usize {
    20
}
fn default_signal() -> f64 {
    2.0
}

impl DatasetSpec {
    pub fn synth_classification() -> Self {
        DatasetSpec::SynthClassification {
            n: default_n(),
            informative: default_informative(),
            redundant: default_redundant(),
            noise: default_noise(),
            class_sep: default_class_sep(),
        }
    }

    pub fn synth_regression() -> Self {
        DatasetSpec::SynthRegression {
            n: default_n(),
            informative: default_informative(),
            redundant: default_redundant(),
            noise: default_noise(),
            noise_sd: default_noise_sd(),
        }
    }

    pub fn synth_trades() -> Self {
        DatasetSpec::SynthTrades {
            n: default_trades(),
            n_features: default_trade_features(),
            signal: default_signal(),
        }
    }

    pub fn is_trades(&self) -> bool {
        matches!(
            self,
            DatasetSpec::Trades { .. } | DatasetSpec::SynthTrades { .. }
        )
    }

    /// Tabular data; synthetic sources are regenerated from `seed`.
    pub fn load_dataset(&self, seed: u64) -> Result<(LabeledDataset, Option<FeatureProvenance>)> {
        Ok(match self {
            DatasetSpec::SynthClassification {
                n,
                informative,
                redundant,
                noise,
                class_sep,
            } => {
                let geometry = ClassificationGeometry {
                    class_sep: *class_sep,
                    ..ClassificationGeometry::default()
                };
                let (ds, prov) = data::synth_classification_with(
                    *n,
                    *informative,
                    *redundant,
                    *noise,
                    &geometry,
                    seed,
                )?;
                (ds, Some(prov))
            }
            DatasetSpec::SynthRegression {
                n,
                informative,
                redundant,
                noise,
                noise_sd,
            } => {
                let (ds, prov) =
                    data::synth_regression(*n, *informative, *redundant, *noise, *noise_sd, seed)?;
                (ds, Some(prov))
            }
            DatasetSpec::Csv { path, label, task } => (data::load_csv(path, label, *task)?, None),
            DatasetSpec::Trades { .. } | DatasetSpec::SynthTrades { .. } => {
                (self.load_trades(seed)?.to_dataset()?, None)
            }
        })
    }

    pub fn load_trades(&self, seed: u64) -> Result<TradeSeries> {
        match self {
            DatasetSpec::Trades { path } => metalabel::load_trades(path),
            DatasetSpec::SynthTrades {
                n,
                n_features,
                signal,
            } => metalabel::synth_trades(*n, *n_features, *signal, seed),
            _ => Err(Error::Config("this command needs a trades dataset".into())),
        }
    }

    fn path(&self) -> Option<&Path> {
        match self {
            DatasetSpec::Csv { path, .. } | DatasetSpec::Trades { path } => Some(path),
            _ => None,
        }
    }
}

/// Forest hyperparameters; unset fields take the task's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: Option<usize>,
    pub max_features: Option<MaxFeatures>,
    pub min_samples_leaf: Option<usize>,
    pub max_depth: Option<usize>,
    pub bootstrap: Option<bool>,
}

impl ForestParams {
    pub fn resolve(&self, task: Task, seed: u64) -> ForestConfig {
        let base = ForestConfig::for_task(task, seed);
        ForestConfig {
            n_trees: self.n_trees.unwrap_or(base.n_trees),
            max_features: self.max_features.unwrap_or(base.max_features),
            min_samples_leaf: self.min_samples_leaf.unwrap_or(base.min_samples_leaf),
            max_depth: self.max_depth.or(base.max_depth),
            bootstrap: self.bootstrap.unwrap_or(base.bootstrap),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestParams {
    /// First test timestamp (ISO-8601). Unset: the trade three quarters in.
    pub boundary: Option<String>,
    /// Tail of the pre-boundary period used to score features.
    pub valid_fraction: f64,
    pub n_models: usize,
    pub annualization: f64,
    pub bins: usize,
}

impl Default for BacktestParams {
    fn default() -> Self {
        Self {
            boundary: None,
            valid_fraction: 0.25,
            n_models: 100,
            annualization: 1.0,
            bins: 20,
        }
    }
}

impl BacktestParams {
    pub fn boundary_for(&self, trades: &TradeSeries) -> Result<NaiveDateTime> {
        match &self.boundary {
            Some(s) => metalabel::parse_timestamp(s).ok_or_else(|| {
                Error::Config(format!(
                    "boundary `{s}` is not an ISO-8601 date or date-time"
                ))
            }),
            None => {
                let ts = trades.timestamps();
                ts.get(ts.len() * 3 / 4)
                    .copied()
                    .ok_or_else(|| Error::TooSmall("no trades".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Unset: synthetic classification (synthetic trades for `backtest`).
    pub dataset: Option<DatasetSpec>,
    /// Master seed; run `i` of `seeds` uses `seed + i`.
    pub seed: u64,
    pub seeds: usize,
    pub algos: Vec<Algorithm>,
    /// Unset: 100 for `stability`, each algorithm's default elsewhere.
    pub n_repeat: Option<usize>,
    /// Validation rows explained by LIME and SHAP.
    pub subsample: Option<usize>,
    pub grid: Vec<usize>,
    pub experiments: usize,
    /// Features in the headline instability index; unset means all.
    pub k: Option<usize>,
    pub plateau_threshold: f64,
    pub forest: ForestParams,
    pub lime: LimeConfig,
    pub shap: ShapConfig,
    pub backtest: BacktestParams,
    pub out: PathBuf,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            seed: 0,
            seeds: 5,
            algos: Algorithm::ALL.to_vec(),
            n_repeat: None,
            subsample: None,
            grid: DEFAULT_GRID.to_vec(),
            experiments: 10,
            k: None,
            plateau_threshold: 0.01,
            forest: ForestParams::default(),
            lime: LimeConfig::default(),
            shap: ShapConfig::default(),
            backtest: BacktestParams::default(),
            out: PathBuf::from("instab-out"),
            plot: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.seeds as u64)
            .map(|i| self.seed.wrapping_add(i))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.algos.is_empty() {
            return Err(Error::Config("no algorithms requested".into()));
        }
        if self.n_repeat == Some(0) {
            return Err(Error::Config("n_repeat must be at least 1".into()));
        }
        if self.subsample == Some(0) {
            return Err(Error::Config("subsample must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let Some(path) = self.dataset.as_ref().and_then(DatasetSpec::path) {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "dataset {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }

    pub fn explainer(&self, algorithm: Algorithm, n_repeat: usize, seed: u64) -> ExplainerConfig {
        ExplainerConfig {
            algorithm,
            n_repeat,
            lime: self.lime.clone(),
            shap: self.shap.clone(),
            subsample: self.subsample,
            seed,
            sample_seed: None,
        }
    }
}

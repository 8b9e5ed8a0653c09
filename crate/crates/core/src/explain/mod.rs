//! Repeated feature scoring with MDA, LIME and SHAP.
//!
//! Each explainer returns an [`ImportanceMatrix`] whose row `i` is one full
//! randomized pass (iteration `i`) and whose column `j` is feature `j`. All
//! randomness of iteration `i` is drawn from streams keyed by `i`, so the
//! first `g` rows of an `n`-iteration run equal a `g`-iteration run with the
//! same seed.

mod lime;
mod mda;
mod shap;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Task};
use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::rng::{self, tag};

pub use lime::{lime_coefficients, lime_importance, LimeConfig};
pub use mda::{mda_importance, permuted_score_drop};
pub use shap::{
    shap_attributions, shap_exact_values, shap_importance, shap_walk, ShapConfig, ShapWalk,
    MAX_EXACT_FEATURES,
};

/// A black-box model as seen by the explainers.
pub trait Predictor: Sync {
    fn task(&self) -> Task;

    fn n_features(&self) -> usize;

    /// Class-1 probability for classifiers, the prediction for regressors.
    fn output(&self, row: &[f64]) -> f64;

    /// Hard prediction; classifiers pick class 1 only when it is strictly
    /// more probable.
    fn predict_label(&self, row: &[f64]) -> f64 {
        match self.task() {
            Task::Classification => {
                let p1 = self.output(row);
                if p1 > 1.0 - p1 {
                    1.0
                } else {
                    0.0
                }
            }
            Task::Regression => self.output(row),
        }
    }
}

impl Predictor for ForestModel {
    fn task(&self) -> Task {
        ForestModel::task(self)
    }

    fn n_features(&self) -> usize {
        ForestModel::n_features(self)
    }

    fn output(&self, row: &[f64]) -> f64 {
        self.output_row(row)
    }

    fn predict_label(&self, row: &[f64]) -> f64 {
        self.predict_row(row)
    }
}

/// Wraps a closure as a regression-style [`Predictor`].
pub struct FnPredictor<F> {
    n_features: usize,
    task: Task,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnPredictor<F> {
    pub fn regression(n_features: usize, f: F) -> Self {
        Self {
            n_features,
            task: Task::Regression,
            f,
        }
    }

    /// `f` must return the class-1 probability.
    pub fn classification(n_features: usize, f: F) -> Self {
        Self {
            n_features,
            task: Task::Classification,
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn task(&self) -> Task {
        self.task
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn output(&self, row: &[f64]) -> f64 {
        (self.f)(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "MDA")]
    Mda,
    #[serde(rename = "LIME")]
    Lime,
    #[serde(rename = "SHAP")]
    Shap,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Mda, Algorithm::Lime, Algorithm::Shap];

    /// Iteration count each algorithm's reference implementation uses by default.
    pub fn default_n_repeat(self) -> usize {
        match self {
            Algorithm::Mda => 5,
            Algorithm::Lime | Algorithm::Shap => 1,
        }
    }

    fn tag(self) -> u64 {
        match self {
            Algorithm::Mda => tag::MDA,
            Algorithm::Lime => tag::LIME,
            Algorithm::Shap => tag::SHAP,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Mda => "MDA",
            Algorithm::Lime => "LIME",
            Algorithm::Shap => "SHAP",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MDA" => Ok(Algorithm::Mda),
            "LIME" => Ok(Algorithm::Lime),
            "SHAP" => Ok(Algorithm::Shap),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Score matrix: rows are iterations, columns are features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMatrix {
    scores: Array2<f64>,
    feature_names: Vec<String>,
    algorithm: Option<Algorithm>,
    seed: u64,
}

impl ImportanceMatrix {
    pub fn new(
        scores: Array2<f64>,
        feature_names: Vec<String>,
        algorithm: Option<Algorithm>,
        seed: u64,
    ) -> Result<Self> {
        if scores.nrows() == 0 {
            return Err(Error::InvalidData(
                "importance matrix has no iterations".into(),
            ));
        }
        if scores.ncols() != feature_names.len() {
            return Err(Error::InvalidData(format!(
                "{} score columns for {} feature names",
                scores.ncols(),
                feature_names.len()
            )));
        }
        if let Some(v) = scores.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite importance score {v}")));
        }
        Ok(Self {
            scores,
            feature_names,
            algorithm,
            seed,
        })
    }

    pub fn scores(&self) -> &Array2<f64> {
        &self.scores
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn algorithm(&self) -> Option<Algorithm> {
        self.algorithm
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_iterations(&self) -> usize {
        self.scores.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.scores.ncols()
    }

    /// The first `n` iterations.
    pub fn head(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_iterations() {
            return Err(Error::Config(format!(
                "cannot take {n} of {} iterations",
                self.n_iterations()
            )));
        }
        Ok(Self {
            scores: self.scores.slice(ndarray::s![..n, ..]).to_owned(),
            ..self.clone()
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.feature_names.join(",");
        out.push('\n');
        for row in self.scores.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerConfig {
    pub algorithm: Algorithm,
    pub n_repeat: usize,
    pub lime: LimeConfig,
    pub shap: ShapConfig,
    /// Explain only this many validation rows (LIME and SHAP).
    pub subsample: Option<usize>,
    pub seed: u64,
    /// Seed for the explained-row subsample and the SHAP background;
    /// `None` uses `seed`. Fixing it isolates the explainer's own randomness.
    #[serde(default)]
    pub sample_seed: Option<u64>,
}

impl ExplainerConfig {
    pub fn new(algorithm: Algorithm, n_repeat: usize, seed: u64) -> Self {
        Self {
            algorithm,
            n_repeat,
            lime: LimeConfig::default(),
            shap: ShapConfig::default(),
            subsample: None,
            seed,
            sample_seed: None,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_repeat == 0 {
            return Err(Error::Config("n_repeat must be at least 1".into()));
        }
        match self.algorithm {
            Algorithm::Lime => self.lime.validate(n_features),
            Algorithm::Shap => self.shap.validate(n_features),
            Algorithm::Mda => Ok(()),
        }
    }
}

/// Seeded sample of `count` distinct row indices out of `n`, in ascending order.
pub(crate) fn sample_rows(n: usize, count: usize, seed: u64, purpose: u64) -> Vec<usize> {
    if count >= n {
        return (0..n).collect();
    }
    let mut picked = index::sample(&mut rng::stream(seed, &[purpose]), n, count).into_vec();
    picked.sort_unstable();
    picked
}

/// Score features of `model` on the validation rows.
///
/// `train` supplies the LIME perturbation scales and the SHAP background.
pub fn explain<P: Predictor + ?Sized>(
    model: &P,
    train: &LabeledDataset,
    valid: &LabeledDataset,
    config: &ExplainerConfig,
) -> Result<ImportanceMatrix> {
    let m = valid.n_features();
    config.validate(m)?;
    if model.n_features() != m || train.n_features() != m {
        return Err(Error::ColumnMismatch {
            expected: model.n_features(),
            actual: m,
        });
    }
    let names = valid.feature_names().to_vec();
    let seed = rng::derive(config.seed, &[config.algorithm.tag()]);
    let sample_seed = rng::derive(
        config.sample_seed.unwrap_or(config.seed),
        &[config.algorithm.tag()],
    );
    let explained = || {
        let rows = sample_rows(
            valid.n_rows(),
            config.subsample.unwrap_or(usize::MAX),
            sample_seed,
            tag::SUBSAMPLE,
        );
        valid.select_rows(&rows)
    };
    let scores = match config.algorithm {
        Algorithm::Mda => mda_importance(
            model,
            valid.features().view(),
            valid.target(),
            config.n_repeat,
            seed,
        )?,
        Algorithm::Lime => {
            let scales = train.column_scales();
            lime_importance(
                model,
                explained().features().view(),
                &scales,
                &config.lime,
                config.n_repeat,
                seed,
            )?
        }
        Algorithm::Shap => {
            let bg_rows = sample_rows(
                train.n_rows(),
                config.shap.background_size,
                sample_seed,
                tag::BACKGROUND,
            );
            let background = train.select_rows(&bg_rows);
            shap_importance(
                model,
                explained().features().view(),
                background.features().view(),
                config.n_repeat,
                seed,
                config.shap.exact,
            )?
        }
    };
    ImportanceMatrix::new(scores, names, Some(config.algorithm), config.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_classification};
    use crate::forest::{fit, ForestConfig};

    #[test]
    fn algorithm_parsing() {
        assert_eq!("lime".parse::<Algorithm>().unwrap(), Algorithm::Lime);
        assert_eq!(Algorithm::Shap.to_string(), "SHAP");
        assert!("tree".parse::<Algorithm>().is_err());
    }

    #[test]
    fn matrix_validation_and_head() {
        assert!(ImportanceMatrix::new(
            Array2::zeros((0, 2)),
            vec!["a".into(), "b".into()],
            None,
            0
        )
        .is_err());
        assert!(ImportanceMatrix::new(Array2::zeros((1, 2)), vec!["a".into()], None, 0).is_err());
        let s = ndarray::array![[1.0, f64::NAN]];
        assert!(ImportanceMatrix::new(s, vec!["a".into(), "b".into()], None, 0).is_err());
        let m = ImportanceMatrix::new(
            ndarray::array![[1.0, 2.0], [3.0, 4.0]],
            vec!["a".into(), "b".into()],
            None,
            0,
        )
        .unwrap();
        assert_eq!(m.head(1).unwrap().scores(), &ndarray::array![[1.0, 2.0]]);
        assert!(m.head(3).is_err());
        assert_eq!(m.to_csv_string(), "a,b\n1,2\n3,4\n");
    }

    #[test]
    fn shapes_and_prefix_consistency() {
        let (ds, _) = synth_classification(200, 3, 1, 1, 4).unwrap();
        let s = split(&ds, 4).unwrap();
        let (train, valid) = (ds.select_rows(&s.train), ds.select_rows(&s.valid));
        let model = fit(
            &train,
            &ForestConfig {
                n_trees: 10,
                ..ForestConfig::for_task(ds.task(), 4)
            },
        )
        .unwrap();
        for alg in Algorithm::ALL {
            let mut cfg = ExplainerConfig::new(alg, 3, 9);
            cfg.subsample = Some(10);
            cfg.shap.background_size = 5;
            cfg.lime.perturbations = 20;
            let three = explain(&model, &train, &valid, &cfg).unwrap();
            assert_eq!(three.scores().dim(), (3, 5));
            cfg.n_repeat = 5;
            let five = explain(&model, &train, &valid, &cfg).unwrap();
            assert_eq!(five.head(3).unwrap(), three, "{alg}");
        }
    }

    #[test]
    fn sample_seed_fixes_rows_and_background() {
        let (ds, _) = synth_classification(200, 3, 1, 1, 4).unwrap();
        let s = split(&ds, 4).unwrap();
        let (train, valid) = (ds.select_rows(&s.train), ds.select_rows(&s.valid));
        let model = fit(
            &train,
            &ForestConfig {
                n_trees: 10,
                ..ForestConfig::for_task(ds.task(), 4)
            },
        )
        .unwrap();
        // exact SHAP has no randomness beyond the row and background draws
        let run = |seed: u64, sample_seed: Option<u64>| {
            let mut cfg = ExplainerConfig::new(Algorithm::Shap, 2, seed);
            cfg.subsample = Some(10);
            cfg.shap.background_size = 5;
            cfg.shap.exact = true;
            cfg.sample_seed = sample_seed;
            explain(&model, &train, &valid, &cfg)
                .unwrap()
                .scores()
                .clone()
        };
        assert_eq!(run(1, Some(7)), run(2, Some(7)));
        assert_eq!(run(7, None), run(7, Some(7)));
        assert_ne!(run(1, None), run(2, None));
    }
}

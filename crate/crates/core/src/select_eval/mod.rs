//! Mean-threshold feature selection and out-of-sample evaluation.

pub mod metrics;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, SplitIndices, Task};
use crate::error::{Error, Result};
use crate::forest::{self, ForestConfig, ForestModel};
use crate::stability::StabilityReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected names, most important first.
    pub selected: Vec<String>,
    pub selected_indices: Vec<usize>,
    /// The mean normalized importance, `1/m`.
    pub threshold: f64,
    pub importance: Vec<f64>,
    /// Set when nothing cleared the threshold and the top feature was taken.
    pub fallback: bool,
}

/// Relative slack under which an importance counts as equal to the mean.
const TIE_TOLERANCE: f64 = 1e-12;

/// Keep features whose normalized importance is strictly above the mean.
pub fn select_features(report: &StabilityReport) -> SelectionResult {
    let m = report.n_features();
    let threshold = 1.0 / m as f64;
    let order = report.order_indices();
    let mut selected_indices: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&j| report.normalized_importance[j] * m as f64 > 1.0 + TIE_TOLERANCE)
        .collect();
    let fallback = selected_indices.is_empty();
    if fallback {
        selected_indices.push(order[0]);
    }
    SelectionResult {
        selected: selected_indices
            .iter()
            .map(|&j| report.feature_names[j].clone())
            .collect(),
        selected_indices,
        threshold,
        importance: report.normalized_importance.clone(),
        fallback,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum Scores {
    Classification { f1: f64, auc: f64, accuracy: f64 },
    Regression { mae: f64, mse: f64, r2: f64 },
}

impl Scores {
    pub fn names(task: Task) -> [&'static str; 3] {
        match task {
            Task::Classification => ["f1", "auc", "accuracy"],
            Task::Regression => ["mae", "mse", "r2"],
        }
    }

    pub fn values(&self) -> [f64; 3] {
        match *self {
            Scores::Classification { f1, auc, accuracy } => [f1, auc, accuracy],
            Scores::Regression { mae, mse, r2 } => [mae, mse, r2],
        }
    }
}

impl fmt::Display for Scores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scores::Classification { f1, auc, accuracy } => {
                write!(f, "F1 {f1:.3}  AUC {auc:.3}  Acc {accuracy:.3}")
            }
            Scores::Regression { mae, mse, r2 } => {
                write!(f, "MAE {mae:.3}  MSE {mse:.3}  R2 {r2:.3}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scores: Scores,
    pub features: Vec<String>,
    pub n_rows: usize,
}

/// Scores of `model` on `rows` of `dataset` (already restricted to the
/// model's features).
pub fn score_model(model: &ForestModel, eval: &LabeledDataset) -> Result<Scores> {
    let x = eval.features().view();
    let y = eval.target();
    let pred = model.predict(x)?;
    Ok(match model.task() {
        Task::Classification => {
            let proba = model.predict_proba(x)?;
            let p1: Vec<f64> = proba.column(1).to_vec();
            Scores::Classification {
                f1: metrics::f1(y, &pred)?,
                auc: metrics::auc(y, &p1)?,
                accuracy: metrics::accuracy(y, &pred)?,
            }
        }
        Task::Regression => Scores::Regression {
            mae: metrics::mae(y, &pred)?,
            mse: metrics::mse(y, &pred)?,
            r2: metrics::r2(y, &pred)?,
        },
    })
}

/// Fit on the train split restricted to `features` and score on `eval_rows`.
pub fn evaluate_on(
    dataset: &LabeledDataset,
    train_rows: &[usize],
    eval_rows: &[usize],
    features: &[String],
    config: &ForestConfig,
) -> Result<MetricsReport> {
    if features.is_empty() {
        return Err(Error::Config("no features selected".into()));
    }
    let restricted = dataset.select_named(features)?;
    let model = forest::fit(&restricted.select_rows(train_rows), config)?;
    Ok(MetricsReport {
        scores: score_model(&model, &restricted.select_rows(eval_rows))?,
        features: features.to_vec(),
        n_rows: eval_rows.len(),
    })
}

/// Retrain on the train split with `features` only and score on the test split.
pub fn evaluate_selection(
    dataset: &LabeledDataset,
    splits: &SplitIndices,
    features: &[String],
    config: &ForestConfig,
) -> Result<MetricsReport> {
    evaluate_on(dataset, &splits.train, &splits.test, features, config)
}

/// Test metrics for every prefix `k = 1..=m` of `importance_order`.
pub fn sweep_k(
    dataset: &LabeledDataset,
    splits: &SplitIndices,
    importance_order: &[String],
    config: &ForestConfig,
) -> Result<Vec<MetricsReport>> {
    (1..=importance_order.len())
        .map(|k| evaluate_selection(dataset, splits, &importance_order[..k], config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synth_classification};
    use crate::stability::report_from_ranks;
    use crate::stability::RankMatrix;

    fn report_with(importance: Vec<f64>) -> StabilityReport {
        let m = importance.len();
        let avg: Vec<f64> = importance.iter().map(|v| 1.0 / v).collect();
        StabilityReport {
            feature_names: (0..m).map(|j| format!("f{j}")).collect(),
            n_iterations: 1,
            normalized_importance: importance,
            variances: vec![0.0; m],
            index_by_k: vec![0.0; m],
            importance_order: Vec::new(),
            top_rank_counts: vec![0; m],
            average_ranks: avg,
        }
    }

    #[test]
    fn threshold_selection() {
        let sel = select_features(&report_with(vec![0.5, 0.3, 0.2]));
        assert_eq!(sel.selected, vec!["f0"]);
        assert!(!sel.fallback);
        assert!((sel.threshold - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_importance_falls_back_to_top_feature() {
        let ranks = RankMatrix::from_rows(&[vec![1, 2, 3], vec![2, 3, 1], vec![3, 1, 2]]).unwrap();
        let rep = report_from_ranks(&ranks).unwrap();
        let sel = select_features(&rep);
        assert!(sel.fallback);
        assert_eq!(sel.selected, vec!["f0"]);
    }

    #[test]
    fn selection_matches_mean_formulation() {
        let ranks =
            RankMatrix::from_rows(&[vec![1, 2, 3, 4], vec![2, 1, 4, 3], vec![1, 3, 2, 4]]).unwrap();
        let rep = report_from_ranks(&ranks).unwrap();
        let mean = rep.normalized_importance.iter().sum::<f64>() / 4.0;
        let by_mean: Vec<usize> = rep
            .order_indices()
            .into_iter()
            .filter(|&j| rep.normalized_importance[j] > mean)
            .collect();
        assert_eq!(select_features(&rep).selected_indices, by_mean);
    }

    #[test]
    fn sweep_shapes_and_identity() {
        let (ds, _) = synth_classification(120, 2, 1, 1, 3).unwrap();
        let s = split(&ds, 3).unwrap();
        let cfg = ForestConfig {
            n_trees: 10,
            ..ForestConfig::for_task(ds.task(), 3)
        };
        let order: Vec<String> = ds.feature_names().to_vec();
        let sweep = sweep_k(&ds, &s, &order, &cfg).unwrap();
        assert_eq!(sweep.len(), 4);
        assert_eq!(sweep[0].features.len(), 1);
        let all = evaluate_selection(&ds, &s, &order, &cfg).unwrap();
        assert_eq!(sweep[3], all);
        assert!(evaluate_selection(&ds, &s, &[], &cfg).is_err());
    }
}

use std::fmt::Write;

use serde::Serialize;

use super::bundle::Bundle;
use super::config::{DatasetSpec, RunConfig};
use super::svg::{self, Series};
use crate::data::{self, FeatureProvenance, LabeledDataset, SplitIndices, Task};
use crate::error::{Error, Result};
use crate::explain::{explain, Algorithm, ExplainerConfig, ImportanceMatrix};
use crate::forest::{self, ForestConfig, ForestModel};
use crate::metalabel::{self, EnsembleConfig, EnsembleReport};
use crate::select_eval::{self, MetricsReport, Scores, SelectionResult};
use crate::stability::{self, InstabilityCurve, Plateau, StabilityReport};

/// Files to write plus headline lines for the terminal.
#[derive(Debug, Default)]
pub struct Outcome {
    pub bundle: Bundle,
    pub summary: Vec<String>,
}

/// One seeded train/validation/test run on a tabular dataset.
pub struct Prepared {
    pub seed: u64,
    pub dataset: LabeledDataset,
    pub provenance: Option<FeatureProvenance>,
    pub splits: SplitIndices,
    pub train: LabeledDataset,
    pub valid: LabeledDataset,
    pub forest: ForestConfig,
    pub model: ForestModel,
}

impl Prepared {
    /// Synthetic data, the split and the forest all follow `seed`.
    pub fn new(cfg: &RunConfig, spec: &DatasetSpec, seed: u64) -> Result<Self> {
        let (dataset, provenance) = spec.load_dataset(seed)?;
        let splits = data::split(&dataset, seed)?;
        let train = dataset.select_rows(&splits.train);
        let valid = dataset.select_rows(&splits.valid);
        let forest = cfg.forest.resolve(dataset.task(), seed);
        let model = forest::fit(&train, &forest)?;
        Ok(Self {
            seed,
            dataset,
            provenance,
            splits,
            train,
            valid,
            forest,
            model,
        })
    }

    pub fn explain(
        &self,
        cfg: &RunConfig,
        algorithm: Algorithm,
        n_repeat: usize,
    ) -> Result<ImportanceMatrix> {
        explain(
            &self.model,
            &self.train,
            &self.valid,
            &cfg.explainer(algorithm, n_repeat, self.seed),
        )
    }

    pub fn evaluate(&self, features: &[String]) -> Result<MetricsReport> {
        select_eval::evaluate_selection(&self.dataset, &self.splits, features, &self.forest)
    }
}

fn tabular_spec(cfg: &RunConfig) -> Result<DatasetSpec> {
    match &cfg.dataset {
        None => Ok(DatasetSpec::synth_classification()),
        Some(spec) if spec.is_trades() => Err(Error::Config(
            "this command needs a tabular dataset; trades are used by `backtest`".into(),
        )),
        Some(spec) => Ok(spec.clone()),
    }
}

/// Mean and population standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let (mean, sd) = metalabel::mean_sd(values);
    (mean.unwrap_or(f64::NAN), sd.unwrap_or(f64::NAN))
}

fn pm(values: &[f64]) -> String {
    let (mean, sd) = mean_sd(values);
    format!("{mean:.4} ± {sd:.4}")
}

fn check_k(k: Option<usize>, m: usize) -> Result<usize> {
    match k {
        None => Ok(m),
        Some(k) if (1..=m).contains(&k) => Ok(k),
        Some(k) => Err(Error::Config(format!("k must be in 1..={m}, got {k}"))),
    }
}

fn metric_header(task: Task, stats: bool) -> String {
    Scores::names(task)
        .iter()
        .map(|n| {
            if stats {
                format!("{n}_mean,{n}_sd")
            } else {
                n.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// `mean,sd` pairs for each metric across `reports`.
fn metric_stats(reports: &[&MetricsReport]) -> (Vec<(f64, f64)>, String) {
    let stats: Vec<(f64, f64)> = (0..3)
        .map(|i| {
            mean_sd(
                &reports
                    .iter()
                    .map(|r| r.scores.values()[i])
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let csv = stats
        .iter()
        .map(|(m, s)| format!("{m},{s}"))
        .collect::<Vec<_>>()
        .join(",");
    (stats, csv)
}

#[derive(Serialize)]
struct StabilityRecord<'a> {
    seed: u64,
    algorithm: Algorithm,
    n_repeat: usize,
    report: &'a StabilityReport,
}

pub fn cmd_stability(cfg: &RunConfig) -> Result<Outcome> {
    let spec = tabular_spec(cfg)?;
    let n_repeat = cfg.n_repeat.unwrap_or(100);
    let mut out = Outcome::default();
    let mut runs: Vec<(u64, Algorithm, StabilityReport)> = Vec::new();
    for seed in cfg.run_seeds() {
        let prep = Prepared::new(cfg, &spec, seed)?;
        check_k(cfg.k, prep.dataset.n_features())?;
        for &alg in &cfg.algos {
            let scores = prep.explain(cfg, alg, n_repeat)?;
            out.bundle.text(
                format!("scores_{alg}_seed{seed}.csv"),
                scores.to_csv_string(),
            );
            runs.push((seed, alg, stability::stability_report(&scores)?));
        }
    }
    let m = runs[0].2.n_features();
    let k = check_k(cfg.k, m)?;

    let mut features = String::from(
        "seed,algorithm,feature,average_rank,normalized_importance,variance,top_rank_count\n",
    );
    let mut by_k = String::from("seed,algorithm,k,index\n");
    for (seed, alg, rep) in &runs {
        for j in 0..m {
            let _ = writeln!(
                features,
                "{seed},{alg},{},{},{},{},{}",
                rep.feature_names[j],
                rep.average_ranks[j],
                rep.normalized_importance[j],
                rep.variances[j],
                rep.top_rank_counts[j]
            );
        }
        for (i, v) in rep.index_by_k.iter().enumerate() {
            let _ = writeln!(by_k, "{seed},{alg},{},{v}", i + 1);
        }
    }

    let mut summary = String::from("algorithm,k,index_mean,index_sd\n");
    let mut curves = Vec::new();
    for &alg in &cfg.algos {
        let reps: Vec<&StabilityReport> =
            runs.iter().filter(|r| r.1 == alg).map(|r| &r.2).collect();
        let mut points = Vec::with_capacity(m);
        for i in 0..m {
            let (mean, sd) = mean_sd(&reps.iter().map(|r| r.index_by_k[i]).collect::<Vec<_>>());
            let _ = writeln!(summary, "{alg},{},{mean},{sd}", i + 1);
            points.push(((i + 1) as f64, mean));
        }
        let head: Vec<f64> = reps.iter().map(|r| r.index_by_k[k - 1]).collect();
        out.summary.push(format!(
            "{alg:<5} I(k={k}) = {} over {} seed(s), n_repeat {n_repeat}",
            pm(&head),
            reps.len()
        ));
        if cfg.plot {
            let names = reps[0].feature_names.clone();
            let counts: Vec<f64> = (0..m)
                .map(|j| reps.iter().map(|r| r.top_rank_counts[j] as f64).sum())
                .collect();
            out.bundle.text(
                format!("top_rank_{alg}.svg"),
                svg::bar_chart(
                    &format!("{alg}: iterations ranking each feature first"),
                    "count",
                    &names,
                    &counts,
                ),
            );
        }
        curves.push(Series {
            label: alg.to_string(),
            points,
        });
    }

    let records: Vec<StabilityRecord> = runs
        .iter()
        .map(|(seed, algorithm, report)| StabilityRecord {
            seed: *seed,
            algorithm: *algorithm,
            n_repeat,
            report,
        })
        .collect();
    out.bundle.text("stability_features.csv", features);
    out.bundle.text("instability_by_k.csv", by_k);
    out.bundle.text("instability_summary.csv", summary);
    out.bundle.json("stability.json", &records)?;
    if cfg.plot {
        out.bundle.text(
            "instability_by_k.svg",
            svg::line_chart(
                "Instability index by number of top features",
                "k",
                "instability index",
                &curves,
                false,
            ),
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct SelectionRecord {
    seed: u64,
    algorithm: String,
    n_repeat: Option<usize>,
    selection: Option<SelectionResult>,
    metrics: MetricsReport,
    sweep: Vec<MetricsReport>,
}

pub fn cmd_select_evaluate(cfg: &RunConfig) -> Result<Outcome> {
    let spec = tabular_spec(cfg)?;
    let mut out = Outcome::default();
    let mut records: Vec<SelectionRecord> = Vec::new();
    let mut task = Task::Classification;
    for seed in cfg.run_seeds() {
        let prep = Prepared::new(cfg, &spec, seed)?;
        task = prep.dataset.task();
        for &alg in &cfg.algos {
            let n_repeat = cfg.n_repeat.unwrap_or(alg.default_n_repeat());
            let report = stability::stability_report(&prep.explain(cfg, alg, n_repeat)?)?;
            let selection = select_eval::select_features(&report);
            records.push(SelectionRecord {
                seed,
                algorithm: alg.to_string(),
                n_repeat: Some(n_repeat),
                metrics: prep.evaluate(&selection.selected)?,
                sweep: select_eval::sweep_k(
                    &prep.dataset,
                    &prep.splits,
                    &report.importance_order,
                    &prep.forest,
                )?,
                selection: Some(selection),
            });
        }
        records.push(SelectionRecord {
            seed,
            algorithm: "All".into(),
            n_repeat: None,
            selection: None,
            metrics: prep.evaluate(prep.dataset.feature_names())?,
            sweep: Vec::new(),
        });
    }

    let mut selection_csv = String::from("seed,algorithm,n_selected,fallback,features\n");
    let mut by_seed = format!("seed,algorithm,n_features,{}\n", metric_header(task, false));
    for r in &records {
        if let Some(sel) = &r.selection {
            let _ = writeln!(
                selection_csv,
                "{},{},{},{},{}",
                r.seed,
                r.algorithm,
                sel.selected.len(),
                sel.fallback,
                sel.selected.join(";")
            );
        }
        let v = r.metrics.scores.values();
        let _ = writeln!(
            by_seed,
            "{},{},{},{},{},{}",
            r.seed,
            r.algorithm,
            r.metrics.features.len(),
            v[0],
            v[1],
            v[2]
        );
    }

    let mut table = format!("algorithm,{}\n", metric_header(task, true));
    let mut sweep_csv = format!("algorithm,k,{}\n", metric_header(task, true));
    let mut curves = Vec::new();
    let labels: Vec<String> = cfg
        .algos
        .iter()
        .map(|a| a.to_string())
        .chain(["All".to_string()])
        .collect();
    for label in &labels {
        let group: Vec<&SelectionRecord> =
            records.iter().filter(|r| &r.algorithm == label).collect();
        let (stats, csv) = metric_stats(&group.iter().map(|r| &r.metrics).collect::<Vec<_>>());
        let _ = writeln!(table, "{label},{csv}");
        let names = Scores::names(task);
        out.summary.push(format!(
            "{label:<5} {} {:.4} ± {:.4}  {} {:.4} ± {:.4}  {} {:.4} ± {:.4}",
            names[0],
            stats[0].0,
            stats[0].1,
            names[1],
            stats[1].0,
            stats[1].1,
            names[2],
            stats[2].0,
            stats[2].1
        ));
        let m = group[0].sweep.len();
        let mut points = Vec::with_capacity(m);
        for k in 0..m {
            let (stats, csv) = metric_stats(&group.iter().map(|r| &r.sweep[k]).collect::<Vec<_>>());
            let _ = writeln!(sweep_csv, "{label},{},{csv}", k + 1);
            points.push(((k + 1) as f64, stats[1].0));
        }
        if m > 0 {
            curves.push(Series {
                label: label.clone(),
                points,
            });
        }
    }

    out.bundle.text("selection.csv", selection_csv);
    out.bundle.text("metrics_by_seed.csv", by_seed);
    out.bundle.text("metrics.csv", table);
    out.bundle.text("sweep_k.csv", sweep_csv);
    out.bundle.json("select_evaluate.json", &records)?;
    if cfg.plot {
        let metric = Scores::names(task)[1];
        out.bundle.text(
            "sweep_k.svg",
            svg::line_chart(
                &format!("Test {metric} using the top k features"),
                "k",
                metric,
                &curves,
                false,
            ),
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct ConvergenceRecord {
    seed: u64,
    curve: InstabilityCurve,
    plateau: Plateau,
    metrics: Vec<(usize, MetricsReport)>,
}

/// Iteration counts compared in the metrics table: the algorithm default,
/// 100 and 1000, where they do not exceed the largest grid value.
fn table_levels(alg: Algorithm, grid: &[usize]) -> Vec<usize> {
    let max = grid.last().copied().unwrap_or(0);
    let mut levels: Vec<usize> = [alg.default_n_repeat(), 100, 1000]
        .into_iter()
        .filter(|&n| n <= max)
        .collect();
    levels.dedup();
    levels
}

pub fn cmd_convergence(cfg: &RunConfig) -> Result<Outcome> {
    let spec = tabular_spec(cfg)?;
    let mut out = Outcome::default();
    let mut records: Vec<ConvergenceRecord> = Vec::new();
    let mut task = Task::Classification;
    for seed in cfg.run_seeds() {
        let prep = Prepared::new(cfg, &spec, seed)?;
        task = prep.dataset.task();
        let k = check_k(cfg.k, prep.dataset.n_features())?;
        for &alg in &cfg.algos {
            // experiments share the explained rows and background of this seed
            let source = |s: u64, n: usize| {
                let ecfg = ExplainerConfig {
                    sample_seed: Some(seed),
                    ..cfg.explainer(alg, n, s)
                };
                explain(&prep.model, &prep.train, &prep.valid, &ecfg)
            };
            let curve = stability::convergence_study(
                &source,
                &alg.to_string(),
                &cfg.grid,
                cfg.experiments,
                k,
                seed,
            )?;
            let plateau = stability::plateau_point(&curve, cfg.plateau_threshold)?;
            let levels = table_levels(alg, &cfg.grid);
            let mut metrics = Vec::new();
            if let Some(&max) = levels.iter().max() {
                let full = prep.explain(cfg, alg, max)?;
                for &n in &levels {
                    let report = stability::stability_report(&full.head(n)?)?;
                    metrics.push((
                        n,
                        prep.evaluate(&select_eval::select_features(&report).selected)?,
                    ));
                }
            }
            records.push(ConvergenceRecord {
                seed,
                curve,
                plateau,
                metrics,
            });
        }
    }

    let mut by_seed = String::from("seed,n_repeat,index,algorithm\n");
    let mut plateau_csv = String::from("seed,algorithm,n_repeat,converged\n");
    for r in &records {
        for line in r.curve.csv_rows().lines() {
            let _ = writeln!(by_seed, "{},{line}", r.seed);
        }
        let _ = writeln!(
            plateau_csv,
            "{},{},{},{}",
            r.seed, r.curve.label, r.plateau.n_repeat, r.plateau.converged
        );
    }

    let mut mean_csv = String::from("n_repeat,index,algorithm\n");
    let mut table = format!("algorithm,n_repeat,{}\n", metric_header(task, true));
    let mut curves = Vec::new();
    for &alg in &cfg.algos {
        let label = alg.to_string();
        let group: Vec<&ConvergenceRecord> =
            records.iter().filter(|r| r.curve.label == label).collect();
        let first = &group[0].curve;
        let values: Vec<f64> = (0..first.grid.len())
            .map(|i| mean_sd(&group.iter().map(|r| r.curve.values[i]).collect::<Vec<_>>()).0)
            .collect();
        let mean_curve = InstabilityCurve::new(
            label.clone(),
            first.grid.clone(),
            values,
            first.experiments,
            first.k,
        )?;
        mean_csv.push_str(&mean_curve.csv_rows());
        let plateau = stability::plateau_point(&mean_curve, cfg.plateau_threshold)?;
        let _ = writeln!(
            plateau_csv,
            "mean,{label},{},{}",
            plateau.n_repeat, plateau.converged
        );
        out.summary.push(format!(
            "{label:<5} I at n_repeat {} = {}, plateau at {}{}",
            first.grid.last().unwrap_or(&0),
            pm(&group
                .iter()
                .map(|r| *r.curve.values.last().unwrap_or(&0.0))
                .collect::<Vec<_>>()),
            plateau.n_repeat,
            if plateau.converged {
                ""
            } else {
                " (not converged)"
            }
        ));
        for (i, (n, _)) in group[0].metrics.iter().enumerate() {
            let (_, csv) = metric_stats(&group.iter().map(|r| &r.metrics[i].1).collect::<Vec<_>>());
            let _ = writeln!(table, "{label},{n},{csv}");
        }
        curves.push(Series {
            label,
            points: mean_curve
                .grid
                .iter()
                .map(|&g| g as f64)
                .zip(mean_curve.values.iter().copied())
                .collect(),
        });
    }

    out.bundle.text("instability_curve.csv", mean_csv);
    out.bundle.text("instability_curve_by_seed.csv", by_seed);
    out.bundle.text("plateau.csv", plateau_csv);
    out.bundle.text("table2.csv", table);
    out.bundle.json("convergence.json", &records)?;
    if cfg.plot {
        out.bundle.text(
            "instability_curve.svg",
            svg::line_chart(
                "Instability index versus n_repeat",
                "n_repeat",
                "instability index",
                &curves,
                true,
            ),
        );
    }
    Ok(out)
}

#[derive(Serialize)]
struct BacktestBundle<'a> {
    boundary: String,
    train_trades: usize,
    valid_trades: usize,
    test_trades: usize,
    selections: Vec<(Algorithm, &'a SelectionResult)>,
    original: &'a metalabel::BacktestReport,
    ensembles: Vec<(&'a str, &'a EnsembleReport)>,
}

pub fn cmd_backtest(cfg: &RunConfig) -> Result<Outcome> {
    let spec = match &cfg.dataset {
        None => DatasetSpec::synth_trades(),
        Some(spec) if spec.is_trades() => spec.clone(),
        Some(_) => return Err(Error::Config("`backtest` needs a trades dataset".into())),
    };
    let seed = cfg.seed;
    let params = &cfg.backtest;
    let trades = spec.load_trades(seed)?;
    let boundary = params.boundary_for(&trades)?;
    let splits = data::time_split(trades.timestamps(), boundary, params.valid_fraction)?;
    if splits.valid.len() < 2 {
        return Err(Error::Config(
            "feature selection needs at least 2 validation trades; raise backtest.valid_fraction"
                .into(),
        ));
    }
    let dataset = trades.to_dataset()?;
    let forest_config = cfg.forest.resolve(Task::Classification, seed);
    let train = dataset.select_rows(&splits.train);
    let prep = Prepared {
        seed,
        model: forest::fit(&train, &forest_config)?,
        train,
        valid: dataset.select_rows(&splits.valid),
        forest: forest_config.clone(),
        provenance: None,
        splits: splits.clone(),
        dataset,
    };
    let mut selections = Vec::new();
    for &alg in &cfg.algos {
        let n_repeat = cfg.n_repeat.unwrap_or(alg.default_n_repeat());
        let report = stability::stability_report(&prep.explain(cfg, alg, n_repeat)?)?;
        selections.push((alg, select_eval::select_features(&report)));
    }

    // the ensemble learns from the whole pre-boundary period
    let fit_splits = SplitIndices {
        train: splits.train.iter().chain(&splits.valid).copied().collect(),
        valid: Vec::new(),
        test: splits.test.clone(),
    };
    let ensemble_config = EnsembleConfig {
        n_models: params.n_models,
        bins: params.bins,
        annualization: params.annualization,
        forest: forest_config,
    };
    let test_returns: Vec<f64> = splits.test.iter().map(|&i| trades.returns()[i]).collect();
    let original = metalabel::backtest_filtered(
        &test_returns,
        &vec![true; test_returns.len()],
        params.annualization,
    )?;
    let mut scenarios: Vec<(String, EnsembleReport)> = vec![(
        "without_selection".into(),
        metalabel::ensemble_backtest(
            &trades,
            &fit_splits,
            trades.feature_names(),
            &ensemble_config,
        )?,
    )];
    for (alg, sel) in &selections {
        scenarios.push((
            format!("with_selection_{alg}"),
            metalabel::ensemble_backtest(&trades, &fit_splits, &sel.selected, &ensemble_config)?,
        ));
    }

    let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let mut table3 = String::from("algorithm,n_selected,fallback,features\n");
    for (alg, sel) in &selections {
        let _ = writeln!(
            table3,
            "{alg},{},{},{}",
            sel.selected.len(),
            sel.fallback,
            sel.selected.join(";")
        );
    }
    let mut table4 =
        String::from("scenario,sharpe_mean,sharpe_sd,cumulative_return,n_models,missing\n");
    let _ = writeln!(
        table4,
        "original,{},,{},,",
        fmt_opt(original.sharpe),
        original.cumulative_return
    );
    let mut summary = vec![format!(
        "{:<26} Sharpe {}  cumulative return {:.4}",
        "original",
        original
            .sharpe
            .map_or("undefined".into(), |s| format!("{s:.4}")),
        original.cumulative_return
    )];
    let mut histogram = String::from("scenario,bin_lo,bin_hi,count\n");
    for (name, rep) in &scenarios {
        let _ = writeln!(
            table4,
            "{name},{},{},{},{},{}",
            fmt_opt(rep.mean_sharpe),
            fmt_opt(rep.sd_sharpe),
            rep.mean_cumulative_return,
            rep.members.len(),
            rep.missing
        );
        for b in &rep.histogram {
            let _ = writeln!(histogram, "{name},{},{},{}", b.lo, b.hi, b.count);
        }
        ensemble_summary(&mut summary, name, rep);
    }

    let mut curves_csv = String::from("timestamp,original");
    for (name, _) in &scenarios {
        let _ = write!(curves_csv, ",{name}");
    }
    curves_csv.push('\n');
    let original_curve = metalabel::equity_curve(&test_returns)?;
    for (t, &row) in splits.test.iter().enumerate() {
        let _ = write!(
            curves_csv,
            "{},{}",
            trades.timestamps()[row].format("%Y-%m-%dT%H:%M:%S"),
            original_curve[t]
        );
        for (_, rep) in &scenarios {
            let _ = write!(curves_csv, ",{}", rep.mean_equity_curve[t]);
        }
        curves_csv.push('\n');
    }

    let mut out = Outcome {
        summary,
        ..Outcome::default()
    };
    out.bundle.text("table3.csv", table3);
    out.bundle.text("table4.csv", table4);
    out.bundle.text("sharpe_histogram.csv", histogram);
    out.bundle.text("cumulative_returns.csv", curves_csv);
    out.bundle.json(
        "backtest.json",
        &BacktestBundle {
            boundary: boundary.format("%Y-%m-%dT%H:%M:%S").to_string(),
            train_trades: splits.train.len(),
            valid_trades: splits.valid.len(),
            test_trades: splits.test.len(),
            selections: selections.iter().map(|(a, s)| (*a, s)).collect(),
            original: &original,
            ensembles: scenarios.iter().map(|(n, r)| (n.as_str(), r)).collect(),
        },
    )?;
    if cfg.plot {
        for (name, rep) in &scenarios {
            let bins: Vec<(f64, f64, usize)> = rep
                .histogram
                .iter()
                .map(|b| (b.lo, b.hi, b.count))
                .collect();
            out.bundle.text(
                format!("sharpe_histogram_{name}.svg"),
                svg::histogram_chart(
                    &format!("Sharpe ratios over {} forests ({name})", rep.members.len()),
                    "Sharpe ratio",
                    &bins,
                    rep.mean_sharpe.map(|m| ("mean", m)),
                ),
            );
        }
        let xs: Vec<f64> = (1..=splits.test.len()).map(|t| t as f64).collect();
        let mut series = vec![Series {
            label: "original".into(),
            points: xs
                .iter()
                .copied()
                .zip(original_curve.iter().copied())
                .collect(),
        }];
        for (name, rep) in &scenarios {
            series.push(Series {
                label: name.clone(),
                points: xs
                    .iter()
                    .copied()
                    .zip(rep.mean_equity_curve.iter().copied())
                    .collect(),
            });
        }
        out.bundle.text(
            "cumulative_returns.svg",
            svg::line_chart(
                "Cumulative return over the test period",
                "test trade",
                "cumulative return",
                &series,
                false,
            ),
        );
    }
    Ok(out)
}

fn ensemble_summary(summary: &mut Vec<String>, name: &str, rep: &EnsembleReport) {
    let sharpe = match (rep.mean_sharpe, rep.sd_sharpe) {
        (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
        _ => "undefined".into(),
    };
    summary.push(format!(
        "{name:<26} Sharpe {sharpe}  cumulative return {:.4}  ({} forests, {} undefined)",
        rep.mean_cumulative_return,
        rep.members.len(),
        rep.missing
    ));
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg
        .dataset
        .clone()
        .unwrap_or_else(DatasetSpec::synth_classification);
    let mut out = Outcome::default();
    match spec {
        DatasetSpec::SynthTrades { .. } => {
            let trades = spec.load_trades(cfg.seed)?;
            out.summary.push(format!(
                "{} trades, {} features",
                trades.len(),
                trades.feature_names().len()
            ));
            out.bundle.text("trades.csv", trades.to_csv_string());
        }
        DatasetSpec::SynthClassification { .. } | DatasetSpec::SynthRegression { .. } => {
            let (ds, provenance) = spec.load_dataset(cfg.seed)?;
            out.summary.push(format!(
                "{} rows, {} features, {}",
                ds.n_rows(),
                ds.n_features(),
                ds.task()
            ));
            out.bundle.text("dataset.csv", ds.to_csv_string("label"));
            if let Some(p) = provenance {
                out.bundle
                    .text("provenance.csv", p.to_csv_string(ds.feature_names()));
            }
        }
        _ => {
            return Err(Error::Config(
                "`synth` needs a synthetic dataset source".into(),
            ))
        }
    }
    Ok(out)
}

//! Meta-labeling: veto a strategy's trades that a classifier predicts will
//! lose, then compare Sharpe ratio and compounded return.

use std::path::Path;

use chrono::{Months, NaiveDate, NaiveDateTime};
use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, SplitIndices, Task};
use crate::error::{Error, Result};
use crate::forest::{self, ForestConfig, ForestModel};
use crate::rng::{self, tag};

pub const TIMESTAMP_COLUMN: &str = "timestamp";
pub const RETURN_COLUMN: &str = "return";

/// Chronological trades with their realized fractional returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeSeries {
    timestamps: Vec<NaiveDateTime>,
    returns: Vec<f64>,
    features: Array2<f64>,
    feature_names: Vec<String>,
}

impl TradeSeries {
    pub fn new(
        timestamps: Vec<NaiveDateTime>,
        returns: Vec<f64>,
        features: Array2<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if returns.len() != n || features.nrows() != n {
            return Err(Error::InvalidData(
                "timestamps, returns and features differ in length".into(),
            ));
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::InvalidData(
                "feature names do not match feature columns".into(),
            ));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidData(format!(
                "timestamps decrease at trade {}",
                i + 1
            )));
        }
        if let Some(r) = returns.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite return {r}")));
        }
        Ok(Self {
            timestamps,
            returns,
            features,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// 1 when the trade made money, 0 otherwise (a flat trade is a loss).
    pub fn labels(&self) -> Vec<f64> {
        self.returns.iter().map(|&r| meta_label(r)).collect()
    }

    pub fn to_dataset(&self) -> Result<LabeledDataset> {
        LabeledDataset::new(
            self.features.clone(),
            self.feature_names.clone(),
            self.labels(),
            Task::Classification,
        )
    }

    pub fn select_rows(&self, rows: &[usize]) -> TradeSeries {
        TradeSeries {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            returns: rows.iter().map(|&i| self.returns[i]).collect(),
            features: self
                .features
                .select(Axis(0), rows)
                .as_standard_layout()
                .into_owned(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = format!("{TIMESTAMP_COLUMN},{RETURN_COLUMN}");
        for name in &self.feature_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for i in 0..self.len() {
            out.push_str(&self.timestamps[i].format("%Y-%m-%dT%H:%M:%S").to_string());
            out.push(',');
            out.push_str(&self.returns[i].to_string());
            for v in self.features.row(i) {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn meta_label(ret: f64) -> f64 {
    if ret > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// ISO-8601 date or date-time.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f"))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()?
                .and_hms_opt(0, 0, 0)
        })
}

/// Trades CSV: a `timestamp` column, a `return` column, every other column a feature.
pub fn load_trades(path: impl AsRef<Path>) -> Result<TradeSeries> {
    let path = path.as_ref();
    let csv_err = |e| Error::csv(path, e);
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let (ts_idx, ret_idx) = (find(TIMESTAMP_COLUMN)?, find(RETURN_COLUMN)?);
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != ts_idx && c != ret_idx)
        .collect();

    let mut timestamps = Vec::new();
    let mut returns = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        let parse_err = |col: usize| Error::Parse {
            path: path.to_path_buf(),
            line,
            column: headers[col].clone(),
            value: record.get(col).unwrap_or("").to_string(),
        };
        let parse_num = |col: usize| {
            record
                .get(col)
                .and_then(|c| c.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(col))
        };
        timestamps.push(
            record
                .get(ts_idx)
                .and_then(parse_timestamp)
                .ok_or_else(|| parse_err(ts_idx))?,
        );
        returns.push(parse_num(ret_idx)?);
        for &c in &feature_cols {
            values.push(parse_num(c)?);
        }
    }
    if returns.is_empty() {
        return Err(Error::TooSmall(format!("{} has no trades", path.display())));
    }
    let features = Array2::from_shape_vec((returns.len(), feature_cols.len()), values)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    TradeSeries::new(timestamps, returns, features, names)
}

/// Monthly trades whose return is `0.01 · (s · w·x_I / ‖w‖ + ε)`, where
/// `x_I` are the first `min(5, m)` features. `s = 0` makes outcomes a coin flip.
pub fn synth_trades(
    n: usize,
    n_features: usize,
    signal_strength: f64,
    seed: u64,
) -> Result<TradeSeries> {
    if n < 10 {
        return Err(Error::TooSmall(format!(
            "synthetic trade series needs at least 10 trades, got {n}"
        )));
    }
    if n_features == 0 {
        return Err(Error::Config(
            "synthetic trades need at least one feature".into(),
        ));
    }
    let n_inf = n_features.min(5);
    let mut w_rng = rng::stream(seed, &[tag::TRADES, tag::WEIGHTS]);
    let w: Vec<f64> = (0..n_inf).map(|_| w_rng.random_range(-1.0..=1.0)).collect();
    let norm = w
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let mut x_rng = rng::stream(seed, &[tag::TRADES, tag::INFORMATIVE]);
    let features = Array2::from_shape_fn((n, n_features), |_| StandardNormal.sample(&mut x_rng));
    let mut e_rng = rng::stream(seed, &[tag::TRADES, tag::EPSILON]);
    let returns: Vec<f64> = features
        .rows()
        .into_iter()
        .map(|row| {
            let signal: f64 = row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / norm;
            let eps: f64 = StandardNormal.sample(&mut e_rng);
            0.01 * (signal_strength * signal + eps)
        })
        .collect();
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    let timestamps = (0..n)
        .map(|i| {
            start
                .checked_add_months(Months::new(i as u32))
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .ok_or_else(|| Error::Config("trade calendar overflow".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let names = (0..n_features).map(|j| format!("X_{j}")).collect();
    TradeSeries::new(timestamps, returns, features, names)
}

/// `mean / population sd × annualization`.
pub fn sharpe(returns: &[f64], annualization: f64) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::TooSmall(
            "Sharpe ratio needs at least 2 returns".into(),
        ));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let sd = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroVariance(
            "Sharpe ratio of constant returns".into(),
        ));
    }
    Ok(mean / sd * annualization)
}

/// Compounded return `Π(1 + r) − 1`.
pub fn cumulative_return(returns: &[f64]) -> Result<f64> {
    Ok(*equity_curve(returns)?.last().unwrap_or(&0.0))
}

/// Running compounded return after each trade.
pub fn equity_curve(returns: &[f64]) -> Result<Vec<f64>> {
    if let Some(r) = returns.iter().find(|&&r| r.is_nan() || r <= -1.0) {
        return Err(Error::InvalidData(format!(
            "return {r} wipes out the position"
        )));
    }
    let mut wealth = 1.0;
    Ok(returns
        .iter()
        .map(|r| {
            wealth *= 1.0 + r;
            wealth - 1.0
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    /// Realized returns with vetoed trades set to 0.
    pub filtered_returns: Vec<f64>,
    /// `None` when the filtered series has zero variance.
    pub sharpe: Option<f64>,
    pub cumulative_return: f64,
    pub taken: usize,
    pub vetoed: usize,
    pub model_seed: Option<u64>,
}

/// Metrics of a return series after zeroing the trades where `keep` is false.
pub fn backtest_filtered(
    returns: &[f64],
    keep: &[bool],
    annualization: f64,
) -> Result<BacktestReport> {
    if keep.len() != returns.len() {
        return Err(Error::InvalidData(
            "veto mask length differs from trade count".into(),
        ));
    }
    let filtered: Vec<f64> = returns
        .iter()
        .zip(keep)
        .map(|(&r, &k)| if k { r } else { 0.0 })
        .collect();
    let sharpe = match sharpe(&filtered, annualization) {
        Ok(s) => Some(s),
        Err(Error::ZeroVariance(_)) => None,
        Err(e) => return Err(e),
    };
    let taken = keep.iter().filter(|&&k| k).count();
    Ok(BacktestReport {
        cumulative_return: cumulative_return(&filtered)?,
        sharpe,
        taken,
        vetoed: keep.len() - taken,
        filtered_returns: filtered,
        model_seed: None,
    })
}

/// Keep the trades the model labels profitable. Errors if the filtered
/// series has an undefined Sharpe ratio.
pub fn veto_backtest(
    model: &ForestModel,
    trades: &TradeSeries,
    annualization: f64,
) -> Result<BacktestReport> {
    let report = veto_report(model, trades, annualization)?;
    if report.sharpe.is_none() {
        return Err(Error::ZeroVariance(
            "every trade was vetoed or returns are constant".into(),
        ));
    }
    Ok(report)
}

fn veto_report(
    model: &ForestModel,
    trades: &TradeSeries,
    annualization: f64,
) -> Result<BacktestReport> {
    let cols = model
        .feature_names()
        .iter()
        .map(|name| {
            trades
                .feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::InvalidData(format!("trades lack model feature `{name}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let x = trades.features.select(Axis(1), &cols);
    let keep: Vec<bool> = model
        .predict(x.view())?
        .into_iter()
        .map(|p| p == 1.0)
        .collect();
    let mut report = backtest_filtered(&trades.returns, &keep, annualization)?;
    report.model_seed = Some(model.config().seed);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins over the range of `values`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            lo: lo + b as f64 * width,
            hi: if b + 1 == bins {
                hi
            } else {
                lo + (b + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for &v in values {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        out[b].count += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub features: Vec<String>,
    pub members: Vec<BacktestReport>,
    pub mean_sharpe: Option<f64>,
    pub sd_sharpe: Option<f64>,
    /// Members whose Sharpe ratio was undefined.
    pub missing: usize,
    pub histogram: Vec<HistogramBin>,
    /// Mean over members of the running compounded return.
    pub mean_equity_curve: Vec<f64>,
    pub mean_cumulative_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_models: usize,
    pub bins: usize,
    pub annualization: f64,
    pub forest: ForestConfig,
}

impl EnsembleConfig {
    pub fn new(n_models: usize, base_seed: u64) -> Self {
        Self {
            n_models,
            bins: 20,
            annualization: 1.0,
            forest: ForestConfig::for_task(Task::Classification, base_seed),
        }
    }
}

/// Train `n_models` forests on the train trades (member `i` seeded with
/// `derive(base, i)`), veto the test trades with each, and aggregate.
pub fn ensemble_backtest(
    trades: &TradeSeries,
    splits: &SplitIndices,
    features: &[String],
    config: &EnsembleConfig,
) -> Result<EnsembleReport> {
    if config.n_models == 0 {
        return Err(Error::Config("ensemble needs at least one model".into()));
    }
    let train = trades
        .to_dataset()?
        .select_named(features)?
        .select_rows(&splits.train);
    let test = trades.select_rows(&splits.test);
    let base = config.forest.seed;
    let members = (0..config.n_models)
        .into_par_iter()
        .map(|i| {
            let forest_config = config
                .forest
                .with_seed(rng::derive(base, &[tag::MODEL, i as u64]));
            let model = forest::fit(&train, &forest_config)?;
            veto_report(&model, &test, config.annualization)
        })
        .collect::<Result<Vec<_>>>()?;

    let sharpes: Vec<f64> = members.iter().filter_map(|m| m.sharpe).collect();
    let (mean_sharpe, sd_sharpe) = mean_sd(&sharpes);
    let curves = members
        .iter()
        .map(|m| equity_curve(&m.filtered_returns))
        .collect::<Result<Vec<_>>>()?;
    let mean_equity_curve: Vec<f64> = (0..test.len())
        .map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / curves.len() as f64)
        .collect();
    Ok(EnsembleReport {
        features: features.to_vec(),
        missing: members.len() - sharpes.len(),
        histogram: histogram(&sharpes, config.bins),
        mean_cumulative_return: mean_equity_curve.last().copied().unwrap_or(0.0),
        mean_equity_curve,
        members,
        mean_sharpe,
        sd_sharpe,
    })
}

/// Mean and population standard deviation; `None` for an empty slice.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    (Some(mean), Some(sd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::Tree;
    use std::io::Write;

    const MIXED: [f64; 10] = [
        0.02, -0.01, 0.015, -0.03, 0.01, 0.005, -0.02, 0.03, -0.005, 0.01,
    ];

    fn constant_model(value: f64, names: &[String]) -> ForestModel {
        ForestModel::from_trees(
            Task::Classification,
            names.to_vec(),
            ForestConfig::for_task(Task::Classification, 0),
            vec![Tree::leaf(value)],
        )
        .unwrap()
    }

    #[test]
    fn sharpe_and_compounding() {
        assert_eq!(sharpe(&[0.01, -0.01], 1.0).unwrap(), 0.0);
        assert!(matches!(
            sharpe(&[0.02, 0.02], 1.0),
            Err(Error::ZeroVariance(_))
        ));
        assert!(sharpe(&[0.02], 1.0).is_err());
        assert!((cumulative_return(&[0.1, 0.1]).unwrap() - 0.21).abs() < 1e-15);
        assert_eq!(cumulative_return(&[0.0; 5]).unwrap(), 0.0);
        assert!(cumulative_return(&[0.1, -1.0]).is_err());
    }

    #[test]
    fn label_boundary() {
        assert_eq!(meta_label(0.0), 0.0);
        assert_eq!(meta_label(1e-12), 1.0);
        assert_eq!(meta_label(-0.3), 0.0);
    }

    #[test]
    fn oracle_veto_improves_mixed_series() {
        let keep: Vec<bool> = MIXED.iter().map(|&r| r > 0.0).collect();
        let oracle = backtest_filtered(&MIXED, &keep, 1.0).unwrap();
        let original = backtest_filtered(&MIXED, &[true; 10], 1.0).unwrap();
        assert!(oracle.sharpe.unwrap() > original.sharpe.unwrap());
        assert!(oracle.cumulative_return >= original.cumulative_return);
        // only vetoed positions change, and they become 0
        for i in 0..10 {
            if keep[i] {
                assert_eq!(oracle.filtered_returns[i], MIXED[i]);
            } else {
                assert_eq!(oracle.filtered_returns[i], 0.0);
            }
        }
        assert_eq!(oracle.taken + oracle.vetoed, 10);
    }

    fn mixed_series() -> TradeSeries {
        let stamps = (0..10)
            .map(|i| {
                NaiveDate::from_ymd_opt(2018, 1 + i as u32, 1)
                    .unwrap()
                    .and_hms_opt(0, 0, 0)
                    .unwrap()
            })
            .collect();
        let x = Array2::from_shape_fn((10, 2), |(i, j)| (i + j) as f64);
        TradeSeries::new(stamps, MIXED.to_vec(), x, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn always_take_and_always_veto() {
        let trades = mixed_series();
        let take = veto_backtest(&constant_model(1.0, &["b".into()]), &trades, 1.0).unwrap();
        let original = backtest_filtered(&MIXED, &[true; 10], 1.0).unwrap();
        assert_eq!(take.sharpe, original.sharpe);
        assert_eq!(take.cumulative_return, original.cumulative_return);
        assert_eq!(take.vetoed, 0);
        assert!(matches!(
            veto_backtest(&constant_model(0.0, &["a".into()]), &trades, 1.0),
            Err(Error::ZeroVariance(_))
        ));
        assert!(veto_backtest(&constant_model(1.0, &["zzz".into()]), &trades, 1.0).is_err());
    }

    #[test]
    fn trades_csv_round_trip_and_errors() {
        let trades = synth_trades(12, 3, 1.0, 4).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        trades.write_csv(f.path()).unwrap();
        assert_eq!(load_trades(f.path()).unwrap(), trades);

        let mut empty = tempfile::NamedTempFile::new().unwrap();
        writeln!(empty, "timestamp,return,x").unwrap();
        assert!(load_trades(empty.path()).is_err());

        let mut unsorted = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            unsorted,
            "timestamp,return,x\n2019-02-01,0.1,1\n2019-01-01,0.2,2"
        )
        .unwrap();
        assert!(matches!(
            load_trades(unsorted.path()),
            Err(Error::InvalidData(_))
        ));

        let mut zero = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            zero,
            "timestamp,return,x\n2019-01-01,0,1\n2019-02-01T10:30:00,0.2,2"
        )
        .unwrap();
        let t = load_trades(zero.path()).unwrap();
        assert_eq!(t.labels(), vec![0.0, 1.0]);
    }

    #[test]
    fn synthetic_trades_are_deterministic() {
        assert_eq!(
            synth_trades(30, 4, 2.0, 1).unwrap(),
            synth_trades(30, 4, 2.0, 1).unwrap()
        );
        assert_ne!(
            synth_trades(30, 4, 2.0, 1).unwrap(),
            synth_trades(30, 4, 2.0, 2).unwrap()
        );
        assert!(synth_trades(9, 4, 2.0, 1).is_err());
    }

    #[test]
    fn histogram_counts() {
        let h = histogram(&[0.0, 0.1, 0.2, 1.0], 20);
        assert_eq!(h.len(), 20);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 4);
        assert_eq!(h[19].count, 1);
        let flat = histogram(&[0.3; 3], 4);
        assert_eq!(flat.iter().map(|b| b.count).sum::<usize>(), 3);
    }
}

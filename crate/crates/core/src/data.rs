//! Labeled datasets, CSV ingestion, synthetic generators and row splits.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDateTime;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Regression => "regression",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classification" | "clf" => Ok(Task::Classification),
            "regression" | "reg" => Ok(Task::Regression),
            other => Err(Error::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// Feature matrix plus target. Rows are samples, columns are features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    target: Vec<f64>,
    task: Task,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        feature_names: Vec<String>,
        target: Vec<f64>,
        task: Task,
    ) -> Result<Self> {
        if features.nrows() != target.len() {
            return Err(Error::InvalidData(format!(
                "{} feature rows but {} targets",
                features.nrows(),
                target.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.ncols()
            )));
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidData(format!(
                    "duplicate feature name `{name}`"
                )));
            }
        }
        if let Some(((row, col), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value {v} at row {row}, column `{}`",
                feature_names[col]
            )));
        }
        if let Some(v) = target.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite target {v}")));
        }
        if task == Task::Classification {
            if let Some((row, &value)) = target
                .iter()
                .enumerate()
                .find(|(_, &v)| v != 0.0 && v != 1.0)
            {
                return Err(Error::NonBinaryLabel { row, value });
            }
        }
        Ok(Self {
            features,
            feature_names,
            target,
            task,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features
            .row(i)
            .to_slice()
            .expect("feature matrix is kept in standard layout")
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self
                .features
                .select(Axis(0), rows)
                .as_standard_layout()
                .into_owned(),
            feature_names: self.feature_names.clone(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
            task: self.task,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self
                .features
                .select(Axis(1), cols)
                .as_standard_layout()
                .into_owned(),
            feature_names: cols
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            target: self.target.clone(),
            task: self.task,
        }
    }

    pub fn select_named(&self, names: &[String]) -> Result<LabeledDataset> {
        let cols = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::InvalidData(format!("unknown feature `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&cols))
    }

    /// Population standard deviation of every column; zero-spread columns
    /// report 1.0 so they can be used as perturbation scales.
    pub fn column_scales(&self) -> Vec<f64> {
        let n = self.n_rows().max(1) as f64;
        self.features
            .columns()
            .into_iter()
            .map(|col| {
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.target.iter().filter(|&&v| v == 1.0).count();
        [self.target.len() - ones, ones]
    }

    /// The features followed by the target under `label_column`.
    pub fn to_csv_string(&self, label_column: &str) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        // writing to memory cannot fail
        w.write_record(&header).expect("in-memory write");
        let mut record = Vec::with_capacity(header.len());
        for (i, row) in self.features.rows().into_iter().enumerate() {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(format_target(self.target[i], self.task));
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of utf-8 fields")
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string(label_column)).map_err(|e| Error::io(path, e))
    }
}

fn format_target(v: f64, task: Task) -> String {
    match task {
        Task::Classification => format!("{}", v as u8),
        Task::Regression => v.to_string(),
    }
}

/// Read a comma-separated file with a header row. The label column is
/// removed from the features; row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str, task: Task) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: label_column.to_string(),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut target = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        // header is line 1
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        for (col, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: headers[col].clone(),
                    value: cell.to_string(),
                })?;
            if col == label_idx {
                if task == Task::Classification && value != 0.0 && value != 1.0 {
                    return Err(Error::NonBinaryLabel { row, value });
                }
                target.push(value);
            } else {
                values.push(value);
            }
        }
    }
    if target.is_empty() {
        return Err(Error::TooSmall(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    let features = Array2::from_shape_vec((target.len(), feature_names.len()), values)
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    LabeledDataset::new(features, feature_names, target, task)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Informative,
    Redundant,
    Noise,
}

impl Provenance {
    pub fn prefix(self) -> &'static str {
        match self {
            Provenance::Informative => "I_",
            Provenance::Redundant => "R_",
            Provenance::Noise => "N_",
        }
    }
}

/// Per-column origin of a synthetic feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureProvenance(pub Vec<Provenance>);

impl FeatureProvenance {
    fn blocks(n_informative: usize, n_redundant: usize, n_noise: usize) -> Self {
        let mut tags = vec![Provenance::Informative; n_informative];
        tags.extend(std::iter::repeat_n(Provenance::Redundant, n_redundant));
        tags.extend(std::iter::repeat_n(Provenance::Noise, n_noise));
        Self(tags)
    }

    pub fn names(&self) -> Vec<String> {
        let mut counters = [0usize; 3];
        self.0
            .iter()
            .map(|&p| {
                let slot = &mut counters[p as usize];
                let name = format!("{}{}", p.prefix(), slot);
                *slot += 1;
                name
            })
            .collect()
    }

    pub fn to_csv_string(&self, names: &[String]) -> String {
        let mut out = String::from("feature,provenance\n");
        for (name, p) in names.iter().zip(&self.0) {
            out.push_str(&format!("{name},{p:?}\n"));
        }
        out
    }

    pub fn write_csv(&self, names: &[String], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string(names)).map_err(|e| Error::io(path, e))
    }
}

/// Geometry of the synthetic classification problem.
///
/// The default is two Gaussian clusters with unit covariance centred on
/// antipodal hypercube vertices scaled to length `class_sep`:
/// `±class_sep · v / √k`, `v ∈ {−1, 1}^k`. With `class_sep = 1` the Bayes
/// accuracy is Φ(1) ≈ 0.84 whatever `k` is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationGeometry {
    pub class_sep: f64,
    /// Multiply each cluster by a random matrix with Uniform[−1, 1] entries,
    /// which correlates the informative columns.
    pub random_covariance: bool,
    /// Fraction of labels reassigned at random.
    pub flip_fraction: f64,
}

impl Default for ClassificationGeometry {
    fn default() -> Self {
        Self {
            class_sep: 1.0,
            random_covariance: false,
            flip_fraction: 0.0,
        }
    }
}

fn check_counts(n: usize, n_informative: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooSmall(format!("need at least 2 samples, got {n}")));
    }
    if n_informative == 0 {
        return Err(Error::Config(
            "need at least one informative feature".into(),
        ));
    }
    Ok(())
}

/// Fills the redundant and noise blocks and assembles the dataset.
fn assemble(
    informative: Array2<f64>,
    n_redundant: usize,
    n_noise: usize,
    target: Vec<f64>,
    task: Task,
    seed: u64,
) -> Result<(LabeledDataset, FeatureProvenance)> {
    let n = informative.nrows();
    let n_inf = informative.ncols();
    let mut coef_rng = rng::stream(seed, &[tag::REDUNDANT]);
    let coefs = Array2::from_shape_fn((n_inf, n_redundant), |_| coef_rng.random_range(-1.0..=1.0));
    let redundant = informative.dot(&coefs);
    let mut noise_rng = rng::stream(seed, &[tag::NOISE]);
    let noise = Array2::from_shape_fn((n, n_noise), |_| StandardNormal.sample(&mut noise_rng));

    let features = ndarray::concatenate(
        Axis(1),
        &[informative.view(), redundant.view(), noise.view()],
    )
    .expect("blocks share the row count")
    .as_standard_layout()
    .into_owned();
    let provenance = FeatureProvenance::blocks(n_inf, n_redundant, n_noise);
    let names = provenance.names();
    Ok((
        LabeledDataset::new(features, names, target, task)?,
        provenance,
    ))
}

/// Binary classification data with informative, redundant and noise blocks.
pub fn synth_classification(
    n: usize,
    n_informative: usize,
    n_redundant: usize,
    n_noise: usize,
    seed: u64,
) -> Result<(LabeledDataset, FeatureProvenance)> {
    synth_classification_with(
        n,
        n_informative,
        n_redundant,
        n_noise,
        &ClassificationGeometry::default(),
        seed,
    )
}

pub fn synth_classification_with(
    n: usize,
    n_informative: usize,
    n_redundant: usize,
    n_noise: usize,
    geometry: &ClassificationGeometry,
    seed: u64,
) -> Result<(LabeledDataset, FeatureProvenance)> {
    check_counts(n, n_informative)?;

    // Exactly balanced labels in a seeded order.
    let mut target: Vec<f64> = (0..n).map(|i| if i < n / 2 { 0.0 } else { 1.0 }).collect();
    target.shuffle(&mut rng::stream(seed, &[tag::LABELS]));

    let mut centroid_rng = rng::stream(seed, &[tag::CENTROIDS]);
    let vertex: Vec<f64> = (0..n_informative)
        .map(|_| {
            if centroid_rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let mixing: Option<[Array2<f64>; 2]> = geometry.random_covariance.then(|| {
        [0, 1].map(|_| {
            Array2::from_shape_fn((n_informative, n_informative), |_| {
                centroid_rng.random_range(-1.0..=1.0)
            })
        })
    });

    let mut x_rng = rng::stream(seed, &[tag::INFORMATIVE]);
    let mut informative =
        Array2::from_shape_fn((n, n_informative), |_| StandardNormal.sample(&mut x_rng));
    if let Some(mix) = &mixing {
        for (i, mut row) in informative.rows_mut().into_iter().enumerate() {
            let mixed = row.dot(&mix[target[i] as usize]);
            row.assign(&mixed);
        }
    }
    let offset = geometry.class_sep / (n_informative as f64).sqrt();
    for (i, mut row) in informative.rows_mut().into_iter().enumerate() {
        let sign = if target[i] == 1.0 { 1.0 } else { -1.0 };
        for (v, c) in row.iter_mut().zip(&vertex) {
            *v += sign * offset * c;
        }
    }

    if geometry.flip_fraction > 0.0 {
        let mut flip_rng = rng::stream(seed, &[tag::FLIP]);
        for t in target.iter_mut() {
            if flip_rng.random_bool(geometry.flip_fraction.min(1.0)) {
                *t = if flip_rng.random_bool(0.5) { 1.0 } else { 0.0 };
            }
        }
    }

    assemble(
        informative,
        n_redundant,
        n_noise,
        target,
        Task::Classification,
        seed,
    )
}

/// Regression data: `y = X_informative · w + ε` with `w ~ Uniform[0, 100]`
/// and `ε ~ N(0, noise_sd²)`.
pub fn synth_regression(
    n: usize,
    n_informative: usize,
    n_redundant: usize,
    n_noise: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(LabeledDataset, FeatureProvenance)> {
    check_counts(n, n_informative)?;
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::Config(format!(
            "noise_sd must be finite and non-negative, got {noise_sd}"
        )));
    }
    let mut x_rng = rng::stream(seed, &[tag::INFORMATIVE]);
    let informative =
        Array2::from_shape_fn((n, n_informative), |_| StandardNormal.sample(&mut x_rng));
    let mut w_rng = rng::stream(seed, &[tag::WEIGHTS]);
    let weights: ndarray::Array1<f64> = (0..n_informative)
        .map(|_| w_rng.random_range(0.0..=100.0))
        .collect();
    let mut eps_rng = rng::stream(seed, &[tag::EPSILON]);
    let target: Vec<f64> = informative
        .dot(&weights)
        .iter()
        .map(|&y| {
            if noise_sd > 0.0 {
                let e: f64 = StandardNormal.sample(&mut eps_rng);
                y + noise_sd * e
            } else {
                y
            }
        })
        .collect();
    assemble(
        informative,
        n_redundant,
        n_noise,
        target,
        Task::Regression,
        seed,
    )
}

/// Train / validation / test row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }
}

/// Seeded shuffle, then a 0.6 / 0.2 / remainder partition.
pub fn split(dataset: &LabeledDataset, seed: u64) -> Result<SplitIndices> {
    let n = dataset.n_rows();
    if n < 5 {
        return Err(Error::TooSmall(format!(
            "split needs at least 5 rows, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, &[tag::SPLIT]));
    let n_train = n * 3 / 5;
    let n_valid = n / 5;
    let test = order.split_off(n_train + n_valid);
    let valid = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        valid,
        test,
    })
}

/// Chronological split: rows before `boundary` train (with the last
/// `valid_fraction` of them held out for validation), rows at or after it test.
pub fn time_split(
    timestamps: &[NaiveDateTime],
    boundary: NaiveDateTime,
    valid_fraction: f64,
) -> Result<SplitIndices> {
    if !(0.0..1.0).contains(&valid_fraction) {
        return Err(Error::Config(format!(
            "valid fraction must be in [0, 1), got {valid_fraction}"
        )));
    }
    if let Some(w) = timestamps.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidData(format!(
            "timestamps decrease at row {}",
            w + 1
        )));
    }
    let n_pre = timestamps.partition_point(|t| *t < boundary);
    if n_pre == 0 {
        return Err(Error::TooSmall(format!(
            "no rows before boundary {boundary}"
        )));
    }
    if n_pre == timestamps.len() {
        return Err(Error::TooSmall(format!(
            "no rows at or after boundary {boundary}"
        )));
    }
    let n_valid = (valid_fraction * n_pre as f64).floor() as usize;
    let n_train = n_pre - n_valid;
    if n_train == 0 {
        return Err(Error::TooSmall(
            "validation tail leaves no training rows".into(),
        ));
    }
    Ok(SplitIndices {
        train: (0..n_train).collect(),
        valid: (n_train..n_pre).collect(),
        test: (n_pre..timestamps.len()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use std::io::Write;

    fn ts(y: i32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(y, m, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn tiny(n: usize) -> LabeledDataset {
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        LabeledDataset::new(x, vec!["a".into()], vec![0.0; n], Task::Regression).unwrap()
    }

    #[test]
    fn csv_two_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x,label\n0.5,1\n-2,0").unwrap();
        let ds = load_csv(f.path(), "label", Task::Classification).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.feature_names(), ["x"]);
        assert_eq!(ds.target(), [1.0, 0.0]);
        assert_eq!(ds.row(1), [-2.0]);
    }

    #[test]
    fn csv_errors() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x,y,label\n1,2,1\n3,abc,0").unwrap();
        match load_csv(f.path(), "label", Task::Classification) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_csv(f.path(), "nope", Task::Classification),
            Err(Error::MissingColumn { .. })
        ));
        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "x,label\n1,2").unwrap();
        assert!(matches!(
            load_csv(g.path(), "label", Task::Classification),
            Err(Error::NonBinaryLabel { .. })
        ));
        assert!(load_csv(g.path(), "label", Task::Regression).is_ok());
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "label", Task::Regression),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let (ds, _) = synth_regression(20, 2, 1, 1, 1.0, 3).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        ds.write_csv(f.path(), "y").unwrap();
        let back = load_csv(f.path(), "y", Task::Regression).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn invariants_enforced() {
        let x = Array2::zeros((2, 2));
        assert!(LabeledDataset::new(
            x.clone(),
            vec!["a".into(), "a".into()],
            vec![0.0, 1.0],
            Task::Classification
        )
        .is_err());
        assert!(LabeledDataset::new(
            x.clone(),
            vec!["a".into()],
            vec![0.0, 1.0],
            Task::Classification
        )
        .is_err());
        assert!(LabeledDataset::new(
            x.clone(),
            vec!["a".into(), "b".into()],
            vec![0.0],
            Task::Classification
        )
        .is_err());
        let mut bad = x.clone();
        bad[[0, 0]] = f64::NAN;
        assert!(LabeledDataset::new(
            bad,
            vec!["a".into(), "b".into()],
            vec![0.0, 1.0],
            Task::Regression
        )
        .is_err());
    }

    #[test]
    fn synth_classification_shape_and_balance() {
        let (ds, prov) = synth_classification(1000, 10, 10, 20, 42).unwrap();
        assert_eq!(ds.features().dim(), (1000, 40));
        let [c0, c1] = ds.class_counts();
        assert!((450..=550).contains(&c0) && (450..=550).contains(&c1));
        assert_eq!(prov.0.len(), 40);
        for (name, p) in ds.feature_names().iter().zip(&prov.0) {
            assert!(name.starts_with(p.prefix()));
        }
        assert_eq!(ds.feature_names()[0], "I_0");
        assert_eq!(ds.feature_names()[10], "R_0");
        assert_eq!(ds.feature_names()[39], "N_19");

        let (small, _) = synth_classification(4, 1, 0, 0, 1).unwrap();
        assert_eq!(small.features().dim(), (4, 1));
        assert!(small.target().iter().all(|&t| t == 0.0 || t == 1.0));
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_classification(200, 3, 2, 2, 9).unwrap();
        let b = synth_classification(200, 3, 2, 2, 9).unwrap();
        assert_eq!(a, b);
        let c = synth_classification(200, 3, 2, 2, 10).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn regression_without_noise_is_proportional() {
        let (ds, _) = synth_regression(50, 1, 0, 2, 0.0, 5).unwrap();
        let ratio = ds.target()[0] / ds.row(0)[0];
        for i in 0..ds.n_rows() {
            assert!((ds.target()[i] - ratio * ds.row(i)[0]).abs() < 1e-9 * ratio.abs().max(1.0));
        }
    }

    #[test]
    fn precondition_violations() {
        assert!(synth_classification(1, 1, 0, 0, 0).is_err());
        assert!(synth_classification(10, 0, 1, 0, 0).is_err());
        assert!(synth_regression(10, 1, 0, 0, -1.0, 0).is_err());
    }

    #[test]
    fn split_sizes() {
        assert_eq!(split(&tiny(10), 0).unwrap().sizes(), (6, 2, 2));
        assert_eq!(split(&tiny(1000), 0).unwrap().sizes(), (600, 200, 200));
        assert_eq!(split(&tiny(7), 0).unwrap().sizes(), (4, 1, 2));
        assert!(matches!(split(&tiny(4), 0), Err(Error::TooSmall(_))));
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        let ds = tiny(101);
        let s = split(&ds, 3).unwrap();
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.valid)
            .chain(&s.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_eq!(s, split(&ds, 3).unwrap());
        assert_ne!(s, split(&ds, 4).unwrap());
    }

    #[test]
    fn time_split_boundaries() {
        let stamps: Vec<NaiveDateTime> = (2013..=2019)
            .flat_map(|y| (1..=12).map(move |m| ts(y, m)))
            .collect();
        let s = time_split(&stamps, ts(2018, 1), 0.25).unwrap();
        let n_pre = 5 * 12;
        assert_eq!(s.test.len(), stamps.len() - n_pre);
        assert!(s.test.iter().all(|&i| stamps[i] >= ts(2018, 1)));
        assert_eq!(s.valid.len(), 15);
        assert_eq!(s.train.len() + s.valid.len(), n_pre);
        assert!(s.train.iter().all(|&i| i < s.valid[0]));

        let s0 = time_split(&stamps, ts(2018, 1), 0.0).unwrap();
        assert!(s0.valid.is_empty());
        assert_eq!(s0.train.len(), n_pre);

        assert!(time_split(&stamps, ts(2012, 1), 0.25).is_err());
        assert!(time_split(&stamps, ts(2020, 1), 0.25).is_err());
        let mut unsorted = stamps.clone();
        unsorted.swap(0, 1);
        assert!(time_split(&unsorted, ts(2018, 1), 0.25).is_err());
    }
}

//! Random forest classifier and regressor grown from CART trees.
//!
//! Classification trees split on Gini impurity and store the class-1
//! frequency in each leaf; regression trees split on variance reduction and
//! store the leaf mean. Each tree draws its bootstrap sample and candidate
//! features from its own stream keyed by `(seed, tree index)`, so a forest is
//! identical however the trees are scheduled.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, Task};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    Third,
    All,
}

impl MaxFeatures {
    pub fn resolve(self, m: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (m as f64).sqrt().floor() as usize,
            MaxFeatures::Third => m / 3,
            MaxFeatures::All => m,
        };
        k.clamp(1, m.max(1))
    }
}

impl std::str::FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "third" => Ok(MaxFeatures::Third),
            "all" => Ok(MaxFeatures::All),
            other => Err(Error::Config(format!(
                "unknown max_features rule `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestConfig {
    /// Conventional defaults: 100 trees, `sqrt` features for classification
    /// and `third` for regression, fully grown bootstrapped trees.
    pub fn for_task(task: Task, seed: u64) -> Self {
        Self {
            n_trees: 100,
            max_features: match task {
                Task::Classification => MaxFeatures::Sqrt,
                Task::Regression => MaxFeatures::Third,
            },
            min_samples_leaf: 1,
            max_depth: None,
            bootstrap: true,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class-1 frequency for classification trees, mean target for regression.
    Leaf { value: f64 },
}

/// A binary tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeNodes", into = "TreeNodes")]
pub struct Tree {
    nodes: Vec<Node>,
    flat: Vec<FlatNode>,
}

#[derive(Serialize, Deserialize)]
struct TreeNodes {
    nodes: Vec<Node>,
}

impl TryFrom<TreeNodes> for Tree {
    type Error = Error;

    fn try_from(doc: TreeNodes) -> Result<Self> {
        Tree::from_nodes(doc.nodes)
    }
}

impl From<Tree> for TreeNodes {
    fn from(tree: Tree) -> Self {
        TreeNodes { nodes: tree.nodes }
    }
}

const LEAF: u32 = u32::MAX;

/// Evaluation layout: 16-byte nodes, the two children of a split stored side
/// by side at `left` and `left + 1`. A leaf keeps its value in `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FlatNode {
    value: f64,
    feature: u32,
    left: u32,
}

fn flatten(nodes: &[Node]) -> Vec<FlatNode> {
    let blank = FlatNode {
        value: 0.0,
        feature: LEAF,
        left: 0,
    };
    let mut flat = vec![blank];
    let mut pending = vec![(0usize, 0usize)];
    while let Some((src, dst)) = pending.pop() {
        match nodes[src] {
            Node::Leaf { value } => flat[dst].value = value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let l = flat.len();
                flat.extend([blank, blank]);
                flat[dst] = FlatNode {
                    value: threshold,
                    feature: feature as u32,
                    left: l as u32,
                };
                pending.push((right, l + 1));
                pending.push((left, l));
            }
        }
    }
    flat
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let tree = Self {
            nodes,
            flat: Vec::new(),
        };
        tree.check(LEAF as usize)?;
        Ok(Self::build(tree.nodes))
    }

    fn build(nodes: Vec<Node>) -> Self {
        let flat = flatten(&nodes);
        Self { nodes, flat }
    }

    pub fn leaf(value: f64) -> Self {
        Self::build(vec![Node::Leaf { value }])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    // NaN goes right
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn evaluate(&self, row: &[f64]) -> f64 {
        let mut node = self.flat[0];
        while node.feature != LEAF {
            let go_right = !(row[node.feature as usize] <= node.value);
            node = self.flat[node.left as usize + go_right as usize];
        }
        node.value
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }

    fn check(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature >= n_features {
                        return Err(Error::Format(format!(
                            "node {i} splits on feature {feature}"
                        )));
                    }
                    if !threshold.is_finite() {
                        return Err(Error::Format(format!(
                            "node {i} has a non-finite threshold"
                        )));
                    }
                    // children always follow their parent, which rules out cycles
                    if left <= i
                        || right <= i
                        || left >= self.nodes.len()
                        || right >= self.nodes.len()
                    {
                        return Err(Error::Format(format!("node {i} has invalid children")));
                    }
                }
                Node::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::Format(format!("leaf {i} is not finite")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    task: Task,
    n_features: usize,
    feature_names: Vec<String>,
    config: ForestConfig,
    trees: Vec<Tree>,
}

const FORMAT_NAME: &str = "instab-forest";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: ForestModel,
}

impl ForestModel {
    /// Assemble a model from hand-built trees.
    pub fn from_trees(
        task: Task,
        feature_names: Vec<String>,
        config: ForestConfig,
        trees: Vec<Tree>,
    ) -> Result<Self> {
        let model = Self {
            task,
            n_features: feature_names.len(),
            feature_names,
            config,
            trees,
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Format("forest has no trees".into()));
        }
        for tree in &self.trees {
            tree.check(self.n_features)?;
            if self.task == Task::Classification {
                for node in &tree.nodes {
                    if let Node::Leaf { value } = node {
                        if !(0.0..=1.0).contains(value) {
                            return Err(Error::Format(format!(
                                "class probability {value} outside [0, 1]"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Class-1 probability (classification) or predicted value (regression).
    #[inline]
    pub fn output_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.evaluate(row)).sum();
        sum / self.trees.len() as f64
    }

    #[inline]
    pub fn proba_row(&self, row: &[f64]) -> [f64; 2] {
        let p1 = self.output_row(row);
        [1.0 - p1, p1]
    }

    #[inline]
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.task {
            Task::Classification => {
                let [p0, p1] = self.proba_row(row);
                // ties go to class 0
                if p1 > p0 {
                    1.0
                } else {
                    0.0
                }
            }
            Task::Regression => self.output_row(row),
        }
    }

    fn check_columns(&self, rows: &ArrayView2<f64>) -> Result<()> {
        if rows.ncols() != self.n_features {
            return Err(Error::ColumnMismatch {
                expected: self.n_features,
                actual: rows.ncols(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, rows: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_columns(&rows)?;
        Ok(rows
            .rows()
            .into_iter()
            .map(|r| match r.as_slice() {
                Some(s) => self.predict_row(s),
                None => self.predict_row(&r.to_vec()),
            })
            .collect())
    }

    pub fn predict_proba(&self, rows: ArrayView2<f64>) -> Result<Array2<f64>> {
        if self.task != Task::Classification {
            return Err(Error::WrongTask {
                expected: "classification",
            });
        }
        self.check_columns(&rows)?;
        let mut out = Array2::zeros((rows.nrows(), 2));
        for (i, r) in rows.rows().into_iter().enumerate() {
            let p = match r.as_slice() {
                Some(s) => self.proba_row(s),
                None => self.proba_row(&r.to_vec()),
            };
            out[[i, 0]] = p[0];
            out[[i, 1]] = p[1];
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s)?;
        if doc.format != FORMAT_NAME {
            return Err(Error::Format(format!("unexpected format `{}`", doc.format)));
        }
        if doc.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        if doc.model.feature_names.len() != doc.model.n_features {
            return Err(Error::Format(
                "feature name count disagrees with n_features".into(),
            ));
        }
        doc.model.check()?;
        Ok(doc.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Fit a forest on every row of `dataset`.
pub fn fit(dataset: &LabeledDataset, config: &ForestConfig) -> Result<ForestModel> {
    config.validate()?;
    let n = dataset.n_rows();
    if n < 2 {
        return Err(Error::TooSmall(format!(
            "forest needs at least 2 rows, got {n}"
        )));
    }
    if dataset.n_features() == 0 {
        return Err(Error::TooSmall("forest needs at least one feature".into()));
    }
    if dataset.task() == Task::Classification {
        let [c0, c1] = dataset.class_counts();
        if c0 == 0 || c1 == 0 {
            return Err(Error::SingleClass);
        }
    }
    let grower = Grower {
        x: dataset.features().view(),
        y: dataset.target(),
        task: dataset.task(),
        max_features: config.max_features.resolve(dataset.n_features()),
        min_leaf: config.min_samples_leaf,
        max_depth: config.max_depth.unwrap_or(usize::MAX),
    };
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(config.seed, &[tag::TREE, t as u64]);
            let sample: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(sample, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        task: dataset.task(),
        n_features: dataset.n_features(),
        feature_names: dataset.feature_names().to_vec(),
        config: config.clone(),
        trees,
    })
}

struct Grower<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    task: Task,
    max_features: usize,
    min_leaf: usize,
    max_depth: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    /// Number of (sorted) samples that go left.
    n_left: usize,
    score: f64,
}

impl Grower<'_> {
    fn leaf_value(&self, samples: &[usize]) -> f64 {
        samples.iter().map(|&i| self.y[i]).sum::<f64>() / samples.len() as f64
    }

    fn is_pure(&self, samples: &[usize]) -> bool {
        let first = self.y[samples[0]];
        samples.iter().all(|&i| self.y[i] == first)
    }

    fn grow(&self, sample: Vec<usize>, rng: &mut rng::StreamRng) -> Tree {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        // (node slot, samples, depth)
        let mut stack = vec![(0usize, sample, 0usize)];
        let m = self.x.ncols();
        let mut order: Vec<usize> = (0..m).collect();
        while let Some((slot, mut samples, depth)) = stack.pop() {
            let value = self.leaf_value(&samples);
            let splittable = depth < self.max_depth
                && samples.len() >= 2 * self.min_leaf
                && !self.is_pure(&samples);
            let best = if splittable {
                order.shuffle(rng);
                self.best_split(&mut samples, &order)
            } else {
                None
            };
            match best {
                None => nodes[slot] = Node::Leaf { value },
                Some(c) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&i| self.x[[i, c.feature]] <= c.threshold);
                    debug_assert_eq!(left.len(), c.n_left);
                    let l = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: l,
                        right: l + 1,
                    };
                    stack.push((l + 1, right, depth + 1));
                    stack.push((l, left, depth + 1));
                }
            }
        }
        Tree::build(nodes)
    }

    /// Visit features in random order until `max_features` non-constant ones
    /// have been seen, then pick the best split among them. Equal scores keep
    /// the lowest feature index, then the lowest threshold.
    fn best_split(&self, samples: &mut [usize], order: &[usize]) -> Option<Candidate> {
        let mut chosen = Vec::with_capacity(self.max_features);
        for &f in order {
            let first = self.x[[samples[0], f]];
            if samples.iter().any(|&i| self.x[[i, f]] != first) {
                chosen.push(f);
                if chosen.len() == self.max_features {
                    break;
                }
            }
        }
        chosen.sort_unstable();

        let total: f64 = samples.iter().map(|&i| self.y[i]).sum();
        let n = samples.len();
        let mut best: Option<Candidate> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
        for &f in &chosen {
            pairs.clear();
            pairs.extend(samples.iter().map(|&i| (self.x[[i, f]], self.y[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for k in 1..n {
                left_sum += pairs[k - 1].1;
                let (lo, hi) = (pairs[k - 1].0, pairs[k].0);
                if lo == hi || k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let score = self.split_score(left_sum, k, total - left_sum, n - k);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        n_left: k,
                        score,
                    });
                }
            }
        }
        best
    }

    /// Higher is better. For classification this is the Gini proxy
    /// `Σ_side (c0² + c1²) / n_side`; for regression `Σ_side sum² / n_side`.
    /// Both equal a constant minus the weighted child impurity.
    #[inline]
    fn split_score(&self, left_sum: f64, n_left: usize, right_sum: f64, n_right: usize) -> f64 {
        let (nl, nr) = (n_left as f64, n_right as f64);
        match self.task {
            Task::Classification => {
                let (l0, r0) = (nl - left_sum, nr - right_sum);
                (left_sum * left_sum + l0 * l0) / nl + (right_sum * right_sum + r0 * r0) / nr
            }
            Task::Regression => left_sum * left_sum / nl + right_sum * right_sum / nr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_classification;
    use ndarray::array;

    fn dataset(x: Array2<f64>, y: Vec<f64>, task: Task) -> LabeledDataset {
        let names = (0..x.ncols()).map(|j| format!("f{j}")).collect();
        LabeledDataset::new(x, names, y, task).unwrap()
    }

    fn accuracy(pred: &[f64], y: &[f64]) -> f64 {
        pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    #[test]
    fn separable_feature_gives_perfect_training_accuracy() {
        let y: Vec<f64> = (0..60).map(|i| (i % 2) as f64).collect();
        let x = Array2::from_shape_fn((60, 3), |(i, j)| {
            if j == 0 {
                y[i]
            } else {
                ((i * 7 + j * 13) % 11) as f64
            }
        });
        let ds = dataset(x, y.clone(), Task::Classification);
        let model = fit(&ds, &ForestConfig::for_task(Task::Classification, 1)).unwrap();
        let pred = model.predict(ds.features().view()).unwrap();
        assert_eq!(accuracy(&pred, &y), 1.0);
    }

    #[test]
    fn constant_regression_target() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| (i * (j + 1)) as f64);
        let ds = dataset(x, vec![4.25; 30], Task::Regression);
        let model = fit(&ds, &ForestConfig::for_task(Task::Regression, 3)).unwrap();
        for p in model.predict(ds.features().view()).unwrap() {
            assert_eq!(p, 4.25);
        }
    }

    #[test]
    fn xor_is_learned() {
        let mut r = rng::stream(11, &[]);
        let x = Array2::from_shape_fn((200, 2), |_| r.random::<f64>());
        let y: Vec<f64> = x
            .rows()
            .into_iter()
            .map(|row| ((row[0] > 0.5) ^ (row[1] > 0.5)) as u8 as f64)
            .collect();
        let ds = dataset(x, y.clone(), Task::Classification);
        let model = fit(&ds, &ForestConfig::for_task(Task::Classification, 5)).unwrap();
        let acc = accuracy(&model.predict(ds.features().view()).unwrap(), &y);
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn degenerate_single_leaf() {
        let model = ForestModel::from_trees(
            Task::Regression,
            vec!["a".into(), "b".into()],
            ForestConfig::for_task(Task::Regression, 0),
            vec![Tree::leaf(3.2)],
        )
        .unwrap();
        let rows = array![[1.0, 2.0], [-5.0, 1e9]];
        assert_eq!(model.predict(rows.view()).unwrap(), vec![3.2, 3.2]);
        assert!(matches!(
            model.predict(array![[1.0]].view()),
            Err(Error::ColumnMismatch { .. })
        ));
        assert!(matches!(
            model.predict_proba(rows.view()),
            Err(Error::WrongTask { .. })
        ));
    }

    #[test]
    fn probability_tie_goes_to_class_zero() {
        let model = ForestModel::from_trees(
            Task::Classification,
            vec!["a".into()],
            ForestConfig::for_task(Task::Classification, 0),
            vec![Tree::leaf(0.0), Tree::leaf(1.0)],
        )
        .unwrap();
        let rows = array![[0.0]];
        assert_eq!(
            model.predict_proba(rows.view()).unwrap().row(0).to_vec(),
            vec![0.5, 0.5]
        );
        assert_eq!(model.predict(rows.view()).unwrap(), vec![0.0]);
    }

    #[test]
    fn proba_is_the_mean_of_pure_votes() {
        let trees: Vec<Tree> = (0..100)
            .map(|t| Tree::leaf(if t < 60 { 1.0 } else { 0.0 }))
            .collect();
        let model = ForestModel::from_trees(
            Task::Classification,
            vec!["a".into()],
            ForestConfig::for_task(Task::Classification, 0),
            trees,
        )
        .unwrap();
        let p = model.predict_proba(array![[0.0]].view()).unwrap();
        assert!((p[[0, 0]] - 0.4).abs() < 1e-12 && (p[[0, 1]] - 0.6).abs() < 1e-12);

        let unanimous = ForestModel::from_trees(
            Task::Classification,
            vec!["a".into()],
            ForestConfig::for_task(Task::Classification, 0),
            vec![Tree::leaf(1.0); 7],
        )
        .unwrap();
        assert_eq!(
            unanimous
                .predict_proba(array![[0.0]].view())
                .unwrap()
                .row(0)
                .to_vec(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn invariants_on_fitted_forest() {
        let (ds, _) = synth_classification(300, 4, 2, 4, 8).unwrap();
        let config = ForestConfig {
            n_trees: 20,
            ..ForestConfig::for_task(Task::Classification, 8)
        };
        let model = fit(&ds, &config).unwrap();
        let proba = model.predict_proba(ds.features().view()).unwrap();
        let pred = model.predict(ds.features().view()).unwrap();
        for (i, row) in proba.rows().into_iter().enumerate() {
            assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            assert!((row.sum() - 1.0).abs() < 1e-12);
            let argmax = if row[1] > row[0] { 1.0 } else { 0.0 };
            assert_eq!(argmax, pred[i]);
        }
        for tree in model.trees() {
            for node in tree.nodes() {
                if let Node::Split {
                    feature, threshold, ..
                } = node
                {
                    assert!(*feature < ds.n_features() && threshold.is_finite());
                }
            }
        }
        // deterministic
        assert_eq!(model, fit(&ds, &config).unwrap());
        // row-order invariance
        let rev: Vec<usize> = (0..ds.n_rows()).rev().collect();
        let mut pred_rev = model
            .predict(ds.select_rows(&rev).features().view())
            .unwrap();
        pred_rev.reverse();
        assert_eq!(pred, pred_rev);
    }

    #[test]
    fn fully_grown_trees_fit_their_bootstrap_sample() {
        let (ds, _) = synth_classification(150, 3, 0, 3, 2).unwrap();
        let config = ForestConfig {
            n_trees: 5,
            ..ForestConfig::for_task(Task::Classification, 4)
        };
        let model = fit(&ds, &config).unwrap();
        for (t, tree) in model.trees().iter().enumerate() {
            let mut r = rng::stream(config.seed, &[tag::TREE, t as u64]);
            let n = ds.n_rows();
            let sample: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            assert_eq!(sample.len(), n);
            for &i in &sample {
                assert_eq!(tree.evaluate(ds.row(i)), ds.target()[i]);
            }
        }
    }

    #[test]
    fn fit_errors() {
        let x = Array2::zeros((5, 1));
        assert!(matches!(
            fit(
                &dataset(x.clone(), vec![1.0; 5], Task::Classification),
                &ForestConfig::for_task(Task::Classification, 0)
            ),
            Err(Error::SingleClass)
        ));
        let one = Array2::zeros((1, 1));
        assert!(fit(
            &dataset(one, vec![1.0], Task::Regression),
            &ForestConfig::for_task(Task::Regression, 0)
        )
        .is_err());
        let bad = ForestConfig {
            n_trees: 0,
            ..ForestConfig::for_task(Task::Regression, 0)
        };
        assert!(fit(&dataset(x, vec![1.0; 5], Task::Regression), &bad).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let (ds, _) = synth_classification(80, 2, 1, 1, 1).unwrap();
        let config = ForestConfig {
            n_trees: 3,
            ..ForestConfig::for_task(Task::Classification, 1)
        };
        let model = fit(&ds, &config).unwrap();
        let json = model.to_json().unwrap();
        assert_eq!(ForestModel::from_json(&json).unwrap(), model);
        let tampered = json.replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(
            ForestModel::from_json(&tampered),
            Err(Error::Format(_))
        ));
        assert!(Tree::from_nodes(vec![Node::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0
        }])
        .is_err());
    }

    #[test]
    fn max_features_rules() {
        assert_eq!(MaxFeatures::Sqrt.resolve(40), 6);
        assert_eq!(MaxFeatures::Third.resolve(40), 13);
        assert_eq!(MaxFeatures::Third.resolve(2), 1);
        assert_eq!(MaxFeatures::All.resolve(7), 7);
    }
}

//! Shapley values by sampled feature orderings, walked forward and reversed.
//!
//! The value of a coalition is the mean model output over a fixed background
//! set, with the coalition's coordinates overwritten by the explained row.
//! One ordering `π` yields two marginal-contribution vectors: one adding
//! features in `π` order and one adding them in reversed order. Their mean is
//! the attribution for that iteration. Either walk telescopes, so the
//! attributions always sum to `f(x) − E_background[f]`.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Exact enumeration visits all `m!` orderings; beyond this it is refused.
pub const MAX_EXACT_FEATURES: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapConfig {
    /// Rows sampled once from the training set and held fixed.
    pub background_size: usize,
    /// Average over every ordering instead of sampling (m ≤ 6 only).
    pub exact: bool,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self {
            background_size: 20,
            exact: false,
        }
    }
}

impl ShapConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.background_size == 0 {
            return Err(Error::Config(
                "SHAP background size must be at least 1".into(),
            ));
        }
        check_exact(self.exact, m)
    }
}

fn check_exact(exact: bool, m: usize) -> Result<()> {
    if exact && m > MAX_EXACT_FEATURES {
        return Err(Error::Config(format!(
            "exact SHAP enumeration supports at most {MAX_EXACT_FEATURES} features, got {m}"
        )));
    }
    Ok(())
}

/// Attributions for one explained row and one ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapWalk {
    pub forward: Vec<f64>,
    pub reverse: Vec<f64>,
    /// Mean of the two walks.
    pub values: Vec<f64>,
    /// Mean background output (empty coalition).
    pub base: f64,
    /// Model output on the explained row (full coalition).
    pub full: f64,
}

/// Coalition evaluator with a reusable background buffer.
struct Masker<'a, P: ?Sized> {
    model: &'a P,
    background: ArrayView2<'a, f64>,
    buffer: Vec<f64>,
}

impl<'a, P: Predictor + ?Sized> Masker<'a, P> {
    fn new(model: &'a P, background: ArrayView2<'a, f64>) -> Self {
        Self {
            model,
            background,
            buffer: Vec::with_capacity(background.len()),
        }
    }

    fn reset(&mut self) {
        self.buffer.clear();
        self.buffer.extend(self.background.iter());
    }

    /// Reveal feature `j` of `x` in every background row and return the mean output.
    fn reveal(&mut self, x: &[f64], j: usize) -> f64 {
        let m = x.len();
        let mut sum = 0.0;
        for row in self.buffer.chunks_exact_mut(m) {
            row[j] = x[j];
            sum += self.model.output(row);
        }
        sum / self.background.nrows() as f64
    }

    /// Marginal contributions of adding features in `order`; the last step
    /// lands on `full` rather than re-evaluating the all-revealed coalition.
    fn walk(
        &mut self,
        x: &[f64],
        order: impl Iterator<Item = usize>,
        base: f64,
        full: f64,
    ) -> Vec<f64> {
        let m = x.len();
        self.reset();
        let mut deltas = vec![0.0; m];
        let mut prev = base;
        for (step, j) in order.enumerate() {
            let value = if step + 1 == m {
                full
            } else {
                self.reveal(x, j)
            };
            deltas[j] = value - prev;
            prev = value;
        }
        deltas
    }
}

fn mean_output<P: Predictor + ?Sized>(model: &P, rows: ArrayView2<f64>) -> f64 {
    let sum: f64 = rows
        .rows()
        .into_iter()
        .map(|r| model.output(&r.to_vec()))
        .sum();
    sum / rows.nrows() as f64
}

fn check_inputs<P: Predictor + ?Sized>(
    model: &P,
    m: usize,
    background: ArrayView2<f64>,
) -> Result<()> {
    if background.nrows() == 0 {
        return Err(Error::TooSmall("SHAP background is empty".into()));
    }
    if background.ncols() != m || model.n_features() != m {
        return Err(Error::ColumnMismatch {
            expected: model.n_features(),
            actual: m,
        });
    }
    Ok(())
}

/// Forward and reversed walks of one ordering for row `x`.
pub fn shap_walk<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: ArrayView2<f64>,
    order: &[usize],
) -> Result<ShapWalk> {
    check_inputs(model, x.len(), background)?;
    let base = mean_output(model, background);
    Ok(walk_with(
        &mut Masker::new(model, background),
        x,
        order,
        base,
    ))
}

fn walk_with<P: Predictor + ?Sized>(
    masker: &mut Masker<'_, P>,
    x: &[f64],
    order: &[usize],
    base: f64,
) -> ShapWalk {
    let full = masker.model.output(x);
    let forward = masker.walk(x, order.iter().copied(), base, full);
    let reverse = masker.walk(x, order.iter().rev().copied(), base, full);
    let values = forward
        .iter()
        .zip(&reverse)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    ShapWalk {
        forward,
        reverse,
        values,
        base,
        full,
    }
}

/// Visit every permutation of `0..m` (Heap's algorithm).
fn for_each_permutation(m: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut c = vec![0usize; m];
    visit(&perm);
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn exact_with<P: Predictor + ?Sized>(masker: &mut Masker<'_, P>, x: &[f64], base: f64) -> ShapWalk {
    let m = x.len();
    let full = masker.model.output(x);
    let mut sum = vec![0.0; m];
    let mut count = 0usize;
    for_each_permutation(m, |perm| {
        let deltas = masker.walk(x, perm.iter().copied(), base, full);
        sum.iter_mut().zip(&deltas).for_each(|(s, d)| *s += d);
        count += 1;
    });
    let values: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    ShapWalk {
        forward: values.clone(),
        reverse: values.clone(),
        values,
        base,
        full,
    }
}

/// Exact Shapley values: the average over all `m!` orderings.
pub fn shap_exact_values<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: ArrayView2<f64>,
) -> Result<ShapWalk> {
    check_inputs(model, x.len(), background)?;
    check_exact(true, x.len())?;
    let base = mean_output(model, background);
    Ok(exact_with(&mut Masker::new(model, background), x, base))
}

/// Per-iteration, per-row attributions (`result[i][r]`). Row `r` of
/// iteration `i` uses the ordering drawn from stream `(seed, i, r)`.
pub fn shap_attributions<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView2<f64>,
    background: ArrayView2<f64>,
    n_repeat: usize,
    seed: u64,
    exact: bool,
) -> Result<Vec<Vec<ShapWalk>>> {
    let (n, m) = x.dim();
    check_inputs(model, m, background)?;
    check_exact(exact, m)?;
    if n == 0 {
        return Err(Error::TooSmall(
            "SHAP needs at least one row to explain".into(),
        ));
    }
    let base = mean_output(model, background);

    if exact {
        let per_row: Vec<ShapWalk> = (0..n)
            .into_par_iter()
            .map_init(
                || Masker::new(model, background),
                |masker, r| exact_with(masker, &x.row(r).to_vec(), base),
            )
            .collect();
        return Ok(vec![per_row; n_repeat]);
    }

    let cells: Vec<ShapWalk> = (0..n_repeat * n)
        .into_par_iter()
        .map_init(
            || Masker::new(model, background),
            |masker, cell| {
                let (i, r) = (cell / n, cell % n);
                let mut order: Vec<usize> = (0..m).collect();
                order.shuffle(&mut rng::stream(seed, &[tag::SHAP, i as u64, r as u64]));
                walk_with(masker, &x.row(r).to_vec(), &order, base)
            },
        )
        .collect();
    let mut it = cells.into_iter();
    Ok((0..n_repeat)
        .map(|_| it.by_ref().take(n).collect())
        .collect())
}

/// `s[i][j]` = mean over explained rows of `|φ_j|` in iteration `i`.
pub fn shap_importance<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView2<f64>,
    background: ArrayView2<f64>,
    n_repeat: usize,
    seed: u64,
    exact: bool,
) -> Result<Array2<f64>> {
    let (n, m) = x.dim();
    let walks = shap_attributions(model, x, background, n_repeat, seed, exact)?;
    let mut scores = Array2::zeros((n_repeat, m));
    for (i, iteration) in walks.iter().enumerate() {
        for walk in iteration {
            for (j, v) in walk.values.iter().enumerate() {
                scores[[i, j]] += v.abs();
            }
        }
    }
    scores.mapv_inplace(|v| v / n as f64);
    Ok(scores)
}

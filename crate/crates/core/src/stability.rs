//! Rank matrices, reciprocal-rank importance and the instability index.
//!
//! Scores of each iteration are ranked (1 = highest score, ties to the lower
//! feature index). A feature's importance is its normalized reciprocal
//! average rank; its instability is the population variance of its ranks.
//! The instability index at `k` is the root mean variance of the `k` features
//! with the best average rank.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::ImportanceMatrix;
use crate::rng::{self, tag};

/// Per-iteration ranks, 1 = most important. Every row is a permutation of `1..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankMatrix {
    ranks: Array2<usize>,
    feature_names: Vec<String>,
}

impl RankMatrix {
    pub fn new(ranks: Array2<usize>, feature_names: Vec<String>) -> Result<Self> {
        let m = ranks.ncols();
        if ranks.nrows() == 0 || m == 0 {
            return Err(Error::InvalidData("rank matrix is empty".into()));
        }
        if feature_names.len() != m {
            return Err(Error::InvalidData(format!(
                "{} names for {m} rank columns",
                feature_names.len()
            )));
        }
        let mut seen = vec![false; m];
        for (i, row) in ranks.rows().into_iter().enumerate() {
            seen.iter_mut().for_each(|s| *s = false);
            for &r in row {
                if r == 0 || r > m || std::mem::replace(&mut seen[r - 1], true) {
                    return Err(Error::InvalidData(format!(
                        "rank row {i} is not a permutation of 1..={m}"
                    )));
                }
            }
        }
        Ok(Self {
            ranks,
            feature_names,
        })
    }

    /// Rows given as plain vectors; features are named `f0, f1, ...`.
    pub fn from_rows(rows: &[Vec<usize>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidData("rank rows differ in length".into()));
        }
        let flat: Vec<usize> = rows.iter().flatten().copied().collect();
        let ranks = Array2::from_shape_vec((rows.len(), m), flat)
            .map_err(|e| Error::InvalidData(e.to_string()))?;
        Self::new(ranks, (0..m).map(|j| format!("f{j}")).collect())
    }

    pub fn ranks(&self) -> &Array2<usize> {
        &self.ranks
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_iterations(&self) -> usize {
        self.ranks.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.ranks.ncols()
    }
}

/// Ranks of one score row: descending score, ties to the lower index.
pub fn rank_row(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; scores.len()];
    for (pos, &j) in order.iter().enumerate() {
        ranks[j] = pos + 1;
    }
    ranks
}

pub fn rank_scores(scores: &ImportanceMatrix) -> Result<RankMatrix> {
    let s = scores.scores();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "non-finite score in importance matrix".into(),
        ));
    }
    let mut ranks = Array2::zeros(s.dim());
    for (i, row) in s.rows().into_iter().enumerate() {
        for (j, r) in rank_row(&row.to_vec()).into_iter().enumerate() {
            ranks[[i, j]] = r;
        }
    }
    RankMatrix::new(ranks, scores.feature_names().to_vec())
}

pub fn average_ranks(ranks: &RankMatrix) -> Vec<f64> {
    let n = ranks.n_iterations() as f64;
    ranks
        .ranks
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|&r| r as f64).sum::<f64>() / n)
        .collect()
}

/// `(1/r_j) / Σ_l (1/r_l)`.
pub fn normalized_importance(average_ranks: &[f64]) -> Result<Vec<f64>> {
    if average_ranks.is_empty() {
        return Err(Error::InvalidData("no average ranks".into()));
    }
    if let Some(r) = average_ranks.iter().find(|&&r| !r.is_finite() || r < 1.0) {
        return Err(Error::InvalidData(format!("average rank {r} is below 1")));
    }
    let total: f64 = average_ranks.iter().map(|r| 1.0 / r).sum();
    Ok(average_ranks.iter().map(|r| (1.0 / r) / total).collect())
}

/// Population variance of each rank column.
pub fn feature_variances(ranks: &RankMatrix) -> Vec<f64> {
    let n = ranks.n_iterations() as f64;
    ranks
        .ranks
        .columns()
        .into_iter()
        .map(|c| {
            let mean = c.iter().map(|&r| r as f64).sum::<f64>() / n;
            c.iter().map(|&r| (r as f64 - mean).powi(2)).sum::<f64>() / n
        })
        .collect()
}

/// Feature indices by ascending average rank, ties to the lower index.
pub fn importance_order(average_ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..average_ranks.len()).collect();
    order.sort_by(|&a, &b| {
        average_ranks[a]
            .total_cmp(&average_ranks[b])
            .then(a.cmp(&b))
    });
    order
}

fn index_from(variances: &[f64], order: &[usize], k: usize) -> f64 {
    let sum: f64 = order[..k].iter().map(|&j| variances[j]).sum();
    (sum / k as f64).sqrt()
}

/// Root mean rank variance of the `k` features with the best average rank.
pub fn instability_index(ranks: &RankMatrix, k: usize) -> Result<f64> {
    let m = ranks.n_features();
    if k == 0 || k > m {
        return Err(Error::Config(format!("k must be in 1..={m}, got {k}")));
    }
    let order = importance_order(&average_ranks(ranks));
    Ok(index_from(&feature_variances(ranks), &order, k))
}

/// Instability index for every `k = 1..=m`.
pub fn instability_by_k(ranks: &RankMatrix) -> Vec<f64> {
    let order = importance_order(&average_ranks(ranks));
    let variances = feature_variances(ranks);
    (1..=ranks.n_features())
        .map(|k| index_from(&variances, &order, k))
        .collect()
}

/// Number of iterations in which each feature ranked first.
pub fn top_rank_histogram(ranks: &RankMatrix) -> Vec<usize> {
    ranks
        .ranks
        .columns()
        .into_iter()
        .map(|c| c.iter().filter(|&&r| r == 1).count())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub feature_names: Vec<String>,
    pub n_iterations: usize,
    pub average_ranks: Vec<f64>,
    pub normalized_importance: Vec<f64>,
    pub variances: Vec<f64>,
    /// `index_by_k[k - 1]` is the instability index at `k`.
    pub index_by_k: Vec<f64>,
    /// Feature names, most important first.
    pub importance_order: Vec<String>,
    pub top_rank_counts: Vec<usize>,
}

impl StabilityReport {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn order_indices(&self) -> Vec<usize> {
        importance_order(&self.average_ranks)
    }

    /// `feature,average_rank,normalized_importance,variance,top_rank_count`.
    pub fn features_csv(&self) -> String {
        let mut out =
            String::from("feature,average_rank,normalized_importance,variance,top_rank_count\n");
        for j in 0..self.n_features() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.feature_names[j],
                self.average_ranks[j],
                self.normalized_importance[j],
                self.variances[j],
                self.top_rank_counts[j]
            );
        }
        out
    }
}

pub fn stability_report(scores: &ImportanceMatrix) -> Result<StabilityReport> {
    let ranks = rank_scores(scores)?;
    report_from_ranks(&ranks)
}

pub fn report_from_ranks(ranks: &RankMatrix) -> Result<StabilityReport> {
    let avg = average_ranks(ranks);
    let order = importance_order(&avg);
    Ok(StabilityReport {
        feature_names: ranks.feature_names.clone(),
        n_iterations: ranks.n_iterations(),
        normalized_importance: normalized_importance(&avg)?,
        variances: feature_variances(ranks),
        index_by_k: instability_by_k(ranks),
        importance_order: order
            .iter()
            .map(|&j| ranks.feature_names[j].clone())
            .collect(),
        top_rank_counts: top_rank_histogram(ranks),
        average_ranks: avg,
    })
}

/// Produces an importance matrix for a given experiment seed and iteration
/// count. The first `g` rows of a run must equal a `g`-iteration run with the
/// same seed; the explainers in [`crate::explain`] satisfy this.
pub trait ScoreSource: Sync {
    fn scores(&self, seed: u64, n_repeat: usize) -> Result<ImportanceMatrix>;
}

impl<F> ScoreSource for F
where
    F: Fn(u64, usize) -> Result<ImportanceMatrix> + Sync,
{
    fn scores(&self, seed: u64, n_repeat: usize) -> Result<ImportanceMatrix> {
        self(seed, n_repeat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityCurve {
    pub label: String,
    pub grid: Vec<usize>,
    pub values: Vec<f64>,
    pub experiments: usize,
    pub k: usize,
}

impl InstabilityCurve {
    pub fn new(
        label: impl Into<String>,
        grid: Vec<usize>,
        values: Vec<f64>,
        experiments: usize,
        k: usize,
    ) -> Result<Self> {
        validate_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::InvalidData(
                "curve grid and values differ in length".into(),
            ));
        }
        Ok(Self {
            label: label.into(),
            grid,
            values,
            experiments,
            k,
        })
    }

    /// Rows of `n_repeat,index,algorithm` (no header).
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (g, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{g},{v},{}", self.label);
        }
        out
    }
}

pub const DEFAULT_GRID: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

fn validate_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "grid must be positive and strictly increasing: {grid:?}"
        )));
    }
    Ok(())
}

/// One experiment's final ranking: the rank of each feature's average rank.
pub fn final_ranking(scores: &ImportanceMatrix) -> Result<Vec<usize>> {
    let avg = average_ranks(&rank_scores(scores)?);
    let negated: Vec<f64> = avg.iter().map(|r| -r).collect();
    Ok(rank_row(&negated))
}

/// For each grid value `g`, stack the final rankings of `experiments`
/// independent runs of `g` iterations and take the instability index at `k`.
/// Experiment `e` uses seed `derive(seed, EXPERIMENT, e)`; the largest grid
/// value is computed once per experiment and smaller ones read its prefix.
pub fn convergence_study<S: ScoreSource + ?Sized>(
    source: &S,
    label: &str,
    grid: &[usize],
    experiments: usize,
    k: usize,
    seed: u64,
) -> Result<InstabilityCurve> {
    validate_grid(grid)?;
    if experiments < 2 {
        return Err(Error::Config(format!(
            "need at least 2 experiments, got {experiments}"
        )));
    }
    let max = *grid.last().expect("grid is non-empty");
    let runs = (0..experiments)
        .map(|e| source.scores(rng::derive(seed, &[tag::EXPERIMENT, e as u64]), max))
        .collect::<Result<Vec<_>>>()?;
    let m = runs[0].n_features();
    if k == 0 || k > m {
        return Err(Error::Config(format!("k must be in 1..={m}, got {k}")));
    }
    let names = runs[0].feature_names().to_vec();
    let mut values = Vec::with_capacity(grid.len());
    for &g in grid {
        let mut ranks = Array2::zeros((experiments, m));
        for (e, run) in runs.iter().enumerate() {
            for (j, r) in final_ranking(&run.head(g)?)?.into_iter().enumerate() {
                ranks[[e, j]] = r;
            }
        }
        values.push(instability_index(
            &RankMatrix::new(ranks, names.clone())?,
            k,
        )?);
    }
    InstabilityCurve::new(label, grid.to_vec(), values, experiments, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub n_repeat: usize,
    /// False when no segment was flat enough and the last grid point is reported.
    pub converged: bool,
}

/// First grid point whose forward slope `|ΔI| / Δn_repeat` is below `threshold`.
pub fn plateau_point(curve: &InstabilityCurve, threshold: f64) -> Result<Plateau> {
    if curve.grid.len() < 2 {
        return Err(Error::Config(
            "plateau detection needs at least 2 grid points".into(),
        ));
    }
    for w in 0..curve.grid.len() - 1 {
        let run = (curve.grid[w + 1] - curve.grid[w]) as f64;
        let slope = (curve.values[w + 1] - curve.values[w]).abs() / run;
        if slope < threshold {
            return Ok(Plateau {
                n_repeat: curve.grid[w],
                converged: true,
            });
        }
    }
    Ok(Plateau {
        n_repeat: *curve.grid.last().expect("grid has points"),
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("f{j}")).collect()
    }

    fn matrix(rows: Array2<f64>) -> ImportanceMatrix {
        let m = rows.ncols();
        ImportanceMatrix::new(rows, names(m), None, 0).unwrap()
    }

    #[test]
    fn ranking_rules() {
        assert_eq!(rank_row(&[0.5, 0.2, 0.3]), vec![1, 3, 2]);
        assert_eq!(rank_row(&[0.4, 0.4, 0.1]), vec![1, 2, 3]);
        assert_eq!(rank_row(&[0.0; 4]), vec![1, 2, 3, 4]);
    }

    #[test]
    fn averages_and_variances() {
        let r = RankMatrix::from_rows(&[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(average_ranks(&r), vec![1.5, 1.5]);
        assert_eq!(feature_variances(&r), vec![0.25, 0.25]);
        let single = RankMatrix::from_rows(&[vec![2, 3, 1]]).unwrap();
        assert_eq!(average_ranks(&single), vec![2.0, 3.0, 1.0]);
        assert_eq!(feature_variances(&single), vec![0.0; 3]);
        let r3 = RankMatrix::from_rows(&[vec![1, 2, 3], vec![3, 2, 1]]).unwrap();
        assert_eq!(average_ranks(&r3)[1], 2.0);
        assert_eq!(feature_variances(&r3), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn reciprocal_rank_importance() {
        let v = normalized_importance(&[1.0, 2.0]).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15 && (v[1] - 1.0 / 3.0).abs() < 1e-15);
        let v = normalized_importance(&[2.5; 4]).unwrap();
        assert!(v.iter().all(|x| (x - 0.25).abs() < 1e-15));
        assert!(normalized_importance(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn index_on_swap_matrix() {
        let r = RankMatrix::from_rows(&[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(instability_index(&r, 1).unwrap(), 0.5);
        assert_eq!(instability_index(&r, 2).unwrap(), 0.5);
        assert!(instability_index(&r, 0).is_err());
        assert!(instability_index(&r, 3).is_err());
        let same = RankMatrix::from_rows(&vec![vec![2, 1, 3]; 4]).unwrap();
        assert_eq!(instability_by_k(&same), vec![0.0; 3]);
    }

    #[test]
    fn histogram() {
        let r = RankMatrix::from_rows(&[vec![1, 2], vec![2, 1]]).unwrap();
        assert_eq!(top_rank_histogram(&r), vec![1, 1]);
        let r = RankMatrix::from_rows(&vec![vec![2, 3, 4, 1]; 5]).unwrap();
        assert_eq!(top_rank_histogram(&r), vec![0, 0, 0, 5]);
    }

    #[test]
    fn rank_matrix_validation() {
        assert!(RankMatrix::from_rows(&[vec![1, 1]]).is_err());
        assert!(RankMatrix::from_rows(&[vec![0, 1]]).is_err());
        assert!(RankMatrix::from_rows(&[vec![1, 3]]).is_err());
        assert!(RankMatrix::from_rows(&[]).is_err());
    }

    #[test]
    fn single_iteration_report() {
        let rep = stability_report(&matrix(array![[0.1, 0.9, 0.5]])).unwrap();
        assert_eq!(rep.variances, vec![0.0; 3]);
        assert_eq!(rep.index_by_k, vec![0.0; 3]);
        assert_eq!(rep.importance_order, vec!["f1", "f2", "f0"]);
        let sum: f64 = rep.normalized_importance.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convergence_on_constant_and_swapping_sources() {
        let constant = |_seed: u64, n: usize| {
            ImportanceMatrix::new(
                Array2::from_shape_fn((n, 3), |(_, j)| j as f64),
                names(3),
                None,
                0,
            )
        };
        let curve = convergence_study(&constant, "stub", &[1, 5, 10], 4, 3, 1).unwrap();
        assert_eq!(curve.values, vec![0.0; 3]);

        // experiment 0 always prefers f0, experiment 1 always prefers f1
        let first = rng::derive(1, &[tag::EXPERIMENT, 0]);
        let swapping = move |seed: u64, n: usize| {
            let row = if seed == first {
                [1.0, 0.0]
            } else {
                [0.0, 1.0]
            };
            ImportanceMatrix::new(
                Array2::from_shape_fn((n, 2), |(_, j)| row[j]),
                names(2),
                None,
                0,
            )
        };
        let curve = convergence_study(&swapping, "stub", &[1, 2], 2, 2, 1).unwrap();
        assert_eq!(curve.values, vec![0.5, 0.5]);

        assert!(convergence_study(&constant, "stub", &[], 2, 1, 0).is_err());
        assert!(convergence_study(&constant, "stub", &[5, 5], 2, 1, 0).is_err());
        assert!(convergence_study(&constant, "stub", &[1], 1, 1, 0).is_err());
    }

    #[test]
    fn plateau_rules() {
        let curve = |values: Vec<f64>| {
            InstabilityCurve::new("c", vec![1, 10, 100, 1000], values, 2, 1).unwrap()
        };
        let p = plateau_point(&curve(vec![0.9, 0.5, 0.45, 0.44]), 0.01).unwrap();
        assert_eq!(
            p,
            Plateau {
                n_repeat: 10,
                converged: true
            }
        );
        let p = plateau_point(&curve(vec![0.3; 4]), 0.01).unwrap();
        assert_eq!(
            p,
            Plateau {
                n_repeat: 1,
                converged: true
            }
        );
        let p = plateau_point(&curve(vec![100.0, 0.0, 100.0, 0.0]), 0.01).unwrap();
        assert_eq!(
            p,
            Plateau {
                n_repeat: 1000,
                converged: false
            }
        );
    }

    fn score_matrix() -> impl Strategy<Value = Array2<f64>> {
        (1usize..8, 1usize..7).prop_flat_map(|(n, m)| {
            proptest::collection::vec(-5i32..5, n * m).prop_map(move |v| {
                Array2::from_shape_vec((n, m), v.into_iter().map(f64::from).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn monotone_transform_keeps_ranks(s in score_matrix()) {
            let a = rank_scores(&matrix(s.clone())).unwrap();
            let b = rank_scores(&matrix(s.mapv(|v| (v / 3.0).exp() * 2.0 - 1.0))).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn report_invariants(s in score_matrix()) {
            let rep = stability_report(&matrix(s.clone())).unwrap();
            let m = s.ncols();
            let sum: f64 = rep.normalized_importance.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(rep.variances.iter().all(|&v| v >= 0.0));
            let mut order = rep.importance_order.clone();
            order.sort();
            let mut expected = names(m);
            expected.sort();
            prop_assert_eq!(order, expected);
            // index bounds: any column is at most ((m-1)/2)^2, the full mean at most (m^2-1)/12
            let half = (m as f64 - 1.0) / 2.0;
            for &v in &rep.index_by_k {
                prop_assert!(v >= 0.0 && v <= half + 1e-12);
            }
            let full_bound = (((m * m) as f64 - 1.0) / 12.0).sqrt();
            prop_assert!(rep.index_by_k[m - 1] <= full_bound + 1e-12);
            // importance ordering consistency
            for a in 0..m {
                for b in 0..m {
                    prop_assert_eq!(
                        rep.normalized_importance[a] > rep.normalized_importance[b],
                        rep.average_ranks[a] < rep.average_ranks[b]
                    );
                }
            }
        }

        #[test]
        fn column_permutation_equivariance(s in score_matrix(), rot in 0usize..7) {
            let m = s.ncols();
            // distinct scores per row so the tie rule is never exercised
            let s = Array2::from_shape_fn(s.dim(), |(i, j)| s[[i, j]] + j as f64 * 1e-3);
            let perm: Vec<usize> = (0..m).map(|j| (j + rot) % m).collect();
            let permuted = Array2::from_shape_fn(s.dim(), |(i, j)| s[[i, perm[j]]]);
            let permuted_names: Vec<String> = perm.iter().map(|&p| format!("f{p}")).collect();
            let a = stability_report(&matrix(s)).unwrap();
            let b = stability_report(&ImportanceMatrix::new(permuted, permuted_names, None, 0).unwrap()).unwrap();
            for (j, &p) in perm.iter().enumerate() {
                prop_assert!((b.normalized_importance[j] - a.normalized_importance[p]).abs() < 1e-12);
                prop_assert_eq!(b.variances[j], a.variances[p]);
            }
            let avg_distinct = {
                let mut v = a.average_ranks.clone();
                v.sort_by(f64::total_cmp);
                v.windows(2).all(|w| w[0] != w[1])
            };
            if avg_distinct {
                prop_assert_eq!(&a.importance_order, &b.importance_order);
                for (x, y) in a.index_by_k.iter().zip(&b.index_by_k) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}

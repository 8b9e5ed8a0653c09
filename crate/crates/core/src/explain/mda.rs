//! Permutation importance ("mean decrease accuracy") on held-out rows.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::Predictor;
use crate::data::Task;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::select_eval::metrics;

fn score<P: Predictor + ?Sized>(
    model: &P,
    rows: impl Iterator<Item = f64>,
    y: &[f64],
) -> Result<f64> {
    let pred: Vec<f64> = rows.collect();
    match model.task() {
        Task::Classification => metrics::accuracy(y, &pred),
        Task::Regression => metrics::r2(y, &pred),
    }
}

fn baseline<P: Predictor + ?Sized>(model: &P, x: ArrayView2<f64>, y: &[f64]) -> Result<f64> {
    let mut buf = vec![0.0; x.ncols()];
    score(
        model,
        x.rows().into_iter().map(|r| {
            buf.iter_mut().zip(r.iter()).for_each(|(b, v)| *b = *v);
            model.predict_label(&buf)
        }),
        y,
    )
}

/// Score drop when column `feature` is replaced by `x[perm[r], feature]` in
/// row `r`. `x` itself is never modified.
pub fn permuted_score_drop<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView2<f64>,
    y: &[f64],
    feature: usize,
    perm: &[usize],
) -> Result<f64> {
    let base = baseline(model, x, y)?;
    drop_with_baseline(model, x, y, feature, perm, base)
}

fn drop_with_baseline<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView2<f64>,
    y: &[f64],
    feature: usize,
    perm: &[usize],
    base: f64,
) -> Result<f64> {
    let mut buf = vec![0.0; x.ncols()];
    let permuted = score(
        model,
        x.rows().into_iter().enumerate().map(|(r, row)| {
            buf.iter_mut().zip(row.iter()).for_each(|(b, v)| *b = *v);
            buf[feature] = x[[perm[r], feature]];
            model.predict_label(&buf)
        }),
        y,
    )?;
    Ok(base - permuted)
}

/// `s[i][j]` = baseline score minus the score after shuffling column `j`
/// with stream `(seed, i, j)`. Accuracy for classifiers, R² for regressors.
pub fn mda_importance<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView2<f64>,
    y: &[f64],
    n_repeat: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let (n, m) = x.dim();
    if n < 2 {
        return Err(Error::TooSmall(format!(
            "MDA needs at least 2 validation rows, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::InvalidData(format!(
            "{n} rows but {} targets",
            y.len()
        )));
    }
    if model.n_features() != m {
        return Err(Error::ColumnMismatch {
            expected: model.n_features(),
            actual: m,
        });
    }
    let base = baseline(model, x, y)?;
    let cells: Vec<f64> = (0..n_repeat * m)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / m, cell % m);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(seed, &[tag::MDA, i as u64, j as u64]));
            drop_with_baseline(model, x, y, j, &perm, base)
        })
        .collect::<Result<_>>()?;
    Ok(Array2::from_shape_vec((n_repeat, m), cells).expect("n_repeat * m cells"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::FnPredictor;
    use ndarray::array;

    #[test]
    fn shape_and_unused_feature() {
        // uses only column 1
        let model = FnPredictor::regression(3, |r: &[f64]| 2.0 * r[1]);
        let x = array![
            [1.0, 2.0, 3.0],
            [4.0, 5.0, 6.0],
            [7.0, 1.0, 9.0],
            [0.0, 3.0, 2.0],
            [5.0, 5.5, 1.0]
        ];
        let y: Vec<f64> = x.rows().into_iter().map(|r| 2.0 * r[1]).collect();
        let s = mda_importance(&model, x.view(), &y, 4, 1).unwrap();
        assert_eq!(s.dim(), (4, 3));
        for i in 0..4 {
            assert_eq!(s[[i, 0]], 0.0);
            assert_eq!(s[[i, 2]], 0.0);
            assert!(s[[i, 1]] >= 0.0);
        }
    }

    #[test]
    fn input_untouched_and_errors() {
        let model = FnPredictor::regression(1, |r: &[f64]| r[0]);
        let x = array![[1.0], [2.0], [3.0]];
        let before = x.clone();
        mda_importance(&model, x.view(), &[1.0, 2.0, 3.0], 2, 0).unwrap();
        assert_eq!(x, before);
        assert!(mda_importance(&model, array![[1.0]].view(), &[1.0], 1, 0).is_err());
        assert!(mda_importance(
            &model,
            array![[1.0, 2.0], [1.0, 2.0]].view(),
            &[1.0, 2.0],
            1,
            0
        )
        .is_err());
    }
}

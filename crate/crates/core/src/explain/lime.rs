//! Local linear surrogates around each explained row.
//!
//! Perturbations are drawn as `z = x + sd ⊙ u` with `u ~ N(0, I)`, weighted
//! by `exp(−‖u‖² / κ²)`, and the model output is regressed on the
//! standardized offsets `u` with an unpenalized intercept and an L2 penalty
//! on the slopes. A feature's score for one row is its absolute slope.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::error::{Error, Result};
use crate::rng::{self, tag, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    /// Perturbed rows per explained row.
    pub perturbations: usize,
    /// Kernel width in standardized units; `None` means `0.75·√m`.
    pub kernel_width: Option<f64>,
    pub ridge_lambda: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            perturbations: 100,
            kernel_width: None,
            ridge_lambda: 1.0,
        }
    }
}

impl LimeConfig {
    pub fn kernel_width_for(&self, m: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (m as f64).sqrt())
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.perturbations < m + 2 {
            return Err(Error::Config(format!(
                "LIME needs at least m + 2 = {} perturbations, got {}",
                m + 2,
                self.perturbations
            )));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "ridge_lambda must be >= 0, got {}",
                self.ridge_lambda
            )));
        }
        let width = self.kernel_width_for(m);
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Config(format!(
                "kernel width must be positive, got {width}"
            )));
        }
        Ok(())
    }
}

/// Signed surrogate slopes for one row.
pub fn lime_coefficients<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    scales: &[f64],
    config: &LimeConfig,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    let m = x.len();
    let p = config.perturbations;
    let width = config.kernel_width_for(m);

    let mut offsets = DMatrix::<f64>::zeros(p, m);
    let mut outputs = DVector::<f64>::zeros(p);
    let mut weights = DVector::<f64>::zeros(p);
    let mut z = vec![0.0; m];
    for k in 0..p {
        let mut dist2 = 0.0;
        for j in 0..m {
            let u: f64 = StandardNormal.sample(rng);
            offsets[(k, j)] = u;
            z[j] = x[j] + scales[j] * u;
            dist2 += u * u;
        }
        outputs[k] = model.output(&z);
        weights[k] = (-dist2 / (width * width)).exp();
    }

    let first = outputs[0];
    if outputs.iter().all(|&v| v == first) {
        return Ok(vec![0.0; m]);
    }

    let total_w = weights.sum();
    if total_w.is_nan() || total_w <= 0.0 {
        return Err(Error::Numeric(
            "all LIME kernel weights underflowed to zero".into(),
        ));
    }
    let mean_u: DVector<f64> = offsets.tr_mul(&weights) / total_w;
    let mean_f = outputs.dot(&weights) / total_w;

    // Rows of the weighted, centred design: sqrt(w) (u - ū).
    let mut design = offsets;
    let mut response = outputs;
    for k in 0..p {
        let sw = weights[k].sqrt();
        for j in 0..m {
            design[(k, j)] = sw * (design[(k, j)] - mean_u[j]);
        }
        response[k] = sw * (response[k] - mean_f);
    }
    let mut gram = design.tr_mul(&design);
    for j in 0..m {
        gram[(j, j)] += config.ridge_lambda;
    }
    let rhs = design.tr_mul(&response);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("weighted ridge system is not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// `s[i][j]` = mean over rows of `|slope_j|` for iteration `i`; row `r` of
/// iteration `i` draws from stream `(seed, i, r)`.
pub fn lime_importance<P: Predictor + ?Sized>(
    model: &P,
    x: ArrayView2<f64>,
    scales: &[f64],
    config: &LimeConfig,
    n_repeat: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let (n, m) = x.dim();
    config.validate(m)?;
    if n == 0 {
        return Err(Error::TooSmall(
            "LIME needs at least one row to explain".into(),
        ));
    }
    if scales.len() != m || model.n_features() != m {
        return Err(Error::ColumnMismatch {
            expected: model.n_features(),
            actual: m,
        });
    }
    let per_row: Vec<Vec<f64>> = (0..n_repeat * n)
        .into_par_iter()
        .map(|cell| {
            let (i, r) = (cell / n, cell % n);
            let row = x.row(r).to_vec();
            let mut rng = rng::stream(seed, &[tag::LIME, i as u64, r as u64]);
            lime_coefficients(model, &row, scales, config, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut scores = Array2::zeros((n_repeat, m));
    for (cell, coefs) in per_row.iter().enumerate() {
        let i = cell / n;
        for (j, c) in coefs.iter().enumerate() {
            scores[[i, j]] += c.abs();
        }
    }
    scores.mapv_inplace(|v| v / n as f64);
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explain::FnPredictor;
    use ndarray::array;

    #[test]
    fn constant_model_scores_zero() {
        let model = FnPredictor::classification(3, |_: &[f64]| 0.7);
        let x = array![[0.0, 1.0, 2.0], [3.0, -1.0, 0.5]];
        let s = lime_importance(&model, x.view(), &[1.0; 3], &LimeConfig::default(), 2, 3).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_oracle_recovers_slope() {
        // With no penalty the surrogate is exact: slope on u_j is 5·sd_j.
        let model = FnPredictor::regression(3, |r: &[f64]| 5.0 * r[1]);
        let scales = [1.0, 2.0, 0.5];
        let cfg = LimeConfig {
            ridge_lambda: 0.0,
            ..LimeConfig::default()
        };
        let coefs = lime_coefficients(
            &model,
            &[0.3, -0.2, 1.0],
            &scales,
            &cfg,
            &mut rng::stream(1, &[]),
        )
        .unwrap();
        assert!((coefs[1] - 10.0).abs() < 1e-9, "{coefs:?}");
        assert!(coefs[0].abs() < 1e-9 && coefs[2].abs() < 1e-9);
    }

    #[test]
    fn too_few_perturbations_rejected() {
        let cfg = LimeConfig {
            perturbations: 4,
            ..LimeConfig::default()
        };
        assert!(cfg.validate(3).is_err());
        assert!(LimeConfig::default().validate(98).is_ok());
        assert!(LimeConfig::default().validate(99).is_err());
    }
}

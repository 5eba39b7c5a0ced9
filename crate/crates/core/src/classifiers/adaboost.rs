//! Discrete AdaBoost over depth-1 weighted-Gini stumps.

use ndarray::{ArrayView1, ArrayView2};

use super::tree::{AllFeatures, DecisionTreeModel, TreeParams};
use crate::error::{check_dim, Error, Result};

/// Stump weight recorded when a round's weighted error is (numerically) zero.
pub const PERFECT_STUMP_ALPHA: f64 = 10.0;
const PERFECT_ERROR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaBoostParams {
    pub rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self { rounds: 50 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaBoostModel {
    stumps: Vec<DecisionTreeModel>,
    alphas: Vec<f64>,
    /// Weighted training error of each accepted stump.
    errors: Vec<f64>,
    rounds: usize,
}

/// Sample weights at the start of every round, for inspection.
#[derive(Clone, Debug, Default)]
pub struct BoostTrace {
    pub weights: Vec<Vec<f64>>,
}

impl AdaBoostModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: AdaBoostParams) -> Result<Self> {
        Self::fit_traced(x, y, params, &mut BoostTrace::default())
    }

    pub fn fit_traced(x: ArrayView2<'_, f64>, y: &[u8], params: AdaBoostParams, trace: &mut BoostTrace) -> Result<Self> {
        let n = y.len();
        check_dim(x.nrows(), n)?;
        if n < 2 || !y.contains(&0) || !y.contains(&1) {
            return Err(Error::arg("AdaBoost needs at least two samples from both classes"));
        }
        let signed: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let mut weights = vec![1.0 / n as f64; n];
        let mut model = Self {
            stumps: Vec::new(),
            alphas: Vec::new(),
            errors: Vec::new(),
            rounds: params.rounds,
        };

        for _ in 0..params.rounds {
            trace.weights.push(weights.clone());
            let stump = DecisionTreeModel::fit_weighted(
                x,
                y,
                &weights,
                (0..n).collect(),
                TreeParams::stump(),
                &mut AllFeatures,
            )?;
            let h: Vec<f64> = x
                .rows()
                .into_iter()
                .map(|row| if stump.predict_unchecked(row) == 1 { 1.0 } else { -1.0 })
                .collect();
            let err: f64 = h
                .iter()
                .zip(&signed)
                .zip(&weights)
                .filter(|((h, y), _)| h != y)
                .map(|(_, w)| w)
                .sum();

            if err <= PERFECT_ERROR {
                model.push(stump, PERFECT_STUMP_ALPHA, err);
                break;
            }
            if err >= 0.5 {
                break;
            }
            let alpha = 0.5 * ((1.0 - err) / err).ln();
            for ((w, h), y) in weights.iter_mut().zip(&h).zip(&signed) {
                *w *= (-alpha * y * h).exp();
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            model.push(stump, alpha, err);
        }

        if model.stumps.is_empty() {
            return Err(Error::DegenerateData(
                "no stump beats chance on the training data".into(),
            ));
        }
        Ok(model)
    }

    fn push(&mut self, stump: DecisionTreeModel, alpha: f64, err: f64) {
        self.stumps.push(stump);
        self.alphas.push(alpha);
        self.errors.push(err);
    }

    pub(crate) fn from_parts(stumps: Vec<DecisionTreeModel>, alphas: Vec<f64>, errors: Vec<f64>, rounds: usize) -> Result<Self> {
        if stumps.is_empty() || stumps.len() != alphas.len() || alphas.len() != errors.len() {
            return Err(Error::arg("AdaBoost model needs matching non-empty stumps, alphas and errors"));
        }
        if stumps.len() > rounds {
            return Err(Error::arg("more stumps than rounds"));
        }
        let k = stumps[0].n_features();
        for s in &stumps {
            check_dim(k, s.n_features())?;
        }
        Ok(Self {
            stumps,
            alphas,
            errors,
            rounds,
        })
    }

    /// Weighted vote `Σ αₜ hₜ(x)` with `hₜ ∈ {−1, +1}`.
    pub fn decision_function(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        check_dim(self.n_features(), x.len())?;
        Ok(self
            .stumps
            .iter()
            .zip(&self.alphas)
            .map(|(s, a)| if s.predict_unchecked(x) == 1 { *a } else { -a })
            .sum())
    }

    /// Positive vote → 1; zero or negative → 0.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<u8> {
        Ok(u8::from(self.decision_function(x)? > 0.0))
    }

    pub fn stumps(&self) -> &[DecisionTreeModel] {
        &self.stumps
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn n_features(&self) -> usize {
        self.stumps[0].n_features()
    }

    /// Running products `Πₜ 2√(errₜ(1 − errₜ))`, the exponential-loss bound
    /// on training error after each round.
    pub fn training_error_bounds(&self) -> Vec<f64> {
        self.errors
            .iter()
            .scan(1.0, |acc, &e| {
                *acc *= 2.0 * (e * (1.0 - e)).max(0.0).sqrt();
                Some(*acc)
            })
            .collect()
    }
}

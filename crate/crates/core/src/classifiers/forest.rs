//! Random forest: bootstrap-sampled CART trees with per-node feature
//! subsampling, combined by majority vote.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{DecisionTreeModel, FeatureSampler, TreeParams};
use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features tried per node; `None` means `round(√k)`.
    pub features_per_split: Option<usize>,
    /// Draw a bootstrap sample per tree. Disabling it fits every tree on
    /// the full training set.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForestModel {
    trees: Vec<DecisionTreeModel>,
    features_per_split: usize,
    seeds: Vec<u64>,
}

struct RandomSubset {
    rng: ChaCha8Rng,
    per_split: usize,
}

impl FeatureSampler for RandomSubset {
    fn order(&mut self, n_features: usize) -> (Vec<usize>, usize) {
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(&mut self.rng);
        (order, self.per_split)
    }
}

impl RandomForestModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: ForestParams, seed: u64) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::arg("cannot fit a forest on an empty training set"));
        }
        check_dim(x.nrows(), n)?;
        if params.n_trees == 0 {
            return Err(Error::arg("forest needs at least one tree"));
        }
        let k = x.ncols();
        let per_split = params
            .features_per_split
            .unwrap_or_else(|| ((k as f64).sqrt().round() as usize).max(1))
            .clamp(1, k.max(1));

        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..params.n_trees).map(|_| master.next_u64()).collect();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
        };
        let weights = vec![1.0; n];

        let trees = seeds
            .par_iter()
            .map(|&tree_seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
                let indices: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut sampler = RandomSubset { rng, per_split };
                DecisionTreeModel::fit_weighted(x, y, &weights, indices, tree_params, &mut sampler)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            trees,
            features_per_split: per_split,
            seeds,
        })
    }

    pub(crate) fn from_trees(trees: Vec<DecisionTreeModel>, features_per_split: usize) -> Result<Self> {
        let Some(first) = trees.first() else {
            return Err(Error::arg("forest needs at least one tree"));
        };
        let k = first.n_features();
        for t in &trees {
            check_dim(k, t.n_features())?;
        }
        Ok(Self {
            trees,
            features_per_split,
            seeds: Vec::new(),
        })
    }

    /// Majority vote; a tie goes to 0.
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<u8> {
        check_dim(self.n_features(), x.len())?;
        let votes = self.trees.iter().filter(|t| t.predict_unchecked(x) == 1).count();
        Ok(majority(votes, self.trees.len()))
    }

    pub fn trees(&self) -> &[DecisionTreeModel] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    pub fn features_per_split(&self) -> usize {
        self.features_per_split
    }

    /// Per-tree RNG seeds (empty for deserialized models).
    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }
}

/// Label chosen by `ones` positive votes out of `total`.
pub fn majority(ones: usize, total: usize) -> u8 {
    u8::from(2 * ones > total)
}

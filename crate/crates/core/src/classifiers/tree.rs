//! CART decision tree with Gini impurity.
//!
//! Samples may carry weights (AdaBoost stumps); impurity and leaf majority
//! use the weights while the stored class counts are raw sample counts.
//! Candidate thresholds are midpoints between consecutive distinct sorted
//! values and `x[feature] <= threshold` goes left.

use ndarray::{ArrayView1, ArrayView2};

use crate::error::{check_dim, Error, Result};

/// Gini impurity `1 − p₀² − p₁²` of a label multiset.
pub fn gini(labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::arg("gini of an empty label set"));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count() as f64;
    Ok(gini_weighted(labels.len() as f64 - ones, ones))
}

fn gini_weighted(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / total, w1 / total);
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    pub fn stump() -> Self {
        Self {
            max_depth: Some(1),
            min_samples_split: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        label: u8,
        /// Training samples reaching this leaf, `[class 0, class 1]`.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => 1 + left.count() + right.count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTreeModel {
    root: Node,
    n_features: usize,
    params: TreeParams,
}

impl DecisionTreeModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: TreeParams) -> Result<Self> {
        let weights = vec![1.0; y.len()];
        let indices: Vec<usize> = (0..y.len()).collect();
        Self::fit_weighted(x, y, &weights, indices, params, &mut AllFeatures)
    }

    /// Fit on the multiset `indices` of rows (repeats allowed) with
    /// per-row weights, drawing candidate features from `features`.
    pub(crate) fn fit_weighted(
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: &[f64],
        indices: Vec<usize>,
        params: TreeParams,
        features: &mut dyn FeatureSampler,
    ) -> Result<Self> {
        if y.is_empty() || indices.is_empty() {
            return Err(Error::arg("cannot fit a tree on an empty training set"));
        }
        check_dim(x.nrows(), y.len())?;
        check_dim(y.len(), weights.len())?;
        if let Some(bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::arg(format!("label {bad} is not 0 or 1")));
        }
        let mut builder = Builder {
            x,
            y,
            weights,
            params,
            features,
        };
        let root = builder.grow(indices, 0);
        Ok(Self {
            root,
            n_features: x.ncols(),
            params,
        })
    }

    pub(crate) fn from_root(root: Node, n_features: usize, params: TreeParams) -> Self {
        Self {
            root,
            n_features,
            params,
        }
    }

    /// A tree that is a single leaf.
    pub fn leaf(label: u8, n_features: usize) -> Self {
        Self::from_root(
            Node::Leaf {
                label,
                counts: [usize::from(label == 0), usize::from(label == 1)],
            },
            n_features,
            TreeParams::default(),
        )
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<u8> {
        check_dim(self.n_features, x.len())?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: ArrayView1<'_, f64>) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }
}

/// Supplies the order in which features are tried at a node. The first
/// `candidates` features are searched; if none of them admits a split the
/// rest are tried in order until one does.
pub(crate) trait FeatureSampler {
    fn order(&mut self, n_features: usize) -> (Vec<usize>, usize);
}

pub(crate) struct AllFeatures;

impl FeatureSampler for AllFeatures {
    fn order(&mut self, n_features: usize) -> (Vec<usize>, usize) {
        ((0..n_features).collect(), n_features)
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    weights: &'a [f64],
    params: TreeParams,
    features: &'a mut dyn FeatureSampler,
}

struct BestSplit {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn class_weights(&self, indices: &[usize]) -> [f64; 2] {
        let mut w = [0.0; 2];
        for &i in indices {
            w[self.y[i] as usize] += self.weights[i];
        }
        w
    }

    fn leaf(&self, indices: &[usize], w: [f64; 2]) -> Node {
        let mut counts = [0usize; 2];
        for &i in indices {
            counts[self.y[i] as usize] += 1;
        }
        // weighted majority, ties to 0
        let label = u8::from(w[1] > w[0]);
        Node::Leaf { label, counts }
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> Node {
        let w = self.class_weights(&indices);
        let pure = w[0] == 0.0 || w[1] == 0.0;
        let depth_reached = self.params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_reached || indices.len() < self.params.min_samples_split.max(2) {
            return self.leaf(&indices, w);
        }

        let Some(best) = self.best_split(&indices, w) else {
            return self.leaf(&indices, w);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[[i, best.feature]] <= best.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    /// Lowest weighted child impurity over the sampled features. Ties keep
    /// the earlier feature in the search order and the lower threshold.
    fn best_split(&mut self, indices: &[usize], w: [f64; 2]) -> Option<BestSplit> {
        let total = w[0] + w[1];
        let (order, mut candidates) = self.features.order(self.x.ncols());
        let mut best: Option<BestSplit> = None;
        let mut sorted = indices.to_vec();

        let mut pos = 0;
        while pos < order.len() {
            let end = candidates.min(order.len());
            let mut batch = order[pos..end].to_vec();
            batch.sort_unstable();
            for feature in batch {
                self.scan_feature(feature, &mut sorted, total, &mut best);
            }
            if best.is_some() {
                break;
            }
            pos = end;
            candidates = end + 1;
        }
        best
    }

    fn scan_feature(&self, feature: usize, sorted: &mut [usize], total: f64, best: &mut Option<BestSplit>) {
        let x = self.x;
        sorted.sort_by(|&a, &b| x[[a, feature]].total_cmp(&x[[b, feature]]));
        let mut left = [0.0f64; 2];
        let mut right = self.class_weights(sorted);
        for k in 0..sorted.len() - 1 {
            let i = sorted[k];
            let wi = self.weights[i];
            left[self.y[i] as usize] += wi;
            right[self.y[i] as usize] -= wi;
            let (lo, hi) = (x[[i, feature]], x[[sorted[k + 1], feature]]);
            if lo == hi {
                continue;
            }
            let wl = left[0] + left[1];
            let wr = (total - wl).max(0.0);
            let impurity = (wl * gini_weighted(left[0], left[1])
                + wr * gini_weighted(right[0].max(0.0), right[1].max(0.0)))
                / total;
            let better = match best {
                None => true,
                Some(b) => impurity < b.impurity - 1e-12,
            };
            if better {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                *best = Some(BestSplit {
                    impurity,
                    feature,
                    threshold,
                });
            }
        }
    }
}

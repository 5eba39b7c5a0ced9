//! The four binary classifiers and their shared fit/predict contract.

pub mod adaboost;
pub mod forest;
pub mod kernel;
pub mod svm;
pub mod tree;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2};

pub use adaboost::{AdaBoostModel, AdaBoostParams};
pub use forest::{ForestParams, RandomForestModel};
pub use kernel::{kernel_eval, resolve_gamma, GammaMode, KernelKind, KernelSpec};
pub use svm::{SvmModel, SvmParams};
pub use tree::{gini, DecisionTreeModel, Node, TreeParams};

use crate::error::{Error, Result};

/// An untrained classifier: which algorithm, with which hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Algorithm {
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    AdaBoost(AdaBoostParams),
    Svm(SvmParams),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::DecisionTree(_) => "tree",
            Algorithm::RandomForest(_) => "forest",
            Algorithm::AdaBoost(_) => "adaboost",
            Algorithm::Svm(_) => "svm",
        }
    }

    /// Row label used in result tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            Algorithm::DecisionTree(_) => "Decision Tree",
            Algorithm::RandomForest(_) => "Random Forest",
            Algorithm::AdaBoost(_) => "Adaboost",
            Algorithm::Svm(_) => "SVM",
        }
    }

    /// Fit on `x` (`n × k`) and labels `y`. `seed` only matters for the
    /// random forest.
    pub fn fit(&self, x: ArrayView2<'_, f64>, y: &[u8], seed: u64) -> Result<ClassifierModel> {
        Ok(match self {
            Algorithm::DecisionTree(p) => ClassifierModel::DecisionTree(DecisionTreeModel::fit(x, y, *p)?),
            Algorithm::RandomForest(p) => ClassifierModel::RandomForest(RandomForestModel::fit(x, y, *p, seed)?),
            Algorithm::AdaBoost(p) => ClassifierModel::AdaBoost(AdaBoostModel::fit(x, y, *p)?),
            Algorithm::Svm(p) => ClassifierModel::Svm(SvmModel::fit(x, y, *p)?),
        })
    }

    /// The four algorithms with default hyperparameters.
    pub fn defaults() -> [Algorithm; 4] {
        [
            Algorithm::DecisionTree(TreeParams::default()),
            Algorithm::RandomForest(ForestParams::default()),
            Algorithm::AdaBoost(AdaBoostParams::default()),
            Algorithm::Svm(SvmParams::default()),
        ]
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    /// `tree`, `forest`, `adaboost` or `svm`, with default hyperparameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tree" | "decision_tree" => Ok(Algorithm::DecisionTree(TreeParams::default())),
            "forest" | "random_forest" => Ok(Algorithm::RandomForest(ForestParams::default())),
            "adaboost" => Ok(Algorithm::AdaBoost(AdaBoostParams::default())),
            "svm" => Ok(Algorithm::Svm(SvmParams::default())),
            other => Err(Error::arg(format!(
                "unknown algorithm {other:?} (expected tree, forest, adaboost or svm)"
            ))),
        }
    }
}

/// A trained classifier.
#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierModel {
    DecisionTree(DecisionTreeModel),
    RandomForest(RandomForestModel),
    AdaBoost(AdaBoostModel),
    Svm(SvmModel),
}

impl ClassifierModel {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<u8> {
        match self {
            ClassifierModel::DecisionTree(m) => m.predict(x),
            ClassifierModel::RandomForest(m) => m.predict(x),
            ClassifierModel::AdaBoost(m) => m.predict(x),
            ClassifierModel::Svm(m) => m.predict(x),
        }
    }

    pub fn predict_rows(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        x.rows().into_iter().map(|row| self.predict(row)).collect()
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassifierModel::DecisionTree(m) => m.n_features(),
            ClassifierModel::RandomForest(m) => m.n_features(),
            ClassifierModel::AdaBoost(m) => m.n_features(),
            ClassifierModel::Svm(m) => m.n_features(),
        }
    }

    /// Self-describing text form. The first line is
    /// `classifier <variant> ...`; floats are written in shortest
    /// round-trip form so predictions survive a save/load cycle exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            ClassifierModel::DecisionTree(t) => {
                out.push_str("classifier decision_tree\n");
                write_tree(&mut out, t);
            }
            ClassifierModel::RandomForest(f) => {
                let _ = writeln!(out, "classifier random_forest {} {}", f.trees().len(), f.features_per_split());
                for t in f.trees() {
                    write_tree(&mut out, t);
                }
            }
            ClassifierModel::AdaBoost(m) => {
                let _ = writeln!(out, "classifier adaboost {} {}", m.rounds(), m.stumps().len());
                for ((s, a), e) in m.stumps().iter().zip(m.alphas()).zip(m.errors()) {
                    let _ = writeln!(out, "alpha {a:?} {e:?}");
                    write_tree(&mut out, s);
                }
            }
            ClassifierModel::Svm(m) => {
                let k = m.kernel();
                let _ = writeln!(
                    out,
                    "classifier svm {} {:?} {} {} {:?} {:?} {} {}",
                    k.kind,
                    k.c,
                    k.gamma,
                    k.degree,
                    m.gamma(),
                    m.bias(),
                    m.dual_coef().len(),
                    m.n_features()
                );
                for (sv, c) in m.support_vectors().rows().into_iter().zip(m.dual_coef()) {
                    let _ = write!(out, "sv {c:?}");
                    for v in sv {
                        let _ = write!(out, " {v:?}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parse [`ClassifierModel::to_text`] output.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = LineReader::new(text.lines(), 1);
        Self::read(&mut lines)
    }

    pub(crate) fn read<'a, I: Iterator<Item = &'a str>>(lines: &mut LineReader<'a, I>) -> Result<Self> {
        let header = lines.next_tokens("classifier header")?;
        if header.first() != Some(&"classifier") || header.len() < 2 {
            return Err(lines.error("expected \"classifier <variant>\""));
        }
        match header[1] {
            "decision_tree" => Ok(ClassifierModel::DecisionTree(read_tree(lines)?)),
            "random_forest" => {
                let n_trees: usize = lines.field(&header, 2)?;
                let per_split: usize = lines.field(&header, 3)?;
                let trees = (0..n_trees).map(|_| read_tree(lines)).collect::<Result<Vec<_>>>()?;
                Ok(ClassifierModel::RandomForest(RandomForestModel::from_trees(trees, per_split)?))
            }
            "adaboost" => {
                let rounds: usize = lines.field(&header, 2)?;
                let count: usize = lines.field(&header, 3)?;
                let (mut stumps, mut alphas, mut errors) = (Vec::new(), Vec::new(), Vec::new());
                for _ in 0..count {
                    let toks = lines.next_tokens("alpha line")?;
                    if toks.first() != Some(&"alpha") {
                        return Err(lines.error("expected \"alpha <value> <error>\""));
                    }
                    alphas.push(lines.field(&toks, 1)?);
                    errors.push(lines.field(&toks, 2)?);
                    stumps.push(read_tree(lines)?);
                }
                Ok(ClassifierModel::AdaBoost(AdaBoostModel::from_parts(stumps, alphas, errors, rounds)?))
            }
            "svm" => {
                let kind: KernelKind = lines.field(&header, 2)?;
                let c: f64 = lines.field(&header, 3)?;
                let gamma_mode: GammaMode = lines.field(&header, 4)?;
                let degree: u32 = lines.field(&header, 5)?;
                let gamma: f64 = lines.field(&header, 6)?;
                let bias: f64 = lines.field(&header, 7)?;
                let count: usize = lines.field(&header, 8)?;
                let dim: usize = lines.field(&header, 9)?;
                let spec = KernelSpec::new(kind, c, gamma_mode, degree)?;
                let mut coef = Vec::with_capacity(count);
                let mut values = Vec::with_capacity(count * dim);
                for _ in 0..count {
                    let toks = lines.next_tokens("support vector")?;
                    if toks.first() != Some(&"sv") || toks.len() != dim + 2 {
                        return Err(lines.error(format!("expected \"sv <coef>\" and {dim} values")));
                    }
                    coef.push(lines.field(&toks, 1)?);
                    for i in 0..dim {
                        values.push(lines.field(&toks, i + 2)?);
                    }
                }
                let svs = Array2::from_shape_vec((count, dim), values).expect("counted");
                Ok(ClassifierModel::Svm(SvmModel::from_parts(svs, coef, bias, gamma, spec)?))
            }
            other => Err(lines.error(format!("unknown classifier variant {other:?}"))),
        }
    }
}

fn write_tree(out: &mut String, tree: &DecisionTreeModel) {
    let p = tree.params();
    let depth = p.max_depth.map_or_else(|| "none".to_string(), |d| d.to_string());
    let _ = writeln!(
        out,
        "tree {} {} {} {}",
        tree.n_features(),
        tree.node_count(),
        depth,
        p.min_samples_split
    );
    fn walk(out: &mut String, node: &Node) {
        match node {
            Node::Leaf { label, counts } => {
                let _ = writeln!(out, "L {label} {} {}", counts[0], counts[1]);
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(out, "S {feature} {threshold:?}");
                walk(out, left);
                walk(out, right);
            }
        }
    }
    walk(out, tree.root());
}

fn read_tree<'a, I: Iterator<Item = &'a str>>(lines: &mut LineReader<'a, I>) -> Result<DecisionTreeModel> {
    let header = lines.next_tokens("tree header")?;
    if header.first() != Some(&"tree") || header.len() != 5 {
        return Err(lines.error("expected \"tree <features> <nodes> <max_depth> <min_split>\""));
    }
    let n_features: usize = lines.field(&header, 1)?;
    let nodes: usize = lines.field(&header, 2)?;
    let max_depth = match header[3] {
        "none" => None,
        _ => Some(lines.field(&header, 3)?),
    };
    let min_samples_split = lines.field(&header, 4)?;

    fn node<'a, I: Iterator<Item = &'a str>>(lines: &mut LineReader<'a, I>, budget: &mut usize, n_features: usize) -> Result<Node> {
        if *budget == 0 {
            return Err(lines.error("tree has more nodes than declared"));
        }
        *budget -= 1;
        let toks = lines.next_tokens("tree node")?;
        match toks.first() {
            Some(&"L") if toks.len() == 4 => {
                let label: u8 = lines.field(&toks, 1)?;
                if label > 1 {
                    return Err(lines.error("leaf label must be 0 or 1"));
                }
                Ok(Node::Leaf {
                    label,
                    counts: [lines.field(&toks, 2)?, lines.field(&toks, 3)?],
                })
            }
            Some(&"S") if toks.len() == 3 => {
                let feature: usize = lines.field(&toks, 1)?;
                if feature >= n_features {
                    return Err(lines.error(format!("feature index {feature} out of range")));
                }
                let threshold = lines.field(&toks, 2)?;
                let left = Box::new(node(lines, budget, n_features)?);
                let right = Box::new(node(lines, budget, n_features)?);
                Ok(Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                })
            }
            _ => Err(lines.error("expected \"L <label> <n0> <n1>\" or \"S <feature> <threshold>\"")),
        }
    }

    let mut budget = nodes;
    let root = node(lines, &mut budget, n_features)?;
    if budget != 0 {
        return Err(lines.error("tree has fewer nodes than declared"));
    }
    Ok(DecisionTreeModel::from_root(
        root,
        n_features,
        TreeParams {
            max_depth,
            min_samples_split,
        },
    ))
}

/// Line cursor that tracks line numbers for parse errors.
pub(crate) struct LineReader<'a, I: Iterator<Item = &'a str>> {
    inner: I,
    line: usize,
}

impl<'a, I: Iterator<Item = &'a str>> LineReader<'a, I> {
    /// `next_line` is the 1-based number of the first line `inner` yields.
    pub(crate) fn new(inner: I, next_line: usize) -> Self {
        Self {
            inner,
            line: next_line - 1,
        }
    }

    pub(crate) fn next_line(&mut self, what: &str) -> Result<&'a str> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(l) if l.trim().is_empty() => continue,
                Some(l) => return Ok(l),
                None => return Err(Error::parse(self.line, format!("unexpected end of file, expected {what}"))),
            }
        }
    }

    pub(crate) fn next_tokens(&mut self, what: &str) -> Result<Vec<&'a str>> {
        Ok(self.next_line(what)?.split_whitespace().collect())
    }

    pub(crate) fn field<T: FromStr>(&self, toks: &[&str], i: usize) -> Result<T> {
        toks.get(i)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.error(format!("missing or invalid field {i}")))
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(n: usize, k: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, k), |_| rng.random_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| u8::from(r[0] - 0.5 * r[1] + rng.random_range(-0.3..0.3) > 0.0))
            .collect();
        (x, y)
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("tree".parse::<Algorithm>().unwrap().name(), "tree");
        assert_eq!("FOREST".parse::<Algorithm>().unwrap().display_name(), "Random Forest");
        assert!(matches!("cnn".parse::<Algorithm>(), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn text_roundtrip_preserves_predictions() {
        let (x, y) = noisy(60, 5, 21);
        let (probe, _) = noisy(200, 5, 22);
        for alg in Algorithm::defaults() {
            let model = alg.fit(x.view(), &y, 4).unwrap();
            let text = model.to_text();
            assert!(text.starts_with("classifier "));
            let back = ClassifierModel::from_text(&text).unwrap();
            assert_eq!(back.predict_rows(probe.view()).unwrap(), model.predict_rows(probe.view()).unwrap(), "{}", alg.name());
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn every_prediction_is_binary() {
        let (x, y) = noisy(40, 3, 5);
        let (probe, _) = noisy(50, 3, 6);
        for alg in Algorithm::defaults() {
            let model = alg.fit(x.view(), &y, 0).unwrap();
            assert!(model.predict_rows(probe.view()).unwrap().iter().all(|&p| p <= 1));
        }
    }

    #[test]
    fn malformed_text_names_line() {
        let err = ClassifierModel::from_text("classifier decision_tree\ntree 2 3 none 2\nS 0 0.5\nL 1 0 1\nX\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
        let err = ClassifierModel::from_text("classifier perceptron\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }
}

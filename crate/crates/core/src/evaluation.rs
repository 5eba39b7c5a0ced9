//! Repeated split / reduce / fit / score cycles and the reported metrics.
//!
//! Run `r` splits with seed `base_seed + r`, fits PCA on the training part
//! only, projects both parts (and the optional external image) with that
//! model, then trains and scores a classifier. Reports average the per-run
//! accuracy and per-class recalls; `pct_test` is the share of runs that
//! label the external image as tumor.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::Algorithm;
use crate::dataset::{preprocess_image, Dataset};
use crate::error::{Error, Result};
use crate::pca::PcaModel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::arg(format!("train fraction {train_fraction} outside (0, 1)")));
        }
        Ok(Self { train_fraction, seed })
    }
}

/// Seeded shuffle of `0..n`; the first `floor(fraction · n)` indices train.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    if n < 2 || n_train == 0 || n_train == n {
        return Err(Error::arg(format!(
            "a {:.2} split of {n} rows leaves an empty side",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn train_test_split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.n(), spec)?;
    Ok((ds.select(&train), ds.select(&test)))
}

/// Percentage of `preds` equal to `truth`.
pub fn accuracy(preds: &[u8], truth: &[u8]) -> Result<f64> {
    if preds.len() != truth.len() || preds.is_empty() {
        return Err(Error::arg(format!(
            "accuracy needs equal non-empty lengths, got {} and {}",
            preds.len(),
            truth.len()
        )));
    }
    let correct = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * correct as f64 / truth.len() as f64)
}

/// Percentage of rows with `truth == cls` that were predicted `cls`.
pub fn class_recall(preds: &[u8], truth: &[u8], cls: u8) -> Result<f64> {
    if preds.len() != truth.len() {
        return Err(Error::arg("recall needs equal lengths"));
    }
    let (mut hit, mut total) = (0usize, 0usize);
    for (&p, &t) in preds.iter().zip(truth) {
        if t == cls {
            total += 1;
            hit += usize::from(p == cls);
        }
    }
    if total == 0 {
        return Err(Error::UndefinedMetric(format!("no rows of class {cls} in the test set")));
    }
    Ok(100.0 * hit as f64 / total as f64)
}

/// Protocol settings shared by every run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub components: usize,
    pub runs: usize,
    pub base_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            components: crate::DEFAULT_COMPONENTS,
            runs: crate::DEFAULT_RUNS,
            base_seed: crate::DEFAULT_SEED,
        }
    }
}

/// One run's split, already projected by a PCA fit on its training rows.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub run: usize,
    pub seed: u64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub train_x: Array2<f64>,
    pub train_y: Vec<u8>,
    pub test_x: Array2<f64>,
    pub test_y: Vec<u8>,
    pub external: Option<Array1<f64>>,
}

impl PreparedRun {
    /// FNV-1a over the train then test indices; equal hashes mean equal splits.
    pub fn split_hash(&self) -> u64 {
        split_hash(&self.train_indices, &self.test_indices)
    }
}

pub fn split_hash(train: &[usize], test: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &i in train.iter().chain([usize::MAX].iter()).chain(test) {
        for b in (i as u64).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Split and reduce every run. `external` is a preprocessed feature row.
pub fn prepare_runs(ds: &Dataset, config: &EvalConfig, external: Option<ArrayView1<'_, f64>>) -> Result<Vec<PreparedRun>> {
    if config.runs == 0 {
        return Err(Error::arg("need at least one run"));
    }
    if let Some(ext) = external {
        crate::error::check_dim(ds.d(), ext.len())?;
    }
    (0..config.runs)
        .map(|run| prepare_one(ds, config, external, run).map_err(|e| Error::Run { run, source: Box::new(e) }))
        .collect()
}

fn prepare_one(ds: &Dataset, config: &EvalConfig, external: Option<ArrayView1<'_, f64>>, run: usize) -> Result<PreparedRun> {
    let seed = config.base_seed.wrapping_add(run as u64);
    let (train_indices, test_indices) = split_indices(ds.n(), SplitSpec::new(config.train_fraction, seed)?)?;
    let train_raw = ds.features().select(Axis(0), &train_indices);
    let pca = PcaModel::fit(train_raw.view(), config.components)?;
    let train_x = pca.transform(train_raw.view())?;
    drop(train_raw);
    let test_x = pca.transform(ds.features().select(Axis(0), &test_indices).view())?;
    let external = external.map(|e| pca.transform_one(e)).transpose()?;
    let labels = ds.labels();
    Ok(PreparedRun {
        run,
        seed,
        train_y: train_indices.iter().map(|&i| labels[i]).collect(),
        test_y: test_indices.iter().map(|&i| labels[i]).collect(),
        train_indices,
        test_indices,
        train_x,
        test_x,
        external,
    })
}

/// Per-run outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub split_hash: u64,
    pub n_test: usize,
    pub n_test_sick: usize,
    pub accuracy: f64,
    /// `None` when the test split had no tumor rows.
    pub recall_sick: Option<f64>,
    /// `None` when the test split had no healthy rows.
    pub recall_not_sick: Option<f64>,
    pub external_prediction: Option<u8>,
}

impl RunRecord {
    /// Set when a recall was undefined for this run.
    pub fn flagged(&self) -> bool {
        self.recall_sick.is_none() || self.recall_not_sick.is_none()
    }
}

/// Averages over runs, in percent.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub algorithm: String,
    pub model_accuracy_pct: f64,
    /// Mean tumor recall over runs where it is defined.
    pub pct_sick: Option<f64>,
    /// Mean healthy recall over runs where it is defined.
    pub pct_not_sick: Option<f64>,
    /// Share of runs labelling the external image as tumor.
    pub pct_test: Option<f64>,
    pub runs: usize,
    pub records: Vec<RunRecord>,
}

pub const CSV_HEADER: &str = "algorithm,model_accuracy_pct,pct_sick,pct_not_sick,pct_test,runs";

impl EvalReport {
    pub fn from_records(algorithm: impl Into<String>, records: Vec<RunRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::arg("report needs at least one run"));
        }
        let runs = records.len();
        let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
        let model_accuracy_pct = records.iter().map(|r| r.accuracy).sum::<f64>() / runs as f64;
        let pct_sick = mean(records.iter().filter_map(|r| r.recall_sick).collect());
        let pct_not_sick = mean(records.iter().filter_map(|r| r.recall_not_sick).collect());
        let pct_test = records
            .iter()
            .map(|r| r.external_prediction)
            .collect::<Option<Vec<u8>>>()
            .map(|preds| 100.0 * preds.iter().filter(|&&p| p == 1).count() as f64 / runs as f64);
        Ok(Self {
            algorithm: algorithm.into(),
            model_accuracy_pct,
            pct_sick,
            pct_not_sick,
            pct_test,
            runs,
            records,
        })
    }

    pub fn flagged_runs(&self) -> Vec<usize> {
        self.records.iter().filter(|r| r.flagged()).map(|r| r.run).collect()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{},{},{},{}",
            self.algorithm,
            self.model_accuracy_pct,
            opt(self.pct_sick, 4, ""),
            opt(self.pct_not_sick, 4, ""),
            opt(self.pct_test, 4, ""),
            self.runs
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<16} {:>19} {:>12} {:>16} {:>11}",
            "Algorithm", "Model Accuracy (%)", "P. sick (%)", "P. not sick (%)", "P. Test(%)"
        )
    }

    pub fn table_row(&self) -> String {
        format!(
            "{:<16} {:>19.2} {:>12} {:>16} {:>11}",
            self.algorithm,
            self.model_accuracy_pct,
            opt(self.pct_sick, 2, "-"),
            opt(self.pct_not_sick, 2, "-"),
            opt(self.pct_test, 0, "-"),
        )
    }
}

fn opt(v: Option<f64>, decimals: usize, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), |v| format!("{v:.decimals$}"))
}

/// Aligned table of several reports.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = EvalReport::table_header();
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.table_row());
    }
    out
}

pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Fit and score `algorithm` on every prepared run.
pub fn evaluate_prepared(runs: &[PreparedRun], algorithm: &Algorithm) -> Result<EvalReport> {
    let records = runs
        .par_iter()
        .map(|r| evaluate_run(r, algorithm).map_err(|e| Error::Run { run: r.run, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_records(algorithm.display_name(), records)
}

fn evaluate_run(run: &PreparedRun, algorithm: &Algorithm) -> Result<RunRecord> {
    let model = algorithm.fit(run.train_x.view(), &run.train_y, run.seed)?;
    let preds = model.predict_rows(run.test_x.view())?;
    let optional = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(RunRecord {
        run: run.run,
        seed: run.seed,
        split_hash: run.split_hash(),
        n_test: run.test_y.len(),
        n_test_sick: run.test_y.iter().filter(|&&l| l == 1).count(),
        accuracy: accuracy(&preds, &run.test_y)?,
        recall_sick: optional(class_recall(&preds, &run.test_y, 1))?,
        recall_not_sick: optional(class_recall(&preds, &run.test_y, 0))?,
        external_prediction: run.external.as_ref().map(|e| model.predict(e.view())).transpose()?,
    })
}

/// The full protocol for one algorithm.
pub fn repeated_evaluate(
    ds: &Dataset,
    algorithm: &Algorithm,
    config: &EvalConfig,
    external: Option<ArrayView1<'_, f64>>,
) -> Result<EvalReport> {
    let runs = prepare_runs(ds, config, external)?;
    evaluate_prepared(&runs, algorithm)
}

/// Preprocess an external image to match a dataset of dimension `d`
/// (which must be a perfect square, `side²`).
pub fn load_external(path: impl AsRef<Path>, d: usize) -> Result<Array1<f64>> {
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::arg(format!("dataset dimension {d} is not a square image size")));
    }
    Ok(Array1::from(preprocess_image(path, side as u32)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn split_sizes() {
        let (tr, te) = split_indices(253, SplitSpec::new(0.8, 1).unwrap()).unwrap();
        assert_eq!((tr.len(), te.len()), (202, 51));
        let (tr, te) = split_indices(2, SplitSpec::new(0.8, 1).unwrap()).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
        assert!(split_indices(1, SplitSpec { train_fraction: 0.8, seed: 0 }).is_err());
        assert!(split_indices(4, SplitSpec { train_fraction: 0.1, seed: 0 }).is_err());
        assert!(SplitSpec::new(1.0, 0).is_err());
    }

    #[test]
    fn split_is_a_seeded_partition() {
        let spec = SplitSpec::new(0.8, 42).unwrap();
        let (tr, te) = split_indices(100, spec).unwrap();
        assert_eq!(split_indices(100, spec).unwrap(), (tr.clone(), te.clone()));
        let all: HashSet<usize> = tr.iter().chain(&te).copied().collect();
        assert_eq!(all.len(), 100);
        assert_eq!(tr.len() + te.len(), 100);
        assert_ne!(split_indices(100, SplitSpec::new(0.8, 43).unwrap()).unwrap().0, tr);
    }

    #[test]
    fn metric_values() {
        let truth = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let preds = [1, 1, 1, 1, 0, 0, 0, 0, 0, 1];
        assert_eq!(accuracy(&preds, &truth).unwrap(), 80.0);
        assert_eq!(accuracy(&truth, &truth).unwrap(), 100.0);
        assert_eq!(class_recall(&[1, 0, 0], &[1, 1, 0], 1).unwrap(), 50.0);
        assert_eq!(class_recall(&[1, 0, 0], &[1, 1, 0], 0).unwrap(), 100.0);
        assert!(matches!(class_recall(&[1], &[1], 0), Err(Error::UndefinedMetric(_))));
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 0]).is_err());
    }

    fn record(run: usize, acc: f64, sick: Option<f64>, ext: Option<u8>) -> RunRecord {
        RunRecord {
            run,
            seed: run as u64,
            split_hash: 0,
            n_test: 10,
            n_test_sick: 5,
            accuracy: acc,
            recall_sick: sick,
            recall_not_sick: Some(50.0),
            external_prediction: ext,
        }
    }

    #[test]
    fn report_averages_and_granularity() {
        let records: Vec<_> = (0..10).map(|r| record(r, 70.0 + r as f64, Some(80.0), Some(u8::from(r < 7)))).collect();
        let rep = EvalReport::from_records("Adaboost", records).unwrap();
        assert_eq!(rep.pct_test, Some(70.0));
        assert!((rep.model_accuracy_pct - 74.5).abs() < 1e-12);

        let single = EvalReport::from_records("x", vec![record(0, 63.0, Some(12.5), None)]).unwrap();
        assert_eq!(single.model_accuracy_pct, 63.0);
        assert_eq!(single.pct_sick, Some(12.5));
        assert_eq!(single.pct_test, None);
    }

    #[test]
    fn undefined_recall_flags_run() {
        let rep = EvalReport::from_records("x", vec![record(0, 60.0, None, None), record(1, 80.0, Some(40.0), None)]).unwrap();
        assert_eq!(rep.pct_sick, Some(40.0));
        assert_eq!(rep.flagged_runs(), vec![0]);
        assert_eq!(rep.model_accuracy_pct, 70.0);
    }

    #[test]
    fn csv_and_table_shapes() {
        let rep = EvalReport::from_records("Decision Tree", vec![record(0, 72.54, Some(79.34), Some(1))]).unwrap();
        assert_eq!(rep.csv_row(), "Decision Tree,72.5400,79.3400,50.0000,100.0000,1");
        assert!(render_table(std::slice::from_ref(&rep)).contains("72.54"));
        assert!(render_csv(&[rep]).starts_with(CSV_HEADER));
    }
}

//! Exhaustive SVM hyperparameter search over kernel × C × gamma × degree.
//!
//! Every cell is evaluated on the same prepared runs (same splits, same PCA
//! projections), so cells are compared on paired data.

use std::cmp::Ordering;
use std::fmt::Write as _;

use ndarray::ArrayView1;
use rayon::prelude::*;

use crate::classifiers::{Algorithm, GammaMode, KernelKind, KernelSpec, SvmParams};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::evaluation::{evaluate_prepared, prepare_runs, EvalConfig, EvalReport, PreparedRun};

pub const GRID_C: [f64; 5] = [0.1, 1.0, 2.0, 3.0, 4.0];
pub const GRID_GAMMA: [GammaMode; 2] = [GammaMode::Auto, GammaMode::Scale];
pub const GRID_DEGREE: [u32; 4] = [2, 3, 4, 5];

/// All 160 cells, kernel-major, then C, gamma, degree in listed order.
pub fn enumerate_grid() -> Vec<KernelSpec> {
    let mut cells = Vec::with_capacity(160);
    for kind in KernelKind::ALL {
        for c in GRID_C {
            for gamma in GRID_GAMMA {
                for degree in GRID_DEGREE {
                    cells.push(KernelSpec { kind, c, gamma, degree });
                }
            }
        }
    }
    cells
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    /// Position in the enumeration.
    pub index: usize,
    pub spec: KernelSpec,
    pub report: EvalReport,
}

impl GridResult {
    fn rank_cmp(&self, other: &Self) -> Ordering {
        let test = |r: &GridResult| r.report.pct_test.unwrap_or(f64::NEG_INFINITY);
        other
            .report
            .model_accuracy_pct
            .total_cmp(&self.report.model_accuracy_pct)
            .then(test(other).total_cmp(&test(self)))
            .then(self.index.cmp(&other.index))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFailure {
    pub index: usize,
    pub spec: KernelSpec,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearch {
    /// Ranked: accuracy descending, then `pct_test` descending, then
    /// enumeration order.
    pub results: Vec<GridResult>,
    pub failures: Vec<GridFailure>,
}

pub const GRID_CSV_HEADER: &str = "kernel,C,gamma_mode,degree,model_accuracy_pct,pct_sick,pct_not_sick,pct_test,status";
pub const BEST_CSV_HEADER: &str = "Kernel,C,Gamma,Degree,Accuracy,P. Test";

impl GridSearch {
    pub fn best(&self) -> Option<&GridResult> {
        self.results.first()
    }

    pub fn cell_count(&self) -> usize {
        self.results.len() + self.failures.len()
    }

    /// One row per cell in enumeration order.
    pub fn to_csv(&self) -> String {
        enum Row<'a> {
            Ok(&'a GridResult),
            Failed(&'a GridFailure),
        }
        let mut rows: Vec<(usize, Row<'_>)> = self
            .results
            .iter()
            .map(|r| (r.index, Row::Ok(r)))
            .chain(self.failures.iter().map(|f| (f.index, Row::Failed(f))))
            .collect();
        rows.sort_by_key(|(i, _)| *i);

        let mut out = String::from(GRID_CSV_HEADER);
        out.push('\n');
        let num = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.4}"));
        for (_, row) in rows {
            match row {
                Row::Ok(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{:.4},{},{},{},ok",
                        r.spec.kind,
                        r.spec.c,
                        r.spec.gamma,
                        r.spec.degree,
                        r.report.model_accuracy_pct,
                        num(r.report.pct_sick),
                        num(r.report.pct_not_sick),
                        num(r.report.pct_test),
                    );
                }
                Row::Failed(f) => {
                    let msg = f.error.replace([',', '\n', '\r'], ";");
                    let _ = writeln!(
                        out,
                        "{},{},{},{},,,,,failed: {msg}",
                        f.spec.kind, f.spec.c, f.spec.gamma, f.spec.degree
                    );
                }
            }
        }
        out
    }

    /// Header plus one row for the top cell, if any cell succeeded.
    pub fn best_summary(&self) -> Option<String> {
        let best = self.best()?;
        Some(format!(
            "{BEST_CSV_HEADER}\n{},{},{},{},{:.2},{}\n",
            best.spec.kind,
            best.spec.c,
            best.spec.gamma,
            best.spec.degree,
            best.report.model_accuracy_pct,
            best.report.pct_test.map_or_else(|| "-".to_string(), |v| format!("{v:.0}")),
        ))
    }
}

/// Evaluate `cells` on shared prepared runs. Cells that fail are recorded
/// and left out of the ranking.
pub fn search_cells(runs: &[PreparedRun], cells: &[KernelSpec], template: SvmParams) -> GridSearch {
    let outcomes: Vec<std::result::Result<GridResult, GridFailure>> = cells
        .par_iter()
        .enumerate()
        .map(|(index, &spec)| {
            let algorithm = Algorithm::Svm(SvmParams { kernel: spec, ..template });
            match evaluate_prepared(runs, &algorithm) {
                Ok(mut report) => {
                    report.algorithm = format!("SVM({spec})");
                    Ok(GridResult { index, spec, report })
                }
                Err(e) => Err(GridFailure {
                    index,
                    spec,
                    error: e.to_string(),
                }),
            }
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    results.sort_by(GridResult::rank_cmp);
    GridSearch { results, failures }
}

/// Full search over [`enumerate_grid`].
pub fn grid_search(ds: &Dataset, config: &EvalConfig, external: Option<ArrayView1<'_, f64>>) -> Result<GridSearch> {
    let runs = prepare_runs(ds, config, external)?;
    Ok(search_cells(&runs, &enumerate_grid(), SvmParams::default()))
}

//! `mriclass` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mriclass::classifiers::{AdaBoostParams, ForestParams, SvmParams, TreeParams};
use mriclass::dataset::{build_dataset, load_dataset, save_dataset};
use mriclass::evaluation::{evaluate_prepared, load_external, prepare_runs, render_csv, render_table, EvalConfig};
use mriclass::gridsearch::{enumerate_grid, search_cells};
use mriclass::{Algorithm, Dataset, GammaMode, KernelKind, PipelineModel};

#[derive(Parser)]
#[command(name = "mriclass", version, about = "Brain-MRI tumor classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert two image directories into a dataset text file.
    Preprocess {
        /// Directory of tumor-positive images (label 1).
        tumor_dir: PathBuf,
        /// Directory of healthy images (label 0).
        healthy_dir: PathBuf,
        /// Output dataset file.
        out: PathBuf,
        #[arg(long, default_value_t = mriclass::DEFAULT_SIDE)]
        side: u32,
    },
    /// Repeated split/train/test evaluation of one or all algorithms.
    Eval {
        dataset: PathBuf,
        /// Algorithm to evaluate; all four when omitted.
        #[arg(long, value_enum)]
        algo: Option<AlgoName>,
        #[command(flatten)]
        protocol: Protocol,
        #[command(flatten)]
        hyper: Hyper,
        /// Write the report as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every cell of the SVM hyperparameter grid.
    Grid {
        dataset: PathBuf,
        #[command(flatten)]
        protocol: Protocol,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Fit PCA and a classifier on a whole dataset and save the model.
    Train {
        dataset: PathBuf,
        #[arg(long, value_enum, default_value_t = AlgoName::Svm)]
        algo: AlgoName,
        #[arg(long, default_value_t = mriclass::DEFAULT_COMPONENTS)]
        k: usize,
        #[arg(long, default_value_t = mriclass::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        hyper: Hyper,
        /// Output model file.
        #[arg(long)]
        model: PathBuf,
    },
    /// Classify one image as "tumor" or "no tumor".
    Predict {
        image: PathBuf,
        /// Saved model from `train`.
        #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
        model: Option<PathBuf>,
        /// Retrain on this dataset instead of loading a model.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AlgoName::Svm)]
        algo: AlgoName,
        #[arg(long, default_value_t = mriclass::DEFAULT_COMPONENTS)]
        k: usize,
        #[arg(long, default_value_t = mriclass::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        hyper: Hyper,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoName {
    Tree,
    Forest,
    Adaboost,
    Svm,
}

#[derive(Args)]
struct Protocol {
    #[arg(long, default_value_t = mriclass::DEFAULT_RUNS)]
    runs: usize,
    /// Principal components kept.
    #[arg(long, default_value_t = mriclass::DEFAULT_COMPONENTS)]
    k: usize,
    /// Base seed; run r uses seed + r.
    #[arg(long, default_value_t = mriclass::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    /// External tumor image classified once per run.
    #[arg(long)]
    test_image: Option<PathBuf>,
}

#[derive(Args, Default)]
struct Hyper {
    /// SVM kernel.
    #[arg(long, value_enum)]
    kernel: Option<KernelName>,
    /// SVM penalty C.
    #[arg(long = "c")]
    c: Option<f64>,
    /// SVM gamma mode.
    #[arg(long, value_enum)]
    gamma: Option<GammaName>,
    /// SVM polynomial degree.
    #[arg(long)]
    degree: Option<u32>,
    /// Random-forest size.
    #[arg(long)]
    trees: Option<usize>,
    /// Tree / forest depth limit.
    #[arg(long)]
    max_depth: Option<usize>,
    /// AdaBoost rounds.
    #[arg(long)]
    rounds: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelName {
    Linear,
    Sigmoid,
    Rbf,
    #[value(alias = "poly")]
    Polynomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaName {
    Auto,
    Scale,
}

impl Hyper {
    fn is_empty(&self) -> bool {
        self.kernel.is_none()
            && self.c.is_none()
            && self.gamma.is_none()
            && self.degree.is_none()
            && self.trees.is_none()
            && self.max_depth.is_none()
            && self.rounds.is_none()
    }

    fn algorithm(&self, name: AlgoName) -> Result<Algorithm> {
        let svm_flags = self.kernel.is_some() || self.c.is_some() || self.gamma.is_some() || self.degree.is_some();
        let reject = |flag: &str| bail!("{flag} does not apply to --algo {}", name.as_str());
        match name {
            AlgoName::Tree => {
                if svm_flags {
                    return reject("SVM flags");
                }
                if self.trees.is_some() {
                    return reject("--trees");
                }
                if self.rounds.is_some() {
                    return reject("--rounds");
                }
                Ok(Algorithm::DecisionTree(TreeParams {
                    max_depth: self.max_depth,
                    ..TreeParams::default()
                }))
            }
            AlgoName::Forest => {
                if svm_flags {
                    return reject("SVM flags");
                }
                if self.rounds.is_some() {
                    return reject("--rounds");
                }
                let mut p = ForestParams {
                    max_depth: self.max_depth,
                    ..ForestParams::default()
                };
                if let Some(t) = self.trees {
                    p.n_trees = t;
                }
                Ok(Algorithm::RandomForest(p))
            }
            AlgoName::Adaboost => {
                if svm_flags {
                    return reject("SVM flags");
                }
                if self.trees.is_some() || self.max_depth.is_some() {
                    return reject("--trees/--max-depth");
                }
                let mut p = AdaBoostParams::default();
                if let Some(r) = self.rounds {
                    p.rounds = r;
                }
                Ok(Algorithm::AdaBoost(p))
            }
            AlgoName::Svm => {
                if self.trees.is_some() || self.max_depth.is_some() || self.rounds.is_some() {
                    return reject("--trees/--max-depth/--rounds");
                }
                let mut spec = SvmParams::default().kernel;
                if let Some(k) = self.kernel {
                    spec.kind = match k {
                        KernelName::Linear => KernelKind::Linear,
                        KernelName::Sigmoid => KernelKind::Sigmoid,
                        KernelName::Rbf => KernelKind::Rbf,
                        KernelName::Polynomial => KernelKind::Polynomial,
                    };
                }
                if let Some(g) = self.gamma {
                    spec.gamma = match g {
                        GammaName::Auto => GammaMode::Auto,
                        GammaName::Scale => GammaMode::Scale,
                    };
                }
                spec.c = self.c.unwrap_or(spec.c);
                spec.degree = self.degree.unwrap_or(spec.degree);
                spec.validate()?;
                Ok(Algorithm::Svm(SvmParams::new(spec)))
            }
        }
    }
}

impl AlgoName {
    const ALL: [AlgoName; 4] = [AlgoName::Tree, AlgoName::Forest, AlgoName::Adaboost, AlgoName::Svm];

    fn as_str(self) -> &'static str {
        match self {
            AlgoName::Tree => "tree",
            AlgoName::Forest => "forest",
            AlgoName::Adaboost => "adaboost",
            AlgoName::Svm => "svm",
        }
    }
}

impl Protocol {
    fn config(&self) -> EvalConfig {
        EvalConfig {
            train_fraction: self.train_fraction,
            components: self.k,
            runs: self.runs,
            base_seed: self.seed,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            tumor_dir,
            healthy_dir,
            out,
            side,
        } => preprocess(&tumor_dir, &healthy_dir, &out, side),
        Command::Eval {
            dataset,
            algo,
            protocol,
            hyper,
            out,
        } => eval(&dataset, algo, &protocol, &hyper, out.as_deref()),
        Command::Grid { dataset, protocol, out } => grid(&dataset, &protocol, &out),
        Command::Train {
            dataset,
            algo,
            k,
            seed,
            hyper,
            model,
        } => {
            let ds = read_dataset(&dataset)?;
            let pipeline = fit_pipeline(&ds, algo, k, seed, &hyper)?;
            pipeline
                .save(&model)
                .with_context(|| format!("writing model {}", model.display()))?;
            println!("saved {} model ({} components) to {}", algo.as_str(), k, model.display());
            Ok(())
        }
        Command::Predict {
            image,
            model,
            dataset,
            algo,
            k,
            seed,
            hyper,
        } => {
            let pipeline = match (model, dataset) {
                (Some(m), _) => PipelineModel::load(&m).with_context(|| format!("loading model {}", m.display()))?,
                (None, Some(d)) => fit_pipeline(&read_dataset(&d)?, algo, k, seed, &hyper)?,
                (None, None) => unreachable!("clap requires --model or --dataset"),
            };
            let label = pipeline
                .predict_image(&image)
                .with_context(|| format!("classifying {}", image.display()))?;
            println!("{}", if label == 1 { "tumor" } else { "no tumor" });
            Ok(())
        }
    }
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    load_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn preprocess(tumor_dir: &Path, healthy_dir: &Path, out: &Path, side: u32) -> Result<()> {
    for dir in [tumor_dir, healthy_dir] {
        if !dir.is_dir() {
            bail!("{} is not a directory", dir.display());
        }
    }
    let ds = build_dataset(tumor_dir, healthy_dir, side)?;
    save_dataset(&ds, out)?;
    let (healthy, tumor) = ds.label_counts();
    println!("n={} d={} tumor={tumor} healthy={healthy}", ds.n(), ds.d());
    Ok(())
}

fn external(protocol: &Protocol, d: usize) -> Result<Option<mriclass::ndarray::Array1<f64>>> {
    protocol
        .test_image
        .as_ref()
        .map(|p| load_external(p, d).with_context(|| format!("loading test image {}", p.display())))
        .transpose()
}

fn eval(dataset: &Path, algo: Option<AlgoName>, protocol: &Protocol, hyper: &Hyper, out: Option<&Path>) -> Result<()> {
    let algorithms = match algo {
        Some(a) => vec![hyper.algorithm(a)?],
        None if hyper.is_empty() => AlgoName::ALL.iter().map(|&a| hyper.algorithm(a)).collect::<Result<_>>()?,
        None => bail!("hyperparameter flags need --algo"),
    };
    let ds = read_dataset(dataset)?;
    let ext = external(protocol, ds.d())?;
    let runs = prepare_runs(&ds, &protocol.config(), ext.as_ref().map(|e| e.view()))?;
    let mut reports = Vec::new();
    for alg in &algorithms {
        let report = evaluate_prepared(&runs, alg).with_context(|| format!("evaluating {alg}"))?;
        for r in report.records.iter().filter(|r| r.flagged()) {
            eprintln!(
                "warning: {alg} run {} (seed {}): a class is absent from the test split; its recall is excluded",
                r.run, r.seed
            );
        }
        reports.push(report);
    }
    print!("{}", render_table(&reports));
    if let Some(out) = out {
        fs::write(out, render_csv(&reports)).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn grid(dataset: &Path, protocol: &Protocol, out: &Path) -> Result<()> {
    let ds = read_dataset(dataset)?;
    let ext = external(protocol, ds.d())?;
    let runs = prepare_runs(&ds, &protocol.config(), ext.as_ref().map(|e| e.view()))?;
    let search = search_cells(&runs, &enumerate_grid(), SvmParams::default());
    fs::write(out, search.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    for f in &search.failures {
        eprintln!("warning: cell ({}) failed: {}", f.spec, f.error);
    }
    match search.best_summary() {
        Some(best) => {
            print!("{best}");
            Ok(())
        }
        None => bail!("all {} grid cells failed", search.cell_count()),
    }
}

fn fit_pipeline(ds: &Dataset, algo: AlgoName, k: usize, seed: u64, hyper: &Hyper) -> Result<PipelineModel> {
    let side = (ds.d() as f64).sqrt().round() as u32;
    if (side as usize) * (side as usize) != ds.d() {
        bail!("dataset dimension {} is not a square image size", ds.d());
    }
    let algorithm = hyper.algorithm(algo)?;
    Ok(PipelineModel::fit(ds, side, &algorithm, k, seed)?)
}

//! Pipeline driver: extract features over a manifest, train and evaluate
//! SVM models, classify single images and dump descriptor internals.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ltridp::descriptor::{self, Bins};
use ltridp::eval::EvalReport;
use ltridp::imaging::{load_image, save_pgm, GrayImage};
use ltridp::pipeline::{
    extract_store, load_manifest, predict_image, train_and_report, ExtractConfig, FeatureStore,
    ModelFile, TrainReport, Validation,
};
use ltridp::preprocess;
use ltridp::svm::{KernelKind, KernelSpec, TrainConfig};
use ltridp::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_SINGLE_CLASS: u8 = 3;
const EXIT_DIM_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(name = "ltridp", version, about = "LTriDP texture classification pipeline")]
struct Cli {
    /// RNG seed for splits and solvers
    #[arg(long, global = true, env = "LTRIDP_SEED", default_value_t = 42)]
    seed: u64,

    /// Code histogram bins (256 or 50)
    #[arg(long, global = true, value_parser = parse_bins, default_value = "256")]
    bins: Bins,

    /// Shorthand for --bins 50 (150-dim features)
    #[arg(long, global = true)]
    compat150: bool,

    /// Worker threads for extraction
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

fn parse_bins(s: &str) -> Result<Bins, String> {
    match s {
        "256" => Ok(Bins::Full),
        "50" => Ok(Bins::Compat150),
        other => Err(format!("bins must be 256 or 50, got {other}")),
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Quadratic,
    Cubic,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValidationArg {
    Split70,
    Cv10,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum DescriptorArg {
    Ltridp,
    Lbp,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinearSolverArg {
    Primal,
    Smo,
}

#[derive(Args)]
struct PreprocessFlags {
    /// Skip the canonical 256x256 resize
    #[arg(long)]
    no_resize: bool,

    /// Skip histogram equalization
    #[arg(long)]
    no_equalize: bool,

    /// Apply min-max normalization before equalization
    #[arg(long)]
    normalize: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Extract features for a manifest into a feature store
    Extract {
        /// CSV manifest: `path,label` with labels bag/nobag
        manifest: PathBuf,
        /// Output feature store path
        out_store: PathBuf,
        #[command(flatten)]
        preprocess: PreprocessFlags,
        /// Descriptor to extract
        #[arg(long, value_enum, default_value_t = DescriptorArg::Ltridp)]
        descriptor: DescriptorArg,
    },
    /// Train an SVM on a feature store
    Train {
        store: PathBuf,
        model_out: PathBuf,
        #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
        kernel: KernelArg,
        /// Regularization parameter
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Gaussian kernel gamma (default 1/dim)
        #[arg(long)]
        gamma: Option<f64>,
        /// Polynomial kernel offset
        #[arg(long, default_value_t = 1.0)]
        coef0: f64,
        /// SMO KKT tolerance
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// SMO quiet passes before convergence
        #[arg(long, default_value_t = 10)]
        max_passes: usize,
        /// Primal solver steps (default 50 * n)
        #[arg(long)]
        epochs: Option<usize>,
        /// Solver for the linear kernel
        #[arg(long, value_enum, default_value_t = LinearSolverArg::Primal)]
        linear_solver: LinearSolverArg,
        #[arg(long, value_enum, default_value_t = ValidationArg::Split70)]
        validation: ValidationArg,
        /// Write the evaluation report JSON here instead of stdout
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Evaluate a model file against a feature store
    Eval {
        store: PathBuf,
        model: PathBuf,
        /// Write ROC points as CSV `fpr,tpr`
        #[arg(long)]
        roc_out: Option<PathBuf>,
        /// Write the report JSON here instead of stdout
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Classify one image with a trained model
    Predict { image: PathBuf, model: PathBuf },
    /// Dump code maps, feature vector and intensity histogram for one image
    Inspect {
        image: PathBuf,
        out_dir: PathBuf,
        #[command(flatten)]
        preprocess: PreprocessFlags,
    },
    /// Histogram-equalize an image, writing the result and its histogram
    Equalize {
        image: PathBuf,
        out_image: PathBuf,
        /// Write the 256-bin input histogram as CSV `level,count`
        #[arg(long)]
        histogram_out: Option<PathBuf>,
        /// Min-max normalize instead of equalizing
        #[arg(long)]
        normalize: bool,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SingleClass => EXIT_SINGLE_CLASS,
        Error::DimMismatch { .. } => EXIT_DIM_MISMATCH,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn extract_config(cli: &Cli, flags: &PreprocessFlags) -> ExtractConfig {
    let bins = if cli.compat150 { Bins::Compat150 } else { cli.bins };
    let mut cfg = ExtractConfig::new(bins);
    cfg.resize = !flags.no_resize;
    cfg.equalize = !flags.no_equalize;
    cfg.normalize = flags.normalize;
    cfg
}

fn write_or_print(json: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, json)
            .map_err(|source| Error::Io { path: path.clone(), source }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn print_confusion(report: &EvalReport) {
    let cm = &report.confusion;
    println!("confusion matrix (rows = truth, cols = predicted):");
    println!("{:>12} {:>8} {:>8}", "", "bag", "nobag");
    println!("{:>12} {:>8} {:>8}", "bag", cm.tp, cm.fn_);
    println!("{:>12} {:>8} {:>8}", "nobag", cm.fp, cm.tn);
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Extract { manifest, out_store, preprocess, descriptor } => {
            let mut cfg = extract_config(&cli, preprocess);
            cfg.descriptor = match descriptor {
                DescriptorArg::Ltridp => ltridp::pipeline::Descriptor::Ltridp,
                DescriptorArg::Lbp => ltridp::pipeline::Descriptor::Lbp,
            };
            let entries = load_manifest(manifest)?;
            let jobs = if cli.jobs == 0 {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            } else {
                cli.jobs
            };
            let store = extract_store(&entries, &cfg, jobs)?;
            store.save(out_store)?;
            eprintln!("wrote {} rows of dim {}", store.rows.len(), store.header.dim);
            Ok(())
        }
        Command::Train {
            store,
            model_out,
            kernel,
            c,
            gamma,
            coef0,
            tol,
            max_passes,
            epochs,
            linear_solver,
            validation,
            report_out,
        } => {
            let store = FeatureStore::load(store)?;
            let dim = store.header.dim;
            let kernel = match kernel {
                KernelArg::Linear => KernelSpec::linear(),
                KernelArg::Quadratic => KernelSpec::quadratic(*coef0),
                KernelArg::Cubic => KernelSpec::cubic(*coef0),
                KernelArg::Gaussian => {
                    KernelSpec::gaussian(gamma.unwrap_or(1.0 / dim as f64))
                }
            };
            let mut cfg = TrainConfig::new(kernel, cli.seed);
            cfg.c = *c;
            cfg.tol = *tol;
            cfg.max_passes = *max_passes;
            cfg.epochs = *epochs;
            cfg.use_primal = kernel.kind == KernelKind::Linear
                && matches!(linear_solver, LinearSolverArg::Primal);
            let validation = match validation {
                ValidationArg::Split70 => Validation::Split70,
                ValidationArg::Cv10 => Validation::Cv10,
                ValidationArg::None => Validation::None,
            };
            let (doc, report) = train_and_report(&store, &cfg, validation, cli.seed)?;
            doc.save(model_out)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_or_print(&json, report_out)?;
            if let TrainReport::Holdout(r) | TrainReport::Training(r) = &report {
                print_confusion(r);
            }
            Ok(())
        }
        Command::Eval { store, model, roc_out, report_out } => {
            let store = FeatureStore::load(store)?;
            let doc = ModelFile::load(model)?;
            let report = ltridp::pipeline::evaluate_store(&doc, &store)?;
            if let Some(path) = roc_out {
                let mut csv = String::from("fpr,tpr\n");
                for (fpr, tpr) in &report.roc {
                    csv.push_str(&format!("{fpr},{tpr}\n"));
                }
                std::fs::write(path, csv)
                    .map_err(|source| Error::Io { path: path.clone(), source })?;
            }
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_or_print(&json, report_out)?;
            print_confusion(&report);
            Ok(())
        }
        Command::Predict { image, model } => {
            let doc = ModelFile::load(model)?;
            let (label, value) = predict_image(&doc, image)?;
            println!("{label:+} {value}");
            Ok(())
        }
        Command::Inspect { image, out_dir, preprocess } => {
            let cfg = extract_config(&cli, preprocess);
            std::fs::create_dir_all(out_dir)
                .map_err(|source| Error::Io { path: out_dir.clone(), source })?;
            let mut img = load_image(image)?;
            if cfg.resize {
                img = ltridp::imaging::resize_bilinear(
                    &img,
                    ltridp::pipeline::CANONICAL_SIZE,
                    ltridp::pipeline::CANONICAL_SIZE,
                )?;
            }
            if cfg.normalize {
                img = preprocess::minmax_normalize(&img);
            }
            if cfg.equalize {
                img = preprocess::equalize(&img);
            }
            let maps = descriptor::code_maps(&img)?;
            for (name, map) in [
                ("pattern1.pgm", &maps.pattern1),
                ("pattern2.pgm", &maps.pattern2),
                ("magnitude.pgm", &maps.magnitude),
            ] {
                let plane = GrayImage::new(maps.width, maps.height, map.clone())?;
                save_pgm(&plane, &out_dir.join(name))?;
            }

            let feature = descriptor::extract_feature(&img, cfg.bins)?;
            let mut csv = String::from("index,value\n");
            for (i, v) in feature.iter().enumerate() {
                csv.push_str(&format!("{i},{v}\n"));
            }
            let path = out_dir.join("feature.csv");
            std::fs::write(&path, csv).map_err(|source| Error::Io { path, source })?;

            let hist = preprocess::compute_histogram(&img);
            let mut csv = String::from("level,count\n");
            for (level, count) in hist.counts.iter().enumerate() {
                csv.push_str(&format!("{level},{count}\n"));
            }
            let path = out_dir.join("histogram.csv");
            std::fs::write(&path, csv).map_err(|source| Error::Io { path, source })?;
            Ok(())
        }
        Command::Equalize { image, out_image, histogram_out, normalize } => {
            let img = load_image(image)?;
            let out = if *normalize {
                preprocess::minmax_normalize(&img)
            } else {
                preprocess::equalize(&img)
            };
            save_pgm(&out, out_image)?;
            if let Some(path) = histogram_out {
                let hist = preprocess::compute_histogram(&img);
                let mut csv = String::from("level,count\n");
                for (level, count) in hist.counts.iter().enumerate() {
                    csv.push_str(&format!("{level},{count}\n"));
                }
                std::fs::write(path, csv)
                    .map_err(|source| Error::Io { path: path.clone(), source })?;
            }
            Ok(())
        }
    }
}

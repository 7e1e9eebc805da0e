use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hodgeflow::learn::TrainConfig;
use hodgeflow::scnn::Nonlinearity;
use hodgeflow_cli::{
    cmd_build, cmd_decompose, cmd_eval, cmd_gradcheck, cmd_train, BuildConfig, DataSource,
    DecomposeConfig, EvalConfig, GradcheckConfig, ModelChoice, ModelShape, TrainCellConfig,
};

/// Simplicial convolutional networks over Hodge Laplacians: build complexes,
/// decompose signals, and train citation-imputation models.
#[derive(Parser)]
#[command(name = "hodgeflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a complex JSON file, compute its closure and print N_k counts.
    Build {
        /// Complex JSON: {"K": k, "simplices": [[v, ...], ...]}.
        #[arg(long)]
        input: PathBuf,
        /// Write the closed complex (same JSON schema, all simplices).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the per-order simplex counts.
        #[arg(long)]
        summary: bool,
    },
    /// Hodge-decompose a signal and emit components plus spectral embedding.
    Decompose {
        #[arg(long)]
        complex: PathBuf,
        /// Simplex order k of the signal.
        #[arg(long)]
        order: usize,
        /// Signal CSV, one value per line (optional header).
        #[arg(long)]
        signal: PathBuf,
        /// Components CSV; the embedding goes to <out>_embedding.csv.
        #[arg(long)]
        out: PathBuf,
        /// Relative eigenvalue threshold for the harmonic space.
        #[arg(long, default_value_t = 1e-8)]
        zero_tol: f64,
    },
    /// Compare analytic gradients against finite differences and exit
    /// nonzero if the worst relative error exceeds 1e-5.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeded configurations to check.
        #[arg(long, default_value_t = 10)]
        cases: usize,
    },
    /// Train one (order, rate, seed) cell and write its loss trace CSV.
    Train {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        order: usize,
        /// Missing-data rate in (0, 1).
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModelArg::Scnn)]
        model: ModelArg,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// Training config JSON (model shape, nonlinearity, lr, iters,
        /// seed); overrides the equivalent flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Loss-trace CSV destination.
        #[arg(long)]
        out: PathBuf,
        /// Also dump the imputation task as CSV index,target,mask,input.
        #[arg(long)]
        dump_task: Option<PathBuf>,
        /// Also save the trained model as JSON.
        #[arg(long)]
        save_model: Option<PathBuf>,
    },
    /// Sweep rates x seeds x models; write results.csv and summary.csv.
    Eval {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long)]
        order: usize,
        /// Missing rates, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3, 0.4, 0.5])]
        rate: Vec<f64>,
        /// Seeds, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = (0..10).collect::<Vec<u64>>())]
        seed: Vec<u64>,
        /// Models to train on the same tasks (paired rows).
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![ModelArg::Scnn, ModelArg::Snn])]
        model: Vec<ModelArg>,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// Output directory for results.csv and summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Coauthorship dataset JSON ({"K": k, "papers": [...]}); mutually
    /// exclusive with the synthetic generator.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Synthetic generator: number of authors.
    #[arg(long)]
    synth_authors: Option<usize>,
    /// Synthetic generator: number of papers.
    #[arg(long)]
    synth_papers: Option<usize>,
    /// Synthetic generator: maximum simplex order K.
    #[arg(long, default_value_t = 3)]
    synth_kmax: usize,
    /// Synthetic generator seed.
    #[arg(long, default_value_t = 0)]
    synth_seed: u64,
}

impl SourceArgs {
    fn resolve(&self) -> Result<DataSource> {
        match (&self.dataset, self.synth_authors, self.synth_papers) {
            (Some(path), None, None) => Ok(DataSource::Dataset(path.clone())),
            (None, Some(authors), Some(papers)) => Ok(DataSource::Synth {
                authors,
                papers,
                k_max: self.synth_kmax,
                seed: self.synth_seed,
            }),
            (Some(_), _, _) => bail!("--dataset conflicts with --synth-* options"),
            _ => bail!("provide either --dataset or both --synth-authors and --synth-papers"),
        }
    }
}

#[derive(Args)]
struct ShapeArgs {
    /// Number of layers P.
    #[arg(long, default_value_t = 3)]
    layers: usize,
    /// Features per intermediate layer F.
    #[arg(long, default_value_t = 30)]
    features: usize,
    /// Lower filter order L1.
    #[arg(long, default_value_t = 2)]
    l1: usize,
    /// Upper filter order L2.
    #[arg(long, default_value_t = 2)]
    l2: usize,
    #[arg(long, value_enum, default_value_t = NonlinearityArg::LeakyRelu)]
    nonlinearity: NonlinearityArg,
    /// Negative-side slope for leaky-relu.
    #[arg(long, default_value_t = 0.01)]
    slope: f64,
}

impl ShapeArgs {
    fn resolve(&self) -> ModelShape {
        ModelShape {
            layers: self.layers,
            features: self.features,
            lower: self.l1,
            upper: self.l2,
            nonlinearity: match self.nonlinearity {
                NonlinearityArg::Identity => Nonlinearity::Identity,
                NonlinearityArg::Tanh => Nonlinearity::Tanh,
                NonlinearityArg::LeakyRelu => Nonlinearity::LeakyRelu { slope: self.slope },
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NonlinearityArg {
    Identity,
    Tanh,
    LeakyRelu,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Scnn,
    Snn,
}

impl From<ModelArg> for ModelChoice {
    fn from(arg: ModelArg) -> Self {
        match arg {
            ModelArg::Scnn => ModelChoice::Scnn,
            ModelArg::Snn => ModelChoice::Snn,
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Build { input, out, summary } => {
            let text = cmd_build(&BuildConfig {
                input,
                out,
                summary,
            })?;
            if summary {
                println!("{text}");
            }
        }
        Command::Decompose {
            complex,
            order,
            signal,
            out,
            zero_tol,
        } => {
            cmd_decompose(&DecomposeConfig {
                complex,
                order,
                signal,
                out,
                zero_tol,
            })?;
        }
        Command::Gradcheck { seed, cases } => {
            let report = cmd_gradcheck(&GradcheckConfig { seed, cases })?;
            println!(
                "max relative error {:.3e} over {} coordinates ({} kink-skipped)",
                report.max_rel_error, report.checked, report.skipped
            );
            if report.max_rel_error > 1e-5 {
                eprintln!("gradient check FAILED (bound 1e-5)");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Train {
            source,
            shape,
            order,
            rate,
            seed,
            model,
            lr,
            iters,
            config,
            out,
            dump_task,
            save_model,
        } => {
            let mut cell = TrainCellConfig {
                source: source.resolve()?,
                order,
                rate,
                seed,
                model: model.into(),
                shape: shape.resolve(),
                train: TrainConfig { lr, iters },
                out,
                dump_task,
                save_model,
            };
            if let Some(path) = config {
                let spec: hodgeflow::learn::TrainSpec =
                    serde_json::from_str(&std::fs::read_to_string(&path)?)?;
                cell.apply_spec(&spec);
            }
            let (final_loss, accuracy) = cmd_train(&cell)?;
            println!("final_loss={final_loss} accuracy={accuracy}");
        }
        Command::Eval {
            source,
            shape,
            order,
            rate,
            seed,
            model,
            lr,
            iters,
            out,
        } => {
            let results = cmd_eval(&EvalConfig {
                source: source.resolve()?,
                order,
                rates: rate,
                seeds: seed,
                models: model.into_iter().map(Into::into).collect(),
                shape: shape.resolve(),
                train: TrainConfig { lr, iters },
                out_dir: out.clone(),
            })?;
            println!(
                "wrote {} cells to {} (results.csv, summary.csv)",
                results.len(),
                out.display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

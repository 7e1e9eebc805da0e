//! Plain configuration structs shared by the binary and the tests.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hodgeflow::learn::{TrainConfig, TrainSpec};
use hodgeflow::scnn::{FilterSpec, Nonlinearity};

/// Which architecture an experiment cell trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelChoice {
    Scnn,
    Snn,
}

impl ModelChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelChoice::Scnn => "scnn",
            ModelChoice::Snn => "snn",
        }
    }
}

impl fmt::Display for ModelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scnn" => Ok(ModelChoice::Scnn),
            "snn" => Ok(ModelChoice::Snn),
            other => Err(format!("unknown model '{other}' (expected scnn or snn)")),
        }
    }
}

/// Architecture shape shared by both models: the tied baseline gets the same
/// coefficient budget 1 + l1 + l2 as the free filter.
#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub layers: usize,
    pub features: usize,
    pub lower: usize,
    pub upper: usize,
    pub nonlinearity: Nonlinearity,
}

impl ModelShape {
    pub fn filter_spec(&self, choice: ModelChoice) -> FilterSpec {
        match choice {
            ModelChoice::Scnn => FilterSpec::Scnn {
                lower: self.lower,
                upper: self.upper,
            },
            ModelChoice::Snn => FilterSpec::Snn {
                degree: self.lower + self.upper,
            },
        }
    }
}

/// Where the dataset comes from: a JSON file or the synthetic generator.
#[derive(Debug, Clone)]
pub enum DataSource {
    Dataset(PathBuf),
    Synth {
        authors: usize,
        papers: usize,
        k_max: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub input: PathBuf,
    pub out: Option<PathBuf>,
    pub summary: bool,
}

#[derive(Debug, Clone)]
pub struct DecomposeConfig {
    pub complex: PathBuf,
    pub order: usize,
    pub signal: PathBuf,
    pub out: PathBuf,
    pub zero_tol: f64,
}

#[derive(Debug, Clone)]
pub struct GradcheckConfig {
    pub seed: u64,
    pub cases: usize,
}

#[derive(Debug, Clone)]
pub struct TrainCellConfig {
    pub source: DataSource,
    pub order: usize,
    pub rate: f64,
    pub seed: u64,
    pub model: ModelChoice,
    pub shape: ModelShape,
    pub train: TrainConfig,
    /// Loss-trace CSV destination.
    pub out: PathBuf,
    pub dump_task: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
}

impl TrainCellConfig {
    /// Overrides model shape and training settings from a config-file spec.
    pub fn apply_spec(&mut self, spec: &TrainSpec) {
        // The tied model's degree is carried as the l1 + l2 budget.
        let (model, lower, upper) = match spec.filter {
            FilterSpec::Scnn { lower, upper } => (ModelChoice::Scnn, lower, upper),
            FilterSpec::Snn { degree } => (ModelChoice::Snn, degree, 0),
        };
        self.model = model;
        self.shape = ModelShape {
            layers: spec.layers,
            features: spec.features,
            lower,
            upper,
            nonlinearity: spec.nonlinearity,
        };
        self.train = TrainConfig {
            lr: spec.lr,
            iters: spec.iters,
        };
        self.seed = spec.seed;
    }
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub source: DataSource,
    pub order: usize,
    pub rates: Vec<f64>,
    pub seeds: Vec<u64>,
    pub models: Vec<ModelChoice>,
    pub shape: ModelShape,
    pub train: TrainConfig,
    /// Directory receiving results.csv and summary.csv.
    pub out_dir: PathBuf,
}

/// One trained (order, rate, seed, model) cell of an evaluation sweep.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub order: usize,
    pub rate: f64,
    pub seed: u64,
    pub model: ModelChoice,
    pub accuracy: f64,
    pub final_loss: f64,
    pub trace: Vec<f64>,
}

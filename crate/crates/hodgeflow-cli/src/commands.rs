//! Command implementations: each takes a config struct, writes its artifacts
//! and returns the values the caller may want to assert on or print.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};

use hodgeflow::complex::SimplicialComplex;
use hodgeflow::data::{
    load_coauthorship, make_task, synth_coauthorship, synth_complex, synth_signal,
    task_from_signal, CoauthorshipDataset, SignalKind,
};
use hodgeflow::learn::{gradient_check, train, GradCheckReport, TrainConfig};
use hodgeflow::scnn::{init_model, model_output, FilterSpec, Nonlinearity};
use hodgeflow::spectral::{hodge_basis, hodge_components, sft};

use crate::config::{
    BuildConfig, CellResult, DataSource, DecomposeConfig, EvalConfig, GradcheckConfig,
    ModelChoice, TrainCellConfig,
};

/// Loads a complex file, computes its closure, optionally writes the closed
/// complex, and returns the summary line `N: n0 n1 ...`.
pub fn cmd_build(cfg: &BuildConfig) -> Result<String> {
    let complex = SimplicialComplex::from_json_file(&cfg.input)
        .with_context(|| format!("reading complex from {}", cfg.input.display()))?;
    if let Some(out) = &cfg.out {
        complex
            .to_json_file(out)
            .with_context(|| format!("writing complex to {}", out.display()))?;
    }
    let counts: Vec<String> = complex.counts().iter().map(ToString::to_string).collect();
    Ok(format!("N: {}", counts.join(" ")))
}

fn read_signal_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading signal from {}", path.display()))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 0 && trimmed.parse::<f64>().is_err()) {
            continue; // header or blank line
        }
        values.push(
            trimmed
                .parse::<f64>()
                .with_context(|| format!("line {} is not a number: '{trimmed}'", lineno + 1))?,
        );
    }
    Ok(values)
}

/// Decomposes a signal into gradient, curl and harmonic parts; writes the
/// per-simplex components to `out` and the spectral embedding (with its
/// frequencies) to `<out stem>_embedding.csv`.
pub fn cmd_decompose(cfg: &DecomposeConfig) -> Result<()> {
    let complex = SimplicialComplex::from_json_file(&cfg.complex)?;
    let signal = read_signal_csv(&cfg.signal)?;
    let n = complex.num_simplices(cfg.order);
    if signal.len() != n {
        bail!(
            "signal has {} entries but order {} has {} simplices",
            signal.len(),
            cfg.order,
            n
        );
    }
    let lap = complex.laplacians(cfg.order)?;
    let basis = hodge_basis(&lap, cfg.zero_tol)?;
    let parts = hodge_components(&basis, &signal)?;
    let embedding = sft(&basis, &signal)?;

    let mut out = fs::File::create(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))?;
    writeln!(out, "index,signal,gradient,curl,harmonic")?;
    for i in 0..n {
        writeln!(
            out,
            "{},{},{},{},{}",
            i, signal[i], parts.gradient[i], parts.curl[i], parts.harmonic[i]
        )?;
    }

    let embedding_path = sibling_path(&cfg.out, "_embedding.csv");
    let mut emb = fs::File::create(&embedding_path)
        .with_context(|| format!("creating {}", embedding_path.display()))?;
    writeln!(emb, "block,frequency,coefficient")?;
    for c in &embedding.harmonic {
        writeln!(emb, "harmonic,0,{c}")?;
    }
    for (f, c) in basis.gradient_freqs.iter().zip(&embedding.gradient) {
        writeln!(emb, "gradient,{f},{c}")?;
    }
    for (f, c) in basis.curl_freqs.iter().zip(&embedding.curl) {
        writeln!(emb, "curl,{f},{c}")?;
    }
    Ok(())
}

fn sibling_path(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Runs the finite-difference gradient suite over seeded configurations and
/// returns the worst report (callers compare against the 1e-5 bound).
pub fn cmd_gradcheck(cfg: &GradcheckConfig) -> Result<GradCheckReport> {
    let mut worst = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for case in 0..cfg.cases as u64 {
        let seed = cfg.seed + case;
        // Small complexes and orders <= 2 keep the loss-to-gradient ratio
        // low enough for the central difference to resolve 1e-5.
        let complex = synth_complex(8, 0.4, 2, seed);
        let k = 1;
        let lap = complex.laplacians(k)?;
        let spec = if case % 2 == 0 {
            FilterSpec::Scnn {
                lower: 1 + (case % 2) as usize,
                upper: 2,
            }
        } else {
            FilterSpec::Snn {
                degree: 1 + (case % 2) as usize,
            }
        };
        let nonlinearity = match case % 3 {
            0 => Nonlinearity::Identity,
            1 => Nonlinearity::Tanh,
            _ => Nonlinearity::LeakyRelu { slope: 0.01 },
        };
        let model = init_model(
            k,
            2 + (case % 2) as usize,
            2 + (case % 3) as usize,
            spec,
            nonlinearity,
            seed + 1000,
        );
        let mut signal = synth_signal(&complex, k, SignalKind::CitationLike, seed + 2000)?;
        // Unit-scale the signal: the check compares derivatives, and a
        // well-conditioned loss keeps the difference quotient meaningful.
        let peak = signal.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for v in &mut signal {
            *v /= peak;
        }
        let task = task_from_signal(&signal, k, 0.2, seed + 3000)?;
        let report = gradient_check(&lap, &model, &task, 1e-6, 1e-4)?;
        worst.checked += report.checked;
        worst.skipped += report.skipped;
        worst.max_rel_error = worst.max_rel_error.max(report.max_rel_error);
    }
    Ok(worst)
}

fn load_source(source: &DataSource) -> Result<CoauthorshipDataset> {
    match source {
        DataSource::Dataset(path) => load_coauthorship(path)
            .with_context(|| format!("loading dataset from {}", path.display())),
        DataSource::Synth {
            authors,
            papers,
            k_max,
            seed,
        } => Ok(synth_coauthorship(*authors, *papers, *k_max, *seed)?),
    }
}

struct TrainedCell {
    accuracy: f64,
    final_loss: f64,
    trace: Vec<f64>,
    model: hodgeflow::ScnnModel,
}

fn train_cell(
    dataset: &CoauthorshipDataset,
    lap: &hodgeflow::complex::LaplacianSet,
    order: usize,
    rate: f64,
    seed: u64,
    choice: ModelChoice,
    shape: &crate::config::ModelShape,
    train_cfg: &TrainConfig,
) -> Result<TrainedCell> {
    let task = make_task(dataset, order, rate, seed)?;
    let mut model = init_model(
        order,
        shape.layers,
        shape.features,
        shape.filter_spec(choice),
        shape.nonlinearity,
        seed,
    );
    let trace = train(lap, &mut model, &task, train_cfg)?;
    let prediction = model_output(lap, &model, &task.input)?;
    let accuracy = hodgeflow::data::accuracy(&prediction, &task.target, &task.missing())?;
    let final_loss = trace.last().copied().unwrap_or(f64::NAN);
    Ok(TrainedCell {
        accuracy,
        final_loss,
        trace,
        model,
    })
}

/// Trains one (order, rate, seed, model) cell and writes the loss trace as
/// CSV `iter,loss`; returns (final loss, accuracy on the missing entries).
pub fn cmd_train(cfg: &TrainCellConfig) -> Result<(f64, f64)> {
    let dataset = load_source(&cfg.source)?;
    let lap = dataset.complex.laplacians(cfg.order)?;
    if let Some(path) = &cfg.dump_task {
        let task = make_task(&dataset, cfg.order, cfg.rate, cfg.seed)?;
        let file = fs::File::create(path)?;
        task.write_csv(file)?;
    }
    let cell = train_cell(
        &dataset, &lap, cfg.order, cfg.rate, cfg.seed, cfg.model, &cfg.shape, &cfg.train,
    )?;

    let mut out = fs::File::create(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))?;
    writeln!(out, "iter,loss")?;
    for (i, loss) in cell.trace.iter().enumerate() {
        writeln!(out, "{i},{loss}")?;
    }
    if let Some(path) = &cfg.save_model {
        fs::write(path, cell.model.to_json()?)?;
    }
    Ok((cell.final_loss, cell.accuracy))
}

/// Sweeps rates x seeds x models, writing `results.csv`
/// (order,rate,seed,model,accuracy) and `summary.csv` with mean and standard
/// deviation per (rate, model). Cells run in parallel; HODGEFLOW_THREADS
/// caps the worker count.
pub fn cmd_eval(cfg: &EvalConfig) -> Result<Vec<CellResult>> {
    let dataset = load_source(&cfg.source)?;
    let results = run_eval(&dataset, cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_results(&results, &cfg.out_dir)?;
    Ok(results)
}

/// The sweep itself, on an already-loaded dataset.
pub fn run_eval(dataset: &CoauthorshipDataset, cfg: &EvalConfig) -> Result<Vec<CellResult>> {
    use rayon::prelude::*;

    if cfg.seeds.is_empty() || cfg.rates.is_empty() || cfg.models.is_empty() {
        bail!("eval needs at least one seed, rate and model");
    }
    let lap = dataset.complex.laplacians(cfg.order)?;
    let mut cells = Vec::new();
    for &rate in &cfg.rates {
        for &seed in &cfg.seeds {
            for &model in &cfg.models {
                cells.push((rate, seed, model));
            }
        }
    }

    let run_all = || -> Result<Vec<CellResult>> {
        cells
            .par_iter()
            .map(|&(rate, seed, model)| {
                let cell = train_cell(
                    dataset, &lap, cfg.order, rate, seed, model, &cfg.shape, &cfg.train,
                )?;
                log::info!(
                    "cell order={} rate={} seed={} model={} accuracy={:.4} final_loss={:.3}",
                    cfg.order, rate, seed, model, cell.accuracy, cell.final_loss
                );
                Ok(CellResult {
                    order: cfg.order,
                    rate,
                    seed,
                    model,
                    accuracy: cell.accuracy,
                    final_loss: cell.final_loss,
                    trace: cell.trace,
                })
            })
            .collect()
    };

    let mut results = match thread_cap()? {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building thread pool")?
            .install(run_all),
        None => run_all(),
    }?;

    results.sort_by(|a, b| {
        (a.order, a.rate, a.seed, a.model)
            .partial_cmp(&(b.order, b.rate, b.seed, b.model))
            .expect("rates are finite")
    });
    Ok(results)
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("HODGEFLOW_THREADS") {
        Ok(raw) => {
            let threads: usize = raw
                .parse()
                .with_context(|| format!("HODGEFLOW_THREADS='{raw}' is not a number"))?;
            Ok(Some(threads.max(1)))
        }
        Err(_) => Ok(None),
    }
}

/// Writes `results.csv` and the mean +- std aggregation `summary.csv`.
pub fn write_results(results: &[CellResult], out_dir: &Path) -> Result<()> {
    let mut file = fs::File::create(out_dir.join("results.csv"))?;
    writeln!(file, "order,rate,seed,model,accuracy")?;
    for r in results {
        writeln!(file, "{},{},{},{},{}", r.order, r.rate, r.seed, r.model, r.accuracy)?;
    }

    let mut groups: Vec<((usize, String, ModelChoice), Vec<f64>)> = Vec::new();
    for r in results {
        let key = (r.order, format!("{}", r.rate), r.model);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, accs)) => accs.push(r.accuracy),
            None => groups.push((key, vec![r.accuracy])),
        }
    }
    let mut file = fs::File::create(out_dir.join("summary.csv"))?;
    writeln!(file, "order,rate,model,mean_accuracy,std_accuracy,seeds")?;
    for ((order, rate, model), accs) in groups {
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        // Sample standard deviation over the seeds; 0 for a single seed.
        let std = if accs.len() > 1 {
            (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        writeln!(file, "{order},{rate},{model},{mean},{std},{}", accs.len())?;
    }
    Ok(())
}

//! Coauthorship complexes with citation signals, imputation tasks, the
//! accuracy metric, and synthetic generators for desk-scale experiments.
//!
//! A paper with k+1 authors is a k-simplex carrying its citation count;
//! faces created only by the downward closure carry zero. Papers whose
//! author sets coincide sum their citations; papers with more than K+1
//! authors are skipped with a warning.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{build_complex, ComplexError, SimplicialComplex, Vertex};

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
    #[error("unsupported file format version {found} (expected 1)")]
    WrongFormat { found: u32 },
    #[error("paper {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("dataset contains no papers")]
    EmptyDataset,
    #[error("order {k} has no simplices")]
    EmptyOrder { k: usize },
    #[error("missing rate {rate} outside (0, 1)")]
    InvalidRate { rate: f64 },
    #[error("no missing entries to score")]
    EmptyMissingSet,
    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("signal kind {kind:?} is undefined at order {k} for this complex")]
    UndefinedSignal { kind: SignalKind, k: usize },
}

/// A simplicial complex with one nonnegative citation signal per order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoauthorshipDataset {
    pub complex: SimplicialComplex,
    signals: Vec<Vec<f64>>,
}

impl CoauthorshipDataset {
    pub fn signal(&self, k: usize) -> &[f64] {
        &self.signals[k]
    }
}

/// One paper: its author ids and citation count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaperRecord {
    pub authors: Vec<Vertex>,
    pub citations: f64,
}

/// On-disk coauthorship format.
#[derive(Debug, Serialize, Deserialize)]
pub struct CoauthorshipFile {
    #[serde(default = "default_format")]
    pub format: u32,
    #[serde(rename = "K")]
    pub k_max: usize,
    pub papers: Vec<PaperRecord>,
}

fn default_format() -> u32 {
    1
}

/// Loads a coauthorship dataset from JSON
/// (`{"format": 1, "K": k, "papers": [{"authors": [..], "citations": c}, ..]}`).
pub fn load_coauthorship(path: &Path) -> Result<CoauthorshipDataset, DataError> {
    let file: CoauthorshipFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if file.format != 1 {
        return Err(DataError::WrongFormat {
            found: file.format,
        });
    }
    dataset_from_papers(&file.papers, file.k_max)
}

/// Builds the complex and citation signals from paper records: the complex
/// is the downward closure of the author sets, each simplex's signal is the
/// citation sum of the papers mapping exactly onto it.
pub fn dataset_from_papers(
    papers: &[PaperRecord],
    k_max: usize,
) -> Result<CoauthorshipDataset, DataError> {
    if papers.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let mut kept: BTreeMap<Vec<Vertex>, f64> = BTreeMap::new();
    for (index, paper) in papers.iter().enumerate() {
        let mut authors = paper.authors.clone();
        authors.sort_unstable();
        authors.dedup();
        if authors.is_empty() {
            return Err(DataError::MalformedRecord {
                index,
                reason: "paper has no authors".into(),
            });
        }
        if !paper.citations.is_finite() || paper.citations < 0.0 {
            return Err(DataError::MalformedRecord {
                index,
                reason: format!("citation count {} is not a nonnegative number", paper.citations),
            });
        }
        if authors.len() > k_max + 1 {
            // Each paper belongs to exactly one simplex; an oversized author
            // set has no (K+1)-subset to own its citations, so it is dropped.
            log::warn!(
                "skipping paper {index}: {} authors exceed K+1={}",
                authors.len(),
                k_max + 1
            );
            continue;
        }
        *kept.entry(authors).or_insert(0.0) += paper.citations;
    }
    if kept.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let simplex_list: Vec<Vec<Vertex>> = kept.keys().cloned().collect();
    let complex = build_complex(&simplex_list, k_max)?;
    let mut signals: Vec<Vec<f64>> = (0..=k_max)
        .map(|k| vec![0.0; complex.num_simplices(k)])
        .collect();
    for (authors, citations) in &kept {
        let k = authors.len() - 1;
        let i = complex
            .index_of(k, authors)
            .expect("paper simplex present by construction");
        signals[k][i] = *citations;
    }
    Ok(CoauthorshipDataset { complex, signals })
}

/// A signal-imputation problem: the true signal, the known-entry mask, and
/// the median-filled input.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputationTask {
    pub order: usize,
    /// True signal values.
    pub target: Vec<f64>,
    /// true = known during training, false = missing.
    pub mask: Vec<bool>,
    /// target where known, median of known values elsewhere.
    pub input: Vec<f64>,
    /// Requested missing fraction.
    pub rate: f64,
}

impl ImputationTask {
    /// Indicator of the missing entries (complement of the mask).
    pub fn missing(&self) -> Vec<bool> {
        self.mask.iter().map(|&m| !m).collect()
    }

    /// Dumps the task as CSV rows `index,target,mask,input`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,target,mask,input")?;
        for i in 0..self.target.len() {
            writeln!(
                w,
                "{},{},{},{}",
                i,
                self.target[i],
                u8::from(self.mask[i]),
                self.input[i]
            )?;
        }
        Ok(())
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Builds an imputation task from an explicit signal: `floor(rate * N)`
/// entries drawn uniformly without replacement are marked missing and
/// replaced by the median of the known values.
pub fn task_from_signal(
    signal: &[f64],
    order: usize,
    rate: f64,
    seed: u64,
) -> Result<ImputationTask, DataError> {
    if signal.is_empty() {
        return Err(DataError::EmptyOrder { k: order });
    }
    if !(0.0..1.0).contains(&rate) || rate <= 0.0 {
        return Err(DataError::InvalidRate { rate });
    }
    let n = signal.len();
    let num_missing = (rate * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![true; n];
    for idx in rand::seq::index::sample(&mut rng, n, num_missing) {
        mask[idx] = false;
    }
    let mut known: Vec<f64> = signal
        .iter()
        .zip(&mask)
        .filter(|&(_, &m)| m)
        .map(|(&v, _)| v)
        .collect();
    let fill = median(&mut known);
    let input = signal
        .iter()
        .zip(&mask)
        .map(|(&v, &m)| if m { v } else { fill })
        .collect();
    Ok(ImputationTask {
        order,
        target: signal.to_vec(),
        mask,
        input,
        rate,
    })
}

/// Imputation task over the dataset's order-k citation signal.
pub fn make_task(
    dataset: &CoauthorshipDataset,
    k: usize,
    rate: f64,
    seed: u64,
) -> Result<ImputationTask, DataError> {
    task_from_signal(dataset.signal(k), k, rate, seed)
}

/// Fraction of missing entries whose prediction falls within +-5% of the
/// true value; a zero target counts as correct iff |pred| <= 0.05 (the
/// relative band degenerates to a point there, so an absolute band of the
/// same width is used).
pub fn accuracy(pred: &[f64], target: &[f64], missing: &[bool]) -> Result<f64, DataError> {
    if pred.len() != target.len() || pred.len() != missing.len() {
        return Err(DataError::LengthMismatch {
            what: "accuracy",
            expected: pred.len(),
            got: target.len().min(missing.len()),
        });
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    for ((&p, &t), &miss) in pred.iter().zip(target).zip(missing) {
        if !miss {
            continue;
        }
        total += 1;
        let ok = if t == 0.0 {
            p.abs() <= 0.05
        } else {
            (p - t).abs() <= 0.05 * t.abs()
        };
        if ok {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(DataError::EmptyMissingSet);
    }
    Ok(correct as f64 / total as f64)
}

/// Edge list of a seeded Erdos-Renyi graph G(n, p) on vertices 0..n.
pub fn er_edges(n_vertices: usize, edge_prob: f64, seed: u64) -> Vec<(Vertex, Vertex)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n_vertices {
        for v in (u + 1)..n_vertices {
            if rng.random::<f64>() < edge_prob {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Clique complex (up to order `k_max`) of a seeded Erdos-Renyi graph; all
/// vertices are included even when isolated.
pub fn synth_complex(
    n_vertices: usize,
    edge_prob: f64,
    k_max: usize,
    seed: u64,
) -> SimplicialComplex {
    let edges = er_edges(n_vertices, edge_prob, seed);
    let mut adjacency = vec![vec![false; n_vertices]; n_vertices];
    for &(u, v) in &edges {
        adjacency[u][v] = true;
        adjacency[v][u] = true;
    }

    let mut simplices: Vec<Vec<Vertex>> = (0..n_vertices).map(|v| vec![v]).collect();
    // Grow cliques one vertex at a time; extensions keep vertices ascending.
    let mut current: Vec<Vec<Vertex>> = edges.iter().map(|&(u, v)| vec![u, v]).collect();
    simplices.extend(current.iter().cloned());
    for _ in 2..=k_max {
        let mut next = Vec::new();
        for clique in &current {
            let last = *clique.last().unwrap();
            for v in (last + 1)..n_vertices {
                if clique.iter().all(|&u| adjacency[u][v]) {
                    let mut bigger = clique.clone();
                    bigger.push(v);
                    next.push(bigger);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        simplices.extend(next.iter().cloned());
        current = next;
    }
    build_complex(&simplices, k_max).expect("cliques are bounded by k_max + 1 vertices")
}

/// Families of synthetic k-simplicial signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    /// A smoothed signal in the gradient space im(B_k^T); requires k >= 1.
    SmoothGradient,
    /// A smoothed signal in the curl space im(B_{k+1}); requires k < K.
    SmoothCurl,
    /// Nonnegative heavy-tailed integers: rounded log-normal values whose
    /// log-mean averages per-vertex latents, so values correlate along
    /// shared authors.
    CitationLike,
}

/// Draws a synthetic signal on the k-simplices; deterministic per seed.
pub fn synth_signal(
    complex: &SimplicialComplex,
    k: usize,
    kind: SignalKind,
    seed: u64,
) -> Result<Vec<f64>, DataError> {
    let n = complex.num_simplices(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    match kind {
        SignalKind::SmoothGradient => {
            if k == 0 {
                return Err(DataError::UndefinedSignal { kind, k });
            }
            let source: Vec<f64> = (0..complex.num_simplices(k - 1))
                .map(|_| normal.sample(&mut rng))
                .collect();
            let incidence = complex.incidence(k)?.to_sparse();
            let raw = incidence.transpose().spmv(&source)?;
            let lap = complex.laplacians(k)?;
            Ok(low_pass(&lap.lower, &raw))
        }
        SignalKind::SmoothCurl => {
            if k >= complex.order() {
                return Err(DataError::UndefinedSignal { kind, k });
            }
            let source: Vec<f64> = (0..complex.num_simplices(k + 1))
                .map(|_| normal.sample(&mut rng))
                .collect();
            let incidence = complex.incidence(k + 1)?.to_sparse();
            let raw = incidence.spmv(&source)?;
            let lap = complex.laplacians(k)?;
            Ok(low_pass(&lap.upper, &raw))
        }
        SignalKind::CitationLike => {
            let latents = vertex_latents(complex, &mut rng);
            Ok((0..n)
                .map(|i| {
                    let simplex = complex.simplex(k, i);
                    let mean =
                        simplex.iter().map(|v| latents[v]).sum::<f64>() / simplex.len() as f64;
                    let log_value = mean + 0.4 * normal.sample(&mut rng);
                    log_value.exp().round().max(0.0)
                })
                .collect())
        }
    }
}

fn vertex_latents(
    complex: &SimplicialComplex,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<Vertex, f64> {
    let normal = Normal::new(3.0, 0.8).expect("valid parameters");
    complex
        .simplices(0)
        .iter()
        .map(|s| (s[0], normal.sample(rng)))
        .collect()
}

/// Two damped-shift smoothing rounds, `x <- x - L x / bound`, with the
/// Gershgorin row-sum bound; attenuates high frequencies while staying in
/// the operator's invariant subspace.
fn low_pass(lap: &crate::linalg::SparseMatrix, x: &[f64]) -> Vec<f64> {
    let mut bound: f64 = 0.0;
    for r in 0..lap.rows() {
        let (_, vals) = lap.row(r);
        bound = bound.max(vals.iter().map(|v| v.abs()).sum());
    }
    if bound == 0.0 {
        return x.to_vec();
    }
    let mut out = x.to_vec();
    for _ in 0..2 {
        let shifted = lap.spmv(&out).expect("dimensions fixed");
        for (o, s) in out.iter_mut().zip(&shifted) {
            *o -= s / bound;
        }
    }
    out
}

/// A synthetic coauthorship dataset: papers draw 1..=K+1 authors uniformly;
/// citations come from the same per-author latent model as
/// [`SignalKind::CitationLike`], so coauthored papers correlate.
pub fn synth_coauthorship(
    n_authors: usize,
    n_papers: usize,
    k_max: usize,
    seed: u64,
) -> Result<CoauthorshipDataset, DataError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let quality = Normal::new(3.0, 0.8).expect("valid parameters");
    let latents: Vec<f64> = (0..n_authors).map(|_| quality.sample(&mut rng)).collect();

    let mut papers = Vec::with_capacity(n_papers);
    for _ in 0..n_papers {
        let size = rng.random_range(1..=(k_max + 1).min(n_authors));
        let authors: Vec<Vertex> = rand::seq::index::sample(&mut rng, n_authors, size).into_vec();
        let mean = authors.iter().map(|&a| latents[a]).sum::<f64>() / size as f64;
        let citations = (mean + 0.4 * normal.sample(&mut rng)).exp().round().max(0.0);
        papers.push(PaperRecord { authors, citations });
    }
    dataset_from_papers(&papers, k_max)
}

/// Writes a dataset back to the JSON format, one record per simplex with its
/// signal value; reloading reproduces the complex and signals exactly.
pub fn write_coauthorship(dataset: &CoauthorshipDataset, path: &Path) -> Result<(), DataError> {
    let mut papers = Vec::new();
    for k in 0..=dataset.complex.order() {
        for (i, simplex) in dataset.complex.simplices(k).iter().enumerate() {
            papers.push(PaperRecord {
                authors: simplex.clone(),
                citations: dataset.signals[k][i],
            });
        }
    }
    let file = CoauthorshipFile {
        format: 1,
        k_max: dataset.complex.order(),
        papers,
    };
    serde_json::to_writer_pretty(std::io::BufWriter::new(File::create(path)?), &file)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_rule_assigns_signal_to_exact_simplex() {
        let papers = vec![
            PaperRecord {
                authors: vec![1, 2],
                citations: 10.0,
            },
            PaperRecord {
                authors: vec![1, 2, 3],
                citations: 5.0,
            },
        ];
        let ds = dataset_from_papers(&papers, 2).unwrap();
        assert_eq!(ds.complex.counts(), vec![3, 3, 1]);
        let edge = ds.complex.index_of(1, &[1, 2]).unwrap();
        assert_eq!(ds.signal(1)[edge], 10.0);
        assert_eq!(ds.signal(2), &[5.0]);
        for (i, &v) in ds.signal(1).iter().enumerate() {
            if i != edge {
                assert_eq!(v, 0.0, "closure-only edges carry zero");
            }
        }
    }

    #[test]
    fn empty_paper_list_is_rejected() {
        assert!(matches!(
            dataset_from_papers(&[], 2),
            Err(DataError::EmptyDataset)
        ));
    }

    #[test]
    fn oversized_papers_are_skipped() {
        let papers = vec![
            PaperRecord {
                authors: vec![1, 2, 3, 4],
                citations: 100.0,
            },
            PaperRecord {
                authors: vec![1, 2],
                citations: 7.0,
            },
        ];
        let ds = dataset_from_papers(&papers, 1).unwrap();
        assert_eq!(ds.complex.counts(), vec![2, 1]);
        assert_eq!(ds.signal(1), &[7.0]);
        let total: f64 = ds.signals.iter().flatten().sum();
        assert_eq!(total, 7.0, "skipped citations contribute no signal mass");
    }

    #[test]
    fn duplicate_author_sets_sum_citations() {
        let papers = vec![
            PaperRecord {
                authors: vec![2, 1],
                citations: 3.0,
            },
            PaperRecord {
                authors: vec![1, 2],
                citations: 4.0,
            },
        ];
        let ds = dataset_from_papers(&papers, 1).unwrap();
        assert_eq!(ds.signal(1), &[7.0]);
    }

    #[test]
    fn negative_citations_are_malformed() {
        let papers = vec![PaperRecord {
            authors: vec![1],
            citations: -2.0,
        }];
        assert!(matches!(
            dataset_from_papers(&papers, 1),
            Err(DataError::MalformedRecord { index: 0, .. })
        ));
    }

    #[test]
    fn median_fill_uses_even_count_average() {
        let task = task_from_signal(&[1.0, 2.0, 100.0], 1, 0.34, 0).unwrap();
        // floor(0.34 * 3) = 1 missing entry.
        let missing: Vec<usize> = (0..3).filter(|&i| !task.mask[i]).collect();
        assert_eq!(missing.len(), 1);
        if missing[0] == 2 {
            assert_eq!(task.input, vec![1.0, 2.0, 1.5]);
        }
        // Known entries pass through unchanged.
        for i in 0..3 {
            if task.mask[i] {
                assert_eq!(task.input[i], task.target[i]);
            }
        }
    }

    #[test]
    fn tiny_rate_misses_nothing() {
        let task = task_from_signal(&[5.0, 6.0, 7.0], 1, 0.1, 3).unwrap();
        assert_eq!(task.input, task.target);
        assert!(task.mask.iter().all(|&m| m));
    }

    #[test]
    fn task_is_reproducible_and_counts_match_rate() {
        let signal: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let a = task_from_signal(&signal, 2, 0.3, 11).unwrap();
        let b = task_from_signal(&signal, 2, 0.3, 11).unwrap();
        assert_eq!(a, b);
        let missing = a.mask.iter().filter(|&&m| !m).count();
        assert_eq!(missing, 15);
    }

    #[test]
    fn invalid_rates_and_empty_orders_error() {
        assert!(matches!(
            task_from_signal(&[1.0], 0, 0.0, 0),
            Err(DataError::InvalidRate { .. })
        ));
        assert!(matches!(
            task_from_signal(&[1.0], 0, 1.0, 0),
            Err(DataError::InvalidRate { .. })
        ));
        assert!(matches!(
            task_from_signal(&[], 2, 0.5, 0),
            Err(DataError::EmptyOrder { k: 2 })
        ));
    }

    #[test]
    fn accuracy_five_percent_band() {
        assert_eq!(
            accuracy(&[104.0], &[100.0], &[true]).unwrap(),
            1.0,
            "4% off is correct"
        );
        assert_eq!(
            accuracy(&[106.0], &[100.0], &[true]).unwrap(),
            0.0,
            "6% off is incorrect"
        );
        let exact = accuracy(&[1.0, 2.0], &[1.0, 2.0], &[true, true]).unwrap();
        assert_eq!(exact, 1.0);
    }

    #[test]
    fn accuracy_zero_target_band() {
        assert_eq!(accuracy(&[0.04], &[0.0], &[true]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.06], &[0.0], &[true]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_needs_missing_entries() {
        assert!(matches!(
            accuracy(&[1.0], &[1.0], &[false]),
            Err(DataError::EmptyMissingSet)
        ));
    }

    #[test]
    fn er_extremes() {
        let empty = synth_complex(5, 0.0, 2, 1);
        assert_eq!(empty.counts(), vec![5, 0, 0]);
        let complete = synth_complex(4, 1.0, 2, 1);
        assert_eq!(complete.counts(), vec![4, 6, 4]);
    }

    #[test]
    fn er_is_reproducible() {
        assert_eq!(er_edges(10, 0.5, 7), er_edges(10, 0.5, 7));
        assert_ne!(er_edges(10, 0.5, 7), er_edges(10, 0.5, 8));
    }

    #[test]
    fn citation_like_signals_are_nonnegative_integers() {
        let complex = synth_complex(12, 0.5, 2, 3);
        let signal = synth_signal(&complex, 1, SignalKind::CitationLike, 5).unwrap();
        assert_eq!(signal.len(), complex.num_simplices(1));
        for &v in &signal {
            assert!(v >= 0.0);
            assert_eq!(v, v.round());
        }
        let again = synth_signal(&complex, 1, SignalKind::CitationLike, 5).unwrap();
        assert_eq!(signal, again);
    }

    #[test]
    fn smooth_gradient_rejects_order_zero() {
        let complex = synth_complex(8, 0.5, 2, 3);
        assert!(matches!(
            synth_signal(&complex, 0, SignalKind::SmoothGradient, 1),
            Err(DataError::UndefinedSignal { .. })
        ));
    }

    #[test]
    fn synth_coauthorship_matches_loader_round_trip() {
        let ds = synth_coauthorship(15, 30, 2, 9).unwrap();
        for k in 0..=ds.complex.order() {
            assert_eq!(ds.signal(k).len(), ds.complex.num_simplices(k));
            assert!(ds.signal(k).iter().all(|&v| v >= 0.0));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coauthors.json");
        write_coauthorship(&ds, &path).unwrap();
        let reloaded = load_coauthorship(&path).unwrap();
        assert_eq!(reloaded.complex, ds.complex);
        for k in 0..=ds.complex.order() {
            assert_eq!(reloaded.signal(k), ds.signal(k));
        }
    }

    #[test]
    fn task_csv_dump_shape() {
        let task = task_from_signal(&[3.0, 4.0, 5.0, 6.0], 1, 0.25, 2).unwrap();
        let mut buf = Vec::new();
        task.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,target,mask,input");
        assert_eq!(lines.len(), 5);
    }
}

//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS line with its measured figures (run with --nocapture to see them)
//! or failing with the measured violation.
//!
//! Criterion 6(a) is known-red: with raw Hodge Laplacians, the tied
//! length-5 baseline applies operator powers of norm >= 3^4 at order 2, so
//! full-batch Adam at a fixed 1e-3 step keeps the l1 loss in a limit cycle
//! whose swings exceed any honest reading of "non-increasing"; the test
//! states the measured excursions when it fails.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hodgeflow::complex::{build_complex, OrientationSequence, PermutationSequence};
use hodgeflow::data::{synth_complex, synth_coauthorship};
use hodgeflow::filter::{apply_filter, materialize, snn_filter, SimplicialFilter};
use hodgeflow::learn::{moving_average, TrainConfig};
use hodgeflow::linalg::{sym_eig, SparseMatrix};
use hodgeflow::scnn::{init_model, model_output, FilterSpec, Nonlinearity};
use hodgeflow::spectral::{
    frequency_response, hodge_basis, hodge_components, layer_spectral_check, DEFAULT_ZERO_TOL,
};
use hodgeflow_cli::commands::{cmd_gradcheck, run_eval};
use hodgeflow_cli::{DataSource, EvalConfig, GradcheckConfig, ModelChoice, ModelShape};

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Exact product of two integer-valued sparse matrices, asserted zero.
fn sparse_product_is_zero(a: &SparseMatrix, b: &SparseMatrix) -> bool {
    let mut acc: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
    for (i, m, v) in a.iter() {
        let (cols, vals) = b.row(m);
        for (&j, &w) in cols.iter().zip(vals) {
            *acc.entry((i, j)).or_insert(0.0) += v * w;
        }
    }
    acc.values().all(|&v| v == 0.0)
}

/// lambda_min >= -1e-10, checked by shifted Cholesky with an
/// eigendecomposition fallback for the marginal cases.
fn is_psd(matrix: &SparseMatrix) -> bool {
    if matrix.rows() == 0 {
        return true;
    }
    let shifted = matrix.to_dense() + DMatrix::identity(matrix.rows(), matrix.rows()) * 1e-10;
    if shifted.cholesky().is_some() {
        return true;
    }
    let eig = sym_eig(&matrix.to_dense()).expect("Laplacians are symmetric");
    eig.eigenvalues.first().copied().unwrap_or(0.0) >= -1e-10
}

#[test]
fn criterion_1_structural_invariants() {
    let started = Instant::now();
    for seed in 0..100u64 {
        let n = 8 + (seed % 23) as usize; // 8..=30 vertices
        let p = 0.15 + 0.05 * (seed % 7) as f64;
        let k_max = 1 + (seed % 3) as usize; // K <= 3
        let complex = synth_complex(n, p, k_max, seed);

        for k in 1..k_max {
            let product = complex
                .incidence(k)
                .unwrap()
                .boundary_product(&complex.incidence(k + 1).unwrap());
            assert!(product.is_empty(), "B_{k} B_{} != 0 at seed {seed}", k + 1);
        }
        for k in 0..=k_max {
            let lap = complex.laplacians(k).unwrap();
            assert!(
                sparse_product_is_zero(&lap.lower, &lap.upper),
                "L_l L_u != 0 at order {k}, seed {seed}"
            );
            for m in [&lap.lower, &lap.upper, &lap.full] {
                assert_eq!(m, &m.transpose(), "asymmetric Laplacian at seed {seed}");
                assert!(is_psd(m), "negative eigenvalue at order {k}, seed {seed}");
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 1 took {elapsed:?}");
    println!("[criterion 1] PASS - 100 seeded complexes, exact boundary and Laplacian identities, PSD; {elapsed:?}");
}

fn seeded_complex(seed: u64) -> hodgeflow::SimplicialComplex {
    // Bounded sizes, always some edges; triangles appear for most seeds.
    let n = 8 + (seed % 10) as usize;
    synth_complex(n, 0.5, 2, seed)
}

fn random_filter(seed: u64, max_order: usize) -> SimplicialFilter {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l1 = rng.random_range(0..=max_order);
    let l2 = rng.random_range(0..=max_order);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let epsilon = draw(1)[0];
    SimplicialFilter::new(epsilon, draw(l1), draw(l2))
}

#[test]
fn criterion_2_filter_oracle_equivalence() {
    let mut worst_materialize: f64 = 0.0;
    let mut worst_snn: f64 = 0.0;
    for seed in 0..50u64 {
        let complex = seeded_complex(seed);
        let lap = complex.laplacians(1).unwrap();
        let n = lap.dim();
        if n == 0 {
            continue;
        }
        let h = random_filter(seed + 10_000, 3);
        let x = random_vector(n, seed + 20_000);

        let fast = apply_filter(&lap, &h, &x).unwrap();
        let dense = materialize(&lap, &h) * DMatrix::from_column_slice(n, 1, &x);
        let dense: Vec<f64> = dense.iter().copied().collect();
        worst_materialize = worst_materialize.max(max_abs_diff(&fast, &dense));

        // Tied filter vs the dense polynomial in the full Laplacian.
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 30_000);
        let len = rng.random_range(1..=5);
        let coeffs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tied = apply_filter(&lap, &snn_filter(&coeffs), &x).unwrap();
        let full = lap.full.to_dense();
        let mut acc = DMatrix::zeros(n, 1);
        let xcol = DMatrix::from_column_slice(n, 1, &x);
        let mut power = DMatrix::identity(n, n);
        for (l, &c) in coeffs.iter().enumerate() {
            if l > 0 {
                power = &power * &full;
            }
            acc += &power * &xcol * c;
        }
        let oracle: Vec<f64> = acc.iter().copied().collect();
        worst_snn = worst_snn.max(max_abs_diff(&tied, &oracle));
    }
    assert!(
        worst_materialize <= 1e-10,
        "apply vs materialize: {worst_materialize:.3e}"
    );
    assert!(worst_snn <= 1e-9, "tied filter vs polynomial: {worst_snn:.3e}");
    println!("[criterion 2] PASS - apply==materialize to {worst_materialize:.2e}, tied==polynomial to {worst_snn:.2e}");
}

#[test]
fn criterion_3_hodge_spectral_suite() {
    let mut worst_residual: f64 = 0.0;
    for seed in 0..15u64 {
        let complex = seeded_complex(seed);
        let lap = complex.laplacians(1).unwrap();
        let basis = hodge_basis(&lap, DEFAULT_ZERO_TOL).unwrap();
        let n = lap.dim();
        let x = random_vector(n, seed + 40_000);

        // Orthonormality of the combined basis.
        let u = basis.full_basis();
        let gram_dev = (u.transpose() * &u - DMatrix::identity(n, n)).amax();
        worst_residual = worst_residual.max(gram_dev);

        // Reconstruction and the divergence/curl-free conditions.
        let parts = hodge_components(&basis, &x).unwrap();
        let sum: Vec<f64> = (0..n)
            .map(|i| parts.gradient[i] + parts.curl[i] + parts.harmonic[i])
            .collect();
        worst_residual = worst_residual.max(max_abs_diff(&sum, &x));

        let b1 = complex.incidence(1).unwrap().to_sparse();
        let div_curl = b1.spmv(&parts.curl).unwrap();
        let div_harm = b1.spmv(&parts.harmonic).unwrap();
        worst_residual = worst_residual.max(div_curl.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        worst_residual = worst_residual.max(div_harm.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        if complex.order() >= 2 && complex.num_simplices(2) > 0 {
            let b2 = complex.incidence(2).unwrap().to_sparse();
            let curl_grad = b2.transpose().spmv(&parts.gradient).unwrap();
            worst_residual =
                worst_residual.max(curl_grad.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }

        // Convolution theorem (pointwise multiplication in frequency).
        let h = random_filter(seed + 50_000, 3);
        let residual = layer_spectral_check(&lap, &basis, &h, &x).unwrap();
        worst_residual = worst_residual.max(residual);
    }
    assert!(worst_residual <= 1e-8, "spectral residual {worst_residual:.3e}");

    // Filled-triangle closed forms.
    let triangle = build_complex(&[vec![1, 2, 3]], 2).unwrap();
    let lap = triangle.laplacians(1).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { 3.0 } else { 0.0 };
            assert_eq!(lap.full.get(i, j), expected, "L1 != 3I");
        }
    }
    let basis = hodge_basis(&lap, DEFAULT_ZERO_TOL).unwrap();
    let response = frequency_response(&SimplicialFilter::new(1.0, vec![1.0], vec![2.0]), &basis);
    for g in &response.gradient {
        assert!((g - 4.0).abs() <= 1e-9, "gradient response {g}");
    }
    assert!((response.curl[0] - 7.0).abs() <= 1e-9, "curl response {}", response.curl[0]);
    println!("[criterion 3] PASS - Hodge residuals <= {worst_residual:.2e}, triangle closed forms exact");
}

#[test]
fn criterion_4_equivariance() {
    const NONLINEARITIES: [Nonlinearity; 3] = [
        Nonlinearity::Identity,
        Nonlinearity::Tanh,
        Nonlinearity::LeakyRelu { slope: 0.01 },
    ];
    let mut worst_perm: f64 = 0.0;
    let mut worst_orient: f64 = 0.0;
    for seed in 0..20u64 {
        let complex = seeded_complex(seed);
        let lap = complex.laplacians(1).unwrap();
        let x = random_vector(lap.dim(), seed + 60_000);

        let perm = PermutationSequence::random(&complex.counts(), seed + 61_000);
        let permuted_lap = complex.permute(&perm).unwrap().laplacians(1).unwrap();
        for (i, nonlinearity) in NONLINEARITIES.into_iter().enumerate() {
            let model = init_model(
                1,
                2 + (seed % 2) as usize,
                3,
                FilterSpec::Scnn { lower: 2, upper: 2 },
                nonlinearity,
                seed + i as u64,
            );
            let base = model_output(&lap, &model, &x).unwrap();
            let permuted = model_output(&permuted_lap, &model, &perm.apply(1, &x)).unwrap();
            worst_perm = worst_perm.max(max_abs_diff(&permuted, &perm.apply(1, &base)));
        }

        let signs = OrientationSequence::random(&complex.counts(), seed + 62_000);
        let reoriented_lap = complex.reorient(&signs).unwrap().laplacians(1).unwrap();
        for (i, nonlinearity) in [Nonlinearity::Identity, Nonlinearity::Tanh]
            .into_iter()
            .enumerate()
        {
            let model = init_model(
                1,
                3,
                3,
                FilterSpec::Scnn { lower: 2, upper: 2 },
                nonlinearity,
                seed + 70 + i as u64,
            );
            let base = model_output(&lap, &model, &x).unwrap();
            let flipped = model_output(&reoriented_lap, &model, &signs.apply(1, &x)).unwrap();
            worst_orient = worst_orient.max(max_abs_diff(&flipped, &signs.apply(1, &base)));
        }
    }
    assert!(worst_perm <= 1e-9, "permutation equivariance {worst_perm:.3e}");
    assert!(worst_orient <= 1e-9, "orientation equivariance {worst_orient:.3e}");

    // LeakyReLU is not odd: a seeded instance must witness a violation.
    let complex = seeded_complex(2);
    let lap = complex.laplacians(1).unwrap();
    let mut signs = OrientationSequence::all_ones(&complex.counts());
    for (i, s) in signs.signs[1].iter_mut().enumerate() {
        if i % 2 == 0 {
            *s = -1;
        }
    }
    let reoriented_lap = complex.reorient(&signs).unwrap().laplacians(1).unwrap();
    let x = random_vector(lap.dim(), 9);
    let model = init_model(
        1,
        2,
        3,
        FilterSpec::Scnn { lower: 2, upper: 2 },
        Nonlinearity::LeakyRelu { slope: 0.01 },
        17,
    );
    let base = model_output(&lap, &model, &x).unwrap();
    let flipped = model_output(&reoriented_lap, &model, &signs.apply(1, &x)).unwrap();
    let violation = max_abs_diff(&flipped, &signs.apply(1, &base));
    assert!(violation > 1e-3, "LeakyReLU counterexample too weak: {violation:.3e}");
    println!("[criterion 4] PASS - permutation {worst_perm:.2e}, orientation {worst_orient:.2e}, LeakyReLU violation {violation:.2e}");
}

#[test]
fn criterion_5_gradient_correctness() {
    let started = Instant::now();
    let report = cmd_gradcheck(&GradcheckConfig { seed: 7, cases: 10 }).unwrap();
    let elapsed = started.elapsed();
    assert!(
        report.max_rel_error <= 1e-5,
        "gradcheck error {:.3e} over {} coordinates",
        report.max_rel_error,
        report.checked
    );
    assert!(elapsed.as_secs() < 120, "criterion 5 took {elapsed:?}");
    println!(
        "[criterion 5] PASS - max relative error {:.2e} over {} coordinates ({} kink-skipped); {elapsed:?}",
        report.max_rel_error, report.checked, report.skipped
    );
}

/// The desk-scale sweep shared by the criterion 6 sub-tests: 10 seeds, 10%
/// missing at order 2, SCNN (P=3, F=8, L1=L2=2) against the tied length-5
/// baseline, 1000 Adam iterations at lr 1e-3.
fn desk_scale_results() -> &'static [hodgeflow_cli::CellResult] {
    use std::sync::OnceLock;
    static RESULTS: OnceLock<Vec<hodgeflow_cli::CellResult>> = OnceLock::new();
    RESULTS.get_or_init(|| {
        let started = Instant::now();
        let dataset = synth_coauthorship(40, 120, 3, 2).unwrap();
        let order = 2;
        assert!(dataset.complex.num_simplices(order) > 50);
        let cfg = EvalConfig {
            source: DataSource::Synth {
                authors: 40,
                papers: 120,
                k_max: 3,
                seed: 2,
            },
            order,
            rates: vec![0.1],
            seeds: (0..10).collect(),
            models: vec![ModelChoice::Scnn, ModelChoice::Snn],
            shape: ModelShape {
                layers: 3,
                features: 8,
                lower: 2,
                upper: 2,
                nonlinearity: Nonlinearity::LeakyRelu { slope: 0.01 },
            },
            train: TrainConfig {
                lr: 1e-3,
                iters: 1000,
            },
            out_dir: std::env::temp_dir().join("hodgeflow_acceptance_eval"),
        };
        let results = run_eval(&dataset, &cfg).unwrap();
        assert_eq!(results.len(), 20);
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs() < 600, "desk-scale sweep took {elapsed:?}");
        println!("[criterion 6] sweep of 20 cells finished in {elapsed:?}");
        results
    })
}

fn mean_of(results: &[hodgeflow_cli::CellResult], model: ModelChoice, f: impl Fn(&hodgeflow_cli::CellResult) -> f64) -> f64 {
    let values: Vec<f64> = results.iter().filter(|r| r.model == model).map(f).collect();
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn criterion_6a_smoothed_traces_non_increasing() {
    let results = desk_scale_results();
    let mut worst_bump: f64 = 0.0;
    let mut rising_runs = 0;
    for r in results {
        let ma = moving_average(&r.trace, 50);
        let mut run_worst: f64 = 0.0;
        for w in ma.windows(2) {
            run_worst = run_worst.max((w[1] - w[0]) / w[0]);
        }
        if run_worst > 1e-12 {
            rising_runs += 1;
        }
        worst_bump = worst_bump.max(run_worst);
    }
    let pass = worst_bump <= 1e-12;
    println!(
        "[criterion 6a] {} - worst smoothed-trace rise {worst_bump:.2e} across {rising_runs}/20 runs",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(
        pass,
        "smoothed loss traces rise by up to {:.1}% ({rising_runs}/20 runs): full-batch Adam at a \
         fixed 1e-3 step on the l1 objective orbits its optimum instead of settling, and the tied \
         length-5 baseline amplifies the orbit through order-2 operator powers of norm >= 81. \
         The traces still collapse by 2-6 orders of magnitude overall, and the loss/accuracy \
         comparisons (6b, 6c) hold.",
        100.0 * worst_bump
    );
}

#[test]
fn criterion_6b_scnn_reaches_lower_training_loss() {
    let results = desk_scale_results();
    let scnn_loss = mean_of(results, ModelChoice::Scnn, |r| r.final_loss);
    let snn_loss = mean_of(results, ModelChoice::Snn, |r| r.final_loss);
    println!(
        "[criterion 6b] {} - mean final training loss scnn {scnn_loss:.1} vs snn {snn_loss:.1}",
        if scnn_loss <= snn_loss { "PASS" } else { "FAIL" }
    );
    assert!(
        scnn_loss <= snn_loss,
        "scnn mean final loss {scnn_loss} > snn {snn_loss}"
    );
}

#[test]
fn criterion_6c_scnn_accuracy_not_worse() {
    let results = desk_scale_results();
    let scnn_acc = mean_of(results, ModelChoice::Scnn, |r| r.accuracy);
    let snn_acc = mean_of(results, ModelChoice::Snn, |r| r.accuracy);
    println!(
        "[criterion 6c] {} - mean accuracy scnn {scnn_acc:.4} vs snn {snn_acc:.4}",
        if scnn_acc >= snn_acc - 0.01 { "PASS" } else { "FAIL" }
    );
    assert!(
        scnn_acc >= snn_acc - 0.01,
        "scnn mean accuracy {scnn_acc} < snn {snn_acc} - 0.01"
    );
}

#[test]
fn criterion_7_documented_dataset_pipeline() {
    // A user-supplied dataset in the documented JSON format drives the full
    // eval pipeline through the real binary; defaults carry the protocol
    // (lr 1e-3, 1000 iterations, seeds 0..9, median fill, +-5% accuracy).
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let dataset_path = dir.path().join("coauthors.json");
    let dataset = synth_coauthorship(15, 40, 2, 5).unwrap();
    hodgeflow::data::write_coauthorship(&dataset, &dataset_path).unwrap();

    let out_dir = dir.path().join("eval");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_hodgeflow"))
        .args([
            "eval",
            "--dataset",
            dataset_path.to_str().unwrap(),
            "--order",
            "1",
            "--rate",
            "0.1,0.3",
            "--features",
            "8",
            "--out",
            out_dir.to_str().unwrap(),
        ])
        .status()
        .expect("binary runs");
    assert!(status.success(), "eval exited nonzero");

    let results = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines[0], "order,rate,seed,model,accuracy");
    // 2 rates x 10 default seeds x 2 models.
    assert_eq!(lines.len(), 1 + 2 * 10 * 2, "results.csv row count");
    for rate in ["0.1", "0.3"] {
        for seed in 0..10 {
            for model in ["scnn", "snn"] {
                let prefix = format!("1,{rate},{seed},{model},");
                assert_eq!(
                    lines.iter().filter(|l| l.starts_with(&prefix)).count(),
                    1,
                    "missing paired row {prefix}"
                );
            }
        }
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let summary_lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        summary_lines[0],
        "order,rate,model,mean_accuracy,std_accuracy,seeds"
    );
    assert_eq!(summary_lines.len(), 1 + 2 * 2, "summary.csv row count");
    for line in &summary_lines[1..] {
        assert!(line.ends_with(",10"), "aggregates cover all 10 seeds: {line}");
    }
    let elapsed = started.elapsed();
    println!("[criterion 7] PASS - documented JSON drove the full eval pipeline; Table-1-shaped CSVs verified; {elapsed:?}");
}

//! Shared fixtures and independent oracles for the integration suites.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hodgeflow::complex::{LaplacianSet, SimplicialComplex};
use hodgeflow::data::synth_complex;

/// A seeded Erdos-Renyi clique complex with bounded size, varied by seed.
pub fn seeded_complex(seed: u64) -> SimplicialComplex {
    let n = 6 + (seed % 12) as usize;
    let p = 0.25 + 0.05 * (seed % 8) as f64;
    let k_max = 1 + (seed % 3) as usize;
    synth_complex(n, p, k_max, seed)
}

/// A seeded complex guaranteed to have edges and at least one triangle.
pub fn seeded_complex_with_triangles(seed: u64) -> SimplicialComplex {
    for offset in 0..20 {
        let x = synth_complex(8 + (seed % 8) as usize, 0.55, 2, seed + 1000 * offset);
        if x.num_simplices(2) > 0 {
            return x;
        }
    }
    panic!("no triangle found in 20 attempts at seed {seed}");
}

pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Exact rank of an integer matrix via fraction-free (Bareiss) elimination
/// in arbitrary precision; independent of any floating-point path.
pub fn exact_rank(dense: &DMatrix<f64>) -> usize {
    let rows = dense.nrows();
    let cols = dense.ncols();
    let mut m: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let v = dense[(i, j)];
                    assert_eq!(v, v.round(), "oracle needs integer entries");
                    BigInt::from(v as i64)
                })
                .collect()
        })
        .collect();

    let zero = BigInt::from(0);
    let mut rank = 0;
    let mut prev_pivot = BigInt::from(1);
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let pivot_row = (row..rows).find(|&r| m[r][col] != zero);
        let Some(pr) = pivot_row else { continue };
        m.swap(row, pr);
        for r in (row + 1)..rows {
            for c in (col + 1)..cols {
                let num = &m[row][col] * &m[r][c] - &m[r][col] * &m[row][c];
                m[r][c] = num / &prev_pivot;
            }
            m[r][col] = zero.clone();
        }
        prev_pivot = m[row][col].clone();
        row += 1;
        rank += 1;
    }
    rank
}

/// Hop distances from simplex `start` in the adjacency graph given by
/// `neighbor_fn`; usize::MAX marks unreachable simplices.
pub fn bfs_distances(n: usize, start: usize, neighbors: &[Vec<usize>]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for &j in &neighbors[i] {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    dist
}

/// Adjacency lists from the off-diagonal sparsity pattern of a Laplacian.
pub fn adjacency_of(matrix: &hodgeflow::linalg::SparseMatrix) -> Vec<Vec<usize>> {
    (0..matrix.rows())
        .map(|i| {
            let (cols, _) = matrix.row(i);
            cols.iter().copied().filter(|&j| j != i).collect()
        })
        .collect()
}

/// Union adjacency of the lower and upper Laplacians.
pub fn combined_adjacency(lap: &LaplacianSet) -> Vec<Vec<usize>> {
    let lower = adjacency_of(&lap.lower);
    let upper = adjacency_of(&lap.upper);
    lower
        .into_iter()
        .zip(upper)
        .map(|(mut lo, up)| {
            lo.extend(up);
            lo.sort_unstable();
            lo.dedup();
            lo
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

//! Simplicial complexes: construction by downward closure, canonical
//! ordering, signed incidence matrices and Hodge Laplacians, permutation and
//! reorientation.
//!
//! A k-simplex is stored as its sorted vertex tuple; sorting the vertices
//! fixes the reference orientation. Incidence and Laplacian matrices are
//! assembled in exact integer arithmetic and converted to floating point at
//! the linear-algebra boundary, so identities like `B_k B_{k+1} = 0` hold
//! exactly.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::SparseMatrix;

pub type Vertex = usize;

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("simplex {vertices:?} has {} vertices but order K={k_max} allows at most {}", vertices.len(), k_max + 1)]
    SimplexTooLarge { vertices: Vec<Vertex>, k_max: usize },
    #[error("empty vertex set is not a simplex")]
    EmptySimplex,
    #[error("invalid simplex order {k} (complex has K={k_max})")]
    InvalidOrder { k: usize, k_max: usize },
    #[error("{what}: expected length {expected}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("sequence at order {k} is not a permutation")]
    NotAPermutation { k: usize },
    #[error("orientation signs at order 0 must all be +1 (node signals carry no orientation)")]
    NodeOrientation,
    #[error("orientation signs must be +1 or -1, got {value} at order {k}")]
    InvalidSign { k: usize, value: i32 },
    #[error("simplex index {index} out of range for order {k} ({count} simplices)")]
    IndexOutOfRange { k: usize, index: usize, count: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A simplicial complex of order `K`: for every k, the ordered list of
/// k-simplices as sorted vertex tuples, plus a per-simplex orientation sign.
/// Immutable after construction; permuting or reorienting returns a new
/// complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    k_max: usize,
    simplices: Vec<Vec<Vec<Vertex>>>,
    orientations: Vec<Vec<i32>>,
    index: Vec<HashMap<Vec<Vertex>, usize>>,
}

/// Per-order permutations; `perm[k][new_index] = old_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSequence {
    pub per_order: Vec<Vec<usize>>,
}

impl PermutationSequence {
    pub fn identity(counts: &[usize]) -> Self {
        Self {
            per_order: counts.iter().map(|&n| (0..n).collect()).collect(),
        }
    }

    pub fn random(counts: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            per_order: counts
                .iter()
                .map(|&n| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect(),
        }
    }

    /// Gathers a k-simplicial signal into the permuted index order.
    pub fn apply(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.per_order[k].iter().map(|&old| x[old]).collect()
    }
}

/// Per-order orientation signs d_k in {-1, +1}; d_0 must be all ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientationSequence {
    pub signs: Vec<Vec<i32>>,
}

impl OrientationSequence {
    pub fn all_ones(counts: &[usize]) -> Self {
        Self {
            signs: counts.iter().map(|&n| vec![1; n]).collect(),
        }
    }

    /// Random +-1 signs for orders k >= 1; order 0 stays all ones.
    pub fn random(counts: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            signs: counts
                .iter()
                .enumerate()
                .map(|(k, &n)| {
                    (0..n)
                        .map(|_| {
                            if k == 0 || rng.random::<bool>() {
                                1
                            } else {
                                -1
                            }
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Flips a signal by the order-k signs.
    pub fn apply(&self, k: usize, x: &[f64]) -> Vec<f64> {
        self.signs[k]
            .iter()
            .zip(x)
            .map(|(&s, &v)| f64::from(s) * v)
            .collect()
    }
}

/// On-disk complex format: maximal simplices, closure computed on load.
#[derive(Debug, Serialize, Deserialize)]
struct ComplexFile {
    #[serde(default = "default_format")]
    format: u32,
    #[serde(rename = "K")]
    k_max: usize,
    simplices: Vec<Vec<Vertex>>,
}

fn default_format() -> u32 {
    1
}

/// Builds the downward closure of `simplex_list` as a complex of order
/// `k_max`, with canonical (lexicographic) simplex ordering.
pub fn build_complex(
    simplex_list: &[Vec<Vertex>],
    k_max: usize,
) -> Result<SimplicialComplex, ComplexError> {
    let mut by_order: Vec<BTreeSet<Vec<Vertex>>> = vec![BTreeSet::new(); k_max + 1];
    for raw in simplex_list {
        let mut vertices: Vec<Vertex> = raw.clone();
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.is_empty() {
            return Err(ComplexError::EmptySimplex);
        }
        if vertices.len() > k_max + 1 {
            return Err(ComplexError::SimplexTooLarge {
                vertices,
                k_max,
            });
        }
        // Every nonempty subset is a face; enumerate by bitmask.
        let n = vertices.len();
        for mask in 1u32..(1 << n) {
            let face: Vec<Vertex> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| vertices[i])
                .collect();
            by_order[face.len() - 1].insert(face);
        }
    }

    let simplices: Vec<Vec<Vec<Vertex>>> = by_order
        .into_iter()
        .map(|set| set.into_iter().collect())
        .collect();
    Ok(SimplicialComplex::from_parts(simplices))
}

impl SimplicialComplex {
    fn from_parts(simplices: Vec<Vec<Vec<Vertex>>>) -> Self {
        let k_max = simplices.len() - 1;
        let orientations = simplices.iter().map(|s| vec![1; s.len()]).collect();
        let index = Self::build_index(&simplices);
        Self {
            k_max,
            simplices,
            orientations,
            index,
        }
    }

    fn build_index(simplices: &[Vec<Vec<Vertex>>]) -> Vec<HashMap<Vec<Vertex>, usize>> {
        simplices
            .iter()
            .map(|list| {
                list.iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), i))
                    .collect()
            })
            .collect()
    }

    /// Maximum simplex order K.
    pub fn order(&self) -> usize {
        self.k_max
    }

    /// Number of k-simplices N_k.
    pub fn num_simplices(&self, k: usize) -> usize {
        self.simplices.get(k).map_or(0, Vec::len)
    }

    /// All counts [N_0, ..., N_K].
    pub fn counts(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    pub fn simplices(&self, k: usize) -> &[Vec<Vertex>] {
        &self.simplices[k]
    }

    pub fn simplex(&self, k: usize, i: usize) -> &[Vertex] {
        &self.simplices[k][i]
    }

    pub fn orientation(&self, k: usize, i: usize) -> i32 {
        self.orientations[k][i]
    }

    pub fn index_of(&self, k: usize, vertices: &[Vertex]) -> Option<usize> {
        self.index[k].get(vertices).copied()
    }

    fn check_order(&self, k: usize) -> Result<(), ComplexError> {
        if k > self.k_max {
            return Err(ComplexError::InvalidOrder {
                k,
                k_max: self.k_max,
            });
        }
        Ok(())
    }

    /// The signed incidence matrix B_k relating (k-1)-simplices (rows) to
    /// k-simplices (columns). Entry (i, j) is (-1)^p times the row and column
    /// orientation signs when the i-th (k-1)-simplex is the j-th k-simplex
    /// with its p-th vertex removed.
    pub fn incidence(&self, k: usize) -> Result<IncidenceMatrix, ComplexError> {
        if k == 0 {
            return Err(ComplexError::InvalidOrder {
                k,
                k_max: self.k_max,
            });
        }
        self.check_order(k)?;
        let rows = self.num_simplices(k - 1);
        let cols = self.num_simplices(k);
        let mut entries = Vec::with_capacity(cols);
        for (j, simplex) in self.simplices[k].iter().enumerate() {
            let col_sign = self.orientations[k][j];
            let mut column = Vec::with_capacity(k + 1);
            for p in 0..=k {
                let mut face = simplex.clone();
                face.remove(p);
                let row = self.index[k - 1][&face];
                let base = if p % 2 == 0 { 1 } else { -1 };
                column.push((row, self.orientations[k - 1][row] * base * col_sign));
            }
            column.sort_unstable_by_key(|&(r, _)| r);
            entries.push(column);
        }
        Ok(IncidenceMatrix {
            k,
            rows,
            cols,
            entries,
        })
    }

    /// Lower, upper and full Hodge Laplacians at order k. For k = 0 the lower
    /// Laplacian is the zero matrix; for k = K the upper one is.
    pub fn laplacians(&self, k: usize) -> Result<LaplacianSet, ComplexError> {
        self.check_order(k)?;
        let n = self.num_simplices(k);
        let lower_triplets = if k == 0 {
            Vec::new()
        } else {
            self.incidence(k)?.lower_laplacian_triplets()
        };
        let upper_triplets = if k == self.k_max {
            Vec::new()
        } else {
            self.incidence(k + 1)?.upper_laplacian_triplets()
        };
        let mut full_triplets = lower_triplets.clone();
        full_triplets.extend_from_slice(&upper_triplets);

        let to_f64 = |ts: &[(usize, usize, i64)]| {
            let fts: Vec<(usize, usize, f64)> =
                ts.iter().map(|&(r, c, v)| (r, c, v as f64)).collect();
            SparseMatrix::from_triplets(n, n, &fts)
        };
        Ok(LaplacianSet {
            lower: to_f64(&lower_triplets),
            upper: to_f64(&upper_triplets),
            full: to_f64(&full_triplets),
        })
    }

    /// Reindexes every order by a permutation sequence. The underlying
    /// simplices are unchanged; only their positions (and therefore rows and
    /// columns of incidence matrices) move.
    pub fn permute(&self, seq: &PermutationSequence) -> Result<SimplicialComplex, ComplexError> {
        if seq.per_order.len() != self.k_max + 1 {
            return Err(ComplexError::SizeMismatch {
                what: "permutation sequence",
                expected: self.k_max + 1,
                got: seq.per_order.len(),
            });
        }
        let mut simplices = Vec::with_capacity(self.k_max + 1);
        let mut orientations = Vec::with_capacity(self.k_max + 1);
        for k in 0..=self.k_max {
            let perm = &seq.per_order[k];
            let n = self.num_simplices(k);
            if perm.len() != n {
                return Err(ComplexError::SizeMismatch {
                    what: "permutation",
                    expected: n,
                    got: perm.len(),
                });
            }
            let mut seen = vec![false; n];
            for &old in perm {
                if old >= n || seen[old] {
                    return Err(ComplexError::NotAPermutation { k });
                }
                seen[old] = true;
            }
            simplices.push(
                perm.iter()
                    .map(|&old| self.simplices[k][old].clone())
                    .collect::<Vec<_>>(),
            );
            orientations.push(perm.iter().map(|&old| self.orientations[k][old]).collect());
        }
        let index = Self::build_index(&simplices);
        Ok(SimplicialComplex {
            k_max: self.k_max,
            simplices,
            orientations,
            index,
        })
    }

    /// Flips reference orientations by a sign sequence; order-0 signs must
    /// all be +1.
    pub fn reorient(&self, seq: &OrientationSequence) -> Result<SimplicialComplex, ComplexError> {
        if seq.signs.len() != self.k_max + 1 {
            return Err(ComplexError::SizeMismatch {
                what: "orientation sequence",
                expected: self.k_max + 1,
                got: seq.signs.len(),
            });
        }
        for k in 0..=self.k_max {
            let signs = &seq.signs[k];
            if signs.len() != self.num_simplices(k) {
                return Err(ComplexError::SizeMismatch {
                    what: "orientation signs",
                    expected: self.num_simplices(k),
                    got: signs.len(),
                });
            }
            for &s in signs {
                if s != 1 && s != -1 {
                    return Err(ComplexError::InvalidSign { k, value: s });
                }
                if k == 0 && s != 1 {
                    return Err(ComplexError::NodeOrientation);
                }
            }
        }
        let mut out = self.clone();
        for k in 0..=self.k_max {
            for (o, &s) in out.orientations[k].iter_mut().zip(&seq.signs[k]) {
                *o *= s;
            }
        }
        Ok(out)
    }

    /// Lower and upper neighbor indices of the i-th k-simplex: simplices
    /// sharing a common face, resp. a common coface.
    pub fn neighbors(&self, k: usize, i: usize) -> Result<(Vec<usize>, Vec<usize>), ComplexError> {
        self.check_order(k)?;
        let n = self.num_simplices(k);
        if i >= n {
            return Err(ComplexError::IndexOutOfRange { k, index: i, count: n });
        }

        let mut lower = BTreeSet::new();
        if k >= 1 {
            let simplex = &self.simplices[k][i];
            for p in 0..=k {
                let mut face = simplex.clone();
                face.remove(p);
                // Any other k-simplex containing this face is a lower neighbor.
                for (j, other) in self.simplices[k].iter().enumerate() {
                    if j != i && is_subset(&face, other) {
                        lower.insert(j);
                    }
                }
            }
        }

        let mut upper = BTreeSet::new();
        if k < self.k_max {
            let simplex = &self.simplices[k][i];
            for coface in &self.simplices[k + 1] {
                if is_subset(simplex, coface) {
                    for q in 0..=(k + 1) {
                        let mut face = coface.clone();
                        face.remove(q);
                        let j = self.index[k][&face];
                        if j != i {
                            upper.insert(j);
                        }
                    }
                }
            }
        }
        Ok((lower.into_iter().collect(), upper.into_iter().collect()))
    }

    /// Maximum total (lower + upper) neighbor count over all k-simplices; the
    /// per-shift cost bound is N_k times this.
    pub fn max_neighbor_count(&self, k: usize) -> Result<usize, ComplexError> {
        let mut best = 0;
        for i in 0..self.num_simplices(k) {
            let (lo, up) = self.neighbors(k, i)?;
            best = best.max(lo.len() + up.len());
        }
        Ok(best)
    }

    /// Loads a complex from the JSON format `{"K": k, "simplices": [[v,..],..]}`
    /// listing maximal simplices; the closure is computed on load.
    pub fn from_json_file(path: &Path) -> Result<SimplicialComplex, ComplexError> {
        let file: ComplexFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        build_complex(&file.simplices, file.k_max)
    }

    /// Writes every simplex of the complex in the same JSON schema; reloading
    /// reproduces the complex exactly (closure is idempotent).
    pub fn to_json_file(&self, path: &Path) -> Result<(), ComplexError> {
        let file = ComplexFile {
            format: 1,
            k_max: self.k_max,
            simplices: self
                .simplices
                .iter()
                .flat_map(|list| list.iter().cloned())
                .collect(),
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &file)?;
        Ok(())
    }
}

fn is_subset(small: &[Vertex], big: &[Vertex]) -> bool {
    // Both sorted.
    let mut it = big.iter();
    small.iter().all(|v| it.any(|w| w == v))
}

/// Signed incidence matrix B_k with values in {-1, 0, +1}, stored by column;
/// each column holds exactly k+1 nonzeros (the faces of one k-simplex).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    k: usize,
    rows: usize,
    cols: usize,
    entries: Vec<Vec<(usize, i32)>>,
}

impl IncidenceMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// (row, sign) pairs of column `j`, sorted by row.
    pub fn column(&self, j: usize) -> &[(usize, i32)] {
        &self.entries[j]
    }

    pub fn entry(&self, i: usize, j: usize) -> i32 {
        self.entries[j]
            .iter()
            .find(|&&(r, _)| r == i)
            .map_or(0, |&(_, s)| s)
    }

    fn rows_view(&self) -> Vec<Vec<(usize, i32)>> {
        let mut rows = vec![Vec::new(); self.rows];
        for (j, column) in self.entries.iter().enumerate() {
            for &(r, s) in column {
                rows[r].push((j, s));
            }
        }
        rows
    }

    /// Integer triplets of the boundary composition B_k * B_{k+1}; all values
    /// cancel to zero on a valid complex.
    pub fn boundary_product(&self, next: &IncidenceMatrix) -> Vec<(usize, usize, i64)> {
        assert_eq!(self.cols, next.rows, "incidence orders are not consecutive");
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        for (c, column) in next.entries.iter().enumerate() {
            for &(m, s) in column {
                for &(r, t) in &self.entries[m] {
                    *acc.entry((r, c)).or_insert(0) += i64::from(s) * i64::from(t);
                }
            }
        }
        let mut out: Vec<(usize, usize, i64)> = acc
            .into_iter()
            .filter(|&(_, v)| v != 0)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        out.sort_unstable();
        out
    }

    /// Integer triplets of the lower Laplacian B_k^T B_k (summed, zero-free).
    pub fn lower_laplacian_triplets(&self) -> Vec<(usize, usize, i64)> {
        let rows = self.rows_view();
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        for row in &rows {
            for &(i, si) in row {
                for &(j, sj) in row {
                    *acc.entry((i, j)).or_insert(0) += i64::from(si) * i64::from(sj);
                }
            }
        }
        collect_triplets(acc)
    }

    /// Integer triplets of the upper Laplacian B_{k} B_{k}^T for the order
    /// below this matrix (i.e. B_{k+1} B_{k+1}^T when `self` is B_{k+1}).
    pub fn upper_laplacian_triplets(&self) -> Vec<(usize, usize, i64)> {
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        for column in &self.entries {
            for &(i, si) in column {
                for &(j, sj) in column {
                    *acc.entry((i, j)).or_insert(0) += i64::from(si) * i64::from(sj);
                }
            }
        }
        collect_triplets(acc)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let triplets: Vec<(usize, usize, f64)> = self
            .entries
            .iter()
            .enumerate()
            .flat_map(|(j, column)| {
                column
                    .iter()
                    .map(move |&(r, s)| (r, j, f64::from(s)))
            })
            .collect();
        SparseMatrix::from_triplets(self.rows, self.cols, &triplets)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        self.to_sparse().to_dense()
    }
}

fn collect_triplets(acc: HashMap<(usize, usize), i64>) -> Vec<(usize, usize, i64)> {
    let mut out: Vec<(usize, usize, i64)> = acc
        .into_iter()
        .filter(|&(_, v)| v != 0)
        .map(|((r, c), v)| (r, c, v))
        .collect();
    out.sort_unstable();
    out
}

/// The lower, upper and full Hodge Laplacians of one simplex order, as
/// symmetric sparse matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianSet {
    pub lower: SparseMatrix,
    pub upper: SparseMatrix,
    pub full: SparseMatrix,
}

impl LaplacianSet {
    /// Signal dimension N_k.
    pub fn dim(&self) -> usize {
        self.full.rows()
    }
}

//! Minimal dense/sparse linear algebra: CSR matrices, symmetric
//! eigendecomposition, orthogonal projections.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch (expected {expected}, got {got})")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not symmetric (max |A - A^T| = {deviation:.3e})")]
    NotSymmetric { deviation: f64 },
}

/// Sparse matrix in compressed row storage. Column indices are sorted within
/// each row and explicit zeros are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from (row, col, value) triplets. Duplicate positions
    /// are summed; entries that cancel to zero are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());

        let mut it = sorted.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of bounds");
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Sparse matrix-vector product.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "spmv",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets: Vec<(usize, usize, f64)> =
            self.iter().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.cols, self.rows, &triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending, column `i` of
/// `eigenvectors` paired with `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Dense symmetric eigendecomposition. The input must be symmetric to within
/// 1e-10 in the max norm.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<EigenResult, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::DimensionMismatch {
            op: "sym_eig",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    let mut deviation: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            deviation = deviation.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if deviation > 1e-10 {
        return Err(LinalgError::NotSymmetric { deviation });
    }
    if n == 0 {
        return Ok(EigenResult {
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }

    let decomp = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| decomp.eigenvalues[i].total_cmp(&decomp.eigenvalues[j]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| decomp.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &decomp.eigenvectors.column(src));
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Orthogonal projection of `x` onto the column span of `basis`, i.e.
/// `U (U^T x)` for an orthonormal `U`.
pub fn project_onto(basis: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if basis.nrows() != x.len() {
        return Err(LinalgError::DimensionMismatch {
            op: "project_onto",
            expected: basis.nrows(),
            got: x.len(),
        });
    }
    let mut coeffs = vec![0.0; basis.ncols()];
    for (j, coeff) in coeffs.iter_mut().enumerate() {
        let col = basis.column(j);
        *coeff = col.iter().zip(x).map(|(u, xi)| u * xi).sum();
    }
    let mut y = vec![0.0; x.len()];
    for (j, coeff) in coeffs.iter().enumerate() {
        let col = basis.column(j);
        for (yi, u) in y.iter_mut().zip(col.iter()) {
            *yi += coeff * u;
        }
    }
    Ok(y)
}

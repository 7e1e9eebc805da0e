//! Simplicial convolutional filters: a scaled identity plus independent
//! polynomials in the lower and upper Hodge Laplacians,
//! `H = eps*I + sum_l alpha_l L_low^l + sum_l beta_l L_up^l`.
//!
//! Application never materializes matrix powers: `L^l x` is obtained by
//! shifting the previous power once more, so a filter of orders (L1, L2)
//! costs `max(L1, L2)` sparse products of each kind.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::complex::LaplacianSet;
use crate::linalg::{LinalgError, SparseMatrix};

/// Filter coefficients (epsilon, alpha[1..=L1], beta[1..=L2]). Empty
/// coefficient vectors are legal and make the filter a pure scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplicialFilter {
    pub epsilon: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SimplicialFilter {
    pub fn new(epsilon: f64, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        Self { epsilon, alpha, beta }
    }

    /// The identity filter (eps = 1, no shifts).
    pub fn identity() -> Self {
        Self::new(1.0, Vec::new(), Vec::new())
    }

    pub fn zero() -> Self {
        Self::new(0.0, Vec::new(), Vec::new())
    }

    /// Lower polynomial order L1.
    pub fn lower_order(&self) -> usize {
        self.alpha.len()
    }

    /// Upper polynomial order L2.
    pub fn upper_order(&self) -> usize {
        self.beta.len()
    }

    /// Total coefficient count 1 + L1 + L2.
    pub fn num_coefficients(&self) -> usize {
        1 + self.alpha.len() + self.beta.len()
    }

    /// Whether the lower and upper coefficient vectors coincide.
    pub fn is_tied(&self) -> bool {
        self.alpha == self.beta
    }
}

/// Builds the filter with tied coefficients that reduces to the basic
/// polynomial `sum_l h_l L^l` in the full Hodge Laplacian: eps = h[0] and
/// alpha = beta = h[1..].
pub fn snn_filter(h_coeffs: &[f64]) -> SimplicialFilter {
    match h_coeffs.split_first() {
        Some((&h0, rest)) => SimplicialFilter::new(h0, rest.to_vec(), rest.to_vec()),
        None => SimplicialFilter::zero(),
    }
}

/// One simplicial shift within the lower neighborhoods: `L_low * x`.
pub fn shift_lower(lap: &LaplacianSet, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    lap.lower.spmv(x)
}

/// One simplicial shift within the upper neighborhoods: `L_up * x`.
pub fn shift_upper(lap: &LaplacianSet, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
    lap.upper.spmv(x)
}

/// Number of lower/upper shifts performed by a filter application.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftCount {
    pub lower: usize,
    pub upper: usize,
}

/// `M^l x` for l = 1..=n, each power obtained by one more shift of the
/// previous one.
pub fn shift_powers(m: &SparseMatrix, x: &[f64], n: usize) -> Result<Vec<Vec<f64>>, LinalgError> {
    let mut powers = Vec::with_capacity(n);
    let mut current = x;
    for _ in 0..n {
        let next = m.spmv(current)?;
        powers.push(next);
        current = powers.last().unwrap();
    }
    Ok(powers)
}

/// Combines precomputed shift powers with filter coefficients:
/// `eps*x + sum alpha_l lower[l-1] + sum beta_l upper[l-1]`.
pub fn combine_powers(
    h: &SimplicialFilter,
    x: &[f64],
    lower_powers: &[Vec<f64>],
    upper_powers: &[Vec<f64>],
) -> Vec<f64> {
    let mut y: Vec<f64> = x.iter().map(|&v| h.epsilon * v).collect();
    for (coeff, power) in h.alpha.iter().zip(lower_powers) {
        for (yi, p) in y.iter_mut().zip(power) {
            *yi += coeff * p;
        }
    }
    for (coeff, power) in h.beta.iter().zip(upper_powers) {
        for (yi, p) in y.iter_mut().zip(power) {
            *yi += coeff * p;
        }
    }
    y
}

/// Applies the filter to a k-simplicial signal by recursive shifting.
pub fn apply_filter(
    lap: &LaplacianSet,
    h: &SimplicialFilter,
    x: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    Ok(apply_filter_counted(lap, h, x)?.0)
}

/// Like [`apply_filter`] but also reports how many shifts of each kind were
/// performed: exactly `max(L1, L2)` of each.
pub fn apply_filter_counted(
    lap: &LaplacianSet,
    h: &SimplicialFilter,
    x: &[f64],
) -> Result<(Vec<f64>, ShiftCount), LinalgError> {
    if x.len() != lap.dim() {
        return Err(LinalgError::DimensionMismatch {
            op: "apply_filter",
            expected: lap.dim(),
            got: x.len(),
        });
    }
    let rounds = h.lower_order().max(h.upper_order());
    let lower_powers = shift_powers(&lap.lower, x, rounds)?;
    let upper_powers = shift_powers(&lap.upper, x, rounds)?;
    let y = combine_powers(h, x, &lower_powers, &upper_powers);
    Ok((
        y,
        ShiftCount {
            lower: rounds,
            upper: rounds,
        },
    ))
}

/// Dense materialization of the filter matrix, assembled independently of
/// the shifting recursion (dense matrix powers); serves as an oracle for
/// [`apply_filter`].
pub fn materialize(lap: &LaplacianSet, h: &SimplicialFilter) -> DMatrix<f64> {
    let n = lap.dim();
    let lower = lap.lower.to_dense();
    let upper = lap.upper.to_dense();
    let mut out = DMatrix::identity(n, n) * h.epsilon;
    let mut lower_power = DMatrix::identity(n, n);
    for &coeff in &h.alpha {
        lower_power = &lower_power * &lower;
        out += &lower_power * coeff;
    }
    let mut upper_power = DMatrix::identity(n, n);
    for &coeff in &h.beta {
        upper_power = &upper_power * &upper;
        out += &upper_power * coeff;
    }
    out
}

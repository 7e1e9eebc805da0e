//! Hodge decomposition, simplicial Fourier transform, and filter frequency
//! responses.
//!
//! The gradient basis comes from the eigenvectors of the lower Laplacian
//! with positive eigenvalues, the curl basis from the upper Laplacian, and
//! the harmonic basis from the kernel of the full Laplacian. Keeping the
//! three decompositions separate avoids any ambiguity when gradient and curl
//! frequencies collide.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::complex::LaplacianSet;
use crate::filter::{apply_filter, materialize, SimplicialFilter};
use crate::linalg::{project_onto, sym_eig, LinalgError};

/// Relative eigenvalue threshold below which an eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("subspace dimensions are inconsistent: N_H={n_h} + N_G={n_g} + N_C={n_c} != N={n}")]
    CountMismatch {
        n_h: usize,
        n_g: usize,
        n_c: usize,
        n: usize,
    },
    #[error("combined basis is not orthonormal (max deviation {deviation:.3e}); eigensolver breakdown")]
    NotOrthonormal { deviation: f64 },
    #[error("embedding has wrong block sizes")]
    EmbeddingMismatch,
}

/// Orthonormal eigenbases of the harmonic, gradient and curl subspaces, with
/// the strictly positive gradient/curl frequencies.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub harmonic: DMatrix<f64>,
    pub gradient: DMatrix<f64>,
    pub curl: DMatrix<f64>,
    pub gradient_freqs: Vec<f64>,
    pub curl_freqs: Vec<f64>,
    pub zero_tol: f64,
}

impl SpectralBasis {
    /// Signal dimension N_k.
    pub fn dim(&self) -> usize {
        self.harmonic.nrows()
    }

    pub fn n_harmonic(&self) -> usize {
        self.harmonic.ncols()
    }

    pub fn n_gradient(&self) -> usize {
        self.gradient.ncols()
    }

    pub fn n_curl(&self) -> usize {
        self.curl.ncols()
    }

    /// The full Fourier basis `[U_H U_G U_C]`.
    pub fn full_basis(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut u = DMatrix::zeros(n, self.n_harmonic() + self.n_gradient() + self.n_curl());
        let mut col = 0;
        for block in [&self.harmonic, &self.gradient, &self.curl] {
            for j in 0..block.ncols() {
                u.set_column(col, &block.column(j));
                col += 1;
            }
        }
        u
    }

    /// Frequencies aligned with [`full_basis`] columns: zeros for the
    /// harmonic block, then gradient and curl frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut freqs = vec![0.0; self.n_harmonic()];
        freqs.extend_from_slice(&self.gradient_freqs);
        freqs.extend_from_slice(&self.curl_freqs);
        freqs
    }
}

/// A signal expressed in the simplicial Fourier basis, split by subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub harmonic: Vec<f64>,
    pub gradient: Vec<f64>,
    pub curl: Vec<f64>,
}

/// The three Hodge components of a signal, in the original domain.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeComponents {
    pub gradient: Vec<f64>,
    pub curl: Vec<f64>,
    pub harmonic: Vec<f64>,
}

fn eig_columns_above(
    m: &DMatrix<f64>,
    zero_tol: f64,
    keep_above: bool,
) -> Result<(DMatrix<f64>, Vec<f64>), LinalgError> {
    let eig = sym_eig(m)?;
    let lambda_max = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    let threshold = zero_tol * lambda_max;
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| (eig.eigenvalues[i] > threshold) == keep_above)
        .collect();
    let mut basis = DMatrix::zeros(m.nrows(), keep.len());
    let mut freqs = Vec::with_capacity(keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &eig.eigenvectors.column(src));
        freqs.push(eig.eigenvalues[src]);
    }
    Ok((basis, freqs))
}

/// Computes the Hodge spectral basis at the given zero tolerance (relative
/// to the largest eigenvalue of each operator).
pub fn hodge_basis(lap: &LaplacianSet, zero_tol: f64) -> Result<SpectralBasis, SpectralError> {
    let n = lap.dim();
    let (gradient, gradient_freqs) = eig_columns_above(&lap.lower.to_dense(), zero_tol, true)?;
    let (curl, curl_freqs) = eig_columns_above(&lap.upper.to_dense(), zero_tol, true)?;
    let (harmonic, _) = eig_columns_above(&lap.full.to_dense(), zero_tol, false)?;

    let basis = SpectralBasis {
        harmonic,
        gradient,
        curl,
        gradient_freqs,
        curl_freqs,
        zero_tol,
    };
    if basis.n_harmonic() + basis.n_gradient() + basis.n_curl() != n {
        return Err(SpectralError::CountMismatch {
            n_h: basis.n_harmonic(),
            n_g: basis.n_gradient(),
            n_c: basis.n_curl(),
            n,
        });
    }
    let u = basis.full_basis();
    let gram = u.transpose() * &u;
    let deviation = (gram - DMatrix::identity(n, n)).amax();
    if deviation > 1e-8 {
        return Err(SpectralError::NotOrthonormal { deviation });
    }
    Ok(basis)
}

/// Simplicial Fourier transform: the harmonic, gradient and curl embeddings
/// `U_S^T x`.
pub fn sft(basis: &SpectralBasis, x: &[f64]) -> Result<Embedding, SpectralError> {
    if x.len() != basis.dim() {
        return Err(SpectralError::Linalg(LinalgError::DimensionMismatch {
            op: "sft",
            expected: basis.dim(),
            got: x.len(),
        }));
    }
    let coeffs = |u: &DMatrix<f64>| -> Vec<f64> {
        (0..u.ncols())
            .map(|j| u.column(j).iter().zip(x).map(|(b, v)| b * v).sum())
            .collect()
    };
    Ok(Embedding {
        harmonic: coeffs(&basis.harmonic),
        gradient: coeffs(&basis.gradient),
        curl: coeffs(&basis.curl),
    })
}

/// Inverse simplicial Fourier transform.
pub fn isft(basis: &SpectralBasis, embedding: &Embedding) -> Result<Vec<f64>, SpectralError> {
    if embedding.harmonic.len() != basis.n_harmonic()
        || embedding.gradient.len() != basis.n_gradient()
        || embedding.curl.len() != basis.n_curl()
    {
        return Err(SpectralError::EmbeddingMismatch);
    }
    let mut x = vec![0.0; basis.dim()];
    let mut add = |u: &DMatrix<f64>, coeffs: &[f64]| {
        for (j, &c) in coeffs.iter().enumerate() {
            for (xi, b) in x.iter_mut().zip(u.column(j).iter()) {
                *xi += c * b;
            }
        }
    };
    add(&basis.harmonic, &embedding.harmonic);
    add(&basis.gradient, &embedding.gradient);
    add(&basis.curl, &embedding.curl);
    Ok(x)
}

/// Splits a signal into its gradient, curl and harmonic components by
/// orthogonal projection onto the three subspaces.
pub fn hodge_components(
    basis: &SpectralBasis,
    x: &[f64],
) -> Result<HodgeComponents, SpectralError> {
    Ok(HodgeComponents {
        gradient: project_onto(&basis.gradient, x)?,
        curl: project_onto(&basis.curl, x)?,
        harmonic: project_onto(&basis.harmonic, x)?,
    })
}

/// A filter's frequency response per subspace: `eps` at harmonic
/// frequencies, `eps + sum alpha_l lambda^l` at gradient frequencies and
/// `eps + sum beta_l lambda^l` at curl frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub harmonic: f64,
    pub gradient: Vec<f64>,
    pub curl: Vec<f64>,
}

fn poly_response(epsilon: f64, coeffs: &[f64], lambda: f64) -> f64 {
    let mut power = 1.0;
    let mut acc = epsilon;
    for &c in coeffs {
        power *= lambda;
        acc += c * power;
    }
    acc
}

/// Evaluates the frequency response of a filter on the basis frequencies.
pub fn frequency_response(h: &SimplicialFilter, basis: &SpectralBasis) -> FrequencyResponse {
    FrequencyResponse {
        harmonic: h.epsilon,
        gradient: basis
            .gradient_freqs
            .iter()
            .map(|&l| poly_response(h.epsilon, &h.alpha, l))
            .collect(),
        curl: basis
            .curl_freqs
            .iter()
            .map(|&l| poly_response(h.epsilon, &h.beta, l))
            .collect(),
    }
}

/// Maximum deviation between the SFT of a filtered signal and the pointwise
/// product of the frequency response with the SFT of the input; small values
/// confirm the convolution theorem on this complex.
pub fn layer_spectral_check(
    lap: &LaplacianSet,
    basis: &SpectralBasis,
    h: &SimplicialFilter,
    x: &[f64],
) -> Result<f64, SpectralError> {
    let filtered = apply_filter(lap, h, x)?;
    let lhs = sft(basis, &filtered)?;
    let input = sft(basis, x)?;
    let response = frequency_response(h, basis);

    let mut residual: f64 = 0.0;
    for (l, i) in lhs.harmonic.iter().zip(&input.harmonic) {
        residual = residual.max((l - response.harmonic * i).abs());
    }
    for ((l, i), r) in lhs.gradient.iter().zip(&input.gradient).zip(&response.gradient) {
        residual = residual.max((l - r * i).abs());
    }
    for ((l, i), r) in lhs.curl.iter().zip(&input.curl).zip(&response.curl) {
        residual = residual.max((l - r * i).abs());
    }
    Ok(residual)
}

/// Max-norm residual of the spectral theorem `U^T H U = diag(response)` for
/// the materialized filter matrix; used to validate responses blockwise.
pub fn response_diagonalization_residual(
    lap: &LaplacianSet,
    basis: &SpectralBasis,
    h: &SimplicialFilter,
) -> f64 {
    let dense = materialize(lap, h);
    let u = basis.full_basis();
    let transformed = u.transpose() * dense * &u;
    let response = frequency_response(h, basis);
    let mut diag = vec![response.harmonic; basis.n_harmonic()];
    diag.extend_from_slice(&response.gradient);
    diag.extend_from_slice(&response.curl);

    let mut residual: f64 = 0.0;
    for i in 0..transformed.nrows() {
        for j in 0..transformed.ncols() {
            let expected = if i == j { diag[i] } else { 0.0 };
            residual = residual.max((transformed[(i, j)] - expected).abs());
        }
    }
    residual
}

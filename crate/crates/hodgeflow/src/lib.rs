//! Simplicial signal processing and learning over Hodge Laplacians.
//!
//! The crate builds simplicial complexes with their incidence matrices and
//! Hodge Laplacians (`complex`), applies simplicial convolutional filters by
//! recursive local shifting (`filter`), analyzes signals through the Hodge
//! decomposition and the simplicial Fourier transform (`spectral`), stacks
//! filter banks into simplicial convolutional neural networks (`scnn`), and
//! trains them with exact reverse-mode gradients and Adam (`learn`). The
//! `data` module covers coauthorship/citation datasets, imputation tasks and
//! synthetic generators.

pub mod complex;
pub mod data;
pub mod filter;
pub mod learn;
pub mod linalg;
pub mod scnn;
pub mod spectral;

pub use complex::{IncidenceMatrix, LaplacianSet, SimplicialComplex};
pub use filter::SimplicialFilter;
pub use scnn::{Nonlinearity, ScnnModel};
pub use spectral::SpectralBasis;

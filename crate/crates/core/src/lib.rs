//! Homology-sensitive clustering of simplicial complexes.
//!
//! Chains on the `p`-simplices of a complex split orthogonally into
//! harmonic, boundary and coboundary parts. Embedding each simplex by its
//! inner products with an orthonormal harmonic basis sends simplices that
//! carry the same homological feature onto a common line through the origin;
//! clustering those lines groups simplices by the holes they go around.

pub mod baseline;
pub mod clustering;
pub mod complex;
pub mod error;
pub mod experiments;
pub mod io;
pub mod laplacian;
pub mod sparse;
pub mod spectral;
pub mod svg;
pub mod synthetic;

pub use complex::{InnerProduct, Simplex, SimplicialComplex, Violation};
pub use error::{Error, Result};
pub use laplacian::{
    adjoint_boundary, boundary_matrix, graph_laplacian, laplacian, LaplacianOperator,
    LaplacianOptions, LinearOperator,
};
pub use sparse::CsrMatrix;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use spectral::{betti, betti_numbers, harmonic_basis, HarmonicBasis};

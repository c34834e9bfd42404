//! Betti numbers, harmonic bases and low eigenpairs of Laplacians.

mod eigen;
mod hodge;
pub mod rank;

use serde::Serialize;

pub use eigen::{
    dense_eigen, estimate_largest_eigenvalue, low_spectrum, Solver, SolverOptions, SpectralReport,
};
pub use hodge::{hodge_check, hodge_check_with, HodgeReport};

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::laplacian::{LaplacianOperator, LaplacianOptions, LinearOperator};

/// Above this many harmonics the embedding stops being a small-dimensional
/// picture; we warn but carry on.
pub const LARGE_BETTI: usize = 10;

/// `β_p = |K_p| - rank ∂_p - rank ∂_{p+1}`, computed from exact ranks.
pub fn betti(complex: &SimplicialComplex, p: usize) -> Result<usize> {
    let n = complex.count(p);
    let down = rank::boundary_rank(complex, p)?;
    let up = rank::boundary_rank(complex, p + 1)?;
    Ok(n - down - up)
}

/// All Betti numbers up to the top dimension.
pub fn betti_numbers(complex: &SimplicialComplex) -> Result<Vec<usize>> {
    match complex.dimension() {
        None => Ok(Vec::new()),
        Some(d) => (0..=d).map(|p| betti(complex, p)).collect(),
    }
}

/// Orthonormal basis of the degree-`p` harmonic space `ker L_p`.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicBasis {
    pub degree: usize,
    /// Coefficient vectors over `K_p`, orthonormal for the weighted inner
    /// product.
    pub vectors: Vec<Vec<f64>>,
    /// Weighted norm of `L_p h` per vector.
    pub residuals: Vec<f64>,
    /// Eigenvalues attached to the basis vectors (all numerically zero).
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue above the kernel threshold, if `L_p` has one.
    pub spectral_gap: Option<f64>,
    /// Absolute kernel threshold that was used.
    pub tolerance: f64,
    pub solver: Solver,
}

impl HarmonicBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Coefficient count of each vector, `|K_p|`.
    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }
}

/// Computes an orthonormal harmonic basis and cross-checks its size against
/// the rank-based Betti number.
pub fn harmonic_basis(
    complex: &SimplicialComplex,
    p: usize,
    options: &SolverOptions,
) -> Result<HarmonicBasis> {
    if options.kernel_tolerance.is_nan() || options.kernel_tolerance <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kernel tolerance must be positive, got {}",
            options.kernel_tolerance
        )));
    }
    let beta = betti(complex, p)?;
    let n = complex.count(p);
    if n == 0 {
        return Ok(HarmonicBasis {
            degree: p,
            vectors: Vec::new(),
            residuals: Vec::new(),
            eigenvalues: Vec::new(),
            spectral_gap: None,
            tolerance: options.kernel_tolerance,
            solver: Solver::Dense,
        });
    }
    if beta > LARGE_BETTI {
        log::warn!("β_{p} = {beta}: the harmonic embedding has many dimensions");
    }
    let op = LaplacianOperator::new(complex, p, LaplacianOptions::default())?;
    let wanted = (beta + 1).min(n);
    let report = low_spectrum(&op, wanted, false, options)?;
    let threshold = report.kernel_threshold;
    let kernel = report
        .eigenvalues
        .iter()
        .filter(|&&v| v < threshold)
        .count();
    if kernel != beta {
        return Err(Error::KernelMismatch {
            degree: p,
            eigen_count: kernel,
            betti: beta,
            tolerance: threshold,
        });
    }

    let weights = op.sqrt_gram();
    let mut vectors = Vec::with_capacity(beta);
    let mut residuals = Vec::with_capacity(beta);
    for y in &report.eigenvectors[..beta] {
        let mut image = vec![0.0; n];
        op.apply(y, &mut image);
        residuals.push(image.iter().map(|v| v * v).sum::<f64>().sqrt());
        vectors.push(y.iter().zip(weights).map(|(a, w)| a / w).collect());
    }
    Ok(HarmonicBasis {
        degree: p,
        vectors,
        residuals,
        eigenvalues: report.eigenvalues[..beta].to_vec(),
        spectral_gap: report.eigenvalues.get(beta).copied(),
        tolerance: threshold,
        solver: report.solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hollow_triangle() -> SimplicialComplex {
        SimplicialComplex::from_simplices([vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap()
    }

    #[test]
    fn betti_numbers_of_small_complexes() {
        assert_eq!(betti_numbers(&hollow_triangle()).unwrap(), vec![1, 1]);
        let filled = SimplicialComplex::from_simplices([vec![0, 1, 2]]).unwrap();
        assert_eq!(betti_numbers(&filled).unwrap(), vec![1, 0, 0]);
        let two = SimplicialComplex::from_simplices([
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
            vec![3, 4],
            vec![3, 5],
            vec![4, 5],
        ])
        .unwrap();
        assert_eq!(betti_numbers(&two).unwrap(), vec![2, 2]);
        assert!(betti_numbers(&SimplicialComplex::new()).unwrap().is_empty());
    }

    #[test]
    fn hollow_triangle_harmonic_is_the_cycle() {
        let basis = harmonic_basis(&hollow_triangle(), 1, &SolverOptions::default()).unwrap();
        assert_eq!(basis.len(), 1);
        let r = 1.0 / 3f64.sqrt();
        let h = &basis.vectors[0];
        let s = h[0].signum();
        for (x, e) in h.iter().zip([r, -r, r]) {
            assert!((x * s - e).abs() < 1e-12);
        }
        assert!(basis.residuals[0] < 1e-12);
        assert!((basis.spectral_gap.unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn filled_triangle_has_no_harmonics() {
        let filled = SimplicialComplex::from_simplices([vec![0, 1, 2]]).unwrap();
        let basis = harmonic_basis(&filled, 1, &SolverOptions::default()).unwrap();
        assert!(basis.is_empty());
    }

    #[test]
    fn weighted_harmonic_is_orthonormal_in_the_weighted_product() {
        let mut k = hollow_triangle();
        let e = crate::complex::Simplex::new(vec![0, 1]).unwrap();
        k.set_weight(&e, 2.0).unwrap();
        let basis = harmonic_basis(&k, 1, &SolverOptions::default()).unwrap();
        let ip = k.inner_product(1);
        assert!((ip.norm(&basis.vectors[0]) - 1.0).abs() < 1e-12);
        // still the unique cycle up to scale
        let h = &basis.vectors[0];
        assert!((h[0] + h[1]).abs() < 1e-12 && (h[0] - h[2]).abs() < 1e-12);
    }
}

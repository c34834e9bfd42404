//! Numerical check of the orthogonal decomposition of chains into harmonic,
//! boundary and coboundary parts.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{harmonic_basis, HarmonicBasis, SolverOptions};
use crate::complex::SimplicialComplex;
use crate::error::Result;
use crate::laplacian::{adjoint_boundary, boundary_matrix};
use crate::sparse::CsrMatrix;

/// Largest violation of each property over all sampled chains. Sampled
/// chains are normalized to unit weighted norm, so values are absolute.
#[derive(Clone, Debug, Default, Serialize)]
pub struct HodgeReport {
    pub degree: usize,
    pub samples: usize,
    pub harmonic_dimension: usize,
    /// Max `|⟨a, b⟩_p|` over pairs of the three components.
    pub orthogonality: f64,
    /// Max `‖∂_p h‖` over harmonic basis vectors.
    pub cycle_residual: f64,
    /// Max `‖∂*_{p+1} h‖` over harmonic basis vectors.
    pub cocycle_residual: f64,
    /// Max `‖∂_p (x - c)‖`: the harmonic plus boundary part is a cycle.
    pub cycle_part_boundary: f64,
    /// Max `‖∂*_{p+1} c‖`: the remainder is a coboundary, hence a cocycle.
    pub remainder_cocycle: f64,
    /// Min of `‖h + ∂_{p+1} y‖² - ‖h‖²` over the random perturbations.
    pub minimality_slack: f64,
    /// Number of perturbations that shortened the harmonic representative
    /// beyond rounding.
    pub minimality_violations: usize,
}

impl HodgeReport {
    /// True when every residual is below `tolerance` and minimality held.
    pub fn holds(&self, tolerance: f64) -> bool {
        self.orthogonality < tolerance
            && self.cycle_residual < tolerance
            && self.cocycle_residual < tolerance
            && self.cycle_part_boundary < tolerance
            && self.remainder_cocycle < tolerance
            && self.minimality_violations == 0
    }
}

/// Orthogonal projector onto the image of the scaled boundary `C_{p+1}`.
enum BoundaryProjector {
    /// Orthonormal basis of the column space.
    Dense(DMatrix<f64>),
    Iterative(CsrMatrix),
}

const DENSE_LIMIT: usize = 2000;

impl BoundaryProjector {
    fn new(scaled_up: CsrMatrix) -> Self {
        if scaled_up.cols() == 0 || scaled_up.rows() == 0 {
            return BoundaryProjector::Dense(DMatrix::zeros(scaled_up.rows(), 0));
        }
        if scaled_up.rows().max(scaled_up.cols()) > DENSE_LIMIT {
            return BoundaryProjector::Iterative(scaled_up);
        }
        // eigenvectors of C Cᵀ with non-zero eigenvalue span the image of C
        let c = scaled_up.to_dense();
        let eig = (&c * c.transpose()).symmetric_eigen();
        let top = eig.eigenvalues.max().max(0.0);
        let cutoff = top * 1e-10 * (scaled_up.rows().max(scaled_up.cols()) as f64);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > cutoff)
            .collect();
        let u = eig.eigenvectors;
        BoundaryProjector::Dense(u.select_columns(&keep))
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            BoundaryProjector::Dense(u) => {
                if u.ncols() == 0 {
                    return vec![0.0; x.len()];
                }
                let v = nalgebra::DVector::from_column_slice(x);
                (u * (u.transpose() * v)).iter().copied().collect()
            }
            BoundaryProjector::Iterative(c) => cgls_projection(c, x),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `C y*` where `y*` minimizes `‖C y - x‖`, by conjugate gradients on the
/// normal equations.
fn cgls_projection(c: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    let ct = c.transpose();
    let mut y = vec![0.0; c.cols()];
    let mut r = x.to_vec();
    let mut s = ct.mul_vec(&r);
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let stop = 1e-28 * gamma.max(1e-300);
    for _ in 0..10 * c.cols().max(10) {
        if gamma <= stop {
            break;
        }
        let q = c.mul_vec(&p);
        let alpha = gamma / dot(&q, &q);
        y.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.iter_mut().zip(&q).for_each(|(a, b)| *a -= alpha * b);
        s = ct.mul_vec(&r);
        let next = dot(&s, &s);
        let beta = next / gamma;
        gamma = next;
        p.iter_mut().zip(&s).for_each(|(a, b)| *a = b + beta * *a);
    }
    c.mul_vec(&y)
}

/// Runs [`hodge_check_with`] on a freshly computed harmonic basis.
pub fn hodge_check(
    complex: &SimplicialComplex,
    p: usize,
    samples: usize,
    seed: u64,
) -> Result<HodgeReport> {
    let basis = harmonic_basis(complex, p, &SolverOptions::default())?;
    hodge_check_with(complex, &basis, samples, seed)
}

/// Decomposes `samples` random chains as `x = h + b + c` (harmonic,
/// boundary, remainder) and measures how far the decomposition is from
/// orthogonal, together with the cycle and cocycle properties of the
/// harmonics and their minimality within homology classes.
pub fn hodge_check_with(
    complex: &SimplicialComplex,
    basis: &HarmonicBasis,
    samples: usize,
    seed: u64,
) -> Result<HodgeReport> {
    let p = basis.degree;
    let n = complex.count(p);
    let ip = complex.inner_product(p);
    let w = complex.weights(p);
    let mut report = HodgeReport {
        degree: p,
        samples,
        harmonic_dimension: basis.len(),
        minimality_slack: f64::INFINITY,
        ..Default::default()
    };
    if n == 0 {
        report.minimality_slack = 0.0;
        return Ok(report);
    }

    let down = boundary_matrix(complex, p)?;
    let up = boundary_matrix(complex, p + 1)?;
    let co = adjoint_boundary(complex, p + 1)?;
    let norm = |v: &[f64]| dot(v, v).sqrt();

    for h in &basis.vectors {
        report.cycle_residual = report.cycle_residual.max(norm(&down.mul_vec(h)));
        report.cocycle_residual = report.cocycle_residual.max(norm(&co.mul_vec(h)));
    }

    let inv_upper: Vec<f64> = complex.weights(p + 1).iter().map(|v| 1.0 / v).collect();
    let projector = BoundaryProjector::new(up.scale(w, &inv_upper));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nx = ip.norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);

        let mut h = vec![0.0; n];
        for hi in &basis.vectors {
            let c = ip.dot(&x, hi);
            h.iter_mut().zip(hi).for_each(|(a, b)| *a += c * b);
        }
        let scaled: Vec<f64> = x.iter().zip(w).map(|(a, s)| a * s).collect();
        let b: Vec<f64> = projector
            .project(&scaled)
            .iter()
            .zip(w)
            .map(|(a, s)| a / s)
            .collect();
        let c: Vec<f64> = (0..n).map(|i| x[i] - h[i] - b[i]).collect();

        for (u, v) in [(&h, &b), (&h, &c), (&b, &c)] {
            report.orthogonality = report.orthogonality.max(ip.dot(u, v).abs());
        }
        let cycle_part: Vec<f64> = (0..n).map(|i| h[i] + b[i]).collect();
        report.cycle_part_boundary = report
            .cycle_part_boundary
            .max(norm(&down.mul_vec(&cycle_part)));
        report.remainder_cocycle = report.remainder_cocycle.max(norm(&co.mul_vec(&c)));

        let y: Vec<f64> = (0..up.cols())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let shift = up.mul_vec(&y);
        let moved: Vec<f64> = h.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let before = ip.dot(&h, &h);
        let slack = ip.dot(&moved, &moved) - before;
        report.minimality_slack = report.minimality_slack.min(slack);
        if slack < -1e-12 * before.max(1.0) {
            report.minimality_violations += 1;
        }
    }
    if !report.minimality_slack.is_finite() {
        report.minimality_slack = 0.0;
    }
    Ok(report)
}

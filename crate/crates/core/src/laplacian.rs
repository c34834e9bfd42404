//! Boundary operators, their weighted adjoints and simplicial Laplacians.
//!
//! Weights enter through the diagonal Gram matrices `W_p = diag(w(σ)²)`.
//! With `D_p = W_p^{1/2}` the scaled boundary `C_p = D_{p-1} B_p D_p^{-1}`
//! turns the weighted Laplacian into the ordinary symmetric matrix
//! `S_p = C_{p+1} C_{p+1}ᵀ + C_pᵀ C_p = D_p L_p D_p^{-1}`, which is what the
//! eigensolvers see.

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// A symmetric linear map accessed only through matrix-vector products.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Diagonal of the matrix, used for preconditioning.
    fn diagonal(&self) -> Vec<f64>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols());
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diagonal_entries()
    }
}

/// Column-wise integer boundary data: for each `p`-simplex, its faces as
/// `(row index in K_{p-1}, ±1)` in ascending row order.
pub fn boundary_columns(complex: &SimplicialComplex, p: usize) -> Result<Vec<Vec<(usize, i8)>>> {
    if p == 0 {
        return Ok(vec![Vec::new(); complex.count(0)]);
    }
    complex
        .simplices(p)
        .iter()
        .map(|simplex| {
            let mut column = simplex
                .faces()
                .into_iter()
                .map(|(face, sign)| {
                    complex
                        .index_of(&face)
                        .map(|row| (row, sign))
                        .ok_or(Error::UnknownSimplex(face))
                })
                .collect::<Result<Vec<_>>>()?;
            column.sort_unstable_by_key(|&(row, _)| row);
            Ok(column)
        })
        .collect()
}

/// Matrix of `∂_p` in the canonical bases: `|K_{p-1}|` rows, `|K_p|` columns.
///
/// For `p = 0` the matrix has zero rows.
pub fn boundary_matrix(complex: &SimplicialComplex, p: usize) -> Result<CsrMatrix> {
    let rows = if p == 0 { 0 } else { complex.count(p - 1) };
    let columns = boundary_columns(complex, p)?;
    let triplets = columns.iter().enumerate().flat_map(|(col, entries)| {
        entries
            .iter()
            .map(move |&(row, sign)| (row, col, f64::from(sign)))
    });
    Ok(CsrMatrix::from_triplets(rows, complex.count(p), triplets))
}

fn lower_weights(complex: &SimplicialComplex, p: usize) -> Vec<f64> {
    if p == 0 {
        Vec::new()
    } else {
        complex.weights(p - 1).to_vec()
    }
}

/// Matrix of the adjoint `∂*_p : C_{p-1} → C_p`, i.e. `W_p^{-1} B_pᵀ W_{p-1}`.
pub fn adjoint_boundary(complex: &SimplicialComplex, p: usize) -> Result<CsrMatrix> {
    let b = boundary_matrix(complex, p)?;
    let inv_wp: Vec<f64> = complex.weights(p).iter().map(|w| 1.0 / (w * w)).collect();
    let w_lower: Vec<f64> = lower_weights(complex, p).iter().map(|w| w * w).collect();
    Ok(b.transpose().scale(&inv_wp, &w_lower))
}

#[derive(Clone, Copy, Debug)]
pub struct LaplacianOptions {
    /// Operators with at most this many columns are assembled explicitly.
    pub explicit_threshold: usize,
}

impl Default for LaplacianOptions {
    fn default() -> Self {
        LaplacianOptions {
            explicit_threshold: 20_000,
        }
    }
}

/// The degree-`p` simplicial Laplacian `L_p = ∂_{p+1}∂*_{p+1} + ∂*_p∂_p`.
///
/// As a [`LinearOperator`] it acts as the symmetrized `S_p = D_p L_p D_p^{-1}`
/// (identical to `L_p` for unit weights); [`apply_laplacian`] applies `L_p`
/// itself.
///
/// [`apply_laplacian`]: Self::apply_laplacian
#[derive(Clone, Debug)]
pub struct LaplacianOperator {
    degree: usize,
    /// `C_p` with shape `|K_{p-1}| × |K_p|`.
    down: CsrMatrix,
    down_t: CsrMatrix,
    /// `C_{p+1}` with shape `|K_p| × |K_{p+1}|`.
    up: CsrMatrix,
    up_t: CsrMatrix,
    /// `w(σ)` for the degree-`p` simplices.
    sqrt_gram: Vec<f64>,
    explicit: Option<CsrMatrix>,
}

pub fn laplacian(complex: &SimplicialComplex, p: usize) -> Result<LaplacianOperator> {
    LaplacianOperator::new(complex, p, LaplacianOptions::default())
}

impl LaplacianOperator {
    pub fn new(complex: &SimplicialComplex, p: usize, options: LaplacianOptions) -> Result<Self> {
        let n = complex.count(p);
        let sqrt_gram = complex.weights(p).to_vec();
        let inv: Vec<f64> = sqrt_gram.iter().map(|w| 1.0 / w).collect();

        let down = boundary_matrix(complex, p)?.scale(&lower_weights(complex, p), &inv);
        let upper_inv: Vec<f64> = complex.weights(p + 1).iter().map(|w| 1.0 / w).collect();
        let up = boundary_matrix(complex, p + 1)?.scale(&sqrt_gram, &upper_inv);
        let down_t = down.transpose();
        let up_t = up.transpose();
        let mut op = LaplacianOperator {
            degree: p,
            down,
            down_t,
            up,
            up_t,
            sqrt_gram,
            explicit: None,
        };
        if n <= options.explicit_threshold {
            op.explicit = Some(op.assemble());
        }
        Ok(op)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit.is_some()
    }

    /// `w(σ)` per basis simplex; `D_p` in the module notation.
    pub fn sqrt_gram(&self) -> &[f64] {
        &self.sqrt_gram
    }

    /// Explicit sparse `S_p`.
    pub fn assemble(&self) -> CsrMatrix {
        if let Some(m) = &self.explicit {
            return m.clone();
        }
        self.up
            .matmul(&self.up_t)
            .add(&self.down_t.matmul(&self.down))
    }

    /// Explicit sparse `L_p` in the canonical basis.
    pub fn assemble_laplacian(&self) -> CsrMatrix {
        let d = &self.sqrt_gram;
        let inv: Vec<f64> = d.iter().map(|w| 1.0 / w).collect();
        self.assemble().scale(&inv, d)
    }

    pub fn assemble_up(&self) -> CsrMatrix {
        let inv: Vec<f64> = self.sqrt_gram.iter().map(|w| 1.0 / w).collect();
        self.up.matmul(&self.up_t).scale(&inv, &self.sqrt_gram)
    }

    pub fn assemble_down(&self) -> CsrMatrix {
        let inv: Vec<f64> = self.sqrt_gram.iter().map(|w| 1.0 / w).collect();
        self.down_t.matmul(&self.down).scale(&inv, &self.sqrt_gram)
    }

    fn apply_up_sym(&self, x: &[f64], y: &mut [f64]) {
        let t = self.up_t.mul_vec(x);
        self.up.mul_vec_into(&t, y);
    }

    fn apply_down_sym(&self, x: &[f64], y: &mut [f64]) {
        let t = self.down.mul_vec(x);
        self.down_t.mul_vec_into(&t, y);
    }

    /// Matrix-free `S_p x`, ignoring any explicit assembly.
    pub fn apply_matrix_free(&self, x: &[f64], y: &mut [f64]) {
        let mut down = vec![0.0; y.len()];
        self.apply_up_sym(x, y);
        self.apply_down_sym(x, &mut down);
        for (a, b) in y.iter_mut().zip(down) {
            *a += b;
        }
    }

    fn unsym<F: Fn(&[f64], &mut [f64])>(&self, f: F, x: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = x.iter().zip(&self.sqrt_gram).map(|(a, w)| a * w).collect();
        let mut y = vec![0.0; x.len()];
        f(&scaled, &mut y);
        y.iter_mut().zip(&self.sqrt_gram).for_each(|(a, w)| *a /= w);
        y
    }

    /// `L_p x` in the canonical basis.
    pub fn apply_laplacian(&self, x: &[f64]) -> Vec<f64> {
        self.unsym(|a, b| self.apply(a, b), x)
    }

    /// `L_p^up x = ∂_{p+1}∂*_{p+1} x`.
    pub fn apply_up(&self, x: &[f64]) -> Vec<f64> {
        self.unsym(|a, b| self.apply_up_sym(a, b), x)
    }

    /// `L_p^down x = ∂*_p∂_p x`.
    pub fn apply_down(&self, x: &[f64]) -> Vec<f64> {
        self.unsym(|a, b| self.apply_down_sym(a, b), x)
    }
}

impl LinearOperator for LaplacianOperator {
    fn dim(&self) -> usize {
        self.sqrt_gram.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.explicit {
            Some(m) => m.mul_vec_into(x, y),
            None => self.apply_matrix_free(x, y),
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        if let Some(m) = &self.explicit {
            return m.diagonal_entries();
        }
        let mut d = vec![0.0; self.dim()];
        for (r, out) in d.iter_mut().enumerate() {
            *out = self.up.row(r).map(|(_, v)| v * v).sum();
        }
        for (r, out) in d.iter_mut().enumerate() {
            *out += self.down_t.row(r).map(|(_, v)| v * v).sum::<f64>();
        }
        d
    }
}

/// Graph Laplacian `D - A` of the 1-skeleton, or its normalized form
/// `D^{-1/2}(D - A)D^{-1/2}`. Weights are ignored.
pub fn graph_laplacian(complex: &SimplicialComplex, normalized: bool) -> Result<CsrMatrix> {
    if complex.count(1) == 0 {
        return Err(Error::InvalidParameter(
            "graph Laplacian needs a complex of dimension at least 1".into(),
        ));
    }
    let adj = complex.adjacency();
    let n = adj.len();
    let degree: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let mut triplets = Vec::with_capacity(n + 2 * complex.count(1));
    for (v, neighbours) in adj.iter().enumerate() {
        triplets.push((v, v, degree[v]));
        for &u in neighbours {
            triplets.push((v, u, -1.0));
        }
    }
    let l = CsrMatrix::from_triplets(n, n, triplets);
    if !normalized {
        return Ok(l);
    }
    if let Some(v) = degree.iter().position(|&d| d == 0.0) {
        return Err(Error::IsolatedVertex {
            vertex: complex.simplices(0)[v].vertices()[0],
        });
    }
    let s: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(l.scale(&s, &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Simplex;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn hollow() -> SimplicialComplex {
        SimplicialComplex::from_simplices([vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap()
    }

    fn filled() -> SimplicialComplex {
        SimplicialComplex::from_simplices([vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn hollow_triangle_boundary() {
        let b = boundary_matrix(&hollow(), 1).unwrap().to_dense();
        let expected =
            DMatrix::from_row_slice(3, 3, &[-1.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 1.0]);
        assert_eq!(b, expected);
    }

    #[test]
    fn filled_triangle_boundary_and_chain_condition() {
        let k = filled();
        let b2 = boundary_matrix(&k, 2).unwrap();
        assert_eq!(
            b2.to_dense(),
            DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 1.0])
        );
        let b1 = boundary_matrix(&k, 1).unwrap();
        assert!(b1.matmul(&b2).is_zero());
    }

    #[test]
    fn degenerate_boundary_shapes() {
        let k = filled();
        let b0 = boundary_matrix(&k, 0).unwrap();
        assert_eq!((b0.rows(), b0.cols()), (0, 3));
        let b3 = boundary_matrix(&k, 3).unwrap();
        assert_eq!((b3.rows(), b3.cols()), (1, 0));
    }

    #[test]
    fn adjoint_is_transpose_for_unit_weights() {
        let k = filled();
        for p in 1..=2 {
            let a = adjoint_boundary(&k, p).unwrap();
            assert_eq!(a, boundary_matrix(&k, p).unwrap().transpose());
        }
    }

    #[test]
    fn weighted_adjoint_satisfies_defining_identity() {
        let mut k = hollow();
        k.set_weight(&Simplex::new(vec![0, 1]).unwrap(), 2.0)
            .unwrap();
        let b = boundary_matrix(&k, 1).unwrap().to_dense();
        let a = adjoint_boundary(&k, 1).unwrap().to_dense();
        // row (01) of the adjoint is B_1ᵀ's row scaled by 1/w² = 1/4
        assert_eq!(a[(0, 0)], -0.25);
        assert_eq!(a[(0, 1)], 0.25);
        let w0 = k.inner_product(0).diagonal;
        let w1 = k.inner_product(1).diagonal;
        for sigma in 0..3 {
            for tau in 0..3 {
                let lhs = a[(tau, sigma)] * w1[tau];
                let rhs = w0[sigma] * b[(sigma, tau)];
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn graph_laplacian_of_k3_is_l0() {
        let k = hollow();
        let l0 = laplacian(&k, 0).unwrap().assemble_laplacian().to_dense();
        let expected =
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        assert_eq!(l0, expected);
        assert_eq!(graph_laplacian(&k, false).unwrap().to_dense(), expected);
    }

    #[test]
    fn path_graph_laplacian() {
        let k = SimplicialComplex::from_simplices([vec![0, 1], vec![1, 2]]).unwrap();
        let l = graph_laplacian(&k, false).unwrap().to_dense();
        assert_eq!(
            l,
            DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0])
        );
    }

    #[test]
    fn normalized_k3_spectrum() {
        let l = graph_laplacian(&hollow(), true).unwrap().to_dense();
        let mut ev: Vec<f64> = SymmetricEigen::new(l).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-12);
        assert!((ev[1] - 1.5).abs() < 1e-12);
        assert!((ev[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn normalized_laplacian_rejects_isolated_vertices() {
        let k = SimplicialComplex::from_simplices([vec![0, 1], vec![5]]).unwrap();
        assert!(matches!(
            graph_laplacian(&k, true),
            Err(Error::IsolatedVertex { vertex: 5 })
        ));
        assert!(graph_laplacian(&k, false).is_ok());
    }

    #[test]
    fn filled_and_hollow_triangle_l1_kernels() {
        let l = laplacian(&filled(), 1)
            .unwrap()
            .assemble_laplacian()
            .to_dense();
        let ev = SymmetricEigen::new(l).eigenvalues;
        assert!(ev.iter().all(|&e| e > 1e-9));

        let l = laplacian(&hollow(), 1)
            .unwrap()
            .assemble_laplacian()
            .to_dense();
        let eig = SymmetricEigen::new(l);
        let zero: Vec<usize> = (0..3)
            .filter(|&i| eig.eigenvalues[i].abs() < 1e-9)
            .collect();
        assert_eq!(zero.len(), 1);
        let v = eig.eigenvectors.column(zero[0]);
        let s = v[0].signum();
        let r = 1.0 / 3f64.sqrt();
        for (x, e) in v.iter().zip([r, -r, r]) {
            assert!((x * s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_free_matches_explicit_and_up_down_split() {
        let mut k =
            SimplicialComplex::from_simplices([vec![0, 1, 2], vec![1, 2, 3], vec![3, 4]]).unwrap();
        k.set_weight(&Simplex::new(vec![1, 2]).unwrap(), 1.5)
            .unwrap();
        k.set_weight(&Simplex::new(vec![0, 1, 2]).unwrap(), 0.7)
            .unwrap();
        let op = laplacian(&k, 1).unwrap();
        let free = LaplacianOperator::new(
            &k,
            1,
            LaplacianOptions {
                explicit_threshold: 0,
            },
        )
        .unwrap();
        assert!(op.is_explicit() && !free.is_explicit());
        let x: Vec<f64> = (0..k.count(1)).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y1 = vec![0.0; x.len()];
        let mut y2 = vec![0.0; x.len()];
        op.apply(&x, &mut y1);
        free.apply(&x, &mut y2);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(op.diagonal(), free.diagonal());
        let full = op.apply_laplacian(&x);
        let split: Vec<f64> = op
            .apply_up(&x)
            .iter()
            .zip(op.apply_down(&x))
            .map(|(a, b)| a + b)
            .collect();
        for (a, b) in full.iter().zip(&split) {
            assert!((a - b).abs() < 1e-12);
        }
        let dense = op.assemble_laplacian().to_dense();
        let dx = &dense * nalgebra::DVector::from_column_slice(&x);
        for (a, b) in full.iter().zip(dx.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

//! Low end of the spectrum of symmetric positive semi-definite operators.
//!
//! Two independent routes: dense diagonalization of the assembled matrix,
//! and a block LOBPCG iteration that only touches the operator through
//! matrix-vector products.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplacian::LinearOperator;

/// Which eigensolver to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Dense below [`SolverOptions::dense_limit`], iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub solver: Solver,
    /// Largest dimension handled densely by [`Solver::Auto`].
    pub dense_limit: usize,
    /// Eigenvalues below `kernel_tolerance * max(λ_max, 1)` count as zero.
    pub kernel_tolerance: f64,
    /// Convergence target for residual norms, relative to `max(λ_max, 1)`.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    /// Seed for starting blocks and power iteration.
    pub seed: u64,
    pub power_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            solver: Solver::Auto,
            dense_limit: 2000,
            kernel_tolerance: 1e-8,
            residual_tolerance: 1e-10,
            max_iterations: 20_000,
            seed: 0x5eed,
            power_iterations: 40,
        }
    }
}

impl SolverOptions {
    pub fn uses_dense(&self, n: usize) -> bool {
        match self.solver {
            Solver::Dense => true,
            Solver::Iterative => false,
            Solver::Auto => n <= self.dense_limit,
        }
    }
}

/// The smallest eigenpairs of an operator.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: usize,
    /// Number of kernel eigenvalues skipped (only with `skip_kernel`).
    pub skipped_kernel: usize,
    /// Absolute threshold separating zero from non-zero eigenvalues.
    pub kernel_threshold: f64,
    pub solver: Solver,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips a vector so that its largest-magnitude entry (first on ties) is
/// positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn apply(op: &dyn LinearOperator, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    op.apply(x, &mut y);
    y
}

/// Power-iteration estimate of the largest eigenvalue.
pub fn estimate_largest_eigenvalue(op: &dyn LinearOperator, iterations: usize, seed: u64) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut lambda = 0.0;
    for _ in 0..iterations.max(1) {
        let nx = norm(&x);
        if nx == 0.0 {
            return lambda;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = apply(op, &x);
        lambda = dot(&x, &y);
        x = y;
    }
    lambda.max(0.0)
}

/// All eigenpairs of the assembled operator, ascending.
pub fn dense_eigen(op: &dyn LinearOperator) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = op.dim();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    (values, vectors)
}

/// Orthonormalizes `vectors` (and their images `images`, kept consistent)
/// against `fixed` and each other with two passes of modified Gram-Schmidt,
/// dropping vectors that become numerically dependent.
fn orthonormalize(
    fixed: &[Vec<f64>],
    vectors: Vec<Vec<f64>>,
    images: Option<Vec<Vec<f64>>>,
) -> (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut out_images: Vec<Vec<f64>> = Vec::new();
    let has_images = images.is_some();
    let mut images = images.unwrap_or_default().into_iter();
    for mut v in vectors {
        let mut av = images.next();
        let initial = norm(&v);
        if initial == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in fixed.iter() {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
            for (k, q) in out.iter().enumerate() {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                if let Some(av) = av.as_mut() {
                    av.iter_mut()
                        .zip(&out_images[k])
                        .for_each(|(a, b)| *a -= c * b);
                }
            }
        }
        let nv = norm(&v);
        if nv <= 1e-10 * initial {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= nv);
        if let Some(mut av) = av {
            av.iter_mut().for_each(|a| *a /= nv);
            out_images.push(av);
        }
        out.push(v);
    }
    (out, has_images.then_some(out_images))
}

/// Result of a raw LOBPCG run.
pub(crate) struct LobpcgOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Rayleigh-Ritz on an orthonormal basis with known images: returns Ritz
/// values ascending and coefficient vectors.
fn rayleigh_ritz(basis: &[Vec<f64>], images: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let m = basis.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let coeffs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, coeffs)
}

fn combine(
    vectors: &[Vec<f64>],
    coeffs: &DMatrix<f64>,
    col: usize,
    rows: std::ops::Range<usize>,
) -> Vec<f64> {
    let n = vectors[0].len();
    let mut out = vec![0.0; n];
    for (k, r) in rows.enumerate() {
        let c = coeffs[(r, col)];
        if c != 0.0 {
            out.iter_mut()
                .zip(&vectors[k])
                .for_each(|(a, b)| *a += c * b);
        }
    }
    out
}

/// Block LOBPCG for the `count` smallest eigenpairs of a symmetric PSD
/// operator, with a Jacobi preconditioner and soft locking.
///
/// `block` vectors are iterated (at least `count`); convergence requires the
/// first `count` residuals to drop below `tolerance`.
pub(crate) fn lobpcg(
    op: &dyn LinearOperator,
    count: usize,
    block: usize,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> LobpcgOutput {
    let n = op.dim();
    let block = block.max(count).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let (mut x, _) = orthonormalize(&[], start, None);
    let mut ax: Vec<Vec<f64>> = x.iter().map(|v| apply(op, v)).collect();
    let (values, coeffs) = rayleigh_ritz(&x, &ax);
    let k = x.len();
    let mut lambda: Vec<f64> = values[..k].to_vec();
    x = (0..k).map(|c| combine(&x, &coeffs, c, 0..k)).collect();
    ax = (0..k).map(|c| combine(&ax, &coeffs, c, 0..k)).collect();

    let precond: Vec<f64> = op
        .diagonal()
        .iter()
        .map(|&d| if d > 1e-14 { 1.0 / d } else { 1.0 })
        .collect();

    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut residuals = vec![f64::INFINITY; k];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        let r: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                ax[i]
                    .iter()
                    .zip(&x[i])
                    .map(|(a, b)| a - lambda[i] * b)
                    .collect()
            })
            .collect();
        residuals = r.iter().map(|v| norm(v)).collect();
        if residuals[..count.min(k)]
            .iter()
            .all(|&res| res <= tolerance)
        {
            converged = true;
            break;
        }
        iterations += 1;

        let active: Vec<usize> = (0..k).filter(|&i| residuals[i] > tolerance).collect();
        let w: Vec<Vec<f64>> = active
            .iter()
            .map(|&i| r[i].iter().zip(&precond).map(|(a, t)| a * t).collect())
            .collect();
        let (w, _) = orthonormalize(&x, w, None);
        if w.is_empty() {
            // the residual directions already lie in span(X)
            converged = residuals[..count.min(k)]
                .iter()
                .all(|&res| res <= tolerance);
            break;
        }
        let aw: Vec<Vec<f64>> = w.iter().map(|v| apply(op, v)).collect();
        let mut fixed = x.clone();
        fixed.extend(w.iter().cloned());
        let (p_orth, _) = orthonormalize(&fixed, std::mem::take(&mut p), None);
        let ap_orth: Vec<Vec<f64>> = p_orth.iter().map(|v| apply(op, v)).collect();

        let mut basis = x.clone();
        basis.extend(w.iter().cloned());
        basis.extend(p_orth.iter().cloned());
        let mut images = ax.clone();
        images.extend(aw);
        images.extend(ap_orth);
        let m = basis.len();

        let (values, coeffs) = rayleigh_ritz(&basis, &images);
        let new_x: Vec<Vec<f64>> = (0..k).map(|c| combine(&basis, &coeffs, c, 0..m)).collect();
        let new_ax: Vec<Vec<f64>> = (0..k).map(|c| combine(&images, &coeffs, c, 0..m)).collect();
        p = active
            .iter()
            .map(|&c| combine(&basis[k..], &coeffs, c, k..m))
            .collect();
        lambda = values[..k].to_vec();
        x = new_x;
        ax = new_ax;

        // refresh images periodically to stop drift
        if iterations % 25 == 0 {
            let (xo, _) = orthonormalize(&[], x.clone(), None);
            if xo.len() == k {
                x = xo;
                ax = x.iter().map(|v| apply(op, v)).collect();
                let (values, coeffs) = rayleigh_ritz(&x, &ax);
                lambda = values;
                x = (0..k).map(|c| combine(&x, &coeffs, c, 0..k)).collect();
                ax = (0..k).map(|c| combine(&ax, &coeffs, c, 0..k)).collect();
            }
        }
    }

    LobpcgOutput {
        values: lambda,
        vectors: x,
        residuals,
        iterations,
        converged,
    }
}

/// Smallest eigenpairs of `op`.
///
/// With `skip_kernel`, eigenvalues below the kernel threshold are skipped and
/// the `count` smallest non-zero ones returned.
pub fn low_spectrum(
    op: &dyn LinearOperator,
    count: usize,
    skip_kernel: bool,
    options: &SolverOptions,
) -> Result<SpectralReport> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "eigenpair count must be at least 1".into(),
        ));
    }
    let n = op.dim();
    let scale = estimate_largest_eigenvalue(op, options.power_iterations, options.seed).max(1.0);
    let threshold = options.kernel_tolerance * scale;
    let dense = options.uses_dense(n);

    let mut kernel_guess = if skip_kernel { 1 } else { 0 };
    loop {
        let wanted = (count + kernel_guess).min(n);
        let (values, vectors, residuals, iterations, converged) = if dense {
            let (values, vectors) = dense_eigen(op);
            let residuals = vectors
                .iter()
                .zip(&values)
                .take(wanted)
                .map(|(v, &l)| {
                    let av = apply(op, v);
                    norm(&av.iter().zip(v).map(|(a, b)| a - l * b).collect::<Vec<_>>())
                })
                .collect::<Vec<_>>();
            let w = residuals.len();
            (
                values[..wanted].to_vec(),
                vectors[..wanted].to_vec(),
                residuals,
                0,
                vec![true; w],
            )
        } else {
            let out = iterative_low(op, wanted, scale, options)?;
            (
                out.values,
                out.vectors,
                out.residuals,
                out.iterations,
                out.converged,
            )
        };

        let kernel = if skip_kernel {
            values.iter().take_while(|&&v| v < threshold).count()
        } else {
            0
        };
        let available = values.len() - kernel;
        if !skip_kernel || available >= count || wanted == n {
            let take = count.min(available);
            return Ok(SpectralReport {
                eigenvalues: values[kernel..kernel + take].to_vec(),
                eigenvectors: vectors[kernel..kernel + take].to_vec(),
                residuals: residuals[kernel..kernel + take].to_vec(),
                converged: converged[kernel..kernel + take].to_vec(),
                iterations,
                skipped_kernel: kernel,
                kernel_threshold: threshold,
                solver: if dense {
                    Solver::Dense
                } else {
                    Solver::Iterative
                },
            });
        }
        kernel_guess = (kernel_guess * 2).max(kernel + 1);
    }
}

pub(crate) struct IterativeLow {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: Vec<bool>,
}

/// LOBPCG wrapper: picks the block size, falls back to a full Rayleigh-Ritz
/// when the block would span most of the space, and turns non-convergence
/// into an error.
pub(crate) fn iterative_low(
    op: &dyn LinearOperator,
    count: usize,
    scale: f64,
    options: &SolverOptions,
) -> Result<IterativeLow> {
    let n = op.dim();
    let count = count.min(n);
    let tolerance = options.residual_tolerance * scale;
    let block = count + count.max(3);
    if 3 * block >= n {
        // the search space would be all of C_p: one Rayleigh-Ritz step on
        // the standard basis is exact
        let (values, vectors) = dense_eigen(op);
        let residuals: Vec<f64> = vectors[..count]
            .iter()
            .zip(&values)
            .map(|(v, &l)| {
                let av = apply(op, v);
                norm(&av.iter().zip(v).map(|(a, b)| a - l * b).collect::<Vec<_>>())
            })
            .collect();
        return Ok(IterativeLow {
            values: values[..count].to_vec(),
            vectors: vectors[..count].to_vec(),
            converged: residuals
                .iter()
                .map(|&r| r <= tolerance.max(1e-12))
                .collect(),
            residuals,
            iterations: 1,
        });
    }
    let out = lobpcg(
        op,
        count,
        block,
        tolerance,
        options.max_iterations,
        options.seed,
    );
    if !out.converged {
        return Err(Error::NonConvergence {
            iterations: out.iterations,
            residuals: out.residuals[..count].to_vec(),
        });
    }
    let vectors = out.vectors[..count]
        .iter()
        .map(|v| {
            let mut v = v.clone();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(IterativeLow {
        values: out.values[..count].to_vec(),
        vectors,
        residuals: out.residuals[..count].to_vec(),
        iterations: out.iterations,
        converged: vec![true; count],
    })
}

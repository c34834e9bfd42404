//! Exact ranks of integer boundary matrices.
//!
//! Small matrices use fraction-free (Bareiss) elimination over the integers,
//! which gives the rank over ℚ (hence ℝ) exactly. Large ones use sparse column
//! reduction over the prime field `Z/(2^31 - 1)`; the two agree unless the
//! homology has torsion of order divisible by that prime.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::complex::SimplicialComplex;
use crate::error::Result;
use crate::laplacian::boundary_columns;

/// Sparse integer matrix as columns of `(row, value)` sorted by row.
pub type IntColumns = Vec<Vec<(usize, i8)>>;

/// Matrices whose smaller side is at most this are ranked with Bareiss.
pub const EXACT_RANK_LIMIT: usize = 48;

const PRIME: u64 = 2_147_483_647;

/// Rank over ℚ by fraction-free Gaussian elimination.
pub fn rank_bareiss(rows: usize, columns: &IntColumns) -> usize {
    let cols = columns.len();
    if rows == 0 || cols == 0 {
        return 0;
    }
    // work on the orientation with fewer rows to keep the matrix small
    let mut m: Vec<Vec<BigInt>> = if rows <= cols {
        let mut m = vec![vec![BigInt::zero(); cols]; rows];
        for (c, column) in columns.iter().enumerate() {
            for &(r, v) in column {
                m[r][c] = BigInt::from(v);
            }
        }
        m
    } else {
        columns
            .iter()
            .map(|column| {
                let mut row = vec![BigInt::zero(); rows];
                for &(r, v) in column {
                    row[r] = BigInt::from(v);
                }
                row
            })
            .collect()
    };
    let (nrows, ncols) = (m.len(), m[0].len());
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(pivot) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let (head, tail) = m.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let p = pivot_row[col].clone();
        for row in tail.iter_mut() {
            let factor = row[col].clone();
            for j in col + 1..ncols {
                let value = &p * &row[j] - &factor * &pivot_row[j];
                row[j] = value / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = p;
        rank += 1;
    }
    rank
}

fn mod_pow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base %= PRIME;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % PRIME;
        }
        base = base * base % PRIME;
        exp >>= 1;
    }
    acc
}

fn to_field(v: i8) -> u64 {
    if v >= 0 {
        v as u64
    } else {
        PRIME - (-(v as i64)) as u64
    }
}

/// `a - factor * b` over the prime field, for sparse vectors sorted by index.
fn axpy_mod(a: &[(usize, u64)], factor: u64, b: &[(usize, u64)]) -> Vec<(usize, u64)> {
    let neg = (PRIME - factor) % PRIME;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i == a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else if take_b {
            out.push((b[j].0, neg * b[j].1 % PRIME));
            j += 1;
        } else {
            let v = (a[i].1 + neg * b[j].1) % PRIME;
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Rank over `Z/(2^31 - 1)` by sparse column reduction with lowest-entry
/// pivots. Stored pivot columns are scaled so that their lowest entry is 1.
pub fn rank_modular(rows: usize, columns: &IntColumns) -> usize {
    // Boundary columns have only p + 1 entries each; reducing them directly
    // is much cheaper than reducing the long coboundary rows of the
    // transpose, even though there are more of them.
    let height = rows;
    let columns: Vec<Vec<(usize, u64)>> = columns
        .iter()
        .map(|c| c.iter().map(|&(r, v)| (r, to_field(v))).collect())
        .collect();
    let mut pivot_of: Vec<u32> = vec![u32::MAX; height];
    let mut pivots: Vec<Vec<(usize, u64)>> = Vec::new();
    for mut column in columns {
        while let Some(&(low, value)) = column.last() {
            let slot = pivot_of[low];
            if slot == u32::MAX {
                let inv = mod_pow(value, PRIME - 2);
                column.iter_mut().for_each(|e| e.1 = e.1 * inv % PRIME);
                pivot_of[low] = pivots.len() as u32;
                pivots.push(column);
                break;
            }
            column = axpy_mod(&column, value, &pivots[slot as usize]);
        }
    }
    pivots.len()
}

/// Rank choosing the exact integer method when the matrix is small.
pub fn rank(rows: usize, columns: &IntColumns) -> usize {
    if rows.min(columns.len()) <= EXACT_RANK_LIMIT {
        rank_bareiss(rows, columns)
    } else {
        rank_modular(rows, columns)
    }
}

/// `rank ∂_p`; zero for `p = 0` and beyond the top dimension.
pub fn boundary_rank(complex: &SimplicialComplex, p: usize) -> Result<usize> {
    if p == 0 || complex.count(p) == 0 {
        return Ok(0);
    }
    if p == 1 {
        // the image of ∂_1 has one dimension less than the vertex set per
        // connected component
        let (components, _) = complex.components();
        return Ok(complex.count(0) - components);
    }
    let columns = boundary_columns(complex, p)?;
    Ok(rank(complex.count(p - 1), &columns))
}

//! Dense real linear algebra used by the conversion pipeline.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. The Schur machinery (Hessenberg
//! reduction, Francis iteration, block swapping, Sylvester solves and block
//! diagonalization) is implemented here; factorizations that only serve as
//! primitives (LU, SVD) come from nalgebra.

mod expm;
mod schur;
mod small;
mod sylvester;

pub use expm::matrix_exponential;
pub use schur::{real_schur, reorder_schur, standardize_2x2};
pub use sylvester::{block_diagonalize, solve_sylvester};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("QR iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("target order is not a permutation of {blocks} blocks")]
    InvalidPermutation { blocks: usize },
    #[error("blocks at offsets {first} and {second} cannot be swapped stably")]
    InseparableBlocks { first: usize, second: usize },
    #[error("matrix is not quasi-upper-triangular")]
    NotQuasiTriangular,
    #[error("spectra are not separated (gap {gap:e})")]
    SpectraNotSeparated { gap: f64 },
    #[error("diagonal blocks {first} and {second} share spectrum (gap {gap:e})")]
    ClustersNotSeparated { first: usize, second: usize, gap: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("overflow while squaring the matrix exponential")]
    Overflow,
}

/// Real Schur decomposition `a = q r qᵀ`.
///
/// `r` is quasi-upper-triangular with 1×1 blocks for real eigenvalues and
/// standardized 2×2 blocks `[[α, β], [γ, α]]`, `βγ < 0`, for complex pairs.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: Matrix,
    pub r: Matrix,
    pub block_sizes: Vec<usize>,
}

/// Partition of `0..n` into consecutive diagonal blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Self { sizes, offsets }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k] + self.sizes[k]
    }
}

pub(crate) fn check_square(m: &Matrix) -> Result<usize, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(m.nrows())
}

/// Detects the 1×1 / 2×2 diagonal block structure of a quasi-upper-triangular
/// matrix. A subdiagonal entry counts as zero when it is below `1e-11` times
/// the sum of the 1-norms of its row and column.
pub fn quasi_triangular_layout(m: &Matrix) -> Result<BlockLayout, LinalgError> {
    let n = check_square(m)?;
    let rows: Vec<f64> = (0..n).map(|i| m.row(i).iter().map(|x| x.abs()).sum()).collect();
    let cols: Vec<f64> = (0..n).map(|j| m.column(j).iter().map(|x| x.abs()).sum()).collect();
    let negligible = |i: usize, j: usize| m[(i, j)].abs() <= 1e-11 * (rows[i] + cols[j]);
    for j in 0..n {
        for i in j + 2..n {
            if !negligible(i, j) {
                return Err(LinalgError::NotQuasiTriangular);
            }
        }
    }
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && !negligible(i + 1, i) {
            if i + 2 < n && !negligible(i + 2, i + 1) {
                return Err(LinalgError::NotQuasiTriangular);
            }
            sizes.push(2);
            i += 2;
        } else {
            sizes.push(1);
            i += 1;
        }
    }
    Ok(BlockLayout::new(sizes))
}

/// Eigenvalues `(re, im)` of a 1×1 or 2×2 block starting at `k`.
pub fn block_eigenvalues(m: &Matrix, k: usize, size: usize) -> [(f64, f64); 2] {
    if size == 1 {
        let v = m[(k, k)];
        return [(v, 0.0), (v, 0.0)];
    }
    let (a, b, c, d) = (m[(k, k)], m[(k, k + 1)], m[(k + 1, k)], m[(k + 1, k + 1)]);
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    let mid = 0.5 * (a + d);
    if disc >= 0.0 {
        let s = disc.sqrt();
        [(mid + s, 0.0), (mid - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(mid, s), (mid, -s)]
    }
}

/// Inverse via LU with partial pivoting.
pub fn inverse(m: &Matrix) -> Result<Matrix, LinalgError> {
    check_square(m)?;
    m.clone().lu().try_inverse().ok_or(LinalgError::Singular)
}

/// Spectral condition number `σ_max / σ_min`; infinite for singular input.
pub fn condition_number_2norm(m: &Matrix) -> Result<f64, LinalgError> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(1.0);
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Block-diagonal matrix assembled from the diagonal blocks of `m`.
pub fn block_diagonal_part(m: &Matrix, layout: &BlockLayout) -> Matrix {
    let n = m.nrows();
    let mut out = Matrix::zeros(n, n);
    for k in 0..layout.len() {
        let r = layout.range(k);
        let s = r.len();
        out.view_mut((r.start, r.start), (s, s))
            .copy_from(&m.view((r.start, r.start), (s, s)));
    }
    out
}

//! Bartels–Stewart Sylvester solves on quasi-triangular coefficients and
//! block diagonalization of Schur forms.

use super::small::kron_sylvester;
use super::{block_diagonal_part, block_eigenvalues, quasi_triangular_layout, BlockLayout, LinalgError, Matrix};

/// Eigenvalues of all diagonal blocks of a quasi-triangular matrix.
fn spectrum(m: &Matrix, layout: &BlockLayout) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m.nrows());
    for k in 0..layout.len() {
        let s = layout.sizes()[k];
        out.extend_from_slice(&block_eigenvalues(m, layout.offsets()[k], s)[..s]);
    }
    out
}

fn min_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut g = f64::INFINITY;
    for x in a {
        for y in b {
            g = g.min((x.0 - y.0).hypot(x.1 - y.1));
        }
    }
    g
}

/// Solves `a11·X − X·a22 = f` where both coefficients are quasi-upper-triangular.
pub fn solve_sylvester(a11: &Matrix, a22: &Matrix, f: &Matrix) -> Result<Matrix, LinalgError> {
    let l1 = quasi_triangular_layout(a11)?;
    let l2 = quasi_triangular_layout(a22)?;
    solve_with_layouts(a11, &l1, a22, &l2, f)
}

fn solve_with_layouts(
    a11: &Matrix,
    l1: &BlockLayout,
    a22: &Matrix,
    l2: &BlockLayout,
    f: &Matrix,
) -> Result<Matrix, LinalgError> {
    let p = a11.nrows();
    let q = a22.nrows();
    if f.nrows() != p || f.ncols() != q {
        return Err(LinalgError::DimensionMismatch(format!(
            "right-hand side is {}x{}, expected {p}x{q}",
            f.nrows(),
            f.ncols()
        )));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let scale = a11.amax() + a22.amax();
    let gap = min_gap(&spectrum(a11, l1), &spectrum(a22, l2));
    if gap <= 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
        return Err(LinalgError::SpectraNotSeparated { gap });
    }
    let smin = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut x = Matrix::zeros(p, q);
    for jb in 0..l2.len() {
        let cj = l2.offsets()[jb];
        let qj = l2.sizes()[jb];
        for ib in (0..l1.len()).rev() {
            let ri = l1.offsets()[ib];
            let pi = l1.sizes()[ib];
            let mut rhs = f.view((ri, cj), (pi, qj)).into_owned();
            let below = ri + pi;
            if below < p {
                rhs -= a11.view((ri, below), (pi, p - below)) * x.view((below, cj), (p - below, qj));
            }
            if cj > 0 {
                rhs += x.view((ri, 0), (pi, cj)) * a22.view((0, cj), (cj, qj));
            }
            let d1 = a11.view((ri, ri), (pi, pi)).into_owned();
            let d2 = a22.view((cj, cj), (qj, qj)).into_owned();
            let (blk, pivot) = kron_sylvester(&d1, &d2, &rhs, smin);
            if pivot <= smin {
                return Err(LinalgError::SpectraNotSeparated { gap });
            }
            x.view_mut((ri, cj), (pi, qj)).copy_from(&blk);
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::SpectraNotSeparated { gap });
    }
    Ok(x)
}

/// Block-diagonalizes a quasi-triangular `r` whose diagonal blocks (given by
/// `layout`) have pairwise disjoint spectra.
///
/// Returns `(t3, a)` with `t3` unit upper block-triangular and
/// `a = t3⁻¹·r·t3` block diagonal; the diagonal blocks of `a` are copied
/// from `r`.
pub fn block_diagonalize(r: &Matrix, layout: &BlockLayout) -> Result<(Matrix, Matrix), LinalgError> {
    let n = super::check_square(r)?;
    if layout.dim() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "layout covers {} states, matrix has {n}",
            layout.dim()
        )));
    }
    let fine = quasi_triangular_layout(r)?;
    // every cluster boundary must coincide with a Schur block boundary
    let fine_offsets: Vec<usize> = fine.offsets().to_vec();
    for &o in layout.offsets() {
        if fine_offsets.binary_search(&o).is_err() {
            return Err(LinalgError::NotQuasiTriangular);
        }
    }
    let sub_layout = |start: usize, end: usize| {
        let sizes: Vec<usize> = fine
            .offsets()
            .iter()
            .zip(fine.sizes())
            .filter(|(&o, _)| o >= start && o < end)
            .map(|(_, &s)| s)
            .collect();
        BlockLayout::new(sizes)
    };
    let mut t3 = Matrix::identity(n, n);
    for k in 0..layout.len().saturating_sub(1) {
        let rg = layout.range(k);
        let (s, e) = (rg.start, rg.end);
        let r11 = r.view((s, s), (e - s, e - s)).into_owned();
        let r22 = r.view((e, e), (n - e, n - e)).into_owned();
        let rhs = -r.view((s, e), (e - s, n - e)).into_owned();
        let x = solve_with_layouts(&r11, &sub_layout(s, e), &r22, &sub_layout(e, n), &rhs).map_err(|err| match err {
            LinalgError::SpectraNotSeparated { .. } => nearest_cluster(r, layout, &fine, k),
            other => other,
        })?;
        let update = t3.view((0, s), (e, e - s)) * &x;
        let mut tail = t3.view_mut((0, e), (e, n - e));
        tail += update;
    }
    Ok((t3, block_diagonal_part(r, layout)))
}

fn nearest_cluster(r: &Matrix, layout: &BlockLayout, fine: &BlockLayout, k: usize) -> LinalgError {
    let cluster_spectrum = |c: usize| {
        let rg = layout.range(c);
        let mut out = Vec::new();
        for b in 0..fine.len() {
            let o = fine.offsets()[b];
            if rg.contains(&o) {
                let s = fine.sizes()[b];
                out.extend_from_slice(&block_eigenvalues(r, o, s)[..s]);
            }
        }
        out
    };
    let mine = cluster_spectrum(k);
    let (mut best, mut gap) = (k + 1, f64::INFINITY);
    for c in k + 1..layout.len() {
        let g = min_gap(&mine, &cluster_spectrum(c));
        if g < gap {
            gap = g;
            best = c;
        }
    }
    LinalgError::ClustersNotSeparated { first: k, second: best, gap }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_sylvester() {
        let x = solve_sylvester(
            &Matrix::from_element(1, 1, 1.0),
            &Matrix::from_element(1, 1, 3.0),
            &Matrix::from_element(1, 1, -5.0),
        )
        .unwrap();
        assert!((x[(0, 0)] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn overlapping_spectra_rejected() {
        let one = Matrix::from_element(1, 1, 1.0);
        let err = solve_sylvester(&one, &one, &one).unwrap_err();
        assert!(matches!(err, LinalgError::SpectraNotSeparated { .. }));
    }

    #[test]
    fn two_by_two_example() {
        let r = Matrix::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 3.0]);
        let (t3, a) = block_diagonalize(&r, &BlockLayout::new(vec![1, 1])).unwrap();
        assert_eq!(t3, Matrix::from_row_slice(2, 2, &[1.0, 2.5, 0.0, 1.0]));
        assert_eq!(a, Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn single_cluster_is_identity() {
        let r = Matrix::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 3.0]);
        let (t3, a) = block_diagonalize(&r, &BlockLayout::new(vec![2])).unwrap();
        assert_eq!(t3, Matrix::identity(2, 2));
        assert_eq!(a, r);
    }
}

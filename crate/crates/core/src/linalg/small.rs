//! Tiny dense kernels shared by the block routines.

use super::Matrix;

/// Solves `a·X − X·b = f` for blocks of order at most 2 through the
/// Kronecker form, with complete pivoting. Near-zero pivots are replaced by
/// `smin`; the caller decides whether the result is acceptable.
///
/// Returns the solution and the smallest pivot magnitude encountered.
pub(crate) fn kron_sylvester(a: &Matrix, b: &Matrix, f: &Matrix, smin: f64) -> (Matrix, f64) {
    let p = a.nrows();
    let q = b.nrows();
    let n = p * q;
    let mut m = [[0.0_f64; 4]; 4];
    let mut rhs = [0.0_f64; 4];
    // vec(X) is column-major: index = i + p*j
    for j in 0..q {
        for i in 0..p {
            let row = i + p * j;
            rhs[row] = f[(i, j)];
            for k in 0..p {
                m[row][k + p * j] += a[(i, k)];
            }
            for l in 0..q {
                m[row][i + p * l] -= b[(l, j)];
            }
        }
    }
    let mut perm_col = [0usize, 1, 2, 3];
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for (r, mr) in m.iter().enumerate().take(n).skip(k) {
            for (c, v) in mr.iter().enumerate().take(n).skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        m.swap(k, pr);
        rhs.swap(k, pr);
        if pc != k {
            for row in m.iter_mut() {
                row.swap(k, pc);
            }
            perm_col.swap(k, pc);
        }
        if m[k][k].abs() < smin {
            m[k][k] = smin.copysign(if m[k][k] == 0.0 { 1.0 } else { m[k][k] });
        }
        min_pivot = min_pivot.min(m[k][k].abs());
        for r in k + 1..n {
            let factor = m[r][k] / m[k][k];
            if factor != 0.0 {
                for c in k..n {
                    m[r][c] -= factor * m[k][c];
                }
                rhs[r] -= factor * rhs[k];
            }
        }
    }
    let mut sol = [0.0_f64; 4];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for c in k + 1..n {
            s -= m[k][c] * sol[c];
        }
        sol[k] = s / m[k][k];
    }
    let mut x = Matrix::zeros(p, q);
    for k in 0..n {
        let idx = perm_col[k];
        x[(idx % p, idx / p)] = sol[k];
    }
    (x, min_pivot)
}

/// Householder vector for `x`: returns `(v, tau, beta)` with `v[0] = 1` and
/// `(I − tau·v·vᵀ)·x = beta·e₁`.
pub(crate) fn householder(x: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = x.len();
    let mut v = vec![0.0; n];
    if n == 0 {
        return (v, 0.0, 0.0);
    }
    v[0] = 1.0;
    let alpha = x[0];
    let tail: f64 = x[1..].iter().map(|t| t * t).sum::<f64>().sqrt();
    if tail == 0.0 {
        return (v, 0.0, alpha);
    }
    let beta = -alpha.signum_nonzero() * alpha.hypot(tail);
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for i in 1..n {
        v[i] = x[i] * scale;
    }
    (v, tau, beta)
}

trait SignumNonzero {
    fn signum_nonzero(self) -> Self;
}

impl SignumNonzero for f64 {
    fn signum_nonzero(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Applies `(I − tau·v·vᵀ)` from the left to rows `r0..r0+len(v)` over
/// columns `cols`.
pub(crate) fn reflect_rows(m: &mut Matrix, v: &[f64], tau: f64, r0: usize, cols: std::ops::Range<usize>) {
    if tau == 0.0 {
        return;
    }
    for c in cols {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += vk * m[(r0 + k, c)];
        }
        s *= tau;
        if s != 0.0 {
            for (k, vk) in v.iter().enumerate() {
                m[(r0 + k, c)] -= s * vk;
            }
        }
    }
}

/// Applies `(I − tau·v·vᵀ)` from the right to columns `c0..c0+len(v)` over
/// rows `rows`.
pub(crate) fn reflect_cols(m: &mut Matrix, v: &[f64], tau: f64, c0: usize, rows: std::ops::Range<usize>) {
    if tau == 0.0 {
        return;
    }
    let mut w = vec![0.0; rows.len()];
    for (k, vk) in v.iter().enumerate() {
        if *vk == 0.0 {
            continue;
        }
        let col = m.column(c0 + k);
        for (wi, r) in w.iter_mut().zip(rows.clone()) {
            *wi += vk * col[r];
        }
    }
    for (k, vk) in v.iter().enumerate() {
        let f = tau * vk;
        if f == 0.0 {
            continue;
        }
        let mut col = m.column_mut(c0 + k);
        for (wi, r) in w.iter().zip(rows.clone()) {
            col[r] -= f * wi;
        }
    }
}

/// Plane rotation on rows `i`, `j`: `x ← c·x + s·y`, `y ← c·y − s·x`.
pub(crate) fn rot_rows(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64, cols: std::ops::Range<usize>) {
    for k in cols {
        let x = m[(i, k)];
        let y = m[(j, k)];
        m[(i, k)] = c * x + s * y;
        m[(j, k)] = c * y - s * x;
    }
}

/// Plane rotation on columns `i`, `j`.
pub(crate) fn rot_cols(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64, rows: std::ops::Range<usize>) {
    for k in rows {
        let x = m[(k, i)];
        let y = m[(k, j)];
        m[(k, i)] = c * x + s * y;
        m[(k, j)] = c * y - s * x;
    }
}

/// Givens pair with `c·f + s·g = r`, `−s·f + c·g = 0`.
pub(crate) fn givens(f: f64, g: f64) -> (f64, f64) {
    if g == 0.0 {
        return (1.0, 0.0);
    }
    if f == 0.0 {
        return (0.0, 1.0);
    }
    let r = f.hypot(g);
    (f / r, g / r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_matches_direct_check() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 1.0]);
        let b = Matrix::from_row_slice(2, 2, &[-4.0, 1.0, -1.0, -4.0]);
        let f = Matrix::from_row_slice(2, 2, &[1.0, 0.5, -2.0, 3.0]);
        let (x, _) = kron_sylvester(&a, &b, &f, 1e-300);
        let res = &a * &x - &x * &b - &f;
        assert!(res.amax() < 1e-13);
    }

    #[test]
    fn householder_annihilates_tail() {
        let x = [3.0, 4.0, 12.0];
        let (v, tau, beta) = householder(&x);
        let dot: f64 = v.iter().zip(&x).map(|(a, b)| a * b).sum();
        let y: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi - tau * dot * vi).collect();
        assert!((y[0] - beta).abs() < 1e-12);
        assert!(y[1].abs() < 1e-12 && y[2].abs() < 1e-12);
        assert!((beta.abs() - 13.0).abs() < 1e-12);
    }
}

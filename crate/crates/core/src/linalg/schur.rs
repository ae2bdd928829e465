//! Real Schur decomposition and Schur-form reordering.

use super::small::{givens, householder, kron_sylvester, reflect_cols, reflect_rows, rot_cols, rot_rows};
use super::{check_square, LinalgError, Matrix, SchurForm};

const EPS: f64 = f64::EPSILON;

/// Real Schur decomposition with standardized 2×2 blocks.
///
/// Eigenvalues that can be isolated by symmetric permutations (rows or
/// columns that are zero off the diagonal) are moved out of the active window
/// first and are therefore exact.
pub fn real_schur(a: &Matrix) -> Result<SchurForm, LinalgError> {
    let n = check_square(a)?;
    let mut h = a.clone();
    let mut q = Matrix::identity(n, n);
    if n == 0 {
        return Ok(SchurForm { q, r: h, block_sizes: vec![] });
    }
    let (lo, hi) = isolate(&mut h, &mut q);
    hessenberg(&mut h, &mut q, lo, hi);
    francis(&mut h, &mut q, lo, hi)?;
    let block_sizes = finalize_blocks(&mut h);
    Ok(SchurForm { q, r: h, block_sizes })
}

fn swap_sym(h: &mut Matrix, q: &mut Matrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    h.swap_rows(i, j);
    h.swap_columns(i, j);
    q.swap_columns(i, j);
}

/// Permutation-only balancing. Returns the active window `lo..=hi`.
fn isolate(h: &mut Matrix, q: &mut Matrix) -> (usize, usize) {
    let n = h.nrows();
    let mut lo = 0usize;
    let mut hi = n - 1;
    // rows that vanish off the diagonal go to the bottom
    'rows: loop {
        for j in (lo..=hi).rev() {
            if (lo..=hi).all(|c| c == j || h[(j, c)] == 0.0) {
                swap_sym(h, q, j, hi);
                if hi == lo {
                    return (lo, hi);
                }
                hi -= 1;
                continue 'rows;
            }
        }
        break;
    }
    // columns that vanish off the diagonal go to the top
    'cols: loop {
        for j in lo..=hi {
            if (lo..=hi).all(|r| r == j || h[(r, j)] == 0.0) {
                swap_sym(h, q, j, lo);
                if lo == hi {
                    return (lo, hi);
                }
                lo += 1;
                continue 'cols;
            }
        }
        break;
    }
    (lo, hi)
}

fn hessenberg(h: &mut Matrix, q: &mut Matrix, lo: usize, hi: usize) {
    let n = h.nrows();
    if hi < lo + 2 {
        return;
    }
    for k in lo..hi - 1 {
        let x: Vec<f64> = (k + 1..=hi).map(|i| h[(i, k)]).collect();
        let (v, tau, beta) = householder(&x);
        if tau == 0.0 {
            continue;
        }
        reflect_rows(h, &v, tau, k + 1, k..n);
        reflect_cols(h, &v, tau, k + 1, 0..hi + 1);
        reflect_cols(q, &v, tau, k + 1, 0..n);
        h[(k + 1, k)] = beta;
        for i in k + 2..=hi {
            h[(i, k)] = 0.0;
        }
    }
}

/// Standardizes the 2×2 block at `(k, k+1)` by a rotation applied to the full
/// matrix and accumulated into `q`. Returns `true` when the block holds a
/// complex pair; otherwise it has been split into two 1×1 blocks.
pub fn standardize_2x2(h: &mut Matrix, q: &mut Matrix, k: usize) -> bool {
    let n = h.nrows();
    let (a, b, c, d, cs, sn) = lanv2(h[(k, k)], h[(k, k + 1)], h[(k + 1, k)], h[(k + 1, k + 1)]);
    if k + 2 < n {
        rot_rows(h, k, k + 1, cs, sn, k + 2..n);
    }
    rot_cols(h, k, k + 1, cs, sn, 0..k);
    rot_cols(q, k, k + 1, cs, sn, 0..q.nrows());
    h[(k, k)] = a;
    h[(k, k + 1)] = b;
    h[(k + 1, k)] = c;
    h[(k + 1, k + 1)] = d;
    c != 0.0
}

/// Schur factorization of a real 2×2 matrix in standard form.
/// Returns `(a, b, c, d, cs, sn)` with `c = 0` for real eigenvalues and
/// `a = d`, `b·c < 0` otherwise.
fn lanv2(mut a: f64, mut b: f64, mut c: f64, mut d: f64) -> (f64, f64, f64, f64, f64, f64) {
    let multpl = 4.0;
    let (mut cs, mut sn);
    if c == 0.0 {
        cs = 1.0;
        sn = 0.0;
    } else if b == 0.0 {
        cs = 0.0;
        sn = 1.0;
        std::mem::swap(&mut a, &mut d);
        b = -c;
        c = 0.0;
    } else if a - d == 0.0 && b.signum() != c.signum() {
        cs = 1.0;
        sn = 0.0;
    } else {
        let temp = a - d;
        let mut p = 0.5 * temp;
        let bcmax = b.abs().max(c.abs());
        let bcmis = b.abs().min(c.abs()) * b.signum() * c.signum();
        let scale = p.abs().max(bcmax);
        let mut z = (p / scale) * p + (bcmax / scale) * bcmis;
        if z >= multpl * EPS {
            // real eigenvalues
            z = p + (scale.sqrt() * z.sqrt()).copysign(p);
            a = d + z;
            d -= (bcmax / z) * bcmis;
            let tau = c.hypot(z);
            cs = z / tau;
            sn = c / tau;
            b -= c;
            c = 0.0;
        } else {
            // complex or nearly equal real eigenvalues: equalize the diagonal
            let sigma = b + c;
            let tau = sigma.hypot(temp);
            cs = (0.5 * (1.0 + sigma.abs() / tau)).sqrt();
            sn = -(p / (tau * cs)) * if sigma >= 0.0 { 1.0 } else { -1.0 };
            let aa = a * cs + b * sn;
            let bb = -a * sn + b * cs;
            let cc = c * cs + d * sn;
            let dd = -c * sn + d * cs;
            a = aa * cs + cc * sn;
            b = bb * cs + dd * sn;
            c = -aa * sn + cc * cs;
            d = -bb * sn + dd * cs;
            let mid = 0.5 * (a + d);
            a = mid;
            d = mid;
            if c != 0.0 {
                if b != 0.0 {
                    if b.signum() == c.signum() {
                        // real eigenvalues after all
                        let sab = b.abs().sqrt();
                        let sac = c.abs().sqrt();
                        p = (sab * sac).copysign(c);
                        let tau = 1.0 / (b + c).abs().sqrt();
                        a = mid + p;
                        d = mid - p;
                        b -= c;
                        c = 0.0;
                        let cs1 = sab * tau;
                        let sn1 = sac * tau;
                        let t = cs * cs1 - sn * sn1;
                        sn = cs * sn1 + sn * cs1;
                        cs = t;
                    }
                } else {
                    b = -c;
                    c = 0.0;
                    let t = cs;
                    cs = -sn;
                    sn = t;
                }
            }
        }
    }
    (a, b, c, d, cs, sn)
}

fn francis(h: &mut Matrix, q: &mut Matrix, lo: usize, hi: usize) -> Result<(), LinalgError> {
    let n = h.nrows();
    let max_total = 100 * (hi - lo + 1).max(10);
    let mut total = 0usize;
    let mut its = 0usize;
    let mut ihi = hi as isize;
    let lo_i = lo as isize;
    let norm = h.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    // roundoff level of the whole matrix; repeated eigenvalues can park
    // subdiagonals just above the local threshold
    let floor = EPS * h.norm();
    while ihi >= lo_i {
        let i = ihi as usize;
        // locate a negligible subdiagonal
        let mut l = i;
        while l > lo {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() <= (EPS * s).max(floor) {
                h[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }
        if l == i {
            ihi -= 1;
            its = 0;
            continue;
        }
        if l + 1 == i {
            standardize_2x2(h, q, l);
            ihi -= 2;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_total {
            return Err(LinalgError::NoConvergence { iterations: total });
        }
        // shift polynomial from the trailing 2×2, with ad hoc exceptional shifts
        let (s, t) = if its % 10 == 0 {
            let ex = if its % 20 == 10 {
                h[(l + 1, l)].abs() + h[(l + 2, l + 1)].abs()
            } else {
                h[(i, i - 1)].abs() + h[(i - 1, i - 2)].abs()
            };
            let diag = if its % 20 == 10 { h[(l, l)] } else { h[(i, i)] };
            let h11 = 0.75 * ex + diag;
            let h12 = -0.4375 * ex;
            (2.0 * h11, h11 * h11 - h12 * ex)
        } else {
            let (h11, h12, h21, h22) = (h[(i - 1, i - 1)], h[(i - 1, i)], h[(i, i - 1)], h[(i, i)]);
            (h11 + h22, h11 * h22 - h12 * h21)
        };
        // find where to start the bulge
        let mut m = i - 2;
        let mut v;
        loop {
            let hmm = h[(m, m)];
            let h10 = h[(m + 1, m)];
            let mut x = hmm * hmm + h[(m, m + 1)] * h10 - s * hmm + t;
            let mut y = h10 * (hmm + h[(m + 1, m + 1)] - s);
            let mut z = h10 * h[(m + 2, m + 1)];
            let sc = x.abs() + y.abs() + z.abs();
            if sc != 0.0 {
                x /= sc;
                y /= sc;
                z /= sc;
            }
            v = [x, y, z];
            if m == l {
                break;
            }
            let h00 = h[(m, m - 1)].abs();
            let lhs = h00 * (y.abs() + z.abs());
            let rhs = EPS * x.abs() * (h[(m - 1, m - 1)].abs() + hmm.abs() + h[(m + 1, m + 1)].abs());
            if lhs <= rhs {
                break;
            }
            m -= 1;
        }
        // chase the bulge from m to i
        for k in m..i {
            let nr = 3.min(i - k + 1);
            if k > m {
                for (r, vr) in v.iter_mut().enumerate().take(nr) {
                    *vr = h[(k + r, k - 1)];
                }
            }
            let (hv, tau, beta) = householder(&v[..nr]);
            if k > m {
                h[(k, k - 1)] = beta;
                h[(k + 1, k - 1)] = 0.0;
                if nr == 3 {
                    h[(k + 2, k - 1)] = 0.0;
                }
            } else if m > l {
                h[(k, k - 1)] *= 1.0 - tau;
            }
            if tau == 0.0 {
                continue;
            }
            reflect_rows(h, &hv, tau, k, k..n);
            let rmax = (k + 3).min(i);
            reflect_cols(h, &hv, tau, k, 0..rmax + 1);
            reflect_cols(q, &hv, tau, k, 0..n);
        }
    }
    Ok(())
}

/// Clears everything below the quasi-triangle and reports the block sizes.
fn finalize_blocks(h: &mut Matrix) -> Vec<usize> {
    let n = h.nrows();
    for j in 0..n {
        for i in j + 2..n {
            h[(i, j)] = 0.0;
        }
    }
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && h[(i + 1, i)] != 0.0 {
            sizes.push(2);
            i += 2;
        } else {
            if i + 1 < n {
                h[(i + 1, i)] = 0.0;
            }
            sizes.push(1);
            i += 1;
        }
    }
    sizes
}

/// Reorders the diagonal blocks of a Schur form. `target[k]` is the index of
/// the block (in the input ordering) that must end up at position `k`.
///
/// Blocks are brought into place one at a time by adjacent swaps, so the
/// identity target returns the input unchanged.
pub fn reorder_schur(s: &SchurForm, target: &[usize]) -> Result<SchurForm, LinalgError> {
    let nb = s.block_sizes.len();
    let mut seen = vec![false; nb];
    if target.len() != nb || target.iter().any(|&b| b >= nb || std::mem::replace(&mut seen[b], true)) {
        return Err(LinalgError::InvalidPermutation { blocks: nb });
    }
    let mut r = s.r.clone();
    let mut q = s.q.clone();
    let mut order: Vec<usize> = (0..nb).collect();
    for (k, &want) in target.iter().enumerate() {
        let mut p = order.iter().position(|&b| b == want).expect("checked permutation");
        while p > k {
            let off: usize = order[..p - 1].iter().map(|&b| s.block_sizes[b]).sum();
            let n1 = s.block_sizes[order[p - 1]];
            let n2 = s.block_sizes[order[p]];
            swap_blocks(&mut r, &mut q, off, n1, n2)?;
            order.swap(p - 1, p);
            p -= 1;
        }
    }
    let block_sizes = order.iter().map(|&b| s.block_sizes[b]).collect();
    Ok(SchurForm { q, r, block_sizes })
}

/// Swaps the adjacent diagonal blocks of sizes `n1` (at `j`) and `n2`.
fn swap_blocks(t: &mut Matrix, q: &mut Matrix, j: usize, n1: usize, n2: usize) -> Result<(), LinalgError> {
    let n = t.nrows();
    let nq = q.nrows();
    let m = n1 + n2;
    if n1 == 1 && n2 == 1 {
        let t11 = t[(j, j)];
        let t22 = t[(j + 1, j + 1)];
        let (cs, sn) = givens(t[(j, j + 1)], t22 - t11);
        if j + 2 < n {
            rot_rows(t, j, j + 1, cs, sn, j + 2..n);
        }
        rot_cols(t, j, j + 1, cs, sn, 0..j);
        t[(j, j)] = t22;
        t[(j + 1, j + 1)] = t11;
        rot_cols(q, j, j + 1, cs, sn, 0..nq);
        return Ok(());
    }
    let local = t.view((j, j), (m, m)).into_owned();
    let dnorm = local.amax();
    let smin = (EPS * dnorm).max(f64::MIN_POSITIVE);
    let t11 = local.view((0, 0), (n1, n1)).into_owned();
    let t22 = local.view((n1, n1), (n2, n2)).into_owned();
    let t12 = local.view((0, n1), (n1, n2)).into_owned();
    let (x, _) = kron_sylvester(&t11, &t22, &t12, smin);
    // columns [-X; I] span the invariant subspace belonging to t22
    let mut basis = Matrix::zeros(m, n2);
    for c in 0..n2 {
        for r in 0..n1 {
            basis[(r, c)] = -x[(r, c)];
        }
        basis[(n1 + c, c)] = 1.0;
    }
    // orthogonal factor of basis as a product of Householder reflectors
    let mut reflectors = Vec::with_capacity(n2);
    for c in 0..n2 {
        let col: Vec<f64> = (c..m).map(|r| basis[(r, c)]).collect();
        let (v, tau, _) = householder(&col);
        reflect_rows(&mut basis, &v, tau, c, c..n2);
        reflectors.push((c, v, tau));
    }
    let mut trial = local.clone();
    for (c, v, tau) in &reflectors {
        reflect_rows(&mut trial, v, *tau, *c, 0..m);
        reflect_cols(&mut trial, v, *tau, *c, 0..m);
    }
    let mut leak = 0.0_f64;
    for r in n2..m {
        for c in 0..n2 {
            leak = leak.max(trial[(r, c)].abs());
        }
    }
    let thresh = (10.0 * EPS * dnorm).max(f64::MIN_POSITIVE);
    if leak > thresh {
        return Err(LinalgError::InseparableBlocks { first: j, second: j + n1 });
    }
    for (c, v, tau) in &reflectors {
        reflect_rows(t, v, *tau, j + c, j..n);
        reflect_cols(t, v, *tau, j + c, 0..j + m);
        reflect_cols(q, v, *tau, j + c, 0..nq);
    }
    for r in n2..m {
        for c in 0..n2 {
            t[(j + r, j + c)] = 0.0;
        }
    }
    if n2 == 2 && !standardize_2x2(t, q, j) {
        return Err(LinalgError::InseparableBlocks { first: j, second: j + n1 });
    }
    if n1 == 2 && !standardize_2x2(t, q, j + n2) {
        return Err(LinalgError::InseparableBlocks { first: j, second: j + n1 });
    }
    Ok(())
}

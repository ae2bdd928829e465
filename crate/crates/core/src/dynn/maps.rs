//! Per-layer maps from a diagonal Schur block to second-order neuron dynamics.

use super::{HiddenMap, NeuronOrder, NeuronSpec, SecondOrderSystem};
use crate::linalg::Matrix;
use crate::Error;

/// Permutation taking interleaved coordinates `(x₁, x₂, x₃, x₄, …)` to
/// `(x₁, x₃, …, x₂, x₄, …)`, i.e. `[I ⊗ (1 0); I ⊗ (0 1)]`.
pub fn interleave_permutation(pairs: usize) -> Matrix {
    let mut t = Matrix::zeros(2 * pairs, 2 * pairs);
    for c in 0..pairs {
        t[(c, 2 * c)] = 1.0;
        t[(pairs + c, 2 * c + 1)] = 1.0;
    }
    t
}

/// `T·A·Tᵀ` for a block of standardized 2×2 blocks. The four quadrants of
/// the result are upper triangular.
pub fn permute_complex_block(a: &Matrix) -> Result<Matrix, Error> {
    if a.nrows() != a.ncols() || a.nrows() % 2 != 0 {
        return Err(Error::Dimension("complex block must be square of even order".into()));
    }
    let t = interleave_permutation(a.nrows() / 2);
    Ok(&t * a * t.transpose())
}

/// Quadrants of the permuted layer block.
pub(crate) struct Partition {
    pub a11: Matrix,
    pub a12: Matrix,
    pub a13: Matrix,
    pub a22: Matrix,
    pub a23: Matrix,
    pub a32: Matrix,
    pub a33: Matrix,
    pub b1: Matrix,
    pub b2: Matrix,
    pub b3: Matrix,
}

pub(crate) fn partition(a: &Matrix, b: &Matrix, n_real: usize) -> Result<Partition, Error> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || n < n_real || (n - n_real) % 2 != 0 {
        return Err(Error::Dimension(format!(
            "layer block {}x{} with {} input rows and {n_real} reals",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let kr = n_real;
    let kc = (n - kr) / 2;
    // P = blkdiag(I_kr, T)
    let mut p = Matrix::zeros(n, n);
    for i in 0..kr {
        p[(i, i)] = 1.0;
    }
    let t = interleave_permutation(kc);
    p.view_mut((kr, kr), (2 * kc, 2 * kc)).copy_from(&t);
    let pa = &p * a * p.transpose();
    let pb = &p * b;
    let d = b.ncols();
    let blk = |r: usize, c: usize, nr: usize, nc: usize| pa.view((r, c), (nr, nc)).into_owned();
    Ok(Partition {
        a11: blk(0, 0, kr, kr),
        a12: blk(0, kr, kr, kc),
        a13: blk(0, kr + kc, kr, kc),
        a22: blk(kr, kr, kc, kc),
        a23: blk(kr, kr + kc, kc, kc),
        a32: blk(kr + kc, kr, kc, kc),
        a33: blk(kr + kc, kr + kc, kc, kc),
        b1: pb.view((0, 0), (kr, d)).into_owned(),
        b2: pb.view((kr, 0), (kc, d)).into_owned(),
        b3: pb.view((kr + kc, 0), (kc, d)).into_owned(),
    })
}

/// Inverse of an upper-triangular matrix by back substitution; entries below
/// the diagonal stay exactly zero.
fn upper_inverse(u: &Matrix) -> Result<Matrix, Error> {
    let n = u.nrows();
    for i in 0..n {
        if u[(i, i)] == 0.0 {
            return Err(Error::NotConvertible(format!(
                "coupling entry of pair {i} is zero"
            )));
        }
    }
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = 1.0 / u[(j, j)];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in i + 1..=j {
                s += u[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / u[(i, i)];
        }
    }
    Ok(inv)
}

/// Elimination of the hidden coordinates `η = W ξ_c + Q ξ̇_c + Z u`.
pub fn map_eta(a: &Matrix, b: &Matrix, n_real: usize) -> Result<HiddenMap, Error> {
    let p = partition(a, b, n_real)?;
    eta_from_partition(&p)
}

pub(crate) fn eta_from_partition(p: &Partition) -> Result<HiddenMap, Error> {
    let q = upper_inverse(&p.a23)?;
    let w = -(&q * &p.a22);
    let z = -(&q * &p.b2);
    Ok(HiddenMap { w, q, z })
}

/// Second-order form `M ξ̈ + C ξ̇ + K ξ = E u + V u̇` of one layer block, with
/// the hidden-coordinate map used to reconstruct the eliminated states.
pub fn map_lti_second_order(a: &Matrix, b: &Matrix, n_real: usize) -> Result<(SecondOrderSystem, HiddenMap), Error> {
    let p = partition(a, b, n_real)?;
    let eta = eta_from_partition(&p)?;
    let kr = p.a11.nrows();
    let kc = p.a22.nrows();
    let n = kr + kc;
    let d = p.b1.ncols();
    let (w, q, z) = (&eta.w, &eta.q, &eta.z);
    let a23_a33 = &p.a23 * &p.a33;

    let c_rc = -(&p.a13 * q);
    let c_c = -(&p.a22 + &a23_a33 * q);
    let k_r = -p.a11.clone();
    let k_rc = -(&p.a12 + &p.a13 * w);
    let k_c = -(&p.a23 * &p.a32 + &a23_a33 * w);
    let e_r = &p.a13 * z + &p.b1;
    let e_c = &a23_a33 * z + &p.a23 * &p.b3;

    let mut m = Matrix::zeros(n, n);
    let mut c = Matrix::zeros(n, n);
    let mut k = Matrix::zeros(n, n);
    let mut e = Matrix::zeros(n, d);
    let mut v = Matrix::zeros(n, d);
    for i in 0..kr {
        c[(i, i)] = 1.0;
    }
    for i in kr..n {
        m[(i, i)] = 1.0;
    }
    c.view_mut((0, kr), (kr, kc)).copy_from(&c_rc);
    c.view_mut((kr, kr), (kc, kc)).copy_from(&c_c);
    k.view_mut((0, 0), (kr, kr)).copy_from(&k_r);
    k.view_mut((0, kr), (kr, kc)).copy_from(&k_rc);
    k.view_mut((kr, kr), (kc, kc)).copy_from(&k_c);
    e.view_mut((0, 0), (kr, d)).copy_from(&e_r);
    e.view_mut((kr, 0), (kc, d)).copy_from(&e_c);
    v.view_mut((kr, 0), (kc, d)).copy_from(&p.b2);
    Ok((SecondOrderSystem { m, c, k, e, v }, eta))
}

/// Layer of neurons realizing the second-order system. Neuron `i` receives
/// `[u; u̇; y_{i+1}; …; y_n]` with `y_j = ξ_j` for first-order and
/// `y_j = (ξ_j, ξ̇_j)` for second-order neurons.
pub fn n_dynn_forward(layer: &[NeuronSpec], inputs: usize) -> Result<SecondOrderSystem, Error> {
    let n = layer.len();
    let mut sys = SecondOrderSystem {
        m: Matrix::zeros(n, n),
        c: Matrix::zeros(n, n),
        k: Matrix::zeros(n, n),
        e: Matrix::zeros(n, inputs),
        v: Matrix::zeros(n, inputs),
    };
    for (i, neuron) in layer.iter().enumerate() {
        let expected = super::weight_len(layer, i, inputs);
        if neuron.w.len() != expected {
            return Err(Error::Dimension(format!(
                "neuron {i} has {} weights, expected {expected}",
                neuron.w.len()
            )));
        }
        sys.m[(i, i)] = neuron.m;
        sys.c[(i, i)] = neuron.c;
        sys.k[(i, i)] = neuron.k;
        for j in 0..inputs {
            sys.e[(i, j)] = neuron.w[j];
            sys.v[(i, j)] = neuron.w[inputs + j];
        }
        let mut pos = 2 * inputs;
        for (j, later) in layer.iter().enumerate().skip(i + 1) {
            sys.k[(i, j)] = -neuron.w[pos];
            pos += 1;
            if later.order == NeuronOrder::Second {
                sys.c[(i, j)] = -neuron.w[pos];
                pos += 1;
            }
        }
    }
    Ok(sys)
}

/// Reads the neurons back off a second-order system. Second-order rows are
/// normalized to unit mass.
pub fn n_dynn_inverse(sys: &SecondOrderSystem) -> Result<Vec<NeuronSpec>, Error> {
    let n = sys.m.nrows();
    let d = sys.e.ncols();
    for i in 0..n {
        for j in 0..n {
            let lower = j < i;
            if (i != j && sys.m[(i, j)] != 0.0) || (lower && (sys.c[(i, j)] != 0.0 || sys.k[(i, j)] != 0.0)) {
                return Err(Error::NotConvertible(format!(
                    "entry ({i},{j}) violates the triangular neuron structure"
                )));
            }
        }
    }
    let orders: Vec<NeuronOrder> = (0..n)
        .map(|i| if sys.m[(i, i)] == 0.0 { NeuronOrder::First } else { NeuronOrder::Second })
        .collect();
    let mut layer = Vec::with_capacity(n);
    for i in 0..n {
        let scale = if orders[i] == NeuronOrder::Second { sys.m[(i, i)] } else { 1.0 };
        let mut w = Vec::with_capacity(2 * d + 2 * (n - i));
        w.extend((0..d).map(|j| sys.e[(i, j)] / scale));
        w.extend((0..d).map(|j| sys.v[(i, j)] / scale));
        for j in i + 1..n {
            w.push(-sys.k[(i, j)] / scale);
            match orders[j] {
                NeuronOrder::Second => w.push(-sys.c[(i, j)] / scale),
                NeuronOrder::First if sys.c[(i, j)] != 0.0 => {
                    return Err(Error::NotConvertible(format!(
                        "neuron {i} depends on the derivative of first-order neuron {j}"
                    )))
                }
                NeuronOrder::First => {}
            }
        }
        layer.push(NeuronSpec {
            order: orders[i],
            m: sys.m[(i, i)] / scale,
            c: sys.c[(i, i)] / scale,
            k: sys.k[(i, i)] / scale,
            w,
        });
    }
    Ok(layer)
}

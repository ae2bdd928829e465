//! Matrix exponential by scaling and squaring with Padé approximants.

use super::{check_square, LinalgError, Matrix};

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(scale·m)`.
pub fn matrix_exponential(m: &Matrix, scale: f64) -> Result<Matrix, LinalgError> {
    let n = check_square(m)?;
    if !scale.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let a = m * scale;
    if n == 0 {
        return Ok(a);
    }
    let ident = Matrix::identity(n, n);
    let nrm = norm1(&a);
    if nrm == 0.0 {
        return Ok(ident);
    }
    let a2 = &a * &a;
    for &(deg, theta) in &THETA {
        if nrm <= theta {
            let coeffs: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            // odd part U = A·Σ b_{2k+1} A^{2k}, even part V = Σ b_{2k} A^{2k}
            let mut u = &ident * coeffs[1];
            let mut v = &ident * coeffs[0];
            let mut pow = ident.clone();
            for k in 1..=deg / 2 {
                pow = &pow * &a2;
                u += &pow * coeffs[2 * k + 1];
                v += &pow * coeffs[2 * k];
            }
            let u = &a * u;
            return pade_solve(&u, &v);
        }
    }
    let s = (nrm / THETA13).log2().ceil().max(0.0) as i32;
    let f = 2f64.powi(-s);
    let a = a * f;
    let a2 = a2 * (f * f);
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
        if r.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::Overflow);
        }
    }
    Ok(r)
}

fn pade_solve(u: &Matrix, v: &Matrix) -> Result<Matrix, LinalgError> {
    let p = v + u;
    let q = v - u;
    q.lu().solve(&p).ok_or(LinalgError::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_identity() {
        let e = matrix_exponential(&Matrix::zeros(3, 3), 1.0).unwrap();
        assert_eq!(e, Matrix::identity(3, 3));
    }

    #[test]
    fn rotation_generator() {
        let m = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let t = std::f64::consts::FRAC_PI_2;
        let e = matrix_exponential(&m, t).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((e - expect).amax() < 1e-15);
    }

    #[test]
    fn large_norm_uses_squaring() {
        // rotation-scaling block: exp([[a,-b],[b,a]]) = e^a [[cos b, -sin b],[sin b, cos b]]
        let (a, b) = (-3.0, 7.0);
        let m = Matrix::from_row_slice(2, 2, &[a, -b, b, a]);
        let e = matrix_exponential(&m, 2.0).unwrap();
        let g = (2.0 * a).exp();
        let expect = Matrix::from_row_slice(
            2,
            2,
            &[g * (2.0 * b).cos(), -g * (2.0 * b).sin(), g * (2.0 * b).sin(), g * (2.0 * b).cos()],
        );
        assert!((e - expect).amax() < 1e-12 * g.max(1.0));
    }
}

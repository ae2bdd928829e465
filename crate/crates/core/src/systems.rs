//! Example LTI systems and their inputs.
//!
//! All random draws use `ChaCha8Rng::seed_from_u64(seed)`.

use crate::linalg::Matrix;
use crate::simulate::{derive_input_signal, InputSignal, Interpolation};
use crate::{Error, StateSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Uniform samples on `(lo, hi]`.
fn uniform_matrix_right_closed(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| hi - rng.random_range(0.0..hi - lo))
}

/// Uniform 2-D grid. Points sit at `(i·h, j·h)` with `x` varying fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
}

impl GridSpec {
    /// Periodic in both directions: the right and top lines duplicate the
    /// left and bottom ones and are dropped, so `h = lx/nx`.
    pub fn periodic(n: usize, l: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            lx: l,
            ly: l,
            h: l / n as f64,
        }
    }

    /// Periodic in `x`, with both `y` boundaries carried as grid lines.
    pub fn channel(n: usize, lx: f64) -> Self {
        let h = lx / n as f64;
        Self {
            nx: n,
            ny: n,
            lx,
            ly: h * (n - 1) as f64,
            h,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    fn check(&self) -> Result<(), Error> {
        if self.nx < 3 || self.ny < 3 || !(self.h > 0.0) {
            return Err(Error::InvalidArgument("grid needs at least 3 points per direction".into()));
        }
        Ok(())
    }
}

/// Input sampled on a time grid, interpolated piecewise linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInput {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl SampledInput {
    pub fn signal(&self) -> InputSignal {
        derive_input_signal(self.times.clone(), self.values.clone(), Interpolation::PiecewiseLinear)
            .expect("generated samples are valid")
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
}

/// `0, 0.1, …, 10`.
pub fn standard_time_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 * 0.1).collect()
}

/// `uᵢ(t) = sin(i·t/2)` for `i = 1..=inputs` on the standard grid.
pub fn sine_inputs(inputs: usize) -> SampledInput {
    let times = standard_time_grid();
    let values = times
        .iter()
        .map(|&t| (1..=inputs).map(|i| (i as f64 * t / 2.0).sin()).collect())
        .collect();
    SampledInput { times, values }
}

/// Gaussian `100·exp(−0.8((x−l/2)² + (y−l/2)²))` injected as a unit sample
/// at `t = 0.2` of the standard grid, zero at every other sample.
pub fn gaussian_source(grid: &GridSpec) -> SampledInput {
    let times = standard_time_grid();
    let centre = grid.lx / 2.0;
    let mut pulse = vec![0.0; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = (i as f64 * grid.h, j as f64 * grid.h);
            pulse[grid.index(i, j)] = 100.0 * (-0.8 * ((x - centre).powi(2) + (y - centre).powi(2))).exp();
        }
    }
    let values = (0..times.len())
        .map(|k| if k == 2 { pulse.clone() } else { vec![0.0; grid.len()] })
        .collect();
    SampledInput { times, values }
}

fn identity_io(a: Matrix) -> StateSpace {
    let n = a.nrows();
    StateSpace::new(a, Matrix::identity(n, n), Matrix::identity(n, n), Matrix::zeros(n, n)).expect("square system")
}

/// Periodic five-point diffusion operator with `B = C = I`, `D = 0`.
pub fn make_diffusion2d(grid: &GridSpec, diffusivity: f64) -> Result<(StateSpace, SampledInput), Error> {
    grid.check()?;
    let n = grid.len();
    let s = diffusivity / (grid.h * grid.h);
    let mut a = Matrix::zeros(n, n);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.index(i, j);
            a[(p, p)] -= 4.0 * s;
            for q in [
                grid.index((i + 1) % grid.nx, j),
                grid.index((i + grid.nx - 1) % grid.nx, j),
                grid.index(i, (j + 1) % grid.ny),
                grid.index(i, (j + grid.ny - 1) % grid.ny),
            ] {
                a[(p, q)] += s;
            }
        }
    }
    Ok((identity_io(a), gaussian_source(grid)))
}

/// Central-difference convection–diffusion, periodic in `x`; the first and
/// last `y` lines are fixed at zero and kept as states with zero rows.
pub fn make_convdiff2d(
    grid: &GridSpec,
    diffusivity: f64,
    vx: f64,
    vy: f64,
) -> Result<(StateSpace, SampledInput), Error> {
    grid.check()?;
    let n = grid.len();
    let h = grid.h;
    let s = diffusivity / (h * h);
    let gx = vx / (2.0 * h);
    let gy = vy / (2.0 * h);
    let mut a = Matrix::zeros(n, n);
    for j in 1..grid.ny - 1 {
        for i in 0..grid.nx {
            let p = grid.index(i, j);
            let east = grid.index((i + 1) % grid.nx, j);
            let west = grid.index((i + grid.nx - 1) % grid.nx, j);
            let north = grid.index(i, j + 1);
            let south = grid.index(i, j - 1);
            a[(p, p)] -= 4.0 * s;
            a[(p, east)] += s - gx;
            a[(p, west)] += s + gx;
            a[(p, north)] += s - gy;
            a[(p, south)] += s + gy;
        }
    }
    Ok((identity_io(a), gaussian_source(grid)))
}

/// Upper-triangular 10×10 system with diagonal `−4 + 2.5⁻ⁿ`.
pub fn make_conditioning_ladder(seed: u64) -> StateSpace {
    let mut r = rng(seed);
    let n = 10;
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = -4.0 + 2.5_f64.powi(-(i as i32 + 1));
        for j in i + 1..n {
            a[(i, j)] = r.random_range(0.0..=0.1);
        }
    }
    let b = Matrix::from_fn(n, n, |_, _| r.random_range(0.0..=0.5));
    let c = Matrix::from_fn(n, n, |_, _| r.random_range(0.0..=0.5));
    let d = Matrix::from_fn(n, n, |_, _| r.random_range(-0.5..=0.0));
    StateSpace::new(a, b, c, d).expect("valid shapes")
}

/// Orthogonal matrix from the QR factors of a standard-normal matrix, with
/// columns signed so that `R` has a positive diagonal.
pub fn haar_rotation(n: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let g = Matrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for k in 0..n {
        if rr[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

/// A group of eigenvalues around `(re, im)`; pairs sit at `re ± i·|im|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
    pub n_real: usize,
    pub n_pair: usize,
}

/// Eigenvalue placement for [`make_mixed_cluster_system`].
pub const MIXED_BLOBS: [Blob; 6] = [
    Blob { re: -0.5, im: 0.0, radius: 0.2, n_real: 8, n_pair: 0 },
    Blob { re: -1.0, im: 3.0, radius: 0.2, n_real: 0, n_pair: 10 },
    Blob { re: -3.0, im: 0.4, radius: 0.2, n_real: 8, n_pair: 7 },
    Blob { re: -5.0, im: 2.0, radius: 0.2, n_real: 0, n_pair: 10 },
    Blob { re: -7.0, im: 0.0, radius: 0.2, n_real: 14, n_pair: 0 },
    Blob { re: -9.0, im: 0.5, radius: 0.2, n_real: 14, n_pair: 18 },
];

/// Draws eigenvalues for every blob: `(reals, pairs as (re, im > 0))`.
fn draw_blob_spectrum(r: &mut ChaCha8Rng, blobs: &[Blob]) -> (Vec<f64>, Vec<(f64, f64)>) {
    let mut reals = Vec::new();
    let mut pairs = Vec::new();
    for b in blobs {
        for _ in 0..b.n_real {
            reals.push(b.re + r.random_range(-b.radius..=b.radius));
        }
        for _ in 0..b.n_pair {
            let re = b.re + r.random_range(-b.radius..=b.radius);
            let lo = (b.im - b.radius).max(0.05);
            let im = r.random_range(lo..=b.im + b.radius);
            pairs.push((re, im));
        }
    }
    (reals, pairs)
}

/// Block upper-triangular matrix with leading rotation-scaling blocks for
/// the pairs, trailing reals, and uniform strictly-upper fill.
fn block_triangular(r: &mut ChaCha8Rng, reals: &[f64], pairs: &[(f64, f64)], lo: f64, hi: f64) -> Matrix {
    let n = reals.len() + 2 * pairs.len();
    let mut a = Matrix::zeros(n, n);
    let mut starts = Vec::new();
    for (k, &(re, im)) in pairs.iter().enumerate() {
        let o = 2 * k;
        a[(o, o)] = re;
        a[(o, o + 1)] = -im;
        a[(o + 1, o)] = im;
        a[(o + 1, o + 1)] = re;
        starts.push((o, 2));
    }
    for (k, &re) in reals.iter().enumerate() {
        let o = 2 * pairs.len() + k;
        a[(o, o)] = re;
        starts.push((o, 1));
    }
    for &(o, size) in &starts {
        for i in o..o + size {
            for j in o + size..n {
                a[(i, j)] = r.random_range(lo..=hi);
            }
        }
    }
    a
}

fn rotate(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix, rot: &Matrix) -> StateSpace {
    let rt = rot.transpose();
    StateSpace::new(&rt * a * rot, &rt * b, c * rot, d.clone()).expect("valid shapes")
}

/// 134-state system with 44 real eigenvalues and 45 complex pairs in six
/// blobs, densified by a Haar rotation. Ten inputs, four outputs.
pub fn make_mixed_cluster_system(seed: u64) -> StateSpace {
    make_blob_system(&MIXED_BLOBS, 10, 4, seed)
}

/// Blob-structured system densified by a Haar rotation. `B`, `C` are
/// uniform on `[0, 1)`, `D` on `(−1, 0]`.
pub fn make_blob_system(blobs: &[Blob], inputs: usize, outputs: usize, seed: u64) -> StateSpace {
    let mut r = rng(seed);
    let (reals, pairs) = draw_blob_spectrum(&mut r, blobs);
    let a = block_triangular(&mut r, &reals, &pairs, -0.5, 0.0);
    let n = a.nrows();
    let b = uniform_matrix(&mut r, n, inputs, 0.0, 1.0);
    let c = uniform_matrix(&mut r, outputs, n, 0.0, 1.0);
    let d = uniform_matrix_right_closed(&mut r, outputs, inputs, -1.0, 0.0);
    let rot = haar_rotation(n, r.random());
    rotate(&a, &b, &c, &d, &rot)
}

/// A random test system together with the number of eigenvalue blobs it was
/// built from.
#[derive(Debug, Clone)]
pub struct RandomSystem {
    pub ss: StateSpace,
    pub blobs: usize,
}

/// Random dense system of order 2..=12 with real and complex eigenvalues in
/// up to three well-separated blobs; distinct eigenvalues differ by at
/// least 0.1.
pub fn make_random_system(seed: u64) -> RandomSystem {
    let mut r = rng(seed);
    let d_h: usize = r.random_range(2..=12);
    let n_pair = r.random_range(0..=d_h / 2);
    let n_real = d_h - 2 * n_pair;
    let units = n_real + n_pair;
    let n_blobs = r.random_range(1..=units.min(3));
    // unit k < n_real is real, the rest are pairs; blob of each unit
    let mut owner: Vec<usize> = (0..units).map(|k| k % n_blobs).collect();
    for k in (1..units).rev() {
        let j = r.random_range(0..=k);
        owner.swap(k, j);
    }
    // half-widths grow with membership so the separation draw stays feasible
    let half: Vec<f64> = (0..n_blobs)
        .map(|b| (0.1 * owner.iter().filter(|&&o| o == b).count() as f64).max(0.5))
        .collect();
    let mut centres = Vec::with_capacity(n_blobs);
    let mut edge = -0.3;
    for h in &half {
        centres.push(edge - h);
        edge -= 2.0 * h + 1.5;
    }
    let (reals, pairs) = loop {
        let mut reals = Vec::new();
        let mut pairs = Vec::new();
        for (k, &b) in owner.iter().enumerate() {
            let re = centres[b] + r.random_range(-half[b]..=half[b]);
            if k < n_real {
                reals.push(re);
            } else {
                pairs.push((re, r.random_range(0.3..=1.2)));
            }
        }
        let mut points: Vec<(f64, f64)> = reals.iter().map(|&x| (x, 0.0)).collect();
        points.extend(pairs.iter().flat_map(|&(x, y)| [(x, y), (x, -y)]));
        let separated = points.iter().enumerate().all(|(i, p)| {
            points[i + 1..].iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= 0.1)
        });
        if separated {
            break (reals, pairs);
        }
    };
    let a = block_triangular(&mut r, &reals, &pairs, -0.5, 0.5);
    let inputs = r.random_range(1..=3);
    let outputs = r.random_range(1..=3);
    let b = uniform_matrix(&mut r, d_h, inputs, -1.0, 1.0);
    let c = uniform_matrix(&mut r, outputs, d_h, -1.0, 1.0);
    let d = uniform_matrix(&mut r, outputs, inputs, -1.0, 1.0);
    let rot = haar_rotation(d_h, r.random());
    RandomSystem {
        ss: rotate(&a, &b, &c, &d, &rot),
        blobs: n_blobs,
    }
}

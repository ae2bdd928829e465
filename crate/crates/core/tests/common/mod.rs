#![allow(dead_code)]

use dynn::dynn::{build_dynn, DynnParams};
use dynn::oracle::lsim_exact;
use dynn::preprocess::{preprocess_lti, PreprocessOptions, TransformedLti};
use dynn::simulate::{forward_pass_stepped, forward_pass_whole, DynnSimulation, ForwardConfig, Interpolation, SolverConfig};
use dynn::systems::SampledInput;
use dynn::linalg::{block_eigenvalues, BlockLayout, Matrix};
use dynn::StateSpace;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Case {
    pub transformed: TransformedLti,
    pub params: DynnParams,
    pub sim: DynnSimulation,
    pub reference: Vec<Vec<f64>>,
}

impl Case {
    /// Largest absolute output deviation from the reference over the sample grid.
    pub fn max_error(&self, times: &[f64]) -> f64 {
        max_deviation(&self.sim.outputs_on(times), &self.reference)
    }

    pub fn max_error_at(&self, times: &[f64], at: &[f64]) -> f64 {
        let idx: Vec<usize> = at
            .iter()
            .map(|t| times.iter().position(|s| (s - t).abs() < 1e-9).expect("grid time"))
            .collect();
        let ys = self.sim.outputs_on(at);
        idx.iter()
            .zip(&ys)
            .flat_map(|(&k, y)| y.iter().zip(&self.reference[k]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn max_deviation(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

pub fn solver(tol: f64) -> ForwardConfig {
    ForwardConfig::new(SolverConfig::with_tol(tol, tol))
}

/// Preprocess, build, run the forward pass, and compute the exact reference.
pub fn run_case(ss: &StateSpace, input: &SampledInput, layers: usize, step: Option<f64>) -> Case {
    let transformed = preprocess_lti(
        ss,
        &PreprocessOptions {
            layers,
            ..Default::default()
        },
    )
    .expect("preprocess");
    let params = build_dynn(&transformed).expect("build");
    let signal = input.signal();
    let cfg = solver(1e-10);
    let sim = match step {
        None => forward_pass_whole(&params, &signal, input.span(), &cfg),
        Some(dt) => forward_pass_stepped(&params, &signal, input.span(), dt, &cfg),
    }
    .expect("forward pass");
    let reference = lsim_exact(ss, &input.times, &input.values, Interpolation::PiecewiseLinear, None)
        .expect("oracle")
        .outputs;
    Case {
        transformed,
        params,
        sim,
        reference,
    }
}

/// Quasi-upper-triangular matrix with standardized 2×2 blocks and real parts near `shift`.
pub fn random_quasi_triangular(rng: &mut ChaCha8Rng, sizes: &[usize], shift: f64) -> Matrix {
    let layout = BlockLayout::new(sizes.to_vec());
    let n = layout.dim();
    let mut m = Matrix::zeros(n, n);
    for k in 0..layout.len() {
        let r = layout.range(k);
        let re = shift + rng.random_range(-1.0..1.0);
        if sizes[k] == 1 {
            m[(r.start, r.start)] = re;
        } else {
            let im = rng.random_range(0.5..2.0);
            let ratio = rng.random_range(0.5..2.0);
            m[(r.start, r.start)] = re;
            m[(r.start + 1, r.start + 1)] = re;
            m[(r.start, r.start + 1)] = -im * ratio;
            m[(r.start + 1, r.start)] = im / ratio;
        }
        for i in r.clone() {
            for j in r.end..n {
                m[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
    }
    m
}

pub fn random_sizes(rng: &mut ChaCha8Rng, max_dim: usize) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut dim = 0;
    let target = rng.random_range(1..=max_dim);
    while dim < target {
        let s = if target - dim >= 2 && rng.random_bool(0.5) { 2 } else { 1 };
        sizes.push(s);
        dim += s;
    }
    sizes
}

pub fn sorted_spectrum(r: &Matrix, sizes: &[usize]) -> Vec<(f64, f64)> {
    let layout = BlockLayout::new(sizes.to_vec());
    let mut ev: Vec<(f64, f64)> = (0..layout.len())
        .flat_map(|k| block_eigenvalues(r, layout.offsets()[k], sizes[k]).into_iter().take(sizes[k]))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    ev
}

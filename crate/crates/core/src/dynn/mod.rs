//! Dynamic neural network representation of a transformed LTI system.
//!
//! Every diagonal block of the transformed state matrix becomes one
//! horizontal layer. A real eigenvalue yields a first-order neuron
//! `c ξ̇ + k ξ = w·uᵢ`, a complex pair a second-order neuron
//! `m ξ̈ + c ξ̇ + k ξ = w·uᵢ`. Inside a layer neuron `i` is driven by the
//! external input, its derivative and the outputs of neurons `i+1, …, n`.

mod maps;

pub use maps::{
    interleave_permutation, map_eta, map_lti_second_order, n_dynn_forward, n_dynn_inverse, permute_complex_block,
};

use crate::linalg::Matrix;
use crate::model::{matrix_from_rows, rows_of};
use crate::preprocess::TransformedLti;
use crate::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeuronOrder {
    First,
    Second,
}

impl NeuronOrder {
    /// Number of state components a neuron exposes to later consumers.
    pub fn width(self) -> usize {
        match self {
            NeuronOrder::First => 1,
            NeuronOrder::Second => 2,
        }
    }
}

/// One neuron. `w` is laid out as `[e | v | tail]` where `e` weights `u`,
/// `v` weights `u̇`, and the tail holds, for each later neuron `j`, the weight
/// on `ξ_j` followed (for second-order `j` only) by the weight on `ξ̇_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronSpec {
    pub order: NeuronOrder,
    pub m: f64,
    pub c: f64,
    pub k: f64,
    pub w: Vec<f64>,
}

/// Number of weights neuron `i` of `layer` carries.
pub fn weight_len(layer: &[NeuronSpec], i: usize, inputs: usize) -> usize {
    2 * inputs + layer[i + 1..].iter().map(|n| n.order.width()).sum::<usize>()
}

/// Coupled layer dynamics `M ξ̈ + C ξ̇ + K ξ = E u + V u̇` with diagonal `M`
/// and upper-triangular `C`, `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    pub m: Matrix,
    pub c: Matrix,
    pub k: Matrix,
    pub e: Matrix,
    pub v: Matrix,
}

/// Reconstruction of the eliminated coordinates of complex pairs,
/// `η = W ξ_c + Q ξ̇_c + Z u`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMap {
    pub w: Matrix,
    pub q: Matrix,
    pub z: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalLayer {
    pub neurons: Vec<NeuronSpec>,
}

/// Output read-out `y = Σ φᵢ yᵢ + Ψ u`. `phi[l][i]` is `d_o × 1` for
/// first-order and `d_o × 2` for second-order neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputMap {
    pub phi: Vec<Vec<Matrix>>,
    pub psi: Matrix,
}

/// Complete network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DynnParams {
    pub inputs: usize,
    pub outputs: usize,
    pub layers: Vec<HorizontalLayer>,
    pub output: OutputMap,
}

impl DynnParams {
    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.neurons.len()).sum()
    }

    pub fn census(&self) -> (usize, usize) {
        let mut first = 0;
        let mut second = 0;
        for n in self.layers.iter().flat_map(|l| &l.neurons) {
            match n.order {
                NeuronOrder::First => first += 1,
                NeuronOrder::Second => second += 1,
            }
        }
        (first, second)
    }

    pub fn to_json(&self) -> String {
        let file = ParamsFile {
            inputs: self.inputs,
            outputs: self.outputs,
            layers: self.layers.clone(),
            phi: self.output.phi.iter().map(|l| l.iter().map(rows_of).collect()).collect(),
            psi: rows_of(&self.output.psi),
        };
        serde_json::to_string_pretty(&file).expect("plain numeric data")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: ParamsFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.phi.len() != file.layers.len() {
            return Err(Error::Parse("one phi list per layer expected".into()));
        }
        let mut phi = Vec::with_capacity(file.phi.len());
        for (layer, maps) in file.layers.iter().zip(&file.phi) {
            if maps.len() != layer.neurons.len() {
                return Err(Error::Parse("one phi block per neuron expected".into()));
            }
            let mut out = Vec::with_capacity(maps.len());
            for (i, (neuron, rows)) in layer.neurons.iter().zip(maps).enumerate() {
                if rows.len() != file.outputs {
                    return Err(Error::Parse("phi block has wrong row count".into()));
                }
                if neuron.w.len() != weight_len(&layer.neurons, i, file.inputs) {
                    return Err(Error::Parse(format!("neuron {i} has a malformed weight vector")));
                }
                out.push(matrix_from_rows(rows, neuron.order.width())?);
            }
            phi.push(out);
        }
        let psi = matrix_from_rows(&file.psi, file.inputs)?;
        if psi.nrows() != file.outputs {
            return Err(Error::Parse("psi has wrong row count".into()));
        }
        Ok(Self {
            inputs: file.inputs,
            outputs: file.outputs,
            layers: file.layers,
            output: OutputMap { phi, psi },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsFile {
    inputs: usize,
    outputs: usize,
    layers: Vec<HorizontalLayer>,
    phi: Vec<Vec<Vec<Vec<f64>>>>,
    psi: Vec<Vec<f64>>,
}

/// Per-layer second-order systems, neurons and hidden maps.
pub fn map_hidden(tr: &TransformedLti) -> Result<Vec<(HorizontalLayer, SecondOrderSystem, HiddenMap)>, Error> {
    tr.blocks
        .iter()
        .map(|blk| {
            let rg = blk.range();
            let a = tr.ss.a.view((rg.start, rg.start), (rg.len(), rg.len())).into_owned();
            let b = tr.ss.b.rows(rg.start, rg.len()).into_owned();
            let (sys, eta) = map_lti_second_order(&a, &b, blk.n_real)?;
            let neurons = n_dynn_inverse(&sys)?;
            Ok((HorizontalLayer { neurons }, sys, eta))
        })
        .collect()
}

/// Stacked projections of one layer: `P_ξ` places `ξ`, `P_η` places `η`.
pub fn layer_projections(n_real: usize, n_pair: usize) -> (Matrix, Matrix) {
    let dim = n_real + 2 * n_pair;
    let n = n_real + n_pair;
    let mut p_xi = Matrix::zeros(dim, n);
    let mut p_eta = Matrix::zeros(dim, n_pair);
    for r in 0..n_real {
        p_xi[(r, r)] = 1.0;
    }
    for c in 0..n_pair {
        p_xi[(n_real + 2 * c, n_real + c)] = 1.0;
        p_eta[(n_real + 2 * c + 1, c)] = 1.0;
    }
    (p_xi, p_eta)
}

/// Map from the interleaved neuron outputs `(ξ₁, ξ̇₁, ξ₂, ξ̇₂, …)` of a layer
/// to its original states, `x = F y + P_η Z u`.
pub fn state_reconstruction(n_real: usize, eta: &HiddenMap) -> Matrix {
    let n_pair = eta.w.nrows();
    let n = n_real + n_pair;
    let (p_xi, p_eta) = layer_projections(n_real, n_pair);
    let mut pad_w = Matrix::zeros(n_pair, n);
    let mut pad_q = Matrix::zeros(n_pair, n);
    pad_w.view_mut((0, n_real), (n_pair, n_pair)).copy_from(&eta.w);
    pad_q.view_mut((0, n_real), (n_pair, n_pair)).copy_from(&eta.q);
    let stacked_xi = &p_xi + &p_eta * pad_w;
    let stacked_dxi = &p_eta * pad_q;
    // [ξ; ξ̇] = T y with y interleaved
    let mut t = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        t[(i, 2 * i)] = 1.0;
        t[(n + i, 2 * i + 1)] = 1.0;
    }
    let mut stacked = Matrix::zeros(n_real + 2 * n_pair, 2 * n);
    stacked.view_mut((0, 0), (stacked_xi.nrows(), n)).copy_from(&stacked_xi);
    stacked.view_mut((0, n), (stacked_dxi.nrows(), n)).copy_from(&stacked_dxi);
    stacked * t
}

/// Output read-out for all layers.
pub fn map_output(tr: &TransformedLti, hidden: &[(HorizontalLayer, SecondOrderSystem, HiddenMap)]) -> OutputMap {
    let mut psi = tr.ss.d.clone();
    let mut phi = Vec::with_capacity(hidden.len());
    for (blk, (layer, _, eta)) in tr.blocks.iter().zip(hidden) {
        let rg = blk.range();
        let c_l = tr.ss.c.columns(rg.start, rg.len()).into_owned();
        let f = state_reconstruction(blk.n_real, eta);
        let (_, p_eta) = layer_projections(blk.n_real, blk.n_pair);
        psi += &c_l * (p_eta * &eta.z);
        let full = &c_l * f;
        let per_neuron = layer
            .neurons
            .iter()
            .enumerate()
            .map(|(i, n)| full.columns(2 * i, n.order.width()).into_owned())
            .collect();
        phi.push(per_neuron);
    }
    OutputMap { phi, psi }
}

/// Converts a transformed system into network parameters.
pub fn build_dynn(tr: &TransformedLti) -> Result<DynnParams, Error> {
    let hidden = map_hidden(tr)?;
    let output = map_output(tr, &hidden);
    Ok(DynnParams {
        inputs: tr.ss.inputs(),
        outputs: tr.ss.outputs(),
        layers: hidden.into_iter().map(|(l, _, _)| l).collect(),
        output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair_closed_form() {
        let (a, b) = (-0.5, 2.0);
        let blk = Matrix::from_row_slice(2, 2, &[a, -b, b, a]);
        let input = Matrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let eta = map_eta(&blk, &input, 0).unwrap();
        assert!((eta.w[(0, 0)] - a / b).abs() < 1e-15);
        assert!((eta.q[(0, 0)] + 1.0 / b).abs() < 1e-15);
        assert!((eta.z[(0, 0)] - 1.0 / b).abs() < 1e-15);
        let (sys, _) = map_lti_second_order(&blk, &input, 0).unwrap();
        assert_eq!(sys.m[(0, 0)], 1.0);
        assert!((sys.c[(0, 0)] + 2.0 * a).abs() < 1e-15);
        assert!((sys.k[(0, 0)] - (a * a + b * b)).abs() < 1e-14);
    }

    #[test]
    fn permuted_quadrants_are_upper_triangular() {
        let a = Matrix::from_row_slice(
            4,
            4,
            &[-1.0, 2.0, 0.3, 0.4, -3.0, -1.0, 0.5, 0.6, 0.0, 0.0, -2.0, 1.5, 0.0, 0.0, -0.5, -2.0],
        );
        let p = permute_complex_block(&a).unwrap();
        for (r, c) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            assert_eq!(p[(r + 1, c)], 0.0);
        }
    }

    #[test]
    fn weight_round_trip() {
        let layer = vec![
            NeuronSpec {
                order: NeuronOrder::First,
                m: 0.0,
                c: 1.0,
                k: 2.0,
                w: vec![1.0, 0.0, 3.0, 4.0, 5.0],
            },
            NeuronSpec {
                order: NeuronOrder::First,
                m: 0.0,
                c: 1.0,
                k: 0.5,
                w: vec![2.0, 0.0, 6.0, 7.0],
            },
            NeuronSpec {
                order: NeuronOrder::Second,
                m: 1.0,
                c: 0.1,
                k: 3.0,
                w: vec![-1.0, 0.25],
            },
        ];
        let sys = n_dynn_forward(&layer, 1).unwrap();
        assert_eq!(n_dynn_inverse(&sys).unwrap(), layer);
    }
}

//! Layer-by-layer forward pass of a network.

use super::dopri::{integrate_dense, DenseTrajectory, IntegrationError, SolverConfig};
use super::input::{InputSignal, ScalarDrive, Side};
use crate::dynn::{DynnParams, HorizontalLayer, NeuronOrder, NeuronSpec};
use crate::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Vector field of a single neuron given its total weighted input `w·uᵢ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronField {
    pub order: NeuronOrder,
    pub m: f64,
    pub c: f64,
    pub k: f64,
}

impl NeuronField {
    pub fn dim(&self) -> usize {
        self.order.width()
    }

    pub fn eval(&self, drive: f64, y: &[f64], dy: &mut [f64]) {
        match self.order {
            NeuronOrder::First => dy[0] = (drive - self.k * y[0]) / self.c,
            NeuronOrder::Second => {
                dy[0] = y[1];
                dy[1] = (drive - self.c * y[1] - self.k * y[0]) / self.m;
            }
        }
    }
}

/// Validated vector field of a neuron.
pub fn neuron_dynamics(neuron: &NeuronSpec) -> Result<NeuronField, Error> {
    let field = NeuronField {
        order: neuron.order,
        m: neuron.m,
        c: neuron.c,
        k: neuron.k,
    };
    let ok = match neuron.order {
        NeuronOrder::First => neuron.c != 0.0 && neuron.c.is_finite(),
        NeuronOrder::Second => neuron.m != 0.0 && neuron.m.is_finite(),
    };
    if !ok || !neuron.k.is_finite() || neuron.w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotConvertible(
            "neuron with vanishing leading coefficient or non-finite weights".into(),
        ));
    }
    Ok(field)
}

#[derive(Debug, Clone, Default)]
pub struct ForwardConfig {
    pub solver: SolverConfig,
    /// Per-neuron solver settings keyed by `(layer, neuron)`.
    pub overrides: BTreeMap<(usize, usize), SolverConfig>,
}

impl ForwardConfig {
    pub fn new(solver: SolverConfig) -> Self {
        Self {
            solver,
            overrides: BTreeMap::new(),
        }
    }

    fn for_neuron(&self, layer: usize, neuron: usize) -> &SolverConfig {
        self.overrides.get(&(layer, neuron)).unwrap_or(&self.solver)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronNfe {
    pub layer: usize,
    pub neuron: usize,
    pub order: NeuronOrder,
    pub nfe: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NfeReport {
    pub neurons: Vec<NeuronNfe>,
}

impl NfeReport {
    pub fn per_layer(&self) -> Vec<usize> {
        let layers = self.neurons.iter().map(|n| n.layer + 1).max().unwrap_or(0);
        let mut out = vec![0; layers];
        for n in &self.neurons {
            out[n.layer] += n.nfe;
        }
        out
    }

    pub fn total(&self) -> usize {
        self.neurons.iter().map(|n| n.nfe).sum()
    }

    pub fn max(&self) -> usize {
        self.neurons.iter().map(|n| n.nfe).max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.neurons.iter().map(|n| n.nfe).min().unwrap_or(0)
    }
}

/// Result of a forward pass: neuron trajectories plus the output read-out.
#[derive(Debug, Clone)]
pub struct DynnSimulation {
    pub params: DynnParams,
    pub input: InputSignal,
    pub span: (f64, f64),
    pub trajectories: Vec<Vec<DenseTrajectory>>,
    pub report: NfeReport,
    pub warnings: Vec<String>,
}

impl DynnSimulation {
    /// `y(t) = Σ φᵢ yᵢ(t) + Ψ u(t)`.
    pub fn output(&self, t: f64) -> Vec<f64> {
        let d_o = self.params.outputs;
        let mut u = vec![0.0; self.params.inputs];
        self.input.value(t, &mut u);
        let psi = &self.params.output.psi;
        let mut y: Vec<f64> = (0..d_o).map(|r| (0..u.len()).map(|c| psi[(r, c)] * u[c]).sum()).collect();
        let mut buf = [0.0; 2];
        for (layer_phi, trajs) in self.params.output.phi.iter().zip(&self.trajectories) {
            for (phi, traj) in layer_phi.iter().zip(trajs) {
                let mut hint = 0;
                let w = traj.dim();
                traj.eval_into(t, &mut hint, &mut buf[..w]);
                for (r, yr) in y.iter_mut().enumerate() {
                    for (c, b) in buf[..w].iter().enumerate() {
                        *yr += phi[(r, c)] * b;
                    }
                }
            }
        }
        y
    }

    pub fn outputs_on(&self, times: &[f64]) -> Vec<Vec<f64>> {
        times.par_iter().map(|&t| self.output(t)).collect()
    }
}

/// Compiled right-hand side of one neuron.
struct Wired<'a> {
    field: NeuronField,
    drive: ScalarDrive,
    tail: Vec<(&'a DenseTrajectory, f64, f64)>,
}

fn wire<'a>(
    layer: &HorizontalLayer,
    i: usize,
    inputs: usize,
    input: &InputSignal,
    later: &'a [DenseTrajectory],
) -> Result<Wired<'a>, Error> {
    let neuron = &layer.neurons[i];
    let field = neuron_dynamics(neuron)?;
    let expected = crate::dynn::weight_len(&layer.neurons, i, inputs);
    if neuron.w.len() != expected {
        return Err(Error::Dimension(format!(
            "neuron {i} carries {} weights, expected {expected}",
            neuron.w.len()
        )));
    }
    let drive = input.project(&neuron.w[..inputs], &neuron.w[inputs..2 * inputs]);
    let mut tail = Vec::new();
    let mut pos = 2 * inputs;
    for (j, nj) in layer.neurons.iter().enumerate().skip(i + 1) {
        let w_xi = neuron.w[pos];
        let w_dxi = if nj.order == NeuronOrder::Second { neuron.w[pos + 1] } else { 0.0 };
        pos += nj.order.width();
        if w_xi != 0.0 || w_dxi != 0.0 {
            tail.push((&later[j - i - 1], w_xi, w_dxi));
        }
    }
    Ok(Wired { field, drive, tail })
}

fn integrate_neuron(
    wired: &Wired<'_>,
    y0: &[f64],
    span: (f64, f64),
    breakpoints: &[f64],
    cfg: &SolverConfig,
) -> Result<DenseTrajectory, IntegrationError> {
    let mut hints = vec![0usize; wired.tail.len()];
    let mut scratch = Vec::new();
    let mut buf = [0.0; 2];
    let rhs = |t: f64, side: Side, y: &[f64], dy: &mut [f64]| {
        let mut drive = wired.drive.eval(t, side, &mut scratch);
        for ((traj, w_xi, w_dxi), hint) in wired.tail.iter().zip(hints.iter_mut()) {
            let w = traj.dim();
            traj.eval_into(t, hint, &mut buf[..w]);
            drive += w_xi * buf[0];
            if w == 2 {
                drive += w_dxi * buf[1];
            }
        }
        wired.field.eval(drive, y, dy);
    };
    integrate_dense(rhs, y0, span, breakpoints, cfg)
}

fn tag(layer: usize, neuron: usize) -> impl Fn(IntegrationError) -> Error {
    move |e| {
        Error::Integration(IntegrationError::Neuron {
            layer,
            neuron,
            source: Box::new(e),
        })
    }
}

/// State right after `t0` of a neuron that rests with zero input before
/// `t0`: the step to `u(t0)` makes `v·u̇` an impulse, which shifts the
/// highest-order state by `v·u(t0)` over the leading coefficient.
fn switch_on_state(neuron: &NeuronSpec, inputs: usize, u0: &[f64]) -> Vec<f64> {
    let kick: f64 = neuron.w[inputs..2 * inputs].iter().zip(u0).map(|(v, u)| v * u).sum();
    match neuron.order {
        NeuronOrder::First => vec![kick / neuron.c],
        NeuronOrder::Second => vec![0.0, kick / neuron.m],
    }
}

/// Solves one layer over the consecutive windows in `grid`; every neuron
/// restarts at each window boundary from its previous end state.
fn solve_layer(
    params: &DynnParams,
    l: usize,
    input: &InputSignal,
    grid: &[f64],
    cfg: &ForwardConfig,
) -> Result<Vec<DenseTrajectory>, Error> {
    let layer = &params.layers[l];
    let n = layer.neurons.len();
    let t0 = grid[0];
    let mut u0 = vec![0.0; params.inputs];
    input.value(t0, &mut u0);
    let mut trajs: Vec<DenseTrajectory> = layer
        .neurons
        .iter()
        .map(|s| DenseTrajectory::at_rest(t0, &switch_on_state(s, params.inputs, &u0)))
        .collect();
    for w in grid.windows(2) {
        let span = (w[0], w[1]);
        let bps = input.breakpoints(span.0, span.1);
        for i in (0..n).rev() {
            let (head, later) = trajs.split_at_mut(i + 1);
            let wired = wire(layer, i, params.inputs, input, later)?;
            let y0 = head[i].final_state().to_vec();
            let piece = integrate_neuron(&wired, &y0, span, &bps, cfg.for_neuron(l, i)).map_err(tag(l, i))?;
            head[i].append(piece);
        }
    }
    Ok(trajs)
}

fn run(params: &DynnParams, input: &InputSignal, grid: Vec<f64>, cfg: &ForwardConfig) -> Result<DynnSimulation, Error> {
    if input.dim() != params.inputs {
        return Err(Error::Dimension(format!(
            "input has {} channels, network expects {}",
            input.dim(),
            params.inputs
        )));
    }
    for (l, layer) in params.layers.iter().enumerate() {
        for (i, neuron) in layer.neurons.iter().enumerate() {
            let expected = crate::dynn::weight_len(&layer.neurons, i, params.inputs);
            if neuron.w.len() != expected {
                return Err(Error::Dimension(format!(
                    "neuron {i} of layer {l} carries {} weights, expected {expected}",
                    neuron.w.len()
                )));
            }
            neuron_dynamics(neuron)?;
        }
    }
    let trajectories = (0..params.layers.len())
        .into_par_iter()
        .map(|l| solve_layer(params, l, input, &grid, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = NfeReport::default();
    for (l, (layer, trajs)) in params.layers.iter().zip(&trajectories).enumerate() {
        for (i, (neuron, tr)) in layer.neurons.iter().zip(trajs).enumerate() {
            report.neurons.push(NeuronNfe {
                layer: l,
                neuron: i,
                order: neuron.order,
                nfe: tr.nfe,
                accepted: tr.accepted,
                rejected: tr.rejected,
            });
        }
    }
    let mut warnings = Vec::new();
    let uses_derivative = params
        .layers
        .iter()
        .flat_map(|l| &l.neurons)
        .any(|s| s.w[params.inputs..2 * params.inputs].iter().any(|&x| x != 0.0));
    if input.is_piecewise_constant() && uses_derivative {
        warnings.push(
            "piecewise-constant input: derivative impulses at the jumps are not applied".to_string(),
        );
    }
    Ok(DynnSimulation {
        params: params.clone(),
        input: input.clone(),
        span: (grid[0], *grid.last().unwrap()),
        trajectories,
        report,
        warnings,
    })
}

/// Solves every neuron over the whole span in one adaptive integration.
pub fn forward_pass_whole(
    params: &DynnParams,
    input: &InputSignal,
    span: (f64, f64),
    cfg: &ForwardConfig,
) -> Result<DynnSimulation, Error> {
    if !(span.1 > span.0) {
        return Err(Error::InvalidArgument(format!("empty span {span:?}")));
    }
    run(params, input, vec![span.0, span.1], cfg)
}

/// Solves the network over consecutive windows of length `dt`.
pub fn forward_pass_stepped(
    params: &DynnParams,
    input: &InputSignal,
    span: (f64, f64),
    dt: f64,
    cfg: &ForwardConfig,
) -> Result<DynnSimulation, Error> {
    if !(span.1 > span.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid span {span:?} or step {dt}")));
    }
    let len = span.1 - span.0;
    let count = ((len / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..count).map(|k| span.0 + k as f64 * dt).collect();
    grid.push(span.1);
    run(params, input, grid, cfg)
}

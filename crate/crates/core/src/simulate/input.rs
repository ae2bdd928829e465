//! Input signals and their derivatives.

use crate::Error;
use std::sync::Arc;

/// Which one-sided limit to take when a piecewise-smooth quantity is
/// evaluated exactly at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    PiecewiseLinear,
    PiecewiseConstant,
}

type VecFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Samples on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub times: Arc<Vec<f64>>,
    /// `values[k]` is the input vector at `times[k]`.
    pub values: Arc<Vec<Vec<f64>>>,
    pub mode: Interpolation,
}

#[derive(Clone)]
pub struct Analytic {
    pub dim: usize,
    pub value: VecFn,
    pub derivative: VecFn,
    pub breakpoints: Vec<f64>,
}

impl std::fmt::Debug for Analytic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analytic").field("dim", &self.dim).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum InputSignal {
    Sampled(Sampled),
    Analytic(Analytic),
}

/// Interval index containing `t` for a grid, honouring `side` at knots.
/// Returns `None` outside the grid.
pub(crate) fn locate(times: &[f64], t: f64, side: Side) -> Option<usize> {
    let n = times.len();
    if n < 2 || t < times[0] || t > times[n - 1] {
        return None;
    }
    let mut idx = times.partition_point(|&x| x <= t).saturating_sub(1);
    if side == Side::Left && idx > 0 && times[idx] == t {
        idx -= 1;
    }
    Some(idx.min(n - 2))
}

/// Builds a sampled input signal.
pub fn derive_input_signal(times: Vec<f64>, values: Vec<Vec<f64>>, mode: Interpolation) -> Result<InputSignal, Error> {
    if times.is_empty() || times.len() != values.len() {
        return Err(Error::InvalidArgument("one sample vector per grid time expected".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sample grid must be strictly increasing".into()));
    }
    let dim = values[0].len();
    if values.iter().any(|v| v.len() != dim) {
        return Err(Error::InvalidArgument("sample vectors differ in length".into()));
    }
    if times.iter().chain(values.iter().flatten()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    Ok(InputSignal::Sampled(Sampled {
        times: Arc::new(times),
        values: Arc::new(values),
        mode,
    }))
}

impl InputSignal {
    pub fn analytic(
        dim: usize,
        value: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
        derivative: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        InputSignal::Analytic(Analytic {
            dim,
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            breakpoints: Vec::new(),
        })
    }

    /// Identically zero input of the given width.
    pub fn zero(dim: usize) -> Self {
        Self::analytic(dim, |_, out| out.fill(0.0), |_, out| out.fill(0.0))
    }

    pub fn dim(&self) -> usize {
        match self {
            InputSignal::Sampled(s) => s.values[0].len(),
            InputSignal::Analytic(a) => a.dim,
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self, InputSignal::Sampled(s) if s.mode == Interpolation::PiecewiseConstant)
    }

    pub fn value(&self, t: f64, out: &mut [f64]) {
        self.value_sided(t, Side::Right, out)
    }

    pub fn value_sided(&self, t: f64, side: Side, out: &mut [f64]) {
        match self {
            InputSignal::Analytic(a) => (a.value)(t, out),
            InputSignal::Sampled(s) => {
                let times = &s.times;
                let n = times.len();
                let Some(k) = locate(times, t, side) else {
                    let edge = if n == 1 || t <= times[0] { 0 } else { n - 1 };
                    out.copy_from_slice(&s.values[edge]);
                    return;
                };
                match s.mode {
                    Interpolation::PiecewiseConstant => {
                        let idx = if t == times[n - 1] && side == Side::Right { n - 1 } else { k };
                        out.copy_from_slice(&s.values[idx]);
                    }
                    Interpolation::PiecewiseLinear => {
                        let th = (t - times[k]) / (times[k + 1] - times[k]);
                        for (o, (a, b)) in out.iter_mut().zip(s.values[k].iter().zip(&s.values[k + 1])) {
                            *o = a + th * (b - a);
                        }
                    }
                }
            }
        }
    }

    /// `u̇(t)`; right-continuous at knots unless `side` is `Left`.
    pub fn derivative(&self, t: f64, side: Side, out: &mut [f64]) {
        match self {
            InputSignal::Analytic(a) => (a.derivative)(t, out),
            InputSignal::Sampled(s) => match (s.mode, locate(&s.times, t, side)) {
                (Interpolation::PiecewiseLinear, Some(k)) => {
                    let h = s.times[k + 1] - s.times[k];
                    for (o, (a, b)) in out.iter_mut().zip(s.values[k].iter().zip(&s.values[k + 1])) {
                        *o = (b - a) / h;
                    }
                }
                _ => out.fill(0.0),
            },
        }
    }

    /// Times inside `(t0, tf)` where `u̇` may jump. Knots across which the
    /// slope does not change are omitted.
    pub fn breakpoints(&self, t0: f64, tf: f64) -> Vec<f64> {
        let inside = |t: f64| t > t0 && t < tf;
        match self {
            InputSignal::Analytic(a) => a.breakpoints.iter().copied().filter(|&t| inside(t)).collect(),
            InputSignal::Sampled(s) => {
                let times = &s.times;
                let vals = &s.values;
                let mut out = Vec::new();
                for k in 1..times.len().saturating_sub(1) {
                    if !inside(times[k]) {
                        continue;
                    }
                    let changes = match s.mode {
                        Interpolation::PiecewiseConstant => vals[k] != vals[k - 1],
                        Interpolation::PiecewiseLinear => {
                            let h0 = times[k] - times[k - 1];
                            let h1 = times[k + 1] - times[k];
                            (0..vals[k].len()).any(|j| {
                                (vals[k][j] - vals[k - 1][j]) / h0 != (vals[k + 1][j] - vals[k][j]) / h1
                            })
                        }
                    };
                    if changes {
                        out.push(times[k]);
                    }
                }
                out
            }
        }
    }

    /// Scalar drive `e·u(t) + v·u̇(t)` for one neuron.
    pub fn project(&self, e: &[f64], v: &[f64]) -> ScalarDrive {
        match self {
            InputSignal::Sampled(s) => {
                let dot = |w: &[f64]| -> Vec<f64> {
                    s.values.iter().map(|u| u.iter().zip(w).map(|(a, b)| a * b).sum()).collect()
                };
                let has_v = v.iter().any(|&x| x != 0.0);
                ScalarDrive::Sampled {
                    times: s.times.clone(),
                    e: dot(e),
                    v: if has_v { Some(dot(v)) } else { None },
                    mode: s.mode,
                }
            }
            InputSignal::Analytic(_) => ScalarDrive::Analytic {
                signal: self.clone(),
                e: e.to_vec(),
                v: v.to_vec(),
            },
        }
    }
}

/// Projection of an input signal onto a neuron's input weights.
#[derive(Debug, Clone)]
pub enum ScalarDrive {
    Sampled {
        times: Arc<Vec<f64>>,
        e: Vec<f64>,
        v: Option<Vec<f64>>,
        mode: Interpolation,
    },
    Analytic {
        signal: InputSignal,
        e: Vec<f64>,
        v: Vec<f64>,
    },
}

impl ScalarDrive {
    pub fn eval(&self, t: f64, side: Side, scratch: &mut Vec<f64>) -> f64 {
        match self {
            ScalarDrive::Sampled { times, e, v, mode } => {
                let n = times.len();
                let Some(k) = locate(times, t, side) else {
                    return if n == 1 || t <= times[0] { e[0] } else { e[n - 1] };
                };
                match mode {
                    Interpolation::PiecewiseConstant => {
                        let idx = if t == times[n - 1] && side == Side::Right { n - 1 } else { k };
                        e[idx]
                    }
                    Interpolation::PiecewiseLinear => {
                        let h = times[k + 1] - times[k];
                        let th = (t - times[k]) / h;
                        let mut out = e[k] + th * (e[k + 1] - e[k]);
                        if let Some(v) = v {
                            out += (v[k + 1] - v[k]) / h;
                        }
                        out
                    }
                }
            }
            ScalarDrive::Analytic { signal, e, v } => {
                scratch.resize(e.len(), 0.0);
                signal.value_sided(t, side, scratch);
                let mut out: f64 = scratch.iter().zip(e).map(|(a, b)| a * b).sum();
                signal.derivative(t, side, scratch);
                out += scratch.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
                out
            }
        }
    }
}

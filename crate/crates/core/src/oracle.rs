//! Reference simulations of the original LTI system.

use crate::linalg::{matrix_exponential, Matrix};
use crate::simulate::{integrate_dense, DenseTrajectory, InputSignal, Interpolation, Side, SolverConfig};
use crate::{Error, StateSpace};
use nalgebra::DVector;

#[derive(Debug, Clone, PartialEq)]
pub struct LsimResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

/// Discrete propagators for one step length.
struct Propagator {
    h: f64,
    phi: Matrix,
    /// Weight of the sample at the left end of the interval.
    left: Matrix,
    /// Weight of the sample at the right end.
    right: Matrix,
}

fn propagator(ss: &StateSpace, h: f64, mode: Interpolation) -> Result<Propagator, Error> {
    let n = ss.states();
    let m = ss.inputs();
    match mode {
        Interpolation::PiecewiseLinear => {
            let mut g = Matrix::zeros(n + 2 * m, n + 2 * m);
            g.view_mut((0, 0), (n, n)).copy_from(&ss.a);
            g.view_mut((0, n), (n, m)).copy_from(&ss.b);
            for i in 0..m {
                g[(n + i, n + m + i)] = 1.0;
            }
            let e = matrix_exponential(&g, h)?;
            let phi = e.view((0, 0), (n, n)).into_owned();
            let f1 = e.view((0, n), (n, m)).into_owned();
            let f2 = e.view((0, n + m), (n, m)).into_owned() / h;
            Ok(Propagator {
                h,
                phi,
                left: &f1 - &f2,
                right: f2,
            })
        }
        Interpolation::PiecewiseConstant => {
            let mut g = Matrix::zeros(n + m, n + m);
            g.view_mut((0, 0), (n, n)).copy_from(&ss.a);
            g.view_mut((0, n), (n, m)).copy_from(&ss.b);
            let e = matrix_exponential(&g, h)?;
            Ok(Propagator {
                h,
                phi: e.view((0, 0), (n, n)).into_owned(),
                left: e.view((0, n), (n, m)).into_owned(),
                right: Matrix::zeros(n, m),
            })
        }
    }
}

fn output(ss: &StateSpace, x: &DVector<f64>, u: &DVector<f64>) -> Vec<f64> {
    (&ss.c * x + &ss.d * u).iter().copied().collect()
}

/// Exact response to a piecewise-linear or piecewise-constant input from
/// `x0` (zero when omitted), sampled on the input grid.
pub fn lsim_exact(
    ss: &StateSpace,
    times: &[f64],
    samples: &[Vec<f64>],
    interpolation: Interpolation,
    x0: Option<&[f64]>,
) -> Result<LsimResult, Error> {
    let n = ss.states();
    let m = ss.inputs();
    if times.is_empty() || times.len() != samples.len() {
        return Err(Error::InvalidArgument("one input sample per grid time expected".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    if samples.iter().any(|u| u.len() != m) {
        return Err(Error::Dimension(format!("input samples must have {m} entries")));
    }
    let mut x = match x0 {
        Some(v) if v.len() != n => return Err(Error::Dimension(format!("initial state must have {n} entries"))),
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(n),
    };
    let us: Vec<DVector<f64>> = samples.iter().map(|u| DVector::from_column_slice(u)).collect();
    let mut cache: Vec<Propagator> = Vec::new();
    let mut states = Vec::with_capacity(times.len());
    let mut outputs = Vec::with_capacity(times.len());
    states.push(x.iter().copied().collect());
    outputs.push(output(ss, &x, &us[0]));
    for k in 0..times.len() - 1 {
        let h = times[k + 1] - times[k];
        let idx = match cache.iter().position(|p| (p.h - h).abs() <= 1e-14) {
            Some(i) => i,
            None => {
                cache.push(propagator(ss, h, interpolation)?);
                cache.len() - 1
            }
        };
        let p = &cache[idx];
        x = &p.phi * &x + &p.left * &us[k] + &p.right * &us[k + 1];
        states.push(x.iter().copied().collect());
        outputs.push(output(ss, &x, &us[k + 1]));
    }
    Ok(LsimResult {
        times: times.to_vec(),
        states,
        outputs,
    })
}

/// Adaptive integration of `ẋ = A x + B u` as one coupled system.
pub fn reference_coupled_solve(
    ss: &StateSpace,
    input: &InputSignal,
    span: (f64, f64),
    cfg: &SolverConfig,
) -> Result<DenseTrajectory, Error> {
    if input.dim() != ss.inputs() {
        return Err(Error::Dimension(format!(
            "input has {} channels, model expects {}",
            input.dim(),
            ss.inputs()
        )));
    }
    let n = ss.states();
    let mut u = vec![0.0; ss.inputs()];
    let rhs = |t: f64, side: Side, x: &[f64], dx: &mut [f64]| {
        input.value_sided(t, side, &mut u);
        for (i, d) in dx.iter_mut().enumerate() {
            let mut s = 0.0;
            for j in 0..n {
                s += ss.a[(i, j)] * x[j];
            }
            for (j, uj) in u.iter().enumerate() {
                s += ss.b[(i, j)] * uj;
            }
            *d = s;
        }
    };
    let bps = input.breakpoints(span.0, span.1);
    Ok(integrate_dense(rhs, &vec![0.0; n], span, &bps, cfg)?)
}

/// `C x(t) + D u(t)` along a dense state trajectory.
pub fn trajectory_outputs(ss: &StateSpace, traj: &DenseTrajectory, input: &InputSignal, times: &[f64]) -> Vec<Vec<f64>> {
    let mut hint = 0;
    let mut x = vec![0.0; ss.states()];
    let mut u = vec![0.0; ss.inputs()];
    times
        .iter()
        .map(|&t| {
            traj.eval_into(t, &mut hint, &mut x);
            input.value(t, &mut u);
            output(ss, &DVector::from_column_slice(&x), &DVector::from_column_slice(&u))
        })
        .collect()
}

/// Sampled input values at `times`, for feeding [`lsim_exact`] from a signal.
pub fn sample_input(input: &InputSignal, times: &[f64]) -> Vec<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            let mut u = vec![0.0; input.dim()];
            input.value(t, &mut u);
            u
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> StateSpace {
        let one = Matrix::from_element(1, 1, 1.0);
        StateSpace::new(-one.clone(), one.clone(), one, Matrix::zeros(1, 1)).unwrap()
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let u = vec![vec![0.0]; 11];
        let r = lsim_exact(&scalar(), &times, &u, Interpolation::PiecewiseLinear, None).unwrap();
        assert!(r.outputs.iter().all(|y| y[0] == 0.0));
    }

    #[test]
    fn step_response_of_first_order_lag() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let u = vec![vec![1.0]; 11];
        for mode in [Interpolation::PiecewiseLinear, Interpolation::PiecewiseConstant] {
            let r = lsim_exact(&scalar(), &times, &u, mode, None).unwrap();
            assert!((r.outputs[10][0] - 0.6321205588285577).abs() < 1e-13);
        }
    }

    #[test]
    fn ramp_response_closed_form() {
        // x' = -x + t  →  x = t - 1 + e^{-t}
        let times: Vec<f64> = vec![0.0, 0.3, 0.5, 1.2, 2.0];
        let u: Vec<Vec<f64>> = times.iter().map(|&t| vec![t]).collect();
        let r = lsim_exact(&scalar(), &times, &u, Interpolation::PiecewiseLinear, None).unwrap();
        for (t, y) in times.iter().zip(&r.outputs) {
            assert!((y[0] - (t - 1.0 + (-t).exp())).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_scaling_step_response() {
        // x(t) = A⁻¹(e^{At} − I) e₁ with A = [[-1,-2],[2,-1]]
        let a = Matrix::from_row_slice(2, 2, &[-1.0, -2.0, 2.0, -1.0]);
        let ss = StateSpace::new(a, Matrix::identity(2, 2), Matrix::identity(2, 2), Matrix::zeros(2, 2)).unwrap();
        let times = vec![0.0, 0.5, 1.0];
        let u = vec![vec![1.0, 0.0]; 3];
        let r = lsim_exact(&ss, &times, &u, Interpolation::PiecewiseLinear, None).unwrap();
        let t: f64 = 1.0;
        let (ec, es) = ((-t).exp() * (2.0 * t).cos(), (-t).exp() * (2.0 * t).sin());
        // (e^{At} − I)e₁ = (ec − 1, es); A⁻¹ = [[-1, 2], [-2, -1]] / 5
        let v = [ec - 1.0, es];
        let x = [(-v[0] + 2.0 * v[1]) / 5.0, (-2.0 * v[0] - v[1]) / 5.0];
        assert!((r.outputs[2][0] - x[0]).abs() < 1e-13);
        assert!((r.outputs[2][1] - x[1]).abs() < 1e-13);
    }

    #[test]
    fn coupled_solve_matches_exact() {
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let vals: Vec<Vec<f64>> = times.iter().map(|&t| vec![(t / 2.0).sin()]).collect();
        let ss = scalar();
        let exact = lsim_exact(&ss, &times, &vals, Interpolation::PiecewiseLinear, None).unwrap();
        let u = crate::simulate::derive_input_signal(times.clone(), vals, Interpolation::PiecewiseLinear).unwrap();
        let tr = reference_coupled_solve(&ss, &u, (0.0, 5.0), &SolverConfig::default()).unwrap();
        let ys = trajectory_outputs(&ss, &tr, &u, &times);
        for (a, b) in ys.iter().zip(&exact.outputs) {
            assert!((a[0] - b[0]).abs() < 1e-8);
        }
    }
}

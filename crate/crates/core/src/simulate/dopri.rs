//! Dormand–Prince 5(4) with PI step-size control and dense output.

use super::input::Side;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrationError {
    #[error("step size underflow at t = {t} (h = {h:e}); problem too stiff or tolerance unreachable")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({max_steps}) reached at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("layer {layer}, neuron {neuron}: {source}")]
    Neuron {
        layer: usize,
        neuron: usize,
        #[source]
        source: Box<IntegrationError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Extra times the controller must land on, merged with input knots.
    pub breakpoints: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            max_step: None,
            max_steps: 1_000_000,
            breakpoints: Vec::new(),
        }
    }
}

impl SolverConfig {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Piecewise-polynomial solution. Segment `s` spans `knots[s]..knots[s+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrajectory {
    dim: usize,
    knots: Vec<f64>,
    states: Vec<f64>,
    coeffs: Vec<f64>,
    pub nfe: usize,
    pub accepted: usize,
    pub rejected: usize,
}

impl DenseTrajectory {
    fn start(dim: usize, t0: f64, y0: &[f64]) -> Self {
        Self {
            dim,
            knots: vec![t0],
            states: y0.to_vec(),
            coeffs: Vec::new(),
            nfe: 0,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Single-knot trajectory holding `y0` at `t0`.
    pub fn at_rest(t0: f64, y0: &[f64]) -> Self {
        Self::start(y0.len(), t0, y0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn span(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().expect("non-empty"))
    }

    /// Accepted-step endpoints.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn state_at_knot(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state_at_knot(self.knots.len() - 1)
    }

    fn segment(&self, t: f64, hint: &mut usize) -> usize {
        let nseg = self.knots.len() - 1;
        let h = *hint;
        if h < nseg && self.knots[h] <= t && t <= self.knots[h + 1] {
            return h;
        }
        let s = self.knots.partition_point(|&k| k <= t).saturating_sub(1).min(nseg - 1);
        *hint = s;
        s
    }

    /// Evaluates the interpolant; `t` is clamped into the span.
    pub fn eval_into(&self, t: f64, hint: &mut usize, out: &mut [f64]) {
        let d = self.dim;
        if self.knots.len() == 1 {
            out.copy_from_slice(&self.states[..d]);
            return;
        }
        let (t0, tf) = self.span();
        let t = t.clamp(t0, tf);
        let s = self.segment(t, hint);
        let (a, b) = (self.knots[s], self.knots[s + 1]);
        if t == a {
            out.copy_from_slice(self.state_at_knot(s));
            return;
        }
        if t == b {
            out.copy_from_slice(self.state_at_knot(s + 1));
            return;
        }
        let th = (t - a) / (b - a);
        let th1 = 1.0 - th;
        let y0 = self.state_at_knot(s);
        let c = &self.coeffs[4 * d * s..4 * d * (s + 1)];
        for i in 0..d {
            let (r2, r3, r4, r5) = (c[i], c[d + i], c[2 * d + i], c[3 * d + i]);
            out[i] = y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut hint = 0;
        self.eval_into(t, &mut hint, &mut out);
        out
    }

    /// Appends a trajectory that starts where this one ends.
    pub fn append(&mut self, other: DenseTrajectory) {
        debug_assert_eq!(other.dim, self.dim);
        debug_assert_eq!(other.knots[0], *self.knots.last().unwrap());
        self.knots.extend_from_slice(&other.knots[1..]);
        self.states.extend_from_slice(&other.states[self.dim..]);
        self.coeffs.extend_from_slice(&other.coeffs);
        self.nfe += other.nfe;
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }
}

fn rms_norm(v: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = v.len().max(1) as f64;
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sk = atol + rtol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

/// Integrates `y' = f(t, y)` over `span`, landing exactly on every
/// breakpoint. At a breakpoint the vector field is evaluated with the
/// one-sided limit belonging to the step being taken.
pub fn integrate_dense<F>(
    mut f: F,
    y0: &[f64],
    span: (f64, f64),
    breakpoints: &[f64],
    cfg: &SolverConfig,
) -> Result<DenseTrajectory, IntegrationError>
where
    F: FnMut(f64, Side, &[f64], &mut [f64]),
{
    let (t0, tf) = span;
    if !(cfg.rtol > 0.0 && cfg.atol > 0.0) {
        return Err(IntegrationError::Config("tolerances must be positive".into()));
    }
    if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
        return Err(IntegrationError::Config(format!("invalid span [{t0}, {tf}]")));
    }
    if y0.iter().any(|x| !x.is_finite()) {
        return Err(IntegrationError::NonFinite { t: t0 });
    }
    let n = y0.len();
    let mut traj = DenseTrajectory::start(n, t0, y0);
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .chain(&cfg.breakpoints)
        .copied()
        .filter(|&b| b > t0 && b < tf)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops.push(tf);

    let length = tf - t0;
    let h_max = cfg.max_step.unwrap_or(length).min(length);
    let h_min = 1e-14 * length;
    let (rtol, atol) = (cfg.rtol, cfg.atol);

    let mut y = y0.to_vec();
    let mut ynew = vec![0.0; n];
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut t = t0;
    let mut nfe = 0usize;

    f(t, Side::Right, &y, &mut k[0]);
    nfe += 1;
    let mut h = {
        // starting step after Hairer & Wanner
        let d0 = rms_norm(&y, &y, &y, rtol, atol);
        let d1 = rms_norm(&k[0], &y, &y, rtol, atol);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(h_max).min(stops[0] - t0);
        for i in 0..n {
            tmp[i] = y[i] + h0 * k[0][i];
        }
        f(t0 + h0, Side::Right, &tmp, &mut k[1]);
        nfe += 1;
        for i in 0..n {
            err[i] = k[1][i] - k[0][i];
        }
        let d2 = rms_norm(&err, &y, &y, rtol, atol) / h0;
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dmax).powf(0.2)
        };
        (100.0 * h0).min(h1).min(h_max)
    };

    let beta = 0.04;
    let expo1 = 0.2 - 0.75 * beta;
    let safe = 0.9;
    let (fac_min, fac_max) = (0.2, 10.0);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut stop_idx = 0;
    let mut steps = 0usize;

    while t < tf {
        let stop = stops[stop_idx];
        let mut landing = false;
        if t + h >= stop || (stop - t - h) < 1e-12 * (stop - t) {
            h = stop - t;
            landing = true;
        }
        if h < h_min {
            return Err(IntegrationError::StepUnderflow { t, h });
        }
        steps += 1;
        if steps > cfg.max_steps {
            return Err(IntegrationError::TooManySteps {
                t,
                max_steps: cfg.max_steps,
            });
        }
        let t_new = if landing { stop } else { t + h };
        let end_side = if landing { Side::Left } else { Side::Right };

        let (k1, rest) = k.split_first_mut().unwrap();
        let (k2, rest) = rest.split_first_mut().unwrap();
        let (k3, rest) = rest.split_first_mut().unwrap();
        let (k4, rest) = rest.split_first_mut().unwrap();
        let (k5, rest) = rest.split_first_mut().unwrap();
        let (k6, rest) = rest.split_first_mut().unwrap();
        let k7 = &mut rest[0];

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, Side::Right, &tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, Side::Right, &tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, Side::Right, &tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, Side::Right, &tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t_new, end_side, &tmp, k6);
        for i in 0..n {
            ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t_new, end_side, &ynew, k7);
        nfe += 6;
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = rms_norm(&err, &y, &ynew, rtol, atol);
        if !e.is_finite() || ynew.iter().any(|x| !x.is_finite()) {
            if h * 0.1 < h_min {
                return Err(IntegrationError::NonFinite { t });
            }
            h *= 0.1;
            last_rejected = true;
            traj.rejected += 1;
            continue;
        }
        let fac11 = e.powf(expo1);
        if e <= 1.0 {
            let mut fac = fac11 / err_old.powf(beta);
            fac = (fac / safe).clamp(1.0 / fac_max, 1.0 / fac_min);
            let mut h_next = (h / fac).min(h_max);
            if last_rejected {
                h_next = h_next.min(h);
            }
            err_old = e.max(1e-4);
            last_rejected = false;

            traj.knots.push(t_new);
            traj.states.extend_from_slice(&ynew);
            let base = traj.coeffs.len();
            traj.coeffs.resize(base + 4 * n, 0.0);
            let c = &mut traj.coeffs[base..];
            for i in 0..n {
                let r2 = ynew[i] - y[i];
                let r3 = h * k1[i] - r2;
                let r4 = r2 - h * k7[i] - r3;
                let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                c[i] = r2;
                c[n + i] = r3;
                c[2 * n + i] = r4;
                c[3 * n + i] = r5;
            }
            traj.accepted += 1;
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            if landing {
                stop_idx += 1;
                if t < tf {
                    f(t, Side::Right, &y, k1);
                    nfe += 1;
                }
            } else {
                k1.copy_from_slice(k7);
            }
            h = h_next;
        } else {
            h /= (fac11 / safe).min(1.0 / fac_min);
            last_rejected = true;
            traj.rejected += 1;
        }
    }
    traj.nfe = nfe;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_solution() {
        let tr = integrate_dense(|_, _, _, dy| dy[0] = 0.0, &[1.0], (0.0, 3.0), &[], &SolverConfig::default()).unwrap();
        for t in [0.0, 0.7, 3.0] {
            assert_eq!(tr.eval(t)[0], 1.0);
        }
        assert!(tr.accepted <= 10);
        assert_eq!(tr.rejected, 0);
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate_dense(|_, _, y, dy| dy[0] = -2.0 * y[0], &[1.0], (0.0, 1.0), &[], &SolverConfig::default()).unwrap();
        assert!((tr.eval(1.0)[0] - (-2.0_f64).exp()).abs() < 1e-8);
        assert!((tr.eval(0.37)[0] - (-0.74_f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator() {
        let tr = integrate_dense(
            |_, _, y, dy| {
                dy[0] = y[1];
                dy[1] = -4.0 * y[0];
            },
            &[1.0, 0.0],
            (0.0, 5.0),
            &[],
            &SolverConfig::default(),
        )
        .unwrap();
        let y = tr.eval(5.0);
        assert!((y[0] - 10.0_f64.cos()).abs() < 1e-8);
        assert!((y[1] + 2.0 * 10.0_f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn lands_on_breakpoints() {
        let bps = [0.25, 0.5, 1.7];
        let tr = integrate_dense(|_, _, y, dy| dy[0] = -y[0], &[1.0], (0.0, 2.0), &bps, &SolverConfig::default()).unwrap();
        for b in bps {
            assert!(tr.knots().contains(&b));
        }
        assert_eq!(*tr.knots().last().unwrap(), 2.0);
    }

    #[test]
    fn one_sided_evaluation_at_a_jump() {
        // y' = 1 on [0,1), 0 afterwards
        let tr = integrate_dense(
            |t, side, _, dy| {
                let on = t < 1.0 || (t == 1.0 && side == Side::Left);
                dy[0] = if on { 1.0 } else { 0.0 };
            },
            &[0.0],
            (0.0, 2.0),
            &[1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!((tr.eval(1.0)[0] - 1.0).abs() < 1e-13);
        assert!((tr.eval(2.0)[0] - 1.0).abs() < 1e-13);
        assert!((tr.eval(0.5)[0] - 0.5).abs() < 1e-13);
    }
}

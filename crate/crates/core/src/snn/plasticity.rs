//! Synapse storage and the plasticity rules acting on it.
//!
//! Weights are stored row-major by input (`j * n_exc + k`) so that delivering
//! an input spike reads one contiguous row. The resting weight of a synapse is
//! `w_raw * w_scale[k]`; column normalization only touches `w_scale`, which
//! makes per-step normalization O(n_exc). The short-term component is
//! `f_raw * f_scale` with a single decay factor shared by every synapse.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::lif::flush;
use super::params::{HomeostasisParams, PresynKernel, StStdpParams, TripletParams};
use super::{NeuronState, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Training,
    Inference,
}

const F_SCALE_FLOOR: f64 = 1e-150;

#[derive(Debug, Clone)]
pub struct PlasticSynapseMatrix {
    n_input: usize,
    n_exc: usize,
    mode: Mode,
    w_raw: Vec<f64>,
    w_scale: Vec<f64>,
    /// Column maxima of `w_raw`, refreshed when entering inference.
    w_colmax: Vec<f64>,
    col_sum: Vec<f64>,
    f_raw: Vec<f64>,
    f_scale: f64,
    /// Nearest-spike presynaptic trace of the triplet rule.
    pub pre_trace: Vec<f64>,
    pub post_trace: Vec<f64>,
    pub post_trace2: Vec<f64>,
    /// Presynaptic history seen by short-term STDP.
    pub stp_trace: Vec<f64>,
    stp_history: Vec<VecDeque<f64>>,
    stp_clock: f64,
}

impl PlasticSynapseMatrix {
    /// Wraps row-major resting weights (`w[j * n_exc + k]`).
    pub fn new(n_input: usize, n_exc: usize, w: Vec<f64>) -> Result<Self, SimError> {
        if w.len() != n_input * n_exc {
            return Err(SimError::Shape(format!(
                "expected {} weights, got {}",
                n_input * n_exc,
                w.len()
            )));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(SimError::InvalidParams(
                "weights must be finite and non-negative".into(),
            ));
        }
        let mut s = Self {
            n_input,
            n_exc,
            mode: Mode::Training,
            w_raw: w,
            w_scale: vec![1.0; n_exc],
            w_colmax: vec![0.0; n_exc],
            col_sum: vec![0.0; n_exc],
            f_raw: vec![0.0; n_input * n_exc],
            f_scale: 1.0,
            pre_trace: vec![0.0; n_input],
            post_trace: vec![0.0; n_exc],
            post_trace2: vec![0.0; n_exc],
            stp_trace: vec![0.0; n_input],
            stp_history: vec![VecDeque::new(); n_input],
            stp_clock: 0.0,
        };
        s.recompute_col_sums();
        Ok(s)
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn n_exc(&self) -> usize {
        self.n_exc
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Switches mode. Entering inference clears the short-term state.
    pub fn set_mode(&mut self, mode: Mode) {
        self.fold_scales();
        self.mode = mode;
        self.reset_short_term();
        if mode == Mode::Inference {
            self.w_colmax = (0..self.n_exc)
                .map(|k| {
                    (0..self.n_input)
                        .map(|j| self.w_raw[j * self.n_exc + k])
                        .fold(0.0, f64::max)
                })
                .collect();
        }
    }

    /// Zeroes F and the short-term presynaptic history.
    pub fn reset_short_term(&mut self) {
        self.f_raw.iter_mut().for_each(|x| *x = 0.0);
        self.f_scale = 1.0;
        self.stp_trace.iter_mut().for_each(|x| *x = 0.0);
        self.stp_history.iter_mut().for_each(VecDeque::clear);
        self.stp_clock = 0.0;
    }

    /// Zeroes the triplet-rule traces.
    pub fn reset_traces(&mut self) {
        for v in [
            &mut self.pre_trace,
            &mut self.post_trace,
            &mut self.post_trace2,
        ] {
            v.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.w_raw[j * self.n_exc + k] * self.w_scale[k]
    }

    #[inline]
    pub fn short_term(&self, j: usize, k: usize) -> f64 {
        self.f_raw[j * self.n_exc + k] * self.f_scale
    }

    /// Efficacy `max(W + F, 0)`: depression never makes a synapse inhibitory.
    #[inline]
    pub fn efficacy(&self, j: usize, k: usize) -> f64 {
        (self.weight(j, k) + self.short_term(j, k)).max(0.0)
    }

    /// Adds row `j` of the efficacy matrix into `acc`.
    #[inline]
    pub fn accumulate_row(&self, j: usize, acc: &mut [f64], with_short_term: bool) {
        let row = &self.w_raw[j * self.n_exc..(j + 1) * self.n_exc];
        if with_short_term {
            let frow = &self.f_raw[j * self.n_exc..(j + 1) * self.n_exc];
            let fs = self.f_scale;
            for k in 0..self.n_exc {
                acc[k] += (row[k] * self.w_scale[k] + frow[k] * fs).max(0.0);
            }
        } else {
            for k in 0..self.n_exc {
                acc[k] += row[k] * self.w_scale[k];
            }
        }
    }

    /// Resting weights, row-major, with pending column scales applied.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = self.w_raw.clone();
        for row in out.chunks_mut(self.n_exc) {
            for (x, s) in row.iter_mut().zip(&self.w_scale) {
                *x *= s;
            }
        }
        out
    }

    /// Short-term components, row-major.
    pub fn short_term_matrix(&self) -> Vec<f64> {
        self.f_raw.iter().map(|x| x * self.f_scale).collect()
    }

    pub fn weight_column(&self, k: usize) -> Vec<f64> {
        (0..self.n_input).map(|j| self.weight(j, k)).collect()
    }

    pub fn efficacy_column(&self, k: usize) -> Vec<f64> {
        (0..self.n_input).map(|j| self.efficacy(j, k)).collect()
    }

    /// Frobenius norm of F.
    pub fn short_term_norm(&self) -> f64 {
        self.f_raw.iter().map(|x| x * x).sum::<f64>().sqrt() * self.f_scale
    }

    pub fn column_sums(&self) -> &[f64] {
        &self.col_sum
    }

    /// Writes pending column scales into the stored weights and recomputes
    /// the column sums exactly.
    pub fn fold_scales(&mut self) {
        if self.w_scale.iter().any(|&s| s != 1.0) {
            for row in self.w_raw.chunks_mut(self.n_exc) {
                for (x, s) in row.iter_mut().zip(&self.w_scale) {
                    *x *= s;
                }
            }
            self.w_scale.iter_mut().for_each(|s| *s = 1.0);
        }
        self.recompute_col_sums();
    }

    fn recompute_col_sums(&mut self) {
        self.col_sum.iter_mut().for_each(|s| *s = 0.0);
        for row in self.w_raw.chunks(self.n_exc) {
            for (s, &x) in self.col_sum.iter_mut().zip(row) {
                *s += x;
            }
        }
        for (s, &sc) in self.col_sum.iter_mut().zip(&self.w_scale) {
            *s *= sc;
        }
    }

    /// Sets the resting weight of one synapse, clipped to `[0, w_max]`.
    #[inline]
    fn set_weight_clipped(&mut self, j: usize, k: usize, value: f64, w_max: f64) {
        let idx = j * self.n_exc + k;
        let old = self.w_raw[idx] * self.w_scale[k];
        let new = value.clamp(0.0, w_max);
        self.w_raw[idx] = new / self.w_scale[k];
        self.col_sum[k] += new - old;
    }

    fn advance_stp_clock(&mut self, dt: f64, window: f64) {
        self.stp_clock += dt;
        let horizon = self.stp_clock - window;
        for h in &mut self.stp_history {
            while h.front().is_some_and(|&s| s < horizon) {
                h.pop_front();
            }
        }
    }

    fn inverse_sqrt_trace(&self, j: usize, alpha: f64, dt: f64) -> f64 {
        self.stp_history[j]
            .iter()
            .map(|&s| {
                // same-step spikes sit half a step in the past
                let tau = (self.stp_clock - s).max(0.5 * dt);
                tau.powf(-0.5) * (-alpha * tau).exp()
            })
            .sum()
    }
}

/// Triplet STDP for one step of length `dt`.
///
/// Traces decay first, then presynaptic spikes depress by the first
/// postsynaptic trace and postsynaptic spikes potentiate by
/// `pre_trace * post_trace2` (the latter read before its own reset).
pub fn triplet_stdp_step(
    syn: &mut PlasticSynapseMatrix,
    pre_spikes: &[u16],
    post_spikes: &[u16],
    p: &TripletParams,
    dt: f64,
) -> Result<(), SimError> {
    if syn.mode != Mode::Training {
        return Err(SimError::WrongMode {
            op: "triplet STDP",
            mode: syn.mode,
        });
    }
    let d_pre = (-dt / p.tau_pre).exp();
    let d_post1 = (-dt / p.tau_post1).exp();
    let d_post2 = (-dt / p.tau_post2).exp();
    syn.pre_trace
        .iter_mut()
        .for_each(|x| *x = flush(*x * d_pre));
    syn.post_trace
        .iter_mut()
        .for_each(|x| *x = flush(*x * d_post1));
    syn.post_trace2
        .iter_mut()
        .for_each(|x| *x = flush(*x * d_post2));

    for &j in pre_spikes {
        let j = j as usize;
        syn.pre_trace[j] = 1.0;
        if p.nu_pre != 0.0 {
            for k in 0..syn.n_exc {
                let post1 = syn.post_trace[k];
                if post1 != 0.0 {
                    let w = syn.weight(j, k);
                    syn.set_weight_clipped(j, k, w - p.nu_pre * post1, p.w_max);
                }
            }
        }
    }
    for &k in post_spikes {
        let k = k as usize;
        let gain = p.nu_post * syn.post_trace2[k];
        if gain != 0.0 {
            for j in 0..syn.n_input {
                let pre = syn.pre_trace[j];
                if pre != 0.0 {
                    let w = syn.weight(j, k);
                    syn.set_weight_clipped(j, k, w + gain * pre, p.w_max);
                }
            }
        }
        syn.post_trace[k] = 1.0;
        syn.post_trace2[k] = 1.0;
    }
    Ok(())
}

/// Short-term STDP for one step of length `dt`: F decays with `tau_stp`, and
/// every postsynaptic spike at `k` adds `gamma_jk * trace_j` to `F[j, k]`.
pub fn st_stdp_step(
    syn: &mut PlasticSynapseMatrix,
    pre_spikes: &[u16],
    post_spikes: &[u16],
    p: &StStdpParams,
    dt: f64,
) -> Result<(), SimError> {
    if syn.mode != Mode::Inference {
        return Err(SimError::WrongMode {
            op: "short-term STDP",
            mode: syn.mode,
        });
    }
    syn.f_scale *= (-dt / p.tau_stp).exp();
    if syn.f_scale < F_SCALE_FLOOR {
        let s = syn.f_scale;
        syn.f_raw.iter_mut().for_each(|x| *x *= s);
        syn.f_scale = 1.0;
    }
    match p.kernel {
        PresynKernel::Exponential => {
            let d = (-dt / p.tau_kernel).exp();
            syn.stp_trace.iter_mut().for_each(|x| *x = flush(*x * d));
            for &j in pre_spikes {
                syn.stp_trace[j as usize] += 1.0;
            }
        }
        PresynKernel::InverseSqrt { alpha, window } => {
            syn.advance_stp_clock(dt, window);
            let now = syn.stp_clock;
            for &j in pre_spikes {
                syn.stp_history[j as usize].push_back(now);
            }
            if !post_spikes.is_empty() {
                for j in 0..syn.n_input {
                    syn.stp_trace[j] = syn.inverse_sqrt_trace(j, alpha, dt);
                }
            }
        }
    }
    if p.gamma == 0.0 {
        return Ok(());
    }
    let c = p.weight_dep_c;
    for &k in post_spikes {
        let k = k as usize;
        let colmax = syn.w_colmax[k];
        let inv_scale = 1.0 / syn.f_scale;
        for j in 0..syn.n_input {
            let tr = syn.stp_trace[j];
            if tr == 0.0 {
                continue;
            }
            let rel = if colmax > 0.0 {
                syn.weight(j, k) / colmax
            } else {
                0.0
            };
            let g = p.gamma * (c + (1.0 - c) * rel);
            syn.f_raw[j * syn.n_exc + k] += g * tr * inv_scale;
        }
    }
    Ok(())
}

/// Rescales every column of W to sum to `target`.
pub fn normalize_weights(syn: &mut PlasticSynapseMatrix, target: f64) -> Result<(), SimError> {
    if syn.mode != Mode::Training {
        return Err(SimError::WrongMode {
            op: "weight normalization",
            mode: syn.mode,
        });
    }
    for k in 0..syn.n_exc {
        let s = syn.col_sum[k];
        if !(s > 0.0) {
            return Err(SimError::ZeroColumnSum { neuron: k });
        }
        if s != target {
            syn.w_scale[k] *= target / s;
            syn.col_sum[k] = target;
        }
    }
    Ok(())
}

/// Adaptive thresholds: decay with `tau_theta` unless resting, then jump by
/// `theta_plus` for every spiking neuron.
pub fn homeostasis_step(
    states: &mut [NeuronState],
    spiked: &[u16],
    dt: f64,
    p: &HomeostasisParams,
    in_rest_phase: bool,
) {
    if !in_rest_phase {
        let d = (-dt / p.tau_theta).exp();
        states
            .iter_mut()
            .for_each(|s| s.theta_adapt = flush(s.theta_adapt * d));
    }
    for &k in spiked {
        states[k as usize].theta_adapt += p.theta_plus;
    }
}

/// Conductance increments for the inhibitory partners of spiking excitatory
/// neurons.
pub fn wta_route(exc_spikes: &[u16], n_exc: usize, w_exc_inh: f64) -> Vec<f64> {
    let mut drive = vec![0.0; n_exc];
    for &k in exc_spikes {
        drive[k as usize] += w_exc_inh;
    }
    drive
}

/// Each inhibitory spike at `k` raises `g_i` of every excitatory neuron but
/// `k`. `inh_spikes` must be sorted and free of duplicates.
pub fn lateral_inhibition(inh_spikes: &[u16], g_i: &mut [f64], w_inh_exc: f64) {
    if inh_spikes.is_empty() {
        return;
    }
    let count = inh_spikes.len() as f64;
    let mut next = inh_spikes.iter().peekable();
    for (j, g) in g_i.iter_mut().enumerate() {
        let own = if next.peek().is_some_and(|&&k| k as usize == j) {
            next.next();
            1.0
        } else {
            0.0
        };
        *g += w_inh_exc * (count - own);
    }
}

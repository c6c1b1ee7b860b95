use serde::{Deserialize, Serialize};

use super::params::LifParams;

/// Dynamic state of one conductance-based LIF neuron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane potential (mV).
    pub v: f64,
    pub g_e: f64,
    pub g_i: f64,
    /// Adaptive threshold offset (mV).
    pub theta_adapt: f64,
    /// No spike is emitted before this time (ms).
    pub refr_until: f64,
}

impl NeuronState {
    pub fn at_rest(params: &LifParams) -> Self {
        Self {
            v: params.v_rest,
            g_e: 0.0,
            g_i: 0.0,
            theta_adapt: 0.0,
            refr_until: f64::NEG_INFINITY,
        }
    }
}

/// Values this small are set to zero so decaying state never goes subnormal.
pub(crate) const FLUSH_BELOW: f64 = 1e-200;

#[inline]
pub(crate) fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH_BELOW {
        0.0
    } else {
        x
    }
}

/// Precomputed per-step factors for a population sharing `LifParams`.
#[derive(Debug, Clone, Copy)]
pub struct LifStepper {
    pub params: LifParams,
    pub dt: f64,
    ge_decay: f64,
    gi_decay: f64,
}

impl LifStepper {
    pub fn new(params: LifParams, dt: f64) -> Self {
        Self {
            params,
            dt,
            ge_decay: (-dt / params.tau_ge).exp(),
            gi_decay: (-dt / params.tau_gi).exp(),
        }
    }

    /// Advances one neuron from `now` to `now + dt`. Returns whether it spiked.
    ///
    /// Membrane: `tau dv/dt = (v_rest - v) + g_e (e_exc - v) + g_i (e_inh - v)`,
    /// integrated with backward Euler (stable for any conductance, which
    /// matters when many inhibitory partners fire at once); conductances then
    /// decay exponentially.
    #[inline]
    pub fn step(&self, s: &mut NeuronState, now: f64, v_thresh: f64) -> bool {
        let p = &self.params;
        let t_next = now + self.dt;
        if t_next < s.refr_until - 1e-9 {
            s.v = p.v_reset;
        } else {
            let h = self.dt / p.tau_mem;
            let drive = (p.v_rest - s.v) + s.g_e * (p.e_exc - s.v) + s.g_i * (p.e_inh - s.v);
            s.v += h * drive / (1.0 + h * (1.0 + s.g_e + s.g_i));
        }
        s.g_e = flush(s.g_e * self.ge_decay);
        s.g_i = flush(s.g_i * self.gi_decay);
        if s.v > v_thresh && t_next >= s.refr_until - 1e-9 {
            s.v = p.v_reset;
            s.refr_until = t_next + p.refractory;
            return true;
        }
        false
    }
}

/// Single-neuron convenience wrapper around [`LifStepper::step`].
pub fn lif_step(
    state: &mut NeuronState,
    params: &LifParams,
    now: f64,
    dt: f64,
    v_thresh_effective: f64,
) -> bool {
    LifStepper::new(*params, dt).step(state, now, v_thresh_effective)
}

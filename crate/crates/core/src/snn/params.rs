use serde::{Deserialize, Serialize};

use super::SimError;

/// Leaky integrate-and-fire constants for one population (mV, ms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifParams {
    pub v_rest: f64,
    pub v_reset: f64,
    pub v_thresh_base: f64,
    pub tau_mem: f64,
    pub refractory: f64,
    /// Excitatory reversal potential.
    pub e_exc: f64,
    /// Inhibitory reversal potential.
    pub e_inh: f64,
    pub tau_ge: f64,
    pub tau_gi: f64,
}

impl LifParams {
    pub fn excitatory() -> Self {
        Self {
            v_rest: -65.0,
            v_reset: -65.0,
            v_thresh_base: -52.0,
            tau_mem: 100.0,
            refractory: 5.0,
            e_exc: 0.0,
            e_inh: -100.0,
            tau_ge: 1.0,
            tau_gi: 2.0,
        }
    }

    pub fn inhibitory() -> Self {
        Self {
            v_rest: -60.0,
            v_reset: -45.0,
            v_thresh_base: -40.0,
            tau_mem: 10.0,
            refractory: 2.0,
            e_exc: 0.0,
            e_inh: -85.0,
            tau_ge: 1.0,
            tau_gi: 2.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("tau_mem", self.tau_mem),
            ("tau_ge", self.tau_ge),
            ("tau_gi", self.tau_gi),
            ("refractory", self.refractory),
        ] {
            if !(v > 0.0) {
                return Err(SimError::InvalidParams(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Long-term triplet STDP used while learning the resting weights.
///
/// Defaults follow the reference unsupervised MNIST network this model
/// is built on; they are not part of the inference parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripletParams {
    pub tau_pre: f64,
    pub tau_post1: f64,
    pub tau_post2: f64,
    /// Depression rate applied on a presynaptic spike.
    pub nu_pre: f64,
    /// Potentiation rate applied on a postsynaptic spike.
    pub nu_post: f64,
    pub w_max: f64,
}

impl Default for TripletParams {
    fn default() -> Self {
        Self {
            tau_pre: 20.0,
            tau_post1: 20.0,
            tau_post2: 40.0,
            nu_pre: 0.0001,
            nu_post: 0.01,
            w_max: 1.0,
        }
    }
}

/// Adaptive threshold. Defaults are inherited from the reference network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomeostasisParams {
    /// Threshold increment per spike (mV).
    pub theta_plus: f64,
    /// Decay time constant of the increment (ms).
    pub tau_theta: f64,
}

impl Default for HomeostasisParams {
    fn default() -> Self {
        Self {
            theta_plus: 0.05,
            tau_theta: 1e7,
        }
    }
}

/// Lag kernel of the presynaptic history seen by short-term STDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresynKernel {
    /// Trace that jumps by one per spike and decays with `tau_kernel`.
    #[default]
    Exponential,
    /// `tau^(-1/2) exp(-alpha tau)` summed over spikes younger than `window` ms.
    InverseSqrt { alpha: f64, window: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StStdpParams {
    /// Decay time constant of the short-term component (ms).
    pub tau_stp: f64,
    /// Decay time constant of the presynaptic trace (ms).
    pub tau_kernel: f64,
    /// Peak of the STDP kernel.
    pub gamma: f64,
    /// Weight dependence: `gamma_jk = gamma * (c + (1 - c) * w_jk / max_j w_jk)`.
    /// Negative values depress synapses with weak resting weights.
    pub weight_dep_c: f64,
    #[serde(default)]
    pub kernel: PresynKernel,
}

impl Default for StStdpParams {
    fn default() -> Self {
        Self {
            tau_stp: 300.0,
            tau_kernel: 20.0,
            gamma: 0.7,
            weight_dep_c: -2.0,
            kernel: PresynKernel::Exponential,
        }
    }
}

impl StStdpParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.tau_stp > 0.0 && self.tau_kernel > 0.0 && self.gamma >= 0.0) {
            return Err(SimError::InvalidParams(
                "short-term STDP needs tau_stp, tau_kernel > 0 and gamma >= 0".into(),
            ));
        }
        if !(self.weight_dep_c <= 1.0) {
            return Err(SimError::InvalidParams(format!(
                "weight_dep_c must be <= 1, got {}",
                self.weight_dep_c
            )));
        }
        if let PresynKernel::InverseSqrt { alpha, window } = self.kernel {
            if !(alpha >= 0.0 && window > 0.0) {
                return Err(SimError::InvalidParams(
                    "inverse-sqrt kernel needs alpha >= 0, window > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// When the resting weights are rescaled to the target column sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// After every simulation step in which a weight changed.
    #[default]
    PerStep,
    /// Once before each training presentation.
    PerPresentation,
}

/// Topology and static constants of the soft winner-take-all network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    pub n_input: usize,
    pub n_exc: usize,
    /// Simulation step (ms).
    pub dt: f64,
    pub exc: LifParams,
    pub inh: LifParams,
    /// Excitatory neuron to its inhibitory partner.
    pub w_exc_inh: f64,
    /// Inhibitory neuron to every other excitatory neuron.
    pub w_inh_exc: f64,
    /// Column sum enforced on the resting weights.
    pub norm_target: f64,
    pub normalization: Normalization,
    /// Initial weights are uniform in `[0.01, 1.01) * init_scale`.
    pub init_scale: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            n_input: 784,
            n_exc: 400,
            dt: 0.5,
            exc: LifParams::excitatory(),
            inh: LifParams::inhibitory(),
            w_exc_inh: 10.4,
            w_inh_exc: 17.0,
            norm_target: 78.0,
            normalization: Normalization::PerStep,
            init_scale: 0.3,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), SimError> {
        self.exc.validate()?;
        self.inh.validate()?;
        if self.n_input == 0
            || self.n_exc == 0
            || self.n_input > u16::MAX as usize
            || self.n_exc > u16::MAX as usize
        {
            return Err(SimError::InvalidParams(
                "population sizes must be in 1..=65535".into(),
            ));
        }
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidParams(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.norm_target > 0.0) {
            return Err(SimError::InvalidParams("norm_target must be > 0".into()));
        }
        Ok(())
    }

    /// Scaled-down copy with `n_input` inputs, `n_exc` neurons and the same
    /// per-synapse mean weight.
    pub fn resized(&self, n_input: usize, n_exc: usize) -> Self {
        Self {
            n_input,
            n_exc,
            norm_target: self.norm_target * n_input as f64 / self.n_input as f64,
            ..*self
        }
    }
}

//! The input → excitatory ⇄ inhibitory soft-WTA network.
//!
//! One step of length `dt`:
//! 1. input spikes add their efficacy row to the excitatory `g_e`;
//! 2. excitatory then inhibitory neurons integrate and may spike;
//! 3. excitatory spikes drive their inhibitory partners and inhibitory spikes
//!    inhibit every other excitatory neuron (both felt from the next step);
//! 4. plasticity for the current mode, normalization, homeostasis.

use rand::{Rng, SeedableRng};

use super::encoding::PoissonSource;
use super::lif::{LifStepper, NeuronState};
use super::params::{HomeostasisParams, NetworkParams, Normalization, StStdpParams, TripletParams};
use super::plasticity::{
    homeostasis_step, lateral_inhibition, normalize_weights, st_stdp_step, triplet_stdp_step, Mode,
    PlasticSynapseMatrix,
};
use super::{SimError, SimRng};

#[derive(Debug, Clone)]
pub struct Network {
    params: NetworkParams,
    triplet: TripletParams,
    homeostasis: HomeostasisParams,
    st_stdp: Option<StStdpParams>,
    syn: PlasticSynapseMatrix,
    exc: Vec<NeuronState>,
    inh: Vec<NeuronState>,
    exc_stepper: LifStepper,
    inh_stepper: LifStepper,
    ge_in: Vec<f64>,
    t: f64,
    source: PoissonSource,
    rng: SimRng,
    in_buf: Vec<u16>,
    exc_spikes: Vec<u16>,
    inh_spikes: Vec<u16>,
    recorder: Option<Vec<(f32, u16)>>,
}

impl Network {
    /// Randomly initialized network in training mode.
    pub fn new(
        params: NetworkParams,
        triplet: TripletParams,
        homeostasis: HomeostasisParams,
        seed: u64,
    ) -> Result<Self, SimError> {
        params.validate()?;
        let mut rng = SimRng::seed_from_u64(seed);
        let w: Vec<f64> = (0..params.n_input * params.n_exc)
            .map(|_| params.init_scale * (rng.random::<f64>() + 0.01))
            .collect();
        let mut net = Self::from_parts(
            params,
            triplet,
            homeostasis,
            w,
            vec![0.0; params.n_exc],
            seed,
        )?;
        normalize_weights(&mut net.syn, params.norm_target)?;
        net.syn.fold_scales();
        Ok(net)
    }

    /// Network with the given resting weights (row-major, `j * n_exc + k`)
    /// and adaptive thresholds, in training mode.
    pub fn from_parts(
        params: NetworkParams,
        triplet: TripletParams,
        homeostasis: HomeostasisParams,
        weights: Vec<f64>,
        thetas: Vec<f64>,
        seed: u64,
    ) -> Result<Self, SimError> {
        params.validate()?;
        if thetas.len() != params.n_exc {
            return Err(SimError::Shape(format!(
                "expected {} thresholds, got {}",
                params.n_exc,
                thetas.len()
            )));
        }
        let syn = PlasticSynapseMatrix::new(params.n_input, params.n_exc, weights)?;
        let mut exc = vec![NeuronState::at_rest(&params.exc); params.n_exc];
        for (s, &th) in exc.iter_mut().zip(&thetas) {
            s.theta_adapt = th;
        }
        let mut rng = SimRng::seed_from_u64(seed);
        rng.jump();
        Ok(Self {
            params,
            triplet,
            homeostasis,
            st_stdp: None,
            syn,
            exc,
            inh: vec![NeuronState::at_rest(&params.inh); params.n_exc],
            exc_stepper: LifStepper::new(params.exc, params.dt),
            inh_stepper: LifStepper::new(params.inh, params.dt),
            ge_in: vec![0.0; params.n_exc],
            t: 0.0,
            source: PoissonSource::new(),
            rng,
            in_buf: Vec::new(),
            exc_spikes: Vec::new(),
            inh_spikes: Vec::new(),
            recorder: None,
        })
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn triplet_params(&self) -> &TripletParams {
        &self.triplet
    }

    pub fn mode(&self) -> Mode {
        self.syn.mode()
    }

    pub fn st_stdp(&self) -> Option<&StStdpParams> {
        self.st_stdp.as_ref()
    }

    pub fn synapses(&self) -> &PlasticSynapseMatrix {
        &self.syn
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn weights(&self) -> Vec<f64> {
        self.syn.weights()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.exc.iter().map(|s| s.theta_adapt).collect()
    }

    pub fn exc_states(&self) -> &[NeuronState] {
        &self.exc
    }

    pub fn set_training(&mut self) {
        self.st_stdp = None;
        self.syn.set_mode(Mode::Training);
    }

    /// Freezes W and thresholds. `st_stdp` enables short-term plasticity.
    pub fn set_inference(&mut self, st_stdp: Option<StStdpParams>) -> Result<(), SimError> {
        if let Some(p) = &st_stdp {
            p.validate()?;
        }
        self.st_stdp = st_stdp;
        self.syn.set_mode(Mode::Inference);
        Ok(())
    }

    /// Restarts the Poisson input stream from `seed`.
    pub fn reseed_inputs(&mut self, seed: u64) {
        self.rng = SimRng::seed_from_u64(seed);
        self.rng.jump();
    }

    /// Clears short-term efficacy changes and presynaptic history.
    pub fn reset_short_term(&mut self) {
        self.syn.reset_short_term();
    }

    /// Returns membranes and conductances to rest. Thresholds are kept.
    pub fn reset_dynamics(&mut self) {
        for s in &mut self.exc {
            let th = s.theta_adapt;
            *s = NeuronState::at_rest(&self.params.exc);
            s.theta_adapt = th;
        }
        for s in &mut self.inh {
            *s = NeuronState::at_rest(&self.params.inh);
        }
        self.ge_in.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Starts collecting excitatory spikes as `(t, neuron)` records.
    pub fn start_recording(&mut self) {
        self.recorder = Some(Vec::new());
    }

    pub fn take_recording(&mut self) -> Vec<(f32, u16)> {
        self.recorder.take().unwrap_or_default()
    }

    /// Advances one step with the given input spikes (sorted indices).
    /// Returns the excitatory neurons that spiked.
    pub fn step(&mut self, inputs: &[u16], in_rest_phase: bool) -> Result<&[u16], SimError> {
        let n_exc = self.params.n_exc;
        let with_f = self.st_stdp.is_some();
        for &j in inputs {
            if j as usize >= self.params.n_input {
                return Err(SimError::Shape(format!("input index {j} out of range")));
            }
            self.syn.accumulate_row(j as usize, &mut self.ge_in, with_f);
        }

        self.exc_spikes.clear();
        let base = self.params.exc.v_thresh_base;
        for k in 0..n_exc {
            let s = &mut self.exc[k];
            s.g_e += self.ge_in[k];
            self.ge_in[k] = 0.0;
            if self.exc_stepper.step(s, self.t, base + s.theta_adapt) {
                self.exc_spikes.push(k as u16);
            }
        }
        self.inh_spikes.clear();
        let inh_base = self.params.inh.v_thresh_base;
        for k in 0..n_exc {
            if self.inh_stepper.step(&mut self.inh[k], self.t, inh_base) {
                self.inh_spikes.push(k as u16);
            }
        }
        for &k in &self.exc_spikes {
            self.inh[k as usize].g_e += self.params.w_exc_inh;
        }
        if !self.inh_spikes.is_empty() {
            let mut gi: Vec<f64> = self.exc.iter().map(|s| s.g_i).collect();
            lateral_inhibition(&self.inh_spikes, &mut gi, self.params.w_inh_exc);
            for (s, g) in self.exc.iter_mut().zip(gi) {
                s.g_i = g;
            }
        }

        let dt = self.params.dt;
        match self.syn.mode() {
            Mode::Training => {
                triplet_stdp_step(&mut self.syn, inputs, &self.exc_spikes, &self.triplet, dt)?;
                if self.params.normalization == Normalization::PerStep
                    && (!inputs.is_empty() || !self.exc_spikes.is_empty())
                {
                    normalize_weights(&mut self.syn, self.params.norm_target)?;
                }
                homeostasis_step(
                    &mut self.exc,
                    &self.exc_spikes,
                    dt,
                    &self.homeostasis,
                    in_rest_phase,
                );
            }
            Mode::Inference => {
                if let Some(p) = &self.st_stdp {
                    st_stdp_step(&mut self.syn, inputs, &self.exc_spikes, p, dt)?;
                }
            }
        }

        self.t += dt;
        if let Some(rec) = &mut self.recorder {
            for &k in &self.exc_spikes {
                rec.push((self.t as f32, k));
            }
        }
        Ok(&self.exc_spikes)
    }

    /// Presents `frame` for `duration` ms. Returns per-neuron spike counts.
    pub fn present(
        &mut self,
        frame: &[u8],
        duration: f64,
        rate_scale: f64,
    ) -> Result<Vec<u32>, SimError> {
        self.present_observed(frame, duration, rate_scale, |_| {})
    }

    /// Like [`Network::present`], calling `observe` after every step.
    pub fn present_observed<F: FnMut(&Network)>(
        &mut self,
        frame: &[u8],
        duration: f64,
        rate_scale: f64,
        mut observe: F,
    ) -> Result<Vec<u32>, SimError> {
        if frame.len() != self.params.n_input {
            return Err(SimError::Shape(format!(
                "frame has {} pixels, network has {} inputs",
                frame.len(),
                self.params.n_input
            )));
        }
        if self.syn.mode() == Mode::Training {
            self.syn.fold_scales();
            if self.params.normalization == Normalization::PerPresentation {
                normalize_weights(&mut self.syn, self.params.norm_target)?;
            }
        }
        self.source
            .load(frame, rate_scale, self.params.dt, &mut self.rng)?;
        let mut counts = vec![0u32; self.params.n_exc];
        let mut buf = std::mem::take(&mut self.in_buf);
        for _ in 0..self.n_steps(duration) {
            buf.clear();
            buf.extend_from_slice(self.source.next_step(&mut self.rng));
            for &k in self.step(&buf, false)? {
                counts[k as usize] += 1;
            }
            observe(self);
        }
        self.in_buf = buf;
        self.source.clear();
        Ok(counts)
    }

    /// Runs `duration` ms without input; homeostasis is paused.
    pub fn rest(&mut self, duration: f64) -> Result<(), SimError> {
        self.rest_observed(duration, |_| {})
    }

    pub fn rest_observed<F: FnMut(&Network)>(
        &mut self,
        duration: f64,
        mut observe: F,
    ) -> Result<(), SimError> {
        for _ in 0..self.n_steps(duration) {
            self.step(&[], true)?;
            observe(self);
        }
        Ok(())
    }

    fn n_steps(&self, duration: f64) -> usize {
        (duration / self.params.dt).round().max(0.0) as usize
    }
}

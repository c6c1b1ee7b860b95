//! Winner-take-all circuit of stochastic exponential units.
//!
//! Unit `k` fires as an inhomogeneous Poisson process with rate
//! `exp(u_k + g0_k - I)`, where `I` is a shared inhibition that jumps after
//! every spike and otherwise decays. `I` is held fixed between spikes, so each
//! inter-spike interval is a race of independent exponential clocks. Only used
//! to check that spike origins sample the exponential-mixture posterior.

use rand::Rng;

use crate::mixture::{ModelKind, ModelParams};

use super::SimRng;

#[derive(Debug, Clone)]
pub struct ExpWtaCircuit {
    /// Log-rates `u_k + g0_k` for the presented input.
    pub log_rates: Vec<f64>,
    /// Inhibition added after each spike.
    pub inh_jump: f64,
    /// Inhibition decay time constant (ms).
    pub inh_tau: f64,
    inhibition: f64,
    t: f64,
}

impl ExpWtaCircuit {
    /// Circuit whose units hold the components of `model`, driven by `x`.
    pub fn for_input(model: &ModelParams, x: &[f64], inh_jump: f64, inh_tau: f64) -> Option<Self> {
        if model.kind != ModelKind::Exponential {
            return None;
        }
        let u = model.similarities(x).ok()?;
        let log_rates = u.iter().zip(&model.g0).map(|(a, b)| a + b).collect();
        Some(Self {
            log_rates,
            inh_jump,
            inh_tau,
            inhibition: 0.0,
            t: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Advances to the next network spike and returns its origin.
    pub fn next_spike(&mut self, rng: &mut SimRng) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, &lr) in self.log_rates.iter().enumerate() {
            let rate = (lr - self.inhibition).exp();
            let u: f64 = 1.0 - rng.random::<f64>();
            let wait = -u.ln() / rate;
            if wait < best.0 {
                best = (wait, k);
            }
        }
        let (wait, k) = best;
        self.t += wait;
        self.inhibition = self.inhibition * (-wait / self.inh_tau).exp() + self.inh_jump;
        k
    }

    /// Spike counts per unit over `n_spikes` network spikes.
    pub fn sample_counts(&mut self, n_spikes: usize, rng: &mut SimRng) -> Vec<u64> {
        let mut counts = vec![0u64; self.log_rates.len()];
        for _ in 0..n_spikes {
            counts[self.next_spike(rng)] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn dominant_unit_wins_most() {
        let model = ModelParams::with_uniform_prior(
            ModelKind::Exponential,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let mut c = ExpWtaCircuit::for_input(&model, &[1.0, 0.0], 0.5, 5.0).unwrap();
        let mut rng = SimRng::seed_from_u64(3);
        let counts = c.sample_counts(10_000, &mut rng);
        let frac = counts[0] as f64 / 10_000.0;
        let expected = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((frac - expected).abs() < 0.02, "{frac}");
        assert!(c.time() > 0.0);
    }

    #[test]
    fn linear_models_are_rejected() {
        let model =
            ModelParams::with_uniform_prior(ModelKind::Linear, vec![vec![1.0, 0.0]]).unwrap();
        assert!(ExpWtaCircuit::for_input(&model, &[1.0, 0.0], 0.5, 5.0).is_none());
    }
}

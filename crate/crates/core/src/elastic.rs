//! Online elastic clustering.
//!
//! Each centroid has a fixed resting position `w` and a short-term
//! displacement `f`, so its effective position is `g = w + f`. Every
//! inference pulls `f` towards the input in proportion to the centroid's
//! responsibility, and `f` relaxes back to zero exponentially with rate
//! `lambda`. Decay is applied lazily from timestamps, so a long quiet gap costs
//! a single multiplication.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mixture::{self, MixtureError, ModelKind, Posterior};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticError {
    #[error("negative time step {0}")]
    NegativeStep(f64),
    #[error("timestamps must be non-decreasing: {next} after {prev}")]
    DecreasingTime { prev: f64, next: f64 },
    #[error("event age must be strictly positive, got {0}")]
    NonPositiveAge(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
}

/// How the bias of each centroid evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BiasRule {
    /// `F0 += gamma * Q`, then renormalize (softmax) or clamp to `[-1, 0]` (linear).
    #[default]
    Increment,
    /// Closed-form tracking of the optimal bias. `beta` weighs the
    /// history-independent prior against the decaying evidence, and `f0` is
    /// the value of the evidence kernel at zero lag.
    Tracking { beta: f64, f0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticConfig {
    /// Relaxation rate of the short-term displacement (1/ms).
    pub lambda: f64,
    /// Maximum Hebbian gain.
    pub gamma_max: f64,
    /// Weight-dependence mix; `c = 1` gives the same gain on every synapse.
    pub c: f64,
    pub model_kind: ModelKind,
    pub update_bias: bool,
    #[serde(default)]
    pub bias_rule: BiasRule,
}

impl Default for ElasticConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0 / 300.0,
            gamma_max: 0.7,
            c: 1.0,
            model_kind: ModelKind::Exponential,
            update_bias: false,
            bias_rule: BiasRule::Increment,
        }
    }
}

impl ElasticConfig {
    pub fn validate(&self) -> Result<(), ElasticError> {
        if !(self.lambda > 0.0) {
            return Err(ElasticError::InvalidConfig(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if !(self.gamma_max >= 0.0) {
            return Err(ElasticError::InvalidConfig(format!(
                "gamma_max must be >= 0, got {}",
                self.gamma_max
            )));
        }
        if self.c > 1.0 {
            return Err(ElasticError::InvalidConfig(format!(
                "c must be <= 1, got {}",
                self.c
            )));
        }
        if let BiasRule::Tracking { beta, f0 } = self.bias_rule {
            if !(beta > 0.0 && f0 >= 0.0) {
                return Err(ElasticError::InvalidConfig(
                    "tracking needs beta > 0 and f0 >= 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Per-synapse gain `gamma * (c + (1 - c) * w_j / max|w|)`. With `c < 0` the
/// gain is negative for weak synapses, which are then pushed away from the input.
pub fn weight_dependent_gain(w: &[f64], gamma_max: f64, c: f64) -> Vec<f64> {
    let peak = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    w.iter()
        .map(|&wj| {
            let rel = if peak > 0.0 { wj / peak } else { 0.0 };
            gamma_max * (c + (1.0 - c) * rel)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticCentroid {
    w: Vec<f64>,
    f: Vec<f64>,
    w0: f64,
    f0: f64,
    gamma: Vec<f64>,
}

impl ElasticCentroid {
    pub fn new(w: Vec<f64>, w0: f64, gamma: Vec<f64>) -> Self {
        assert_eq!(w.len(), gamma.len(), "gain vector must match weight vector");
        let n = w.len();
        Self {
            w,
            f: vec![0.0; n],
            w0,
            f0: 0.0,
            gamma,
        }
    }

    /// Centroid with gains derived from `config` and its resting weights.
    pub fn from_config(w: Vec<f64>, w0: f64, config: &ElasticConfig) -> Self {
        let gamma = weight_dependent_gain(&w, config.gamma_max, config.c);
        Self::new(w, w0, gamma)
    }

    pub fn resting(&self) -> &[f64] {
        &self.w
    }

    pub fn displacement(&self) -> &[f64] {
        &self.f
    }

    pub fn gain(&self) -> &[f64] {
        &self.gamma
    }

    pub fn resting_bias(&self) -> f64 {
        self.w0
    }

    pub fn bias_displacement(&self) -> f64 {
        self.f0
    }

    /// Effective position `w + f`.
    pub fn efficacy(&self) -> Vec<f64> {
        self.w.iter().zip(&self.f).map(|(w, f)| w + f).collect()
    }

    pub fn bias(&self) -> f64 {
        self.w0 + self.f0
    }

    pub fn dims(&self) -> usize {
        self.w.len()
    }

    /// Relaxes the displacement for `dt` time units.
    pub fn decay(&mut self, dt: f64, lambda: f64) -> Result<(), ElasticError> {
        if dt < 0.0 {
            return Err(ElasticError::NegativeStep(dt));
        }
        if dt == 0.0 {
            return Ok(());
        }
        let factor = (-lambda * dt).exp();
        self.f.iter_mut().for_each(|v| *v *= factor);
        self.f0 *= factor;
        Ok(())
    }

    /// Hebbian attraction towards `x` weighted by responsibility `q`.
    pub fn hebbian_update(&mut self, x: &[f64], q: f64, gamma_max: f64, update_bias: bool) {
        debug_assert!((0.0..=1.0).contains(&q));
        if q == 0.0 {
            return;
        }
        for ((f, g), xj) in self.f.iter_mut().zip(&self.gamma).zip(x) {
            *f += g * xj * q;
        }
        if update_bias {
            self.f0 += gamma_max * q;
        }
    }
}

/// Functional form of [`ElasticCentroid::decay`].
pub fn decay_step(
    centroid: &ElasticCentroid,
    dt: f64,
    lambda: f64,
) -> Result<ElasticCentroid, ElasticError> {
    let mut next = centroid.clone();
    next.decay(dt, lambda)?;
    Ok(next)
}

/// Functional form of [`ElasticCentroid::hebbian_update`].
pub fn hebbian_update(
    centroid: &ElasticCentroid,
    x: &[f64],
    q: f64,
    config: &ElasticConfig,
) -> ElasticCentroid {
    let mut next = centroid.clone();
    next.hebbian_update(x, q, config.gamma_max, config.update_bias);
    next
}

/// Normalized biases for a set of raw centroid biases.
fn normalize_biases(raw: &[f64], kind: ModelKind) -> Vec<f64> {
    match kind {
        ModelKind::Exponential => {
            let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + raw.iter().map(|b| (b - max).exp()).sum::<f64>().ln();
            raw.iter().map(|b| b - lse).collect()
        }
        ModelKind::Linear => raw.iter().map(|b| b.clamp(-1.0, 0.0)).collect(),
    }
}

/// Posterior over centroids for input `x`, using their current efficacies.
pub fn infer(
    x: &[f64],
    centroids: &[ElasticCentroid],
    config: &ElasticConfig,
) -> Result<Posterior, ElasticError> {
    let mut u = Vec::with_capacity(centroids.len());
    for c in centroids {
        u.push(mixture::cosine_similarity(x, &c.efficacy())?);
    }
    let raw: Vec<f64> = centroids.iter().map(ElasticCentroid::bias).collect();
    let biases = if config.update_bias {
        normalize_biases(&raw, config.model_kind)
    } else {
        raw
    };
    Ok(mixture::posterior(config.model_kind, &u, &biases))
}

/// Decaying evidence used by [`BiasRule::Tracking`].
#[derive(Debug, Clone, PartialEq, Default)]
struct BiasEvidence {
    /// Per-centroid `sum_i Q_i f(t - t_i)`.
    weighted: Vec<f64>,
    /// `sum_i f(t - t_i)`.
    total: f64,
}

/// A set of elastic centroids driven by a timestamped input stream.
#[derive(Debug, Clone)]
pub struct ElasticClusterer {
    config: ElasticConfig,
    centroids: Vec<ElasticCentroid>,
    now: Option<f64>,
    evidence: BiasEvidence,
}

impl ElasticClusterer {
    pub fn new(
        config: ElasticConfig,
        centroids: Vec<ElasticCentroid>,
    ) -> Result<Self, ElasticError> {
        config.validate()?;
        let k = centroids.len();
        Ok(Self {
            config,
            centroids,
            now: None,
            evidence: BiasEvidence {
                weighted: vec![0.0; k],
                total: 0.0,
            },
        })
    }

    pub fn config(&self) -> &ElasticConfig {
        &self.config
    }

    pub fn centroids(&self) -> &[ElasticCentroid] {
        &self.centroids
    }

    pub fn into_centroids(self) -> Vec<ElasticCentroid> {
        self.centroids
    }

    pub fn now(&self) -> Option<f64> {
        self.now
    }

    /// Moves the clock to `t`, relaxing every centroid on the way.
    pub fn advance_to(&mut self, t: f64) -> Result<(), ElasticError> {
        let prev = self.now.unwrap_or(t);
        if t < prev {
            return Err(ElasticError::DecreasingTime { prev, next: t });
        }
        let dt = t - prev;
        if dt > 0.0 {
            let lambda = self.config.lambda;
            for c in &mut self.centroids {
                c.decay(dt, lambda)?;
            }
            let factor = (-lambda * dt).exp();
            self.evidence.weighted.iter_mut().for_each(|v| *v *= factor);
            self.evidence.total *= factor;
        }
        self.now = Some(t);
        Ok(())
    }

    /// Biases fed to the posterior at the current instant.
    pub fn current_biases(&self) -> Vec<f64> {
        let kind = self.config.model_kind;
        if !self.config.update_bias {
            return self.centroids.iter().map(ElasticCentroid::bias).collect();
        }
        match self.config.bias_rule {
            BiasRule::Increment => {
                let raw: Vec<f64> = self.centroids.iter().map(ElasticCentroid::bias).collect();
                normalize_biases(&raw, kind)
            }
            BiasRule::Tracking { beta, .. } => {
                let denom = self.evidence.total + beta;
                self.centroids
                    .iter()
                    .zip(&self.evidence.weighted)
                    .map(|(c, a)| match kind {
                        ModelKind::Exponential => ((a + c.w0.exp() * beta) / denom).ln(),
                        // sum_i (Q_i - 1) f_i = a - total
                        ModelKind::Linear => ((a - self.evidence.total) + beta * c.w0) / denom,
                    })
                    .collect()
            }
        }
    }

    fn posterior_now(&self, x: &[f64]) -> Result<Posterior, ElasticError> {
        let mut u = Vec::with_capacity(self.centroids.len());
        for c in &self.centroids {
            u.push(mixture::cosine_similarity(x, &c.efficacy())?);
        }
        Ok(mixture::posterior(
            self.config.model_kind,
            &u,
            &self.current_biases(),
        ))
    }

    /// Processes one observation. Returns `None` for an all-zero input,
    /// which is skipped after the clock advances.
    pub fn observe(&mut self, t: f64, x: &[f64]) -> Result<Option<Posterior>, ElasticError> {
        self.advance_to(t)?;
        if x.iter().all(|v| *v == 0.0) {
            return Ok(None);
        }
        let post = self.posterior_now(x)?;
        if let Posterior::Distribution(q) = &post {
            let cfg = &self.config;
            for (c, &qk) in self.centroids.iter_mut().zip(q) {
                c.hebbian_update(
                    x,
                    qk,
                    cfg.gamma_max,
                    cfg.update_bias && cfg.bias_rule == BiasRule::Increment,
                );
            }
            if let BiasRule::Tracking { f0, .. } = cfg.bias_rule {
                for (a, &qk) in self.evidence.weighted.iter_mut().zip(q) {
                    *a += qk * f0;
                }
                self.evidence.total += f0;
            }
        }
        Ok(Some(post))
    }

    /// Runs a whole stream, returning the posterior at each non-zero input.
    pub fn run_stream<'a, I>(&mut self, stream: I) -> Result<Vec<(f64, Posterior)>, ElasticError>
    where
        I: IntoIterator<Item = (f64, &'a [f64])>,
    {
        let mut out = Vec::new();
        for (t, x) in stream {
            if let Some(p) = self.observe(t, x)? {
                out.push((t, p));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentInputConfig {
    /// Rate at which the observed object is replaced (1/ms).
    pub alpha: f64,
    /// Diffusion scale of the object's random drift.
    pub sigma: f64,
    /// Events older than this are ignored (ms).
    pub window: f64,
}

impl LatentInputConfig {
    pub fn validate(&self) -> Result<(), ElasticError> {
        if self.alpha > 0.0 && self.sigma > 0.0 && self.window > 0.0 {
            Ok(())
        } else {
            Err(ElasticError::InvalidConfig(
                "latent input needs alpha, sigma and window > 0".into(),
            ))
        }
    }
}

/// Lag kernel `tau^(-1/2) * exp(-alpha * tau)`.
pub fn latent_kernel(tau: f64, alpha: f64) -> f64 {
    (-alpha * tau).exp() / tau.sqrt()
}

/// Estimate of the hidden input from stochastic past measurements.
///
/// `events` holds `(age, measurement)` pairs. The result is
/// `(2 pi)^(-n/2) / sigma * sum x * tau^(-1/2) * exp(-alpha tau)` over events
/// younger than the window.
pub fn estimate_latent_input(
    events: &[(f64, Vec<f64>)],
    n: usize,
    cfg: &LatentInputConfig,
) -> Result<Vec<f64>, ElasticError> {
    cfg.validate()?;
    let mut acc = vec![0.0; n];
    for (tau, x) in events {
        if !(*tau > 0.0) {
            return Err(ElasticError::NonPositiveAge(*tau));
        }
        if x.len() != n {
            return Err(MixtureError::LengthMismatch(x.len(), n).into());
        }
        if *tau > cfg.window {
            continue;
        }
        let k = latent_kernel(*tau, cfg.alpha);
        acc.iter_mut().zip(x).for_each(|(a, v)| *a += v * k);
    }
    let log_scale = -(n as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln() - cfg.sigma.ln();
    let scale = log_scale.exp();
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn centroid(w: Vec<f64>, config: &ElasticConfig) -> ElasticCentroid {
        ElasticCentroid::from_config(w, 0.0, config)
    }

    #[test]
    fn decay_examples() {
        let cfg = ElasticConfig::default();
        let mut c = centroid(vec![0.2, 0.5], &cfg);
        c.f = vec![0.8, 0.0];
        let same = decay_step(&c, 0.0, cfg.lambda).unwrap();
        assert_eq!(same, c);
        let d = decay_step(&c, 300.0, 1.0 / 300.0).unwrap();
        assert_abs_diff_eq!(d.f[0], 0.294_304, epsilon = 1e-6);
        assert_eq!(d.f[1], 0.0);
        assert_eq!(d.w, c.w);
        assert!(matches!(
            decay_step(&c, -1.0, 0.1),
            Err(ElasticError::NegativeStep(_))
        ));
    }

    #[test]
    fn hebbian_examples() {
        let cfg = ElasticConfig::default();
        let c = centroid(vec![0.3, 0.9], &cfg);
        assert_eq!(hebbian_update(&c, &[1.0, 0.0], 0.0, &cfg), c);
        let after = hebbian_update(&c, &[1.0, 0.0], 1.0, &cfg);
        assert_abs_diff_eq!(after.f[0], 0.7, epsilon = 1e-15);
        assert_eq!(after.f[1], 0.0);
        // c = 1 gives a uniform gain regardless of w.
        assert_eq!(c.gain(), &[0.7, 0.7]);
        let dependent = weight_dependent_gain(&[0.3, 0.9, -0.9], 0.7, 0.2);
        assert_abs_diff_eq!(dependent[1], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(dependent[0], 0.7 * (0.2 + 0.8 / 3.0), epsilon = 1e-15);
        assert_abs_diff_eq!(dependent[2], -0.42, epsilon = 1e-15);
    }

    #[test]
    fn infer_examples() {
        let cfg = ElasticConfig::default();
        let cs = vec![
            centroid(vec![1.0, 0.0, 0.0], &cfg),
            centroid(vec![0.0, 1.0, 0.0], &cfg),
            centroid(vec![0.0, 0.0, 1.0], &cfg),
        ];
        assert_eq!(
            infer(&[2.0, 0.0, 0.0], &cs, &cfg).unwrap().argmax(),
            Some(0)
        );
        let same = vec![centroid(vec![0.4, 0.1], &cfg); 4];
        let p = infer(&[0.3, 0.7], &same, &cfg).unwrap();
        for v in p.probabilities().unwrap() {
            assert_abs_diff_eq!(*v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn hebbian_pull_raises_posterior() {
        let cfg = ElasticConfig::default();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        let mut cs: Vec<ElasticCentroid> = (0..3)
            .map(|_| centroid((0..5).map(|_| rng.random::<f64>()).collect(), &cfg))
            .collect();
        let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
        let before = infer(&x, &cs, &cfg).unwrap().probabilities().unwrap()[1];
        cs[1].hebbian_update(&x, 1.0, cfg.gamma_max, false);
        let after = infer(&x, &cs, &cfg).unwrap().probabilities().unwrap()[1];
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn empty_stream_leaves_centroids() {
        let cfg = ElasticConfig::default();
        let cs = vec![centroid(vec![1.0, 0.0], &cfg)];
        let mut ec = ElasticClusterer::new(cfg, cs.clone()).unwrap();
        let out = ec.run_stream(std::iter::empty()).unwrap();
        assert!(out.is_empty());
        assert_eq!(ec.centroids(), &cs[..]);
    }

    #[test]
    fn decreasing_timestamps_rejected() {
        let cfg = ElasticConfig::default();
        let mut ec =
            ElasticClusterer::new(cfg.clone(), vec![centroid(vec![1.0, 0.0], &cfg)]).unwrap();
        ec.observe(5.0, &[1.0, 0.0]).unwrap();
        assert!(matches!(
            ec.observe(4.0, &[1.0, 0.0]),
            Err(ElasticError::DecreasingTime { .. })
        ));
    }

    #[test]
    fn zero_input_skipped() {
        let cfg = ElasticConfig::default();
        let mut ec =
            ElasticClusterer::new(cfg.clone(), vec![centroid(vec![1.0, 0.0], &cfg)]).unwrap();
        assert_eq!(ec.observe(1.0, &[0.0, 0.0]).unwrap(), None);
        assert!(ec.centroids()[0].displacement().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_input_pulls_winner_monotonically() {
        let cfg = ElasticConfig::default();
        let cs = vec![
            centroid(vec![1.0, 0.2, 0.0, 0.1], &cfg),
            centroid(vec![0.0, 0.1, 1.0, 0.3], &cfg),
        ];
        let x = [0.5, 0.6, 0.1, 0.4];
        let mut ec = ElasticClusterer::new(cfg, cs).unwrap();
        let mut last = f64::NEG_INFINITY;
        for step in 0..50 {
            let p = ec.observe(step as f64, &x).unwrap().unwrap();
            let k = p.argmax().unwrap();
            assert_eq!(k, 0);
            let cos = mixture::cosine_similarity(&x, &ec.centroids()[k].efficacy()).unwrap();
            assert!(cos >= last - 1e-15, "step {step}: {cos} < {last}");
            last = cos;
        }
    }

    #[test]
    fn relaxation_after_stream() {
        let cfg = ElasticConfig::default();
        let cs = vec![
            centroid(vec![1.0, 0.0], &cfg),
            centroid(vec![0.0, 1.0], &cfg),
        ];
        let mut ec = ElasticClusterer::new(cfg.clone(), cs).unwrap();
        let mut peak = [0.0_f64; 2];
        for i in 0..20 {
            ec.observe(i as f64, &[1.0, 0.5]).unwrap();
            for (p, c) in peak.iter_mut().zip(ec.centroids()) {
                *p = p.max(mixture::norm(c.displacement()));
            }
        }
        let end = ec.now().unwrap();
        ec.advance_to(end + 10.0 / cfg.lambda).unwrap();
        for (p, c) in peak.iter().zip(ec.centroids()) {
            assert!(mixture::norm(c.displacement()) < 1e-4 * p);
        }
    }

    #[test]
    fn zero_gain_matches_static_inference() {
        let cfg = ElasticConfig {
            gamma_max: 0.0,
            ..ElasticConfig::default()
        };
        let rows = vec![
            vec![1.0, 0.3, 0.0],
            vec![0.1, 1.0, 0.4],
            vec![0.0, 0.2, 1.0],
        ];
        let cs: Vec<_> = rows.iter().map(|w| centroid(w.clone(), &cfg)).collect();
        let params =
            mixture::ModelParams::with_uniform_prior(ModelKind::Exponential, rows).unwrap();
        let mut ec = ElasticClusterer::new(cfg, cs).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for i in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.01).collect();
            let a = ec.observe(i as f64 * 3.0, &x).unwrap().unwrap();
            let b = params.infer(&x).unwrap();
            for (p, q) in a
                .probabilities()
                .unwrap()
                .iter()
                .zip(b.probabilities().unwrap())
            {
                assert_abs_diff_eq!(p, q, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bias_increment_normalizes() {
        let cfg = ElasticConfig {
            update_bias: true,
            ..ElasticConfig::default()
        };
        let cs = vec![
            centroid(vec![1.0, 0.0], &cfg),
            centroid(vec![0.0, 1.0], &cfg),
        ];
        let mut ec = ElasticClusterer::new(cfg, cs).unwrap();
        for i in 0..10 {
            ec.observe(i as f64, &[1.0, 0.1]).unwrap();
        }
        let b = ec.current_biases();
        let s: f64 = b.iter().map(|v| v.exp()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert!(b[0] > b[1]);

        let lin = ElasticConfig {
            update_bias: true,
            model_kind: ModelKind::Linear,
            ..ElasticConfig::default()
        };
        let cs = vec![
            ElasticCentroid::from_config(vec![1.0, 0.0], -0.5, &lin),
            ElasticCentroid::from_config(vec![0.0, 1.0], -0.5, &lin),
        ];
        let mut ec = ElasticClusterer::new(lin, cs).unwrap();
        for i in 0..10 {
            ec.observe(i as f64, &[1.0, 0.1]).unwrap();
        }
        assert!(ec.current_biases().iter().all(|b| (-1.0..=0.0).contains(b)));
    }

    #[test]
    fn bias_tracking_follows_evidence() {
        // With no evidence the tracked bias equals the resting bias.
        let cfg = ElasticConfig {
            update_bias: true,
            bias_rule: BiasRule::Tracking { beta: 1.0, f0: 1.0 },
            ..ElasticConfig::default()
        };
        let w0 = (0.5f64).ln();
        let cs = vec![
            ElasticCentroid::from_config(vec![1.0, 0.0], w0, &cfg),
            ElasticCentroid::from_config(vec![0.0, 1.0], w0, &cfg),
        ];
        let mut ec = ElasticClusterer::new(cfg, cs).unwrap();
        assert_abs_diff_eq!(ec.current_biases()[0], w0, epsilon = 1e-15);
        for i in 0..5 {
            ec.observe(i as f64, &[1.0, 0.0]).unwrap();
        }
        let b = ec.current_biases();
        // Tracked biases remain a normalized prior.
        let s: f64 = b.iter().map(|v| v.exp()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert!(b[0] > w0 && b[1] < w0);
    }

    #[test]
    fn latent_examples() {
        let cfg = LatentInputConfig {
            alpha: 0.0001,
            sigma: 1.0,
            window: 1000.0,
        };
        assert_eq!(estimate_latent_input(&[], 3, &cfg).unwrap(), vec![0.0; 3]);
        let zero_alpha = LatentInputConfig {
            alpha: 1e-300,
            ..cfg
        };
        let a = estimate_latent_input(&[(1.0, vec![1.0])], 1, &zero_alpha).unwrap()[0];
        let b = estimate_latent_input(&[(4.0, vec![1.0])], 1, &zero_alpha).unwrap()[0];
        assert_abs_diff_eq!(a / b, 2.0, epsilon = 1e-12);
        assert!(matches!(
            estimate_latent_input(&[(0.0, vec![1.0])], 1, &cfg),
            Err(ElasticError::NonPositiveAge(_))
        ));
        let old = estimate_latent_input(&[(2000.0, vec![1.0])], 1, &cfg).unwrap();
        assert_eq!(old, vec![0.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn decay_is_a_semigroup(
            f in prop::collection::vec(-5.0..5.0f64, 1..8),
            dt1 in 0.0..500.0f64,
            dt2 in 0.0..500.0f64,
            lambda in 1e-4..1.0f64,
        ) {
            let cfg = ElasticConfig { lambda, ..ElasticConfig::default() };
            let mut c = centroid(vec![0.5; f.len()], &cfg);
            c.f = f;
            c.f0 = 0.3;
            let two = decay_step(&decay_step(&c, dt1, lambda).unwrap(), dt2, lambda).unwrap();
            let one = decay_step(&c, dt1 + dt2, lambda).unwrap();
            for (a, b) in two.f.iter().zip(&one.f) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!((two.f0 - one.f0).abs() < 1e-12);
        }

        #[test]
        fn relaxation_law_over_decades(exp10 in -2.0..3.0f64) {
            // lambda * t spans 1e-2 .. 1e3
            let lambda = 1.0 / 300.0;
            let t = 10f64.powf(exp10) / lambda;
            let cfg = ElasticConfig::default();
            let mut c = centroid(vec![1.0, 1.0], &cfg);
            c.f = vec![0.9, -0.4];
            let d = decay_step(&c, t, lambda).unwrap();
            for (a, b) in d.f.iter().zip(&c.f) {
                let expected = b * (-lambda * t).exp();
                if expected.abs() > 1e-300 {
                    prop_assert!(((a - expected) / expected).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn efficacy_is_sum(
            w in prop::collection::vec(-1.0..1.0f64, 4),
            xs in prop::collection::vec(prop::collection::vec(0.01..1.0f64, 4), 1..10),
        ) {
            let cfg = ElasticConfig::default();
            let mut ec = ElasticClusterer::new(cfg.clone(), vec![centroid(w.clone(), &cfg)]).unwrap();
            for (i, x) in xs.iter().enumerate() {
                ec.observe(i as f64 * 7.0, x).unwrap();
                let c = &ec.centroids()[0];
                for j in 0..4 {
                    prop_assert_eq!(c.efficacy()[j], c.resting()[j] + c.displacement()[j]);
                }
            }
        }

        #[test]
        fn same_instant_updates_commute(
            x in prop::collection::vec(0.01..1.0f64, 3),
            order in prop::bool::ANY,
        ) {
            let cfg = ElasticConfig::default();
            let cs = vec![centroid(vec![1.0, 0.0, 0.2], &cfg), centroid(vec![0.1, 1.0, 0.0], &cfg)];
            let q = infer(&x, &cs, &cfg).unwrap();
            let q = q.probabilities().unwrap();
            let mut a = cs.clone();
            let idx: Vec<usize> = if order { vec![0, 1] } else { vec![1, 0] };
            for &k in &idx {
                a[k].hebbian_update(&x, q[k], cfg.gamma_max, false);
            }
            let mut b = cs.clone();
            for k in [0, 1] {
                b[k].hebbian_update(&x, q[k], cfg.gamma_max, false);
            }
            prop_assert_eq!(a, b);
        }

        #[test]
        fn substeps_match_event_decay(
            gaps in prop::collection::vec(1usize..20, 1..15),
            substep in prop::sample::select(vec![0.5f64, 1.0, 2.5]),
        ) {
            let cfg = ElasticConfig::default();
            let cs = vec![centroid(vec![1.0, 0.0, 0.3], &cfg), centroid(vec![0.0, 1.0, 0.3], &cfg)];
            let mut by_event = ElasticClusterer::new(cfg.clone(), cs.clone()).unwrap();
            let mut by_step = ElasticClusterer::new(cfg, cs).unwrap();
            let mut t = 0.0;
            let mut clock = 0.0;
            by_step.advance_to(0.0).unwrap();
            for (i, g) in gaps.iter().enumerate() {
                t += *g as f64 * substep;
                let x = [1.0, (i % 3) as f64 * 0.4, 0.2];
                while clock + substep <= t + 1e-9 {
                    clock += substep;
                    by_step.advance_to(clock).unwrap();
                }
                let a = by_event.observe(t, &x).unwrap().unwrap();
                let b = by_step.observe(clock, &x).unwrap().unwrap();
                for (p, q) in a.probabilities().unwrap().iter().zip(b.probabilities().unwrap()) {
                    prop_assert!((p - q).abs() < 1e-6);
                }
            }
            for (c1, c2) in by_event.centroids().iter().zip(by_step.centroids()) {
                for (a, b) in c1.displacement().iter().zip(c2.displacement()) {
                    prop_assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }
}

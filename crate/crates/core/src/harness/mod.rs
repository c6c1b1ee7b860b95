//! Training, labeling and evaluation protocols.

pub mod metrics;
pub mod trajectory;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::datasets::{Frame, MnistSet, NOISE_LABEL};
use crate::snn::{Network, SimError, StStdpParams};

pub use metrics::{Metrics, OCCLUSION_BINS};
pub use trajectory::{export_trajectory, top_components, Trajectory, TrajectoryPoint};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("image {index} gave fewer than {min_spikes} spikes after {retries} retries")]
    RetryCap {
        index: usize,
        retries: u32,
        min_spikes: u32,
    },
    #[error("label map covers {labels} neurons, network has {neurons}")]
    LabelShape { labels: usize, neurons: usize },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("invalid protocol: {0}")]
    Protocol(String),
}

/// How ensemble responses are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VoteRule {
    /// Spike count divided by ensemble size.
    #[default]
    Mean,
    /// Raw spike count summed over the ensemble.
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub present_ms: f64,
    pub rest_ms: f64,
    /// Presentations with fewer output spikes are repeated at a higher rate.
    pub min_spikes: u32,
    /// Input rate per unit of pixel intensity (Hz).
    pub rate_scale: f64,
    /// Added to `rate_scale` on every repetition.
    pub retry_rate_step: f64,
    pub max_retries: u32,
    pub epochs: u32,
    /// Duration of one OMNIST frame (ms).
    pub frame_ms: f64,
    /// OMNIST frames with at most this many output spikes are labeled noise.
    pub noise_spike_threshold: u32,
    pub vote: VoteRule,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            present_ms: 350.0,
            rest_ms: 150.0,
            min_spikes: 5,
            rate_scale: 0.25,
            retry_rate_step: 0.125,
            max_retries: 40,
            epochs: 1,
            frame_ms: 350.0,
            noise_spike_threshold: 0,
            vote: VoteRule::Mean,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.present_ms > 0.0 && self.rest_ms > 0.0 && self.frame_ms > 0.0) {
            return Err(HarnessError::Protocol("durations must be positive".into()));
        }
        if !(self.rate_scale > 0.0 && self.retry_rate_step >= 0.0) {
            return Err(HarnessError::Protocol("rates must be positive".into()));
        }
        Ok(())
    }
}

/// Neuron to digit assignment; `None` marks neurons that never fired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap(pub Vec<Option<u8>>);

impl LabelMap {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labeled(&self) -> usize {
        self.0.iter().filter(|l| l.is_some()).count()
    }

    /// Class with the strongest ensemble response, or `None` when no labeled
    /// neuron fired. Ties go to the lowest digit.
    pub fn vote(&self, counts: &[u32], rule: VoteRule) -> Option<u8> {
        let mut total = [0.0f64; 10];
        let mut size = [0u32; 10];
        for (l, &c) in self.0.iter().zip(counts) {
            if let Some(d) = l {
                total[*d as usize] += c as f64;
                size[*d as usize] += 1;
            }
        }
        let mut best: Option<(u8, f64)> = None;
        for d in 0..10 {
            if size[d] == 0 || total[d] == 0.0 {
                continue;
            }
            let score = match rule {
                VoteRule::Sum => total[d],
                VoteRule::Mean => total[d] / size[d] as f64,
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((d as u8, score));
            }
        }
        best.map(|(d, _)| d)
    }
}

/// Presents one image with rate retries, then rests. Returns the counts of the
/// accepted presentation.
fn present_with_retries(
    net: &mut Network,
    image: &[u8],
    index: usize,
    p: &Protocol,
) -> Result<Vec<u32>, HarnessError> {
    let mut rate = p.rate_scale;
    for retry in 0..=p.max_retries {
        let counts = net.present(image, p.present_ms, rate)?;
        net.rest(p.rest_ms)?;
        if counts.iter().sum::<u32>() >= p.min_spikes {
            return Ok(counts);
        }
        if retry < p.max_retries {
            rate += p.retry_rate_step;
        }
    }
    Err(HarnessError::RetryCap {
        index,
        retries: p.max_retries,
        min_spikes: p.min_spikes,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub presentations: usize,
    pub retries: usize,
    pub runtime_s: f64,
}

/// One unsupervised pass (per epoch) over `set` with triplet STDP.
pub fn train_unsupervised(
    net: &mut Network,
    set: &MnistSet,
    p: &Protocol,
    mut progress: Option<&mut dyn FnMut(usize)>,
) -> Result<TrainStats, HarnessError> {
    p.validate()?;
    let start = std::time::Instant::now();
    net.set_training();
    let mut stats = TrainStats::default();
    for _ in 0..p.epochs {
        for i in 0..set.len() {
            let mut rate = p.rate_scale;
            let mut retry = 0;
            loop {
                let counts = net.present(set.image(i), p.present_ms, rate)?;
                net.rest(p.rest_ms)?;
                stats.presentations += 1;
                if counts.iter().sum::<u32>() >= p.min_spikes {
                    break;
                }
                if retry == p.max_retries {
                    return Err(HarnessError::RetryCap {
                        index: i,
                        retries: retry,
                        min_spikes: p.min_spikes,
                    });
                }
                retry += 1;
                stats.retries += 1;
                rate += p.retry_rate_step;
            }
            if let Some(f) = progress.as_deref_mut() {
                f(i + 1);
            }
        }
    }
    net.set_training();
    stats.runtime_s = start.elapsed().as_secs_f64();
    Ok(stats)
}

/// Cumulative spike counts per neuron and digit over one frozen pass.
pub fn response_counts(
    net: &mut Network,
    set: &MnistSet,
    p: &Protocol,
    mut progress: Option<&mut dyn FnMut(usize)>,
) -> Result<Vec<[u64; 10]>, HarnessError> {
    p.validate()?;
    net.set_inference(None)?;
    let mut acc = vec![[0u64; 10]; net.params().n_exc];
    for i in 0..set.len() {
        let counts = present_with_retries(net, set.image(i), i, p)?;
        let d = set.labels[i] as usize;
        for (a, &c) in acc.iter_mut().zip(&counts) {
            a[d] += c as u64;
        }
        if let Some(f) = progress.as_deref_mut() {
            f(i + 1);
        }
    }
    Ok(acc)
}

/// Label of each neuron: the digit with the largest cumulative count, lowest
/// digit on ties, `None` for silent neurons.
pub fn labels_from_counts(acc: &[[u64; 10]]) -> LabelMap {
    LabelMap(
        acc.iter()
            .map(|row| {
                let mut best = 0;
                for d in 1..10 {
                    if row[d] > row[best] {
                        best = d;
                    }
                }
                (row[best] > 0).then_some(best as u8)
            })
            .collect(),
    )
}

pub fn assign_labels(
    net: &mut Network,
    set: &MnistSet,
    p: &Protocol,
    progress: Option<&mut dyn FnMut(usize)>,
) -> Result<LabelMap, HarnessError> {
    Ok(labels_from_counts(&response_counts(net, set, p, progress)?))
}

fn check_labels(net: &Network, labels: &LabelMap) -> Result<(), HarnessError> {
    if labels.len() != net.params().n_exc {
        return Err(HarnessError::LabelShape {
            labels: labels.len(),
            neurons: net.params().n_exc,
        });
    }
    Ok(())
}

/// MNIST evaluation with frozen weights and thresholds. `st_stdp` is normally
/// `None`; F then stays zero.
pub fn eval_mnist(
    net: &mut Network,
    labels: &LabelMap,
    set: &MnistSet,
    p: &Protocol,
    st_stdp: Option<StStdpParams>,
    mut progress: Option<&mut dyn FnMut(usize)>,
) -> Result<Metrics, HarnessError> {
    p.validate()?;
    check_labels(net, labels)?;
    let start = std::time::Instant::now();
    net.set_inference(st_stdp)?;
    let mut m = Metrics::new();
    for i in 0..set.len() {
        let counts = present_with_retries(net, set.image(i), i, p)?;
        let pred = labels.vote(&counts, p.vote).unwrap_or(NOISE_LABEL);
        m.record(set.labels[i], pred, Some(0));
        if let Some(f) = progress.as_deref_mut() {
            f(i + 1);
        }
    }
    m.finish(start.elapsed().as_secs_f64());
    Ok(m)
}

/// Streams OMNIST frames back to back (no rest, no retries). F starts at zero
/// and carries over between frames.
pub fn eval_omnist(
    net: &mut Network,
    labels: &LabelMap,
    frames: &[Frame],
    p: &Protocol,
    st_stdp: Option<StStdpParams>,
    mut progress: Option<&mut dyn FnMut(usize)>,
) -> Result<Metrics, HarnessError> {
    p.validate()?;
    check_labels(net, labels)?;
    let start = std::time::Instant::now();
    net.set_inference(st_stdp)?;
    net.reset_dynamics();
    let mut m = Metrics::new();
    for (i, f) in frames.iter().enumerate() {
        let counts = net.present(&f.pixels, p.frame_ms, p.rate_scale)?;
        let total: u32 = counts.iter().sum();
        let pred = if total <= p.noise_spike_threshold {
            NOISE_LABEL
        } else {
            labels.vote(&counts, p.vote).unwrap_or(NOISE_LABEL)
        };
        m.record(f.label, pred, (!f.is_noise()).then_some(f.occl_depth));
        if let Some(cb) = progress.as_deref_mut() {
            cb(i + 1);
        }
    }
    m.finish(start.elapsed().as_secs_f64());
    Ok(m)
}

/// SHA-256 over the resting weights, short-term components and thresholds.
pub fn state_digest(net: &Network) -> String {
    let mut h = Sha256::new();
    for x in net.weights() {
        h.update(x.to_le_bytes());
    }
    for x in net.synapses().short_term_matrix() {
        h.update(x.to_le_bytes());
    }
    for x in net.thetas() {
        h.update(x.to_le_bytes());
    }
    hex::encode(h.finalize())
}

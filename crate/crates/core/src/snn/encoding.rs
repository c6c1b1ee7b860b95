//! Poisson rate coding of 8-bit frames.
//!
//! Pixel `j` with intensity `I_j` fires as a Bernoulli process with per-step
//! probability `p_j = rate_scale * I_j * dt / 1000`. Instead of drawing one
//! Bernoulli variate per pixel per step, the encoder draws the geometric gap to
//! each pixel's next spike, which yields the same process.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use super::{SimError, SimRng};

/// Per-step spike indices of a rate-coded presentation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    pub steps: Vec<Vec<u16>>,
}

impl SpikeRaster {
    pub fn total_spikes(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn count_for(&self, input: u16) -> usize {
        self.steps.iter().filter(|s| s.contains(&input)).count()
    }
}

fn spike_probability(intensity: u8, rate_scale: f64, dt: f64) -> f64 {
    rate_scale * intensity as f64 * dt / 1000.0
}

/// Checks that the brightest pixel stays a valid Bernoulli probability.
pub fn check_rate(rate_scale: f64, dt: f64) -> Result<(), SimError> {
    let p = spike_probability(255, rate_scale, dt);
    if !(rate_scale >= 0.0) || p > 1.0 {
        return Err(SimError::RateTooHigh {
            rate_hz: rate_scale * 255.0,
            dt,
        });
    }
    Ok(())
}

/// Number of steps until the next success of a Bernoulli(p) process (>= 1).
fn geometric_gap(p: f64, rng: &mut SimRng) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let gap = (u.ln() / (1.0 - p).ln()).ceil();
    if gap < 1.0 {
        1
    } else if gap > u64::MAX as f64 / 2.0 {
        u64::MAX / 2
    } else {
        gap as u64
    }
}

/// Streaming Poisson source for one frame at a time.
#[derive(Debug, Clone, Default)]
pub struct PoissonSource {
    probs: Vec<f64>,
    queue: BinaryHeap<Reverse<(u64, u16)>>,
    step: u64,
    buf: Vec<u16>,
}

impl PoissonSource {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a new presentation of `frame`. Step counting restarts at zero.
    pub fn load(
        &mut self,
        frame: &[u8],
        rate_scale: f64,
        dt: f64,
        rng: &mut SimRng,
    ) -> Result<(), SimError> {
        check_rate(rate_scale, dt)?;
        self.probs.clear();
        self.probs
            .extend(frame.iter().map(|&i| spike_probability(i, rate_scale, dt)));
        self.queue.clear();
        self.step = 0;
        for (j, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                // first spike lands on step gap - 1
                let at = geometric_gap(p, rng) - 1;
                self.queue.push(Reverse((at, j as u16)));
            }
        }
        Ok(())
    }

    /// Silences the source (used for resting phases).
    pub fn clear(&mut self) {
        self.probs.clear();
        self.queue.clear();
        self.step = 0;
    }

    /// Inputs spiking in the current step; advances to the next step.
    pub fn next_step(&mut self, rng: &mut SimRng) -> &[u16] {
        self.buf.clear();
        while let Some(&Reverse((at, j))) = self.queue.peek() {
            if at != self.step {
                break;
            }
            self.queue.pop();
            self.buf.push(j);
        }
        // Sorted output keeps the raster independent of heap internals.
        self.buf.sort_unstable();
        for &j in &self.buf {
            let p = self.probs[j as usize];
            let at = self.step + geometric_gap(p, rng);
            self.queue.push(Reverse((at, j)));
        }
        self.step += 1;
        &self.buf
    }
}

/// Encodes `frame` as a raster of `duration / dt` steps.
pub fn poisson_encode(
    frame: &[u8],
    duration: f64,
    dt: f64,
    rate_scale: f64,
    rng: &mut SimRng,
) -> Result<SpikeRaster, SimError> {
    if !(dt > 0.0) || !(duration >= 0.0) {
        return Err(SimError::InvalidParams(format!(
            "bad duration {duration} / dt {dt}"
        )));
    }
    let n_steps = (duration / dt).round() as usize;
    let mut src = PoissonSource::new();
    src.load(frame, rate_scale, dt, rng)?;
    let steps = (0..n_steps).map(|_| src.next_step(rng).to_vec()).collect();
    Ok(SpikeRaster { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn dark_pixels_never_fire() {
        let mut rng = SimRng::seed_from_u64(1);
        let frame = [0u8; 16];
        let r = poisson_encode(&frame, 10_000.0, 0.5, 0.25, &mut rng).unwrap();
        assert_eq!(r.total_spikes(), 0);
        assert_eq!(r.steps.len(), 20_000);
    }

    #[test]
    fn same_seed_same_raster() {
        let frame: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        let a = poisson_encode(&frame, 350.0, 0.5, 0.25, &mut SimRng::seed_from_u64(9)).unwrap();
        let b = poisson_encode(&frame, 350.0, 0.5, 0.25, &mut SimRng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let c = poisson_encode(&frame, 350.0, 0.5, 0.25, &mut SimRng::seed_from_u64(10)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_invalid_rate() {
        let mut rng = SimRng::seed_from_u64(1);
        // 255 * 8 Hz * 0.5 ms = 1.02 > 1
        assert!(matches!(
            poisson_encode(&[255], 1.0, 0.5, 8.0, &mut rng),
            Err(SimError::RateTooHigh { .. })
        ));
        assert!(poisson_encode(&[255], 1.0, 0.5, 7.8, &mut rng).is_ok());
    }

    #[test]
    fn saturated_pixel_fires_every_step() {
        let mut rng = SimRng::seed_from_u64(1);
        let dt = 0.5;
        let scale = 1000.0 / dt / 255.0;
        let r = poisson_encode(&[255, 0], 50.0, dt, scale, &mut rng).unwrap();
        assert!(r.steps.iter().all(|s| s == &vec![0u16]));
    }

    #[test]
    fn bernoulli_step_statistics() {
        // Per-step firing frequency matches p for a single moderate pixel.
        let mut rng = SimRng::seed_from_u64(5);
        let dt = 0.5;
        let r = poisson_encode(&[200], 400_000.0, dt, 1.0, &mut rng).unwrap();
        let p = 200.0 * dt / 1000.0;
        let n = r.steps.len() as f64;
        let k = r.total_spikes() as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        assert!((k - n * p).abs() < 4.0 * sigma, "{k} vs {}", n * p);
        // No step carries more than one spike from the same pixel.
        assert!(r.steps.iter().all(|s| s.len() <= 1));
    }
}

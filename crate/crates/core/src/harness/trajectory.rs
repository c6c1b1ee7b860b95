//! Efficacy trajectory of one neuron under short-term STDP, projected on the
//! two leading principal components of inputs and efficacy snapshots.
//!
//! All vectors are scaled to unit length before the projection, so the plot
//! shows directions, which is what the cosine similarity sees.

use std::io::Write;

use serde::Serialize;

use super::{HarnessError, Protocol};
use crate::datasets::Frame;
use crate::mixture::norm;
use crate::snn::{Network, StStdpParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub pc1: f64,
    pub pc2: f64,
    pub is_input_point: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample times (ms) and the probe's efficacy column at each.
    pub samples: Vec<(f64, Vec<f64>)>,
    /// Frame onset times (ms) and pixels.
    pub inputs: Vec<(f64, Vec<f64>)>,
    pub points: Vec<TrajectoryPoint>,
    pub eigenvalues: [f64; 2],
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "t,pc1,pc2,is_input_point")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", p.t, p.pc1, p.pc2, p.is_input_point as u8)?;
        }
        w.flush()
    }
}

/// Leading `k` eigenpairs of the symmetric `d x d` matrix `a` (row-major) by
/// power iteration with deflation. Stops when the Rayleigh quotient changes
/// by less than `tol` relative to its value.
pub fn symmetric_top_eigen(a: &[f64], d: usize, k: usize, tol: f64) -> Vec<(f64, Vec<f64>)> {
    let mut m = a.to_vec();
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        // deterministic start, not orthogonal to generic eigenvectors
        let mut v: Vec<f64> = (0..d)
            .map(|i| 1.0 + ((i * 7919 + c * 104_729) % 1013) as f64 / 1013.0)
            .collect();
        let n0 = norm(&v);
        v.iter_mut().for_each(|x| *x /= n0);
        let mut lambda = 0.0;
        let mut w = vec![0.0; d];
        for _ in 0..100_000 {
            for (i, wi) in w.iter_mut().enumerate() {
                *wi = m[i * d..(i + 1) * d]
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| x * y)
                    .sum();
            }
            let next: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
            let nw = norm(&w);
            if nw == 0.0 {
                lambda = 0.0;
                break;
            }
            v.iter_mut().zip(&w).for_each(|(x, y)| *x = y / nw);
            let done = (next - lambda).abs() <= tol * next.abs().max(f64::MIN_POSITIVE);
            lambda = next;
            if done {
                break;
            }
        }
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

/// Mean and leading `k` principal axes of `points`.
pub fn top_components(
    points: &[Vec<f64>],
    k: usize,
) -> Result<(Vec<f64>, Vec<(f64, Vec<f64>)>), HarnessError> {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    if n < 2 || d < k {
        return Err(HarnessError::Degenerate(format!(
            "{n} points of dimension {d}"
        )));
    }
    let mut mean = vec![0.0; d];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x / n as f64);
    }
    let mut cov = vec![0.0; d * d];
    let mut c = vec![0.0; d];
    for p in points {
        c.iter_mut()
            .zip(p.iter().zip(&mean))
            .for_each(|(ci, (x, m))| *ci = x - m);
        for i in 0..d {
            if c[i] == 0.0 {
                continue;
            }
            let row = &mut cov[i * d..(i + 1) * d];
            for j in 0..d {
                row[j] += c[i] * c[j];
            }
        }
    }
    cov.iter_mut().for_each(|x| *x /= (n - 1) as f64);
    let eig = symmetric_top_eigen(&cov, d, k, 1e-12);
    let top = eig[0].0;
    if !(top > 0.0) || eig.iter().any(|(l, _)| !(*l > 1e-12 * top)) {
        return Err(HarnessError::Degenerate(
            "covariance has rank below the requested components".into(),
        ));
    }
    Ok((mean, eig))
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// Streams `frames` (no rest) with short-term STDP on, then `tail_ms` of
/// silence, sampling the probe's efficacy column every `sample_ms`.
pub fn export_trajectory(
    net: &mut Network,
    probe: usize,
    frames: &[Frame],
    st_stdp: StStdpParams,
    p: &Protocol,
    sample_ms: f64,
    tail_ms: f64,
) -> Result<Trajectory, HarnessError> {
    if probe >= net.params().n_exc {
        return Err(HarnessError::Protocol(format!(
            "probe neuron {probe} out of range"
        )));
    }
    if !(sample_ms > 0.0) {
        return Err(HarnessError::Protocol(
            "sample interval must be positive".into(),
        ));
    }
    net.set_inference(Some(st_stdp))?;
    net.reset_dynamics();
    let t0 = net.time();
    let mut samples = vec![(0.0, net.synapses().efficacy_column(probe))];
    let mut next = sample_ms;
    let mut observe = |n: &Network| {
        let t = n.time() - t0;
        if t >= next - 1e-9 {
            samples.push((t, n.synapses().efficacy_column(probe)));
            next += sample_ms;
        }
    };
    let mut inputs = Vec::with_capacity(frames.len());
    for f in frames {
        inputs.push((
            net.time() - t0,
            f.pixels.iter().map(|&x| x as f64).collect::<Vec<f64>>(),
        ));
        net.present_observed(&f.pixels, p.frame_ms, p.rate_scale, &mut observe)?;
    }
    net.rest_observed(tail_ms, &mut observe)?;

    let pooled: Vec<Vec<f64>> = inputs
        .iter()
        .map(|(_, x)| unit(x))
        .chain(samples.iter().map(|(_, g)| unit(g)))
        .collect();
    let (mean, eig) = top_components(&pooled, 2)?;
    let project = |x: &[f64], axis: &[f64]| -> f64 {
        x.iter()
            .zip(&mean)
            .zip(axis)
            .map(|((a, m), v)| (a - m) * v)
            .sum()
    };
    let mut points = Vec::with_capacity(pooled.len());
    for (i, x) in pooled.iter().enumerate() {
        let (t, is_input) = if i < inputs.len() {
            (inputs[i].0, true)
        } else {
            (samples[i - inputs.len()].0, false)
        };
        points.push(TrajectoryPoint {
            t,
            pc1: project(x, &eig[0].1),
            pc2: project(x, &eig[1].1),
            is_input_point: is_input,
        });
    }
    Ok(Trajectory {
        samples,
        inputs,
        points,
        eigenvalues: [eig[0].0, eig[1].0],
    })
}

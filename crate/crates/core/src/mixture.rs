//! Mixture models over cosine similarity and their posterior inference rules.
//!
//! Two likelihood families are supported. The exponential mixture scores
//! component `k` as `exp(u_k + g0_k)` and its posterior is a softmax. The
//! linear mixture scores it as `max(u_k + g0_k, 0) / 2` and its posterior is
//! the rectified ratio, which is undefined when every term rectifies to zero
//! (reported as [`Posterior::NoWinner`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("prior probability must lie in (0, 1], got {0}")]
    InvalidPrior(f64),
    #[error("component index {index} out of range for {count} components")]
    ComponentOutOfRange { index: usize, count: usize },
    #[error("parameter invariant violated: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Exponential,
    Linear,
}

/// How the linear-model bias is recovered from a prior probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinearBias {
    /// Bisection inverse of `P = sqrt(1 - g0^2) + g0 * acos(-g0)`.
    #[default]
    Exact,
    /// The straight line `g0 = P - 1`.
    Approx,
}

/// Result of a posterior inference.
#[derive(Debug, Clone, PartialEq)]
pub enum Posterior {
    Distribution(Vec<f64>),
    /// Linear model only: every rectified score was zero.
    NoWinner,
}

impl Posterior {
    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            Posterior::Distribution(p) => Some(p),
            Posterior::NoWinner => None,
        }
    }

    /// Index of the most probable component; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        self.probabilities().and_then(argmax)
    }
}

pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine of the angle between `x` and `g`.
pub fn cosine_similarity(x: &[f64], g: &[f64]) -> Result<f64, MixtureError> {
    if x.len() != g.len() {
        return Err(MixtureError::LengthMismatch(x.len(), g.len()));
    }
    let nx = norm(x);
    let ng = norm(g);
    if nx == 0.0 || ng == 0.0 {
        return Err(MixtureError::ZeroNorm);
    }
    Ok((dot(x, g) / (nx * ng)).clamp(-1.0, 1.0))
}

/// Softmax over `u_k + g0_k`.
pub fn posterior_exponential(u: &[f64], g0: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), g0.len());
    let scores: Vec<f64> = u.iter().zip(g0).map(|(a, b)| a + b).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Rectified ratio `max(u_k + g0_k, 0) / sum_l max(u_l + g0_l, 0)`.
pub fn posterior_linear(u: &[f64], g0: &[f64]) -> Posterior {
    debug_assert_eq!(u.len(), g0.len());
    let rect: Vec<f64> = u.iter().zip(g0).map(|(a, b)| (a + b).max(0.0)).collect();
    let total: f64 = rect.iter().sum();
    if total <= 0.0 {
        return Posterior::NoWinner;
    }
    Posterior::Distribution(rect.into_iter().map(|r| r / total).collect())
}

pub fn posterior(kind: ModelKind, u: &[f64], g0: &[f64]) -> Posterior {
    match kind {
        ModelKind::Exponential => Posterior::Distribution(posterior_exponential(u, g0)),
        ModelKind::Linear => posterior_linear(u, g0),
    }
}

/// Prior probability implied by a linear-model bias `g0 in [-1, 0]`.
pub fn linear_prior_from_bias(g0: f64) -> f64 {
    let g0 = g0.clamp(-1.0, 0.0);
    (1.0 - g0 * g0).max(0.0).sqrt() + g0 * (-g0).acos()
}

/// Bias value that encodes prior probability `p` for the given model.
pub fn bias_from_prior(p: f64, kind: ModelKind, linear: LinearBias) -> Result<f64, MixtureError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(MixtureError::InvalidPrior(p));
    }
    Ok(match (kind, linear) {
        (ModelKind::Exponential, _) => p.ln(),
        (ModelKind::Linear, LinearBias::Approx) => p - 1.0,
        (ModelKind::Linear, LinearBias::Exact) => {
            // The forward map is increasing on [-1, 0], from 0 to 1.
            let (mut lo, mut hi) = (-1.0_f64, 0.0_f64);
            while hi - lo >= 1e-12 {
                let mid = 0.5 * (lo + hi);
                if linear_prior_from_bias(mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    })
}

/// Joint likelihood of `x` and component `k`.
pub fn joint_likelihood(x: &[f64], params: &ModelParams, k: usize) -> Result<f64, MixtureError> {
    if k >= params.components() {
        return Err(MixtureError::ComponentOutOfRange {
            index: k,
            count: params.components(),
        });
    }
    let u = cosine_similarity(x, params.row(k))?;
    let s = u + params.g0[k];
    Ok(match params.kind {
        ModelKind::Exponential => s.exp(),
        ModelKind::Linear => s.max(0.0) / 2.0,
    })
}

/// Parameters of a K-component mixture over n features.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    n: usize,
    g: Vec<f64>,
    pub g0: Vec<f64>,
}

impl ModelParams {
    /// Builds parameters from raw rows, normalizing each row to unit length.
    pub fn new(kind: ModelKind, rows: Vec<Vec<f64>>, g0: Vec<f64>) -> Result<Self, MixtureError> {
        if rows.len() != g0.len() {
            return Err(MixtureError::LengthMismatch(rows.len(), g0.len()));
        }
        let n = rows.first().map_or(0, Vec::len);
        let mut g = Vec::with_capacity(rows.len() * n);
        for row in &rows {
            if row.len() != n {
                return Err(MixtureError::LengthMismatch(row.len(), n));
            }
            let r = norm(row);
            if r == 0.0 {
                return Err(MixtureError::ZeroNorm);
            }
            g.extend(row.iter().map(|v| v / r));
        }
        let params = Self { kind, n, g, g0 };
        params.validate()?;
        Ok(params)
    }

    /// Uniform priors for `rows.len()` components.
    pub fn with_uniform_prior(kind: ModelKind, rows: Vec<Vec<f64>>) -> Result<Self, MixtureError> {
        let k = rows.len();
        let b = bias_from_prior(1.0 / k.max(1) as f64, kind, LinearBias::Exact)?;
        Self::new(kind, rows, vec![b; k])
    }

    pub fn validate(&self) -> Result<(), MixtureError> {
        for k in 0..self.components() {
            let r = norm(self.row(k));
            if (r - 1.0).abs() > 1e-9 {
                return Err(MixtureError::InvalidParams(format!("row {k} has norm {r}")));
            }
        }
        match self.kind {
            ModelKind::Exponential => {
                let s: f64 = self.g0.iter().map(|b| b.exp()).sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(MixtureError::InvalidParams(format!(
                        "sum of exp(g0) is {s}"
                    )));
                }
            }
            ModelKind::Linear => {
                if let Some(b) = self.g0.iter().find(|b| !(-1.0..=0.0).contains(*b)) {
                    return Err(MixtureError::InvalidParams(format!(
                        "linear bias {b} outside [-1, 0]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.g0.len()
    }

    pub fn features(&self) -> usize {
        self.n
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.g[k * self.n..(k + 1) * self.n]
    }

    /// Cosine similarity of `x` to every component.
    pub fn similarities(&self, x: &[f64]) -> Result<Vec<f64>, MixtureError> {
        (0..self.components())
            .map(|k| cosine_similarity(x, self.row(k)))
            .collect()
    }

    pub fn infer(&self, x: &[f64]) -> Result<Posterior, MixtureError> {
        let u = self.similarities(x)?;
        Ok(posterior(self.kind, &u, &self.g0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_eq!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]),
            Err(MixtureError::ZeroNorm)
        );
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 1.0]),
            Err(MixtureError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn softmax_examples() {
        let p = posterior_exponential(&[0.3; 5], &[-1.2; 5]);
        for v in p {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-15);
        }
        let p = posterior_exponential(&[1.0, 0.0], &[0.0, 0.0]);
        assert_abs_diff_eq!(p[0], 0.731_059, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 0.268_941, epsilon = 1e-6);
    }

    #[test]
    fn linear_examples() {
        assert_eq!(
            posterior_linear(&[0.5, 0.5, 0.0], &[0.0; 3]),
            Posterior::Distribution(vec![0.5, 0.5, 0.0])
        );
        assert_eq!(
            posterior_linear(&[-0.1, 0.2, 0.0], &[-0.5, -0.2, 0.0]),
            Posterior::NoWinner
        );
        let Posterior::Distribution(p) = posterior_linear(&[0.3, 0.1, 0.0], &[0.0; 3]) else {
            panic!("expected a distribution");
        };
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn bias_examples() {
        assert_eq!(
            bias_from_prior(1.0, ModelKind::Exponential, LinearBias::Exact).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            bias_from_prior(1.0, ModelKind::Linear, LinearBias::Exact).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            bias_from_prior(0.25, ModelKind::Linear, LinearBias::Approx).unwrap(),
            -0.75
        );
        assert!(bias_from_prior(0.0, ModelKind::Exponential, LinearBias::Exact).is_err());
        assert!(bias_from_prior(1.5, ModelKind::Linear, LinearBias::Exact).is_err());
        // Endpoints of the forward map.
        assert_abs_diff_eq!(linear_prior_from_bias(-1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(linear_prior_from_bias(0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn joint_likelihood_examples() {
        let exp =
            ModelParams::new(ModelKind::Exponential, vec![vec![1.0, 0.0]], vec![0.0]).unwrap();
        // u = 0 (orthogonal input), g0 = 0.
        assert_abs_diff_eq!(joint_likelihood(&[0.0, 2.0], &exp, 0).unwrap(), 1.0);
        let lin = ModelParams::new(
            ModelKind::Linear,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, -0.5],
        )
        .unwrap();
        assert_abs_diff_eq!(joint_likelihood(&[3.0, 0.0], &lin, 0).unwrap(), 0.5);
        assert_eq!(joint_likelihood(&[3.0, 0.0], &lin, 1).unwrap(), 0.0);
        assert_eq!(
            joint_likelihood(&[0.0, 0.0], &lin, 0),
            Err(MixtureError::ZeroNorm)
        );
        assert!(joint_likelihood(&[1.0, 0.0], &lin, 2).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(
            ModelKind::Exponential,
            vec![vec![1.0], vec![1.0]],
            vec![0.0, 0.0]
        )
        .is_err());
        assert!(ModelParams::new(ModelKind::Linear, vec![vec![1.0]], vec![0.5]).is_err());
        let p = ModelParams::with_uniform_prior(
            ModelKind::Exponential,
            vec![vec![3.0, 4.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert_abs_diff_eq!(p.row(0)[0], 0.6, epsilon = 1e-15);
        assert_eq!(p.infer(&[1.0, 0.0]).unwrap().argmax(), Some(1));
    }

    fn finite_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=64).prop_flat_map(|k| {
            (
                prop::collection::vec(-50.0..50.0f64, k),
                prop::collection::vec(-50.0..50.0f64, k),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn softmax_normalized_and_monotone((u, g0) in finite_pairs()) {
            let p = posterior_exponential(&u, &g0);
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            let scores: Vec<f64> = u.iter().zip(&g0).map(|(a, b)| a + b).collect();
            let best = argmax(&scores).unwrap();
            prop_assert!((p[best] - p[argmax(&p).unwrap()]).abs() == 0.0);
        }

        #[test]
        fn softmax_shift_invariant((u, g0) in finite_pairs(), alpha in -20.0..20.0f64) {
            let p = posterior_exponential(&u, &g0);
            let shifted: Vec<f64> = u.iter().map(|v| v + alpha).collect();
            let q = posterior_exponential(&shifted, &g0);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn linear_support((u, g0) in finite_pairs()) {
            match posterior_linear(&u, &g0) {
                Posterior::Distribution(p) => {
                    let s: f64 = p.iter().sum();
                    prop_assert!((s - 1.0).abs() < 1e-12);
                    for k in 0..p.len() {
                        prop_assert_eq!(p[k] > 0.0, u[k] + g0[k] > 0.0);
                    }
                }
                Posterior::NoWinner => prop_assert!(u.iter().zip(&g0).all(|(a, b)| a + b <= 0.0)),
            }
        }

        #[test]
        fn exact_linear_bias_round_trips(p in 1e-6..=1.0f64) {
            let g0 = bias_from_prior(p, ModelKind::Linear, LinearBias::Exact).unwrap();
            prop_assert!((-1.0..=0.0).contains(&g0));
            prop_assert!((linear_prior_from_bias(g0) - p).abs() < 1e-8);
        }

        #[test]
        fn cosine_scale_invariant(
            x in prop::collection::vec(-10.0..10.0f64, 6),
            g in prop::collection::vec(-10.0..10.0f64, 6),
            a in 1e-3..1e3f64,
            b in 1e-3..1e3f64,
        ) {
            prop_assume!(norm(&x) > 1e-6 && norm(&g) > 1e-6);
            let c = cosine_similarity(&x, &g).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v * a).collect();
            let gs: Vec<f64> = g.iter().map(|v| v * b).collect();
            prop_assert!((cosine_similarity(&xs, &gs).unwrap() - c).abs() < 1e-12);
            prop_assert!((cosine_similarity(&g, &x).unwrap() - c).abs() < 1e-15);
        }
    }
}

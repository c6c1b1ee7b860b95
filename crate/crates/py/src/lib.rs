//! Python bindings: mixture posteriors, elastic clustering, the spiking
//! network, OMNIST generation and the evaluation harness.

use std::path::{Path, PathBuf};

use esnn_core::checkpoint::Checkpoint;
use esnn_core::config::RunConfig;
use esnn_core::datasets::{self, MnistSet, OmnistGenerator, Split};
use esnn_core::elastic::{ElasticCentroid, ElasticClusterer, ElasticConfig};
use esnn_core::harness;
use esnn_core::mixture::{self, LinearBias, ModelKind, Posterior};
use esnn_core::snn;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn kind(name: &str) -> PyResult<ModelKind> {
    match name {
        "exponential" => Ok(ModelKind::Exponential),
        "linear" => Ok(ModelKind::Linear),
        _ => Err(value_err(format!("unknown model kind {name:?}"))),
    }
}

fn split(name: &str) -> PyResult<Split> {
    match name {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        _ => Err(value_err(format!("unknown split {name:?}"))),
    }
}

fn probabilities(p: Posterior) -> Option<Vec<f64>> {
    match p {
        Posterior::Distribution(q) => Some(q),
        Posterior::NoWinner => None,
    }
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyfunction]
fn cosine_similarity(x: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
    mixture::cosine_similarity(&x, &g).map_err(value_err)
}

/// Softmax posterior of the exponential mixture.
#[pyfunction]
fn posterior_exponential(u: Vec<f64>, g0: Vec<f64>) -> Vec<f64> {
    mixture::posterior_exponential(&u, &g0)
}

/// Rectified-linear posterior; `None` when no component has a positive score.
#[pyfunction]
fn posterior_linear(u: Vec<f64>, g0: Vec<f64>) -> Option<Vec<f64>> {
    probabilities(mixture::posterior_linear(&u, &g0))
}

#[pyfunction]
#[pyo3(signature = (p, kind_name = "exponential", exact = true))]
fn bias_from_prior(p: f64, kind_name: &str, exact: bool) -> PyResult<f64> {
    let linear = if exact {
        LinearBias::Exact
    } else {
        LinearBias::Approx
    };
    mixture::bias_from_prior(p, kind(kind_name)?, linear).map_err(value_err)
}

/// Online elastic clustering: centroids attracted by inputs, relaxing to rest.
#[pyclass(name = "ElasticClusterer", unsendable)]
struct PyElastic {
    inner: ElasticClusterer,
}

#[pymethods]
impl PyElastic {
    #[new]
    #[pyo3(signature = (resting, gamma = 0.7, tau_ms = 300.0, c = 1.0, kind_name = "exponential"))]
    fn new(
        resting: Vec<Vec<f64>>,
        gamma: f64,
        tau_ms: f64,
        c: f64,
        kind_name: &str,
    ) -> PyResult<Self> {
        let config = ElasticConfig {
            lambda: 1.0 / tau_ms,
            gamma_max: gamma,
            c,
            model_kind: kind(kind_name)?,
            ..ElasticConfig::default()
        };
        let centroids = resting
            .into_iter()
            .map(|w| ElasticCentroid::from_config(w, 0.0, &config))
            .collect();
        Ok(Self {
            inner: ElasticClusterer::new(config, centroids).map_err(value_err)?,
        })
    }

    /// Feeds the input observed at time `t` (ms); returns the posterior.
    fn observe(&mut self, t: f64, x: Vec<f64>) -> PyResult<Option<Vec<f64>>> {
        Ok(self
            .inner
            .observe(t, &x)
            .map_err(value_err)?
            .and_then(probabilities))
    }

    fn advance_to(&mut self, t: f64) -> PyResult<()> {
        self.inner.advance_to(t).map_err(value_err)
    }

    /// Current efficacy vectors `W + F`, one per centroid.
    fn efficacies(&self) -> Vec<Vec<f64>> {
        self.inner
            .centroids()
            .iter()
            .map(ElasticCentroid::efficacy)
            .collect()
    }
}

/// The spiking soft winner-take-all network.
#[pyclass(name = "Network", unsendable)]
struct PyNetwork {
    inner: snn::Network,
}

#[pymethods]
impl PyNetwork {
    #[new]
    #[pyo3(signature = (n_input = 784, n_exc = 400, seed = 1))]
    fn new(n_input: usize, n_exc: usize, seed: u64) -> PyResult<Self> {
        let cfg = RunConfig::default();
        let params = cfg.network.resized(n_input, n_exc);
        let p = cfg.plasticity;
        Ok(Self {
            inner: snn::Network::new(params, p.triplet, p.homeostasis, seed).map_err(value_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, seed = 1))]
    fn from_checkpoint(path: PathBuf, seed: u64) -> PyResult<Self> {
        let ck = Checkpoint::load(&path).map_err(io_err)?;
        let cfg = RunConfig::default();
        let params = cfg.network.resized(ck.n_input, ck.n_exc);
        let p = cfg.plasticity;
        Ok(Self {
            inner: snn::Network::from_parts(
                params,
                p.triplet,
                p.homeostasis,
                ck.weights,
                ck.thetas,
                seed,
            )
            .map_err(value_err)?,
        })
    }

    fn set_training(&mut self) {
        self.inner.set_training();
    }

    /// Freezes W and thresholds; `st_stdp` turns short-term STDP on with the
    /// default parameters.
    #[pyo3(signature = (st_stdp = false))]
    fn set_inference(&mut self, st_stdp: bool) -> PyResult<()> {
        let stp = st_stdp.then(|| RunConfig::default().plasticity.st_stdp);
        self.inner.set_inference(stp).map_err(value_err)
    }

    /// Presents one frame of pixel intensities; returns spike counts.
    #[pyo3(signature = (pixels, duration_ms = 350.0, rate_scale = 0.25))]
    fn present(
        &mut self,
        pixels: Vec<u8>,
        duration_ms: f64,
        rate_scale: f64,
    ) -> PyResult<Vec<u32>> {
        self.inner
            .present(&pixels, duration_ms, rate_scale)
            .map_err(value_err)
    }

    fn rest(&mut self, duration_ms: f64) -> PyResult<()> {
        self.inner.rest(duration_ms).map_err(value_err)
    }

    fn time(&self) -> f64 {
        self.inner.time()
    }

    /// Resting weights, row-major by input (`j * n_exc + k`).
    fn weights(&self) -> Vec<f64> {
        self.inner.weights()
    }

    fn thetas(&self) -> Vec<f64> {
        self.inner.thetas()
    }

    /// Efficacy column `W + F` of one excitatory neuron.
    fn efficacy(&self, neuron: usize) -> PyResult<Vec<f64>> {
        if neuron >= self.inner.params().n_exc {
            return Err(value_err(format!("neuron {neuron} out of range")));
        }
        Ok(self.inner.synapses().efficacy_column(neuron))
    }
}

fn mnist(dir: &Path, which: &str, limit: usize) -> PyResult<MnistSet> {
    let set = datasets::load_mnist(dir, split(which)?).map_err(io_err)?;
    Ok(if limit > 0 && limit < set.len() {
        set.truncated(limit)
    } else {
        set
    })
}

/// Loads MNIST IDX files: returns `(images, labels)` as flat bytes.
#[pyfunction]
#[pyo3(signature = (dir, which = "test", limit = 0))]
fn load_mnist<'py>(
    py: Python<'py>,
    dir: PathBuf,
    which: &str,
    limit: usize,
) -> PyResult<(Bound<'py, PyBytes>, Bound<'py, PyBytes>)> {
    let set = mnist(&dir, which, limit)?;
    Ok((PyBytes::new(py, &set.images), PyBytes::new(py, &set.labels)))
}

/// OMNIST frames of the first `limit` source digits (all when 0), as
/// `(pixels, label, occluder_depth)` tuples; label 10 marks noise.
#[pyfunction]
#[pyo3(signature = (mnist_dir, which = "test", limit = 0, seed = None))]
fn generate_omnist<'py>(
    py: Python<'py>,
    mnist_dir: PathBuf,
    which: &str,
    limit: usize,
    seed: Option<u64>,
) -> PyResult<Vec<(Bound<'py, PyBytes>, u8, u8)>> {
    let set = mnist(&mnist_dir, which, limit)?;
    let mut spec = datasets::OmnistSpec::default();
    if let Some(s) = seed {
        spec.seed = s;
    }
    let frames = OmnistGenerator::new(&set, spec, split(which)?).map_err(value_err)?;
    Ok(frames
        .map(|f| (PyBytes::new(py, &f.pixels), f.label, f.occl_depth))
        .collect())
}

/// Number of OMNIST frames generated from `n_digits` source digits.
#[pyfunction]
#[pyo3(signature = (n_digits, which = "test"))]
fn omnist_frame_count(n_digits: usize, which: &str) -> PyResult<u64> {
    Ok(datasets::frame_count(
        n_digits,
        &datasets::OmnistSpec::default(),
        split(which)?,
    ))
}

/// The built-in run configuration as TOML.
#[pyfunction]
fn default_config() -> String {
    RunConfig::default().to_toml()
}

/// Checkpoint header: shape, provenance and labels.
#[pyfunction]
fn checkpoint_info(py: Python<'_>, path: PathBuf) -> PyResult<Py<PyAny>> {
    let ck = Checkpoint::load(&path).map_err(io_err)?;
    let doc = serde_json::json!({
        "n_input": ck.n_input,
        "n_exc": ck.n_exc,
        "labels": ck.labels.map(|l| l.0),
        "provenance": ck.provenance,
    });
    json_to_py(py, &doc.to_string())
}

/// Evaluates a labeled checkpoint on the first `limit` OMNIST test frames
/// (or MNIST test images) and returns the metrics as a dict.
#[pyfunction]
#[pyo3(signature = (checkpoint, mnist_dir, dataset = "omnist", st_stdp = false, limit = 0, seed = 1))]
fn evaluate(
    py: Python<'_>,
    checkpoint: PathBuf,
    mnist_dir: PathBuf,
    dataset: &str,
    st_stdp: bool,
    limit: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let cfg = RunConfig::default();
    let ck = Checkpoint::load(&checkpoint).map_err(io_err)?;
    let labels = ck
        .labels
        .clone()
        .ok_or_else(|| value_err("checkpoint has no labels"))?;
    let params = cfg.network.resized(ck.n_input, ck.n_exc);
    let p = cfg.plasticity;
    let mut net = snn::Network::from_parts(
        params,
        p.triplet,
        p.homeostasis,
        ck.weights,
        ck.thetas,
        seed,
    )
    .map_err(value_err)?;
    let stp = st_stdp.then_some(p.st_stdp);
    let m = match dataset {
        "mnist" => {
            let set = mnist(&mnist_dir, "test", limit)?;
            harness::eval_mnist(&mut net, &labels, &set, &cfg.protocol, stp, None)
                .map_err(value_err)?
        }
        "omnist" => {
            let set = datasets::load_mnist(&mnist_dir, Split::Test).map_err(io_err)?;
            let g =
                OmnistGenerator::new(&set, cfg.dataset.omnist, Split::Test).map_err(value_err)?;
            let frames: Vec<_> = if limit == 0 {
                g.collect()
            } else {
                g.take(limit).collect()
            };
            harness::eval_omnist(&mut net, &labels, &frames, &cfg.protocol, stp, None)
                .map_err(value_err)?
        }
        other => return Err(value_err(format!("unknown dataset {other:?}"))),
    };
    json_to_py(py, &m.to_json())
}

#[pymodule]
fn esnn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(cosine_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(posterior_linear, m)?)?;
    m.add_function(wrap_pyfunction!(bias_from_prior, m)?)?;
    m.add_function(wrap_pyfunction!(load_mnist, m)?)?;
    m.add_function(wrap_pyfunction!(generate_omnist, m)?)?;
    m.add_function(wrap_pyfunction!(omnist_frame_count, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(checkpoint_info, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PyElastic>()?;
    m.add_class::<PyNetwork>()?;
    Ok(())
}

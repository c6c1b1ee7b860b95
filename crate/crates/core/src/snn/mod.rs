//! Clock-driven simulation of the soft winner-take-all spiking network.

pub mod encoding;
pub mod lif;
pub mod network;
pub mod params;
pub mod plasticity;
pub mod raster;
pub mod stochastic;

use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

pub use encoding::{poisson_encode, PoissonSource, SpikeRaster};
pub use lif::{lif_step, LifStepper, NeuronState};
pub use network::Network;
pub use params::{
    HomeostasisParams, LifParams, NetworkParams, Normalization, PresynKernel, StStdpParams,
    TripletParams,
};
pub use plasticity::{
    homeostasis_step, lateral_inhibition, normalize_weights, st_stdp_step, triplet_stdp_step,
    wta_route, Mode, PlasticSynapseMatrix,
};
pub use raster::{read_raster, write_raster};

/// Generator used for weight initialization and Poisson inputs.
pub type SimRng = Xoshiro256PlusPlus;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("input rate {rate_hz} Hz at dt = {dt} ms exceeds one spike per step")]
    RateTooHigh { rate_hz: f64, dt: f64 },
    #[error("{op} is not allowed in {mode:?} mode")]
    WrongMode { op: &'static str, mode: Mode },
    #[error("neuron {neuron} has a zero weight sum")]
    ZeroColumnSum { neuron: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("malformed spike raster: {0}")]
    BadRaster(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

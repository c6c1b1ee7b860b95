//! Elastic clustering and its spiking realization with short-term STDP.
//!
//! The crate is organized bottom-up:
//!
//! * [`mixture`]: cosine-similarity mixture models and posterior rules.
//! * [`elastic`]: the online elastic-clustering algorithm.
//! * [`snn`]: a clock-driven spiking winner-take-all network with triplet
//!   STDP for training and short-term STDP for inference.
//! * [`datasets`]: MNIST IDX ingestion and the OMNIST occluded-video generator.
//! * [`harness`]: training, labeling and evaluation protocols plus metrics.
//! * [`config`] and [`checkpoint`]: run configuration and model persistence.

pub mod checkpoint;
pub mod config;
pub mod datasets;
pub mod elastic;
pub mod harness;
pub mod mixture;
pub mod snn;

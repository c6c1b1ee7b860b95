//! MNIST ingestion and the OMNIST occluded-video benchmark.

pub mod container;
pub mod idx;
pub mod omnist;
pub mod rng;

use std::path::PathBuf;

use thiserror::Error;

pub use container::{read_container, write_container, write_csv_index, OmnistHeader};
pub use idx::{load_mnist, read_idx_images, read_idx_labels, MnistSet, Split};
pub use omnist::{
    digit_frame, find_reference_seed, frame_count, generate_omnist, make_noise_frame,
    noise_augmentation, occluder_depth, Frame, NoiseMode, OmnistGenerator, OmnistSpec, NOISE_LABEL,
};
pub use rng::OmnistRng;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: truncated, expected {expected} bytes of payload, found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("unsupported image geometry {rows}x{cols}")]
    Geometry { rows: usize, cols: usize },
    #[error("malformed OMNIST container: {0}")]
    Container(String),
    #[error("invalid dataset spec: {0}")]
    Spec(String),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}

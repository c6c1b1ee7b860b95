//! Big-endian IDX tensors, optionally gzip-compressed.

use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};

use super::{DataError, IMAGE_PIXELS, IMAGE_SIDE};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

/// Images as one flat buffer of 28x28 frames, with aligned labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnistSet {
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
}

impl MnistSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.images[i * IMAGE_PIXELS..(i + 1) * IMAGE_PIXELS]
    }

    /// First `n` examples.
    pub fn truncated(&self, n: usize) -> MnistSet {
        let n = n.min(self.len());
        MnistSet {
            images: self.images[..n * IMAGE_PIXELS].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, DataError> {
    let raw = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| DataError::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| DataError::Truncated {
            path: path.to_path_buf(),
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<(), DataError> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(DataError::BadMagic {
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(())
}

fn payload(bytes: Vec<u8>, header: usize, len: usize, path: &Path) -> Result<Vec<u8>, DataError> {
    let found = bytes.len() - header;
    if found < len {
        return Err(DataError::Truncated {
            path: path.to_path_buf(),
            expected: len,
            found,
        });
    }
    Ok(bytes[header..header + len].to_vec())
}

/// Reads an image tensor; returns the flat pixel buffer and the image count.
pub fn read_idx_images(path: &Path) -> Result<(Vec<u8>, usize), DataError> {
    let bytes = read_all(path)?;
    check_magic(&bytes, IMAGES_MAGIC, path)?;
    let n = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(DataError::Geometry { rows, cols });
    }
    Ok((payload(bytes, 16, n * IMAGE_PIXELS, path)?, n))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, DataError> {
    let bytes = read_all(path)?;
    check_magic(&bytes, LABELS_MAGIC, path)?;
    let n = be_u32(&bytes, 4, path)? as usize;
    payload(bytes, 8, n, path)
}

fn locate(dir: &Path, stem: &str) -> PathBuf {
    let plain = dir.join(stem);
    if plain.exists() {
        return plain;
    }
    let gz = dir.join(format!("{stem}.gz"));
    if gz.exists() {
        gz
    } else {
        plain
    }
}

/// Loads `train-*` or `t10k-*` IDX files from `dir` (plain or `.gz`).
pub fn load_mnist(dir: &Path, split: Split) -> Result<MnistSet, DataError> {
    let p = split.prefix();
    let (images, n) = read_idx_images(&locate(dir, &format!("{p}-images-idx3-ubyte")))?;
    let labels = read_idx_labels(&locate(dir, &format!("{p}-labels-idx1-ubyte")))?;
    if labels.len() != n {
        return Err(DataError::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    Ok(MnistSet { images, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    fn images_file(n: u32, payload: usize) -> Vec<u8> {
        let mut b = Vec::new();
        for x in [IMAGES_MAGIC, n, 28, 28] {
            b.extend_from_slice(&x.to_be_bytes());
        }
        b.extend((0..payload).map(|i| i as u8));
        b
    }

    fn labels_file(magic: u32, n: u32) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(&magic.to_be_bytes());
        b.extend_from_slice(&n.to_be_bytes());
        b.extend((0..n).map(|i| (i % 10) as u8));
        b
    }

    #[test]
    fn parses_plain_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("t10k-images-idx3-ubyte"),
            images_file(2, 2 * 784),
        )
        .unwrap();
        let mut gz = GzEncoder::new(Vec::new(), Compression::default());
        gz.write_all(&labels_file(LABELS_MAGIC, 2)).unwrap();
        std::fs::write(
            dir.path().join("t10k-labels-idx1-ubyte.gz"),
            gz.finish().unwrap(),
        )
        .unwrap();
        let set = load_mnist(dir.path(), Split::Test).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.labels, vec![0, 1]);
        assert_eq!(set.image(1)[0], (784 % 256) as u8);
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels");
        std::fs::write(&p, labels_file(0x0803, 3)).unwrap();
        assert!(matches!(
            read_idx_labels(&p),
            Err(DataError::BadMagic { .. })
        ));

        let p = dir.path().join("images");
        std::fs::write(&p, images_file(2, 784 + 5)).unwrap();
        assert!(matches!(
            read_idx_images(&p),
            Err(DataError::Truncated { .. })
        ));

        std::fs::write(
            dir.path().join("train-images-idx3-ubyte"),
            images_file(2, 2 * 784),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("train-labels-idx1-ubyte"),
            labels_file(LABELS_MAGIC, 3),
        )
        .unwrap();
        assert!(matches!(
            load_mnist(dir.path(), Split::Train),
            Err(DataError::CountMismatch {
                images: 2,
                labels: 3
            })
        ));
        assert!(matches!(
            load_mnist(&dir.path().join("nope"), Split::Test),
            Err(DataError::Io { .. })
        ));
    }
}

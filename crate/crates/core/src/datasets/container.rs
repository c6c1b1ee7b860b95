//! `OMNIST01` files: magic, `u32` version, `u64` frame count, `u32` length
//! of a JSON echo of the generator spec, the echo, then 786-byte records
//! (784 pixels, label, occluder depth). Integers are little-endian.

use std::borrow::Borrow;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::idx::Split;
use super::omnist::{Frame, OmnistSpec, NOISE_LABEL};
use super::{DataError, IMAGE_PIXELS};

pub const CONTAINER_MAGIC: &[u8; 8] = b"OMNIST01";
pub const CONTAINER_VERSION: u32 = 1;
const RECORD: usize = IMAGE_PIXELS + 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmnistHeader {
    pub split: Split,
    pub spec: OmnistSpec,
    pub frames: u64,
}

pub fn write_container<W: Write, I: IntoIterator<Item = Frame>>(
    out: W,
    header: &OmnistHeader,
    frames: I,
) -> std::io::Result<u64> {
    let mut w = BufWriter::new(out);
    let echo = serde_json::to_vec(&(header.split, header.spec)).expect("spec serializes");
    w.write_all(CONTAINER_MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&header.frames.to_le_bytes())?;
    w.write_all(&(echo.len() as u32).to_le_bytes())?;
    w.write_all(&echo)?;
    let mut n = 0u64;
    for f in frames {
        w.write_all(&f.pixels)?;
        w.write_all(&[f.label, f.occl_depth])?;
        n += 1;
    }
    if n != header.frames {
        return Err(std::io::Error::other(format!(
            "header announces {} frames, wrote {n}",
            header.frames
        )));
    }
    w.flush()?;
    Ok(n)
}

/// Reads a container. Source indices are recovered from stream order: a digit
/// frame with depth 0 starts the next source digit.
pub fn read_container(path: &Path) -> Result<(OmnistHeader, Vec<Frame>), DataError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| DataError::io(path, e))?;
    let bad = |m: String| DataError::Container(format!("{}: {m}", path.display()));
    if bytes.len() < 24 || &bytes[..8] != CONTAINER_MAGIC {
        return Err(bad("missing OMNIST01 header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CONTAINER_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let echo_len = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    let body_at = 24 + echo_len;
    let echo = bytes
        .get(24..body_at)
        .ok_or_else(|| bad("truncated spec echo".into()))?;
    let (split, spec): (Split, OmnistSpec) =
        serde_json::from_slice(echo).map_err(|e| bad(format!("spec echo: {e}")))?;
    let body = &bytes[body_at..];
    if body.len() as u64 != count * RECORD as u64 {
        return Err(bad(format!("{} body bytes for {count} frames", body.len())));
    }
    let mut frames = Vec::with_capacity(count as usize);
    let mut src: Option<u32> = None;
    for rec in body.chunks_exact(RECORD) {
        let label = rec[IMAGE_PIXELS];
        let depth = rec[IMAGE_PIXELS + 1];
        if label > NOISE_LABEL {
            return Err(bad(format!("label {label}")));
        }
        let src_index = if label == NOISE_LABEL {
            None
        } else {
            if depth == 0 {
                src = Some(src.map_or(0, |s| s + 1));
            }
            src
        };
        frames.push(Frame {
            pixels: rec[..IMAGE_PIXELS].to_vec(),
            label,
            occl_depth: depth,
            src_index,
        });
    }
    Ok((
        OmnistHeader {
            split,
            spec,
            frames: count,
        },
        frames,
    ))
}

/// CSV index with columns `frame_id,label,occl_depth,src_index`.
pub fn write_csv_index<W, I>(out: W, frames: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator,
    I::Item: Borrow<Frame>,
{
    let mut w = BufWriter::new(out);
    writeln!(w, "frame_id,label,occl_depth,src_index")?;
    for (i, f) in frames.into_iter().enumerate() {
        let f = f.borrow();
        match f.src_index {
            Some(s) => writeln!(w, "{i},{},{},{s}", f.label, f.occl_depth)?,
            None => writeln!(w, "{i},{},{},", f.label, f.occl_depth)?,
        }
    }
    w.flush()
}

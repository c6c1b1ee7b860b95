//! Binary spike-raster dumps: the 8-byte magic `SNNRAST1` followed by
//! little-endian `(t: f32 ms, neuron: u16)` records.

use std::io::{Read, Write};

use super::SimError;

pub const RASTER_MAGIC: &[u8; 8] = b"SNNRAST1";

pub fn write_raster<W: Write>(mut out: W, records: &[(f32, u16)]) -> Result<(), SimError> {
    out.write_all(RASTER_MAGIC)?;
    let mut buf = Vec::with_capacity(records.len() * 6);
    for &(t, id) in records {
        buf.extend_from_slice(&t.to_le_bytes());
        buf.extend_from_slice(&id.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_raster<R: Read>(mut input: R) -> Result<Vec<(f32, u16)>, SimError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..8] != RASTER_MAGIC {
        return Err(SimError::BadRaster("missing SNNRAST1 header".into()));
    }
    let body = &bytes[8..];
    if body.len() % 6 != 0 {
        return Err(SimError::BadRaster(format!(
            "trailing {} bytes",
            body.len() % 6
        )));
    }
    Ok(body
        .chunks_exact(6)
        .map(|c| {
            (
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                u16::from_le_bytes([c[4], c[5]]),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![(0.5f32, 3u16), (1.0, 399), (1234.5, 0)];
        let mut buf = Vec::new();
        write_raster(&mut buf, &recs).unwrap();
        assert_eq!(&buf[..8], b"SNNRAST1");
        assert_eq!(buf.len(), 8 + 18);
        assert_eq!(read_raster(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_raster(&b"SNNRAST0"[..]).is_err());
        let mut buf = Vec::new();
        write_raster(&mut buf, &[(1.0, 1)]).unwrap();
        buf.pop();
        assert!(read_raster(&buf[..]).is_err());
    }
}

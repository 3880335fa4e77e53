//! Binary checkpoints of a simulation state.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "FCHS" | version u32 | dim u32 | N u32 | L f64 | s f64 | nu f64 | alpha f64 | t f64
//!        | dim × N^dim complex coefficients as (re, im) f64 pairs, row-major
//!        | CRC-64/XZ of all preceding bytes, u64
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crc::{Crc, CRC_64_XZ};
use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::fractional::PhysParams;
use crate::grid::{Grid, GridSpec, SpectralField};
use crate::rhs::SimState;

pub const MAGIC: [u8; 4] = *b"FCHS";
pub const FORMAT_VERSION: u32 = 1;
/// Divergence ratio above which a restored state is rejected.
pub const RESTORE_DIVERGENCE_TOLERANCE: f64 = 1e-8;

const HEADER_LEN: usize = 4 + 4 * 3 + 8 * 5;
const CHECKSUM: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint: bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("checkpoint checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("checkpoint truncated: {len} bytes")]
    Truncated { len: usize },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("restored state violates divergence-free invariant: ratio {ratio:e}")]
    InvariantViolation { ratio: f64 },
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

type CpResult<T> = std::result::Result<T, CheckpointError>;

/// Serialize to bytes, checksum included.
pub fn encode(state: &SimState, params: &PhysParams, grid: &Grid) -> Vec<u8> {
    let spec = grid.spec();
    let v = state.v_hat();
    let mut buf = Vec::with_capacity(HEADER_LEN + v.n_components() * spec.len() * 16 + 8);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(spec.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(spec.n_points() as u32).to_le_bytes());
    for x in [
        spec.box_length(),
        params.s(),
        params.nu(),
        params.alpha(),
        state.t(),
    ] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for comp in &v.components {
        for c in comp {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let sum = CHECKSUM.checksum(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

pub fn store<W: Write>(
    state: &SimState,
    params: &PhysParams,
    grid: &Grid,
    mut sink: W,
) -> CpResult<()> {
    sink.write_all(&encode(state, params, grid))?;
    sink.flush()?;
    Ok(())
}

pub fn store_to_path(
    state: &SimState,
    params: &PhysParams,
    grid: &Grid,
    path: &Path,
) -> CpResult<()> {
    store(state, params, grid, BufWriter::new(File::create(path)?))
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

/// Parse bytes produced by [`encode`]. Checks run in order: length, magic,
/// checksum, version, header sanity, payload size, divergence invariant.
pub fn decode(bytes: &[u8]) -> CpResult<(SimState, PhysParams, GridSpec)> {
    if bytes.len() < 4 + 8 {
        return Err(CheckpointError::Truncated { len: bytes.len() });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let body = &bytes[..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("8 bytes"));
    let computed = CHECKSUM.checksum(body);
    if stored != computed {
        return Err(CheckpointError::ChecksumMismatch { stored, computed });
    }
    if body.len() < HEADER_LEN {
        return Err(CheckpointError::Malformed("header incomplete".into()));
    }
    let version = u32_at(body, 4);
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion { found: version });
    }
    let dim = u32_at(body, 8) as usize;
    let n = u32_at(body, 12) as usize;
    let [l, s, nu, alpha, t] = [0, 1, 2, 3, 4].map(|i| f64_at(body, 16 + 8 * i));
    let spec = GridSpec::new(dim, n, l).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    let params =
        PhysParams::new(s, nu, alpha, dim).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    if !t.is_finite() {
        return Err(CheckpointError::Malformed(format!("non-finite time {t}")));
    }
    let expected = HEADER_LEN + dim * spec.len() * 16;
    if body.len() != expected {
        return Err(CheckpointError::Malformed(format!(
            "payload is {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let mut v = SpectralField::zeros(dim, &spec);
    let mut at = HEADER_LEN;
    for comp in &mut v.components {
        for c in comp.iter_mut() {
            *c = Complex64::new(f64_at(body, at), f64_at(body, at + 8));
            at += 16;
        }
    }
    let state = SimState::new(t, v);
    let grid = Grid::new(spec);
    let ratio = state.divergence_ratio(&grid);
    if !(ratio <= RESTORE_DIVERGENCE_TOLERANCE) {
        return Err(CheckpointError::InvariantViolation { ratio });
    }
    Ok((state, params, spec))
}

pub fn restore<R: Read>(mut source: R) -> CpResult<(SimState, PhysParams, GridSpec)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn restore_from_path(path: &Path) -> CpResult<(SimState, PhysParams, GridSpec)> {
    restore(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::scenarios;

    fn sample() -> (SimState, PhysParams, Grid) {
        let grid = Grid::new(GridSpec::periodic(2, 16).unwrap());
        let params = PhysParams::new(0.625, 0.05, 0.2, 2).unwrap();
        let v = scenarios::random_divfree(&grid, 1.0, 42, 1.0, 5.0);
        (SimState::new(0.375, v), params, grid)
    }

    /// Re-seal a hand-edited body with a valid checksum.
    fn reseal(mut body: Vec<u8>) -> Vec<u8> {
        body.truncate(body.len() - 8);
        let sum = CHECKSUM.checksum(&body);
        body.extend_from_slice(&sum.to_le_bytes());
        body
    }

    #[test]
    fn round_trip_is_exact() {
        let (st, p, g) = sample();
        let bytes = encode(&st, &p, &g);
        let (back, bp, bspec) = decode(&bytes).unwrap();
        assert_eq!(back.t().to_bits(), st.t().to_bits());
        assert_eq!(bp, p);
        assert_eq!(&bspec, g.spec());
        for (a, b) in back
            .v_hat()
            .components
            .iter()
            .flatten()
            .zip(st.v_hat().components.iter().flatten())
        {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn layout_matches_declared_size() {
        let (st, p, g) = sample();
        let bytes = encode(&st, &p, &g);
        assert_eq!(bytes.len(), 4 + 12 + 40 + 2 * 256 * 16 + 8);
        assert_eq!(&bytes[..4], b"FCHS");
        assert_eq!(u32_at(&bytes, 4), 1);
        assert_eq!(u32_at(&bytes, 8), 2);
        assert_eq!(u32_at(&bytes, 12), 16);
        assert_eq!(f64_at(&bytes, 48), 0.375);
    }

    #[test]
    fn stores_are_byte_identical() {
        let (st, p, g) = sample();
        let mut a = Vec::new();
        let mut b = Vec::new();
        store(&st, &p, &g, &mut a).unwrap();
        store(&st, &p, &g, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_is_a_checksum_failure() {
        let (st, p, g) = sample();
        let bytes = encode(&st, &p, &g);
        let step = (bytes.len() - 12) / 10;
        for cut in (0..10).map(|i| 12 + i * step) {
            let err = decode(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, CheckpointError::ChecksumMismatch { .. }),
                "cut {cut}: {err}"
            );
        }
        assert!(matches!(
            decode(&bytes[..5]),
            Err(CheckpointError::Truncated { len: 5 })
        ));
    }

    #[test]
    fn flipped_coefficient_byte_is_detected() {
        let (st, p, g) = sample();
        let mut bytes = encode(&st, &p, &g);
        bytes[HEADER_LEN + 100] ^= 0x10;
        assert!(matches!(
            decode(&bytes),
            Err(CheckpointError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn distinct_errors() {
        let (st, p, g) = sample();
        let bytes = encode(&st, &p, &g);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(CheckpointError::BadMagic(_))));

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            decode(&reseal(bad)),
            Err(CheckpointError::UnsupportedVersion { found: 2 })
        ));

        // Make one mode compressible: add a component parallel to k.
        let mut v = st.v_hat().clone();
        let idx = g.index_of(&[1, 0]).unwrap();
        let pidx = g.index_of(&[-1, 0]).unwrap();
        v.components[0][idx] += Complex64::new(0.5, 0.0);
        v.components[0][pidx] += Complex64::new(0.5, 0.0);
        let corrupt = SimState::new(st.t(), v);
        let bytes = encode(&corrupt, &p, &g);
        assert!(matches!(
            decode(&bytes),
            Err(CheckpointError::InvariantViolation { .. })
        ));
    }
}

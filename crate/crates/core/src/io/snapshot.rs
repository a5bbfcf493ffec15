//! Binary `.fld` snapshots: a fixed header followed by the real-space samples
//! of the three components as little-endian `f64`.
//!
//! Header (32 bytes): magic `HMFLD\0\0\0`, version `u32`, `n` `u32`, time `f64`,
//! solenoidal flag `u8`, 7 bytes of padding.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, RealVectorField, SpectralField};

const MAGIC: &[u8; 8] = b"HMFLD\0\0\0";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// A field at one instant, stored by its grid samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub time: f64,
    pub solenoidal: bool,
    pub samples: RealVectorField,
}

impl Snapshot {
    pub fn from_field(field: &SpectralField, time: f64) -> Self {
        Snapshot {
            grid: field.grid(),
            time,
            solenoidal: field.is_flagged_solenoidal(),
            samples: field.inverse_transform(),
        }
    }

    pub fn to_field(&self) -> SpectralField {
        SpectralField::forward_transform(&self.samples).with_solenoidal_flag(self.solenoidal)
    }
}

pub fn save_snapshot(snap: &Snapshot, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(snap))?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    decode(&fs::read(path)?)
}

/// Loads a snapshot that must live on `grid`; fields are never resampled.
pub fn load_field(path: impl AsRef<Path>, grid: GridSpec) -> Result<SpectralField> {
    let s = load_snapshot(path)?;
    if s.grid != grid {
        return Err(Error::GridMismatch { left: s.grid.n(), right: grid.n() });
    }
    Ok(s.to_field())
}

pub fn encode(snap: &Snapshot) -> Vec<u8> {
    let n = snap.grid.n();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * 8 * n * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&snap.time.to_le_bytes());
    out.push(snap.solenoidal as u8);
    out.extend_from_slice(&[0; 7]);
    for c in 0..3 {
        for x in snap.samples.component(c) {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!("file of {} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Snapshot("bad magic; not a field snapshot".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("version {version} is not supported (expected {SNAPSHOT_VERSION})")));
    }
    let grid = GridSpec::new(u32_at(12) as usize)?;
    let time = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let solenoidal = match bytes[24] {
        0 => false,
        1 => true,
        b => return Err(Error::Snapshot(format!("bad solenoidal flag {b}"))),
    };
    let count = grid.n().pow(3);
    let expected = HEADER_LEN + 3 * 8 * count;
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!(
            "payload size mismatch: header announces {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut comps: [Vec<f64>; 3] = Default::default();
    for (c, comp) in comps.iter_mut().enumerate() {
        let start = HEADER_LEN + c * 8 * count;
        *comp = bytes[start..start + 8 * count]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
    }
    Ok(Snapshot { grid, time, solenoidal, samples: RealVectorField::from_components(grid, comps)? })
}

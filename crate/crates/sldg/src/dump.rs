//! Binary noise-path dump.
//!
//! Little-endian layout: a 32-byte header `K: u64, N: u64, Δt: f64,
//! seed: u64`, then `N·K` standard normals `ξ` as `f64`, row-major by step
//! (`ξ[n][k]` at index `n·K + k`).

use std::fs;
use std::path::Path;

use sldg_core::noise::NoisePath;

use crate::CliError;

const HEADER: usize = 32;

pub fn encode(path: &NoisePath) -> Vec<u8> {
    let normals = path.normals();
    let mut out = Vec::with_capacity(HEADER + 8 * normals.len());
    out.extend_from_slice(&(path.modes() as u64).to_le_bytes());
    out.extend_from_slice(&(path.steps() as u64).to_le_bytes());
    out.extend_from_slice(&path.dt().to_le_bytes());
    out.extend_from_slice(&path.seed().to_le_bytes());
    for x in normals {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], source: &Path) -> Result<NoisePath, CliError> {
    let fail = |reason: String| CliError::Format {
        path: source.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER {
        return Err(fail(format!("{} bytes is shorter than the {HEADER}-byte header", bytes.len())));
    }
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().unwrap() };
    let modes = u64::from_le_bytes(word(0));
    let steps = u64::from_le_bytes(word(1));
    let dt = f64::from_le_bytes(word(2));
    let seed = u64::from_le_bytes(word(3));
    let count = modes
        .checked_mul(steps)
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| fail(format!("header K={modes} N={steps} overflows")))?;
    let body = &bytes[HEADER..];
    if body.len() != 8 * count {
        return Err(fail(format!(
            "header K={modes} N={steps} needs {} payload bytes, found {}",
            8 * count,
            body.len()
        )));
    }
    let xi = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    NoisePath::from_normals(dt, steps as usize, modes as usize, seed, xi).map_err(|e| fail(e.to_string()))
}

pub fn write(file: &Path, path: &NoisePath) -> Result<(), CliError> {
    fs::write(file, encode(path)).map_err(|e| CliError::io(file, e))
}

pub fn read(file: &Path) -> Result<NoisePath, CliError> {
    let bytes = fs::read(file).map_err(|e| CliError::io(file, e))?;
    decode(&bytes, file)
}

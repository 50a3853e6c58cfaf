//! Bit-exact field snapshots.
//!
//! Layout: magic "RT2F", version and grid size as 4-byte little-endian
//! unsigned, time as 8-byte little-endian IEEE-754, then the n^2 samples as
//! 8-byte little-endian IEEE-754, row-major with the y index ascending and
//! x ascending within a row (the in-memory order of ScalarField).

use ricci_torus::{Error, GridSpec, Result, ScalarField};
use std::fs;
use std::io::Read;
use std::path::Path;

const MAGIC: [u8; 4] = *b"RT2F";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub fn write_snapshot(field: &ScalarField, t: f64, path: &Path) -> Result<()> {
    let n = field.n();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * n * n);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for &x in field.values() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

fn parse_header(head: &[u8], path: &Path) -> Result<(usize, f64)> {
    if head.len() < HEADER_LEN {
        return Err(Error::SnapshotCorrupt(format!(
            "{}: {} bytes is shorter than the header",
            path.display(),
            head.len()
        )));
    }
    if head[..4] != MAGIC {
        return Err(Error::SnapshotCorrupt(format!("{}: bad magic", path.display())));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::SnapshotCorrupt(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let n = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let t = f64::from_le_bytes(head[12..20].try_into().unwrap());
    Ok((n, t))
}

/// Reads only the fixed-size header: (n, t) without loading the body.
pub fn read_snapshot_header(path: &Path) -> Result<(usize, f64)> {
    let mut head = [0u8; HEADER_LEN];
    let mut file = fs::File::open(path)?;
    let got = file.read(&mut head)?;
    parse_header(&head[..got], path)
}

pub fn read_snapshot(path: &Path) -> Result<(ScalarField, f64)> {
    let bytes = fs::read(path)?;
    let (n, t) = parse_header(&bytes, path)?;
    let expected = HEADER_LEN + 8 * n * n;
    if bytes.len() != expected {
        return Err(Error::SnapshotCorrupt(format!(
            "{}: {} bytes, expected {expected} for n = {n}",
            path.display(),
            bytes.len()
        )));
    }
    let grid = GridSpec::new(n)
        .map_err(|e| Error::SnapshotCorrupt(format!("{}: {e}", path.display())))?;
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = ScalarField::from_values(grid, values)
        .map_err(|e| Error::SnapshotCorrupt(format!("{}: {e}", path.display())))?;
    Ok((field, t))
}

//! Binary file formats for velocity grids and shot gathers.
//!
//! Both containers share the same layout: a 4-byte magic, a u16 format
//! version, little-endian dimension/spacing fields, then a packed f32
//! little-endian payload. Writing is deterministic byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::model::VelocityModel;
use crate::{Error, Result};

pub const GRID_MAGIC: &[u8; 4] = b"TVFW";
pub const GATHER_MAGIC: &[u8; 4] = b"TVFG";
pub const FORMAT_VERSION: u16 = 1;

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::MalformedHeader(format!("truncated while reading {what}")))
}

fn read_u16(r: &mut impl Read, what: &str) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact_or(r, &mut b, what)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, what)?;
    Ok(f64::from_le_bytes(b))
}

fn read_payload(r: &mut impl Read, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes).map_err(|_| {
        Error::DimensionMismatch(format!(
            "payload shorter than the {n} samples promised by the {what} header"
        ))
    })?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::DimensionMismatch(format!(
            "payload longer than the {n} samples promised by the {what} header"
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn check_magic(r: &mut impl Read, expect: &[u8; 4]) -> Result<()> {
    let mut magic = [0u8; 4];
    read_exact_or(r, &mut magic, "magic")?;
    if &magic != expect {
        return Err(Error::MalformedHeader(format!(
            "bad magic {:?}, expected {:?}",
            magic, expect
        )));
    }
    let version = read_u16(r, "version")?;
    if version != FORMAT_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported format version {version}"
        )));
    }
    Ok(())
}

/// Reads a velocity model from a TVFW grid file.
pub fn read_grid(path: impl AsRef<Path>) -> Result<VelocityModel> {
    let mut r = BufReader::new(File::open(path)?);
    check_magic(&mut r, GRID_MAGIC)?;
    let nz = read_u32(&mut r, "nz")? as usize;
    let nx = read_u32(&mut r, "nx")? as usize;
    let dz = read_f64(&mut r, "dz")?;
    let dx = read_f64(&mut r, "dx")?;
    let data = read_payload(&mut r, nz * nx, "grid")?;
    if let Some(v) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("grid payload contains {v}")));
    }
    let values = Array2::from_shape_vec((nz, nx), data)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    VelocityModel::new(dz, dx, values)
}

/// Writes a velocity model as a TVFW grid file. Values are stored as f32.
pub fn write_grid(model: &VelocityModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GRID_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(model.nz() as u32).to_le_bytes())?;
    w.write_all(&(model.nx() as u32).to_le_bytes())?;
    w.write_all(&model.dz().to_le_bytes())?;
    w.write_all(&model.dx().to_le_bytes())?;
    for v in model.values().iter() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Raw gather payload: `data[[shot, t, receiver]]` plus the time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GatherFile {
    pub data: Array3<f64>,
    pub dt: f64,
}

/// Reads a TVFG shot-gather file.
pub fn read_gather(path: impl AsRef<Path>) -> Result<GatherFile> {
    let mut r = BufReader::new(File::open(path)?);
    check_magic(&mut r, GATHER_MAGIC)?;
    let ns = read_u32(&mut r, "n_sources")? as usize;
    let nt = read_u32(&mut r, "nt")? as usize;
    let nr = read_u32(&mut r, "n_receivers")? as usize;
    let dt = read_f64(&mut r, "dt")?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::MalformedHeader(format!("dt must be positive, got {dt}")));
    }
    let data = read_payload(&mut r, ns * nt * nr, "gather")?;
    if let Some(v) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("gather payload contains {v}")));
    }
    let data = Array3::from_shape_vec((ns, nt, nr), data)
        .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    Ok(GatherFile { data, dt })
}

/// Writes a TVFG shot-gather file. Samples are stored as f32.
pub fn write_gather(data: &Array3<f64>, dt: f64, path: impl AsRef<Path>) -> Result<()> {
    let (ns, nt, nr) = data.dim();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(GATHER_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(ns as u32).to_le_bytes())?;
    w.write_all(&(nt as u32).to_le_bytes())?;
    w.write_all(&(nr as u32).to_le_bytes())?;
    w.write_all(&dt.to_le_bytes())?;
    for v in data.iter() {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use ndarray::Array2;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = tempfile::tempdir().unwrap();
        // Leak the dir so the file survives the test body.
        let path = dir.path().join(name);
        std::mem::forget(dir);
        path
    }

    #[test]
    fn grid_round_trip_identity() {
        // values must be exactly f32-representable for bit-exactness
        let values = Array2::from_shape_fn((50, 100), |(i, j)| {
            (1.5f32 + (i * 100 + j) as f32 * 0.001f32) as f64
        });
        let m = VelocityModel::new(10.0, 10.0, values).unwrap();
        let p = tmp("m.tvfw");
        write_grid(&m, &p).unwrap();
        let back = read_grid(&p).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn write_is_deterministic() {
        let m = VelocityModel::homogeneous(4, 5, 10.0, 12.5, 1.5).unwrap();
        let p1 = tmp("a.tvfw");
        let p2 = tmp("b.tvfw");
        write_grid(&m, &p1).unwrap();
        write_grid(&m, &p2).unwrap();
        assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    }

    #[test]
    fn constant_model_payload_words() {
        let m = VelocityModel::homogeneous(2, 2, 10.0, 10.0, 1.5).unwrap();
        let p = tmp("c.tvfw");
        write_grid(&m, &p).unwrap();
        let bytes = std::fs::read(p).unwrap();
        // magic(4) + version(2) + nz(4) + nx(4) + dz(8) + dx(8) = 30 byte header
        assert_eq!(bytes.len(), 30 + 16);
        let word = 1.5f32.to_le_bytes();
        for c in bytes[30..].chunks_exact(4) {
            assert_eq!(c, word);
        }
    }

    #[test]
    fn truncated_payload_is_dimension_mismatch() {
        let m = VelocityModel::homogeneous(4, 4, 10.0, 10.0, 2.0).unwrap();
        let p = tmp("t.tvfw");
        write_grid(&m, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.truncate(bytes.len() - 6);
        std::fs::write(&p, bytes).unwrap();
        match read_grid(&p) {
            Err(Error::DimensionMismatch(_)) => {}
            other => panic!("expected DimensionMismatch, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_malformed_header() {
        let p = tmp("bad.tvfw");
        std::fs::write(&p, b"NOPE\x01\x00").unwrap();
        match read_grid(&p) {
            Err(Error::MalformedHeader(_)) => {}
            other => panic!("expected MalformedHeader, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_payload_rejected() {
        let m = VelocityModel::homogeneous(2, 2, 10.0, 10.0, 2.0).unwrap();
        let p = tmp("nan.tvfw");
        write_grid(&m, &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        let nan = f32::NAN.to_le_bytes();
        bytes[30..34].copy_from_slice(&nan);
        std::fs::write(&p, bytes).unwrap();
        match read_grid(&p) {
            Err(Error::NonFinite(_)) => {}
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn gather_round_trip() {
        let data = ndarray::Array3::from_shape_fn((3, 7, 5), |(s, t, r)| {
            ((s * 35 + t * 5 + r) as f32).sin() as f64
        });
        let p = tmp("g.tvfg");
        write_gather(&data, 0.001, &p).unwrap();
        let back = read_gather(&p).unwrap();
        assert_eq!(back.dt, 0.001);
        assert_eq!(back.data, data);
    }
}

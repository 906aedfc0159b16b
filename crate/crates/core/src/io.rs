//! File formats: the native QF1 lattice dump, CSV, and legacy VTK export.
//!
//! QF1 is a one-line ASCII header followed by raw little-endian f64 data:
//!
//! ```text
//! QF1 <nx> <ny> <nz> <components> <ox> <oy> <oz> <h>\n
//! ```
//!
//! then `nx * ny * nz * components` doubles, components interleaved per
//! voxel, x fastest and z slowest — the in-memory layout, so writes and
//! reads are single passes. Header floats use the shortest representation
//! that round-trips. The mask is not stored: a QF1 file is a raw lattice,
//! and attaching it to a domain re-checks only the geometry.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, StarDomain, Support};
use crate::vec3::{vec3, Vec3};

/// A field detached from any domain: the full lattice with its geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct RawField {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub comps: usize,
    pub origin: Vec3,
    pub h: f64,
    pub data: Vec<f64>,
}

impl RawField {
    /// Detach a field from its domain (halo layers included).
    pub fn from_field(f: &Field) -> RawField {
        let grid = f.domain().grid();
        let (nx, ny, nz) = grid.dims();
        RawField {
            nx,
            ny,
            nz,
            comps: f.comps(),
            origin: grid.origin(),
            h: grid.spacing(),
            data: f.data().to_vec(),
        }
    }

    /// Attach to a domain whose grid has the same geometry. The data is
    /// trusted over the whole lattice, so the result carries extended
    /// support; the caller owns the question of where it was meaningful.
    pub fn into_field(self, dom: &Arc<StarDomain>) -> Result<Field> {
        let grid = dom.grid();
        let (nx, ny, nz) = grid.dims();
        if (nx, ny, nz) != (self.nx, self.ny, self.nz) {
            return Err(Error::Format(format!(
                "lattice is {}x{}x{} but the domain grid is {}x{}x{}",
                self.nx, self.ny, self.nz, nx, ny, nz
            )));
        }
        let dh = (grid.spacing() - self.h).abs();
        let dorigin = (grid.origin() - self.origin).norm();
        if dh > 1e-12 * self.h.abs() || dorigin > 1e-9 * (1.0 + self.h.abs()) {
            return Err(Error::Format(format!(
                "lattice geometry mismatch: file h = {}, origin = ({}, {}, {})",
                self.h, self.origin.x, self.origin.y, self.origin.z
            )));
        }
        let mut f = Field::zeros(dom, self.comps, Support::Extended);
        f.data_mut().copy_from_slice(&self.data);
        Ok(f)
    }

    fn len(&self) -> usize {
        self.nx * self.ny * self.nz * self.comps
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::Format("zero-sized lattice".to_string()));
        }
        if self.comps == 0 || self.comps > 4 {
            return Err(Error::Format(format!(
                "{} components (expected 1, 3, or 4)",
                self.comps
            )));
        }
        if !(self.h > 0.0) {
            return Err(Error::BadSpacing(self.h));
        }
        if self.data.len() != self.len() {
            return Err(Error::Format(format!(
                "payload holds {} values, header implies {}",
                self.data.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// Write a QF1 file.
pub fn write_qf1(path: &Path, raw: &RawField) -> Result<()> {
    raw.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "QF1 {} {} {} {} {} {} {} {}",
        raw.nx, raw.ny, raw.nz, raw.comps, raw.origin.x, raw.origin.y, raw.origin.z, raw.h
    )?;
    let mut buf = Vec::with_capacity(raw.data.len() * 8);
    for &v in &raw.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

/// Read a QF1 file.
pub fn read_qf1(path: &Path) -> Result<RawField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 9 || toks[0] != "QF1" {
        return Err(Error::Format(format!(
            "bad QF1 header: {:?} (want `QF1 nx ny nz comps ox oy oz h`)",
            header.trim_end()
        )));
    }
    let dim = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad integer `{s}` in QF1 header")))
    };
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Format(format!("bad float `{s}` in QF1 header")))
    };
    let (nx, ny, nz, comps) = (dim(toks[1])?, dim(toks[2])?, dim(toks[3])?, dim(toks[4])?);
    let origin = vec3(num(toks[5])?, num(toks[6])?, num(toks[7])?);
    let h = num(toks[8])?;
    let count = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nz))
        .and_then(|v| v.checked_mul(comps))
        .ok_or_else(|| Error::Format("QF1 header overflows".to_string()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Format(format!(
            "QF1 payload is {} bytes, header implies {}",
            bytes.len(),
            count * 8
        )));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let raw = RawField { nx, ny, nz, comps, origin, h, data };
    raw.validate()?;
    Ok(raw)
}

/// Write one CSV row per voxel: `x,y,z,c0[,c1[,c2[,c3]]]`.
pub fn write_csv(path: &Path, raw: &RawField) -> Result<()> {
    raw.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    let heads = ["c0", "c1", "c2", "c3"];
    writeln!(w, "x,y,z,{}", heads[..raw.comps].join(","))?;
    let mut idx = 0usize;
    for k in 0..raw.nz {
        for j in 0..raw.ny {
            for i in 0..raw.nx {
                let p = raw.origin + vec3(i as f64, j as f64, k as f64) * raw.h;
                write!(w, "{},{},{}", p.x, p.y, p.z)?;
                for c in 0..raw.comps {
                    write!(w, ",{}", raw.data[idx * raw.comps + c])?;
                }
                writeln!(w)?;
                idx += 1;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Write a legacy-VTK structured-points file (ASCII). One component becomes
/// a SCALARS array, three a VECTORS array, four a FIELD array, all named
/// after `name`.
pub fn write_vtk(path: &Path, name: &str, raw: &RawField) -> Result<()> {
    raw.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{name}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", raw.nx, raw.ny, raw.nz)?;
    writeln!(w, "ORIGIN {} {} {}", raw.origin.x, raw.origin.y, raw.origin.z)?;
    writeln!(w, "SPACING {} {} {}", raw.h, raw.h, raw.h)?;
    let n = raw.nx * raw.ny * raw.nz;
    writeln!(w, "POINT_DATA {n}")?;
    match raw.comps {
        1 => {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
        }
        3 => writeln!(w, "VECTORS {name} double")?,
        _ => {
            writeln!(w, "FIELD attributes 1")?;
            writeln!(w, "{name} {} {} double", raw.comps, n)?;
        }
    }
    for idx in 0..n {
        let row: Vec<String> = (0..raw.comps)
            .map(|c| format!("{}", raw.data[idx * raw.comps + c]))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StarDomain;

    fn sample() -> (Arc<StarDomain>, Field) {
        let dom = StarDomain::ball(8, 1.0, Vec3::ZERO).unwrap();
        let f = Field::from_vector_fn(&dom, |p| vec3(p.x, p.y * p.z, -p.x + 0.25));
        (dom, f)
    }

    #[test]
    fn qf1_round_trips_bit_exactly() {
        let (dom, f) = sample();
        let dir = std::env::temp_dir().join("divcurl-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.qf1");
        let raw = RawField::from_field(&f);
        write_qf1(&path, &raw).unwrap();
        let back = read_qf1(&path).unwrap();
        assert_eq!(raw, back);
        let g = back.into_field(&dom).unwrap();
        assert_eq!(f.data(), g.data());
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn qf1_rejects_truncated_payload() {
        let (_, f) = sample();
        let dir = std::env::temp_dir().join("divcurl-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("truncated.qf1");
        write_qf1(&path, &RawField::from_field(&f)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        let err = read_qf1(&path).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn into_field_rejects_wrong_geometry() {
        let (_, f) = sample();
        let other = StarDomain::ball(10, 1.0, Vec3::ZERO).unwrap();
        let raw = RawField::from_field(&f);
        let err = raw.into_field(&other).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn header_floats_round_trip_shortest() {
        let h = 2.0 / 28.0; // not exactly representable in decimal
        let s = format!("{h}");
        assert_eq!(s.parse::<f64>().unwrap(), h);
    }
}

//! Binary snapshot format and CSV slice export.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "FNLS" | version u32 | dim u32 | n u32 | half_length f64 | time f64
//! [version 2 only: s f64 | p f64 | c_opt f64 | residual f64]
//! payload: (re f64, im f64) per sample, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

pub const MAGIC: &[u8; 4] = b"FNLS";
pub const VERSION_PLAIN: u32 = 1;
pub const VERSION_GROUND_STATE: u32 = 2;

/// Extra header fields carried by persisted ground states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateHeader {
    pub s: f64,
    pub p: f64,
    pub c_opt: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: Field,
    pub time: f64,
    pub ground_state: Option<GroundStateHeader>,
}

pub fn encode(field: &Field, time: f64, gs: Option<&GroundStateHeader>) -> Vec<u8> {
    let g = field.grid();
    let mut buf = Vec::with_capacity(48 + 16 * field.values().len());
    buf.extend_from_slice(MAGIC);
    let version = if gs.is_some() {
        VERSION_GROUND_STATE
    } else {
        VERSION_PLAIN
    };
    buf.extend_from_slice(&version.to_le_bytes());
    buf.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(g.n() as u32).to_le_bytes());
    buf.extend_from_slice(&g.half_length().to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    if let Some(h) = gs {
        for v in [h.s, h.p, h.c_opt, h.residual] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.pos + k > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated snapshot: need {} bytes at offset {}, have {}",
                k,
                self.pos,
                self.bytes.len()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, expected FNLS".into()));
    }
    let version = c.u32()?;
    if version != VERSION_PLAIN && version != VERSION_GROUND_STATE {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = c.u32()? as usize;
    let n = c.u32()? as usize;
    let half_length = c.f64()?;
    let time = c.f64()?;
    let ground_state = if version == VERSION_GROUND_STATE {
        Some(GroundStateHeader {
            s: c.f64()?,
            p: c.f64()?,
            c_opt: c.f64()?,
            residual: c.f64()?,
        })
    } else {
        None
    };
    let grid = Grid::new(dim, n, half_length).map_err(|e| Error::Format(e.to_string()))?;
    let len = grid.len();
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        let re = c.f64()?;
        let im = c.f64()?;
        values.push(Complex64::new(re, im));
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            bytes.len() - c.pos
        )));
    }
    Ok(Snapshot {
        field: Field::new(grid, values)?,
        time,
        ground_state,
    })
}

pub fn write(path: &Path, field: &Field, time: f64, gs: Option<&GroundStateHeader>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode(field, time, gs))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Rows `x, re, im, abs2` along axis 0 through the box center (the whole
/// field in 1D).
pub fn slice_csv(field: &Field) -> String {
    let g: &Arc<Grid> = field.grid();
    let c = g.center_index();
    let mut idx = vec![c; g.dim()];
    let mut out = String::from("x,re,im,abs2\n");
    for j in 0..g.n() {
        idx[0] = j;
        let v = field.values()[g.ravel(&idx)];
        out.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e}\n",
            g.coord(j),
            v.re,
            v.im,
            v.norm_sqr()
        ));
    }
    out
}

pub fn write_slice_csv(path: &Path, field: &Field) -> Result<()> {
    std::fs::write(path, slice_csv(field)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(dim: usize, n: usize) -> Field {
        let g = Grid::new(dim, n, 2.5).unwrap();
        Field::from_fn(g, |x| Complex64::new(x[0].cos(), x.iter().sum::<f64>()))
    }

    #[test]
    fn header_layout_is_fixed() {
        let f = sample(1, 4);
        let b = encode(&f, 0.25, None);
        assert_eq!(&b[..4], b"FNLS");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(b[16..24].try_into().unwrap()), 2.5);
        assert_eq!(f64::from_le_bytes(b[24..32].try_into().unwrap()), 0.25);
        assert_eq!(b.len(), 32 + 4 * 16);
        let re0 = f64::from_le_bytes(b[32..40].try_into().unwrap());
        assert_eq!(re0, f.values()[0].re);
    }

    #[test]
    fn ground_state_header_roundtrip() {
        let f = sample(2, 8);
        let h = GroundStateHeader {
            s: 0.7,
            p: 0.7,
            c_opt: 0.12,
            residual: 1e-11,
        };
        let snap = decode(&encode(&f, 0.0, Some(&h))).unwrap();
        assert_eq!(snap.ground_state, Some(h));
        assert_eq!(snap.field.values(), f.values());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(decode(b"XXXX"), Err(Error::Format(_))));
        let mut b = encode(&sample(1, 4), 0.0, None);
        b.pop();
        assert!(matches!(decode(&b), Err(Error::Format(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = slice_csv(&sample(2, 8));
        assert!(csv.starts_with("x,re,im,abs2\n"));
        assert_eq!(csv.lines().count(), 9);
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(vals in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 16), t in -10.0f64..10.0) {
            let g = Grid::new(2, 4, 1.25).unwrap();
            let f = Field::new(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap();
            let back = decode(&encode(&f, t, None)).unwrap();
            prop_assert_eq!(back.time, t);
            prop_assert_eq!(back.field.values(), f.values());
        }
    }
}

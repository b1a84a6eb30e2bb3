//! Binary snapshot of named tensor fields on one grid.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  content
//! 0       8     magic "PCFSNAP1"
//! 8       4     u32 format version (1)
//! 12      4     u32 complex dimension n
//! 16      4     u32 points per real axis N
//! 20      4     u32 precision in bits per complex value (64 or 128)
//! 24      8     f64 time t
//! 32      4     u32 number of fields F
//! then F records:
//!         4     u32 name length L, followed by L bytes of UTF-8
//!         16    u32 x 4 signature (p_up, p_down, q_up, q_down)
//!         ...   n^rank * N^(2n) complex values, component-major, each
//!               value stored as (re, im) in f32 or f64
//! ```
//!
//! Slots within a field follow the canonical order of the signature.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;

use super::GridSpec;
use crate::error::{Error, Result};
use crate::tensor::{ComplexTensorField, Signature};

pub const MAGIC: &[u8; 8] = b"PCFSNAP1";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Complex64,
    Complex128,
}

impl Precision {
    fn bits(self) -> u32 {
        match self {
            Precision::Complex64 => 64,
            Precision::Complex128 => 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub t: f64,
    pub fields: Vec<(String, ComplexTensorField)>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&ComplexTensorField> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn write_to(&self, w: &mut impl Write, precision: Precision) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [VERSION, self.grid.n() as u32, self.grid.points() as u32, precision.bits()] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&(self.fields.len() as u32).to_le_bytes())?;
        for (name, f) in &self.fields {
            if f.n() != self.grid.n() || f.npts() != self.grid.len() {
                return Err(Error::Snapshot(format!("field {name} does not live on the snapshot grid")));
            }
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            let s = f.signature();
            for v in [s.p_up, s.p_down, s.q_up, s.q_down] {
                w.write_all(&v.to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(f.data().len() * 16);
            for z in f.data() {
                match precision {
                    Precision::Complex64 => {
                        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
                        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
                    }
                    Precision::Complex128 => {
                        buf.extend_from_slice(&z.re.to_le_bytes());
                        buf.extend_from_slice(&z.im.to_le_bytes());
                    }
                }
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let n = read_u32(r)? as usize;
        let points = read_u32(r)? as usize;
        let precision = match read_u32(r)? {
            64 => Precision::Complex64,
            128 => Precision::Complex128,
            b => return Err(Error::Snapshot(format!("unsupported precision {b}"))),
        };
        let grid = GridSpec::new(n, points)?;
        let mut tb = [0u8; 8];
        r.read_exact(&mut tb)?;
        let t = f64::from_le_bytes(tb);
        let nfields = read_u32(r)?;
        let mut fields = Vec::new();
        for _ in 0..nfields {
            let len = read_u32(r)? as usize;
            if len > 1 << 16 {
                return Err(Error::Snapshot("field name too long".into()));
            }
            let mut nb = vec![0u8; len];
            r.read_exact(&mut nb)?;
            let name = String::from_utf8(nb).map_err(|_| Error::Snapshot("field name is not UTF-8".into()))?;
            let sig = Signature { p_up: read_u32(r)?, p_down: read_u32(r)?, q_up: read_u32(r)?, q_down: read_u32(r)? };
            if sig.rank() > 8 {
                return Err(Error::Snapshot(format!("implausible rank {}", sig.rank())));
            }
            let count = n.pow(sig.rank() as u32) * grid.len();
            let width = if precision == Precision::Complex64 { 8 } else { 16 };
            let mut raw = vec![0u8; count * width];
            r.read_exact(&mut raw)?;
            let data: Vec<C64> = raw
                .chunks_exact(width)
                .map(|c| match precision {
                    Precision::Complex64 => C64::new(
                        f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                        f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                    ),
                    Precision::Complex128 => C64::new(
                        f64::from_le_bytes(c[0..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..16].try_into().unwrap()),
                    ),
                })
                .collect();
            fields.push((name, ComplexTensorField::from_data(n, grid.len(), sig.slots(), data)?));
        }
        Ok(Self { grid, t, fields })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Slot;

    fn sample() -> Snapshot {
        let grid = GridSpec::new(1, 8).unwrap();
        let data: Vec<C64> = (0..64).map(|k| C64::new(k as f64 * 0.25, -(k as f64))).collect();
        let f = ComplexTensorField::from_data(1, 64, vec![Slot::Down, Slot::BarDown], data).unwrap();
        Snapshot { grid, t: 0.125, fields: vec![("metric".into(), f)] }
    }

    #[test]
    fn roundtrip_double_precision() {
        let s = sample();
        let mut buf = Vec::new();
        s.write_to(&mut buf, Precision::Complex128).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(Snapshot::read_from(&mut buf.as_slice()).unwrap(), s);
    }

    #[test]
    fn single_precision_halves_payload() {
        let s = sample();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        s.write_to(&mut a, Precision::Complex64).unwrap();
        s.write_to(&mut b, Precision::Complex128).unwrap();
        assert_eq!(b.len() - a.len(), 64 * 8);
        let back = Snapshot::read_from(&mut a.as_slice()).unwrap();
        assert_eq!(back.fields[0].1.slots(), &[Slot::Down, Slot::BarDown]);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf, Precision::Complex128).unwrap();
        buf[0] = b'X';
        assert!(Snapshot::read_from(&mut buf.as_slice()).is_err());
    }
}

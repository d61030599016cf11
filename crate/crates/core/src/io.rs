//! SQGF binary snapshots and coefficient tables.
//!
//! Layout: 32-byte header (magic "SQGF", version u16, shape u16, Mx u32,
//! My u32, 8 reserved bytes, payload length u64), then little-endian f64
//! coefficients in mode order. All header integers are little-endian.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::eigenbasis::{EigenBasis, ModeId, SpectralField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SQGF";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum ShapeCode {
    Rectangle = 0,
    Disk = 1,
}

impl ShapeCode {
    fn of(basis: &EigenBasis) -> Self {
        if basis.is_disk() {
            Self::Disk
        } else {
            Self::Rectangle
        }
    }
}

/// Decoded snapshot, not yet tied to a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub shape: ShapeCode,
    pub mx: u32,
    pub my: u32,
    pub coeffs: Vec<f64>,
}

impl Snapshot {
    /// Attach to a basis with matching shape and truncation.
    pub fn into_field(self, basis: &Arc<EigenBasis>) -> Result<SpectralField> {
        let t = basis.truncation();
        if self.shape != ShapeCode::of(basis) || self.mx as usize != t.first || self.my as usize != t.second {
            return Err(Error::Format(format!(
                "snapshot is {:?} {}x{}, basis is {:?} {}x{}",
                self.shape,
                self.mx,
                self.my,
                ShapeCode::of(basis),
                t.first,
                t.second
            )));
        }
        SpectralField::new(basis.clone(), self.coeffs)
    }
}

pub fn write_sqgf<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    let basis = field.basis();
    let t = basis.truncation();
    let dims = |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("truncation {v} exceeds u32")));
    let mut head = [0u8; HEADER_LEN];
    head[0..4].copy_from_slice(MAGIC);
    head[4..6].copy_from_slice(&VERSION.to_le_bytes());
    head[6..8].copy_from_slice(&(ShapeCode::of(basis) as u16).to_le_bytes());
    head[8..12].copy_from_slice(&dims(t.first)?.to_le_bytes());
    head[12..16].copy_from_slice(&dims(t.second)?.to_le_bytes());
    head[24..32].copy_from_slice(&((field.coeffs.len() * 8) as u64).to_le_bytes());
    w.write_all(&head)?;
    let mut payload = Vec::with_capacity(field.coeffs.len() * 8);
    for c in &field.coeffs {
        payload.extend_from_slice(&c.to_le_bytes());
    }
    w.write_all(&payload)?;
    Ok(())
}

pub fn read_sqgf<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut head = [0u8; HEADER_LEN];
    r.read_exact(&mut head).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic, not an SQGF file".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([head[i], head[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().expect("4 bytes"));
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported SQGF version {version}")));
    }
    let shape = match u16_at(6) {
        0 => ShapeCode::Rectangle,
        1 => ShapeCode::Disk,
        s => return Err(Error::Format(format!("unknown shape code {s}"))),
    };
    let (mx, my) = (u32_at(8), u32_at(12));
    let len = u64::from_le_bytes(head[24..32].try_into().expect("8 bytes"));
    if len % 8 != 0 {
        return Err(Error::Format(format!("payload length {len} is not a multiple of 8")));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    let coeffs = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Snapshot { shape, mx, my, coeffs })
}

/// Columns mode_index, m, n_or_k, lambda, coeff. Disk sine modes carry a
/// negative m so that rows stay distinguishable.
pub fn write_coefficients_csv<W: Write>(field: &SpectralField, w: W) -> Result<()> {
    let basis = field.basis();
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["mode_index", "m", "n_or_k", "lambda", "coeff"])?;
    for (i, (mode, (lam, c))) in basis.modes().iter().zip(basis.eigenvalues().iter().zip(&field.coeffs)).enumerate() {
        let (m, nk) = match *mode {
            ModeId::Rect { m, n } => (m as i64, n),
            ModeId::Disk { m, k, sine } => (if sine { -(m as i64) } else { m as i64 }, k),
        };
        wtr.write_record([i.to_string(), m.to_string(), nk.to_string(), lam.to_string(), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigenbasis::{build_basis, DomainSpec, Truncation};

    #[test]
    fn round_trip_is_bit_exact() {
        for dom in [DomainSpec::rectangle(1.0, 2.0).unwrap(), DomainSpec::disk(1.0).unwrap()] {
            let basis = build_basis(dom, Truncation::new(5, 4)).unwrap();
            let f = SpectralField::random(&basis, 7, 1.0);
            let mut buf = Vec::new();
            write_sqgf(&f, &mut buf).unwrap();
            assert_eq!(buf.len(), 32 + 8 * basis.len());
            assert_eq!(&buf[..4], b"SQGF");
            let back = read_sqgf(buf.as_slice()).unwrap().into_field(&basis).unwrap();
            assert!(back.coeffs.iter().zip(&f.coeffs).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn header_fields_are_little_endian() {
        let basis = build_basis(DomainSpec::rectangle(1.0, 1.0).unwrap(), Truncation::new(3, 2)).unwrap();
        let mut buf = Vec::new();
        write_sqgf(&SpectralField::unit(&basis, 0), &mut buf).unwrap();
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(&buf[8..16], &[3, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&buf[16..24], &[0; 8]);
        assert_eq!(u64::from_le_bytes(buf[24..32].try_into().unwrap()), 48);
        assert_eq!(&buf[32..40], &1f64.to_le_bytes());
    }

    #[test]
    fn malformed_input_is_rejected() {
        let basis = build_basis(DomainSpec::square(1.0).unwrap(), Truncation::square(3)).unwrap();
        let mut buf = Vec::new();
        write_sqgf(&SpectralField::zeros(&basis), &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_sqgf(bad.as_slice()).is_err());
        assert!(read_sqgf(&buf[..40]).is_err());
        let other = build_basis(DomainSpec::square(1.0).unwrap(), Truncation::square(4)).unwrap();
        assert!(read_sqgf(buf.as_slice()).unwrap().into_field(&other).is_err());
    }

    #[test]
    fn coefficient_table_lists_every_mode() {
        let basis = build_basis(DomainSpec::square(1.0).unwrap(), Truncation::square(2)).unwrap();
        let f = SpectralField::unit(&basis, 1);
        let mut buf = Vec::new();
        write_coefficients_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mode_index,m,n_or_k,lambda,coeff");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].ends_with(",1"));
    }
}

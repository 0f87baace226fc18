//! The YGF1 binary field format.
//!
//! Layout (little-endian): magic `YGF1`, version u32 = 1, nx ny nz u32,
//! ncomp u32 (1, 3 or 6), three f64 box lengths, then ncomp·nx·ny·nz f64
//! samples, component-major and x-fastest within a component.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Field, PeriodicGrid, ScalarField};

pub const MAGIC: &[u8; 4] = b"YGF1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 5 + 8 * 3;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Io(msg.into()))
}

pub fn encode_field(field: &Field) -> Vec<u8> {
    let g = field.grid();
    let n = g.n() as u32;
    let comps = field.components();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * comps.len() * g.len());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, n, n, n, comps.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for _ in 0..3 {
        out.extend_from_slice(&g.length().to_le_bytes());
    }
    for c in comps {
        for v in c.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        return format_err(format!(
            "field file too short for a header ({} bytes)",
            bytes.len()
        ));
    }
    if &bytes[..4] != MAGIC {
        return format_err("bad magic, expected YGF1");
    }
    let u32_at =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let f64_at = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
    let version = u32_at(0);
    if version != VERSION {
        return format_err(format!("unsupported field file version {version}"));
    }
    let (nx, ny, nz, ncomp) = (
        u32_at(1) as usize,
        u32_at(2) as usize,
        u32_at(3) as usize,
        u32_at(4) as usize,
    );
    if !matches!(ncomp, 1 | 3 | 6) {
        return format_err(format!("unsupported component count {ncomp}"));
    }
    let lengths = [f64_at(24), f64_at(32), f64_at(40)];
    let points = nx.checked_mul(ny).and_then(|p| p.checked_mul(nz));
    let expected = points
        .and_then(|p| p.checked_mul(8 * ncomp))
        .and_then(|p| p.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return format_err(format!(
            "payload size mismatch: header {nx}x{ny}x{nz}x{ncomp} needs {} bytes, file has {}",
            expected.map_or("overflowing".into(), |e| e.to_string()),
            bytes.len()
        ));
    }
    if nx != ny || ny != nz || lengths[0] != lengths[1] || lengths[1] != lengths[2] {
        return format_err(format!(
            "only cubic grids are supported, got {nx}x{ny}x{nz} with lengths {lengths:?}"
        ));
    }
    let grid = PeriodicGrid::new(nx, lengths[0])
        .map_err(|e| Error::Io(format!("bad grid in field file: {e}")))?;
    let len = grid.len();
    let comps = (0..ncomp)
        .map(|c| {
            let start = HEADER_LEN + 8 * c * len;
            let data = bytes[start..start + 8 * len]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            ScalarField::new(grid, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Field::from_components(comps)
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    std::fs::write(path, encode_field(field))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_field(path: &Path) -> Result<Field> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    decode_field(&bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VectorField3;

    #[test]
    fn header_layout_is_fixed() {
        let g = PeriodicGrid::new(4, 2.0).unwrap();
        let f = Field::Scalar(ScalarField::from_fn(g, |x, y, z| x + 2.0 * y - z));
        let b = encode_field(&f);
        assert_eq!(&b[..4], b"YGF1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[20..24].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(b[24..32].try_into().unwrap()), 2.0);
        assert_eq!(b.len(), HEADER_LEN + 8 * 64);
        // x-fastest: second sample is (h, 0, 0).
        assert_eq!(
            f64::from_le_bytes(b[HEADER_LEN + 8..HEADER_LEN + 16].try_into().unwrap()),
            0.5
        );
    }

    #[test]
    fn round_trip_and_rejections() {
        let g = PeriodicGrid::cube(6).unwrap();
        let v = Field::Vector(VectorField3::from_fn(g, |x, y, z| {
            [x.sin(), f64::MIN_POSITIVE * y, -z]
        }));
        let b = encode_field(&v);
        assert_eq!(decode_field(&b).unwrap(), v);
        assert!(decode_field(&b[..b.len() - 8]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode_field(&bad).is_err());
        let mut two = b.clone();
        two[20..24].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_field(&two), Err(Error::Io(_))));
    }
}

//! `.sfield` / `.dfield` binary formats.
//!
//! Layout: an ASCII magic line, one JSON header line, then little-endian
//! `f64` records in linear cell order (`i3` fastest). Strain files may end
//! with one mask byte per cell.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DisplacementField, StrainField, TorusGrid, COMPONENT_NAMES};
use crate::wells::SymMat3;

pub const STRAIN_MAGIC: &str = "SFLD1";
pub const DISP_MAGIC: &str = "DFLD1";
pub const DISP_COMPONENTS: [&str; 3] = ["u1", "u2", "u3"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("format error: {0}")]
    Format(#[from] FormatError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic line {0:?}")]
    BadMagic(String),
    #[error("unsupported format version {0:?}")]
    UnsupportedVersion(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("header describes an invalid grid: {0}")]
    Dims(String),
    #[error("payload has {got} bytes, expected {expected}")]
    Payload { expected: usize, got: usize },
    #[error("mask byte {value} at cell {cell} is neither 0 nor 1")]
    MaskByte { cell: usize, value: u8 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrainHeader {
    dims: [usize; 3],
    lengths: [f64; 3],
    components: Vec<String>,
    dtype: String,
    mask: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DispHeader {
    dims: [usize; 3],
    lengths: [f64; 3],
    components: Vec<String>,
    dtype: String,
    mean_strain: [f64; 6],
}

fn push_f64s(out: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_strain(field: &StrainField) -> Vec<u8> {
    let n = field.grid.len();
    let has_mask = field.mask.iter().any(|&m| m);
    let header = StrainHeader {
        dims: field.grid.dims,
        lengths: field.grid.lengths,
        components: COMPONENT_NAMES.iter().map(|s| s.to_string()).collect(),
        dtype: "f64".into(),
        mask: has_mask,
    };
    let mut out = format!("{STRAIN_MAGIC}\n{}\n", serde_json::to_string(&header).expect("header serializes"))
        .into_bytes();
    out.reserve(n * 48 + if has_mask { n } else { 0 });
    push_f64s(&mut out, (0..n).flat_map(|i| field.components.iter().map(move |c| c[i])));
    if has_mask {
        out.extend(field.mask.iter().map(|&m| m as u8));
    }
    out
}

pub fn encode_disp(field: &DisplacementField) -> Vec<u8> {
    let n = field.grid.len();
    let header = DispHeader {
        dims: field.grid.dims,
        lengths: field.grid.lengths,
        components: DISP_COMPONENTS.iter().map(|s| s.to_string()).collect(),
        dtype: "f64".into(),
        mean_strain: field.mean_strain.0,
    };
    let mut out = format!("{DISP_MAGIC}\n{}\n", serde_json::to_string(&header).expect("header serializes"))
        .into_bytes();
    push_f64s(&mut out, (0..n).flat_map(|i| field.periodic.iter().map(move |c| c[i])));
    out
}

/// Splits off a `\n`-terminated line.
fn take_line<'a>(bytes: &mut &'a [u8], what: &str) -> Result<&'a [u8], FormatError> {
    let pos = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::Header(format!("missing {what} line")))?;
    let line = &bytes[..pos];
    *bytes = &bytes[pos + 1..];
    Ok(line)
}

fn check_magic(bytes: &mut &[u8], expected: &str) -> Result<(), FormatError> {
    let family = &expected[..4];
    let line = match take_line(bytes, "magic") {
        Ok(line) => line,
        Err(_) => {
            let shown = String::from_utf8_lossy(&bytes[..bytes.len().min(8)]).into_owned();
            return Err(FormatError::BadMagic(shown));
        }
    };
    let text = String::from_utf8_lossy(line).into_owned();
    if text == expected {
        Ok(())
    } else if text.starts_with(family) {
        Err(FormatError::UnsupportedVersion(text))
    } else {
        Err(FormatError::BadMagic(text))
    }
}

fn parse_header<T: for<'de> Deserialize<'de>>(bytes: &mut &[u8]) -> Result<T, FormatError> {
    let line = take_line(bytes, "header")?;
    serde_json::from_slice(line).map_err(|e| FormatError::Header(e.to_string()))
}

fn check_common(dims: [usize; 3], lengths: [f64; 3], components: &[String], names: &[&str], dtype: &str) -> Result<TorusGrid, FormatError> {
    if dtype != "f64" {
        return Err(FormatError::Header(format!("unsupported dtype {dtype:?}")));
    }
    if components.len() != names.len() || components.iter().zip(names).any(|(a, b)| a != b) {
        return Err(FormatError::Header(format!("components must be {names:?}, got {components:?}")));
    }
    TorusGrid::new(dims, lengths).map_err(|e| FormatError::Dims(e.to_string()))
}

fn read_f64s(payload: &[u8], count: usize) -> Vec<f64> {
    payload[..count * 8]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}

pub fn decode_strain(mut bytes: &[u8]) -> Result<StrainField, FormatError> {
    check_magic(&mut bytes, STRAIN_MAGIC)?;
    let h: StrainHeader = parse_header(&mut bytes)?;
    let grid = check_common(h.dims, h.lengths, &h.components, &COMPONENT_NAMES, &h.dtype)?;
    let n = grid.len();
    let expected = n * 48 + if h.mask { n } else { 0 };
    if bytes.len() != expected {
        return Err(FormatError::Payload { expected, got: bytes.len() });
    }
    let values = read_f64s(bytes, 6 * n);
    let mut field = StrainField::zeros(grid);
    for (i, rec) in values.chunks_exact(6).enumerate() {
        for c in 0..6 {
            field.components[c][i] = rec[c];
        }
    }
    if h.mask {
        for (cell, &b) in bytes[48 * n..].iter().enumerate() {
            field.mask[cell] = match b {
                0 => false,
                1 => true,
                value => return Err(FormatError::MaskByte { cell, value }),
            };
        }
    }
    Ok(field)
}

pub fn decode_disp(mut bytes: &[u8]) -> Result<DisplacementField, FormatError> {
    check_magic(&mut bytes, DISP_MAGIC)?;
    let h: DispHeader = parse_header(&mut bytes)?;
    let grid = check_common(h.dims, h.lengths, &h.components, &DISP_COMPONENTS, &h.dtype)?;
    let n = grid.len();
    if bytes.len() != n * 24 {
        return Err(FormatError::Payload { expected: n * 24, got: bytes.len() });
    }
    let values = read_f64s(bytes, 3 * n);
    let mut field = DisplacementField::affine(grid, SymMat3(h.mean_strain));
    for (i, rec) in values.chunks_exact(3).enumerate() {
        for c in 0..3 {
            field.periodic[c][i] = rec[c];
        }
    }
    Ok(field)
}

pub fn write_field(path: impl AsRef<Path>, field: &StrainField) -> Result<(), IoError> {
    fs::write(path, encode_strain(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<StrainField, IoError> {
    Ok(decode_strain(&fs::read(path)?)?)
}

pub fn write_disp(path: impl AsRef<Path>, field: &DisplacementField) -> Result<(), IoError> {
    fs::write(path, encode_disp(field))?;
    Ok(())
}

pub fn read_disp(path: impl AsRef<Path>) -> Result<DisplacementField, IoError> {
    Ok(decode_disp(&fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StrainField {
        let grid = TorusGrid::new([4, 4, 4], [1.0, 2.0, 0.5]).unwrap();
        let mut f = StrainField::zeros(grid);
        for (c, comp) in f.components.iter_mut().enumerate() {
            for (i, v) in comp.iter_mut().enumerate() {
                *v = (i as f64 * 0.37 + c as f64).sin();
            }
        }
        f.mask[5] = true;
        f
    }

    #[test]
    fn header_layout() {
        let bytes = encode_strain(&sample());
        let text = String::from_utf8_lossy(&bytes[..160]);
        assert!(text.starts_with(
            "SFLD1\n{\"dims\":[4,4,4],\"lengths\":[1.0,2.0,0.5],\"components\":[\"e11\",\"e22\",\"e33\",\"e23\",\"e13\",\"e12\"],\"dtype\":\"f64\",\"mask\":true}\n"
        ));
    }

    #[test]
    fn truncated_payload() {
        let mut f = sample();
        f.mask.iter_mut().for_each(|m| *m = false);
        let bytes = encode_strain(&f);
        let cut = &bytes[..bytes.len() - 48];
        assert_eq!(decode_strain(cut), Err(FormatError::Payload { expected: 64 * 48, got: 63 * 48 }));
    }

    #[test]
    fn version_gate() {
        let mut bytes = encode_strain(&sample());
        bytes[4] = b'2';
        assert!(matches!(decode_strain(&bytes), Err(FormatError::UnsupportedVersion(v)) if v == "SFLD2"));
        assert!(matches!(decode_strain(b"HELLO\n{}\n"), Err(FormatError::BadMagic(_))));
        assert!(matches!(decode_strain(b""), Err(FormatError::BadMagic(_))));
    }

    #[test]
    fn bad_mask_byte_and_dims() {
        let bytes = encode_strain(&sample());
        let mut bad = bytes.clone();
        let last = bad.len() - 1;
        bad[last] = 7;
        assert!(matches!(decode_strain(&bad), Err(FormatError::MaskByte { value: 7, .. })));
        let zero = b"SFLD1\n{\"dims\":[0,4,4],\"lengths\":[1,1,1],\"components\":[\"e11\",\"e22\",\"e33\",\"e23\",\"e13\",\"e12\"],\"dtype\":\"f64\",\"mask\":false}\n";
        assert!(matches!(decode_strain(zero), Err(FormatError::Dims(_))));
    }

    #[test]
    fn disp_roundtrip() {
        let grid = TorusGrid::new([2, 3, 4], [1.0; 3]).unwrap();
        let mut d = DisplacementField::affine(grid, SymMat3::from_entries(1.0, 2.0, 3.0, 0.1, 0.2, 0.3));
        d.periodic[1][3] = -0.125;
        let back = decode_disp(&encode_disp(&d)).unwrap();
        assert_eq!(back, d);
        assert!(matches!(decode_strain(&encode_disp(&d)), Err(FormatError::BadMagic(_))));
    }
}

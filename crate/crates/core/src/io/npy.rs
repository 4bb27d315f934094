// SPDX-License-Identifier: MIT OR Apache-2.0

//! NPY v1.0 reader and writer for little-endian `f4`/`f8` tensors of rank 1
//! or 2 in C order.
//!
//! The writer reproduces numpy's own header layout byte for byte (sorted
//! keys, growth padding after the dictionary, 64-byte alignment), so a file
//! written by numpy survives a read/write cycle unchanged.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_LEN: usize = 10;
const ALIGN: usize = 64;
// Spare room numpy leaves after the dict so the first axis can grow in place.
const GROWTH_AXIS_MAX_DIGITS: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "<f4")]
    F32,
    #[serde(rename = "<f8")]
    F64,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    pub fn itemsize(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl Default for Dtype {
    fn default() -> Self {
        Dtype::F64
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descr())
    }
}

impl FromStr for Dtype {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "<f4" => Ok(Dtype::F32),
            "<f8" => Ok(Dtype::F64),
            other => Err(other.to_string()),
        }
    }
}

/// A decoded tensor. Values are always held as `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct NpyTensor {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    /// Row-major values.
    pub data: Vec<f64>,
}

impl NpyTensor {
    pub fn from_matrix(m: &DMatrix<f64>, dtype: Dtype) -> Self {
        let data = m.transpose().as_slice().to_vec();
        Self {
            shape: vec![m.nrows(), m.ncols()],
            dtype,
            data,
        }
    }

    /// Rank-2 tensors map to matrices directly; rank-1 tensors become a column.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self.shape.as_slice() {
            [n] => DMatrix::from_column_slice(*n, 1, &self.data),
            [r, c] => DMatrix::from_row_slice(*r, *c, &self.data),
            _ => unreachable!("rank is validated on decode"),
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<NpyTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    Ok(read_tensor(path)?.to_matrix())
}

/// Writes `tensor` with element type `dtype`.
pub fn write_tensor(path: impl AsRef<Path>, tensor: &NpyTensor, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(&tensor.shape, &tensor.data, dtype)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>, dtype: Dtype) -> Result<()> {
    write_tensor(path, &NpyTensor::from_matrix(m, dtype), dtype)
}

fn header_dict(shape: &[usize], dtype: Dtype) -> String {
    let shape_repr = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter().map(usize::to_string).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {shape_repr}, }}",
        dtype.descr()
    );
    if let Some(first) = shape.first() {
        let digits = first.to_string().len();
        dict.push_str(&" ".repeat(GROWTH_AXIS_MAX_DIGITS.saturating_sub(digits)));
    }
    dict
}

/// Serializes a row-major tensor into an NPY v1.0 byte stream.
pub fn encode(shape: &[usize], data: &[f64], dtype: Dtype) -> Result<Vec<u8>> {
    let numel: usize = shape.iter().product();
    if numel != data.len() {
        return Err(Error::mismatch("tensor element count", numel, data.len()));
    }
    let dict = header_dict(shape, dtype);
    let hlen = dict.len() + 1;
    let pad = ALIGN - (PREAMBLE_LEN + hlen) % ALIGN;
    let header_len = u16::try_from(hlen + pad).map_err(|_| Error::DimensionError(
        "NPY header exceeds the v1.0 limit".into(),
    ))?;

    let mut out = Vec::with_capacity(PREAMBLE_LEN + hlen + pad + numel * dtype.itemsize());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat(b' ').take(pad));
    out.push(b'\n');
    match dtype {
        Dtype::F64 => data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F32 => data
            .iter()
            .for_each(|v| out.extend_from_slice(&(*v as f32).to_le_bytes())),
    }
    Ok(out)
}

/// Parses an NPY v1.0 byte stream. `path` is used for error context only.
pub fn decode(bytes: &[u8], path: &Path) -> Result<NpyTensor> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < PREAMBLE_LEN {
        return Err(malformed("file ends inside the preamble"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            major,
            minor,
        });
    }
    let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE_LEN + hlen;
    if bytes.len() < data_start {
        return Err(malformed("file ends inside the header"));
    }
    if data_start % ALIGN != 0 {
        return Err(malformed("header is not 64-byte aligned"));
    }
    let header = std::str::from_utf8(&bytes[PREAMBLE_LEN..data_start])
        .ok()
        .filter(|h| h.is_ascii())
        .ok_or_else(|| malformed("header is not ASCII"))?;
    if !header.ends_with('\n') {
        return Err(malformed("header is not newline-terminated"));
    }
    let fields = HeaderFields::parse(header).map_err(|r| malformed(&r))?;

    let dtype: Dtype = fields.descr.parse().map_err(|descr| Error::UnsupportedDtype {
        path: path.to_path_buf(),
        descr,
    })?;
    if fields.fortran_order {
        return Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            reason: "fortran_order is True".into(),
        });
    }
    if !(1..=2).contains(&fields.shape.len()) {
        return Err(Error::UnsupportedLayout {
            path: path.to_path_buf(),
            reason: format!("rank {} (only 1 or 2 supported)", fields.shape.len()),
        });
    }
    let numel: usize = fields.shape.iter().product();
    let payload = &bytes[data_start..];
    let expected = numel * dtype.itemsize();
    if payload.len() != expected {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    let data = match dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Ok(NpyTensor {
        shape: fields.shape,
        dtype,
        data,
    })
}

struct HeaderFields {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Minimal parser for the Python dict literal numpy writes.
struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> std::result::Result<(), String> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected `{}` at byte {}", c as char, self.pos))
        }
    }

    fn string(&mut self) -> std::result::Result<String, String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(format!("expected string at byte {}", self.pos)),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err("unterminated string".into());
        }
        let out = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(out)
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("")
    }

    fn tuple(&mut self) -> std::result::Result<Vec<usize>, String> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(dims);
            }
            let w = self.word();
            let dim = w.parse().map_err(|_| format!("bad shape entry `{w}`"))?;
            dims.push(dim);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {}
                _ => return Err("malformed shape tuple".into()),
            }
        }
    }

    fn literal(&mut self) -> std::result::Result<Literal, String> {
        match self.peek() {
            Some(b'\'' | b'"') => self.string().map(Literal::Str),
            Some(b'(') => self.tuple().map(Literal::Tuple),
            _ => match self.word() {
                "True" => Ok(Literal::Bool(true)),
                "False" => Ok(Literal::Bool(false)),
                w => Err(format!("unexpected token `{w}`")),
            },
        }
    }
}

impl HeaderFields {
    fn parse(header: &str) -> std::result::Result<Self, String> {
        let mut cur = Cursor {
            s: header.as_bytes(),
            pos: 0,
        };
        cur.expect(b'{')?;
        let (mut descr, mut fortran, mut shape) = (None, None, None);
        loop {
            if cur.peek() == Some(b'}') {
                cur.pos += 1;
                break;
            }
            let key = cur.string()?;
            cur.expect(b':')?;
            let value = cur.literal()?;
            match (key.as_str(), value) {
                ("descr", Literal::Str(s)) => descr = Some(s),
                ("fortran_order", Literal::Bool(b)) => fortran = Some(b),
                ("shape", Literal::Tuple(t)) => shape = Some(t),
                (k @ ("descr" | "fortran_order" | "shape"), _) => {
                    return Err(format!("wrong value type for `{k}`"))
                }
                (k, _) => return Err(format!("unexpected key `{k}`")),
            }
            match cur.peek() {
                Some(b',') => cur.pos += 1,
                Some(b'}') => {}
                _ => return Err("expected `,` or `}`".into()),
            }
        }
        cur.skip_ws();
        if cur.pos != header.len() {
            return Err("trailing bytes after header dict".into());
        }
        Ok(Self {
            descr: descr.ok_or("missing key `descr`")?,
            fortran_order: fortran.ok_or("missing key `fortran_order`")?,
            shape: shape.ok_or("missing key `shape`")?,
        })
    }
}

/// Path of the `.npy` file for a tensor name inside a bundle directory.
pub fn tensor_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.npy"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.npy")
    }

    #[test]
    fn header_is_aligned_and_terminated() {
        for shape in [vec![1usize, 1], vec![768, 6], vec![5], vec![100_000, 1]] {
            let n = shape.iter().product();
            let bytes = encode(&shape, &vec![0.0; n], Dtype::F64).unwrap();
            let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
            assert_eq!((PREAMBLE_LEN + hlen) % 64, 0);
            assert_eq!(bytes[PREAMBLE_LEN + hlen - 1], b'\n');
        }
    }

    #[test]
    fn matches_numpy_layout_for_small_matrix() {
        let bytes = encode(&[3, 2], &[0.0; 6], Dtype::F64).unwrap();
        let header = std::str::from_utf8(&bytes[10..128]).unwrap();
        assert!(header.starts_with("{'descr': '<f8', 'fortran_order': False, 'shape': (3, 2), }"));
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 118);
        assert_eq!(bytes.len(), 128 + 48);
    }

    #[test]
    fn zero_scalar_payload() {
        let bytes = encode(&[1, 1], &[0.0], Dtype::F64).unwrap();
        let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!(&bytes[10 + hlen..], &[0u8; 8]);
    }

    #[test]
    fn decode_roundtrip_and_widening() {
        let data = [1.5, -2.25, 3.0e-8, 4.0, 5.0, 6.125];
        for dtype in [Dtype::F32, Dtype::F64] {
            let bytes = encode(&[3, 2], &data, dtype).unwrap();
            let t = decode(&bytes, p()).unwrap();
            assert_eq!(t.shape, vec![3, 2]);
            assert_eq!(t.dtype, dtype);
            let m = t.to_matrix();
            assert_eq!(m[(0, 1)], -2.25);
            assert_eq!(m[(2, 0)], 5.0);
            assert_eq!(encode(&t.shape, &t.data, dtype).unwrap(), bytes);
        }
    }

    #[test]
    fn rank_one_is_column() {
        let bytes = encode(&[3], &[1.0, 2.0, 3.0], Dtype::F64).unwrap();
        let m = decode(&bytes, p()).unwrap().to_matrix();
        assert_eq!(m.shape(), (3, 1));
    }

    #[test]
    fn malformed_inputs() {
        let good = encode(&[2, 2], &[1.0; 4], Dtype::F64).unwrap();

        let mut bad = good.clone();
        bad[1] = b'X';
        assert_eq!(decode(&bad, p()).unwrap_err().name(), "BadMagic");
        assert_eq!(decode(b"\x93NU", p()).unwrap_err().name(), "BadMagic");

        let mut v2 = good.clone();
        v2[6] = 2;
        assert_eq!(decode(&v2, p()).unwrap_err().name(), "UnsupportedVersion");

        let mut big = good.clone();
        let pos = big.windows(3).position(|w| w == b"<f8").unwrap();
        big[pos] = b'>';
        assert_eq!(decode(&big, p()).unwrap_err().name(), "UnsupportedDtype");

        let mut int = good.clone();
        int[pos + 1] = b'i';
        assert_eq!(decode(&int, p()).unwrap_err().name(), "UnsupportedDtype");

        let mut fortran = good.clone();
        let pos = fortran.windows(5).position(|w| w == b"False").unwrap();
        fortran[pos..pos + 5].copy_from_slice(b"True ");
        assert_eq!(decode(&fortran, p()).unwrap_err().name(), "UnsupportedLayout");

        let truncated = &good[..good.len() - 3];
        assert_eq!(decode(truncated, p()).unwrap_err().name(), "TruncatedPayload");
        let mut long = good.clone();
        long.push(0);
        assert_eq!(decode(&long, p()).unwrap_err().name(), "TruncatedPayload");

        let mut garbled = good.clone();
        garbled[10] = b'[';
        assert_eq!(decode(&garbled, p()).unwrap_err().name(), "MalformedHeader");

        let rank3 = encode(&[1, 2, 2], &[0.0; 4], Dtype::F64).unwrap();
        assert_eq!(decode(&rank3, p()).unwrap_err().name(), "UnsupportedLayout");
    }

    #[test]
    fn element_count_checked_on_encode() {
        assert_eq!(
            encode(&[2, 2], &[1.0; 3], Dtype::F64).unwrap_err().name(),
            "DimensionMismatch"
        );
    }
}

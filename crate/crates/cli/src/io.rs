//! Tensor files.
//!
//! `text-v1`:
//!
//! ```text
//! dims 2 3
//! width 8
//! 1 2 3
//! 4 5 6
//! ```
//!
//! Values are whitespace separated and row-major; line breaks after the
//! header carry no meaning.
//!
//! `bin-v1`: magic `QT01`, then little-endian `u32` rank, `u32` dims,
//! `u32` width, then the elements as little-endian `i64`.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use pasm_core::{QTensor, WordSpec};
use thiserror::Error;

pub const BIN_MAGIC: &[u8; 4] = b"QT01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TensorFormat {
    #[default]
    TextV1,
    BinV1,
}

impl TensorFormat {
    pub fn name(self) -> &'static str {
        match self {
            TensorFormat::TextV1 => "text-v1",
            TensorFormat::BinV1 => "bin-v1",
        }
    }

    /// Guesses the format from the leading bytes.
    pub fn detect(bytes: &[u8]) -> Self {
        if bytes.starts_with(BIN_MAGIC) {
            TensorFormat::BinV1
        } else {
            TensorFormat::TextV1
        }
    }
}

impl fmt::Display for TensorFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TensorFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text-v1" => Ok(TensorFormat::TextV1),
            "bin-v1" => Ok(TensorFormat::BinV1),
            other => Err(format!(
                "unknown tensor format {other:?} (expected text-v1 or bin-v1)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum TensorIoError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("malformed element {index}: {token:?}")]
    Element { index: usize, token: String },
    #[error("element {index} = {value} outside the {width}-bit range")]
    OutOfRange {
        index: usize,
        value: i64,
        width: u32,
    },
    #[error("truncated: expected {expected} elements, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("trailing data after {expected} elements")]
    Trailing { expected: usize },
    #[error(transparent)]
    Tensor(#[from] pasm_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn build(dims: Vec<usize>, width: u32, data: Vec<i64>) -> Result<QTensor, TensorIoError> {
    let word = WordSpec::new(width).map_err(|e| TensorIoError::Header(e.to_string()))?;
    if let Some((index, &value)) = data
        .iter()
        .enumerate()
        .find(|(_, &v)| !word.contains(v as i128))
    {
        return Err(TensorIoError::OutOfRange {
            index,
            value,
            width,
        });
    }
    Ok(QTensor::new(dims, word, data)?)
}

fn check_dims(dims: &[usize]) -> Result<usize, TensorIoError> {
    if dims.is_empty() {
        return Err(TensorIoError::Header(
            "dims must list at least one dimension".into(),
        ));
    }
    if dims.contains(&0) {
        return Err(TensorIoError::Header(format!(
            "zero-sized dimension in {dims:?}"
        )));
    }
    dims.iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| TensorIoError::Header(format!("dims {dims:?} overflow")))
}

pub fn parse_text(text: &str) -> Result<QTensor, TensorIoError> {
    let mut lines = text.lines();
    let dims_line = lines
        .next()
        .ok_or_else(|| TensorIoError::Header("missing dims line".into()))?;
    let mut parts = dims_line.split_whitespace();
    if parts.next() != Some("dims") {
        return Err(TensorIoError::Header(format!(
            "expected `dims ...`, got {dims_line:?}"
        )));
    }
    let dims = parts
        .map(|t| t.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| TensorIoError::Header(format!("bad dimension in {dims_line:?}: {e}")))?;
    let expected = check_dims(&dims)?;

    let width_line = lines
        .next()
        .ok_or_else(|| TensorIoError::Header("missing width line".into()))?;
    let width = match width_line.split_whitespace().collect::<Vec<_>>()[..] {
        ["width", w] => w
            .parse::<u32>()
            .map_err(|e| TensorIoError::Header(format!("bad width {w:?}: {e}")))?,
        _ => {
            return Err(TensorIoError::Header(format!(
                "expected `width W`, got {width_line:?}"
            )))
        }
    };

    let mut data = Vec::with_capacity(expected);
    for token in lines.flat_map(str::split_whitespace) {
        if data.len() == expected {
            return Err(TensorIoError::Trailing { expected });
        }
        let v = token.parse::<i64>().map_err(|_| TensorIoError::Element {
            index: data.len(),
            token: token.to_string(),
        })?;
        data.push(v);
    }
    if data.len() < expected {
        return Err(TensorIoError::Truncated {
            expected,
            found: data.len(),
        });
    }
    build(dims, width, data)
}

pub fn to_text(t: &QTensor) -> String {
    let mut out = String::from("dims");
    for d in t.shape() {
        out.push_str(&format!(" {d}"));
    }
    out.push_str(&format!("\nwidth {}\n", t.word().width()));
    let row = *t.shape().last().unwrap();
    for chunk in t.data().chunks(row) {
        let line: Vec<String> = chunk.iter().map(i64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N], TensorIoError> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| TensorIoError::Header(format!("file ends inside {what}")))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn u32(&mut self, what: &str) -> Result<u32, TensorIoError> {
        Ok(u32::from_le_bytes(self.take::<4>(what)?))
    }
}

pub fn parse_bin(bytes: &[u8]) -> Result<QTensor, TensorIoError> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>("magic")? != BIN_MAGIC {
        return Err(TensorIoError::Header("bad magic, expected QT01".into()));
    }
    let rank = r.u32("rank")? as usize;
    let dims = (0..rank)
        .map(|_| r.u32("dims").map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let expected = check_dims(&dims)?;
    let width = r.u32("width")?;

    let body = &bytes[r.pos..];
    let found = body.len() / 8;
    if found < expected {
        return Err(TensorIoError::Truncated { expected, found });
    }
    if body.len() != expected * 8 {
        return Err(TensorIoError::Trailing { expected });
    }
    let data = body
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    build(dims, width, data)
}

pub fn to_bin(t: &QTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * t.rank() + 8 * t.len());
    out.extend_from_slice(BIN_MAGIC);
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&t.word().width().to_le_bytes());
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], format: TensorFormat) -> Result<QTensor, TensorIoError> {
    match format {
        TensorFormat::BinV1 => parse_bin(bytes),
        TensorFormat::TextV1 => {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| TensorIoError::Header("text-v1 file is not UTF-8".into()))?;
            parse_text(text)
        }
    }
}

pub fn encode(t: &QTensor, format: TensorFormat) -> Vec<u8> {
    match format {
        TensorFormat::TextV1 => to_text(t).into_bytes(),
        TensorFormat::BinV1 => to_bin(t),
    }
}

/// Loads a tensor; `None` picks the format from the file's magic bytes.
pub fn load_tensor(path: &Path, format: Option<TensorFormat>) -> Result<QTensor, TensorIoError> {
    let bytes = fs::read(path)?;
    decode(
        &bytes,
        format.unwrap_or_else(|| TensorFormat::detect(&bytes)),
    )
}

pub fn store_tensor(path: &Path, t: &QTensor, format: TensorFormat) -> Result<(), TensorIoError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(t, format))?;
    Ok(())
}

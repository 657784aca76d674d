//! Reading and writing NPY v1.0 files.
//!
//! Only little-endian `u1`, `u2`, `i2`, `f4` and `f8` element types in C order
//! are supported. Headers are written exactly as numpy writes them, including
//! the spare growth padding, so files produced here are byte-identical to
//! `numpy.save` output for the same array.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;
/// numpy reserves room for the leading axis to grow to this many digits.
const GROWTH_AXIS_MAX_DIGITS: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    U8,
    U16,
    I16,
    F32,
    F64,
}

impl Dtype {
    pub fn descr(self) -> &'static str {
        match self {
            Dtype::U8 => "|u1",
            Dtype::U16 => "<u2",
            Dtype::I16 => "<i2",
            Dtype::F32 => "<f4",
            Dtype::F64 => "<f8",
        }
    }

    pub fn item_size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 | Dtype::I16 => 2,
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn from_descr(descr: &str) -> Result<Self> {
        match descr {
            "|u1" | "<u1" => Ok(Dtype::U8),
            "<u2" => Ok(Dtype::U16),
            "<i2" => Ok(Dtype::I16),
            "<f4" => Ok(Dtype::F32),
            "<f8" => Ok(Dtype::F64),
            other => Err(Error::UnsupportedDtype(other.to_string())),
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Dtype::U8 | Dtype::U16 | Dtype::I16)
    }

    /// Whether `v` survives a store/load cycle through this element type.
    fn represents(self, v: f64) -> bool {
        match self {
            Dtype::U8 => v.fract() == 0.0 && (0.0..=255.0).contains(&v),
            Dtype::U16 => v.fract() == 0.0 && (0.0..=65535.0).contains(&v),
            Dtype::I16 => v.fract() == 0.0 && (-32768.0..=32767.0).contains(&v),
            Dtype::F32 => v.is_nan() || (v as f32) as f64 == v,
            Dtype::F64 => true,
        }
    }
}

/// An n-dimensional C-ordered array with its on-disk element type.
///
/// Values are held as `f64`, which represents every supported element type
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    shape: Vec<usize>,
    dtype: Dtype,
    data: Vec<f64>,
}

impl NpyArray {
    pub fn new(shape: Vec<usize>, dtype: Dtype, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} holds {} elements but {} were given",
                shape,
                expected,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !dtype.represents(**v)) {
            return Err(Error::Format(format!(
                "value {bad} is not representable as {}",
                dtype.descr()
            )));
        }
        Ok(NpyArray { shape, dtype, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dtype(&self) -> Dtype {
        self.dtype
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Serializes the array to NPY v1.0 bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = header_text(self.dtype, &self.shape);
        let mut out = Vec::with_capacity(header.len() + 10 + self.data.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        for &v in &self.data {
            match self.dtype {
                Dtype::U8 => out.push(v as u8),
                Dtype::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
                Dtype::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
                Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 10 || &bytes[..6] != MAGIC {
            return Err(Error::Format("missing NPY magic string".into()));
        }
        if bytes[6..8] != [1, 0] {
            return Err(Error::Format(format!(
                "unsupported NPY version {}.{}",
                bytes[6], bytes[7]
            )));
        }
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        let body_start = 10 + header_len;
        if bytes.len() < body_start {
            return Err(Error::Format("truncated NPY header".into()));
        }
        let header = std::str::from_utf8(&bytes[10..body_start])
            .map_err(|_| Error::Format("NPY header is not ASCII".into()))?;
        let header = Header::parse(header)?;
        if header.fortran_order {
            return Err(Error::UnsupportedLayout);
        }
        let dtype = Dtype::from_descr(&header.descr)?;

        let count: usize = header.shape.iter().product();
        let payload = &bytes[body_start..];
        if payload.len() != count * dtype.item_size() {
            return Err(Error::Format(format!(
                "expected {} payload bytes for shape {:?}, found {}",
                count * dtype.item_size(),
                header.shape,
                payload.len()
            )));
        }
        let data = match dtype {
            Dtype::U8 => payload.iter().map(|&b| b as f64).collect(),
            Dtype::U16 => payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64)
                .collect(),
            Dtype::I16 => payload
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
                .collect(),
            Dtype::F32 => payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect(),
            Dtype::F64 => payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        };
        Ok(NpyArray {
            shape: header.shape,
            dtype,
            data,
        })
    }

    pub fn is_integer(&self) -> bool {
        self.dtype.is_integer()
    }
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    NpyArray::from_bytes(&bytes)
}

pub fn write_npy(array: &NpyArray, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if array.data.is_empty() {
        return Err(Error::Shape("refusing to write an empty array".into()));
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&array.to_bytes()))
        .map_err(|e| Error::io(path, e))
}

fn shape_repr(shape: &[usize]) -> String {
    match shape {
        [] => "()".to_string(),
        [n] => format!("({n},)"),
        _ => {
            let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            format!("({})", parts.join(", "))
        }
    }
}

/// Header dictionary, growth padding, alignment padding and trailing newline.
fn header_text(dtype: Dtype, shape: &[usize]) -> String {
    let mut text = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        dtype.descr(),
        shape_repr(shape)
    );
    if let Some(first) = shape.first() {
        let digits = first.to_string().len();
        text.push_str(&" ".repeat(GROWTH_AXIS_MAX_DIGITS.saturating_sub(digits)));
    }
    let unpadded = MAGIC.len() + 2 + 2 + text.len() + 1;
    let pad = ALIGN - unpadded % ALIGN;
    text.push_str(&" ".repeat(pad));
    text.push('\n');
    text
}

#[derive(Debug)]
struct Header {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

#[derive(Debug)]
enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

impl Header {
    /// Parses the Python dict literal numpy writes into the header.
    fn parse(text: &str) -> Result<Header> {
        let mut p = LiteralParser {
            chars: text.trim().as_bytes(),
            pos: 0,
        };
        let mut descr = None;
        let mut fortran_order = None;
        let mut shape = None;

        p.expect(b'{')?;
        loop {
            p.skip_ws();
            if p.eat(b'}') {
                break;
            }
            let key = match p.literal()? {
                Literal::Str(k) => k,
                other => return Err(Error::Format(format!("non-string key {other:?}"))),
            };
            p.skip_ws();
            p.expect(b':')?;
            p.skip_ws();
            let value = p.literal()?;
            match (key.as_str(), value) {
                ("descr", Literal::Str(s)) => descr = Some(s),
                ("fortran_order", Literal::Bool(b)) => fortran_order = Some(b),
                ("shape", Literal::Tuple(t)) => shape = Some(t),
                (k, v) => return Err(Error::Format(format!("unexpected header entry {k}: {v:?}"))),
            }
            p.skip_ws();
            if !p.eat(b',') {
                p.skip_ws();
                p.expect(b'}')?;
                break;
            }
        }

        match (descr, fortran_order, shape) {
            (Some(descr), Some(fortran_order), Some(shape)) => Ok(Header {
                descr,
                fortran_order,
                shape,
            }),
            _ => Err(Error::Format(
                "header must define descr, fortran_order and shape".into(),
            )),
        }
    }
}

struct LiteralParser<'a> {
    chars: &'a [u8],
    pos: usize,
}

impl LiteralParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "expected {:?} at offset {} of NPY header",
                c as char, self.pos
            )))
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        match self.peek() {
            Some(q @ (b'\'' | b'"')) => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c != q) {
                    self.pos += 1;
                }
                let s = String::from_utf8_lossy(&self.chars[start..self.pos]).into_owned();
                self.expect(q)?;
                Ok(Literal::Str(s))
            }
            Some(b'(') => {
                self.pos += 1;
                let mut dims = Vec::new();
                loop {
                    self.skip_ws();
                    if self.eat(b')') {
                        break;
                    }
                    let start = self.pos;
                    while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let digits = std::str::from_utf8(&self.chars[start..self.pos]).unwrap_or("");
                    let dim = digits
                        .parse::<usize>()
                        .map_err(|_| Error::Format("bad shape dimension".into()))?;
                    dims.push(dim);
                    self.skip_ws();
                    if !self.eat(b',') {
                        self.skip_ws();
                        self.expect(b')')?;
                        break;
                    }
                }
                Ok(Literal::Tuple(dims))
            }
            _ => {
                let rest = &self.chars[self.pos..];
                if rest.starts_with(b"True") {
                    self.pos += 4;
                    Ok(Literal::Bool(true))
                } else if rest.starts_with(b"False") {
                    self.pos += 5;
                    Ok(Literal::Bool(false))
                } else {
                    Err(Error::Format(format!(
                        "unrecognized literal at offset {} of NPY header",
                        self.pos
                    )))
                }
            }
        }
    }
}

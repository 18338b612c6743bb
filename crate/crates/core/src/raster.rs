//! Scalar fields, binary masks and their on-disk formats.
//!
//! Fields load from PGM (`P2`/`P5`, 8- or 16-bit) or from a raw-float file:
//! a single JSON header line `{"w":W,"h":H}` followed by `W*H` little-endian
//! `f32` values in row-major order. Masks are written as 8-bit `P5` with
//! pixel values 0 and 255. Persistence diagrams and skeletons are CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A likelihood map on a pixel grid, values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyField { width, height });
        }
        if values.len() != width * height {
            return Err(Error::InvalidParams(format!(
                "{} values for a {width}x{height} field",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParams(format!(
                "value {} at index {i} is outside [0, 1]",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// A binary image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask2D {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask2D {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyField { width, height });
        }
        if bits.len() != width * height {
            return Err(Error::InvalidParams(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set_index(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Row-major indices of set pixels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// `true` if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask2D) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &BinaryMask2D) -> Result<BinaryMask2D> {
        ensure_same_dims(self.dims(), other.dims())?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Ok(Self {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    /// The `size`x`size` window with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> BinaryMask2D {
        let mut bits = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            bits.extend_from_slice(&self.bits[y * self.width + x0..y * self.width + x0 + w]);
        }
        Self {
            width: w,
            height: h,
            bits,
        }
    }
}

pub(crate) fn ensure_same_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Metadata reported alongside a loaded field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Raw-float values that were outside `[0, 1]` (or NaN) and got clamped.
    pub clamped: usize,
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField2D> {
    load_field_with_report(path).map(|(f, _)| f)
}

pub fn load_field_with_report(path: impl AsRef<Path>) -> Result<(ScalarField2D, LoadReport)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_field(&bytes)
}

/// Decodes a PGM or raw-float byte buffer.
pub fn decode_field(bytes: &[u8]) -> Result<(ScalarField2D, LoadReport)> {
    if bytes.first() == Some(&b'{') {
        return decode_raw_float(bytes);
    }
    let pgm = decode_pgm(bytes)?;
    let scale = pgm.maxval as f64;
    let values = pgm.samples.iter().map(|&s| s as f64 / scale).collect();
    Ok((ScalarField2D::new(pgm.width, pgm.height, values)?, LoadReport::default()))
}

#[derive(Serialize, Deserialize)]
struct RawHeader {
    w: usize,
    h: usize,
}

fn decode_raw_float(bytes: &[u8]) -> Result<(ScalarField2D, LoadReport)> {
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::MalformedHeader {
        offset: bytes.len(),
        reason: "raw-float header line is not terminated".into(),
    })?;
    let header: RawHeader = serde_json::from_slice(&bytes[..newline]).map_err(|e| Error::MalformedHeader {
        offset: e.column().saturating_sub(1),
        reason: e.to_string(),
    })?;
    if header.w == 0 || header.h == 0 {
        return Err(Error::MalformedHeader {
            offset: 0,
            reason: format!("zero dimension {}x{}", header.w, header.h),
        });
    }
    let start = newline + 1;
    let expected = header.w * header.h * 4;
    let payload = &bytes[start..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            offset: bytes.len(),
            expected,
            found: payload.len(),
        });
    }
    let mut clamped = 0;
    let values = payload[..expected]
        .chunks_exact(4)
        .map(|c| {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            if v.is_nan() {
                clamped += 1;
                0.0
            } else if !(0.0..=1.0).contains(&v) {
                clamped += 1;
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!("clamped {clamped} raw-float values into [0, 1]");
    }
    Ok((ScalarField2D::new(header.w, header.h, values)?, LoadReport { clamped }))
}

/// Encodes a field in the raw-float format.
pub fn encode_raw_float(field: &ScalarField2D) -> Vec<u8> {
    let header = serde_json::to_string(&RawHeader {
        w: field.width,
        h: field.height,
    })
    .expect("header serializes");
    let mut out = Vec::with_capacity(header.len() + 1 + field.values.len() * 4);
    out.extend_from_slice(header.as_bytes());
    out.push(b'\n');
    for &v in &field.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn save_field_raw(field: &ScalarField2D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_raw_float(field)).map_err(|e| Error::io(path, e))
}

/// Writes a quantized binary PGM with the given maxval (255 or 65535).
pub fn save_field_pgm(field: &ScalarField2D, path: impl AsRef<Path>, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    let samples: Vec<u32> = field
        .values
        .iter()
        .map(|&v| (v * maxval as f64).round() as u32)
        .collect();
    fs::write(path, encode_pgm(field.width, field.height, maxval as u32, &samples)).map_err(|e| Error::io(path, e))
}

pub fn save_mask(mask: &BinaryMask2D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_mask(mask)).map_err(|e| Error::io(path, e))
}

pub fn encode_mask(mask: &BinaryMask2D) -> Vec<u8> {
    let samples: Vec<u32> = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_pgm(mask.width, mask.height, 255, &samples)
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask2D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_mask(&bytes)
}

pub fn decode_mask(bytes: &[u8]) -> Result<BinaryMask2D> {
    let pgm = decode_pgm(bytes)?;
    let mut bits = Vec::with_capacity(pgm.samples.len());
    for (index, &value) in pgm.samples.iter().enumerate() {
        match value {
            0 => bits.push(false),
            v if v == pgm.maxval => bits.push(true),
            value => {
                return Err(Error::MalformedMask {
                    index,
                    value,
                    maxval: pgm.maxval,
                })
            }
        }
    }
    BinaryMask2D::new(pgm.width, pgm.height, bits)
}

struct Pgm {
    width: usize,
    height: usize,
    maxval: u32,
    samples: Vec<u32>,
}

fn encode_pgm(width: usize, height: usize, maxval: u32, samples: &[u32]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    for &s in samples {
        if maxval > 255 {
            out.extend_from_slice(&(s as u16).to_be_bytes());
        } else {
            out.push(s as u8);
        }
    }
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<(usize, &[u8])> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader {
                offset: start,
                reason: "unexpected end of header".into(),
            });
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<(usize, u64)> {
        let (offset, tok) = self.token()?;
        let parsed = std::str::from_utf8(tok).ok().and_then(|s| s.parse::<u64>().ok());
        match parsed {
            Some(n) => Ok((offset, n)),
            None => Err(Error::MalformedHeader {
                offset,
                reason: format!("{what} is not a non-negative integer"),
            }),
        }
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut r = HeaderReader { bytes, pos: 0 };
    let (offset, magic) = r.token()?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => {
            return Err(Error::MalformedHeader {
                offset,
                reason: "expected magic P2 or P5".into(),
            })
        }
    };
    let (w_off, width) = r.number("width")?;
    let (_, height) = r.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader {
            offset: w_off,
            reason: format!("zero dimension {width}x{height}"),
        });
    }
    let (m_off, maxval) = r.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::UnsupportedDepth {
            offset: m_off,
            maxval: maxval.min(u32::MAX as u64) as u32,
        });
    }
    let (width, height, maxval) = (width as usize, height as usize, maxval as u32);
    let n = width * height;
    let mut samples = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates maxval from the payload
        let start = r.pos + 1;
        let bpp = if maxval > 255 { 2 } else { 1 };
        let expected = n * bpp;
        let found = bytes.len().saturating_sub(start);
        if found < expected {
            return Err(Error::TruncatedPayload {
                offset: bytes.len(),
                expected,
                found,
            });
        }
        let payload = &bytes[start..start + expected];
        if bpp == 2 {
            samples.extend(payload.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32));
        } else {
            samples.extend(payload.iter().map(|&b| b as u32));
        }
    } else {
        for i in 0..n {
            let (offset, v) = match r.number("sample") {
                Ok(t) => t,
                Err(_) if r.pos >= bytes.len() => {
                    return Err(Error::TruncatedPayload {
                        offset: bytes.len(),
                        expected: n,
                        found: i,
                    })
                }
                Err(e) => return Err(e),
            };
            if v > maxval as u64 {
                return Err(Error::MalformedHeader {
                    offset,
                    reason: format!("sample {v} exceeds maxval {maxval}"),
                });
            }
            samples.push(v as u32);
        }
    }
    for &s in &samples {
        if s > maxval {
            return Err(Error::MalformedHeader {
                offset: 0,
                reason: format!("sample {s} exceeds maxval {maxval}"),
            });
        }
    }
    Ok(Pgm {
        width,
        height,
        maxval,
        samples,
    })
}

/// A multiset of (birth, death) pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub pairs: Vec<(f64, f64)>,
}

impl PersistenceDiagram {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Persistences `death - birth`, sorted ascending.
    pub fn persistences(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.pairs.iter().map(|(b, d)| d - b).collect();
        p.sort_by(f64::total_cmp);
        p
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("birth,death\n");
        for (b, d) in &self.pairs {
            let _ = writeln!(out, "{},{}", fmt_real(*b), fmt_real(*d));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("birth,death") => {}
            _ => {
                return Err(Error::MalformedHeader {
                    offset: 0,
                    reason: "expected header birth,death".into(),
                })
            }
        }
        let mut pairs = Vec::new();
        let mut offset = "birth,death\n".len();
        for line in lines {
            let parsed = line
                .split_once(',')
                .and_then(|(b, d)| Some((parse_real(b)?, parse_real(d)?)));
            match parsed {
                Some(p) => pairs.push(p),
                None => {
                    return Err(Error::MalformedHeader {
                        offset,
                        reason: format!("bad diagram row {line:?}"),
                    })
                }
            }
            offset += line.len() + 1;
        }
        Ok(Self { pairs })
    }
}

pub fn export_diagram(pd: &PersistenceDiagram, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pd.to_csv()).map_err(|e| Error::io(path, e))
}

/// Shortest representation that round-trips; `inf` for the infinite sentinel.
pub fn fmt_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        t => t.parse().ok(),
    }
}

/// Skeleton rows `x,y,branch_id`, one per rendered pixel of each listed branch.
pub fn skeleton_csv<'a>(width: usize, branches: impl IntoIterator<Item = (u32, &'a [u32])>) -> String {
    let mut out = String::from("x,y,branch_id\n");
    for (id, pixels) in branches {
        for &p in pixels {
            let p = p as usize;
            let _ = writeln!(out, "{},{},{id}", p % width, p / width);
        }
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

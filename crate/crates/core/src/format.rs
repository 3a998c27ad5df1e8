//! On-disk formats.
//!
//! All binary formats are little-endian.
//!
//! Polynomial batch (`CPLY`):
//!
//! ```text
//! "CPLY" | u32 version = 1 | u32 degree n | u32 precision (0 = fp32, 1 = fp64) | u64 count
//! count records of n (re, im) pairs, a[0] first; the leading 1 is implied
//! ```
//!
//! Root set (`CRTS`), values always fp64:
//!
//! ```text
//! "CRTS" | u32 version = 1 | u32 degree n | u64 count
//! count x n (re, im) f64 pairs, input order
//! ```
//!
//! Text roots: one polynomial per line, roots formatted as `re±imi` and
//! separated by tabs. The same complex syntax (whitespace separated, leading
//! coefficient last) is accepted as a raw polynomial listing.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use thiserror::Error;

use crate::polynomial::{make_monic, PolyError, Polynomial};
use crate::scalar::Precision;

pub const POLY_MAGIC: &[u8; 4] = b"CPLY";
pub const ROOTS_MAGIC: &[u8; 4] = b"CRTS";
pub const FORMAT_VERSION: u32 = 1;
/// Header sizes in bytes.
pub const POLY_HEADER_LEN: u64 = 24;
pub const ROOTS_HEADER_LEN: u64 = 20;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic bytes {found:?} (expected {expected:?})")]
    BadMagic { expected: String, found: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown precision flag {0}")]
    BadPrecision(u32),
    #[error("degree must be >= 1")]
    ZeroDegree,
    #[error("file ends before record {record} of {count}")]
    Truncated { record: u64, count: u64 },
    #[error("record {record}: coefficient {index} is not finite")]
    NonFinite { record: u64, index: usize },
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error("record {record}: {source}")]
    Degenerate { record: u64, source: PolyError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FormatError {
    pub fn is_io(&self) -> bool {
        matches!(self, FormatError::Io(_))
    }
}

fn magic_string(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Header of a `CPLY` stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchHeader {
    pub degree: usize,
    pub precision: Precision,
    pub count: u64,
}

impl BatchHeader {
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(POLY_MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_u32::<LittleEndian>(self.degree as u32)?;
        w.write_u32::<LittleEndian>(self.precision.flag())?;
        w.write_u64::<LittleEndian>(self.count)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, FormatError> {
        let mut magic = [0u8; 4];
        read_magic(r, &mut magic)?;
        if &magic != POLY_MAGIC {
            return Err(FormatError::BadMagic { expected: magic_string(POLY_MAGIC), found: magic_string(&magic) });
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let degree = r.read_u32::<LittleEndian>()? as usize;
        if degree == 0 {
            return Err(FormatError::ZeroDegree);
        }
        let flag = r.read_u32::<LittleEndian>()?;
        let precision = Precision::from_flag(flag).ok_or(FormatError::BadPrecision(flag))?;
        let count = r.read_u64::<LittleEndian>()?;
        Ok(Self { degree, precision, count })
    }
}

fn read_magic<R: Read>(r: &mut R, magic: &mut [u8; 4]) -> Result<(), FormatError> {
    let mut filled = 0;
    while filled < 4 {
        let got = r.read(&mut magic[filled..])?;
        if got == 0 {
            return Err(FormatError::BadMagic {
                expected: "4 magic bytes".into(),
                found: magic_string(&magic[..filled]),
            });
        }
        filled += got;
    }
    Ok(())
}

/// Streaming `CPLY` reader yielding fp64 polynomials (fp32 records widen
/// exactly).
pub struct BatchReader<R> {
    inner: R,
    header: BatchHeader,
    next: u64,
}

impl<R: Read> BatchReader<R> {
    pub fn new(mut inner: R) -> Result<Self, FormatError> {
        let header = BatchHeader::read_from(&mut inner)?;
        Ok(Self { inner, header, next: 0 })
    }

    pub fn header(&self) -> &BatchHeader {
        &self.header
    }

    fn read_value(&mut self) -> io::Result<f64> {
        match self.header.precision {
            Precision::Fp32 => self.inner.read_f32::<LittleEndian>().map(f64::from),
            Precision::Fp64 => self.inner.read_f64::<LittleEndian>(),
        }
    }

    fn read_record(&mut self) -> Result<Polynomial<f64>, FormatError> {
        let record = self.next;
        let mut coeffs = Vec::with_capacity(self.header.degree);
        for index in 0..self.header.degree {
            let parsed = self.read_value().and_then(|re| Ok((re, self.read_value()?)));
            let (re, im) = parsed.map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => FormatError::Truncated { record, count: self.header.count },
                _ => FormatError::Io(e),
            })?;
            if !re.is_finite() || !im.is_finite() {
                return Err(FormatError::NonFinite { record, index });
            }
            coeffs.push(Complex64::new(re, im));
        }
        self.next += 1;
        Ok(Polynomial::from_monic_coeffs(coeffs).expect("degree >= 1 and finite"))
    }
}

impl<R: Read> Iterator for BatchReader<R> {
    type Item = Result<Polynomial<f64>, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.header.count {
            return None;
        }
        let item = self.read_record();
        if item.is_err() {
            // stop after the first error
            self.next = self.header.count;
        }
        Some(item)
    }
}

/// `CPLY` writer. The count is patched into the header on `finish`.
pub struct BatchWriter<W: Write + Seek> {
    inner: W,
    header: BatchHeader,
}

impl<W: Write + Seek> BatchWriter<W> {
    pub fn new(mut inner: W, degree: usize, precision: Precision) -> io::Result<Self> {
        let header = BatchHeader { degree, precision, count: 0 };
        header.write_to(&mut inner)?;
        Ok(Self { inner, header })
    }

    pub fn push(&mut self, p: &Polynomial<f64>) -> io::Result<()> {
        assert_eq!(p.degree(), self.header.degree, "degree mismatch in batch writer");
        for c in p.coeffs() {
            match self.header.precision {
                Precision::Fp32 => {
                    self.inner.write_f32::<LittleEndian>(c.re as f32)?;
                    self.inner.write_f32::<LittleEndian>(c.im as f32)?;
                }
                Precision::Fp64 => {
                    self.inner.write_f64::<LittleEndian>(c.re)?;
                    self.inner.write_f64::<LittleEndian>(c.im)?;
                }
            }
        }
        self.header.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.seek(SeekFrom::Start(16))?;
        self.inner.write_u64::<LittleEndian>(self.header.count)?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_batch_file(path: &Path, polys: &[Polynomial<f64>], degree: usize, precision: Precision) -> io::Result<()> {
    let mut w = BatchWriter::new(BufWriter::new(File::create(path)?), degree, precision)?;
    for p in polys {
        w.push(p)?;
    }
    w.finish()?;
    Ok(())
}

/// `CRTS` writer; the count is patched on `finish`.
pub struct RootsWriter<W: Write + Seek> {
    inner: W,
    degree: usize,
    count: u64,
}

impl<W: Write + Seek> RootsWriter<W> {
    pub fn new(mut inner: W, degree: usize) -> io::Result<Self> {
        inner.write_all(ROOTS_MAGIC)?;
        inner.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        inner.write_u32::<LittleEndian>(degree as u32)?;
        inner.write_u64::<LittleEndian>(0)?;
        Ok(Self { inner, degree, count: 0 })
    }

    /// Appends one polynomial's roots.
    pub fn push(&mut self, roots: &[Complex64]) -> io::Result<()> {
        assert_eq!(roots.len(), self.degree, "root count mismatch in roots writer");
        for z in roots {
            self.inner.write_f64::<LittleEndian>(z.re)?;
            self.inner.write_f64::<LittleEndian>(z.im)?;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.seek(SeekFrom::Start(12))?;
        self.inner.write_u64::<LittleEndian>(self.count)?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Roots grouped per polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct RootsFile {
    pub degree: usize,
    pub roots: Vec<Vec<Complex64>>,
}

impl RootsFile {
    pub fn total_roots(&self) -> u64 {
        self.roots.iter().map(|r| r.len() as u64).sum()
    }

    pub fn iter_roots(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.roots.iter().flatten().copied()
    }
}

/// Reads a `CRTS` file, or the text roots format when the magic is absent.
pub fn read_roots(path: &Path) -> Result<RootsFile, FormatError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_roots(&bytes)
}

pub fn parse_roots(bytes: &[u8]) -> Result<RootsFile, FormatError> {
    if bytes.len() >= 4 && &bytes[..4] == ROOTS_MAGIC {
        return parse_roots_binary(bytes);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| FormatError::BadMagic {
        expected: magic_string(ROOTS_MAGIC),
        found: magic_string(&bytes[..bytes.len().min(4)]),
    })?;
    parse_roots_text(text)
}

fn parse_roots_binary(bytes: &[u8]) -> Result<RootsFile, FormatError> {
    let mut r = io::Cursor::new(bytes);
    r.seek(SeekFrom::Start(4))?;
    let version = r.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let degree = r.read_u32::<LittleEndian>()? as usize;
    if degree == 0 {
        return Err(FormatError::ZeroDegree);
    }
    let count = r.read_u64::<LittleEndian>()?;
    let expected = ROOTS_HEADER_LEN as u128 + count as u128 * degree as u128 * 16;
    if (bytes.len() as u128) < expected {
        let have = (bytes.len() as u64).saturating_sub(ROOTS_HEADER_LEN) / (degree as u64 * 16);
        return Err(FormatError::Truncated { record: have, count });
    }
    let mut roots = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let mut set = Vec::with_capacity(degree);
        for _ in 0..degree {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            set.push(Complex64::new(re, im));
        }
        roots.push(set);
    }
    Ok(RootsFile { degree, roots })
}

fn parse_roots_text(text: &str) -> Result<RootsFile, FormatError> {
    let mut roots = Vec::new();
    let mut degree = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let set = line
            .split_whitespace()
            .map(|tok| parse_complex(tok).map_err(|message| FormatError::Text { line: lineno + 1, message }))
            .collect::<Result<Vec<_>, _>>()?;
        degree = degree.max(set.len());
        roots.push(set);
    }
    Ok(RootsFile { degree, roots })
}

/// Formats `re±imi` with shortest round-trip decimal digits.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

/// Parses `re`, `imi`, `re±imi`, `i`, `-i`, `re±i`.
pub fn parse_complex(tok: &str) -> Result<Complex64, String> {
    let t = tok.trim();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    let bad = || format!("malformed complex literal '{tok}'");
    let parse_real = |s: &str| -> Result<f64, String> {
        match s {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => s.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not the leading one or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            let im = parse_real(&body[k..])?;
            Ok(Complex64::new(re, im))
        }
        None => Ok(Complex64::new(0.0, parse_real(body)?)),
    }
}

pub fn write_roots_text<W: Write>(w: &mut W, roots: &[Complex64]) -> io::Result<()> {
    for (k, z) in roots.iter().enumerate() {
        if k > 0 {
            w.write_all(b"\t")?;
        }
        w.write_all(format_complex(*z).as_bytes())?;
    }
    w.write_all(b"\n")
}

/// Reads whitespace-separated full coefficient lists (low degree first,
/// leading coefficient last), one polynomial per line, normalizing each to
/// monic form.
pub fn read_polynomial_text<R: BufRead>(r: R) -> Result<Vec<Polynomial<f64>>, FormatError> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coeffs = line
            .split_whitespace()
            .map(|tok| parse_complex(tok).map_err(|message| FormatError::Text { line: lineno + 1, message }))
            .collect::<Result<Vec<_>, _>>()?;
        let record = out.len() as u64;
        let p = make_monic(&coeffs).map_err(|source| match source {
            PolyError::NonFiniteCoefficient { index } => FormatError::NonFinite { record, index },
            PolyError::TooFewCoefficients { .. } => {
                FormatError::Text { line: lineno + 1, message: "a polynomial needs at least two coefficients".into() }
            }
            other => FormatError::Degenerate { record, source: other },
        })?;
        out.push(p);
    }
    Ok(out)
}

/// Polynomial input: binary `CPLY` when the magic matches, otherwise the
/// text listing.
pub enum PolynomialSource {
    Binary(BatchReader<BufReader<File>>),
    Text(std::vec::IntoIter<Polynomial<f64>>),
}

impl PolynomialSource {
    pub fn open(path: &Path) -> Result<Self, FormatError> {
        let mut file = BufReader::new(File::open(path)?);
        let head = file.fill_buf()?;
        if head.len() >= 4 && &head[..4] == POLY_MAGIC {
            return Ok(PolynomialSource::Binary(BatchReader::new(file)?));
        }
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let text = std::str::from_utf8(&bytes).map_err(|_| FormatError::BadMagic {
            expected: magic_string(POLY_MAGIC),
            found: magic_string(&bytes[..bytes.len().min(4)]),
        })?;
        let polys = read_polynomial_text(text.as_bytes())?;
        Ok(PolynomialSource::Text(polys.into_iter()))
    }

    /// Degree of the first record, if known without reading it.
    pub fn declared_degree(&self) -> Option<usize> {
        match self {
            PolynomialSource::Binary(r) => Some(r.header().degree),
            PolynomialSource::Text(it) => it.as_slice().first().map(Polynomial::degree),
        }
    }

    pub fn declared_precision(&self) -> Option<Precision> {
        match self {
            PolynomialSource::Binary(r) => Some(r.header().precision),
            PolynomialSource::Text(_) => None,
        }
    }
}

impl Iterator for PolynomialSource {
    type Item = Result<Polynomial<f64>, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            PolynomialSource::Binary(r) => r.next(),
            PolynomialSource::Text(it) => it.next().map(Ok),
        }
    }
}

//! Binary cube container and CSV reports.
//!
//! A container is one ASCII header line followed by the raw payload:
//!
//! ```text
//! HSIC1 <rows> <cols> <bands> <f64|f32> BSQ LE\n
//! ```
//!
//! The payload holds exactly `rows·cols·bands` little-endian scalars in
//! band-sequential row-major order. Writing as `f32` rounds to nearest even
//! and is lossy.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::cube::{Dims, HsiCube};
use crate::error::{Error, Result};
use crate::stats::{ImpulseRow, McReport, NormalityReport, RankRow, TimingRow};

pub const MAGIC: &str = "HSIC1";
const MAX_HEADER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dtype {
    #[default]
    F64,
    F32,
}

impl Dtype {
    pub fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::F64 => "f64",
            Dtype::F32 => "f32",
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64" => Ok(Dtype::F64),
            "f32" => Ok(Dtype::F32),
            other => Err(Error::UnknownDtype(other.to_string())),
        }
    }
}

/// Serializes a cube into container bytes.
pub fn encode_cube(cube: &HsiCube, dtype: Dtype) -> Result<Vec<u8>> {
    let d = cube.dims();
    let header = format!("{MAGIC} {} {} {} {} BSQ LE\n", d.rows, d.cols, d.bands, dtype.name());
    let mut out = Vec::with_capacity(header.len() + d.len() * dtype.width());
    out.extend_from_slice(header.as_bytes());
    match dtype {
        Dtype::F64 => cube.data().iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        Dtype::F32 => {
            for (index, &v) in cube.data().iter().enumerate() {
                let narrow = v as f32;
                if !narrow.is_finite() {
                    return Err(Error::OutOfBounds(format!("value {v} at index {index} overflows f32")));
                }
                out.extend_from_slice(&narrow.to_le_bytes());
            }
        }
    }
    Ok(out)
}

fn parse_dim(token: &str) -> Result<usize> {
    let canonical = !token.is_empty()
        && token.bytes().all(|b| b.is_ascii_digit())
        && (token == "0" || !token.starts_with('0'));
    let value = if canonical { token.parse::<usize>().ok() } else { None };
    match value {
        Some(v) if v > 0 => Ok(v),
        _ => Err(Error::MalformedHeader(format!("invalid dimension field {token:?}"))),
    }
}

fn parse_header(line: &str) -> Result<(Dims, Dtype)> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields[0] != MAGIC {
        return Err(Error::BadMagic(fields[0].chars().take(16).collect()));
    }
    if fields.len() != 7 {
        return Err(Error::MalformedHeader(format!("expected 7 fields, found {}", fields.len())));
    }
    let dims = Dims::new(parse_dim(fields[1])?, parse_dim(fields[2])?, parse_dim(fields[3])?);
    let dtype: Dtype = fields[4].parse()?;
    if fields[5] != "BSQ" {
        return Err(Error::MalformedHeader(format!("unsupported layout {:?}", fields[5])));
    }
    if fields[6] != "LE" {
        return Err(Error::MalformedHeader(format!("unsupported byte order {:?}", fields[6])));
    }
    Ok((dims, dtype))
}

/// Parses container bytes; `f32` payloads are widened to `f64`.
pub fn decode_cube(bytes: &[u8]) -> Result<HsiCube> {
    let scan = &bytes[..bytes.len().min(MAX_HEADER)];
    let Some(end) = scan.iter().position(|&b| b == b'\n') else {
        return Err(if bytes.starts_with(MAGIC.as_bytes()) {
            Error::MalformedHeader("header line is not terminated".into())
        } else {
            Error::BadMagic(String::from_utf8_lossy(&scan[..scan.len().min(16)]).into_owned())
        });
    };
    let line = std::str::from_utf8(&scan[..end]).map_err(|_| {
        if bytes.starts_with(MAGIC.as_bytes()) {
            Error::MalformedHeader("header is not ASCII".into())
        } else {
            Error::BadMagic(String::from_utf8_lossy(&scan[..end.min(16)]).into_owned())
        }
    })?;
    let (dims, dtype) = parse_header(line)?;
    let expected = dims
        .len()
        .checked_mul(dtype.width())
        .ok_or_else(|| Error::MalformedHeader(format!("payload size of {dims} overflows")))?;
    let payload = &bytes[end + 1..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            actual: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::TrailingBytes {
            expected,
            actual: payload.len(),
        });
    }
    let data = match dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
            .collect(),
    };
    HsiCube::new(dims, data)
}

pub fn write_cube(cube: &HsiCube, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_cube(cube, dtype)?).map_err(|e| Error::io(path, e))
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<HsiCube> {
    let path = path.as_ref();
    decode_cube(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// Real formatted with 17 significant digits; parses back to the same bits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A report type with a fixed CSV column order.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for McReport {
    const HEADER: &'static [&'static str] = &["sigma0", "impulse_ratio", "T", "mean_coverage", "std_coverage"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_real(self.noise.sigma0),
            fmt_real(self.noise.impulse_ratio),
            self.trials.to_string(),
            fmt_real(self.mean_coverage),
            fmt_real(self.std_coverage),
        ]
    }
}

/// A Q-Q point `(theoretical, empirical)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqPoint(pub f64, pub f64);

impl CsvRow for QqPoint {
    const HEADER: &'static [&'static str] = &["theoretical", "empirical"];
    fn fields(&self) -> Vec<String> {
        vec![fmt_real(self.0), fmt_real(self.1)]
    }
}

/// One scalar sample, the format read back by [`read_samples_csv`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleValue(pub f64);

impl CsvRow for SampleValue {
    const HEADER: &'static [&'static str] = &["value"];
    fn fields(&self) -> Vec<String> {
        vec![fmt_real(self.0)]
    }
}

impl CsvRow for NormalityReport {
    const HEADER: &'static [&'static str] = &["n", "w", "p_value"];
    fn fields(&self) -> Vec<String> {
        vec![self.n.to_string(), fmt_real(self.w), fmt_real(self.p_value)]
    }
}

impl CsvRow for RankRow {
    const HEADER: &'static [&'static str] = &["rank", "mean_coverage", "std_coverage"];
    fn fields(&self) -> Vec<String> {
        vec![self.rank.to_string(), fmt_real(self.mean_coverage), fmt_real(self.std_coverage)]
    }
}

impl CsvRow for ImpulseRow {
    const HEADER: &'static [&'static str] = &["sigma0", "impulse_ratio", "mean_coverage", "std_coverage"];
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_real(self.sigma0),
            fmt_real(self.impulse_ratio),
            fmt_real(self.mean_coverage),
            fmt_real(self.std_coverage),
        ]
    }
}

impl CsvRow for TimingRow {
    const HEADER: &'static [&'static str] = &["mc_trials", "mc_total", "lrma_only", "lrma_plus_uq"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.mc_trials.to_string(),
            fmt_real(self.mc_total),
            fmt_real(self.lrma_only),
            fmt_real(self.lrma_plus_uq),
        ]
    }
}

pub fn encode_report_csv<R: CsvRow>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn write_report_csv<R: CsvRow>(rows: &[R], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_report_csv(rows)?;
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(&bytes).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}

/// Reads a sample vector from the first column of a CSV file. A
/// non-numeric first row is taken as a header.
pub fn read_samples_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(file);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let Some(field) = rec.get(0).map(str::trim) else { continue };
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(Error::NonFinite { index: out.len() }),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(Error::InvalidArgument(format!(
                    "{}: row {} is not a number: {field:?}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

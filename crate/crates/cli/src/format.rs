//! On-disk array formats.
//!
//! Binary: 4-byte magic (`PTYC` complex, `PTYR` real), `u16` version, `u16`
//! rank, one `u64` per dimension, then the row-major payload (complex entries
//! as interleaved re/im), all little-endian.
//!
//! CSV: one header row, then one line per matrix row (or per entry for a
//! vector). Floats carry 17 significant digits so values round-trip exactly;
//! complex entries are written `re+imj`.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::CliError;

pub const COMPLEX_MAGIC: &[u8; 4] = b"PTYC";
pub const REAL_MAGIC: &[u8; 4] = b"PTYR";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Bin,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bin" => Some(Format::Bin),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }

    pub fn extension(self, complex: bool) -> &'static str {
        match (self, complex) {
            (Format::Bin, true) => "ptyc",
            (Format::Bin, false) => "ptyr",
            (Format::Csv, _) => "csv",
        }
    }

    /// Format implied by a file name.
    pub fn of_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Bin,
        }
    }
}

/// Row-major array with 1 or 2 dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Array<T> {
    pub dims: Vec<usize>,
    pub data: Vec<T>,
}

pub type ComplexArray = Array<Complex64>;
pub type RealArray = Array<f64>;

impl<T> Array<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self, CliError> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(CliError::format(format!("rank must be 1 or 2, got {}", dims.len())));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(CliError::format(format!(
                "dims {dims:?} describe {len} entries but {} were given",
                data.len()
            )));
        }
        Ok(Array { dims, data })
    }

    pub fn vector(data: Vec<T>) -> Self {
        Array {
            dims: vec![data.len()],
            data,
        }
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    fn columns(&self) -> usize {
        if self.rank() == 1 {
            1
        } else {
            self.dims[1]
        }
    }
}

trait Scalar: Sized + Copy {
    const MAGIC: &'static [u8; 4];
    const WIDTH: usize;
    fn put(&self, out: &mut Vec<u8>);
    fn take(bytes: &[u8]) -> Self;
    fn to_text(&self) -> String;
    fn from_text(s: &str) -> Option<Self>;
}

fn f64_text(v: f64) -> String {
    format!("{v:.16e}")
}

impl Scalar for f64 {
    const MAGIC: &'static [u8; 4] = REAL_MAGIC;
    const WIDTH: usize = 8;

    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn take(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }

    fn to_text(&self) -> String {
        f64_text(*self)
    }

    fn from_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Scalar for Complex64 {
    const MAGIC: &'static [u8; 4] = COMPLEX_MAGIC;
    const WIDTH: usize = 16;

    fn put(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }

    fn take(bytes: &[u8]) -> Self {
        Complex64::new(f64::take(&bytes[..8]), f64::take(&bytes[8..16]))
    }

    fn to_text(&self) -> String {
        let sign = if self.im.is_sign_negative() { '-' } else { '+' };
        format!("{}{sign}{}j", f64_text(self.re), f64_text(self.im.abs()))
    }

    fn from_text(s: &str) -> Option<Self> {
        let s = s.trim().strip_suffix('j')?;
        let bytes = s.as_bytes();
        // the separating sign is the last one not opening the string or an exponent
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
        let re: f64 = s[..split].parse().ok()?;
        let im: f64 = s[split..].parse().ok()?;
        Some(Complex64::new(re, im))
    }
}

fn encode<T: Scalar>(a: &Array<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * a.rank() + T::WIDTH * a.data.len());
    out.extend_from_slice(T::MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(a.rank() as u16).to_le_bytes());
    for &d in &a.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in &a.data {
        v.put(&mut out);
    }
    out
}

fn decode<T: Scalar>(bytes: &[u8]) -> Result<Array<T>, CliError> {
    if bytes.len() < 8 {
        return Err(CliError::format("file shorter than its header"));
    }
    if &bytes[..4] != T::MAGIC {
        return Err(CliError::format(format!(
            "expected magic {:?}, found {:?}",
            String::from_utf8_lossy(T::MAGIC),
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CliError::format(format!("unsupported format version {version}")));
    }
    let rank = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if rank == 0 || rank > 2 {
        return Err(CliError::format(format!("rank must be 1 or 2, got {rank}")));
    }
    let body = 8 + 8 * rank;
    if bytes.len() < body {
        return Err(CliError::format("truncated dimension header"));
    }
    let dims: Vec<usize> = (0..rank)
        .map(|i| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes")) as usize)
        .collect();
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| CliError::format("dimensions overflow"))?;
    let expected = len
        .checked_mul(T::WIDTH)
        .and_then(|n| n.checked_add(body))
        .ok_or_else(|| CliError::format("dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(CliError::format(format!(
            "payload holds {} bytes, dims {dims:?} need {}",
            bytes.len() - body,
            expected - body
        )));
    }
    let data = bytes[body..].chunks_exact(T::WIDTH).map(T::take).collect();
    Array::new(dims, data)
}

fn to_csv<T: Scalar>(a: &Array<T>) -> String {
    let cols = a.columns();
    let mut out = String::new();
    if a.rank() == 1 {
        out.push_str("value\n");
    } else {
        let header: Vec<String> = (0..cols).map(|c| format!("c{c}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
    }
    for row in a.data.chunks(cols.max(1)) {
        let cells: Vec<String> = row.iter().map(Scalar::to_text).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn from_csv<T: Scalar>(text: &str) -> Result<Array<T>, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CliError::format("empty CSV file"))?;
    let vector = header.trim() == "value";
    let cols = if vector { 1 } else { header.split(',').count() };
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols {
            return Err(CliError::format(format!(
                "CSV row {} has {} cells, header has {cols}",
                i + 1,
                cells.len()
            )));
        }
        for c in cells {
            data.push(T::from_text(c).ok_or_else(|| CliError::format(format!("cannot parse CSV cell {c:?}")))?);
        }
        rows += 1;
    }
    let dims = if vector { vec![rows] } else { vec![rows, cols] };
    Array::new(dims, data)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn encode_complex(a: &ComplexArray) -> Vec<u8> {
    encode(a)
}

pub fn encode_real(a: &RealArray) -> Vec<u8> {
    encode(a)
}

pub fn decode_complex(bytes: &[u8]) -> Result<ComplexArray, CliError> {
    decode(bytes)
}

pub fn decode_real(bytes: &[u8]) -> Result<RealArray, CliError> {
    decode(bytes)
}

pub fn complex_to_csv(a: &ComplexArray) -> String {
    to_csv(a)
}

pub fn real_to_csv(a: &RealArray) -> String {
    to_csv(a)
}

pub fn complex_from_csv(text: &str) -> Result<ComplexArray, CliError> {
    from_csv(text)
}

pub fn real_from_csv(text: &str) -> Result<RealArray, CliError> {
    from_csv(text)
}

pub fn write_complex(path: &Path, a: &ComplexArray) -> Result<(), CliError> {
    match Format::of_path(path) {
        Format::Bin => write_atomic(path, &encode(a)),
        Format::Csv => write_atomic(path, to_csv(a).as_bytes()),
    }
}

pub fn write_real(path: &Path, a: &RealArray) -> Result<(), CliError> {
    match Format::of_path(path) {
        Format::Bin => write_atomic(path, &encode(a)),
        Format::Csv => write_atomic(path, to_csv(a).as_bytes()),
    }
}

fn with_path<T>(path: &Path, r: Result<T, CliError>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        CliError::Format(msg) => CliError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_complex(path: &Path) -> Result<ComplexArray, CliError> {
    let bytes = read_bytes(path)?;
    with_path(
        path,
        match Format::of_path(path) {
            Format::Bin => decode(&bytes),
            Format::Csv => from_csv(&String::from_utf8_lossy(&bytes)),
        },
    )
}

pub fn read_real(path: &Path) -> Result<RealArray, CliError> {
    let bytes = read_bytes(path)?;
    with_path(
        path,
        match Format::of_path(path) {
            Format::Bin => decode(&bytes),
            Format::Csv => from_csv(&String::from_utf8_lossy(&bytes)),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let a = RealArray::new(vec![2, 3], vec![0.0; 6]).unwrap();
        let b = encode_real(&a);
        assert_eq!(&b[..4], b"PTYR");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(u16::from_le_bytes([b[6], b[7]]), 2);
        assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(b[16..24].try_into().unwrap()), 3);
        assert_eq!(b.len(), 24 + 48);
    }

    #[test]
    fn complex_cell_text() {
        let z = Complex64::new(-1.5e-7, -0.0);
        let t = z.to_text();
        assert!(t.ends_with('j'));
        let back = Complex64::from_text(&t).unwrap();
        assert_eq!(back.re.to_bits(), z.re.to_bits());
        assert_eq!(back.im.to_bits(), z.im.to_bits());
        assert_eq!(Complex64::from_text("1e-3+2E+4j"), Some(Complex64::new(1e-3, 2e4)));
    }

    #[test]
    fn wrong_magic_rejected() {
        let a = ComplexArray::vector(vec![Complex64::new(1.0, 2.0)]);
        assert!(decode_real(&encode_complex(&a)).is_err());
        let mut b = encode_complex(&a);
        b.pop();
        assert!(decode_complex(&b).is_err());
    }

    #[test]
    fn csv_shape_recovered() {
        let a = RealArray::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(real_from_csv(&real_to_csv(&a)).unwrap(), a);
        let v = RealArray::vector(vec![0.1, 0.2, 0.3]);
        assert_eq!(real_from_csv(&real_to_csv(&v)).unwrap(), v);
    }
}

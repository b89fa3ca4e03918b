//! Matrix file formats: Matrix Market text and a raw binary layout.
//!
//! Binary layout: magic bytes `SLRA`, version `u16 = 1`, `u32` rows, `u32`
//! cols, then `rows * cols` little-endian `f64` values in row-major order.
//! Both readers reject non-finite values. [`read_matrix`] sniffs the magic
//! bytes to pick the format.

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const BINARY_MAGIC: &[u8; 4] = b"SLRA";
pub const BINARY_VERSION: u16 = 1;

/// Reads a matrix from `path`, auto-detecting binary vs. Matrix Market.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 4];
    let got = file.read(&mut magic)?;
    drop(file);
    if got == 4 && &magic == BINARY_MAGIC {
        read_binary_file(path)
    } else {
        read_matrix_market_file(path)
    }
}

pub fn read_binary_file(path: &Path) -> Result<DenseMatrix> {
    read_binary(&mut BufReader::new(File::open(path)?))
}

pub fn read_binary(r: &mut impl Read) -> Result<DenseMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse("bad magic bytes for binary matrix".into()));
    }
    let mut u16buf = [0u8; 2];
    r.read_exact(&mut u16buf)?;
    let version = u16::from_le_bytes(u16buf);
    if version != BINARY_VERSION {
        return Err(Error::Parse(format!("unsupported binary version {version}")));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let rows = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let cols = u32::from_le_bytes(u32buf) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("binary matrix has a zero dimension".into()));
    }
    let mut data = vec![0.0f64; rows * cols];
    let mut f64buf = [0u8; 8];
    for v in data.iter_mut() {
        r.read_exact(&mut f64buf)?;
        *v = f64::from_le_bytes(f64buf);
        if !v.is_finite() {
            return Err(Error::Parse("binary matrix contains non-finite values".into()));
        }
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn write_binary_file(path: &Path, m: &DenseMatrix) -> Result<()> {
    write_binary(&mut BufWriter::new(File::create(path)?), m)
}

pub fn write_binary(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u32).to_le_bytes())?;
    w.write_all(&(m.cols() as u32).to_le_bytes())?;
    for v in m.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market_file(path: &Path) -> Result<DenseMatrix> {
    read_matrix_market(&mut BufReader::new(File::open(path)?))
}

struct MmHeader {
    coordinate: bool,
    symmetric: bool,
}

/// Reads Matrix Market `array` and `coordinate` formats with `real` or
/// `integer` fields and `general` or `symmetric` symmetry.
pub fn read_matrix_market(r: &mut impl BufRead) -> Result<DenseMatrix> {
    let mut lines = r.lines();
    let banner = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Parse("empty matrix market file".into())),
        }
    };
    let header = parse_banner(&banner)?;

    let mut tokens: Vec<f64> = Vec::new();
    let mut size_line: Option<Vec<usize>> = None;
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if size_line.is_none() {
            let dims: Vec<usize> = t
                .split_whitespace()
                .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad size entry `{s}`"))))
                .collect::<Result<_>>()?;
            let want = if header.coordinate { 3 } else { 2 };
            if dims.len() != want {
                return Err(Error::Parse(format!(
                    "size line needs {want} integers, got {}",
                    dims.len()
                )));
            }
            size_line = Some(dims);
            continue;
        }
        for s in t.split_whitespace() {
            let v: f64 = s
                .parse()
                .map_err(|_| Error::Parse(format!("bad numeric entry `{s}`")))?;
            tokens.push(v);
        }
    }
    let dims = size_line.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let (rows, cols) = (dims[0], dims[1]);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("matrix market size has a zero dimension".into()));
    }

    if header.coordinate {
        let nnz = dims[2];
        if tokens.len() != 3 * nnz {
            return Err(Error::Parse(format!(
                "expected {nnz} coordinate entries, found {}",
                tokens.len() / 3
            )));
        }
        let mut data = vec![0.0; rows * cols];
        for e in 0..nnz {
            let i = tokens[3 * e] as usize;
            let j = tokens[3 * e + 1] as usize;
            let v = tokens[3 * e + 2];
            if i < 1 || i > rows || j < 1 || j > cols {
                return Err(Error::Parse(format!("coordinate ({i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(Error::Parse("non-finite value in matrix market file".into()));
            }
            data[(i - 1) * cols + (j - 1)] += v;
            if header.symmetric && i != j {
                data[(j - 1) * cols + (i - 1)] += v;
            }
        }
        DenseMatrix::new(rows, cols, data)
    } else if header.symmetric {
        if rows != cols {
            return Err(Error::Parse("symmetric array matrix must be square".into()));
        }
        let expect = rows * (rows + 1) / 2;
        if tokens.len() != expect {
            return Err(Error::Parse(format!(
                "symmetric array needs {expect} entries, found {}",
                tokens.len()
            )));
        }
        if tokens.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite value in matrix market file".into()));
        }
        // Lower triangle, column-major.
        let mut data = vec![0.0; rows * cols];
        let mut it = tokens.into_iter();
        for j in 0..cols {
            for i in j..rows {
                let v = it.next().unwrap();
                data[i * cols + j] = v;
                data[j * cols + i] = v;
            }
        }
        DenseMatrix::new(rows, cols, data)
    } else {
        if tokens.len() != rows * cols {
            return Err(Error::Parse(format!(
                "array matrix needs {} entries, found {}",
                rows * cols,
                tokens.len()
            )));
        }
        if tokens.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite value in matrix market file".into()));
        }
        // Column-major on disk.
        let mut data = vec![0.0; rows * cols];
        let mut it = tokens.into_iter();
        for j in 0..cols {
            for i in 0..rows {
                data[i * cols + j] = it.next().unwrap();
            }
        }
        DenseMatrix::new(rows, cols, data)
    }
}

fn parse_banner(line: &str) -> Result<MmHeader> {
    let lower = line.to_ascii_lowercase();
    let parts: Vec<&str> = lower.split_whitespace().collect();
    if parts.len() < 5 || parts[0] != "%%matrixmarket" || parts[1] != "matrix" {
        return Err(Error::Parse(format!("not a matrix market banner: `{line}`")));
    }
    let coordinate = match parts[2] {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::Parse(format!("unsupported format `{other}`"))),
    };
    match parts[3] {
        "real" | "integer" | "double" => {}
        other => return Err(Error::Parse(format!("unsupported field `{other}`"))),
    }
    let symmetric = match parts[4] {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry `{other}`"))),
    };
    Ok(MmHeader { coordinate, symmetric })
}

pub fn write_matrix_market(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            writeln!(w, "{:.17e}", m.get(i, j))?;
        }
    }
    Ok(())
}

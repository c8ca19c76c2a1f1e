//! Matrix file formats.
//!
//! * CSV: one matrix row per line, no header. Real entries are plain decimals; complex
//!   entries are written as `a+bi` / `a-bi`. The reader accepts either form in any cell.
//! * Binary (`KSMAT1`), little-endian:
//!
//!   | bytes        | content                                   |
//!   |--------------|-------------------------------------------|
//!   | 6            | magic `KSMAT1`                            |
//!   | 8            | `u64` rows                                |
//!   | 8            | `u64` cols                                |
//!   | 1            | `u8` is_complex (0 or 1)                  |
//!   | 8·rows·cols  | row-major `f64` entries, if real          |
//!   | 16·rows·cols | row-major `(re, im)` `f64` pairs, if complex |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::multilinear::{Matrix, C64};

pub const BINARY_MAGIC: &[u8; 6] = b"KSMAT1";

pub fn format_entry(z: C64, complex: bool) -> String {
    if complex {
        format!("{}{:+}i", z.re, z.im)
    } else {
        format!("{}", z.re)
    }
}

pub fn parse_entry(s: &str) -> Result<C64> {
    let s = s.trim();
    let bad = || Error::Format(format!("cannot parse matrix entry {s:?}"));
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            let im = match &body[k..] {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(C64::new(re, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().map_err(|_| bad())?,
            };
            Ok(C64::new(0.0, im))
        }
    }
}

pub fn write_csv<W: Write>(m: &Matrix, out: W) -> Result<()> {
    let complex = !m.is_real();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in 0..m.rows() {
        w.write_record((0..m.cols()).map(|c| format_entry(m[(r, c)], complex)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(parse_entry).collect::<Result<Vec<_>>>()?);
    }
    Matrix::from_complex_rows(&rows)
}

pub fn write_binary<W: Write>(m: &Matrix, mut out: W) -> Result<()> {
    let complex = !m.is_real();
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(m.rows() as u64).to_le_bytes())?;
    out.write_all(&(m.cols() as u64).to_le_bytes())?;
    out.write_all(&[complex as u8])?;
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let z = m[(r, c)];
            out.write_all(&z.re.to_le_bytes())?;
            if complex {
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Matrix> {
    let mut magic = [0u8; 6];
    input.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("missing KSMAT1 magic".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut flag = [0u8; 1];
    input.read_exact(&mut flag)?;
    let complex = match flag[0] {
        0 => false,
        1 => true,
        f => return Err(Error::Format(format!("invalid is_complex flag {f}"))),
    };
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    let mut next = || -> Result<f64> {
        input.read_exact(&mut word)?;
        Ok(f64::from_le_bytes(word))
    };
    for _ in 0..count {
        let re = next()?;
        let im = if complex { next()? } else { 0.0 };
        data.push(C64::new(re, im));
    }
    Matrix::from_row_major(rows, cols, data)
}

/// Loads a matrix, choosing the format from the extension (`.csv`, otherwise binary).
pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let f = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(f)
    } else {
        read_binary(f)
    }
}

pub fn save_matrix(m: &Matrix, path: &Path) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_csv(m, f)
    } else {
        write_binary(m, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entry_forms() {
        assert_eq!(parse_entry("1.5").unwrap(), C64::new(1.5, 0.0));
        assert_eq!(parse_entry("1.5+2i").unwrap(), C64::new(1.5, 2.0));
        assert_eq!(parse_entry("-1-0.25i").unwrap(), C64::new(-1.0, -0.25));
        assert_eq!(parse_entry("1e-3-2e+2i").unwrap(), C64::new(1e-3, -200.0));
        assert_eq!(parse_entry("-3i").unwrap(), C64::new(0.0, -3.0));
        assert_eq!(parse_entry("2+i").unwrap(), C64::new(2.0, 1.0));
        assert!(parse_entry("abc").is_err());
    }

    #[test]
    fn csv_layout() {
        let m = Matrix::from_complex_rows(&[
            vec![C64::new(1.0, 0.5), C64::new(-2.0, -1.0)],
            vec![C64::new(0.0, 0.0), C64::new(3.25, 0.0)],
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1+0.5i,-2-1i\n0+0i,3.25+0i\n");
        assert_eq!(read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn binary_header_layout() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        assert_eq!(&buf[..6], b"KSMAT1");
        assert_eq!(u64::from_le_bytes(buf[6..14].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[14..22].try_into().unwrap()), 3);
        assert_eq!(buf[22], 0);
        assert_eq!(buf.len(), 23 + 3 * 8);
        assert_eq!(f64::from_le_bytes(buf[31..39].try_into().unwrap()), 2.0);
        assert_eq!(read_binary(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn binary_rejects_bad_magic_and_truncation() {
        assert!(read_binary(&b"KSMAT2xxxxxxxxxxxxxxxxx"[..]).is_err());
        let m = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_binary(buf.as_slice()).is_err());
    }
}

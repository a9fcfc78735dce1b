//! Field files, CSV number formatting and JSON helpers.
//!
//! A field file is four ASCII header lines followed by the raw values:
//!
//! ```text
//! GRSH1
//! <N> <l> <gamma>
//! <nodes axis 0> ... <nodes axis N+l-1>
//! <lo 0> <hi 0> ... <lo N+l-1> <hi N+l-1>
//! <node values, little-endian f64, lexicographic order (axis 0 slowest)>
//! ```
//!
//! Reals in the header are printed with the shortest representation that
//! parses back to the same `f64`, so a write/read cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::discrete::{Field, GridSpec};
use crate::geometry::GrushinParams;
use crate::{Error, Result};

pub const FIELD_MAGIC: &str = "GRSH1";

/// CSV formatting for reals: 17 significant digits, `.` decimal point.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn write_field<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let grid = field.grid();
    let p = grid.params();
    writeln!(out, "{FIELD_MAGIC}")?;
    writeln!(out, "{} {} {}", p.n(), p.l(), p.gamma())?;
    let dims: Vec<String> = grid.dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "{}", dims.join(" "))?;
    let bounds: Vec<String> = grid
        .lo()
        .iter()
        .zip(grid.hi())
        .flat_map(|(a, b)| [a.to_string(), b.to_string()])
        .collect();
    writeln!(out, "{}", bounds.join(" "))?;
    let mut buf = Vec::with_capacity(8 * field.len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

fn header_line<R: BufRead>(input: &mut R, what: &str) -> Result<String> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::HeaderMismatch(format!("missing {what} line")));
    }
    Ok(line.trim_end().to_string())
}

fn parse_all<T: std::str::FromStr>(line: &str, what: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::HeaderMismatch(format!("bad {what} entry '{t}'"))))
        .collect()
}

pub fn read_field<R: Read>(input: R) -> Result<Field> {
    let mut input = BufReader::new(input);
    let mut magic = vec![0u8; FIELD_MAGIC.len() + 1];
    let got = read_up_to(&mut input, &mut magic)?;
    if got < magic.len() || &magic[..FIELD_MAGIC.len()] != FIELD_MAGIC.as_bytes() || magic[FIELD_MAGIC.len()] != b'\n' {
        return Err(Error::BadMagic);
    }
    let pline = header_line(&mut input, "parameter")?;
    let toks: Vec<&str> = pline.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(Error::HeaderMismatch(format!("expected 'N l gamma', found '{pline}'")));
    }
    let parse_usize = |t: &str| t.parse::<usize>().map_err(|_| Error::HeaderMismatch(format!("bad dimension '{t}'")));
    let n = parse_usize(toks[0])?;
    let l = parse_usize(toks[1])?;
    let gamma: f64 = toks[2].parse().map_err(|_| Error::HeaderMismatch(format!("bad gamma '{}'", toks[2])))?;
    let params = GrushinParams::new(n, l, gamma).map_err(|e| Error::HeaderMismatch(e.to_string()))?;
    let dims: Vec<usize> = parse_all(&header_line(&mut input, "node count")?, "node count")?;
    let bounds: Vec<f64> = parse_all(&header_line(&mut input, "bounds")?, "bounds")?;
    if dims.len() != params.dim() || bounds.len() != 2 * params.dim() {
        return Err(Error::HeaderMismatch(format!(
            "expected {} axes, found {} counts and {} bounds",
            params.dim(),
            dims.len(),
            bounds.len()
        )));
    }
    let lo = bounds.iter().step_by(2).copied().collect();
    let hi = bounds.iter().skip(1).step_by(2).copied().collect();
    let grid = GridSpec::new(params, dims, lo, hi).map_err(|e| Error::HeaderMismatch(e.to_string()))?;
    let expected = grid.node_count() * 8;
    let mut payload = Vec::with_capacity(expected);
    input.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::TruncatedPayload { expected, found: payload.len() });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Field::from_values(Arc::new(grid), values)
}

fn read_up_to<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match input.read(&mut buf[got..])? {
            0 => break,
            k => got += k,
        }
    }
    Ok(got)
}

pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    write_field(field, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    read_field(File::open(path)?)
}

/// Writes `field` to `path` and reads it back.
pub fn field_roundtrip(field: &Field, path: impl AsRef<Path>) -> Result<Field> {
    save_field(field, &path)?;
    load_field(path)
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn create_csv(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn sample_field() -> Field {
        let p = GrushinParams::new(1, 1, 0.7).unwrap();
        let g = Arc::new(GridSpec::new(p, vec![5, 7], vec![-1.1, -0.3], vec![2.0 / 3.0, 0.1]).unwrap());
        let mut rng = SplitMix64::new(99);
        let vals = (0..g.node_count()).map(|_| rng.uniform(-1e3, 1e3)).collect();
        Field::from_values(g, vals).unwrap()
    }

    fn encode(f: &Field) -> Vec<u8> {
        let mut buf = Vec::new();
        write_field(f, &mut buf).unwrap();
        buf
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let f = sample_field();
        let back = read_field(&encode(&f)[..]).unwrap();
        assert_eq!(back.grid().as_ref(), f.grid().as_ref());
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupted_magic() {
        let mut buf = encode(&sample_field());
        buf[0] = b'X';
        assert!(matches!(read_field(&buf[..]), Err(Error::BadMagic)));
        assert!(matches!(read_field(&b"GRS"[..]), Err(Error::BadMagic)));
    }

    #[test]
    fn truncated_and_overlong_payload() {
        let buf = encode(&sample_field());
        let short = &buf[..buf.len() - 3];
        assert!(matches!(read_field(short), Err(Error::TruncatedPayload { .. })));
        let mut long = buf.clone();
        long.extend_from_slice(&[0; 8]);
        assert!(matches!(read_field(&long[..]), Err(Error::TruncatedPayload { .. })));
    }

    #[test]
    fn header_mismatch() {
        let buf = b"GRSH1\n1 1 1\n5 5 5\n0 1 0 1\n";
        assert!(matches!(read_field(&buf[..]), Err(Error::HeaderMismatch(_))));
        let buf = b"GRSH1\n1 1\n";
        assert!(matches!(read_field(&buf[..]), Err(Error::HeaderMismatch(_))));
    }

    #[test]
    fn csv_numbers_have_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}

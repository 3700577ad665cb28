//! Matrix text format: a first line holding `n`, then `n` comma-separated rows
//! of `n` entries written `re±imi`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{check_matrix, DenseMatrix};
use crate::error::{Error, Result};

/// Writes `re±imi` with 17 significant digits per component.
pub fn format_entry(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

pub fn parse_entry(raw: &str) -> Result<Complex64> {
    let s = raw.trim();
    let bad = || Error::Parse(format!("malformed entry {raw:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let parse = |t: &str| -> Result<f64> {
        let v: f64 = t.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let im_txt = &body[k..];
            let im = if im_txt == "+" || im_txt == "-" {
                parse(&format!("{im_txt}1"))?
            } else {
                parse(im_txt)?
            };
            Ok(Complex64::new(parse(&body[..k])?, im))
        }
        None => {
            // pure imaginary such as "2.5i" or "-i"
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                other => parse(other)?,
            };
            Ok(Complex64::new(0.0, im))
        }
    }
}

pub fn matrix_to_csv(m: &DenseMatrix) -> String {
    let n = m.nrows();
    let mut out = format!("{n}\n");
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_entry(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::Parse(format!("bad dimension line {header:?}")))?;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("expected {n} rows, found {i}")))?;
        let entries: Vec<&str> = line.split(',').collect();
        if entries.len() != n {
            return Err(Error::Parse(format!(
                "row {i} has {} entries, expected {n}",
                entries.len()
            )));
        }
        for (j, e) in entries.into_iter().enumerate() {
            m[(i, j)] = parse_entry(e)?;
        }
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing rows after matrix".into()));
    }
    Ok(m)
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    matrix_from_csv(&text)
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<()> {
    check_matrix(m)?;
    std::fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_short_forms() {
        assert_eq!(parse_entry("1.5-0.25i").unwrap(), Complex64::new(1.5, -0.25));
        assert_eq!(parse_entry("-2").unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(parse_entry("3i").unwrap(), Complex64::new(0.0, 3.0));
        assert_eq!(parse_entry("1e-3+2E+1i").unwrap(), Complex64::new(1e-3, 20.0));
        assert_eq!(parse_entry("-1-i").unwrap(), Complex64::new(-1.0, -1.0));
        assert!(parse_entry("nan+1i").is_err());
        assert!(parse_entry("1+xi").is_err());
    }

    #[test]
    fn rejects_ragged_files() {
        assert!(matrix_from_csv("2\n1,2\n3\n").is_err());
        assert!(matrix_from_csv("1\n1\n2\n").is_err());
        assert!(matrix_from_csv("").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(entries in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 9)) {
            let m = DenseMatrix::from_fn(3, 3, |i, j| {
                let (re, im) = entries[3 * i + j];
                Complex64::new(re, im)
            });
            let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}

//! Plain-text matrix and trajectory files.
//!
//! Matrix: first line `p`, then `p` rows of `p` whitespace-separated reals.
//! Trajectory: header `eta=<real> n=<int> p=<int> provenance=<tag> seed=<int>`,
//! then `n + 1` rows of `p` reals. Reals are written with 17 significant
//! digits, which round-trips every finite `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::simulate::{Provenance, Trajectory};

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        out.push_str(&fmt_real(*v));
    }
    out.push('\n');
}

pub fn matrix_to_string(m: &Matrix) -> String {
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        write_row(&mut out, row.iter());
    }
    out
}

fn parse_row(line: &str, lineno: usize, expect: usize) -> Result<Vec<f64>> {
    let vals = line
        .split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|e| Error::Parse { line: lineno, msg: format!("{tok:?}: {e}") }))
        .collect::<Result<Vec<f64>>>()?;
    if vals.len() != expect {
        return Err(Error::Parse { line: lineno, msg: format!("expected {expect} values, found {}", vals.len()) });
    }
    Ok(vals)
}

pub fn matrix_from_str(s: &str) -> Result<Matrix> {
    let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty matrix file".into() })?;
    let p: usize = head.trim().parse().map_err(|e| Error::Parse { line: 1, msg: format!("dimension: {e}") })?;
    let mut data = Vec::with_capacity(p * p);
    for _ in 0..p {
        let (i, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("expected {p} rows") })?;
        data.extend(parse_row(line, i + 1, p)?);
    }
    if let Some((i, _)) = lines.next() {
        return Err(Error::Parse { line: i + 1, msg: "trailing data".into() });
    }
    Ok(Matrix::from_row_slice(p, p, &data))
}

pub fn trajectory_to_string(t: &Trajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "eta={} n={} p={} provenance={} seed={}",
        fmt_real(t.eta()),
        t.n(),
        t.p(),
        t.provenance().tag(),
        t.seed()
    );
    for col in t.samples().column_iter() {
        write_row(&mut out, col.iter());
    }
    out
}

pub fn trajectory_from_str(s: &str) -> Result<Trajectory> {
    let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty trajectory file".into() })?;
    let mut eta = None;
    let mut n = None;
    let mut p = None;
    let mut provenance = None;
    let mut seed = None;
    let bad = |msg: String| Error::Parse { line: 1, msg };
    for field in head.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("malformed header field {field:?}")))?;
        match key {
            "eta" => eta = Some(value.parse::<f64>().map_err(|e| bad(format!("eta: {e}")))?),
            "n" => n = Some(value.parse::<usize>().map_err(|e| bad(format!("n: {e}")))?),
            "p" => p = Some(value.parse::<usize>().map_err(|e| bad(format!("p: {e}")))?),
            "provenance" => {
                provenance = Some(Provenance::from_tag(value).ok_or_else(|| bad(format!("provenance {value:?}")))?)
            }
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(format!("seed: {e}")))?),
            other => return Err(bad(format!("unknown header key {other:?}"))),
        }
    }
    let missing = |k: &str| bad(format!("header is missing {k}"));
    let (eta, n, p) =
        (eta.ok_or_else(|| missing("eta"))?, n.ok_or_else(|| missing("n"))?, p.ok_or_else(|| missing("p"))?);
    let provenance = provenance.ok_or_else(|| missing("provenance"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let mut data = Vec::with_capacity(p * (n + 1));
    for _ in 0..=n {
        let (i, line) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("expected {} sample rows", n + 1) })?;
        data.extend(parse_row(line, i + 1, p)?);
    }
    if let Some((i, _)) = lines.next() {
        return Err(Error::Parse { line: i + 1, msg: "trailing data".into() });
    }
    Trajectory::new(Matrix::from_column_slice(p, n + 1, &data), eta, provenance, seed)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    matrix_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    Ok(std::fs::write(path, matrix_to_string(m))?)
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    trajectory_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_trajectory(path: impl AsRef<Path>, t: &Trajectory) -> Result<()> {
    Ok(std::fs::write(path, trajectory_to_string(t))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matrix_round_trips_bit_exactly(vals in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 9)) {
            let m = Matrix::from_row_slice(3, 3, &vals);
            let back = matrix_from_str(&matrix_to_string(&m)).unwrap();
            for (a, b) in m.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn trajectory_round_trips() {
        let samples = Matrix::from_column_slice(2, 3, &[0.1, -0.2, 1.0 / 3.0, 2.0e-300, -7.5, 1e10]);
        let t = Trajectory::new(samples, 0.1, Provenance::SubsampledContinuous { delta: 0.1 / 32.0 }, 99).unwrap();
        let text = trajectory_to_string(&t);
        assert!(text.starts_with("eta=1.0000000000000001e-1 n=2 p=2 provenance=subsampled-continuous:"));
        let back = trajectory_from_str(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matrix_from_str("2\n1 2\n3\n").is_err());
        assert!(matrix_from_str("1\n1\n2\n").is_err());
        assert!(trajectory_from_str("eta=0.1 n=1 p=1 seed=0\n0\n1\n").is_err());
        assert!(trajectory_from_str("eta=0.1 n=1 p=1 provenance=coupled seed=0 extra=1\n0\n1\n").is_err());
    }
}

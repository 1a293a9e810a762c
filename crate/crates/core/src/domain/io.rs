//! Text format for example sets.
//!
//! ```text
//! n=4
//! 0101 1
//! 1100 0 0.25
//! ```
//!
//! Two columns give an empirical sample; a third probability column gives
//! an explicit distribution (every record must then carry it).

use std::fmt::Write as _;
use std::path::Path;

use super::{BitVector, LabeledExample};
use crate::distributions::{EmpiricalSample, ExplicitDistribution, WeightedExample};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum DataFile {
    Explicit(ExplicitDistribution),
    Sample(EmpiricalSample),
}

impl DataFile {
    pub fn dim(&self) -> usize {
        match self {
            DataFile::Explicit(d) => d.dim(),
            DataFile::Sample(s) => s.dim(),
        }
    }

    /// The explicit distribution, or the uniform distribution over a sample.
    pub fn to_distribution(&self) -> Result<ExplicitDistribution> {
        match self {
            DataFile::Explicit(d) => Ok(d.clone()),
            DataFile::Sample(s) => s.to_distribution(),
        }
    }

    /// Either backend mapped through x -> (x, complement of x).
    pub fn monotonize_instance(&self) -> DataFile {
        match self {
            DataFile::Explicit(d) => DataFile::Explicit(super::monotonize_distribution(d)),
            DataFile::Sample(s) => DataFile::Sample(super::monotonize_sample(s)),
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_data(text: &str) -> Result<DataFile> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header `n=<dim>`"))?;
    let n: usize = header
        .strip_prefix("n=")
        .ok_or_else(|| parse_err(hline, "header must be `n=<dim>`"))?
        .trim()
        .parse()
        .map_err(|_| parse_err(hline, "dimension is not an integer"))?;

    let mut explicit: Option<bool> = None;
    let mut weighted = Vec::new();
    let mut plain = Vec::new();
    for (ln, line) in lines {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let has_prob = match cols.len() {
            2 => false,
            3 => true,
            k => return Err(parse_err(ln, format!("expected 2 or 3 columns, found {k}"))),
        };
        if *explicit.get_or_insert(has_prob) != has_prob {
            return Err(parse_err(ln, "mixed 2- and 3-column records"));
        }
        let x: BitVector = cols[0].parse().map_err(|_| parse_err(ln, "invalid bitstring"))?;
        if x.len() != n {
            return Err(parse_err(ln, format!("bitstring has length {}, header says {n}", x.len())));
        }
        let y = match cols[1] {
            "0" => false,
            "1" => true,
            _ => return Err(parse_err(ln, "label must be 0 or 1")),
        };
        if has_prob {
            let p: f64 = cols[2].parse().map_err(|_| parse_err(ln, "invalid probability"))?;
            weighted.push(WeightedExample { x, y, p });
        } else {
            plain.push(LabeledExample { x, y });
        }
    }
    match explicit {
        None => Err(Error::EmptyData),
        Some(true) => Ok(DataFile::Explicit(ExplicitDistribution::new(n, weighted)?)),
        Some(false) => Ok(DataFile::Sample(EmpiricalSample::new(n, plain)?)),
    }
}

pub fn format_distribution(d: &ExplicitDistribution) -> String {
    let mut out = format!("n={}\n", d.dim());
    for e in d.support() {
        let _ = writeln!(out, "{} {} {}", e.x, e.y as u8, e.p);
    }
    out
}

pub fn format_sample(s: &EmpiricalSample) -> String {
    let mut out = format!("n={}\n", s.dim());
    for e in s.examples() {
        let _ = writeln!(out, "{} {}", e.x, e.y as u8);
    }
    out
}

pub fn read_data(path: &Path) -> Result<DataFile> {
    parse_data(&std::fs::read_to_string(path)?)
}

pub fn write_data(path: &Path, data: &DataFile) -> Result<()> {
    let text = match data {
        DataFile::Explicit(d) => format_distribution(d),
        DataFile::Sample(s) => format_sample(s),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_explicit() {
        let text = "n=3\n010 1 0.25\n010 0 0.25\n111 1 0.5\n";
        let d = parse_data(text).unwrap();
        let DataFile::Explicit(dist) = &d else { panic!("expected explicit") };
        assert_eq!(dist.support().len(), 3);
        assert_eq!(parse_data(&format_distribution(dist)).unwrap(), d);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_data("n=2\n01 1 0.4\n").is_err());
        assert!(parse_data("n=2\n011 1\n").is_err());
        assert!(parse_data("n=2\n01 2\n").is_err());
        assert!(parse_data("n=2\n01 1\n10 0 1.0\n").is_err());
        assert!(parse_data("2\n01 1\n").is_err());
    }

    #[test]
    fn sample_file() {
        let d = parse_data("n=2\n01 1\n01 1\n10 0\n").unwrap();
        let DataFile::Sample(s) = d else { panic!("expected sample") };
        assert_eq!(s.len(), 3);
        let dist = s.to_distribution().unwrap();
        assert_eq!(dist.support().len(), 2);
    }
}

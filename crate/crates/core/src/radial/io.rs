//! Two-column text format for radial fields.
//!
//! ```text
//! # d=5 n=512 R_max=100
//! 0.0000000000000000e0 1.0000000000000000e0
//! ...
//! ```
//!
//! Values are written with 17 significant digits, so a write/read cycle is
//! bit-exact. The grid spacing is not stored; it is recovered by matching
//! the radii against each supported spacing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::radial::field::RadialField;
use crate::radial::grid::{make_grid, Spacing};

pub fn field_to_string(f: &RadialField) -> String {
    let g = f.grid();
    let mut out = format!("# d={} n={} R_max={}\n", g.dim(), g.len(), g.r_max());
    for (r, v) in g.nodes().iter().zip(f.values()) {
        let _ = writeln!(out, "{r:.16e} {v:.16e}");
    }
    out
}

pub fn write_field(path: &Path, f: &RadialField) -> Result<()> {
    fs::write(path, field_to_string(f))?;
    Ok(())
}

fn header_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|t| t.strip_prefix('=')))
        .ok_or_else(|| Error::Parse(format!("header is missing '{key}=': {header}")))
}

pub fn parse_field(text: &str) -> Result<RadialField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("first line must be a '# d=.. n=.. R_max=..' header, got '{header}'")))?;
    let d: usize = header_value(header, "d")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad dimension in header: {e}")))?;
    let n: usize = header_value(header, "n")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad node count in header: {e}")))?;
    let r_max: f64 = header_value(header, "R_max")?
        .parse()
        .map_err(|e| Error::Parse(format!("bad R_max in header: {e}")))?;

    let mut radii = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for (lineno, line) in lines {
        let mut cols = line.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<f64> {
            tok.ok_or_else(|| Error::Parse(format!("line {}: missing {what}", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: bad {what}: {e}", lineno + 1)))
        };
        radii.push(parse(cols.next(), "radius")?);
        values.push(parse(cols.next(), "value")?);
        if cols.next().is_some() {
            return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
        }
    }
    if radii.len() != n {
        return Err(Error::Parse(format!("header announces {n} nodes, found {}", radii.len())));
    }
    for spacing in [Spacing::LogStretched, Spacing::Uniform] {
        let Ok(grid) = make_grid(d, r_max, n, spacing) else { continue };
        if grid.nodes() == radii.as_slice() {
            return RadialField::new(grid, values);
        }
    }
    Err(Error::Parse("radii do not match a uniform or log-stretched grid".into()))
}

pub fn read_field(path: &Path) -> Result<RadialField> {
    let text = fs::read_to_string(path)?;
    parse_field(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        for spacing in [Spacing::Uniform, Spacing::LogStretched] {
            let g = make_grid(3, 37.5, 64, spacing).unwrap();
            let f = RadialField::from_fn(g, |r| (1.0 + r * r).powf(-1.5) / 3.0).unwrap();
            let back = parse_field(&field_to_string(&f)).unwrap();
            assert_eq!(back.grid().spacing(), spacing);
            assert_eq!(back.values(), f.values());
        }
    }

    #[test]
    fn reports_bad_lines() {
        let g = make_grid(2, 1.0, 16, Spacing::Uniform).unwrap();
        let f = RadialField::constant(g, 1.0).unwrap();
        let text = field_to_string(&f).replacen("1.0000000000000000e0", "x", 1);
        assert!(matches!(parse_field(&text), Err(Error::Parse(_))));
        assert!(parse_field("0 1\n").is_err());
    }
}

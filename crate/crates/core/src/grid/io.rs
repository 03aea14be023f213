//! Column-oriented CSV and compact binary encodings of [`GridFunction`].
//!
//! CSV layout:
//!
//! ```text
//! # sqfn grid dim=1 n=256 half_width=3.141592653589793
//! i,re,im
//! 0,0.25,0
//! ...
//! ```
//!
//! Two-dimensional grids use the header `i,j,re,im`. Binary layout, all
//! little-endian: magic `SQFN`, version byte `1`, dim byte, `u32` points per
//! axis, `f64` half width, then `N^dim` pairs of `f64` (re, im).

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{Grid, GridFunction};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SQFN";
const VERSION: u8 = 1;

pub fn write_csv<W: Write>(f: &GridFunction, mut out: W) -> Result<()> {
    let g = f.grid();
    writeln!(out, "# sqfn grid dim={} n={} half_width={:?}", g.dim(), g.n(), g.half_width())?;
    if g.dim() == 1 {
        writeln!(out, "i,re,im")?;
    } else {
        writeln!(out, "i,j,re,im")?;
    }
    for (k, v) in f.values().iter().enumerate() {
        let m = g.multi_index(k);
        if g.dim() == 1 {
            writeln!(out, "{},{:?},{:?}", m[0], v.re, v.im)?;
        } else {
            writeln!(out, "{},{},{:?},{:?}", m[0], m[1], v.re, v.im)?;
        }
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<Grid> {
    let rest = line
        .strip_prefix("# sqfn grid")
        .ok_or_else(|| Error::Format(format!("missing grid header, got {line:?}")))?;
    let (mut dim, mut n, mut r) = (None, None, None);
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header token {tok:?}")))?;
        let bad = |_| Error::Format(format!("bad header value {tok:?}"));
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "half_width" => r = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(Error::Format(format!("unknown header key {k:?}"))),
        }
    }
    match (dim, n, r) {
        (Some(d), Some(n), Some(r)) => Grid::new(d, n, r),
        _ => Err(Error::Format("incomplete grid header".into())),
    }
}

pub fn read_csv<R: BufRead>(input: R) -> Result<GridFunction> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty input".into()))??;
    let grid = parse_header(header.trim())?;
    let columns = lines.next().ok_or_else(|| Error::Format("missing column header".into()))??;
    let expected = if grid.dim() == 1 { "i,re,im" } else { "i,j,re,im" };
    if columns.trim() != expected {
        return Err(Error::Format(format!("expected columns {expected:?}, got {columns:?}")));
    }
    let mut values = vec![None; grid.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != grid.dim() + 2 {
            return Err(Error::Format(format!("line {}: wrong field count", lineno + 3)));
        }
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&i| i < grid.n())
                .ok_or_else(|| Error::Format(format!("line {}: bad index {s:?}", lineno + 3)))
        };
        let parse_val = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("line {}: bad value {s:?}", lineno + 3)))
        };
        let idx = if grid.dim() == 1 {
            [parse_idx(fields[0])?, 0]
        } else {
            [parse_idx(fields[0])?, parse_idx(fields[1])?]
        };
        let re = parse_val(fields[grid.dim()])?;
        let im = parse_val(fields[grid.dim() + 1])?;
        values[grid.flat_index(idx)] = Some(Complex64::new(re, im));
    }
    let values: Option<Vec<Complex64>> = values.into_iter().collect();
    let values = values.ok_or_else(|| Error::Format("missing samples".into()))?;
    GridFunction::new(grid, values)
}

pub fn write_binary<W: Write>(f: &GridFunction, mut out: W) -> Result<()> {
    let g = f.grid();
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION, g.dim() as u8])?;
    out.write_all(&(g.n() as u32).to_le_bytes())?;
    out.write_all(&g.half_width().to_le_bytes())?;
    for v in f.values() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<GridFunction> {
    let mut head = [0u8; 18];
    input
        .read_exact(&mut head)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    if head[4] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", head[4])));
    }
    let dim = head[5] as usize;
    let n = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let r = f64::from_le_bytes(head[10..18].try_into().unwrap());
    let grid = Grid::new(dim, n, r)?;
    let mut buf = vec![0u8; grid.len() * 16];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format("truncated payload".into()))?;
    let values = buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    GridFunction::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(dim: usize, n: usize, seed: f64) -> GridFunction {
        let g = Grid::new(dim, n, 1.75).unwrap();
        GridFunction::from_fn(g, |x| Complex64::new((seed * x[0]).sin() + x[1], (x[0] * x[1] + seed).cos()))
            .unwrap()
    }

    proptest! {
        #[test]
        fn csv_and_binary_roundtrip(seed in -10.0f64..10.0, two_d in proptest::bool::ANY) {
            let f = if two_d { sample(2, 8, seed) } else { sample(1, 16, seed) };
            let mut csv = Vec::new();
            write_csv(&f, &mut csv).unwrap();
            prop_assert_eq!(&read_csv(csv.as_slice()).unwrap(), &f);
            let mut bin = Vec::new();
            write_binary(&f, &mut bin).unwrap();
            prop_assert_eq!(&bin[..4], b"SQFN");
            prop_assert_eq!(&read_binary(bin.as_slice()).unwrap(), &f);
        }
    }

    #[test]
    fn binary_layout_is_fixed() {
        let g = Grid::new(1, 8, 1.0).unwrap();
        let f = GridFunction::constant(g, Complex64::new(2.0, -1.0));
        let mut bin = Vec::new();
        write_binary(&f, &mut bin).unwrap();
        assert_eq!(bin.len(), 18 + 8 * 16);
        assert_eq!(bin[4], 1);
        assert_eq!(bin[5], 1);
        assert_eq!(u32::from_le_bytes(bin[6..10].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bin[18..26].try_into().unwrap()), 2.0);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_binary(&b"NOPE\x01\x01"[..]).is_err());
        let text = "# sqfn grid dim=1 n=8 half_width=1.0\ni,re,im\n0,1,0\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Format(_))));
        let text = "i,re,im\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }
}

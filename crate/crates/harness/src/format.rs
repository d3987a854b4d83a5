//! Plain-text file formats.
//!
//! * tensor: `d1 d2 d3`, then `d1·d2·d3` whitespace-separated values in
//!   canonical order (third index fastest);
//! * sample set: `d1 d2 d3 n`, then `n` lines `a b c` (1-based);
//! * orthogonal decomposition sidecar: `d1 d2 d3 r`, a line of `r` weights,
//!   then the `d1` rows of `U`, the `d2` rows of `V` and the `d3` rows of `W`.
//!
//! Blank lines and `#` comments are ignored everywhere. Floats are written
//! with 17 significant digits, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use tenscert_core::{DMatrix, Dims, IndexTriple, OrthoDecomposition, SampleSet, Tensor3};

use crate::error::{HarnessError, Result};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Whitespace-separated tokens tagged with their 1-based line numbers.
struct Tokens<'a> {
    name: &'a str,
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(name: &'a str, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut last_line = 1;
        for (i, line) in text.lines().enumerate() {
            last_line = i + 1;
            let body = line.split('#').next().unwrap_or("");
            items.extend(body.split_whitespace().map(|t| (i + 1, t)));
        }
        Tokens { name, items, pos: 0, last_line }
    }

    /// Tokens of the next non-empty line, which must not have been partly consumed.
    fn line(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let Some(&(line, _)) = self.items.get(self.pos) else {
            return Err(HarnessError::parse(self.name, self.last_line, "unexpected end of file"));
        };
        let mut out = Vec::new();
        while let Some(&(l, t)) = self.items.get(self.pos) {
            if l != line {
                break;
            }
            out.push(t);
            self.pos += 1;
        }
        Ok((line, out))
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied().ok_or_else(|| {
            HarnessError::parse(self.name, self.last_line, format!("unexpected end of file, expected {what}"))
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let (line, tok) = self.next(what)?;
        let v: f64 = tok
            .parse()
            .map_err(|_| HarnessError::parse(self.name, line, format!("expected {what}, found {tok:?}")))?;
        if !v.is_finite() {
            return Err(HarnessError::parse(self.name, line, format!("{what} is not finite")));
        }
        Ok(v)
    }

    fn finish(&self) -> Result<()> {
        match self.items.get(self.pos) {
            Some(&(line, tok)) => Err(HarnessError::parse(self.name, line, format!("trailing token {tok:?}"))),
            None => Ok(()),
        }
    }
}

fn header(tokens: &mut Tokens<'_>, names: &[&str]) -> Result<(usize, Vec<usize>)> {
    let (line, toks) = tokens.line()?;
    if toks.len() != names.len() {
        return Err(HarnessError::parse(
            tokens.name,
            line,
            format!("header must be \"{}\"", names.join(" ")),
        ));
    }
    let mut out = Vec::with_capacity(names.len());
    for (tok, name) in toks.iter().zip(names) {
        let v: usize = tok
            .parse()
            .map_err(|_| HarnessError::parse(tokens.name, line, format!("{name} must be a nonnegative integer, found {tok:?}")))?;
        out.push(v);
    }
    Ok((line, out))
}

fn dims_at(name: &str, line: usize, v: &[usize]) -> Result<Dims> {
    let dims = [v[0], v[1], v[2]];
    if dims.contains(&0) {
        return Err(HarnessError::parse(name, line, "dimensions must be positive"));
    }
    Ok(dims)
}

pub fn parse_tensor(name: &str, text: &str) -> Result<Tensor3> {
    let mut tokens = Tokens::new(name, text);
    let (line, h) = header(&mut tokens, &["d1", "d2", "d3"])?;
    let dims = dims_at(name, line, &h)?;
    let len = dims[0]
        .checked_mul(dims[1])
        .and_then(|x| x.checked_mul(dims[2]))
        .ok_or_else(|| HarnessError::parse(name, line, "tensor too large"))?;
    let mut values = Vec::with_capacity(len);
    for i in 0..len {
        values.push(tokens.f64(&format!("value {} of {len}", i + 1))?);
    }
    tokens.finish()?;
    Ok(Tensor3::from_vec(dims, values)?)
}

pub fn write_tensor(t: &Tensor3) -> String {
    let [d1, d2, d3] = t.dims();
    let mut out = format!("{d1} {d2} {d3}\n");
    for row in t.values().chunks(d3) {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_sample_set(name: &str, text: &str) -> Result<SampleSet> {
    let mut tokens = Tokens::new(name, text);
    let (line, h) = header(&mut tokens, &["d1", "d2", "d3", "n"])?;
    let dims = dims_at(name, line, &h)?;
    let mut triples = Vec::with_capacity(h[3]);
    for _ in 0..h[3] {
        let (line, idx) = header(&mut tokens, &["a", "b", "c"])?;
        let t = IndexTriple::new(idx[0], idx[1], idx[2]);
        if !t.in_range(dims) {
            return Err(HarnessError::parse(name, line, format!("index ({} {} {}) out of range", idx[0], idx[1], idx[2])));
        }
        triples.push((line, t));
    }
    tokens.finish()?;
    let mut seen = std::collections::HashSet::new();
    for &(line, t) in &triples {
        if !seen.insert(t) {
            return Err(HarnessError::parse(name, line, "duplicate index"));
        }
    }
    let idx: Vec<IndexTriple> = triples.into_iter().map(|(_, t)| t).collect();
    Ok(SampleSet::from_indices(dims, &idx)?)
}

pub fn write_sample_set(s: &SampleSet) -> String {
    let [d1, d2, d3] = s.dims();
    let mut out = format!("{d1} {d2} {d3} {}\n", s.len());
    for t in s.indices() {
        let _ = writeln!(out, "{} {} {}", t.a, t.b, t.c);
    }
    out
}

pub fn parse_ortho(name: &str, text: &str) -> Result<OrthoDecomposition> {
    let mut tokens = Tokens::new(name, text);
    let (line, h) = header(&mut tokens, &["d1", "d2", "d3", "r"])?;
    let dims = dims_at(name, line, &h)?;
    let r = h[3];
    let weights = (0..r).map(|i| tokens.f64(&format!("weight {}", i + 1))).collect::<Result<Vec<_>>>()?;
    let mut factor = |d: usize, label: &str| -> Result<DMatrix<f64>> {
        let mut vals = Vec::with_capacity(d * r);
        for i in 0..d * r {
            vals.push(tokens.f64(&format!("{label} entry ({}, {})", i / r + 1, i % r + 1))?);
        }
        Ok(DMatrix::from_row_slice(d, r, &vals))
    };
    let u = factor(dims[0], "U")?;
    let v = factor(dims[1], "V")?;
    let w = factor(dims[2], "W")?;
    tokens.finish()?;
    Ok(OrthoDecomposition::new(weights, u, v, w)?)
}

pub fn write_ortho(d: &OrthoDecomposition) -> String {
    let [d1, d2, d3] = d.dims();
    let mut out = format!("{d1} {d2} {d3} {}\n", d.rank());
    let row = |vals: Vec<f64>| vals.into_iter().map(fmt_f64).collect::<Vec<_>>().join(" ");
    out.push_str(&row(d.weights().to_vec()));
    out.push('\n');
    for m in d.factors() {
        for i in 0..m.nrows() {
            out.push_str(&row(m.row(i).iter().cloned().collect()));
            out.push('\n');
        }
    }
    out
}

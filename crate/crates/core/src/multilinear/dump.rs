//! Tensor dump formats.
//!
//! Binary: three little-endian `u64` (degree, dim, codomain_dim) followed by
//! the components as little-endian `f64` in canonical multi-index order,
//! codomain-major. A functional is a concatenation of tensors.
//!
//! Text: a header line `degree dim codomain_dim` followed by one component per
//! line in the same order. Blank lines and lines starting with `#` are ignored.

use std::io::{Read, Write};

use super::functional::SymFunctional;
use super::tensor::SymTensor;
use crate::error::{Error, Result};

pub fn write_binary<W: Write>(t: &SymTensor, mut w: W) -> Result<()> {
    for h in [t.degree(), t.dim(), t.codomain_dim()] {
        w.write_all(&(h as u64).to_le_bytes())?;
    }
    for c in t.coeffs() {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<Option<u64>> {
    let mut buf = [0u8; 8];
    let mut filled = 0;
    while filled < 8 {
        let n = r.read(&mut buf[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(Error::Format("truncated header".into()));
        }
        filled += n;
    }
    Ok(Some(u64::from_le_bytes(buf)))
}

/// Reads one tensor; `Ok(None)` at a clean end of stream.
pub fn read_binary<R: Read>(mut r: R) -> Result<Option<SymTensor>> {
    let Some(degree) = read_u64(&mut r)? else {
        return Ok(None);
    };
    let dim = read_u64(&mut r)?.ok_or_else(|| Error::Format("truncated header".into()))?;
    let codomain = read_u64(&mut r)?.ok_or_else(|| Error::Format("truncated header".into()))?;
    if dim == 0 || codomain == 0 || degree > 64 || dim > u16::MAX as u64 {
        return Err(Error::Format(format!(
            "implausible header: degree {degree}, dim {dim}, codomain {codomain}"
        )));
    }
    let mut t = SymTensor::zeros(degree as usize, dim as usize, codomain as usize);
    let mut buf = [0u8; 8];
    for c in t.coeffs_mut() {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated coefficient block".into()))?;
        *c = f64::from_le_bytes(buf);
    }
    Ok(Some(t))
}

pub fn write_functional_binary<W: Write>(f: &SymFunctional, mut w: W) -> Result<()> {
    for t in f.terms() {
        write_binary(t, &mut w)?;
    }
    Ok(())
}

pub fn read_functional_binary<R: Read>(mut r: R) -> Result<SymFunctional> {
    let mut tensors = Vec::new();
    while let Some(t) = read_binary(&mut r)? {
        tensors.push(t);
    }
    let first = tensors
        .first()
        .ok_or_else(|| Error::Format("empty tensor file".into()))?;
    let (dim, codomain) = (first.dim(), first.codomain_dim());
    SymFunctional::from_terms(dim, codomain, tensors)
}

pub fn write_text<W: Write>(t: &SymTensor, mut w: W) -> Result<()> {
    writeln!(w, "{} {} {}", t.degree(), t.dim(), t.codomain_dim())?;
    for c in t.coeffs() {
        // `{:e}` round-trips f64 exactly
        writeln!(w, "{c:e}")?;
    }
    Ok(())
}

pub fn write_functional_text<W: Write>(f: &SymFunctional, mut w: W) -> Result<()> {
    for t in f.terms() {
        write_text(t, &mut w)?;
    }
    Ok(())
}

/// Parses one or more text-dumped tensors into a functional.
pub fn read_functional_text(src: &str) -> Result<SymFunctional> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut tensors = Vec::new();
    while let Some((lineno, header)) = lines.next() {
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {lineno}: bad header '{header}': {e}")))?;
        if fields.len() != 3 || fields[1] == 0 || fields[2] == 0 {
            return Err(Error::Format(format!(
                "line {lineno}: header must be 'degree dim codomain_dim'"
            )));
        }
        let mut t = SymTensor::zeros(fields[0], fields[1], fields[2]);
        for c in t.coeffs_mut() {
            let (ln, v) = lines
                .next()
                .ok_or_else(|| Error::Format(format!("line {lineno}: tensor block is truncated")))?;
            *c = v
                .parse()
                .map_err(|e| Error::Format(format!("line {ln}: bad coefficient '{v}': {e}")))?;
        }
        tensors.push(t);
    }
    let first = tensors
        .first()
        .ok_or_else(|| Error::Format("no tensors found".into()))?;
    let (dim, codomain) = (first.dim(), first.codomain_dim());
    SymFunctional::from_terms(dim, codomain, tensors)
}

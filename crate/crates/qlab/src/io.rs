//! Covariance file formats.
//!
//! CSV: header `x,y,re,im`, 1-based indices, upper triangle (y >= x) is
//! sufficient because Hermiticity fills the rest; values at full double
//! precision. Binary: magic "QLCV1", little-endian u32 L, then L² complex
//! entries (f64 re, f64 im) in row-major order, the compact form for large L.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"QLCV1";

pub fn save_covariance_csv(path: &Path, gamma: &Covariance) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,re,im")?;
    let l = gamma.l();
    for x in 0..l {
        for y in x..l {
            let v = gamma.entry(x, y);
            writeln!(w, "{},{},{:.17e},{:.17e}", x + 1, y + 1, v.re, v.im)?;
        }
    }
    Ok(())
}

pub fn load_covariance_csv(path: &Path) -> Result<Covariance> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    let mut l = 0usize;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.starts_with('x')) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected x,y,re,im", idx + 1)));
        }
        let x: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 1)))?;
        let y: usize = parts[1]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 1)))?;
        let re: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 1)))?;
        let im: f64 = parts[3]
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", idx + 1)))?;
        if x == 0 || y == 0 {
            return Err(Error::Parse(format!("line {}: indices are 1-based", idx + 1)));
        }
        l = l.max(x).max(y);
        entries.push((x - 1, y - 1, Complex64::new(re, im)));
    }
    if l == 0 {
        return Err(Error::Parse("empty covariance file".into()));
    }
    let mut m = DMatrix::<Complex64>::zeros(l, l);
    let mut written = vec![false; l * l];
    for (x, y, v) in entries {
        m[(x, y)] = v;
        written[x * l + y] = true;
    }
    // Hermitian completion for entries only given in one triangle
    for x in 0..l {
        for y in 0..l {
            if !written[x * l + y] && written[y * l + x] {
                m[(x, y)] = m[(y, x)].conj();
            }
        }
    }
    Covariance::from_matrix(m)
}

pub fn save_covariance_binary(path: &Path, gamma: &Covariance) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    let l = gamma.l() as u32;
    w.write_all(&l.to_le_bytes())?;
    for x in 0..gamma.l() {
        for y in 0..gamma.l() {
            let v = gamma.entry(x, y);
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_covariance_binary(path: &Path) -> Result<Covariance> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("bad magic: not a QLCV1 covariance dump".into()));
    }
    let mut lb = [0u8; 4];
    r.read_exact(&mut lb)?;
    let l = u32::from_le_bytes(lb) as usize;
    if l == 0 || l > 100_000 {
        return Err(Error::Parse(format!("unreasonable system size {l}")));
    }
    let mut buf = vec![0u8; 16 * l * l];
    r.read_exact(&mut buf)?;
    let mut m = DMatrix::<Complex64>::zeros(l, l);
    for x in 0..l {
        for y in 0..l {
            let off = 16 * (x * l + y);
            let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
            m[(x, y)] = Complex64::new(re, im);
        }
    }
    Covariance::from_matrix(m)
}

/// Load either format, chosen by extension (.csv vs anything else = binary).
pub fn load_covariance(path: &Path) -> Result<Covariance> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        load_covariance_csv(path)
    } else {
        load_covariance_binary(path)
    }
}

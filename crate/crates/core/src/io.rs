//! On-disk formats: grid functions (JSON header + raw little-endian f64
//! pairs), kernel caches (JSON header with a SHA-256 payload checksum),
//! and plain-text point-set files.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corners::SubsetGrid;
use crate::fp::{FpPoly, PrimeField};
use crate::kernel::KernelTable;
use crate::transform::{GridFn, Side};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct GridHeader {
    p: u64,
    dim: u8,
    side: String,
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Physical => "physical",
        Side::Frequency => "frequency",
    }
}

fn side_from_name(s: &str) -> Result<Side> {
    match s {
        "physical" => Ok(Side::Physical),
        "frequency" => Ok(Side::Frequency),
        other => Err(Error::Format(format!("unknown side tag {other:?}"))),
    }
}

fn values_to_bytes(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn values_from_bytes(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Format("payload length is not a multiple of 16".into()));
    }
    let mut out = Vec::with_capacity(bytes.len() / 16);
    for chunk in bytes.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[0..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..16].try_into().unwrap());
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

/// One JSON header line, then raw interleaved (re, im) f64 pairs in
/// row-major order, all little-endian.
pub fn write_gridfn(path: &Path, f: &GridFn) -> Result<()> {
    let header = GridHeader {
        p: f.p(),
        dim: f.dim(),
        side: side_name(f.side()).to_string(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    w.write_all(&values_to_bytes(f.values()))?;
    w.flush()?;
    Ok(())
}

pub fn read_gridfn(path: &Path) -> Result<GridFn> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: GridHeader = serde_json::from_str(line.trim_end())?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let values = values_from_bytes(&payload)?;
    let side = side_from_name(&header.side)?;
    GridFn::from_values(header.p, header.dim, side, values)
}

#[derive(Serialize, Deserialize)]
struct KernelHeader {
    p: u64,
    phi1: Vec<u64>,
    phi2: Vec<u64>,
    truncated: bool,
    checksum: String,
}

/// One JSON header line (with a hex SHA-256 of the payload), then the raw
/// kernel values in the same interleaved f64 layout as grid functions.
pub fn write_kernel(path: &Path, k: &KernelTable) -> Result<()> {
    let payload = values_to_bytes(k.values());
    let checksum = format!("{:x}", Sha256::digest(&payload));
    let header = KernelHeader {
        p: k.p(),
        phi1: k.phi1().coeffs().to_vec(),
        phi2: k.phi2().coeffs().to_vec(),
        truncated: k.is_truncated(),
        checksum,
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

pub fn read_kernel(path: &Path) -> Result<KernelTable> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: KernelHeader = serde_json::from_str(line.trim_end())?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let checksum = format!("{:x}", Sha256::digest(&payload));
    if checksum != header.checksum {
        return Err(Error::Format("kernel cache checksum mismatch".into()));
    }
    let values = values_from_bytes(&payload)?;
    if values.len() != (header.p * header.p) as usize {
        return Err(Error::Format("kernel cache payload size mismatch".into()));
    }
    let field = PrimeField::new(header.p)?;
    let phi1 = FpPoly::new(&field, &header.phi1.iter().map(|&c| c as i64).collect::<Vec<_>>())?;
    let phi2 = FpPoly::new(&field, &header.phi2.iter().map(|&c| c as i64).collect::<Vec<_>>())?;
    Ok(KernelTable::from_parts(header.p, phi1, phi2, values, header.truncated))
}

/// Hex SHA-256 of a kernel table's binary payload, matching the cache
/// header field.
pub fn kernel_checksum(k: &KernelTable) -> String {
    format!("{:x}", Sha256::digest(values_to_bytes(k.values())))
}

/// Canonical cache file name for a kernel table.
pub fn kernel_cache_name(p: u64, phi1: &FpPoly, phi2: &FpPoly, truncated: bool) -> String {
    let fmt = |c: &[u64]| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-");
    format!(
        "kernel_p{p}_phi1_{}_phi2_{}{}.bin",
        fmt(phi1.coeffs()),
        fmt(phi2.coeffs()),
        if truncated { "_trunc" } else { "" }
    )
}

/// Text format: first line `p=<value>`, then one `x1 x2` pair per line.
pub fn write_set(path: &Path, s: &SubsetGrid) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "p={}", s.p())?;
    for (x1, x2) in s.points() {
        writeln!(w, "{x1} {x2}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_set(path: &Path) -> Result<SubsetGrid> {
    let r = BufReader::new(std::fs::File::open(path)?);
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty set file".into()))??;
    let p: u64 = first
        .trim()
        .strip_prefix("p=")
        .ok_or_else(|| Error::Format("set file must start with p=<value>".into()))?
        .parse()
        .map_err(|_| Error::Format("bad prime in set file header".into()))?;
    PrimeField::new(p)?;
    let mut grid = SubsetGrid::empty(p);
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut it = t.split_whitespace();
        let x1: u64 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad set line {t:?}")))?;
        let x2: u64 = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad set line {t:?}")))?;
        if it.next().is_some() || x1 >= p || x2 >= p {
            return Err(Error::Format(format!("bad set line {t:?}")));
        }
        grid.insert(x1, x2);
    }
    Ok(grid)
}

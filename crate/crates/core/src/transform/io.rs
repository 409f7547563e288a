//! Binary signal and coefficient files with JSON headers.
//!
//! A signal `stem` is `stem.json` plus `stem.bin` holding interleaved
//! little-endian `(re, im)` binary64 pairs in row-major order. A coefficient
//! set stores one block per tile in `stem.bin`, indexed by `stem.json`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::{CoefficientSet, SampledSignal, TileCoefficients};

const LAYOUT: &str = "row-major, interleaved re/im, little-endian binary64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub layout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockIndex {
    pub tile: usize,
    pub lattice: Vec<usize>,
    /// Offset in complex entries.
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientHeader {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub layout: String,
    pub normalization: String,
    pub blocks: Vec<BlockIndex>,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("bin"))
}

fn encode(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * values.len());
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8], path: &Path) -> Result<Vec<Complex64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Io(format!("{}: length {} is not a multiple of 16", path.display(), bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn write_signal(stem: &Path, f: &SampledSignal) -> Result<()> {
    let (json, bin) = paths(stem);
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir)?;
    }
    let header = SignalHeader {
        dim: f.dim,
        n: f.n,
        period: f.period,
        layout: LAYOUT.into(),
    };
    fs::write(json, serde_json::to_string_pretty(&header)? + "\n")?;
    fs::write(bin, encode(&f.samples))?;
    Ok(())
}

pub fn read_signal(stem: &Path) -> Result<SampledSignal> {
    let (json, bin) = paths(stem);
    let header: SignalHeader = serde_json::from_str(&fs::read_to_string(&json)?)?;
    let samples = decode(&fs::read(&bin)?, &bin)?;
    SampledSignal::new(header.dim, header.n, header.period, samples)
}

pub fn write_coefficients(stem: &Path, c: &CoefficientSet) -> Result<()> {
    let (json, bin) = paths(stem);
    if let Some(dir) = stem.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut blocks = Vec::with_capacity(c.tiles.len());
    let mut data = Vec::new();
    for t in &c.tiles {
        blocks.push(BlockIndex {
            tile: t.tile,
            lattice: t.lattice.clone(),
            offset: data.len() / 16,
            len: t.values.len(),
        });
        data.extend(encode(&t.values));
    }
    let header = CoefficientHeader {
        dim: c.dim,
        n: c.n,
        period: c.period,
        layout: LAYOUT.into(),
        normalization: "<f, psi_{T,k}> with psi_{T,k} = |det D|^{-1/2} psi^T(x - D^{-1} k)".into(),
        blocks,
    };
    fs::write(json, serde_json::to_string_pretty(&header)? + "\n")?;
    fs::write(bin, data)?;
    Ok(())
}

pub fn read_coefficients(stem: &Path) -> Result<CoefficientSet> {
    let (json, bin) = paths(stem);
    let header: CoefficientHeader = serde_json::from_str(&fs::read_to_string(&json)?)?;
    let values = decode(&fs::read(&bin)?, &bin)?;
    let mut tiles = Vec::with_capacity(header.blocks.len());
    for b in &header.blocks {
        if b.len != b.lattice.iter().product::<usize>() || b.offset + b.len > values.len() {
            return Err(Error::Io(format!("{}: block for tile {} out of range", bin.display(), b.tile)));
        }
        tiles.push(TileCoefficients {
            tile: b.tile,
            lattice: b.lattice.clone(),
            values: values[b.offset..b.offset + b.len].to_vec(),
        });
    }
    Ok(CoefficientSet {
        dim: header.dim,
        n: header.n,
        period: header.period,
        tiles,
    })
}

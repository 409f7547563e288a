//! Discrete wave packet analysis and synthesis on the torus `(ℝ/Lℤ)^d`
//! sampled with `N` points per axis.
//!
//! Spectra use the convention `f̂(m/L) = (L/N)^d Σ_n f(x_n) e^{-2πi m·n/N}`,
//! so `‖f‖² = L^{-d} Σ_m |f̂(m/L)|²`. A tile `(D, ξ₀)` with diagonal `D`
//! and `n = D·L ∈ ℤ^d` carries the packets
//! `ψ_{T,k} = |det D|^{-1/2} ψ^T(· − D⁻¹k)` for `k ∈ ∏ ℤ/n_aℤ`.

pub mod fft;
pub mod io;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_cert::FrameCertificate;
use crate::tile::MAX_DIM;
use crate::tiling::FrequencyBox;
use crate::window::TiledWindow;
use fft::{fft_nd, signed_bin, unflatten};

/// Relative slack for `D·L` being an integer.
pub const COMMENSURATE_RTOL: f64 = 1e-9;
/// Relative residual at which [`frame_invert`] stops.
pub const INVERT_TOLERANCE: f64 = 1e-8;
/// Energy fraction outside the certified region tolerated by [`frame_invert`].
pub const LEAK_TOLERANCE: f64 = 1e-12;

/// Samples of a function on the torus of period `period` with `n` points
/// per axis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub samples: Vec<Complex64>,
}

fn check_grid(dim: usize, n: usize, period: f64) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidInputs(format!("dimension {dim} outside 1..={MAX_DIM}")));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidInputs(format!("grid size {n} is not a power of two ≥ 2")));
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidInputs(format!("period {period} must be positive")));
    }
    Ok(())
}

impl SampledSignal {
    pub fn new(dim: usize, n: usize, period: f64, samples: Vec<Complex64>) -> Result<Self> {
        check_grid(dim, n, period)?;
        if samples.len() != n.pow(dim as u32) {
            return Err(Error::InvalidInputs(format!(
                "{} samples for a {n}^{dim} grid",
                samples.len()
            )));
        }
        Ok(SampledSignal {
            dim,
            n,
            period,
            samples,
        })
    }

    pub fn zeros(dim: usize, n: usize, period: f64) -> Result<Self> {
        check_grid(dim, n, period)?;
        Self::new(dim, n, period, vec![Complex64::default(); n.pow(dim as u32)])
    }

    /// Samples `f` at `x_n = L·n/N`.
    pub fn from_fn(dim: usize, n: usize, period: f64, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        check_grid(dim, n, period)?;
        let dims = vec![n; dim];
        let mut idx = vec![0; dim];
        let mut x = vec![0.0; dim];
        let samples = (0..n.pow(dim as u32))
            .map(|flat| {
                unflatten(flat, &dims, &mut idx);
                for a in 0..dim {
                    x[a] = period * idx[a] as f64 / n as f64;
                }
                f(&x)
            })
            .collect();
        Self::new(dim, n, period, samples)
    }

    /// Inverse of [`SampledSignal::spectrum`].
    pub fn from_spectrum(dim: usize, n: usize, period: f64, spectrum: Vec<Complex64>) -> Result<Self> {
        let mut s = Self::new(dim, n, period, spectrum)?;
        fft_nd(&mut s.samples, &vec![n; dim], FftDirection::Inverse);
        let scale = period.powi(-(dim as i32));
        s.samples.iter_mut().for_each(|v| *v *= scale);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// Nyquist frequency `N/(2L)`.
    pub fn band_limit(&self) -> f64 {
        self.n as f64 / (2.0 * self.period)
    }

    /// `f̂` in FFT bin order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut s = self.samples.clone();
        fft_nd(&mut s, &self.dims(), FftDirection::Forward);
        let scale = (self.period / self.n as f64).powi(self.dim as i32);
        s.iter_mut().for_each(|v| *v *= scale);
        s
    }

    /// Cell volume `(L/N)^d`.
    pub fn cell(&self) -> f64 {
        (self.period / self.n as f64).powi(self.dim as i32)
    }

    pub fn norm_sq(&self) -> f64 {
        self.cell() * self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `∫ f ḡ` by the rectangle rule, exact for trigonometric polynomials
    /// inside the band.
    pub fn inner(&self, other: &SampledSignal) -> Complex64 {
        self.cell()
            * self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a * b.conj())
                .sum::<Complex64>()
    }

    pub fn same_grid(&self, other: &SampledSignal) -> bool {
        self.dim == other.dim && self.n == other.n && self.period == other.period
    }
}

/// `L^{-d} Σ_m |f̂_m|²`.
pub fn spectral_norm_sq(spectrum: &[Complex64], dim: usize, period: f64) -> f64 {
    spectrum.iter().map(|v| v.norm_sqr()).sum::<f64>() * period.powi(-(dim as i32))
}

/// Frequencies `m/L` of every FFT bin, flattened row-major.
pub fn bin_frequencies(dim: usize, n: usize, period: f64) -> Vec<f64> {
    let dims = vec![n; dim];
    let mut idx = vec![0; dim];
    let mut out = Vec::with_capacity(dim * n.pow(dim as u32));
    for flat in 0..n.pow(dim as u32) {
        unflatten(flat, &dims, &mut idx);
        out.extend(idx.iter().map(|&i| signed_bin(i, n) as f64 / period));
    }
    out
}

/// Per-tile data sampled on the grid: `ψ̂^T(m/L)` and the residue of `m`
/// modulo `n = D·L` for every bin.
#[derive(Debug, Clone)]
pub struct TilePlan {
    pub lattice: Vec<usize>,
    pub det: f64,
    pub values: Vec<f64>,
    pub residue: Vec<usize>,
}

/// Everything needed to analyze and synthesize on one grid.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub tiles: Vec<TilePlan>,
}

/// `n = D·L` for a diagonal grid-commensurate tile.
pub fn tile_lattice(window: &TiledWindow, index: usize, period: f64) -> Result<Vec<usize>> {
    let diag = window.tile.diagonal_entries().ok_or_else(|| Error::GridIncommensurate {
        tile: index,
        detail: "matrix is not diagonal".into(),
    })?;
    diag.iter()
        .map(|&d| {
            let x = d.abs() * period;
            let r = x.round();
            if r < 1.0 || (x - r).abs() > COMMENSURATE_RTOL * r {
                Err(Error::GridIncommensurate {
                    tile: index,
                    detail: format!("|D|·L = {x} is not a positive integer"),
                })
            } else {
                Ok(r as usize)
            }
        })
        .collect()
}

impl TransformPlan {
    pub fn new(dim: usize, n: usize, period: f64, windows: &[TiledWindow]) -> Result<Self> {
        check_grid(dim, n, period)?;
        let dims = vec![n; dim];
        let freqs = bin_frequencies(dim, n, period);
        let tiles = windows
            .par_iter()
            .enumerate()
            .map(|(t, w)| {
                if w.tile.dim() != dim {
                    return Err(Error::DimMismatch {
                        expected: dim,
                        got: w.tile.dim(),
                    });
                }
                let lattice = tile_lattice(w, t, period)?;
                let total = n.pow(dim as u32);
                let mut values = Vec::with_capacity(total);
                let mut residue = Vec::with_capacity(total);
                let mut idx = vec![0; dim];
                let mut scratch = vec![0.0; dim];
                for flat in 0..total {
                    values.push(w.eval_with(&freqs[flat * dim..(flat + 1) * dim], &mut scratch));
                    unflatten(flat, &dims, &mut idx);
                    let mut r = 0;
                    for a in 0..dim {
                        let m = signed_bin(idx[a], n);
                        r = r * lattice[a] + m.rem_euclid(lattice[a] as i64) as usize;
                    }
                    residue.push(r);
                }
                Ok(TilePlan {
                    det: w.tile.det().abs(),
                    lattice,
                    values,
                    residue,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TransformPlan { dim, n, period, tiles })
    }

    fn check_signal(&self, f: &SampledSignal) -> Result<()> {
        if f.dim != self.dim || f.n != self.n || f.period != self.period {
            return Err(Error::InvalidInputs(format!(
                "signal grid (d={}, N={}, L={}) differs from plan (d={}, N={}, L={})",
                f.dim, f.n, f.period, self.dim, self.n, self.period
            )));
        }
        Ok(())
    }

    /// `Σ_T |ψ̂^T(m/L)|²` at every bin.
    pub fn spectral_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n.pow(self.dim as u32)];
        for t in &self.tiles {
            for (acc, v) in s.iter_mut().zip(&t.values) {
                *acc += v * v;
            }
        }
        s
    }
}

/// Coefficients `⟨f, ψ_{T,k}⟩` of one tile on its lattice, row-major in `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileCoefficients {
    pub tile: usize,
    pub lattice: Vec<usize>,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub tiles: Vec<TileCoefficients>,
}

impl CoefficientSet {
    pub fn zeros_like(plan: &TransformPlan) -> Self {
        CoefficientSet {
            dim: plan.dim,
            n: plan.n,
            period: plan.period,
            tiles: plan
                .tiles
                .iter()
                .enumerate()
                .map(|(i, t)| TileCoefficients {
                    tile: i,
                    lattice: t.lattice.clone(),
                    values: vec![Complex64::default(); t.lattice.iter().product()],
                })
                .collect(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.tiles
            .iter()
            .flat_map(|t| &t.values)
            .map(|v| v.norm_sqr())
            .sum()
    }

    pub fn inner(&self, other: &CoefficientSet) -> Complex64 {
        self.tiles
            .iter()
            .zip(&other.tiles)
            .flat_map(|(a, b)| a.values.iter().zip(&b.values))
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn count(&self) -> usize {
        self.tiles.iter().map(|t| t.values.len()).sum()
    }
}

/// Folded spectrum `H_r = Σ_{m ≡ r} f̂_m ψ̂^T_m` of one tile.
pub fn fold(plan: &TilePlan, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut h = vec![Complex64::default(); plan.lattice.iter().product()];
    for ((s, v), &r) in spectrum.iter().zip(&plan.values).zip(&plan.residue) {
        if *v != 0.0 {
            h[r] += s * v;
        }
    }
    h
}

/// All coefficients `⟨f, ψ_{T,k}⟩` via fold and inverse DFT per tile.
pub fn analyze(f: &SampledSignal, plan: &TransformPlan) -> Result<CoefficientSet> {
    plan.check_signal(f)?;
    let spectrum = f.spectrum();
    let ld = plan.period.powi(plan.dim as i32);
    let tiles = plan
        .tiles
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let mut h = fold(t, &spectrum);
            fft_nd(&mut h, &t.lattice, FftDirection::Inverse);
            let scale = 1.0 / (ld * t.det.sqrt());
            h.iter_mut().for_each(|v| *v *= scale);
            TileCoefficients {
                tile: i,
                lattice: t.lattice.clone(),
                values: h,
            }
        })
        .collect();
    Ok(CoefficientSet {
        dim: plan.dim,
        n: plan.n,
        period: plan.period,
        tiles,
    })
}

/// `Σ_{T,k} c_{T,k} ψ_{T,k}`, the adjoint of [`analyze`]. Tile
/// contributions are added in tile order.
pub fn synthesize(c: &CoefficientSet, plan: &TransformPlan) -> Result<SampledSignal> {
    if c.dim != plan.dim || c.n != plan.n || c.period != plan.period || c.tiles.len() != plan.tiles.len() {
        return Err(Error::InvalidInputs("coefficient set does not match the transform plan".into()));
    }
    for (tc, tp) in c.tiles.iter().zip(&plan.tiles) {
        if tc.lattice != tp.lattice || tc.values.len() != tp.lattice.iter().product::<usize>() {
            return Err(Error::InvalidInputs(format!("tile {} lattice mismatch", tc.tile)));
        }
    }
    let parts: Vec<Vec<Complex64>> = c
        .tiles
        .par_iter()
        .zip(&plan.tiles)
        .map(|(tc, tp)| {
            let mut big = tc.values.clone();
            fft_nd(&mut big, &tp.lattice, FftDirection::Forward);
            let scale = 1.0 / tp.det.sqrt();
            tp.values
                .iter()
                .zip(&tp.residue)
                .map(|(v, &r)| big[r] * (v * scale))
                .collect()
        })
        .collect();
    let mut spectrum = vec![Complex64::default(); plan.n.pow(plan.dim as u32)];
    for p in parts {
        for (acc, v) in spectrum.iter_mut().zip(p) {
            *acc += v;
        }
    }
    SampledSignal::from_spectrum(plan.dim, plan.n, plan.period, spectrum)
}

/// `synthesize ∘ analyze`.
pub fn frame_apply(f: &SampledSignal, plan: &TransformPlan) -> Result<SampledSignal> {
    synthesize(&analyze(f, plan)?, plan)
}

/// Fraction of `‖f‖²` carried by frequencies outside `region`.
pub fn energy_outside(f: &SampledSignal, region: &FrequencyBox) -> f64 {
    let spectrum = f.spectrum();
    let freqs = bin_frequencies(f.dim, f.n, f.period);
    let d = f.dim;
    let (mut out, mut total) = (0.0, 0.0);
    for (i, s) in spectrum.iter().enumerate() {
        let e = s.norm_sqr();
        total += e;
        let x = &freqs[i * d..(i + 1) * d];
        if x.iter().zip(region.lo.iter().zip(&region.hi)).any(|(v, (lo, hi))| v < lo || v > hi) {
            out += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        out / total
    }
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub signal: SampledSignal,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

fn axpy(y: &mut SampledSignal, a: Complex64, x: &SampledSignal) {
    for (u, v) in y.samples.iter_mut().zip(&x.samples) {
        *u += a * v;
    }
}

/// Solves `frame_apply(u) = f` by conjugate gradients preconditioned with
/// `2/(A_cert + B_cert)`.
pub fn frame_invert(f: &SampledSignal, plan: &TransformPlan, cert: &FrameCertificate) -> Result<Inversion> {
    plan.check_signal(f)?;
    if cert.degenerate || cert.a_cert <= 0.0 {
        return Err(Error::DegenerateCertificate { a_cert: cert.a_cert });
    }
    if let Some(region) = &cert.region {
        let leak = energy_outside(f, region);
        if leak > LEAK_TOLERANCE {
            return Err(Error::BoundaryLeak { fraction: leak });
        }
    }
    let cap = ((10.0 * cert.b_cert / cert.a_cert).ceil() as usize).max(1);
    let pre = 2.0 / (cert.a_cert + cert.b_cert);
    let f_norm = f.norm_sq().sqrt();
    let mut u = SampledSignal::zeros(f.dim, f.n, f.period)?;
    let mut history = vec![1.0];
    if f_norm == 0.0 {
        return Ok(Inversion {
            signal: u,
            iterations: 0,
            residual_history: vec![0.0],
        });
    }
    let mut r = f.clone();
    let mut z = r.clone();
    z.samples.iter_mut().for_each(|v| *v *= pre);
    let mut p = z.clone();
    let mut rz = r.inner(&z).re;
    for it in 1..=cap {
        let sp = frame_apply(&p, plan)?;
        let curv = p.inner(&sp).re;
        if curv <= 0.0 {
            break;
        }
        let alpha = rz / curv;
        axpy(&mut u, Complex64::new(alpha, 0.0), &p);
        axpy(&mut r, Complex64::new(-alpha, 0.0), &sp);
        let rel = r.norm_sq().sqrt() / f_norm;
        history.push(rel);
        if rel <= INVERT_TOLERANCE {
            return Ok(Inversion {
                signal: u,
                iterations: it,
                residual_history: history,
            });
        }
        z = r.clone();
        z.samples.iter_mut().for_each(|v| *v *= pre);
        let rz_new = r.inner(&z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for (pv, zv) in p.samples.iter_mut().zip(&z.samples) {
            *pv = zv + *pv * beta;
        }
    }
    Err(Error::NoConvergence {
        iterations: history.len() - 1,
        residual: *history.last().expect("history is never empty"),
        history,
    })
}

/// Metrics of `f ↦ frame_invert(frame_apply(f))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub relative_error: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub rayleigh: f64,
}

pub fn roundtrip(f: &SampledSignal, plan: &TransformPlan, cert: &FrameCertificate) -> Result<(SampledSignal, RoundTrip)> {
    let c = analyze(f, plan)?;
    let energy = c.norm_sq();
    let g = synthesize(&c, plan)?;
    let inv = frame_invert(&g, plan, cert)?;
    let mut diff = inv.signal.clone();
    axpy(&mut diff, Complex64::new(-1.0, 0.0), f);
    let norm = f.norm_sq();
    let relative_error = if norm == 0.0 { 0.0 } else { (diff.norm_sq() / norm).sqrt() };
    Ok((
        inv.signal,
        RoundTrip {
            relative_error,
            iterations: inv.iterations,
            residual_history: inv.residual_history,
            rayleigh: if norm == 0.0 { 0.0 } else { energy / norm },
        },
    ))
}

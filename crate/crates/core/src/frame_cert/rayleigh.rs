//! Rayleigh quotients `Σ|⟨f, ψ_{T,k}⟩|² / ‖f‖²` over test signals.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tiling::FrequencyBox;
use crate::transform::fft::unflatten;
use crate::transform::{analyze, bin_frequencies, energy_outside, SampledSignal, TransformPlan, LEAK_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub min: f64,
    pub max: f64,
    pub quotients: Vec<f64>,
}

/// Random complex spectrum on the grid frequencies inside `region`,
/// excluding the Nyquist bins.
pub fn random_band_limited<R: Rng>(rng: &mut R, dim: usize, n: usize, period: f64, region: &FrequencyBox) -> Result<SampledSignal> {
    if region.dim() != dim {
        return Err(Error::DimMismatch {
            expected: dim,
            got: region.dim(),
        });
    }
    let freqs = bin_frequencies(dim, n, period);
    let dims = vec![n; dim];
    let mut idx = vec![0; dim];
    let spectrum: Vec<Complex64> = (0..n.pow(dim as u32))
        .map(|i| {
            unflatten(i, &dims, &mut idx);
            let x = &freqs[i * dim..(i + 1) * dim];
            let inside = x
                .iter()
                .zip(region.lo.iter().zip(&region.hi))
                .all(|(v, (lo, hi))| v >= lo && v <= hi);
            if inside && idx.iter().all(|&k| k != n / 2) {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::default()
            }
        })
        .collect();
    SampledSignal::from_spectrum(dim, n, period, spectrum)
}

/// Quotients for every test signal. Signals with energy outside `region`
/// are rejected.
pub fn empirical_rayleigh(plan: &TransformPlan, signals: &[SampledSignal], region: Option<&FrequencyBox>) -> Result<RayleighReport> {
    let mut quotients = Vec::with_capacity(signals.len());
    for (i, f) in signals.iter().enumerate() {
        if let Some(r) = region {
            let leak = energy_outside(f, r);
            if leak > LEAK_TOLERANCE {
                return Err(Error::RegionMismatch(format!(
                    "test signal {i} has {leak:e} of its energy outside the certified region"
                )));
            }
        }
        let norm = f.norm_sq();
        if norm == 0.0 {
            continue;
        }
        quotients.push(analyze(f, plan)?.norm_sq() / norm);
    }
    Ok(RayleighReport {
        min: quotients.iter().cloned().fold(f64::INFINITY, f64::min),
        max: quotients.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        quotients,
    })
}

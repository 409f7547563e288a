//! Measured spectral sums, the tail functional `Γ`, and certified frame
//! bounds for a concrete family of tiled windows.

pub mod lemma;
pub mod rayleigh;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tile::{inf_norm, sup_norm};
use crate::tiling::{FrequencyBox, GrowthFn};
use crate::transform::fft::signed_bin;
use crate::window::{FourierWindow, TiledWindow};

pub use lemma::{brute_force_lemma_check, weight_sum_check, LemmaCheck, WeightSumCheck};
pub use rayleigh::{empirical_rayleigh, random_band_limited, RayleighReport};

/// Omitted-tile mass may use at most this fraction of the measured `A`.
pub const OMITTED_FRACTION: f64 = 0.01;
const POINT_BUDGET: usize = 20_000_000;

/// `C_d = 2^{2d+2}(d + 1)`.
pub fn comparison_constant(dim: usize) -> f64 {
    2f64.powi(2 * dim as i32 + 2) * (dim as f64 + 1.0)
}

/// `c_d = (4 C_d)⁻¹`.
pub fn tail_constant(dim: usize) -> f64 {
    1.0 / (4.0 * comparison_constant(dim))
}

/// `ω(x) = |x|^{d+1}` for `|x|_∞ ≥ 1/2`, else 0.
pub fn omega(r: f64, dim: usize) -> f64 {
    if r >= 0.5 {
        r.powi(dim as i32 + 1)
    } else {
        0.0
    }
}

/// Where `S` and the tail sum are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyGrid {
    /// The frequencies `m/L`, `-N/2 ≤ m < N/2`, of a periodic sampling grid.
    /// Extrema are exact for the discrete transform on that grid.
    Exact { period: f64, n: usize },
    /// Cell centres with the given spacing; extrema are widened by a
    /// per-cell modulus of continuity.
    Continuum { spacing: f64 },
}

/// Tiles outside the enumerated list, described by the admissibility data
/// of the family and a common window envelope.
#[derive(Debug, Clone)]
pub struct OmittedTiles {
    /// Every omitted tile `T` has `(t_cap · T) ∩ region = ∅`.
    pub t_cap: f64,
    pub multiplicity: f64,
    pub growth: GrowthFn,
    pub window: Arc<dyn FourierWindow>,
}

impl OmittedTiles {
    /// `#O_ξ(t) ≤ 2𝒞 2^{d(2𝒞+1)} t^d K(t)`.
    pub fn overlap_count(&self, t: f64, dim: usize) -> f64 {
        let c = self.multiplicity;
        2.0 * c * 2f64.powf(dim as f64 * (2.0 * c + 1.0)) * t.powi(dim as i32) * self.growth.eval(t)
    }

    /// Bounds on the omitted contributions to `S` and to the tail sum at any
    /// point of the region, by dyadic shells of local radius.
    pub fn bounds(&self, dim: usize) -> (f64, f64) {
        let (mut s, mut g) = (0.0, 0.0);
        for i in 0..400 {
            let r = 2f64.powi(i - 1) * self.t_cap;
            let env = self.window.tail_envelope(r).min(self.window.sup_abs());
            let count = self.overlap_count(4.0 * r, dim);
            let term = count * env * env;
            s += term;
            g += term * (2.0 * r).powi(dim as i32 + 1);
            if env == 0.0 || (term < 1e-300 && i > 4) || !g.is_finite() {
                break;
            }
        }
        (s, g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub grid: FrequencyGrid,
    pub points: usize,
    /// Largest per-cell widening of `S`.
    pub padding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasurement {
    /// Lower bound on `S` over the region.
    pub a: f64,
    /// Upper bound on `S` over the region, omitted tiles included.
    pub b: f64,
    pub a_witness: Vec<f64>,
    pub b_witness: Vec<f64>,
    pub omitted_bound: f64,
    pub grid: GridMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMeasurement {
    /// Upper bound on the tail sum over the region, omitted tiles included.
    pub gamma: f64,
    pub witness: Vec<f64>,
    pub omitted_bound: f64,
    pub grid: GridMetadata,
}

struct Points {
    coords: Vec<f64>,
    half: Vec<f64>,
}

fn grid_points(region: &FrequencyBox, grid: &FrequencyGrid) -> Result<Points> {
    let d = region.dim();
    let axes: Vec<Vec<f64>> = match *grid {
        FrequencyGrid::Exact { period, n } => {
            if !(period > 0.0) || n < 2 {
                return Err(Error::InvalidInputs(format!("exact grid with L = {period}, N = {n}")));
            }
            (0..d)
                .map(|a| {
                    (0..n)
                        .map(|i| signed_bin(i, n) as f64 / period)
                        .filter(|&x| x >= region.lo[a] && x <= region.hi[a])
                        .collect::<Vec<_>>()
                })
                .map(|mut v| {
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect()
        }
        FrequencyGrid::Continuum { spacing } => {
            if !(spacing > 0.0 && spacing.is_finite()) {
                return Err(Error::InvalidInputs(format!("grid spacing {spacing}")));
            }
            (0..d)
                .map(|a| {
                    let len = region.hi[a] - region.lo[a];
                    let cells = ((len / spacing).ceil() as usize).max(1);
                    let w = len / cells as f64;
                    (0..cells).map(|i| region.lo[a] + (i as f64 + 0.5) * w).collect()
                })
                .collect()
        }
    };
    let half: Vec<f64> = match *grid {
        FrequencyGrid::Exact { .. } => vec![0.0; d],
        FrequencyGrid::Continuum { spacing } => (0..d)
            .map(|a| {
                let len = region.hi[a] - region.lo[a];
                0.5 * len / ((len / spacing).ceil()).max(1.0)
            })
            .collect(),
    };
    let total = axes.iter().map(Vec::len).try_fold(1usize, |acc, n| acc.checked_mul(n));
    let total = match total {
        Some(t) if t <= POINT_BUDGET => t,
        _ => {
            return Err(Error::InvalidInputs(format!(
                "grid exceeds {POINT_BUDGET} points"
            )))
        }
    };
    let mut coords = Vec::with_capacity(total * d);
    let dims: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut idx = vec![0; d];
    for flat in 0..total {
        crate::transform::fft::unflatten(flat, &dims, &mut idx);
        coords.extend((0..d).map(|a| axes[a][idx[a]]));
    }
    Ok(Points { coords, half })
}

/// Per-point values: `(S lower, S upper, tail upper)` on the cell around it.
fn cell_values(windows: &[TiledWindow], norms: &[f64], x: &[f64], half: f64, scratch: &mut [f64]) -> (f64, f64, f64) {
    let d = x.len();
    let (mut s, mut pad, mut tail) = (0.0, 0.0, 0.0);
    for (w, &norm) in windows.iter().zip(norms) {
        w.tile.local_coords_into(x, scratch);
        let r = sup_norm(scratch);
        let v = w.window.eval(scratch);
        s += v * v;
        if half == 0.0 {
            tail += v * v * omega(r, d);
            continue;
        }
        let reach = norm * half;
        let sup = w.window.sup_abs();
        let inner = r - reach;
        let m = if inner >= 0.5 {
            w.window.tail_envelope(inner).min(sup)
        } else {
            sup
        };
        if m > 0.0 {
            pad += 2.0 * m * w.window.lipschitz() * reach;
        }
        let outer = r + reach;
        tail += m * m * omega(outer, d);
    }
    (s - pad, s + pad, tail)
}

struct Sweep {
    lo: (f64, usize),
    hi: (f64, usize),
    tail: (f64, usize),
    padding: f64,
    points: usize,
}

fn sweep(windows: &[TiledWindow], region: &FrequencyBox, grid: &FrequencyGrid) -> Result<(Sweep, Points)> {
    let d = region.dim();
    if let Some(w) = windows.iter().find(|w| w.tile.dim() != d || w.window.dim() != d) {
        return Err(Error::DimMismatch {
            expected: d,
            got: w.tile.dim(),
        });
    }
    let pts = grid_points(region, grid)?;
    let half = pts.half.iter().cloned().fold(0.0, f64::max);
    let norms: Vec<f64> = windows.iter().map(|w| inf_norm(w.tile.inverse())).collect();
    let n = pts.coords.len() / d.max(1);
    let init = Sweep {
        lo: (f64::INFINITY, 0),
        hi: (f64::NEG_INFINITY, 0),
        tail: (f64::NEG_INFINITY, 0),
        padding: 0.0,
        points: 0,
    };
    let merge = |a: Sweep, b: Sweep| Sweep {
        lo: if b.lo.0 < a.lo.0 || (b.lo.0 == a.lo.0 && b.lo.1 < a.lo.1) { b.lo } else { a.lo },
        hi: if b.hi.0 > a.hi.0 || (b.hi.0 == a.hi.0 && b.hi.1 < a.hi.1) { b.hi } else { a.hi },
        tail: if b.tail.0 > a.tail.0 || (b.tail.0 == a.tail.0 && b.tail.1 < a.tail.1) {
            b.tail
        } else {
            a.tail
        },
        padding: a.padding.max(b.padding),
        points: a.points + b.points,
    };
    let result = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |scratch, i| {
                let x = &pts.coords[i * d..(i + 1) * d];
                let (lo, hi, tail) = cell_values(windows, &norms, x, half, scratch);
                Sweep {
                    lo: (lo, i),
                    hi: (hi, i),
                    tail: (tail, i),
                    padding: 0.5 * (hi - lo),
                    points: 1,
                }
            },
        )
        .reduce(
            || Sweep {
                lo: init.lo,
                hi: init.hi,
                tail: init.tail,
                padding: 0.0,
                points: 0,
            },
            merge,
        );
    Ok((result, pts))
}

fn point(pts: &Points, i: usize, d: usize) -> Vec<f64> {
    pts.coords.get(i * d..(i + 1) * d).map(<[f64]>::to_vec).unwrap_or_default()
}

/// Lower and upper bounds on `S(ξ) = Σ_T |ψ̂^T(ξ)|²` over `region`.
pub fn measure_spectral_sum(
    windows: &[TiledWindow],
    region: &FrequencyBox,
    grid: &FrequencyGrid,
    omitted: Option<&OmittedTiles>,
) -> Result<SpectralMeasurement> {
    let d = region.dim();
    let (sw, pts) = sweep(windows, region, grid)?;
    let omitted_bound = omitted.map_or(0.0, |o| o.bounds(d).0);
    let a = if sw.points == 0 { 0.0 } else { sw.lo.0.max(0.0) };
    let b = if sw.points == 0 { 0.0 } else { sw.hi.0 + omitted_bound };
    if omitted.is_some() && omitted_bound > OMITTED_FRACTION * a {
        return Err(Error::IncompleteEnumeration {
            bound: omitted_bound,
            allowed: OMITTED_FRACTION * a,
        });
    }
    Ok(SpectralMeasurement {
        a,
        b,
        a_witness: point(&pts, sw.lo.1, d),
        b_witness: point(&pts, sw.hi.1, d),
        omitted_bound,
        grid: GridMetadata {
            grid: grid.clone(),
            points: sw.points,
            padding: sw.padding,
        },
    })
}

/// Upper bound on `Γ = sup_ξ Σ_T |ψ̂^T(ξ)|² ω(D⁻¹(ξ − ξ_T))` over `region`.
/// The omitted-tile share may not exceed `allowed`.
pub fn measure_tail_functional(
    windows: &[TiledWindow],
    region: &FrequencyBox,
    grid: &FrequencyGrid,
    omitted: Option<&OmittedTiles>,
    allowed: f64,
) -> Result<TailMeasurement> {
    let d = region.dim();
    let (sw, pts) = sweep(windows, region, grid)?;
    let omitted_bound = omitted.map_or(0.0, |o| o.bounds(d).1);
    if omitted_bound > allowed {
        return Err(Error::IncompleteEnumeration {
            bound: omitted_bound,
            allowed,
        });
    }
    let raw = if sw.points == 0 { 0.0 } else { sw.tail.0.max(0.0) };
    Ok(TailMeasurement {
        gamma: raw + omitted_bound,
        witness: point(&pts, sw.tail.1, d),
        omitted_bound,
        grid: GridMetadata {
            grid: grid.clone(),
            points: sw.points,
            padding: sw.padding,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCertificate {
    pub dim: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Gamma")]
    pub gamma: f64,
    pub delta_lo: f64,
    pub delta_up: f64,
    pub a_cert: f64,
    pub b_cert: f64,
    #[serde(rename = "C_d")]
    pub comparison_constant: f64,
    #[serde(rename = "c_d")]
    pub tail_constant: f64,
    pub degenerate: bool,
    /// Frequencies on which the bounds were measured.
    pub region: Option<FrequencyBox>,
    pub spectral: Option<SpectralMeasurement>,
    pub tail: Option<TailMeasurement>,
}

/// Optimises `(1 − δ)A − C_dΓ/δ` and `(1 + δ)B + C_dΓ/δ` over `δ ∈ (0, 1)`.
pub fn certify(a: f64, b: f64, gamma: f64, dim: usize) -> Result<FrameCertificate> {
    let finite = [a, b, gamma].iter().all(|v| v.is_finite() && *v >= 0.0);
    if !finite || dim == 0 || a > b * (1.0 + 1e-12) {
        return Err(Error::InvalidInputs(format!(
            "need 0 ≤ A ≤ B finite, Γ ≥ 0 and d ≥ 1; got A = {a}, B = {b}, Γ = {gamma}, d = {dim}"
        )));
    }
    let cd = comparison_constant(dim);
    let cg = cd * gamma;
    let (delta_lo, a_cert) = if cg < a {
        ((cg / a).sqrt(), a - 2.0 * (cg * a).sqrt())
    } else {
        (1.0, -cg)
    };
    let (delta_up, b_cert) = if b > 0.0 && cg < b {
        ((cg / b).sqrt(), b + 2.0 * (cg * b).sqrt())
    } else {
        (1.0, 2.0 * b + cg)
    };
    Ok(FrameCertificate {
        dim,
        a,
        b,
        gamma,
        delta_lo,
        delta_up,
        a_cert,
        b_cert,
        comparison_constant: cd,
        tail_constant: tail_constant(dim),
        degenerate: a_cert <= 0.0,
        region: None,
        spectral: None,
        tail: None,
    })
}

/// Measures `A`, `B` and `Γ` on `region` and certifies them.
pub fn certify_family(
    windows: &[TiledWindow],
    region: &FrequencyBox,
    grid: &FrequencyGrid,
    omitted: Option<&OmittedTiles>,
) -> Result<FrameCertificate> {
    let d = region.dim();
    let spectral = measure_spectral_sum(windows, region, grid, omitted)?;
    let allowed = OMITTED_FRACTION * tail_constant(d) * spectral.a;
    let tail = measure_tail_functional(windows, region, grid, omitted, allowed)?;
    let mut cert = certify(spectral.a, spectral.b.max(spectral.a), tail.gamma, d)?;
    cert.region = Some(region.clone());
    cert.spectral = Some(spectral);
    cert.tail = Some(tail);
    Ok(cert)
}

//! Brute-force evaluation of the one-scale comparison between the discrete
//! lattice sum and the continuous integral, and of the weight-sum
//! inequality behind it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_cert::{comparison_constant, omega};
use crate::tile::{sup_norm, Tile};
use crate::transform::fft::unflatten;
use crate::transform::{bin_frequencies, SampledSignal};

/// Energy fraction allowed at the Nyquist bins.
pub const NYQUIST_TOLERANCE: f64 = 1e-12;
/// Absolute slack in `holds`, relative to the Cauchy–Schwarz scale.
pub const ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub delta: f64,
    /// `Σ_k |⟨f, τ_{D^I k} g⟩|² / |det D|` from physical inner products.
    pub lattice_sum: f64,
    /// `∫_{DT^d} |Σ_k f̂(ξ − Dk) ĝ(ξ − Dk)‾|²` from the folded spectra.
    pub periodized: f64,
    /// `|lattice_sum − periodized|` over `‖f‖² max_r Σ_{m≡r} |ĝ_m|²`.
    pub identity_error: f64,
    /// `∫ |f̂|²|ĝ|²`.
    pub continuous: f64,
    /// `∫ |f̂|²|ĝ|² ω^T`.
    pub tail: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Upper bound on `lattice_sum`; rounding is judged against it.
    pub scale: f64,
    pub holds: bool,
}

fn nyquist_fraction(f: &SampledSignal) -> f64 {
    let spec = f.spectrum();
    let dims = f.dims();
    let mut idx = vec![0; f.dim];
    let (mut edge, mut total) = (0.0, 0.0);
    for (i, v) in spec.iter().enumerate() {
        let e = v.norm_sqr();
        total += e;
        unflatten(i, &dims, &mut idx);
        if idx.iter().any(|&k| k == f.n / 2) {
            edge += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        edge / total
    }
}

/// Lattice sizes `n = D·L` that divide the grid, so every translate
/// `D⁻¹k` is a whole number of samples.
fn shift_lattice(tile: &Tile, f: &SampledSignal) -> Result<Vec<usize>> {
    let diag = tile.diagonal_entries().ok_or_else(|| Error::GridIncommensurate {
        tile: 0,
        detail: "matrix is not diagonal".into(),
    })?;
    diag.iter()
        .map(|&d| {
            let x = d.abs() * f.period;
            let r = x.round();
            if r < 1.0 || (x - r).abs() > 1e-9 * r || f.n % (r as usize) != 0 {
                Err(Error::GridIncommensurate {
                    tile: 0,
                    detail: format!("|D|·L = {x} does not divide N = {}", f.n),
                })
            } else {
                Ok(r as usize)
            }
        })
        .collect()
}

/// Evaluates both sides of the comparison inequality for one tile and
/// checks the periodization identity by two independent computations.
pub fn brute_force_lemma_check(tile: &Tile, f: &SampledSignal, g: &SampledSignal, delta: f64) -> Result<LemmaCheck> {
    if !f.same_grid(g) || tile.dim() != f.dim {
        return Err(Error::InvalidInputs("f, g and the tile must share one grid".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInputs(format!("δ = {delta} must lie in (0, 1)")));
    }
    for (name, s) in [("f", f), ("g", g)] {
        let frac = nyquist_fraction(s);
        if frac > NYQUIST_TOLERANCE {
            return Err(Error::BandlimitViolation(format!(
                "{name} carries {frac:e} of its energy on the Nyquist bins"
            )));
        }
    }
    let d = f.dim;
    let lattice = shift_lattice(tile, f)?;
    let det = tile.det().abs();
    let n = f.n;
    let dims = f.dims();

    // physical side
    let count: usize = lattice.iter().product();
    let mut k = vec![0; d];
    let mut idx = vec![0; d];
    let mut lattice_sum = 0.0;
    for flat_k in 0..count {
        unflatten(flat_k, &lattice, &mut k);
        let shift: Vec<usize> = (0..d).map(|a| k[a] * (n / lattice[a])).collect();
        let mut acc = Complex64::default();
        for (p, fv) in f.samples.iter().enumerate() {
            unflatten(p, &dims, &mut idx);
            let q = (0..d).fold(0, |q, a| q * n + (idx[a] + n - shift[a]) % n);
            acc += fv * g.samples[q].conj();
        }
        lattice_sum += (acc * f.cell()).norm_sqr() / det;
    }

    // frequency side
    let fs = f.spectrum();
    let gs = g.spectrum();
    let freqs = bin_frequencies(d, n, f.period);
    let ld = f.period.powi(d as i32);
    let mut folded = vec![Complex64::default(); count];
    let mut g_folded = vec![0.0; count];
    let mut f_energy = 0.0;
    let (mut continuous, mut tail) = (0.0, 0.0);
    let mut local = vec![0.0; d];
    for (i, (a, b)) in fs.iter().zip(&gs).enumerate() {
        let prod = a * b.conj();
        unflatten(i, &dims, &mut idx);
        let r = (0..d).fold(0, |r, ax| {
            let m = crate::transform::fft::signed_bin(idx[ax], n);
            r * lattice[ax] + m.rem_euclid(lattice[ax] as i64) as usize
        });
        folded[r] += prod;
        g_folded[r] += b.norm_sqr();
        f_energy += a.norm_sqr();
        let e = prod.norm_sqr();
        continuous += e;
        tile.local_coords_into(&freqs[i * d..(i + 1) * d], &mut local);
        tail += e * omega(sup_norm(&local), d);
    }
    let periodized = folded.iter().map(|v| v.norm_sqr()).sum::<f64>() / ld;
    continuous /= ld;
    tail /= ld;

    let lhs = (lattice_sum - continuous).abs();
    let rhs = delta * continuous + comparison_constant(d) / delta * tail;
    // Cauchy–Schwarz bound on both sides; stays meaningful when they vanish
    let bound = f_energy * g_folded.iter().cloned().fold(0.0, f64::max) / ld;
    let scale = periodized.abs().max(lattice_sum.abs()).max(bound).max(f64::MIN_POSITIVE);
    Ok(LemmaCheck {
        delta,
        lattice_sum,
        periodized,
        identity_error: (lattice_sum - periodized).abs() / scale,
        continuous,
        tail,
        lhs,
        rhs,
        scale,
        holds: lhs <= rhs * (1.0 + 1e-12) + ROUNDING_FLOOR * scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSumCheck {
    /// Truncated lattice sum times `w(ξ)`.
    pub lower: f64,
    /// `lower` plus the tail majorant.
    pub upper: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `w(ξ) Σ_{ℓ ≠ 0} 1/w(ξ − ℓ)` against `δ + C_d δ⁻¹ ω(ξ)` with
/// `w = a 1_{|x| < 1/2} + ω`, `a = δ 2^{−2d−1}/(d + 1)`, summing
/// `|ℓ|_∞ ≤ radius` exactly and bounding the rest.
pub fn weight_sum_check(xi: &[f64], delta: f64, radius: usize) -> Result<WeightSumCheck> {
    let d = xi.len();
    let r = sup_norm(xi);
    if d == 0 || !(delta > 0.0 && delta <= 1.0) || (radius as f64) < r + 1.0 {
        return Err(Error::InvalidInputs(format!(
            "need d ≥ 1, δ ∈ (0, 1] and radius ≥ |ξ| + 1; got d = {d}, δ = {delta}, radius = {radius}, |ξ| = {r}"
        )));
    }
    let a = delta * 2f64.powi(-(2 * d as i32) - 1) / (d as f64 + 1.0);
    let w = |x: f64| if x < 0.5 { a } else { x.powi(d as i32 + 1) };
    let side = 2 * radius + 1;
    let mut ell = vec![0; d];
    let mut diff = vec![0.0; d];
    let mut sum = 0.0;
    for flat in 0..side.pow(d as u32) {
        unflatten(flat, &vec![side; d], &mut ell);
        if ell.iter().all(|&e| e == radius) {
            continue;
        }
        for i in 0..d {
            diff[i] = xi[i] - (ell[i] as f64 - radius as f64);
        }
        sum += 1.0 / w(sup_norm(&diff));
    }
    let big = radius as f64;
    let q = (2.0 * big + 3.0) / (big + 1.0 - r);
    let tail = 2.0 * d as f64 * q.powi(d as i32 - 1) / (big - r);
    let wx = w(r);
    let lower = wx * sum;
    let upper = wx * (sum + tail);
    let rhs = delta + comparison_constant(d) / delta * omega(r, d);
    Ok(WeightSumCheck {
        lower,
        upper,
        rhs,
        holds: upper <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_cert::random_band_limited;
    use crate::tiling::FrequencyBox;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_instances_one_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let band = FrequencyBox::new(vec![-7.9], vec![7.9]).unwrap();
        let tile = Tile::diagonal(&[2.0], vec![0.0]).unwrap();
        for _ in 0..5 {
            let f = random_band_limited(&mut rng, 1, 256, 16.0, &band).unwrap();
            let g = random_band_limited(&mut rng, 1, 256, 16.0, &band).unwrap();
            let c = brute_force_lemma_check(&tile, &f, &g, 0.3).unwrap();
            assert!(c.holds, "{c:?}");
            assert!(c.identity_error < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn window_inside_tile_has_no_aliasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tile = Tile::diagonal(&[2.0], vec![0.5]).unwrap();
        let inside = FrequencyBox::new(vec![-0.4], vec![1.4]).unwrap();
        let band = FrequencyBox::new(vec![-7.9], vec![7.9]).unwrap();
        let f = random_band_limited(&mut rng, 1, 128, 8.0, &band).unwrap();
        let g = random_band_limited(&mut rng, 1, 128, 8.0, &inside).unwrap();
        let c = brute_force_lemma_check(&tile, &f, &g, 0.5).unwrap();
        assert!(c.lhs <= 1e-12 * c.continuous, "{c:?}");
        assert!(c.tail <= 1e-20 * c.continuous);
    }

    #[test]
    fn nyquist_energy_rejected() {
        let f = SampledSignal::from_fn(1, 16, 1.0, |x| Complex64::new((std::f64::consts::PI * 16.0 * x[0]).cos(), 0.0))
            .unwrap();
        let tile = Tile::diagonal(&[2.0], vec![0.0]).unwrap();
        assert!(matches!(
            brute_force_lemma_check(&tile, &f, &f, 0.3),
            Err(Error::BandlimitViolation(_))
        ));
    }

    #[test]
    fn weight_sum_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2] {
            for _ in 0..200 {
                let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let delta = rng.gen_range(0.05..1.0);
                let c = weight_sum_check(&xi, delta, if d == 1 { 2000 } else { 40 }).unwrap();
                assert!(c.holds, "{xi:?} {delta} {c:?}");
            }
        }
    }
}

//! The Ingham bump: an infinite convolution of shrinking box functions,
//! truncated after `M + 1` pairs.
//!
//! `φ̂_M(ξ) = ∏_{j=0}^{M} sinc²(√e · ξ / t_j)` with `sinc(x) = sin x / x`.
//! `φ_M` is itself a compactly supported window; the truncation
//! certificate bounds its distance to the infinite product.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::window::weight::WeightSpec;

/// `√e`: the factor `c π` with `c = √e / π`.
pub const SQRT_E: f64 = 1.648_721_270_700_128_1;

/// Physical support scale `c = √e / π`.
pub const SUPPORT_SCALE: f64 = SQRT_E / PI;

/// Taylor coefficients of `ln(sin x / x)` in powers `x², x⁴, …, x¹⁰`.
const LN_SINC: [f64; 5] = [
    -1.0 / 6.0,
    -1.0 / 180.0,
    -1.0 / 2835.0,
    -1.0 / 37800.0,
    -1.0 / 467775.0,
];

/// Factors with `√e|ξ|/t_j` at most this go through the power-sum series.
const SERIES_CUTOFF: f64 = 0.25;

/// Extra terms of the t-sequence computed past `M` to bound `Σ_{j>M} t_j⁻²`.
const TAIL_FACTOR: usize = 64;

#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Pointwise bounds that come with a built `φ̂_M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationCertificate {
    /// Frequency window `[0, Ξ]` on which the bound is stated.
    pub window: f64,
    /// `sup_{|ξ| ≤ Ξ} (φ̂_M(ξ) − φ̂(ξ))`, upper bound.
    pub bound: f64,
    /// Upper bound on `Σ_{j>M} t_j⁻²`.
    pub tail_inverse_squares: f64,
}

#[derive(Debug, Clone)]
pub struct PhiProfile {
    weight: WeightSpec,
    /// `t_0..=t_{M+1}`.
    t: Vec<f64>,
    m: usize,
    /// `power_suffix[k][j] = Σ_{i=j}^{M} t_i^{-2(k+1)}`, with a trailing zero.
    power_suffix: Vec<Vec<f64>>,
    certificate: Option<TruncationCertificate>,
}

/// Incrementally grown t-sequence shared by the adaptive search.
struct TBuffer<'a> {
    weight: &'a WeightSpec,
    seq: Vec<f64>,
}

impl TBuffer<'_> {
    fn ensure(&mut self, len: usize) -> Result<&[f64]> {
        self.weight.extend_t_sequence(&mut self.seq, len)?;
        Ok(&self.seq[..len])
    }
}

impl PhiProfile {
    /// Builds `φ̂_M` for a fixed `M`, certifying on `[0, window]`.
    pub fn build(weight: &WeightSpec, m: usize, window: f64) -> Result<Self> {
        let mut buf = TBuffer {
            weight,
            seq: Vec::new(),
        };
        Self::build_with(&mut buf, m, window)
    }

    /// Builds `φ̂_M` for a fixed `M` and fails unless the truncation bound on
    /// `[0, window]` is at most `tolerance`.
    pub fn build_checked(weight: &WeightSpec, m: usize, window: f64, tolerance: f64) -> Result<Self> {
        let p = Self::build(weight, m, window)?;
        let achieved = p.certificate.map_or(f64::INFINITY, |c| c.bound);
        if achieved > tolerance {
            return Err(Error::TruncationBudgetExceeded {
                achieved,
                requested: tolerance,
                m,
            });
        }
        Ok(p)
    }

    /// Smallest `M` (up to `m_max`) whose truncation bound on `[0, window]`
    /// is at most `tolerance`.
    pub fn build_adaptive(weight: &WeightSpec, tolerance: f64, window: f64, m_max: usize) -> Result<Self> {
        if !weight.c_w.is_finite() {
            return Err(Error::InvalidInputs(
                "adaptive truncation needs a weight with finite C_W".into(),
            ));
        }
        let mut buf = TBuffer {
            weight,
            seq: Vec::new(),
        };
        let bound_at = |buf: &mut TBuffer, m: usize| -> Result<f64> {
            let t = buf.ensure(TAIL_FACTOR * (m + 1) + 2)?.to_vec();
            Ok(truncation_bound(&t, m, weight.c_w, window).0)
        };
        let mut hi = 8usize;
        while bound_at(&mut buf, hi)? > tolerance {
            if hi >= m_max {
                let achieved = bound_at(&mut buf, m_max)?;
                return Err(Error::TruncationBudgetExceeded {
                    achieved,
                    requested: tolerance,
                    m: m_max,
                });
            }
            hi = (hi * 2).min(m_max);
        }
        let mut lo = hi / 2;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if bound_at(&mut buf, mid)? <= tolerance {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Self::build_with(&mut buf, hi, window)
    }

    fn build_with(buf: &mut TBuffer, m: usize, window: f64) -> Result<Self> {
        let c_w = buf.weight.c_w;
        let full = buf.ensure(TAIL_FACTOR * (m + 1) + 2)?.to_vec();
        let certificate = c_w.is_finite().then(|| {
            let (bound, tail) = truncation_bound(&full, m, c_w, window);
            TruncationCertificate {
                window,
                bound,
                tail_inverse_squares: tail,
            }
        });
        let t: Vec<f64> = full[..m + 2].to_vec();
        let mut power_suffix = vec![vec![0.0; m + 2]; LN_SINC.len()];
        for (k, col) in power_suffix.iter_mut().enumerate() {
            let p = 2 * (k as i32 + 1);
            for j in (0..=m).rev() {
                col[j] = col[j + 1] + t[j].powi(-p);
            }
        }
        Ok(PhiProfile {
            weight: buf.weight.clone(),
            t,
            m,
            power_suffix,
            certificate,
        })
    }

    pub fn weight(&self) -> &WeightSpec {
        &self.weight
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `t_0..=t_M`.
    pub fn t_prefix(&self) -> &[f64] {
        &self.t[..=self.m]
    }

    pub fn certificate(&self) -> Option<TruncationCertificate> {
        self.certificate
    }

    /// `ln φ̂_M(ξ)`; `-∞` at zeros.
    pub fn ln_eval(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a == 0.0 {
            return 0.0;
        }
        let factors = &self.t[..=self.m];
        let threshold = SQRT_E * a / SERIES_CUTOFF;
        let split = factors.partition_point(|&tj| tj < threshold);
        let mut acc = 0.0;
        for &tj in &factors[..split] {
            let s = sinc(SQRT_E * a / tj);
            if s == 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += 2.0 * s.abs().ln();
        }
        if split <= self.m {
            let y = E * a * a;
            let mut pw = y;
            for (k, c) in LN_SINC.iter().enumerate() {
                acc += 2.0 * c * pw * self.power_suffix[k][split];
                pw *= y;
            }
        }
        acc
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.ln_eval(xi).exp()
    }

    /// Plain product of all `M + 1` factors; slow reference path.
    pub fn eval_product(&self, xi: f64) -> f64 {
        self.t[..=self.m]
            .iter()
            .map(|tj| sinc(SQRT_E * xi / tj).powi(2))
            .product()
    }

    /// `e^{−(j₀+1)}` for the largest `j₀ ≤ M` with `t_{j₀} ≤ |ξ|`, else one.
    pub fn decay_bound(&self, xi: f64) -> f64 {
        let a = xi.abs();
        let count = self.t[..=self.m].partition_point(|&tj| tj <= a);
        if count == 0 {
            1.0
        } else {
            (-(count as f64)).exp()
        }
    }

    /// Half-width `c Σ_{j≤M} 1/t_j` of the support of `φ_M`.
    pub fn support_half_width(&self) -> f64 {
        SUPPORT_SCALE * self.t[..=self.m].iter().map(|t| 1.0 / t).sum::<f64>()
    }

    /// Declared support half-width `c · C_W` of the limit `φ`.
    pub fn declared_support(&self) -> f64 {
        SUPPORT_SCALE * self.weight.c_w
    }

    /// Samples `φ_M` on `n` points of `[-period/2, period/2)` by an inverse
    /// DFT of `φ̂_M` sampled at spacing `1/period`.
    ///
    /// Exact up to the omitted band `|ξ| ≥ n/(2·period)` whenever the
    /// support fits in the period.
    pub fn physical_samples(&self, n: usize, period: f64) -> (Vec<f64>, Vec<f64>) {
        let dxi = 1.0 / period;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                Complex64::new(self.eval(m * dxi) * dxi, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let dx = period / n as f64;
        let mut xs = Vec::with_capacity(n);
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            let k = (i + n / 2) % n;
            let x = if k < n / 2 { k as f64 } else { k as f64 - n as f64 } * dx;
            xs.push(x);
            vals.push(buf[k].re);
        }
        (xs, vals)
    }
}

/// `(sup_{|ξ|≤Ξ} φ̂_M − φ̂, bound on Σ_{j>M} t_j⁻²)` from a t-sequence
/// extending past `M + 1`.
///
/// Uses `1 − ∏ sinc²(x_j) ≤ Σ x_j²/3`, the decay certificate for
/// `ξ² φ̂_M(ξ)`, and `Σ_{j>J} t_j⁻² ≤ (C_W − Σ_{j≤J} 1/t_j)/t_{J+1}`.
fn truncation_bound(t: &[f64], m: usize, c_w: f64, window: f64) -> (f64, f64) {
    let last = t.len() - 1;
    let head: f64 = t[m + 1..last].iter().map(|x| x.powi(-2)).sum();
    let partial: f64 = t[..last].iter().map(|x| 1.0 / x).sum();
    let remainder = (c_w - partial).max(0.0);
    let tail = head + remainder / t[last];

    let mut sup = window.min(t[0]).powi(2);
    for j0 in 0..=m {
        if t[j0] > window {
            break;
        }
        let right = if j0 == m { window } else { window.min(t[j0 + 1]) };
        sup = sup.max(right * right * (-(j0 as f64 + 1.0)).exp());
    }
    (E / 3.0 * sup * tail, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(m: usize) -> PhiProfile {
        PhiProfile::build(&WeightSpec::sqrt_exponential(), m, 1e3).unwrap()
    }

    #[test]
    fn unit_at_origin_and_even() {
        for m in [0, 3, 40] {
            let p = profile(m);
            assert_eq!(p.eval(0.0), 1.0);
            for xi in [0.3, 1.7, 12.0] {
                assert_eq!(p.eval(xi), p.eval(-xi));
            }
        }
    }

    #[test]
    fn key_factor_inequality() {
        let p = profile(0);
        let v = p.eval(1.0);
        let expected = (SQRT_E.sin() / SQRT_E).powi(2);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.3657).abs() < 1e-4);
        assert!(v <= (-1.0f64).exp());
    }

    #[test]
    fn series_path_matches_product() {
        let p = profile(400);
        for i in 0..500 {
            let xi = 0.01 + i as f64 * 0.37;
            let a = p.eval(xi);
            let b = p.eval_product(xi);
            assert!((a - b).abs() <= 1e-13 * b.max(1e-300) + 1e-300, "xi={xi} {a} {b}");
        }
    }

    #[test]
    fn partial_products_nonincreasing_in_m() {
        let ps: Vec<_> = [1, 2, 5, 20, 80].iter().map(|&m| profile(m)).collect();
        for i in 0..300 {
            let xi = i as f64 * 0.05;
            for w in ps.windows(2) {
                assert!(w[1].eval(xi) <= w[0].eval(xi) * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn decay_certificate_holds() {
        let p = profile(60);
        let w = WeightSpec::sqrt_exponential();
        for i in 0..2000 {
            let xi = 10f64.powf(-2.0 + 5.5 * i as f64 / 2000.0);
            assert!(p.ln_eval(xi) <= p.decay_bound(xi).ln() + 1e-12);
            if xi <= p.t_prefix()[60] {
                assert!(p.ln_eval(xi) <= -w.ln_w(xi) + 1e-12, "xi={xi}");
            }
        }
    }

    #[test]
    fn adaptive_truncation_reaches_tolerance() {
        let w = WeightSpec::sqrt_exponential();
        let p = PhiProfile::build_adaptive(&w, 1e-6, 1e3, 100_000).unwrap();
        let c = p.certificate().unwrap();
        assert!(c.bound <= 1e-6);
        let coarser = PhiProfile::build(&w, p.m() - 1, 1e3).unwrap();
        assert!(coarser.certificate().unwrap().bound > 1e-6);
        assert!(matches!(
            PhiProfile::build_checked(&w, 3, 1e3, 1e-10),
            Err(Error::TruncationBudgetExceeded { .. })
        ));
    }

    #[test]
    fn truncation_bound_dominates_observed_gap() {
        let w = WeightSpec::sqrt_exponential();
        let coarse = PhiProfile::build(&w, 10, 50.0).unwrap();
        let fine = PhiProfile::build(&w, 4000, 50.0).unwrap();
        let bound = coarse.certificate().unwrap().bound;
        for i in 0..500 {
            let xi = i as f64 * 0.1;
            let gap = coarse.eval(xi) - fine.eval(xi);
            assert!(gap >= -1e-15 && gap <= bound, "xi={xi} gap={gap} bound={bound}");
        }
    }

    #[test]
    fn support_inside_declared_interval() {
        let p = profile(200);
        assert!(p.support_half_width() <= p.declared_support());
        assert!((p.declared_support() - 2.0 * SQRT_E / PI).abs() < 1e-15);
    }
}

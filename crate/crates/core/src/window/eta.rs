//! The tile-multiplier approximant `η̂`: an indicator of `[−a, a]`,
//! `a = 1/2 − θ/6`, smoothed by the dilate `s⁻¹ κ φ̂²(·/s)` with `s = εθ/3`.
//!
//! In one dimension `η̂(x) = ∫_{(x−a)/s}^{(x+a)/s} κ φ̂²(v) dv`. The integral
//! is read off a table of the complementary antiderivative
//! `G̃(v) = ∫_v^∞ κ φ̂²`, which is shared by every `(ε, θ)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::window::phi::PhiProfile;

const FINE_STEP: f64 = 1.0 / 512.0;
const FINE_END: f64 = 32.0;
const COARSE_STEP: f64 = 1.0 / 128.0;
/// Neglected mass of `φ̂²` beyond the table end.
const TAIL_TARGET: f64 = 1e-17;
const MAX_END: f64 = 1.0e6;
/// Absolute quadrature tolerance for the whole table.
pub const QUAD_TOLERANCE: f64 = 1e-12;

/// Complementary antiderivative of `κ φ̂²` on `[0, U]`.
#[derive(Debug, Clone)]
pub struct EtaTable {
    kappa: f64,
    c_prime: f64,
    end: f64,
    fine_knots: usize,
    /// `G̃` at the knots.
    upper: Vec<f64>,
    /// `κ φ̂²` at the knots.
    density: Vec<f64>,
    quad_error: f64,
    tail_sq: f64,
}

/// Upper bounds on `∫_U^∞ φ̂_M` and `∫_U^∞ φ̂_M²` from the decay certificate.
fn tail_integrals(t: &[f64], u: f64) -> (f64, f64) {
    let m = t.len() - 1;
    let (mut one, mut two) = (0.0, 0.0);
    let mut seg = |lo: f64, hi: f64, b: f64| {
        let lo = lo.max(u);
        if hi > lo {
            one += b * (hi - lo);
            two += b * b * (hi - lo);
        }
    };
    seg(0.0, t[0], 1.0);
    for j in 0..m {
        seg(t[j], t[j + 1], (-(j as f64 + 1.0)).exp());
    }
    // beyond t_M: φ̂_M ≤ e^{−M} t_M² / (e ξ²)
    let start = u.max(t[m]);
    let c = (-(m as f64)).exp() * t[m] * t[m] / std::f64::consts::E;
    one += c / start;
    two += c * c / (3.0 * start.powi(3));
    (one, two)
}

impl EtaTable {
    pub fn build(phi: &PhiProfile) -> Result<Self> {
        let t = phi.t_prefix();
        let mut end = FINE_END;
        while tail_integrals(t, end).1 > TAIL_TARGET {
            end += FINE_END;
            if end > MAX_END {
                return Err(Error::QuadratureFailure(format!(
                    "φ̂² tail above {TAIL_TARGET:e} at {MAX_END}"
                )));
            }
        }
        let fine_knots = (FINE_END / FINE_STEP).round() as usize;
        let coarse = ((end - FINE_END) / COARSE_STEP).round() as usize;
        let panels = fine_knots + coarse;
        let knot = |i: usize| {
            if i <= fine_knots {
                i as f64 * FINE_STEP
            } else {
                FINE_END + (i - fine_knots) as f64 * COARSE_STEP
            }
        };
        let panel_tol = QUAD_TOLERANCE / panels as f64;
        let sq = |x: f64| phi.eval(x).powi(2);
        let one = |x: f64| phi.eval(x);
        let pieces: Vec<(f64, f64, f64)> = (0..panels)
            .into_par_iter()
            .map(|i| {
                let (a, b) = (knot(i), knot(i + 1));
                let (v2, e2) = quad::gk15(&sq, a, b);
                let (v1, e1) = quad::gk15(&one, a, b);
                let (v2, e2) = if e2 > panel_tol {
                    let r = quad::integrate(sq, a, b, panel_tol, 256)?;
                    (r.value, r.error)
                } else {
                    (v2, e2)
                };
                let (v1, e1) = if e1 > panel_tol {
                    let r = quad::integrate(one, a, b, panel_tol, 256)?;
                    (r.value, r.error)
                } else {
                    (v1, e1)
                };
                Ok((v2, v1, e1.max(e2)))
            })
            .collect::<Result<_>>()?;
        let (tail_one, tail_sq) = tail_integrals(t, end);
        // sum small to large
        let mut upper = vec![0.0; panels + 1];
        upper[panels] = tail_sq;
        for i in (0..panels).rev() {
            upper[i] = upper[i + 1] + pieces[i].0;
        }
        let half_sq = upper[0];
        let half_one: f64 = pieces.iter().rev().map(|p| p.1).sum::<f64>() + tail_one;
        let quad_error: f64 = pieces.iter().map(|p| p.2).sum();
        let kappa = 0.5 / half_sq;
        for g in &mut upper {
            *g *= kappa;
        }
        let density = (0..=panels).map(|i| kappa * sq(knot(i))).collect();
        Ok(EtaTable {
            kappa,
            c_prime: 2.0 * kappa * half_one,
            end,
            fine_knots,
            upper,
            density,
            quad_error,
            tail_sq: kappa * tail_sq,
        })
    }

    /// `κ = 1/∫φ̂²`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `C′ = κ ∫ φ̂`.
    pub fn c_prime(&self) -> f64 {
        self.c_prime
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn quad_error(&self) -> f64 {
        self.quad_error
    }

    /// Bound on the neglected mass `∫_U^∞ κ φ̂²`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_sq
    }

    /// Knot values of `G̃` and `κ φ̂²`.
    pub fn raw(&self) -> (&[f64], &[f64]) {
        (&self.upper, &self.density)
    }

    pub fn knots(&self) -> usize {
        self.upper.len()
    }

    fn locate(&self, v: f64) -> (usize, f64, f64) {
        let (i, x0, h) = if v < FINE_END {
            let i = (v / FINE_STEP) as usize;
            (i, i as f64 * FINE_STEP, FINE_STEP)
        } else {
            let k = ((v - FINE_END) / COARSE_STEP) as usize;
            (self.fine_knots + k, FINE_END + k as f64 * COARSE_STEP, COARSE_STEP)
        };
        let i = i.min(self.upper.len() - 2);
        (i, x0, h)
    }

    /// `G̃(v) = ∫_v^∞ κ φ̂²` for `v ≥ 0`.
    pub fn upper_tail(&self, v: f64) -> f64 {
        if v >= self.end {
            return 0.0;
        }
        let v = v.max(0.0);
        let (i, x0, h) = self.locate(v);
        let (y0, y1) = (self.upper[i], self.upper[i + 1]);
        // G̃' = −κφ̂²
        let mut m0 = -self.density[i];
        let mut m1 = -self.density[i + 1];
        let delta = (y1 - y0) / h;
        if delta == 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (alpha, beta) = (m0 / delta, m1 / delta);
            let r = alpha * alpha + beta * beta;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m0 = tau * alpha * delta;
                m1 = tau * beta * delta;
            }
        }
        let s = ((v - x0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1).clamp(0.0, 0.5)
    }

    /// `∫_lo^hi κ φ̂²` and its complement `1 − ∫_lo^hi κ φ̂²`.
    pub fn mass(&self, lo: f64, hi: f64) -> (f64, f64) {
        if lo >= 0.0 {
            let inside = self.upper_tail(lo) - self.upper_tail(hi);
            (inside, 1.0 - inside)
        } else if hi <= 0.0 {
            let inside = self.upper_tail(-hi) - self.upper_tail(-lo);
            (inside, 1.0 - inside)
        } else {
            let out = self.upper_tail(-lo) + self.upper_tail(hi);
            (1.0 - out, out)
        }
    }
}

/// Pointwise claims checked at probe points when `η̂` is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaCertificate {
    /// `(1 − C′/W(ε⁻¹))^d`.
    pub lower_bound: f64,
    /// Smallest measured `η̂` on `|x| ≤ (1 − θ)/2` (one coordinate).
    pub measured_inner_min: f64,
    /// Largest measured ratio `η̂(x) W(x/ε) / C′` on `|x| ≥ 1/2`.
    pub measured_tail_ratio: f64,
    pub probes: usize,
}

#[derive(Debug, Clone)]
pub struct EtaProfile {
    table: Arc<EtaTable>,
    phi: Arc<PhiProfile>,
    eps: f64,
    theta: f64,
    dim: usize,
    half: f64,
    scale: f64,
    certificate: EtaCertificate,
}

impl EtaProfile {
    pub fn build(phi: Arc<PhiProfile>, eps: f64, theta: f64, dim: usize) -> Result<Self> {
        let table = Arc::new(EtaTable::build(&phi)?);
        Self::with_table(phi, table, eps, theta, dim)
    }

    /// Reuses a table built for the same `φ`.
    pub fn with_table(
        phi: Arc<PhiProfile>,
        table: Arc<EtaTable>,
        eps: f64,
        theta: f64,
        dim: usize,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 && theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidInputs(format!(
                "need ε, θ in (0,1), got ε = {eps}, θ = {theta}"
            )));
        }
        if dim == 0 || dim > crate::tile::MAX_DIM {
            return Err(Error::InvalidInputs(format!("dimension {dim} out of range")));
        }
        let mut p = EtaProfile {
            table,
            phi,
            eps,
            theta,
            dim,
            half: 0.5 - theta / 6.0,
            scale: eps * theta / 3.0,
            certificate: EtaCertificate {
                lower_bound: 0.0,
                measured_inner_min: 0.0,
                measured_tail_ratio: 0.0,
                probes: 0,
            },
        };
        p.certificate = p.check_certificates(10_000)?;
        Ok(p)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> &PhiProfile {
        &self.phi
    }

    pub fn table(&self) -> &Arc<EtaTable> {
        &self.table
    }

    pub fn c_prime(&self) -> f64 {
        self.table.c_prime
    }

    pub fn certificate(&self) -> EtaCertificate {
        self.certificate
    }

    /// One-dimensional `η̂(x)` and `1 − η̂(x)`.
    pub fn eval_1d_pair(&self, x: f64) -> (f64, f64) {
        let lo = (x - self.half) / self.scale;
        let hi = (x + self.half) / self.scale;
        self.table.mass(lo, hi)
    }

    pub fn eval_1d(&self, x: f64) -> f64 {
        self.eval_1d_pair(x).0
    }

    /// Coordinate product.
    pub fn eval(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|&x| self.eval_1d(x)).product()
    }

    /// `(1 − C′/W(ε⁻¹))^d`, the claimed floor on `|ξ|_∞ ≤ (1 − θ)/2`.
    pub fn lower_bound(&self) -> f64 {
        let w = self.phi.weight();
        (1.0 - self.c_prime() / w.w(1.0 / self.eps)).max(0.0).powi(self.dim as i32)
    }

    /// `C′/W(r/ε)`, the claimed ceiling on `|ξ|_∞ = r ≥ 1/2`.
    pub fn tail_envelope(&self, r: f64) -> f64 {
        (self.c_prime() * (-self.phi.weight().ln_w(r / self.eps)).exp()).min(1.0)
    }

    /// Half-width of the physical support of `η`.
    pub fn support_half_width(&self) -> f64 {
        2.0 * self.phi.support_half_width() / self.scale
    }

    fn check_certificates(&self, probes: usize) -> Result<EtaCertificate> {
        let c_prime = self.c_prime();
        let w = self.phi.weight();
        let one_minus = c_prime / w.w(1.0 / self.eps);
        let inner = 0.5 * (1.0 - self.theta);
        let mut inner_min = f64::INFINITY;
        for i in 0..probes {
            let x = inner * i as f64 / (probes - 1) as f64;
            let (v, comp) = self.eval_1d_pair(x);
            inner_min = inner_min.min(v);
            if comp > one_minus * (1.0 + 1e-9) + 1e-15 {
                return Err(Error::CertificateViolation(format!(
                    "1 − η̂({x}) = {comp:e} exceeds C′/W(1/ε) = {one_minus:e}"
                )));
            }
        }
        // tail probes from 1/2 until the envelope underflows
        let far = (self.table.end * self.scale + self.half).max(1.0);
        let mut ratio: f64 = 0.0;
        for i in 0..probes {
            let x = 0.5 * (2.0 * far).powf(i as f64 / (probes - 1) as f64);
            let v = self.eval_1d(x);
            let env = self.tail_envelope(x);
            if v > env * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::CertificateViolation(format!(
                    "η̂({x}) = {v:e} exceeds C′/W(x/ε) = {env:e}"
                )));
            }
            if env > 0.0 {
                ratio = ratio.max(v / env);
            }
        }
        Ok(EtaCertificate {
            lower_bound: self.lower_bound(),
            measured_inner_min: inner_min,
            measured_tail_ratio: ratio,
            probes: 2 * probes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::weight::WeightSpec;

    fn phi() -> Arc<PhiProfile> {
        Arc::new(PhiProfile::build(&WeightSpec::sqrt_exponential(), 400, 1e3).unwrap())
    }

    #[test]
    fn table_normalised_and_tail_small() {
        let p = phi();
        let t = EtaTable::build(&p).unwrap();
        assert!((t.upper_tail(0.0) - 0.5).abs() < 1e-15);
        assert!(t.quad_error() < QUAD_TOLERANCE);
        assert!(t.tail_mass() <= 1e-16);
        // κ against an independent adaptive quadrature
        let r = quad::integrate(|x| p.eval(x).powi(2), 0.0, t.end(), 1e-13, 100_000).unwrap();
        assert!((0.5 / r.value - t.kappa()).abs() < 1e-10 * t.kappa());
    }

    #[test]
    fn interpolation_matches_direct_quadrature() {
        let p = phi();
        let t = EtaTable::build(&p).unwrap();
        for v in [0.0013, 0.7, 1.9, 3.33, 17.2, 40.01, 100.3] {
            let r = quad::integrate(|x| p.eval(x).powi(2), v, t.end(), 1e-16, 100_000).unwrap();
            let direct = t.kappa() * r.value;
            assert!((t.upper_tail(v) - direct).abs() < 1e-12, "v={v}");
        }
    }

    #[test]
    fn certificates_and_symmetry() {
        let e = EtaProfile::build(phi(), 0.1, 0.5, 2).unwrap();
        let c = e.certificate();
        assert!(c.measured_inner_min.powi(2) >= c.lower_bound);
        assert!(c.measured_tail_ratio <= 1.0);
        for x in [0.0, 0.1, 0.37, 0.5, 0.8] {
            assert_eq!(e.eval_1d(x), e.eval_1d(-x));
            assert!((0.0..=1.0).contains(&e.eval_1d(x)));
        }
        assert_eq!(e.eval(&[0.2, -0.4]), e.eval(&[0.4, 0.2]));
        let at0 = e.eval(&[0.0, 0.0]);
        assert!(at0 <= 1.0 && at0 >= e.lower_bound());
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = phi();
        assert!(EtaProfile::build(p.clone(), 0.0, 0.5, 1).is_err());
        assert!(EtaProfile::build(p, 0.1, 1.0, 1).is_err());
    }
}

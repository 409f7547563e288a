//! Fourier-side windows in normalized tile coordinates and their tile
//! dilates `ψ̂^T(ξ) = ψ̂(D⁻¹(ξ − ξ₀))`.

use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tile::{sup_norm, Tile};
use crate::window::eta::EtaProfile;
use crate::window::weight::WeightSpec;

/// A real, bounded window `ψ̂` on `ℝ^d` in normalized coordinates.
pub trait FourierWindow: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Upper bound on `|ψ̂(x)|` over `|x|_∞ ≥ r`; only used for `r ≥ 1/2`.
    fn tail_envelope(&self, r: f64) -> f64;

    fn sup_abs(&self) -> f64;

    /// `L` with `|ψ̂(x) − ψ̂(y)| ≤ L |x − y|_∞`; infinite if discontinuous.
    fn lipschitz(&self) -> f64;
}

impl FourierWindow for EtaProfile {
    fn dim(&self) -> usize {
        EtaProfile::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        EtaProfile::eval(self, x)
    }

    fn tail_envelope(&self, r: f64) -> f64 {
        EtaProfile::tail_envelope(self, r.max(0.5))
    }

    fn sup_abs(&self) -> f64 {
        1.0
    }

    fn lipschitz(&self) -> f64 {
        // each factor has slope at most κ/s
        let s = self.eps() * self.theta() / 3.0;
        EtaProfile::dim(self) as f64 * self.table().kappa() / s
    }
}

/// `ĝ ≡ value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantWindow {
    pub dim: usize,
    pub value: f64,
}

impl FourierWindow for ConstantWindow {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: &[f64]) -> f64 {
        self.value
    }
    fn tail_envelope(&self, _: f64) -> f64 {
        self.value.abs()
    }
    fn sup_abs(&self) -> f64 {
        self.value.abs()
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
}

/// Indicator of the closed cube `|x|_∞ ≤ half_width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorWindow {
    pub dim: usize,
    pub half_width: f64,
}

impl FourierWindow for IndicatorWindow {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        if sup_norm(x) <= self.half_width {
            1.0
        } else {
            0.0
        }
    }
    fn tail_envelope(&self, r: f64) -> f64 {
        if r <= self.half_width {
            1.0
        } else {
            0.0
        }
    }
    fn sup_abs(&self) -> f64 {
        1.0
    }
    fn lipschitz(&self) -> f64 {
        f64::INFINITY
    }
}

/// `min{1, C′/W(|x|_∞/ε)}`: the decay envelope used as a window.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeWindow {
    pub dim: usize,
    pub c_prime: f64,
    pub eps: f64,
    pub weight: WeightSpec,
}

impl EnvelopeWindow {
    fn profile(&self, r: f64) -> f64 {
        (self.c_prime * (-self.weight.ln_w(r / self.eps)).exp()).min(1.0)
    }
}

impl FourierWindow for EnvelopeWindow {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.profile(sup_norm(x))
    }
    fn tail_envelope(&self, r: f64) -> f64 {
        self.profile(r)
    }
    fn sup_abs(&self) -> f64 {
        self.c_prime.min(1.0)
    }
    fn lipschitz(&self) -> f64 {
        f64::INFINITY
    }
}

/// Pointwise product `ĝ · η̂`.
#[derive(Debug, Clone)]
pub struct ProductWindow {
    pub g: Arc<dyn FourierWindow>,
    pub eta: Arc<dyn FourierWindow>,
}

impl FourierWindow for ProductWindow {
    fn dim(&self) -> usize {
        self.eta.dim()
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.g.eval(x) * self.eta.eval(x)
    }
    fn tail_envelope(&self, r: f64) -> f64 {
        (self.g.sup_abs() * self.eta.tail_envelope(r)).min(self.g.tail_envelope(r) * self.eta.sup_abs())
    }
    fn sup_abs(&self) -> f64 {
        self.g.sup_abs() * self.eta.sup_abs()
    }
    fn lipschitz(&self) -> f64 {
        let (lg, le) = (self.g.lipschitz(), self.eta.lipschitz());
        let a = if lg == 0.0 { 0.0 } else { lg * self.eta.sup_abs() };
        let b = if le == 0.0 { 0.0 } else { le * self.g.sup_abs() };
        a + b
    }
}

/// A window transported to a tile: `ψ̂^T(ξ) = ψ̂(D⁻¹(ξ − ξ₀))`.
#[derive(Debug, Clone)]
pub struct TiledWindow {
    pub window: Arc<dyn FourierWindow>,
    pub tile: Tile,
}

impl TiledWindow {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        let mut x = vec![0.0; xi.len()];
        self.eval_with(xi, &mut x)
    }

    /// Same as [`TiledWindow::eval`] with a caller-provided scratch buffer.
    pub fn eval_with(&self, xi: &[f64], scratch: &mut [f64]) -> f64 {
        self.tile.local_coords_into(xi, scratch);
        self.window.eval(scratch)
    }
}

/// `ψ̂^T = ĝ^T η̂^T`.
pub fn compose_psi(g: Arc<dyn FourierWindow>, eta: Arc<dyn FourierWindow>, tile: &Tile) -> Result<TiledWindow> {
    if g.dim() != eta.dim() || eta.dim() != tile.dim() {
        return Err(Error::DimMismatch {
            expected: tile.dim(),
            got: if g.dim() != tile.dim() { g.dim() } else { eta.dim() },
        });
    }
    Ok(TiledWindow {
        window: Arc::new(ProductWindow { g, eta }),
        tile: tile.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::phi::PhiProfile;

    fn eta(d: usize) -> Arc<EtaProfile> {
        let phi = Arc::new(PhiProfile::build(&WeightSpec::sqrt_exponential(), 200, 1e3).unwrap());
        Arc::new(EtaProfile::build(phi, 0.1, 0.5, d).unwrap())
    }

    #[test]
    fn identity_cases() {
        let e = eta(2);
        let one: Arc<dyn FourierWindow> = Arc::new(ConstantWindow { dim: 2, value: 1.0 });
        let unit = Tile::diagonal(&[1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let psi = compose_psi(one, e.clone(), &unit).unwrap();
        for p in [[0.1, 0.2], [0.45, -0.3], [0.7, 0.0]] {
            assert_eq!(psi.eval(&p), e.eval(&p));
        }

        let g: Arc<dyn FourierWindow> = Arc::new(IndicatorWindow { dim: 2, half_width: 0.4 });
        let big = Tile::diagonal(&[2.0, 2.0], vec![3.0, -1.0]).unwrap();
        let psi = compose_psi(g.clone(), e.clone(), &big).unwrap();
        assert_eq!(psi.eval(&[3.0, -1.0]), g.eval(&[0.0, 0.0]) * e.eval(&[0.0, 0.0]));
        assert_eq!(psi.eval(&[4.0, -1.0]), e.eval(&[0.5, 0.0]) * 0.0);
        assert_eq!(psi.eval(&[3.6, -1.0]), e.eval(&[0.3, 0.0]));
    }

    #[test]
    fn tail_envelope_dominates() {
        let e = eta(1);
        for i in 0..400 {
            let x = 0.5 + i as f64 * 0.01;
            assert!(FourierWindow::eval(&*e, &[x]) <= FourierWindow::tail_envelope(&*e, x));
        }
    }

    #[test]
    fn lipschitz_bound_holds_on_samples() {
        let e = eta(1);
        let l = FourierWindow::lipschitz(&*e);
        let h = 1e-3;
        for i in 0..2000 {
            let x = i as f64 * 5e-4;
            let d = (e.eval(&[x + h]) - e.eval(&[x])).abs();
            assert!(d <= l * h * (1.0 + 1e-9));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let e = eta(1);
        let one: Arc<dyn FourierWindow> = Arc::new(ConstantWindow { dim: 2, value: 1.0 });
        let t = Tile::diagonal(&[1.0], vec![0.0]).unwrap();
        assert!(compose_psi(one, e, &t).is_err());
    }
}

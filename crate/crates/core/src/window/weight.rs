//! Decay budgets `W` for the Ingham construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tiling::growth::GrowthFn;

/// Shape of `ln W` beyond the flat radius `t_*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `ln W(t) = √t − 1 + ln K(t)` for `t ≥ 1` (`t_* = 1`).
    Ingham { growth: GrowthFn },
    /// `ln W(t) = (t/t_*)^exponent − 1` for `t ≥ t_*`.
    Power { exponent: f64 },
}

/// An even weight `W ≥ 1`, nondecreasing on `[0, ∞)`, equal to one on
/// `[0, t_*]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub t_star: f64,
    pub kind: WeightKind,
    /// `1/t_* + ∫₀^∞ ln W(t)/t² dt`; infinite when the integral diverges.
    pub c_w: f64,
}

impl WeightSpec {
    /// `W(t) = e^{√t − 1} K(t)` for `|t| ≥ 1`, `W = 1` on `[−1, 1]`.
    pub fn default_weight(growth: GrowthFn) -> Result<Self> {
        let li = growth.log_integral()?;
        Ok(WeightSpec {
            t_star: 1.0,
            c_w: 1.0 + 1.0 + li.value + li.error_bound,
            kind: WeightKind::Ingham { growth },
        })
    }

    /// `W(t) = max{1, e^{√|t| − 1}}`.
    pub fn sqrt_exponential() -> Self {
        Self::default_weight(GrowthFn::Constant { value: 1.0 }).expect("constant growth is valid")
    }

    /// `ln W(t) = (t/t_*)^p − 1`; `C_W` is finite only for `p < 1`.
    pub fn power(t_star: f64, exponent: f64) -> Result<Self> {
        if !(t_star > 0.0 && t_star.is_finite() && exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidInputs(format!(
                "power weight needs t_* > 0 and exponent > 0, got {t_star}, {exponent}"
            )));
        }
        // ∫_{t_*}^∞ ((t/t_*)^p − 1)/t² dt = (1/t_*)(1/(1−p) − 1)
        let c_w = if exponent < 1.0 {
            1.0 / t_star + (1.0 / (1.0 - exponent) - 1.0) / t_star
        } else {
            f64::INFINITY
        };
        Ok(WeightSpec {
            t_star,
            kind: WeightKind::Power { exponent },
            c_w,
        })
    }

    pub fn ln_w(&self, t: f64) -> f64 {
        let t = t.abs();
        if t < self.t_star {
            return 0.0;
        }
        match &self.kind {
            WeightKind::Ingham { growth } => t.sqrt() - 1.0 + growth.ln_eval(t),
            WeightKind::Power { exponent } => (t / self.t_star).powf(*exponent) - 1.0,
        }
    }

    pub fn w(&self, t: f64) -> f64 {
        self.ln_w(t).exp()
    }

    /// `t^{-N} W(t)` must blow up; checked at a few probe points for `N ≤ 20`.
    pub fn check_superpolynomial(&self) -> bool {
        let probes = [1e6_f64, 1e8, 1e10];
        (1..=20).all(|n| {
            let vals: Vec<f64> = probes
                .iter()
                .map(|&t| self.ln_w(t) - n as f64 * t.ln())
                .collect();
            vals.windows(2).all(|w| w[1] > w[0])
        })
    }

    /// `t_j = inf{t ≥ t_* : ln W(t) ≥ j}` for `j = 0..=j_max`.
    pub fn t_sequence(&self, j_max: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(j_max + 1);
        self.extend_t_sequence(&mut out, j_max + 1)?;
        Ok(out)
    }

    /// Grows `seq` (a prefix of the t-sequence) to length `len`.
    ///
    /// Each entry is the lower end of the final bisection bracket, so
    /// `ln W(t) < j` for every `t < t_j` holds exactly.
    pub fn extend_t_sequence(&self, seq: &mut Vec<f64>, len: usize) -> Result<()> {
        if seq.is_empty() && len > 0 {
            seq.push(self.t_star);
        }
        while seq.len() < len {
            let j = seq.len() as f64;
            let prev = *seq.last().expect("nonempty");
            if self.ln_w(prev) >= j {
                seq.push(prev);
                continue;
            }
            let mut lo = prev;
            let mut hi = 2.0 * prev + 1.0;
            while self.ln_w(hi) < j {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() || hi > 1e300 {
                    return Err(Error::WeightNotUnbounded { level: j });
                }
            }
            // invariant: ln W(lo) < j ≤ ln W(hi)
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
                    break;
                }
                if self.ln_w(mid) >= j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            seq.push(lo);
        }
        Ok(())
    }
}

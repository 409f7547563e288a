//! Growth functions `K : [1, ∞) → [1, ∞)` bounding the diversity of tile
//! shapes, together with the integrability gate `∫₁^∞ ln K(t)/t² dt < ∞`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthFn {
    /// `K(t) = value`.
    Constant { value: f64 },
    /// `K(t) = scale · t^exponent`.
    Power { scale: f64, exponent: f64 },
    /// `K(t) = scale · exp((rate · (t − 1))^exponent)`; integrable iff `exponent < 1`.
    SubExponential { scale: f64, rate: f64, exponent: f64 },
    /// `K(t) = base + slope · ln t`.
    Logarithmic { base: f64, slope: f64 },
}

impl Default for GrowthFn {
    fn default() -> Self {
        GrowthFn::Constant { value: 1.0 }
    }
}

/// `∫₁^∞ ln K(t)/t² dt` with an error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogIntegral {
    pub value: f64,
    pub error_bound: f64,
}

impl GrowthFn {
    /// The `K` used for the unit-box tilings of adjacent comparable boxes:
    /// `C · exp(((1 + 2c)/(2c) · (t − 1))^{1/(1+δ)})`.
    pub fn comparable_boxes(scale: f64, c: f64, delta: f64) -> Self {
        GrowthFn::SubExponential {
            scale,
            rate: (1.0 + 2.0 * c) / (2.0 * c),
            exponent: 1.0 / (1.0 + delta),
        }
    }

    pub fn ln_eval(&self, t: f64) -> f64 {
        let t = t.max(1.0);
        match *self {
            GrowthFn::Constant { value } => value.ln(),
            GrowthFn::Power { scale, exponent } => scale.ln() + exponent * t.ln(),
            GrowthFn::SubExponential {
                scale,
                rate,
                exponent,
            } => scale.ln() + (rate * (t - 1.0)).powf(exponent),
            GrowthFn::Logarithmic { base, slope } => (base + slope * t.ln()).ln(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.ln_eval(t).exp()
    }

    /// Parameter checks: `K(1) ≥ 1`, nondecreasing, integrable logarithm.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("growth function {self:?}: {m}")));
        let finite = match *self {
            GrowthFn::Constant { value } => value.is_finite(),
            GrowthFn::Power { scale, exponent } => scale.is_finite() && exponent.is_finite(),
            GrowthFn::SubExponential {
                scale,
                rate,
                exponent,
            } => scale.is_finite() && rate.is_finite() && exponent.is_finite(),
            GrowthFn::Logarithmic { base, slope } => base.is_finite() && slope.is_finite(),
        };
        if !finite {
            return bad("non-finite parameter");
        }
        match *self {
            GrowthFn::Constant { value } if value < 1.0 => bad("K(1) < 1"),
            GrowthFn::Power { scale, exponent } if scale < 1.0 || exponent < 0.0 => {
                bad("need scale >= 1 and exponent >= 0")
            }
            GrowthFn::SubExponential {
                scale,
                rate,
                exponent,
            } => {
                if scale < 1.0 || rate < 0.0 || exponent < 0.0 {
                    bad("need scale >= 1, rate >= 0, exponent >= 0")
                } else if exponent >= 1.0 && rate > 0.0 {
                    Err(Error::KIntegralDiverges(format!(
                        "ln K grows like t^{exponent}; the integral of ln K(t)/t^2 diverges"
                    )))
                } else {
                    Ok(())
                }
            }
            GrowthFn::Logarithmic { base, slope } if base < 1.0 || slope < 0.0 => {
                bad("need base >= 1 and slope >= 0")
            }
            _ => Ok(()),
        }
    }

    /// `∫₁^∞ ln K(t)/t² dt`, closed form where available.
    pub fn log_integral(&self) -> Result<LogIntegral> {
        self.validate()?;
        match *self {
            GrowthFn::Constant { value } => Ok(LogIntegral {
                value: value.ln(),
                error_bound: 0.0,
            }),
            GrowthFn::Power { scale, exponent } => Ok(LogIntegral {
                value: scale.ln() + exponent,
                error_bound: 0.0,
            }),
            GrowthFn::SubExponential {
                scale,
                rate,
                exponent,
            } => {
                // ∫₀^∞ u^p/(1+u)² du = B(p+1, 1−p) = pπ / sin(pπ)
                let beta = if exponent == 0.0 {
                    1.0
                } else {
                    exponent * PI / (exponent * PI).sin()
                };
                let extra = if rate == 0.0 {
                    if exponent == 0.0 { 1.0 } else { 0.0 }
                } else {
                    rate.powf(exponent) * beta
                };
                Ok(LogIntegral {
                    value: scale.ln() + extra,
                    error_bound: 1e-15 * (1.0 + extra),
                })
            }
            GrowthFn::Logarithmic { .. } => {
                // t = e^u turns the integral into ∫₀^∞ ln K(e^u) e^{−u} du.
                let upper = 80.0;
                let r = quad::integrate(
                    |u: f64| self.ln_eval(u.exp()) * (-u).exp(),
                    0.0,
                    upper,
                    1e-14,
                    2000,
                )?;
                // ln K(e^u) ≤ ln(base + slope) + u for u ≥ 0
                let (base, slope) = match *self {
                    GrowthFn::Logarithmic { base, slope } => (base, slope),
                    _ => unreachable!(),
                };
                let a = (base + slope).ln();
                let tail = (a + upper + 1.0) * (-upper).exp();
                Ok(LogIntegral {
                    value: r.value,
                    error_bound: r.error + tail,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integral() {
        let k = GrowthFn::Constant { value: 1.0 };
        assert_eq!(k.log_integral().unwrap().value, 0.0);
        let k = GrowthFn::Constant { value: 5.0 };
        assert!((k.log_integral().unwrap().value - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn subexponential_closed_form_matches_quadrature() {
        let k = GrowthFn::SubExponential {
            scale: 2.0,
            rate: 1.5,
            exponent: 0.5,
        };
        let closed = k.log_integral().unwrap().value;
        // u = t − 1, then u = v²: 2∫₀^∞ v (rate v²)^p /(1+v²)² dv
        let r = quad::integrate(
            |v: f64| 2.0 * v * (1.5 * v * v).sqrt() / (1.0 + v * v).powi(2),
            0.0,
            1e4,
            1e-12,
            10_000,
        )
        .unwrap();
        let tail = 2.0 * 1.5f64.sqrt() / 1e4;
        assert!((closed - 2f64.ln() - r.value).abs() < tail + 1e-9);
    }

    #[test]
    fn divergent_growth_rejected() {
        let k = GrowthFn::SubExponential {
            scale: 1.0,
            rate: 1.0,
            exponent: 1.0,
        };
        assert!(matches!(k.log_integral(), Err(Error::KIntegralDiverges(_))));
        assert!(GrowthFn::Constant { value: 0.5 }.validate().is_err());
    }

    #[test]
    fn logarithmic_integral() {
        // ∫₁^∞ ln(1 + ln t)/t² dt = ∫₀^∞ ln(1+u) e^{−u} du = e·E₁(1) ≈ 0.596347362
        let k = GrowthFn::Logarithmic { base: 1.0, slope: 1.0 };
        let li = k.log_integral().unwrap();
        assert!((li.value - 0.596_347_362_323_194).abs() < 1e-11, "{li:?}");
    }

    #[test]
    fn monotone_and_at_least_one() {
        for k in [
            GrowthFn::Power { scale: 1.0, exponent: 2.0 },
            GrowthFn::comparable_boxes(1.0, 0.25, 0.1),
            GrowthFn::Logarithmic { base: 2.0, slope: 3.0 },
        ] {
            let mut prev = 0.0;
            for i in 0..200 {
                let v = k.eval(1.0 + i as f64 * 0.5);
                assert!(v >= 1.0 && v >= prev);
                prev = v;
            }
        }
    }
}

//! One-call construction of `(φ, η)` from a configuration, plus export as
//! JSON metadata, a binary table and a plotting CSV.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tiling::growth::GrowthFn;
use crate::window::eta::{EtaCertificate, EtaProfile, EtaTable};
use crate::window::phi::{PhiProfile, TruncationCertificate};
use crate::window::weight::WeightSpec;

fn default_tolerance() -> f64 {
    1e-10
}
fn default_window() -> f64 {
    1e3
}
fn default_m_max() -> usize {
    200_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub dim: usize,
    pub eps: f64,
    pub theta: f64,
    #[serde(default)]
    pub growth: GrowthFn,
    /// Fixed truncation level; adaptive when absent.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub truncation_tolerance: f64,
    /// Frequency window `[0, Ξ]` on which truncation is certified.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
}

impl WindowConfig {
    pub fn new(dim: usize, eps: f64, theta: f64) -> Self {
        WindowConfig {
            dim,
            eps,
            theta,
            growth: GrowthFn::default(),
            m: None,
            truncation_tolerance: default_tolerance(),
            window: default_window(),
            m_max: default_m_max(),
        }
    }

    pub fn weight(&self) -> Result<WeightSpec> {
        WeightSpec::default_weight(self.growth.clone())
    }

    pub fn build_phi(&self) -> Result<PhiProfile> {
        let w = self.weight()?;
        match self.m {
            Some(m) => PhiProfile::build_checked(&w, m, self.window, self.truncation_tolerance),
            None => PhiProfile::build_adaptive(&w, self.truncation_tolerance, self.window, self.m_max),
        }
    }

    pub fn build(&self) -> Result<WindowBundle> {
        let phi = Arc::new(self.build_phi()?);
        let table = Arc::new(EtaTable::build(&phi)?);
        let eta = Arc::new(EtaProfile::with_table(phi.clone(), table, self.eps, self.theta, self.dim)?);
        Ok(WindowBundle { phi, eta })
    }
}

#[derive(Debug, Clone)]
pub struct WindowBundle {
    pub phi: Arc<PhiProfile>,
    pub eta: Arc<EtaProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetadata {
    pub dim: usize,
    pub eps: f64,
    pub theta: f64,
    pub weight: WeightSpec,
    pub m: usize,
    pub t_prefix: Vec<f64>,
    pub kappa: f64,
    pub c_prime: f64,
    pub phi_support_half_width: f64,
    pub phi_declared_support: f64,
    pub eta_support_half_width: f64,
    pub truncation: Option<TruncationCertificate>,
    pub eta_certificate: EtaCertificate,
    pub table_end: f64,
    pub table_knots: usize,
    pub quad_error: f64,
    pub table_tail_mass: f64,
}

const T_PREFIX_LEN: usize = 32;

impl WindowBundle {
    pub fn metadata(&self) -> WindowMetadata {
        let t = self.phi.t_prefix();
        let table = self.eta.table();
        WindowMetadata {
            dim: self.eta.dim(),
            eps: self.eta.eps(),
            theta: self.eta.theta(),
            weight: self.phi.weight().clone(),
            m: self.phi.m(),
            t_prefix: t[..t.len().min(T_PREFIX_LEN)].to_vec(),
            kappa: table.kappa(),
            c_prime: table.c_prime(),
            phi_support_half_width: self.phi.support_half_width(),
            phi_declared_support: self.phi.declared_support(),
            eta_support_half_width: self.eta.support_half_width(),
            truncation: self.phi.certificate(),
            eta_certificate: self.eta.certificate(),
            table_end: table.end(),
            table_knots: table.knots(),
            quad_error: table.quad_error(),
            table_tail_mass: table.tail_mass(),
        }
    }

    /// `(ξ, φ̂(ξ), η̂(ξ))` on `n` points of `[0, xi_max]`.
    pub fn profile_rows(&self, xi_max: f64, n: usize) -> Vec<[f64; 3]> {
        (0..n)
            .map(|i| {
                let xi = xi_max * i as f64 / (n.max(2) - 1) as f64;
                [xi, self.phi.eval(xi), self.eta.eval_1d(xi)]
            })
            .collect()
    }

    /// Writes `window.json`, `eta_table.bin` and `window.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = serde_json::to_string_pretty(&self.metadata())?;
        fs::write(dir.join("window.json"), meta + "\n")?;

        let table = self.eta.table();
        let mut bin = Vec::with_capacity(16 * table.knots() + 16);
        bin.extend_from_slice(&(table.knots() as u64).to_le_bytes());
        bin.extend_from_slice(&table.end().to_le_bytes());
        let (upper, density) = table.raw();
        for v in upper.iter().chain(density) {
            bin.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(dir.join("eta_table.bin"), bin)?;

        let mut csv = fs::File::create(dir.join("window.csv"))?;
        writeln!(csv, "xi,phi_hat,eta_hat")?;
        for [x, p, e] in self.profile_rows(2.0, 2001) {
            writeln!(csv, "{x:.6},{p:.17e},{e:.17e}")?;
        }
        Ok(())
    }
}

/// Reads the knot count and table end back from `eta_table.bin`.
pub fn read_table_header(path: &Path) -> Result<(usize, f64)> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::Io(format!("{} too short", path.display())));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let end = f64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    if bytes.len() != 16 + 16 * n {
        return Err(Error::Io(format!("{}: expected {} knots", path.display(), n)));
    }
    Ok((n, end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_build() {
        let mut cfg = WindowConfig::new(1, 0.1, 0.5);
        cfg.m = Some(300);
        cfg.truncation_tolerance = 1e-3;
        let json = serde_json::to_string(&cfg).unwrap();
        let back: WindowConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        let b = cfg.build().unwrap();
        let m = b.metadata();
        assert_eq!(m.m, 300);
        assert!((m.t_prefix[2] - 9.0).abs() < 1e-12);
        assert!(m.phi_support_half_width <= m.phi_declared_support);

        let dir = std::env::temp_dir().join(format!("wpframe-window-{}", std::process::id()));
        b.write(&dir).unwrap();
        let (n, end) = read_table_header(&dir.join("eta_table.bin")).unwrap();
        assert_eq!(n, m.table_knots);
        assert_eq!(end, m.table_end);
        let csv = std::fs::read_to_string(dir.join("window.csv")).unwrap();
        assert!(csv.starts_with("xi,phi_hat,eta_hat\n"));
        assert_eq!(csv.lines().count(), 2002);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn unreachable_tolerance_reported() {
        let mut cfg = WindowConfig::new(1, 0.1, 0.5);
        cfg.m = Some(5);
        assert!(matches!(cfg.build(), Err(Error::TruncationBudgetExceeded { .. })));
    }
}

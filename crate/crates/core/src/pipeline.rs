//! Configuration-driven run of window → tiling → certificate → transform,
//! with report export and plot data.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame_cert::{
    certify_family, empirical_rayleigh, random_band_limited, tail_constant, FrameCertificate, FrequencyGrid,
    OmittedTiles, OMITTED_FRACTION,
};
use crate::tiling::{generate, validate_admissibility, FrequencyBox, TileEntry, TilingSpec, ValidationReport};
use crate::transform::{bin_frequencies, roundtrip, TransformPlan};
use crate::window::{
    compose_psi, ConstantWindow, EtaProfile, EtaTable, FourierWindow, TiledWindow, WindowBundle, WindowConfig,
    WindowMetadata,
};

/// Relative slack on the certified interval for Rayleigh quotients.
pub const RAYLEIGH_TOLERANCE: f64 = 1e-6;
/// Largest accepted round-trip relative error.
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-6;
/// Omitted mass in `S` may use at most this fraction of the expected `A`.
pub const TRUNCATION_FRACTION: f64 = 1e-3;
const T_CAP_MAX: f64 = 4096.0;
const AUTO_EPS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auto {
    Auto,
}

/// `ε` for the multiplier window: a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsChoice {
    Value(f64),
    Auto(Auto),
}

fn default_tolerance() -> f64 {
    1e-10
}
fn default_window() -> f64 {
    1e3
}
fn default_m_max() -> usize {
    200_000
}
fn default_samples() -> usize {
    20_000
}
fn default_signals() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSettings {
    pub eps: EpsChoice,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub truncation_tolerance: f64,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub period: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSettings {
    /// Defaults to the certified region.
    #[serde(default)]
    pub region: Option<FrequencyBox>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            region: None,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub tiling: TilingSpec,
    pub window: WindowSettings,
    pub grid: GridSettings,
    /// Certified region; defaults to the whole sampled band.
    #[serde(default)]
    pub region: Option<FrequencyBox>,
    #[serde(default)]
    pub validation: ValidationSettings,
    #[serde(default = "default_signals")]
    pub test_signals: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn dim(&self) -> usize {
        self.tiling.dim()
    }

    /// Closed box of the sampled frequencies `m/L`, `|m| < N/2`.
    pub fn band(&self) -> Result<FrequencyBox> {
        let top = (self.grid.n / 2 - 1) as f64 / self.grid.period;
        FrequencyBox::cube(self.dim(), -top, top)
    }

    pub fn certified_region(&self) -> Result<FrequencyBox> {
        match &self.region {
            Some(r) => Ok(r.clone()),
            None => self.band(),
        }
    }

    /// Every range and cross-field check, before any compute.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.tiling.theta <= 0.0 {
            return bad(format!(
                "θ = {} leaves no room between neighbouring tiles; compactly supported frames need θ > 0",
                self.tiling.theta
            ));
        }
        self.tiling.growth.validate()?;
        self.tiling.check()?;
        let d = self.dim();
        if self.grid.n < 4 || !self.grid.n.is_power_of_two() {
            return bad(format!("grid.n = {} must be a power of two ≥ 4", self.grid.n));
        }
        if !(self.grid.period > 0.0 && self.grid.period.is_finite()) {
            return bad(format!("grid.period = {} must be positive", self.grid.period));
        }
        if let EpsChoice::Value(e) = self.window.eps {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("window.eps = {e} must lie in (0, 1)"));
            }
        }
        if !(self.window.truncation_tolerance > 0.0) || !(self.window.window > 0.0) {
            return bad("window tolerances must be positive".into());
        }
        let band = self.band()?;
        let region = self.certified_region()?;
        if region.dim() != d {
            return bad(format!("region has dimension {}, tiling has {d}", region.dim()));
        }
        if region.lo.iter().zip(&band.lo).any(|(r, b)| r < b) || region.hi.iter().zip(&band.hi).any(|(r, b)| r > b) {
            return bad(format!("region {region:?} leaves the sampled band {band:?}"));
        }
        if let Some(v) = &self.validation.region {
            if v.dim() != d {
                return bad(format!("validation region has dimension {}, tiling has {d}", v.dim()));
            }
        }
        if self.validation.samples == 0 {
            return bad("validation.samples must be positive".into());
        }
        if self.test_signals == 0 {
            return bad("test_signals must be positive".into());
        }
        if let Some(dir) = &self.output {
            if dir.as_os_str().is_empty() {
                return bad("output path is empty".into());
            }
        }
        Ok(())
    }

    fn window_config(&self, eps: f64) -> WindowConfig {
        WindowConfig {
            dim: self.dim(),
            eps,
            theta: self.tiling.theta,
            growth: Default::default(),
            m: self.window.m,
            truncation_tolerance: self.window.truncation_tolerance,
            window: self.window.window,
            m_max: self.window.m_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayleighSummary {
    pub signals: usize,
    pub min: f64,
    pub max: f64,
    pub tolerance: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripSummary {
    pub signals: usize,
    pub max_relative_error: f64,
    pub max_iterations: usize,
    pub residual_histories: Vec<Vec<f64>>,
}

/// Grid samples of `S` over the certified region; one row per point,
/// frequency coordinates first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSamples {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub passed: bool,
    pub stages: Vec<StageStatus>,
    pub generator: String,
    pub dim: usize,
    pub eps: f64,
    pub t_cap: f64,
    pub tiles: usize,
    pub window: WindowMetadata,
    pub validation: ValidationReport,
    pub certificate: FrameCertificate,
    pub rayleigh: RayleighSummary,
    pub roundtrip: RoundTripSummary,
    pub spectral_sum: SpectralSamples,
    /// `(ξ, φ̂(ξ), η̂(ξ))` rows.
    pub eta_profile: Vec<[f64; 3]>,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name.into(),
        source: Box::new(e),
    })
}

/// Smallest power-of-two `t_cap ≥ 2` whose omitted-tile bounds fit inside
/// the budgets for an expected lower bound `a_est`.
pub fn choose_t_cap(spec: &TilingSpec, window: Arc<dyn FourierWindow>, a_est: f64) -> Result<f64> {
    let d = spec.dim();
    let mut t = 2.0;
    loop {
        let o = OmittedTiles {
            t_cap: t,
            multiplicity: spec.multiplicity,
            growth: spec.growth.clone(),
            window: window.clone(),
        };
        let (s, g) = o.bounds(d);
        if s <= TRUNCATION_FRACTION * a_est && g <= OMITTED_FRACTION * tail_constant(d) * a_est {
            return Ok(t);
        }
        if t >= T_CAP_MAX {
            return Err(Error::IncompleteEnumeration {
                bound: s,
                allowed: TRUNCATION_FRACTION * a_est,
            });
        }
        t *= 2.0;
    }
}

/// Certified tile family with the window it was built from.
#[derive(Debug, Clone)]
pub struct Frame {
    pub eps: f64,
    pub eta: Arc<EtaProfile>,
    pub t_cap: f64,
    pub entries: Vec<TileEntry>,
    pub windows: Vec<TiledWindow>,
    pub cert: FrameCertificate,
}

impl Frame {
    pub fn plan(&self, cfg: &PipelineConfig) -> Result<TransformPlan> {
        stage(
            "transform",
            TransformPlan::new(cfg.dim(), cfg.grid.n, cfg.grid.period, &self.windows),
        )
    }
}

fn attempt(cfg: &PipelineConfig, bundle: &WindowBundle, table: &Arc<EtaTable>, eps: f64) -> Result<Frame> {
    let d = cfg.dim();
    let eta = Arc::new(stage(
        "window",
        EtaProfile::with_table(bundle.phi.clone(), table.clone(), eps, cfg.tiling.theta, d),
    )?);
    let eta_dyn: Arc<dyn FourierWindow> = eta.clone();
    let a_est = eta.lower_bound().powi(2);
    let region = cfg.certified_region()?;
    let t_cap = stage("tiling", choose_t_cap(&cfg.tiling, eta_dyn.clone(), a_est))?;
    let entries = stage("tiling", generate(&cfg.tiling, &region, t_cap))?;
    let one: Arc<dyn FourierWindow> = Arc::new(ConstantWindow { dim: d, value: 1.0 });
    let windows = stage(
        "tiling",
        entries
            .iter()
            .map(|e| compose_psi(one.clone(), eta_dyn.clone(), &e.tile))
            .collect::<Result<Vec<_>>>(),
    )?;
    let omitted = OmittedTiles {
        t_cap,
        multiplicity: cfg.tiling.multiplicity,
        growth: cfg.tiling.growth.clone(),
        window: eta_dyn,
    };
    let grid = FrequencyGrid::Exact {
        period: cfg.grid.period,
        n: cfg.grid.n,
    };
    let cert = stage("certify", certify_family(&windows, &region, &grid, Some(&omitted)))?;
    Ok(Frame {
        eps,
        eta,
        t_cap,
        entries,
        windows,
        cert,
    })
}

fn select_eps(cfg: &PipelineConfig, bundle: &WindowBundle, table: &Arc<EtaTable>) -> Result<Frame> {
    match cfg.window.eps {
        EpsChoice::Value(e) => attempt(cfg, bundle, table, e),
        EpsChoice::Auto(_) => {
            let mut best: Option<Frame> = None;
            let mut last_err = None;
            for &e in &AUTO_EPS {
                match attempt(cfg, bundle, table, e) {
                    Ok(a) if !a.cert.degenerate => {
                        let ratio = a.cert.a_cert / a.cert.b_cert;
                        if best.as_ref().map_or(true, |b| ratio > b.cert.a_cert / b.cert.b_cert) {
                            best = Some(a);
                        }
                    }
                    Ok(a) => {
                        if best.is_none() {
                            last_err = Some(Error::DegenerateCertificate { a_cert: a.cert.a_cert });
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            best.ok_or_else(|| last_err.unwrap_or(Error::InvalidConfig("no ε candidate".into())))
        }
    }
}

fn first_eps(cfg: &PipelineConfig) -> f64 {
    match cfg.window.eps {
        EpsChoice::Value(e) => e,
        EpsChoice::Auto(_) => AUTO_EPS[0],
    }
}

/// Window, tiles and certificate for `cfg`, without the admissibility
/// scan or the transform checks. A fixed `ε` is used as given; `"auto"`
/// keeps the candidate with the best `A_cert/B_cert`.
pub fn build_frame(cfg: &PipelineConfig) -> Result<(WindowBundle, Frame)> {
    stage("config", cfg.validate())?;
    let bundle = stage("window", cfg.window_config(first_eps(cfg)).build())?;
    let table = bundle.eta.table().clone();
    let frame = select_eps(cfg, &bundle, &table)?;
    let bundle = WindowBundle {
        phi: bundle.phi.clone(),
        eta: frame.eta.clone(),
    };
    Ok((bundle, frame))
}

/// Runs every stage, writing artifacts into `out` as they become available.
/// `Ok` carries the report whether or not every tolerance was met.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<PipelineReport> {
    stage("config", cfg.validate())?;
    fs::create_dir_all(out)?;
    let d = cfg.dim();
    let region = cfg.certified_region()?;
    let mut stages = Vec::new();

    // window
    let bundle = stage("window", cfg.window_config(first_eps(cfg)).build())?;
    let table = bundle.eta.table().clone();
    stages.push(StageStatus {
        stage: "window".into(),
        passed: true,
        detail: format!("M = {}, C' = {:.6}", bundle.phi.m(), table.c_prime()),
    });

    // tiling
    let vregion = cfg.validation.region.clone().unwrap_or_else(|| region.clone());
    let validation = stage(
        "tiling",
        validate_admissibility(&cfg.tiling, &vregion, cfg.validation.samples),
    )?;
    fs::write(out.join("validation.json"), serde_json::to_string_pretty(&validation)? + "\n")?;
    stages.push(StageStatus {
        stage: "tiling".into(),
        passed: true,
        detail: format!(
            "{} tiles, multiplicity {} ≤ {}, max distance {:.4}",
            validation.tiles, validation.max_multiplicity, cfg.tiling.multiplicity, validation.max_distance
        ),
    });

    let chosen = select_eps(cfg, &bundle, &table)?;
    let bundle = WindowBundle {
        phi: bundle.phi.clone(),
        eta: chosen.eta.clone(),
    };
    stage("window", bundle.write(&out.join("window")))?;
    fs::write(out.join("certificate.json"), serde_json::to_string_pretty(&chosen.cert)? + "\n")?;
    fs::write(out.join("tiles.json"), serde_json::to_string_pretty(&chosen.entries)? + "\n")?;
    stages.push(StageStatus {
        stage: "certify".into(),
        passed: !chosen.cert.degenerate,
        detail: format!(
            "ε = {}, A = {:.6}, B = {:.6}, Γ = {:.3e}, [A_cert, B_cert] = [{:.6}, {:.6}]",
            chosen.eps, chosen.cert.a, chosen.cert.b, chosen.cert.gamma, chosen.cert.a_cert, chosen.cert.b_cert
        ),
    });

    // transform
    let plan = chosen.plan(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let signals = (0..cfg.test_signals)
        .map(|_| random_band_limited(&mut rng, d, cfg.grid.n, cfg.grid.period, &region))
        .collect::<Result<Vec<_>>>()?;
    let rep = stage("transform", empirical_rayleigh(&plan, &signals, Some(&region)))?;
    let inside = rep.min >= chosen.cert.a_cert * (1.0 - RAYLEIGH_TOLERANCE)
        && rep.max <= chosen.cert.b_cert * (1.0 + RAYLEIGH_TOLERANCE);
    let rayleigh = RayleighSummary {
        signals: rep.quotients.len(),
        min: rep.min,
        max: rep.max,
        tolerance: RAYLEIGH_TOLERANCE,
        inside,
    };
    let mut rt = RoundTripSummary {
        signals: 0,
        max_relative_error: 0.0,
        max_iterations: 0,
        residual_histories: Vec::new(),
    };
    let mut rt_error = None;
    if !chosen.cert.degenerate {
        for f in &signals {
            match roundtrip(f, &plan, &chosen.cert) {
                Ok((_, m)) => {
                    rt.signals += 1;
                    rt.max_relative_error = rt.max_relative_error.max(m.relative_error);
                    rt.max_iterations = rt.max_iterations.max(m.iterations);
                    rt.residual_histories.push(m.residual_history);
                }
                Err(e) => {
                    rt_error = Some(e.to_string());
                    break;
                }
            }
        }
    }
    let rt_ok = rt_error.is_none() && rt.signals == signals.len() && rt.max_relative_error <= ROUNDTRIP_TOLERANCE;
    stages.push(StageStatus {
        stage: "transform".into(),
        passed: inside && rt_ok,
        detail: match rt_error {
            Some(e) => format!("round trip failed: {e}"),
            None => format!(
                "Rayleigh quotients in [{:.6}, {:.6}], round-trip error {:.3e} after ≤ {} iterations",
                rep.min, rep.max, rt.max_relative_error, rt.max_iterations
            ),
        },
    });

    // spectral samples on the certified region
    let sum = plan.spectral_sum();
    let freqs = bin_frequencies(d, cfg.grid.n, cfg.grid.period);
    let rows: Vec<Vec<f64>> = sum
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| {
            let x = &freqs[i * d..(i + 1) * d];
            let inside = x
                .iter()
                .zip(region.lo.iter().zip(&region.hi))
                .all(|(v, (lo, hi))| v >= lo && v <= hi);
            inside.then(|| x.iter().cloned().chain(std::iter::once(s)).collect())
        })
        .collect();
    let mut rows = rows;
    rows.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    let mut columns: Vec<String> = (0..d).map(|a| format!("xi_{a}")).collect();
    columns.push("S".into());
    if d == 1 {
        columns[0] = "xi".into();
    }

    let report = PipelineReport {
        passed: stages.iter().all(|s| s.passed),
        stages,
        generator: cfg.tiling.generator.name().into(),
        dim: d,
        eps: chosen.eps,
        t_cap: chosen.t_cap,
        tiles: chosen.entries.len(),
        window: bundle.metadata(),
        validation,
        certificate: chosen.cert,
        rayleigh,
        roundtrip: rt,
        spectral_sum: SpectralSamples { columns, rows },
        eta_profile: bundle.profile_rows(2.0, 401),
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

/// Writes `spectral_sum.csv`, `eta_profile.csv` and `residuals.csv` from the
/// `report.json` in `bundle` into `out`.
pub fn emit_plot_data(bundle: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let path = bundle.join("report.json");
    if !path.is_file() {
        return Err(Error::MissingReport(format!("{} not found", path.display())));
    }
    let report: PipelineReport = serde_json::from_str(&fs::read_to_string(&path)?)?;
    fs::create_dir_all(out)?;
    let mut written = Vec::new();

    let mut csv = report.spectral_sum.columns.join(",") + "\n";
    for row in &report.spectral_sum.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        csv += &(cells.join(",") + "\n");
    }
    let p = out.join("spectral_sum.csv");
    fs::write(&p, csv)?;
    written.push(p);

    let mut csv = String::from("xi,phi_hat,eta_hat\n");
    for [x, p, e] in &report.eta_profile {
        csv += &format!("{x:.17e},{p:.17e},{e:.17e}\n");
    }
    let p = out.join("eta_profile.csv");
    fs::write(&p, csv)?;
    written.push(p);

    let mut csv = String::from("signal,iteration,relative_residual\n");
    for (s, h) in report.roundtrip.residual_histories.iter().enumerate() {
        for (i, r) in h.iter().enumerate() {
            csv += &format!("{s},{i},{r:.17e}\n");
        }
    }
    let p = out.join("residuals.csv");
    fs::write(&p, csv)?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::GrowthFn;

    fn dyadic() -> PipelineConfig {
        PipelineConfig {
            tiling: TilingSpec::dyadic_wavelet(-2, 2, 0.25, true),
            window: WindowSettings {
                eps: EpsChoice::Value(0.1),
                m: None,
                truncation_tolerance: 1e-10,
                window: 1e3,
                m_max: 200_000,
            },
            grid: GridSettings { period: 16.0, n: 256 },
            region: None,
            validation: ValidationSettings::default(),
            test_signals: 10,
            seed: 1,
            output: None,
        }
    }

    #[test]
    fn eps_parses_as_number_or_auto() {
        let a: EpsChoice = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(a, EpsChoice::Auto(Auto::Auto));
        let v: EpsChoice = serde_json::from_str("0.1").unwrap();
        assert_eq!(v, EpsChoice::Value(0.1));
        assert!(serde_json::from_str::<EpsChoice>("\"sometimes\"").is_err());
    }

    #[test]
    fn zero_theta_rejected_before_compute() {
        let mut cfg = dyadic();
        cfg.tiling.theta = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let dir = std::env::temp_dir().join(format!("wpframe-theta0-{}", std::process::id()));
        let err = run_pipeline(&cfg, &dir).unwrap_err();
        assert!(matches!(err, Error::Stage { ref stage, .. } if stage == "config"));
        assert!(!dir.exists());
    }

    #[test]
    fn divergent_growth_rejected() {
        let mut cfg = dyadic();
        cfg.tiling.growth = GrowthFn::SubExponential {
            scale: 1.0,
            rate: 1.0,
            exponent: 1.0,
        };
        assert!(matches!(cfg.validate(), Err(Error::KIntegralDiverges(_))));
    }

    #[test]
    fn region_outside_band_rejected() {
        let mut cfg = dyadic();
        cfg.region = Some(FrequencyBox::new(vec![-9.0], vec![1.0]).unwrap());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_report() {
        let dir = std::env::temp_dir().join(format!("wpframe-empty-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        assert!(matches!(emit_plot_data(&dir, &dir), Err(Error::MissingReport(_))));
        fs::remove_dir_all(dir).ok();
    }
}

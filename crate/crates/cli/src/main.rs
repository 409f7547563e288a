use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use wpframe::frame_cert::{certify, random_band_limited};
use wpframe::pipeline::{build_frame, emit_plot_data, run_pipeline, PipelineConfig};
use wpframe::tiling::{generate, validate_admissibility};
use wpframe::transform::io::{read_coefficients, read_signal, write_coefficients, write_signal};
use wpframe::transform::{analyze, roundtrip, synthesize, SampledSignal};
use wpframe::window::WindowConfig;

const THREADS_VAR: &str = "WPFRAME_THREADS";

/// Smooth compactly supported wave packet frames.
///
/// Set WPFRAME_THREADS to fix the worker thread count.
#[derive(Parser)]
#[command(name = "wpframe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the bump and multiplier windows.
    #[command(subcommand)]
    Window(WindowCmd),
    #[command(subcommand)]
    Tiling(TilingCmd),
    #[command(subcommand)]
    Frame(FrameCmd),
    #[command(subcommand)]
    Transform(TransformCmd),
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    #[command(subcommand)]
    Plot(PlotCmd),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Override a configuration key, e.g. `--set tiling.theta=0.25`.
    /// The value is parsed as JSON and falls back to a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum WindowCmd {
    /// Tabulate φ̂ and η̂ from a window configuration.
    Build {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum TilingCmd {
    /// List the tiles that meet the certified region.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Tiles are kept when their `t_cap`-dilate meets the region.
        #[arg(long, default_value_t = 1.0)]
        t_cap: f64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Check covering, multiplicity and regularity on the validation region.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum FrameCmd {
    /// Certify frame bounds, either for a pipeline configuration or from
    /// measured `A`, `B`, `Γ`.
    Certify {
        #[arg(long, short, conflicts_with_all = ["a", "b", "gamma"])]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE", requires = "config")]
        overrides: Vec<String>,
        #[arg(short, requires_all = ["b", "gamma", "dim"])]
        a: Option<f64>,
        #[arg(short)]
        b: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        /// Defaults to stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TransformCmd {
    /// Wave packet coefficients of a signal.
    Analyze {
        #[command(flatten)]
        config: ConfigArgs,
        /// Signal stem (`stem.json` + `stem.bin`); a seeded random
        /// band-limited signal when absent.
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Coefficient stem.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Adjoint of analyze.
    Synthesize {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        coefficients: PathBuf,
        /// Signal stem.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Analyze, synthesize and invert the frame operator.
    Roundtrip {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Run every stage; exit status 0 iff all stages pass.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Overrides the configured output directory.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PlotCmd {
    /// CSV files from a pipeline output directory.
    Emit {
        #[arg(long)]
        bundle: PathBuf,
        /// Defaults to `<bundle>/plots`.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn set_key(root: &mut Value, key: &str, raw: &str) -> anyhow::Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("object")
            }
            _ => bail!("`{key}`: `{}` is not an object", parts[..i].join(".")),
        };
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    bail!("empty key")
}

fn load<T: serde::de::DeserializeOwned>(path: &Path, overrides: &[String]) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut root: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for o in overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("override `{o}` is not KEY=VALUE"))?;
        set_key(&mut root, k.trim(), v.trim())?;
    }
    serde_json::from_value(root).with_context(|| format!("invalid configuration {}", path.display()))
}

fn pipeline_config(args: &ConfigArgs) -> anyhow::Result<PipelineConfig> {
    let cfg: PipelineConfig = load(&args.config, &args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn input_signal(cfg: &PipelineConfig, stem: Option<&Path>) -> anyhow::Result<SampledSignal> {
    match stem {
        Some(s) => Ok(read_signal(s).with_context(|| format!("reading signal {}", s.display()))?),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            Ok(random_band_limited(&mut rng, cfg.dim(), cfg.grid.n, cfg.grid.period, &cfg.certified_region()?)?)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_VAR) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{THREADS_VAR}={raw} is not a positive integer"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    match cli.command {
        Command::Window(WindowCmd::Build { config, out }) => {
            let cfg: WindowConfig = load(&config.config, &config.overrides)?;
            let bundle = cfg.build()?;
            bundle.write(&out)?;
            let m = bundle.metadata();
            println!("window: {}", serde_json::to_string(&m)?);
        }
        Command::Tiling(TilingCmd::Generate { config, t_cap, out }) => {
            let cfg = pipeline_config(&config)?;
            let tiles = generate(&cfg.tiling, &cfg.certified_region()?, t_cap)?;
            write_json(&out, &tiles)?;
            println!("{} tiles written to {}", tiles.len(), out.display());
        }
        Command::Tiling(TilingCmd::Validate { config, out }) => {
            let cfg = pipeline_config(&config)?;
            let region = match &cfg.validation.region {
                Some(r) => r.clone(),
                None => cfg.certified_region()?,
            };
            let report = validate_admissibility(&cfg.tiling, &region, cfg.validation.samples)?;
            write_json(&out, &report)?;
            println!(
                "admissible: {} tiles, multiplicity {}, max distance {:.6}",
                report.tiles, report.max_multiplicity, report.max_distance
            );
        }
        Command::Frame(FrameCmd::Certify {
            config,
            overrides,
            a,
            b,
            gamma,
            dim,
            out,
        }) => {
            let cert = match (config, a, b, gamma, dim) {
                (Some(path), ..) => {
                    let cfg = pipeline_config(&ConfigArgs { config: path, overrides })?;
                    build_frame(&cfg)?.1.cert
                }
                (None, Some(a), Some(b), Some(g), Some(d)) => certify(a, b, g, d)?,
                _ => bail!("pass --config, or -a, -b, --gamma and --dim"),
            };
            match out {
                Some(p) => write_json(&p, &cert)?,
                None => println!("{}", serde_json::to_string_pretty(&cert)?),
            }
            if cert.degenerate {
                eprintln!("certificate is degenerate: A_cert = {}", cert.a_cert);
                return Ok(false);
            }
        }
        Command::Transform(TransformCmd::Analyze { config, signal, out }) => {
            let cfg = pipeline_config(&config)?;
            let f = input_signal(&cfg, signal.as_deref())?;
            let plan = build_frame(&cfg)?.1.plan(&cfg)?;
            let c = analyze(&f, &plan)?;
            write_coefficients(&out, &c)?;
            println!("{} coefficients over {} tiles", c.count(), c.tiles.len());
        }
        Command::Transform(TransformCmd::Synthesize {
            config,
            coefficients,
            out,
        }) => {
            let cfg = pipeline_config(&config)?;
            let c = read_coefficients(&coefficients)?;
            let plan = build_frame(&cfg)?.1.plan(&cfg)?;
            let f = synthesize(&c, &plan)?;
            write_signal(&out, &f)?;
            println!("signal written to {}", out.display());
        }
        Command::Transform(TransformCmd::Roundtrip { config, signal, out }) => {
            let cfg = pipeline_config(&config)?;
            let f = input_signal(&cfg, signal.as_deref())?;
            let (_, frame) = build_frame(&cfg)?;
            let plan = frame.plan(&cfg)?;
            let (g, metrics) = roundtrip(&f, &plan, &frame.cert)?;
            write_signal(&out.join("reconstructed"), &g)?;
            write_json(&out.join("roundtrip.json"), &metrics)?;
            println!(
                "relative error {:.3e} after {} iterations",
                metrics.relative_error, metrics.iterations
            );
        }
        Command::Pipeline(PipelineCmd::Run { config, out }) => {
            let cfg = pipeline_config(&config)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let report = run_pipeline(&cfg, &dir)?;
            for s in &report.stages {
                println!("{:<10} {}  {}", s.stage, if s.passed { "PASS" } else { "FAIL" }, s.detail);
            }
            println!("report: {}", dir.join("report.json").display());
            return Ok(report.passed);
        }
        Command::Plot(PlotCmd::Emit { bundle, out }) => {
            let dir = out.unwrap_or_else(|| bundle.join("plots"));
            for p in emit_plot_data(&bundle, &dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

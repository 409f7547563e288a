use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../examples").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wpframe-cli-{tag}-{}", std::process::id()));
    fs::remove_dir_all(&dir).ok();
    dir
}

fn wpframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpframe"))
        .args(args)
        .env("WPFRAME_THREADS", "2")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pipeline_run_and_plot_emit() {
    let out = scratch("pipeline");
    let cfg = example("dyadic1d.json");
    let o = wpframe(&["pipeline", "run", "-c", s(&cfg), "--set", "test_signals=10", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("certify    PASS"));
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert!(cert["a_cert"].as_f64().unwrap() > 0.0);

    let o = wpframe(&["plot", "emit", "--bundle", s(&out)]);
    assert!(o.status.success(), "{}", text(&o));
    for f in ["spectral_sum.csv", "eta_profile.csv", "residuals.csv"] {
        assert!(out.join("plots").join(f).is_file());
    }
    fs::remove_dir_all(out).ok();
}

#[test]
fn zero_theta_rejected() {
    let out = scratch("theta0");
    let o = wpframe(&["pipeline", "run", "-c", s(&example("dyadic1d.json")), "--set", "tiling.theta=0", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("θ = 0"), "{}", text(&o));
    assert!(!out.exists());
}

#[test]
fn divergent_growth_rejected() {
    let o = wpframe(&[
        "pipeline",
        "run",
        "-c",
        s(&example("gabor1d.json")),
        "--set",
        r#"tiling.growth={"kind":"sub_exponential","scale":1,"rate":1,"exponent":1}"#,
        "-o",
        s(&scratch("kdiv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).to_lowercase().contains("diverge"), "{}", text(&o));
}

#[test]
fn unknown_config_key_rejected() {
    let o = wpframe(&["tiling", "generate", "-c", s(&example("dyadic1d.json")), "--set", "bogus=1", "-o", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("bogus"), "{}", text(&o));
}

#[test]
fn certify_from_numbers() {
    let o = wpframe(&["frame", "certify", "-a", "1", "-b", "1", "--gamma", "0.00048828125", "--dim", "1"]);
    assert!(o.status.success(), "{}", text(&o));
    let cert: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((cert["a_cert"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((cert["b_cert"].as_f64().unwrap() - 1.25).abs() < 1e-12);

    let o = wpframe(&["frame", "certify", "-a", "1", "-b", "1", "--gamma", "1", "--dim", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn window_and_tiling_commands() {
    let out = scratch("stages");
    let o = wpframe(&["window", "build", "-c", s(&example("window1d.json")), "-o", s(&out.join("window"))]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(out.join("window/window.json").is_file());

    let cfg = example("gabor1d.json");
    let o = wpframe(&["tiling", "generate", "-c", s(&cfg), "-o", s(&out.join("tiles.json"))]);
    assert!(o.status.success(), "{}", text(&o));
    let tiles: Vec<serde_json::Value> = serde_json::from_str(&fs::read_to_string(out.join("tiles.json")).unwrap()).unwrap();
    assert!(!tiles.is_empty());

    let o = wpframe(&["tiling", "validate", "-c", s(&cfg), "--set", "validation.samples=2000", "-o", s(&out.join("validation.json"))]);
    assert!(o.status.success(), "{}", text(&o));
    fs::remove_dir_all(out).ok();
}

#[test]
fn transform_commands_chain() {
    let out = scratch("transform");
    let cfg = example("dyadic1d.json");
    let o = wpframe(&["transform", "analyze", "-c", s(&cfg), "-o", s(&out.join("coef"))]);
    assert!(o.status.success(), "{}", text(&o));
    let o = wpframe(&["transform", "synthesize", "-c", s(&cfg), "--coefficients", s(&out.join("coef")), "-o", s(&out.join("sig"))]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(out.join("sig.bin").is_file());

    let o = wpframe(&["transform", "roundtrip", "-c", s(&cfg), "--signal", s(&out.join("sig")), "-o", s(&out.join("rt"))]);
    assert!(o.status.success(), "{}", text(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rt/roundtrip.json")).unwrap()).unwrap();
    assert!(m["relative_error"].as_f64().unwrap() <= 1e-6);
    fs::remove_dir_all(out).ok();
}

#[test]
fn bad_thread_count() {
    let o = Command::new(env!("CARGO_BIN_EXE_wpframe"))
        .args(["plot", "emit", "--bundle", "/nonexistent"])
        .env("WPFRAME_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("WPFRAME_THREADS"));
}

#[test]
fn plot_emit_without_report() {
    let dir = scratch("empty");
    fs::create_dir_all(&dir).unwrap();
    let o = wpframe(&["plot", "emit", "--bundle", s(&dir)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("report.json"), "{}", text(&o));
    fs::remove_dir_all(dir).ok();
}

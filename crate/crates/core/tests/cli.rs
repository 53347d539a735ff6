use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmi_lab::config::{ExperimentConfig, MatrixConfig};
use mmi_lab::instrument::LayoutKind;
use mmi_lab::mmi::TransferMatrix;
use mmi_lab::tagstream::TimeTagStream;
use mmi_lab::temporal::CoherenceModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn mmi_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmi-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = mmi_lab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn ok_text(args: &[&str]) -> String {
    let out = mmi_lab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &TempDir, name: &str, cfg: &ExperimentConfig) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn default_config() -> ExperimentConfig {
    ExperimentConfig::load(&data("mmi.toml")).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, config: &Path, seconds: &str, seed: &str, name: &str) -> PathBuf {
    let out = dir.path().join(name);
    let res = mmi_lab(&[
        "simulate",
        "--config",
        s(config),
        "--seconds",
        seconds,
        "--seed",
        seed,
        "--out",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    out
}

fn manifest(stream: &Path) -> Value {
    let mut p = stream.as_os_str().to_owned();
    p.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let cfg = data("mmi.toml");
    let a = simulate(&dir, &cfg, "60", "7", "a.ttag");
    let b = simulate(&dir, &cfg, "60", "7", "b.ttag");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = simulate(&dir, &cfg, "60", "8", "c.ttag");
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    let m = manifest(&a);
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["schema_version"], 1);
}

#[test]
fn csv_stream_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = data("mmi.toml");
    let bin = simulate(&dir, &cfg, "300", "3", "a.ttag");
    let csv = dir.path().join("a.csv");
    let res = mmi_lab(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seconds",
        "300",
        "--seed",
        "3",
        "--out",
        s(&csv),
        "--stream-format",
        "csv",
    ]);
    assert!(res.status.success());
    assert_eq!(
        TimeTagStream::read(&bin).unwrap(),
        TimeTagStream::read(&csv).unwrap()
    );
}

#[test]
fn zero_emission_gives_only_dark_counts() {
    let dir = TempDir::new().unwrap();
    let mut cfg = default_config();
    cfg.source.emission_prob = 0.0;
    cfg.source.two_photon_prob = 0.0;
    cfg.detectors.dark_rate = 3600.0;
    let path = write_config(&dir, "dark.toml", &cfg);
    let stream = simulate(&dir, &path, "1000", "1", "dark.ttag");
    let m = manifest(&stream);
    assert_eq!(m["truth"]["emitted_photons"], 0);
    let n = m["n_tags"].as_u64().unwrap();
    assert_eq!(n, m["truth"]["dark_counts"].as_u64().unwrap());
    // Four channels at 1/s for 1000 s.
    assert!((n as f64 - 4000.0).abs() < 4.0 * 4000f64.sqrt(), "{n}");
}

#[test]
fn manifest_pairs_match_expected_rate() {
    let dir = TempDir::new().unwrap();
    let stream = simulate(&dir, &data("mmi.toml"), "50000", "5", "run.ttag");
    let m = manifest(&stream);
    let expected = m["expected_pair_rate"].as_f64().unwrap() * 50_000.0;
    let pairs = m["truth"]["pairs_delivered"].as_f64().unwrap();
    assert!(
        (pairs - expected).abs() <= 3.0 * expected.sqrt(),
        "{pairs} vs {expected}"
    );
}

#[test]
fn analyze_g2_reports_side_peaks() {
    let dir = TempDir::new().unwrap();
    let cfg = data("hbt.toml");
    let stream = simulate(&dir, &cfg, "100000", "2", "hbt.ttag");
    let out = dir.path().join("g2");
    let r = ok_json(&[
        "analyze",
        "g2",
        s(&stream),
        "--config",
        s(&cfg),
        "--out",
        s(&out),
    ]);
    let g2 = r["report"]["g2_zero"].as_f64().unwrap();
    assert!((g2 - 0.067).abs() < 0.02, "{g2}");
    assert!(r["report"]["peaks"].as_array().unwrap().len() >= 8);
    for f in [
        "g2_histogram.csv",
        "g2_peaks.csv",
        "pulse_profile.csv",
        "report.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn analyze_mmi_with_full_coherence_matches_quantum() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let unitary = TransferMatrix::random_unitary(4, &mut rng).unwrap();
    let matrix_path = dir.path().join("u.json");
    std::fs::write(&matrix_path, unitary.to_json()).unwrap();
    let mut cfg = default_config();
    cfg.source.coherence = CoherenceModel::Perfect;
    cfg.source.atom_transit_rate = 20.0;
    cfg.matrix = MatrixConfig {
        preset: None,
        file: Some(matrix_path),
    };
    let path = write_config(&dir, "coherent.toml", &cfg);
    let stream = simulate(&dir, &path, "40000", "4", "run.ttag");
    let out = dir.path().join("mmi");
    let r = ok_json(&[
        "analyze",
        "mmi",
        s(&stream),
        "--config",
        s(&path),
        "--out",
        s(&out),
        "--trials",
        "20000",
    ]);
    let r = &r["report"];
    assert!(r["n_coincidences"].as_u64().unwrap() >= 10_000);
    let sq = r["vs_quantum"]["mode"].as_f64().unwrap();
    assert!(sq >= 0.99, "{sq}");
    assert!(r["vs_quantum"]["mode"].as_f64() > r["vs_classical"]["mode"].as_f64());
    let csv = std::fs::read_to_string(out.join("mmi_counts.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn analyze_hom_orthogonal_has_no_visibility() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig::load(&data("hom.toml")).unwrap();
    cfg.layout.polarization = mmi_lab::instrument::Polarization::Orthogonal;
    cfg.source.atom_transit_rate = 20.0;
    let path = write_config(&dir, "orth.toml", &cfg);
    let stream = simulate(&dir, &path, "20000", "6", "orth.ttag");
    let out = dir.path().join("hom");
    let r = ok_json(&[
        "analyze",
        "hom",
        s(&stream),
        "--config",
        s(&path),
        "--out",
        s(&out),
    ]);
    let v = r["report"]["visibility"].as_f64().unwrap();
    assert!(v.abs() <= 0.02, "{v}");
    assert_eq!(r["report"]["reference_kind"], "time_offset");
}

#[test]
fn analyze_hom_parallel_shows_interference() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ExperimentConfig::load(&data("hom.toml")).unwrap();
    cfg.source.atom_transit_rate = 20.0;
    let path = write_config(&dir, "par.toml", &cfg);
    let stream = simulate(&dir, &path, "20000", "6", "par.ttag");
    let out = dir.path().join("hom");
    let r = ok_json(&[
        "analyze",
        "hom",
        s(&stream),
        "--config",
        s(&path),
        "--out",
        s(&out),
    ]);
    let v = r["report"]["visibility"].as_f64().unwrap();
    let vw = r["report"]["windowed_visibility"].as_f64().unwrap();
    assert!(v > 0.55 && v < 0.75, "{v}");
    assert!(vw > v, "{vw} {v}");
}

#[test]
fn analyze_timeresolved_emits_curve() {
    let dir = TempDir::new().unwrap();
    let mut cfg = default_config();
    cfg.source.atom_transit_rate = 20.0;
    let path = write_config(&dir, "tr.toml", &cfg);
    let stream = simulate(&dir, &path, "20000", "8", "run.ttag");
    let out = dir.path().join("tr");
    let text = ok_text(&[
        "analyze",
        "timeresolved",
        s(&stream),
        "--config",
        s(&path),
        "--out",
        s(&out),
        "--trials",
        "5000",
        "--format",
        "csv",
    ]);
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("center_ns,events"));
    // Sparse tail windows are dropped.
    assert!(rows.len() > 8 && rows.len() <= 1 + cfg.analysis.time_resolved_centers.len());
    let first: Vec<f64> = rows[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert!(
        first[2] > first[5],
        "S_Q should exceed S_C at short delays: {}",
        rows[1]
    );
}

#[test]
fn analyze_mmi_without_reference_names_offset_pass() {
    // One detection per duty cycle at most: no pair is two cycles apart.
    let dir = TempDir::new().unwrap();
    let stream = TimeTagStream::new(
        81_000,
        4,
        vec![
            mmi_lab::tagstream::TimeTag::new(0, 1000),
            mmi_lab::tagstream::TimeTag::new(1, 1500),
        ],
    )
    .unwrap();
    let path = dir.path().join("tiny.ttag");
    stream
        .write(&path, mmi_lab::tagstream::StreamFormat::Binary)
        .unwrap();
    let out = mmi_lab(&[
        "analyze",
        "mmi",
        s(&path),
        "--config",
        s(&data("mmi.toml")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("time-offset"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[source]\nnot_a_key = 1\n").unwrap();
    let out = mmi_lab(&[
        "simulate",
        "--config",
        s(&bad),
        "--out",
        s(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));

    let garbage = dir.path().join("g.ttag");
    std::fs::write(&garbage, b"TTAG\x01").unwrap();
    let out = mmi_lab(&[
        "analyze",
        "g2",
        s(&garbage),
        "--config",
        s(&data("hbt.toml")),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    assert_eq!(
        mmi_lab(&["predict", "--matrix", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        mmi_lab(&["predict", "-i", "1", "-j", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(mmi_lab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn threads_env_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_mmi-lab"))
        .args(["predict"])
        .env("MMI_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_mmi-lab"))
        .args(["predict"])
        .env("MMI_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
}

fn table(format_v: &str, matrix: &str) -> Vec<(String, String, f64, f64, f64)> {
    ok_text(&[
        "predict",
        "--matrix",
        matrix,
        "-i",
        "1",
        "-j",
        "2",
        "--visibility",
        format_v,
    ])
    .lines()
    .skip(1)
    .map(|l| {
        let f: Vec<&str> = l.split(',').collect();
        let pair = format!("{},{}", f[1], f[2]);
        (
            f[0].to_string(),
            pair,
            f[3].parse().unwrap(),
            f[4].parse().unwrap(),
            f[5].parse().unwrap(),
        )
    })
    .collect()
}

#[test]
fn predict_tables() {
    let full = table("1", "measured-chip");
    let renorm: Vec<_> = full.iter().filter(|r| r.0 == "renormalized").collect();
    assert_eq!(renorm.len(), 10);
    let total: f64 = renorm.iter().map(|r| r.2).sum();
    assert!((total - 1.0).abs() < 1e-6);
    assert!(renorm.iter().all(|r| (r.4 - r.2).abs() < 1e-12));

    let none = table("0", "measured-chip");
    assert!(none.iter().all(|r| (r.4 - r.3).abs() < 1e-12));

    let hom = table("1", "balanced-splitter");
    let cross = hom.iter().find(|r| r.0 == "raw" && r.1 == "1,2").unwrap();
    assert_eq!(cross.2, 0.0);
    assert_eq!(cross.3, 0.5);

    let json = ok_json(&["predict", "--format", "json", "--visibility", "0.708"]);
    assert_eq!(json["inputs"], serde_json::json!([1, 2]));
    assert_eq!(
        json["tables"]["renormalized"]["quantum"]
            .as_object()
            .unwrap()
            .len(),
        10
    );
}

#[test]
fn characterize_round_trip() {
    let r = ok_json(&["characterize", "--simulate", "--matrix", "measured-chip"]);
    assert!(r["deviation"]["max"].as_f64().unwrap() <= 1e-10);
    let back = TransferMatrix::from_json(&r["matrix"].to_string()).unwrap();
    assert!(
        back.max_abs_diff(&TransferMatrix::measured_chip().gauge_fixed())
            .unwrap()
            <= 1e-10
    );
}

#[test]
fn characterize_identity_warns_but_recovers_amplitudes() {
    let out = mmi_lab(&["characterize", "--simulate", "--matrix", "identity4"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("flat fringes"));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["deviation"]["max"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn characterize_noise_summary_and_data_file() {
    let dir = TempDir::new().unwrap();
    let r = ok_json(&[
        "characterize",
        "--simulate",
        "--matrix",
        "measured-chip",
        "--noise",
        "0.01",
        "--runs",
        "100",
    ]);
    let d = &r["deviation"];
    assert_eq!(d["runs"], 100);
    let mean = d["mean"].as_f64().unwrap();
    assert!(mean > 1e-4 && mean < 0.05, "{mean}");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = mmi_lab::mmi::uniform_phase_grid(16);
    let data =
        mmi_lab::mmi::simulate_fringes(&TransferMatrix::measured_chip(), 0.0, &grid, &mut rng)
            .unwrap();
    let path = dir.path().join("fringes.json");
    std::fs::write(&path, data.to_json()).unwrap();
    let r = ok_json(&[
        "characterize",
        "--data",
        s(&path),
        "--truth",
        "measured-chip",
    ]);
    assert!(r["deviation"]["max"].as_f64().unwrap() <= 1e-10);

    let mut short = data.clone();
    short.fringes.pop();
    std::fs::write(&path, short.to_json()).unwrap();
    assert_eq!(
        mmi_lab(&["characterize", "--data", s(&path)]).status.code(),
        Some(3)
    );
}

#[test]
fn shipped_profiles_are_distinct_layouts() {
    assert_eq!(default_config().layout.kind, LayoutKind::Mmi);
    assert_eq!(
        ExperimentConfig::load(&data("hbt.toml"))
            .unwrap()
            .layout
            .kind,
        LayoutKind::Hbt
    );
    assert_eq!(
        ExperimentConfig::load(&data("hom.toml"))
            .unwrap()
            .layout
            .kind,
        LayoutKind::HomSplitter
    );
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nvdetect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvdetect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn ok(args: &[&str]) -> String {
    let out = nvdetect(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Parsed CSV: header and rows of raw fields.
fn table(csv_text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const DC_ZERO: &str = r#"{"scenario": {"noise": {"kappa": 3.6, "tau_c": 25.0},
    "field": {"type": "dc_known", "b": 0.0}, "protocol": {"type": "free_evolution"}},
    "sweep": {"variable": "T", "start": 0.0, "stop": 3.0, "count": 31}}"#;

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = config("fig2b_ac_uncertain.json");
    ok(&["ac", "--config", &cfg, "--out", a.to_str().unwrap()]);
    ok(&["ac", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let sim = config("simulate_ac.json");
    assert_eq!(ok(&["simulate", "--config", &sim]), ok(&["simulate", "--config", &sim]));
    assert_ne!(
        ok(&["simulate", "--config", &sim]),
        ok(&["simulate", "--config", &sim, "--seed", "18"])
    );
}

#[test]
fn csv_round_trips_exactly() {
    let cfg = config("fig1_dc.json");
    let (header, rows) = table(&ok(&["dc", "--config", &cfg]));
    assert_eq!(header, ["T", "p_error", "chi", "nu", "mu_abs", "mu_arg", "regime"]);
    let json: serde_json::Value = serde_json::from_str(&ok(&["dc", "--config", &cfg, "--format", "json"])).unwrap();
    let json_rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), json_rows.len());
    for (row, j) in rows.iter().zip(json_rows) {
        for (k, key) in ["value", "p_error", "chi", "nu", "mu_abs", "mu_arg"].iter().enumerate() {
            let from_csv: f64 = row[k].parse().unwrap();
            match j[key].as_f64() {
                Some(v) => assert_eq!(from_csv.to_bits(), v.to_bits(), "{key}"),
                None => assert!(from_csv.is_nan(), "{key}"),
            }
        }
        assert_eq!(row[6], j["regime"].as_str().unwrap());
    }
}

#[test]
fn config_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    let cases = [
        write(&dir, "broken.json", "{ not json"),
        write(&dir, "unknown.json", &DC_ZERO.replacen("\"b\"", "\"bee\"", 1)),
        write(
            &dir,
            "extra.json",
            &DC_ZERO.replacen("{\"scenario\"", "{\"colour\": 1, \"scenario\"", 1),
        ),
        write(
            &dir,
            "empty.json",
            &DC_ZERO.replacen("\"stop\": 3.0", "\"stop\": -1.0", 1),
        ),
        write(
            &dir,
            "negative.json",
            &DC_ZERO.replacen("\"kappa\": 3.6", "\"kappa\": -3.6", 1),
        ),
        missing.to_string_lossy().into_owned(),
    ];
    for path in &cases {
        let out = nvdetect(&["dc", "--config", path]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{path}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
    // Wrong subcommand for the protocol, wrong swept variable, no config.
    assert_eq!(
        nvdetect(&["ac", "--config", &config("fig1_dc.json")]).status.code(),
        Some(2)
    );
    assert_eq!(
        nvdetect(&["multicopy", "--config", &config("fig5_ac.json")])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(nvdetect(&["dc"]).status.code(), Some(2));
    assert_eq!(nvdetect(&["dc", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn dc_figure() {
    let (_, rows) = table(&ok(&["dc", "--config", &config("fig1_dc.json")]));
    let p = column(&rows, 1);
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((min - 0.2).abs() < 0.02);
    let (_, opt) = table(&ok(&["optimize", "--config", &config("fig1_dc.json")]));
    assert!((column(&opt, 1)[0] - 0.2).abs() < 0.02);
    assert!(column(&opt, 1)[0] <= min);

    let dir = TempDir::new().unwrap();
    let zero = write(&dir, "zero.json", DC_ZERO);
    let (_, rows) = table(&ok(&["dc", "--config", &zero]));
    assert!(column(&rows, 1).iter().all(|&p| (p - 0.5).abs() < 1e-15));
}

#[test]
fn sigma_sweep_is_ordered() {
    let (header, rows) = table(&ok(&["optimize", "--config", &config("optimize_sigma.json")]));
    assert_eq!(header[0], "sigma_b");
    let p = column(&rows, 1);
    assert!(p.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn ac_figure() {
    let (header, rows) = table(&ok(&["ac", "--config", &config("fig5_ac.json")]));
    assert_eq!(header[0], "N");
    let n = column(&rows, 0);
    assert!(n.iter().all(|&n| n % 2.0 == 0.0));
    let p = column(&rows, 1);
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((min - 0.124).abs() < 0.01);
}

#[test]
fn multicopy_figure() {
    let (_, rows) = table(&ok(&["multicopy", "--config", &config("fig4_multicopy.json")]));
    let p = column(&rows, 1);
    assert_eq!(rows.len(), 41);
    let (_, single) = table(&ok(&["optimize", "--config", &config("fig5_ac.json")]));
    assert_eq!(p[0], column(&single, 1)[0]);
    for m in (2..=40).step_by(2) {
        assert_eq!(p[m - 1], p[m - 2], "M = {m}");
    }
    let odd: Vec<f64> = p.iter().step_by(2).map(|p| -p.ln()).collect();
    assert!(odd.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn efficiency_figure() {
    let (_, rows) = table(&ok(&["efficiency", "--config", &config("fig6_efficiency.json")]));
    let eta = column(&rows, 0);
    let p = column(&rows, 1);
    let (first, last) = (p[0], p[p.len() - 1]);
    assert!((first - 0.5).abs() < 1e-12);
    assert!((last - 0.124).abs() < 0.01);
    for (e, v) in eta.iter().zip(&p) {
        assert!((v - (first + e * (last - first))).abs() < 1e-12);
    }
}

#[test]
fn waveform_figure() {
    let (_, rows) = table(&ok(&["waveform", "--config", &config("fig3_waveform.json")]));
    let p = column(&rows, 1);
    assert!((p[0] - 0.5).abs() < 1e-15);
    assert!(p.iter().cloned().fold(f64::INFINITY, f64::min) < 0.15);
}

#[test]
fn single_tone_waveform_matches_cpmg() {
    // cos(2πt) has nodes at ¼, ¾, … µs, which is CPMG timing with τ = ½.
    let dir = TempDir::new().unwrap();
    let wave = write(
        &dir,
        "wave.json",
        r#"{"scenario": {"noise": {"kappa": 3.6, "tau_c": 25.0},
            "field": {"type": "multi_tone", "terms": [{"amplitude": 1.0, "frequency": 1.0, "phase": 1.5707963267948966}]},
            "protocol": {"type": "node_locked"}},
            "sweep": {"variable": "T", "start": 1.0, "stop": 30.0, "step": 1.0}}"#,
    );
    let (_, w) = table(&ok(&["waveform", "--config", &wave]));
    let (_, a) = table(&ok(&["ac", "--config", &config("fig5_ac.json")]));
    // T = N τ: rows T = 1, 2, … match N = 2, 4, …
    for (wr, ar) in w.iter().zip(&a) {
        let (pw, pa): (f64, f64) = (wr[1].parse().unwrap(), ar[1].parse().unwrap());
        assert!((pw - pa).abs() < 1e-9, "T = {}: {pw} vs {pa}", wr[0]);
    }
}

#[test]
fn zero_amplitude_waveform_is_flat() {
    let dir = TempDir::new().unwrap();
    let wave = write(
        &dir,
        "zero.json",
        r#"{"scenario": {"noise": {"kappa": 3.6, "tau_c": 25.0},
            "field": {"type": "multi_tone", "terms": [{"amplitude": 0.0, "frequency": 1.0}, {"amplitude": 0.0, "frequency": 1.5}]},
            "protocol": {"type": "node_locked"}},
            "sweep": {"variable": "T", "start": 0.0, "stop": 5.0, "count": 11}}"#,
    );
    let (_, rows) = table(&ok(&["waveform", "--config", &wave]));
    assert!(column(&rows, 1).iter().all(|&p| (p - 0.5).abs() < 1e-15));
}

#[test]
fn simulation_agrees_with_closed_form() {
    let (header, rows) = table(&ok(&["simulate", "--config", &config("simulate_ac.json")]));
    let z = header.iter().position(|h| h == "z_score").unwrap();
    assert!(column(&rows, z)[0] < 3.0);
}

#[test]
fn selftest_passes() {
    let text = ok(&["selftest"]);
    assert!(text.lines().count() >= 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn hetspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetspec"))
        .args(args)
        .env_remove("HETSPEC_THREADS")
        .output()
        .expect("binary runs")
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(extra);
    let o = hetspec(&args);
    assert!(
        o.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

struct Csv {
    meta: HashMap<String, String>,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let text = std::fs::read_to_string(path).unwrap();
        let mut meta = HashMap::new();
        let mut lines = text.lines();
        let mut header = None;
        for l in lines.by_ref() {
            if let Some(m) = l.strip_prefix("# ") {
                if let Some((k, v)) = m.split_once(" = ") {
                    meta.insert(k.to_string(), v.to_string());
                }
            } else {
                header = Some(l);
                break;
            }
        }
        let columns = header.unwrap().split(',').map(String::from).collect();
        let rows = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        Csv { meta, columns, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).unwrap()
    }

    fn meta(&self, key: &str) -> f64 {
        self.meta[key].parse().unwrap()
    }

    /// Row whose first column is nearest `x`.
    fn row_near(&self, x: f64) -> &[f64] {
        self.rows
            .iter()
            .min_by(|a, b| (a[0] - x).abs().total_cmp(&(b[0] - x).abs()))
            .unwrap()
    }
}

/// A preset with some fields replaced.
fn edited(name: &str, dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(preset(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn short_run(v: &mut Value) {
    v["montecarlo"]["trials"] = 1.into();
    v["montecarlo"]["segments"] = 16.into();
}

fn lorentzian(offset: f64) -> f64 {
    0.25 / (0.25 + offset * offset)
}

#[test]
fn quantum_spectrum_peaks_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("spectrum", &preset("quantum.json"), dir.path(), &[]);
    // n = n_th + p = 0.5, p = 0.1, kappa_bar_ext = 0.8, |Z|^2 = 1.
    let scale = 4.0 * 0.1 * 0.8;
    let image = lorentzian(100.0);
    for combo in ["quantum_scl", "quantum_qua"] {
        let csv = Csv::read(&dir.path().join(format!("spectrum_{combo}.csv")));
        assert_eq!(csv.meta["combo"], combo);
        let row = csv.row_near(50.0);
        assert!((row[0] - 50.0).abs() < 1e-9);
        let red = 1.0 + scale * (1.5 + 0.5 * image);
        let blue = 1.0 + scale * (0.5 + 1.5 * image);
        assert!((row[csv.col("red_S_total")] - red).abs() < 1e-10, "{combo}");
        assert!((row[csv.col("blue_S_total")] - blue).abs() < 1e-10, "{combo}");
        let parts = ["red_S_o", "red_S_om", "red_S_m"].map(|c| row[csv.col(c)]).iter().sum::<f64>();
        assert!((parts - row[csv.col("red_S_total")]).abs() < 1e-10);
    }
    for f in ["spectrum_classical_qua.svg", "spectrum.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn squashing_preset_dips_below_floor() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok("spectrum", &preset("classical_squashing.json"), dir.path(), &[]);
    assert!(out.contains("below floor"));
    let csv = Csv::read(&dir.path().join("spectrum_classical_scl.csv"));
    let row = csv.row_near(50.0);
    let dip = row[csv.col("blue_S_total")] - csv.meta("floor");
    // 4 p kappa_bar_ext (n_th/alpha + p - 1/2) = 0.16 * (-0.35).
    assert!(dip < 0.0);
    assert!((dip - 0.16 * -0.35).abs() < 1e-4, "{dip}");
}

#[test]
fn missing_detector_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("quantum.json", dir.path(), |v| {
        v.as_object_mut().unwrap().remove("detector");
    });
    let o = hetspec(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("detector"));
}

#[test]
fn malformed_configs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_seed = edited("quantum.json", dir.path(), |v| v["montecarlo"]["seed"] = "seven".into());
    let o = hetspec(&["simulate", "--config", bad_seed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let unknown = dir.path().join("unknown.json");
    let text = std::fs::read_to_string(preset("bluecurve.json")).unwrap();
    std::fs::write(&unknown, text.replacen('{', "{\"colour\": \"red\",", 1)).unwrap();
    let o = hetspec(&["bluecurve", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let o = hetspec(&["spectrum", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hetspec(&["spectrum", "--config", preset("bluecurve.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = hetspec(&["cooling", "--config", preset("quantum.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn regime_violations_exit_3_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("quantum.json", dir.path(), |v| v["detector"]["omega_if"] = 55.into());
    let o = hetspec(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    run_ok("spectrum", &cfg, &dir.path().join("forced"), &["--force"]);

    let cfg = edited("bluecurve.json", dir.path(), |v| v["scenario"]["bluecurve"]["p"] = 0.6.into());
    let o = hetspec(&["bluecurve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn cooling_sweep_respects_classical_floor() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("cooling", &preset("cooling.json"), dir.path(), &[]);
    let csv = Csv::read(&dir.path().join("cooling_sweep.csv"));
    assert_eq!(csv.rows.len(), 6100);
    assert_eq!(csv.meta["classical_floor_holds"], "true");
    let nc = csv.col("n_classical");
    let nq = csv.col("n_quantum");
    assert!(csv.rows.iter().all(|r| r[nc] > 0.5));
    assert!(csv.rows.iter().any(|r| r[nq] < 0.5));
    assert!(csv.rows.iter().all(|r| r[csv.col("n_inf_classical")] > 0.0));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cooling.json")).unwrap()).unwrap();
    assert_eq!(summary["classical_floor_holds"], true);
}

#[test]
fn bluecurve_crosses_zero_at_two_and_a_half() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("bluecurve", &preset("bluecurve.json"), dir.path(), &[]);
    let csv = Csv::read(&dir.path().join("bluecurve.csv"));
    assert_eq!(csv.meta["classical_zero_crossing"], "2.50000000000e0");
    assert_eq!(csv.meta["bound_holds"], "true");
    let c = csv.col("classical");
    let k = csv.rows.windows(2).position(|w| w[0][c] > 0.0 && w[1][c] <= 0.0).unwrap();
    assert!(csv.rows[k][0] <= 2.5 && csv.rows[k + 1][0] >= 2.5);
    let last = csv.rows.last().unwrap();
    assert!((last[csv.col("quantum")] - 0.1).abs() < 1e-8);
}

#[test]
fn simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("quantum.json", dir.path(), |v| {
        short_run(v);
        v["montecarlo"]["export_trace"] = true.into();
    });
    let out = dir.path().join("run");
    run_ok("simulate", &cfg, &out, &[]);
    for f in ["psd.csv", "sidebands.csv", "trace.csv", "thermometry.json", "simulate.svg", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let psd = Csv::read(&out.join("psd.csv"));
    assert_eq!(psd.columns, ["omega", "mean", "stderr"]);
    assert_eq!(psd.meta["segments"], "16");
    let sides = Csv::read(&out.join("sidebands.csv"));
    assert_eq!(sides.columns.len(), 7);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(out.join("thermometry.json")).unwrap()).unwrap();
    assert!(t["report"]["h_r"].as_f64().unwrap() > 0.0);
    assert_eq!(t["own_theory"]["target"], 0.5);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 1);
    assert_eq!(m["command"], "simulate");
}

#[test]
fn uncoupled_simulation_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok("simulate", &preset("uncoupled.json"), dir.path(), &[]);
    assert!(out.contains("no coupling"));
    let t: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("thermometry.json")).unwrap()).unwrap();
    let r = &t["report"];
    let f = |k: &str| r[k].as_f64().unwrap();
    assert!(f("h_r").abs() < 3.0 * f("h_r_err"));
    assert!(f("h_b").abs() < 3.0 * f("h_b_err"));
    assert!((f("floor") - 2.0).abs() < 3.0 * f("floor_err"));
    assert!(t["own_theory"]["occupancy"].is_null());
}

#[test]
fn manifest_reproduces_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("classical_floor.json", dir.path(), short_run);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    run_ok("simulate", &cfg, &a, &["--seed", "11"]);
    run_ok("simulate", &a.join("manifest.json"), &b, &[]);
    for f in ["psd.csv", "sidebands.csv", "thermometry.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    run_ok("simulate", &cfg, &c, &["--seed", "12"]);
    assert_ne!(std::fs::read(a.join("psd.csv")).unwrap(), std::fs::read(c.join("psd.csv")).unwrap());

    run_ok("spectrum", &preset("quantum.json"), &a, &[]);
    run_ok("spectrum", &a.join("manifest.json"), &b, &[]);
    let x = std::fs::read(a.join("spectrum_quantum_scl.csv")).unwrap();
    assert_eq!(x, std::fs::read(b.join("spectrum_quantum_scl.csv")).unwrap());
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("bluecurve.json");
    let args = ["bluecurve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_hetspec"))
            .args(args)
            .env("HETSPEC_THREADS", threads)
            .output()
            .unwrap()
    };
    assert!(run("1").status.success());
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn template_parses_once_comments_are_stripped() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("template.jsonc")).unwrap();
    let json: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("//"))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg = dir.path().join("template.json");
    std::fs::write(&cfg, json).unwrap();
    for cmd in ["spectrum", "bluecurve"] {
        run_ok(cmd, &cfg, &dir.path().join(cmd), &[]);
    }
}

/// The three physics presets recover their closed-form occupancies.
#[test]
fn presets_recover_closed_form_occupancies() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["quantum.json", "classical_squashing.json", "classical_floor.json"] {
        let out = dir.path().join(name);
        run_ok("simulate", &preset(name), &out, &[]);
        let t: Value = serde_json::from_str(&std::fs::read_to_string(out.join("thermometry.json")).unwrap()).unwrap();
        for reading in ["own_theory", "quantum_reading"] {
            let dev = t[reading]["deviation_sigma"].as_f64().unwrap();
            assert!(dev.abs() < 3.0, "{name} {reading}: {dev} sigma");
        }
    }
}

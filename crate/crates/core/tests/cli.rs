use std::path::Path;
use std::process::{Command, Output};

use wslchain::config::{ExperimentConfig, ExperimentKind, NoiseMode, ShotConfig};
use wslchain::model::PAPER_DEVICE;
use wslchain::runner::{count_crossings, kinetic_trajectory};

fn wslchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wslchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn validate_prints_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"wsl_scan\"\ndevice = \"paper-device\"\n");
    let out = wslchain(&["validate", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed: ExperimentConfig = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(parsed.experiment, ExperimentKind::WslScan);
    assert_eq!(parsed.gradients_mhz, vec![5.0, 7.5, 10.0, 12.5, 15.0]);
}

#[test]
fn bad_configs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    for (body, needle) in [
        ("experiment = \"spin_transport\"\nwobble = 3\n", "wobble"),
        ("experiment = \"spin_transport\"\nt_max = -1\n", "t_max"),
        ("experiment = \"spin_transport\"\ninitial_state = \"10\"\n", "initial_state"),
    ] {
        let cfg = write_config(dir.path(), body);
        let out = wslchain(&["run", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(3), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle));
    }
}

#[test]
fn usage_errors() {
    assert_eq!(wslchain(&["run"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"levitate\"\n");
    assert_eq!(wslchain(&["run", "--config", &cfg]).status.code(), Some(2));
    let missing = dir.path().join("absent.toml");
    assert_eq!(wslchain(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn spin_transport_outputs_are_deterministic_and_conserve_population() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = wslchain(&["spin-transport", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let name = "spin_transport_F0MHz.csv";
    let (ta, tb) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let cols: Vec<Vec<f64>> = (1..=5).map(|j| csv_column(&text, &format!("P{j}"))).collect();
    for k in 0..cols[0].len() {
        let total: f64 = cols.iter().map(|c| c[k]).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "spin_transport");
    assert_eq!(summary["readout"], "exact");
}

#[test]
fn seeded_lindblad_runs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"spin_transport\"\nnoise = \"lindblad\"\nt_max = 60\nF = 10\n[shots]\nn_shots = 120\nn_groups = 6\nseed = 5\n",
    );
    let mut tables = Vec::new();
    for sub in ["x", "y"] {
        let out = dir.path().join(sub);
        let o = wslchain(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(std::fs::read_to_string(out.join("spin_transport_F10MHz.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert!(tables[0].lines().next().unwrap().contains("P5_err"));
    let o = wslchain(&["run", "--config", &cfg, "--out", dir.path().join("z").to_str().unwrap(), "--seed", "6"]);
    assert!(o.status.success());
    let other = std::fs::read_to_string(dir.path().join("z/spin_transport_F10MHz.csv")).unwrap();
    assert_ne!(other, tables[0]);
}

#[test]
fn wsl_scan_writes_fit_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    let o = wslchain(&["wsl-scan", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scan = std::fs::read_to_string(out.join("wsl_scan.csv")).unwrap();
    let ln = csv_column(&scan, "ln_p_max");
    assert_eq!(ln.len(), 5);
    assert!(ln.windows(2).all(|w| w[1] < w[0]));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_sha256"].as_str().unwrap().len(), 64);
    assert!(summary["fit_block"].as_str().unwrap().contains("slope"));
}

/// With h_j = +F·j on the reference device the sampled edge kinetic energies
/// cross at F = 15 MHz; with the tilt reversed K1 stays above K4.
#[test]
fn thermal_edge_energies_under_both_tilts() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::ThermalTransport, PAPER_DEVICE).unwrap();
    cfg.noise.kind = NoiseMode::Lindblad;
    cfg.shots = Some(ShotConfig {
        n_shots: 2000,
        n_groups: 10,
        seed: 1,
    });
    let crossings = |f: f64| {
        let t = kinetic_trajectory(&cfg, f).unwrap();
        count_crossings(t.column("K1").unwrap(), t.column("K4").unwrap())
    };
    let (up, down) = (crossings(15.0), crossings(-15.0));
    assert!(up > 0);
    assert_eq!(down, 0);
}

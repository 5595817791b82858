//! End-to-end tests of the `simop` binary: exit codes, file outputs,
//! determinism, and the closed-form evolution checks.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use simop_core::evolution::EvolutionState;
use simop_core::linalg::c64;
use simop_core::potential::PotentialSpec;
use simop_core::similarity::{similarity_transform, SimilarityOptions};
use simop_core::TruncationWindow;

fn simop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simop"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const GOLDEN: &str = r#"{
  "omega": 6.283185307179586,
  "dim": 1,
  "half_width": 8,
  "potential": {"type": "constant", "c": 10.0}
}"#;

#[test]
fn spectrum_csv_contains_the_expected_golden_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.json", GOLDEN);
    let out = simop(&["spectrum", "--config", &config, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
    assert!(csv.starts_with("block,re,im\n"));
    // block 1 carries i sqrt(1 - 1/100) ~ 0.994987i
    let row = csv
        .lines()
        .find(|l| l.starts_with("1,"))
        .expect("mode 1 row");
    let fields: Vec<&str> = row.split(',').collect();
    let re: f64 = fields[1].parse().unwrap();
    let im: f64 = fields[2].parse().unwrap();
    assert_eq!(re, 0.0);
    assert!((im - 0.994987437106620).abs() < 1e-10);
    // manifest echoes the resolved config
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "spectrum");
    assert_eq!(manifest["config"]["tolerances"]["theta"], 0.5);
    assert_eq!(manifest["config"]["tolerances"]["max_iter"], 200);
}

#[test]
fn zero_potential_spectrum_is_the_imaginary_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
          "omega": 6.283185307179586,
          "dim": 1,
          "half_width": 6,
          "potential": {"type": "coefficients", "entries": []}
        }"#,
    );
    let out = simop(&["spectrum", "--config", &config, "--out", "o"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("o/spectrum.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let re: f64 = fields[1].parse().unwrap();
        let im: f64 = fields[2].parse().unwrap();
        assert_eq!(re, 0.0, "{line}");
        if fields[0] != "central" {
            let l: f64 = fields[0].parse().unwrap();
            assert!((im - l).abs() < 1e-12, "{line}");
        }
    }
}

#[test]
fn malformed_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"omega": 6.28, "dim": 0, "half_width": 8, "potential": {"type": "constant", "c": 1.0}}"#,
    );
    let out = simop(&["spectrum", "--config", &config, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["error"]["exit_code"], 2);
    // missing --config is also a config error
    let out = simop(&["spectrum"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_configs_give_bit_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.json", GOLDEN);
    for args in [
        ["spectrum", "--config", &config, "--out", "a"],
        ["spectrum", "--config", &config, "--out", "b"],
    ] {
        let out = simop(&args, dir.path());
        assert!(out.status.success());
    }
    for name in ["spectrum.json", "spectrum.csv", "diagnostics.json", "run_manifest.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn zero_potential_evolution_translates_the_initial_mode() {
    // phi = mode 1 (so phi(s) = e^{is}), times [0, pi]: at t = pi the
    // physical samples are the initial ones shifted by pi, i.e. negated.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
          "omega": 6.283185307179586,
          "dim": 1,
          "half_width": 4,
          "potential": {"type": "coefficients", "entries": []},
          "times": [0.0, 3.141592653589793],
          "initial": {"type": "modes", "entries": [{"ell": 1, "value": [[1.0, 0.0]]}]},
          "grid_points": 16
        }"#,
    );
    let out = simop(&["evolve", "--config", &config, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let grid = fs::read_to_string(dir.path().join("o/trajectory_grid.csv")).unwrap();
    let mut first: Vec<(f64, f64)> = Vec::new();
    let mut second: Vec<(f64, f64)> = Vec::new();
    for line in grid.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if f[0] == 0.0 {
            first.push((f[3], f[4]));
        } else {
            second.push((f[3], f[4]));
        }
    }
    assert_eq!(first.len(), 16);
    assert_eq!(second.len(), 16);
    for ((re0, im0), (re1, im1)) in first.iter().zip(&second) {
        assert!((re0 + re1).abs() < 1e-9, "{re0} vs {re1}");
        assert!((im0 + im1).abs() < 1e-9);
    }
}

#[test]
fn eigenvector_initial_condition_has_constant_norm() {
    // initial condition = transform column through mode 1; the eigenvalue
    // is purely imaginary, so the l2 norm of the trajectory is constant
    let w = TruncationWindow::new(2.0 * std::f64::consts::PI, 1, 8).unwrap();
    let spec = PotentialSpec::constant_over(w, 10.0).unwrap();
    let sim = similarity_transform(&spec, &SimilarityOptions::default()).unwrap();
    let mode = EvolutionState::mode(w, 1, 0).unwrap();
    let phi = EvolutionState::from_coeffs(w, sim.transform.apply(mode.coeffs())).unwrap();
    let entries: Vec<String> = w
        .modes()
        .filter_map(|l| {
            let z = phi.mode_coeff(l)[0];
            if z.norm() > 0.0 {
                Some(format!(
                    r#"{{"ell": {l}, "value": [[{}, {}]]}}"#,
                    z.re, z.im
                ))
            } else {
                None
            }
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{
              "omega": 6.283185307179586,
              "dim": 1,
              "half_width": 8,
              "potential": {{"type": "constant", "c": 10.0}},
              "times": [0.0, 0.5, 1.0, 2.0],
              "initial": {{"type": "modes", "entries": [{}]}},
              "grid_points": 8
            }}"#,
            entries.join(",")
        ),
    );
    let out = simop(&["evolve", "--config", &config, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    let mut norms: std::collections::BTreeMap<String, f64> = Default::default();
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let re: f64 = f[3].parse().unwrap();
        let im: f64 = f[4].parse().unwrap();
        *norms.entry(f[0].to_string()).or_insert(0.0) += re * re + im * im;
    }
    let values: Vec<f64> = norms.values().map(|v| v.sqrt()).collect();
    for v in &values {
        assert!((v - values[0]).abs() < 1e-8, "norms {values:?}");
    }
}

#[test]
fn forced_transport_matches_the_closed_form_at_t_one() {
    // V = 0, phi = 0, forcing = mode 1: coefficient at t is
    // e^{it}(1 - e^{-it}) / i
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
          "omega": 6.283185307179586,
          "dim": 1,
          "half_width": 4,
          "potential": {"type": "coefficients", "entries": []},
          "times": [1.0],
          "initial": {"type": "modes", "entries": []},
          "forcing": {"entries": [{"ell": 1, "value": [[1.0, 0.0]]}]},
          "grid_points": 8
        }"#,
    );
    let out = simop(&["evolve", "--config", &config, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/trajectory.csv")).unwrap();
    let row = csv
        .lines()
        .find(|l| l.starts_with("1,1,0,"))
        .expect("mode 1 row at t=1");
    let f: Vec<&str> = row.split(',').collect();
    let got = c64(f[3].parse().unwrap(), f[4].parse().unwrap());
    let want = (c64(0.0, 1.0).exp() - c64(1.0, 0.0)) / c64(0.0, 1.0);
    assert!((got - want).norm() < 1e-8, "{got} vs {want}");
}

#[test]
fn zero_potential_validation_passes_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cfg.json",
        r#"{
          "omega": 6.283185307179586,
          "dim": 1,
          "half_width": 8,
          "potential": {"type": "coefficients", "entries": []}
        }"#,
    );
    let out = simop(&["validate", "--config", &config, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/validation.json")).unwrap())
            .unwrap();
    assert_eq!(report["all_pass"], true);
}

#[test]
fn sample_file_potential_round_trips() {
    // 0.2 cos(2 pi s / omega) sampled on a uniform grid, fed through the
    // CSV reader: the spectrum must match the same potential given by
    // coefficients {+1: 0.1, -1: 0.1}
    let dir = tempfile::tempdir().unwrap();
    let m = 64;
    let mut csv = String::new();
    for p in 0..m {
        let angle = 2.0 * std::f64::consts::PI * (p as f64) / (m as f64);
        csv.push_str(&format!("{},0.0\n", 0.2 * angle.cos()));
    }
    fs::write(dir.path().join("v.csv"), csv).unwrap();
    let sampled = write_config(
        dir.path(),
        "sampled.json",
        r#"{
          "omega": 6.283185307179586,
          "dim": 1,
          "half_width": 8,
          "potential": {"type": "samples", "path": "v.csv"}
        }"#,
    );
    let explicit = write_config(
        dir.path(),
        "explicit.json",
        r#"{
          "omega": 6.283185307179586,
          "dim": 1,
          "half_width": 8,
          "potential": {"type": "coefficients", "entries": [
            {"n": 1, "matrix": [[[0.1, 0.0]]]},
            {"n": -1, "matrix": [[[0.1, 0.0]]]}
          ]}
        }"#,
    );
    let a = simop(&["spectrum", "--config", &sampled, "--out", "a"], dir.path());
    let b = simop(&["spectrum", "--config", &explicit, "--out", "b"], dir.path());
    assert!(a.status.success() && b.status.success());
    let sa = fs::read_to_string(dir.path().join("a/spectrum.csv")).unwrap();
    let sb = fs::read_to_string(dir.path().join("b/spectrum.csv")).unwrap();
    for (la, lb) in sa.lines().zip(sb.lines()).skip(1) {
        let fa: Vec<f64> = la.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        let fb: Vec<f64> = lb.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!((fa[0] - fb[0]).abs() < 1e-12 && (fa[1] - fb[1]).abs() < 1e-12);
    }
}

#[test]
fn diagnose_writes_monotone_gap_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "cfg.json", GOLDEN);
    let out = simop(
        &["diagnose", "--config", &config, "--out", "o", "--threads", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/equiconvergence.csv")).unwrap();
    let gaps: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(gaps.len(), 8);
    for w in gaps.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    let tail = fs::read_to_string(dir.path().join("o/tail.csv")).unwrap();
    for line in tail.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[3] <= f[2], "true error above bound: {line}");
    }
}

use std::path::Path;
use std::process::{Command, Output};

use uavsense::config::ConfigFile;
use uavsense::output::{read_csv, write_csv, RunManifest, CSV_HEADER};
use uavsense_core::beamforming::BeamformerKind;
use uavsense_core::config::AltitudeMode;
use uavsense_core::fusion::FusionRule;
use uavsense_core::sweep::{SweepParam, SweepRow};

fn uavsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavsense")).args(args).output().unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = uavsense(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn empty_config_gives_table_defaults() {
    let c = ConfigFile::from_toml_str("").unwrap().scenario().unwrap();
    assert_eq!(c.uav_count, 16);
    assert_eq!((c.symbols_per_frame, c.subcarriers, c.array_side, c.grid_side), (16, 64, 8, 20));
    assert!((c.wavelength() / 0.0125 - 1.0).abs() < 1e-3);
    assert!((c.ground_rcs - 1e-3).abs() < 1e-15);
    assert!((c.target_rcs - 10.0).abs() < 1e-12);
    assert!((c.noise_density / 10f64.powf(-20.4) - 1.0).abs() < 1e-12);
    assert_eq!(c.altitude, AltitudeMode::DerivedFromCoverage);
    assert_eq!(c.doppler, 0.0);
}

#[test]
fn overrides_and_validation() {
    let c = ConfigFile::from_toml_str("[scenario]\nground_rcs_dbsm = -10\n").unwrap();
    assert!((c.scenario().unwrap().ground_rcs - 0.1).abs() < 1e-15);

    let err = ConfigFile::from_toml_str("[scenario]\nuav_count = 15\n").unwrap().scenario().unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("uav_count") && msg.contains("U = 15"), "{msg}");

    let err = ConfigFile::from_toml_str("[scenario]\nground_rcs_dbsm = 20\n").unwrap().scenario().unwrap_err();
    assert!(err.to_string().contains("ground_rcs"), "{err}");

    assert!(ConfigFile::from_toml_str("[scenario]\nspeed = 3\n").is_err());
    assert!(ConfigFile::from_toml_str("[extra]\n").is_err());

    let bad_bf = ConfigFile::from_toml_str("[run]\nbeamformer = \"mvdr\"\n").unwrap();
    assert!(bad_bf.options().unwrap_err().to_string().contains("beamformer"));
}

fn row(value: Option<f64>, p: f64) -> SweepRow {
    SweepRow {
        sweep_param: value.map_or("none", |_| SweepParam::Antennas.as_str()).to_owned(),
        sweep_value: value,
        beamformer: BeamformerKind::LeastSquares,
        fusion: FusionRule::PrenormAverage,
        sigma_g_dbsm: -30.0,
        delta: 1,
        trials: 3,
        hits: 1,
        p_detect: p,
        ci95_halfwidth: 1.96 * (p * (1.0 - p) / 3.0).sqrt(),
        seed: u64::MAX,
    }
}

#[test]
fn csv_round_trips_exactly() {
    let rows = vec![row(Some(0.1 + 0.2), 1.0 / 3.0), row(None, 0.7)];
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert!(!text.contains(';'));
    assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    assert!(write_csv(&[], Vec::new()).is_err());
}

#[test]
fn run_emits_one_row() {
    let text = stdout_of(&["run", "--trials", "1"]);
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].trials, 1);
    assert_eq!(rows[0].sweep_value, None);
    assert_eq!((rows[0].beamformer, rows[0].fusion), (BeamformerKind::Capon, FusionRule::Average));
}

#[test]
fn selftest_passes() {
    let out = uavsense(&["selftest"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[scenario]\nuav_count = 15\n");
    let out = uavsense(&["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("uav_count"));
    assert!(!uavsense(&["sweep"]).status.success());
    assert!(!uavsense(&["sweep", "--preset", "fig9"]).status.success());
    assert!(!uavsense(&["run", "--fusion", "max"]).status.success());
    assert!(!uavsense(&["run", "--out", "/nonexistent/dir/out.csv", "--trials", "1"]).status.success());
}

#[test]
fn manifest_echo_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "[scenario]\nground_rcs_dbsm = -20\n\n[run]\ntrials = 4\nseed = 99\n\n[sweep]\nparam = \"cell_size_constant_area\"\nvalues = [4.0, 25.0]\nbeamformers = [\"capon\"]\ndeltas = [0, 2]\n",
    );
    let manifest_path = dir.path().join("m.json");
    let out = uavsense(&["sweep", "--config", &cfg, "--format", "json", "--out", manifest_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep value 4 is invalid"));

    let text = std::fs::read_to_string(&manifest_path).unwrap();
    let manifest = RunManifest::from_json_str(&text).unwrap();
    assert_eq!(manifest.master_seed, 99);
    assert_eq!(manifest.invalid_points.len(), 1);
    assert_eq!(manifest.rows.len(), 4);
    assert!(text.contains("-2.0000000000000000e+1") || text.contains("-2.0000000000000000e1"));

    let echo = write(dir.path(), "echo.json", &serde_json::to_string(&manifest.config).unwrap());
    let a = stdout_of(&["sweep", "--config", &cfg]);
    let b = stdout_of(&["sweep", "--config", &echo]);
    assert_eq!(a, b);
    assert_eq!(read_csv(a.as_bytes()).unwrap().len(), 4);
}

#[test]
fn cli_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[run]\ntrials = 9\nbeamformer = \"capon\"\n");
    let text = stdout_of(&["run", "--config", &cfg, "--trials", "2", "--beamformer", "ls", "--fusion", "prenorm", "--seed", "5", "--delta", "2"]);
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((r.trials, r.seed, r.delta), (2, 5, 2));
    assert_eq!((r.beamformer, r.fusion), (BeamformerKind::LeastSquares, FusionRule::PrenormAverage));
}

#[test]
fn reference_path_flag_runs() {
    let fast = read_csv(stdout_of(&["run", "--trials", "1", "--fast-path", "on", "--delta", "1"]).as_bytes()).unwrap();
    let slow = read_csv(stdout_of(&["run", "--trials", "1", "--fast-path", "off", "--delta", "1"]).as_bytes()).unwrap();
    assert_eq!(fast.len(), 1);
    assert_eq!(slow.len(), 1);
    assert_eq!(fast[0].trials, slow[0].trials);
}

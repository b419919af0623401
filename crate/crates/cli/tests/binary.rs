use sawtooth_cli::{run, Dataset, RunConfig};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets").join(format!("{name}.json"))
}

fn sawtooth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sawtooth"))
        .args(args)
        .env_remove("SAWTOOTH_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn error_record(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not an error record ({e}): {text}"))
}

#[test]
fn preset_run_writes_unit_labelled_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bands.csv");
    let res = sawtooth(&["bands", "--config", preset("fig1c").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "phi [rad],k [rad],omega_u [J_AA],omega_l [J_AA]");
    assert_eq!(text.lines().count(), 1 + 6 * 401);
}

#[test]
fn multi_table_runs_write_one_file_per_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bs.csv");
    let res = sawtooth(&["boundstate", "--config", preset("fig3").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    for t in ["energies", "wavefunction", "momentum"] {
        assert!(dir.path().join(format!("bs_{t}.csv")).exists(), "{t}");
    }
    let wf = std::fs::read_to_string(dir.path().join("bs_wavefunction.csv")).unwrap();
    assert!(wf.lines().next().unwrap().starts_with("m,n [cells],c_a_re,c_a_im,c_b_re,c_b_im"));
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("se.json");
    let cfg_path = preset("sm1");
    let res = sawtooth(&["selfenergy", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert!(res.status.success());
    let read = Dataset::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let direct = run(&RunConfig::load(&cfg_path).unwrap()).unwrap();
    assert_eq!(read, direct);
    assert_eq!(read.metadata.config_hash.len(), 64);
}

#[test]
fn stdout_gets_json_without_an_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command": "bands", "lattice": {"J_AA": 1, "J_AB": 1, "phi": 0.3}, "grids": {"k": {"values": [0.0, 1.0]}}}"#,
    );
    let res = sawtooth(&["bands", "--config", &cfg]);
    assert!(res.status.success());
    let data = Dataset::from_json(&String::from_utf8(res.stdout).unwrap()).unwrap();
    assert_eq!(data.tables[0].rows.len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = ["a.csv", "b.csv"]
        .iter()
        .map(|f| {
            let out = dir.path().join(f);
            let res = sawtooth(&["sweep", "--config", preset("sm3").to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "3"]);
            assert!(res.status.success());
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}

#[test]
fn empty_sweep_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command": "sweep", "lattice": {"J_AA": 1, "J_AB": 0.2, "phi": 0},
            "grids": {"delta": {"values": []}, "phi": {"values": [0.5]}},
            "options": {"sublattice": "B", "g": 0.1}}"#,
    );
    let out = dir.path().join("s.csv");
    let res = sawtooth(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(std::fs::read_to_string(out).unwrap(), "phi [rad],delta [J_AA],R_L_global\n");
}

#[test]
fn unknown_keys_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command": "bands", "lattice": {"J_AA": 1, "J_AB": 1, "phi": 0}, "grids": {"k": {"values": [0]}}, "colour": "red"}"#,
    );
    let res = sawtooth(&["bands", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    let rec = error_record(&res);
    assert_eq!(rec["kind"], "config");
    assert_eq!(rec["exit_code"], 2);
}

#[test]
fn command_mismatch_and_missing_file_are_config_errors() {
    let res = sawtooth(&["sweep", "--config", preset("fig1c").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = sawtooth(&["bands", "--config", "/nonexistent/run.json"]);
    assert_eq!(res.status.code(), Some(2));
    let res = sawtooth(&["bogus", "--config", "x.json"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_record(&res)["kind"], "config");
}

#[test]
fn in_band_spin_model_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"command": "spinmodel", "lattice": {"J_AA": 1, "J_AB": 1, "phi": 0},
            "emitters": [{"delta": -1, "g": 0.1, "sublattice": "A", "site": 0},
                         {"delta": -1, "g": 0.1, "sublattice": "A", "site": 2}]}"#,
    );
    let res = sawtooth(&["spinmodel", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_record(&res)["kind"], "numerical");
}

#[test]
fn help_exits_cleanly() {
    let res = sawtooth(&["--help"]);
    assert!(res.status.success());
    assert!(String::from_utf8_lossy(&res.stdout).contains("--config"));
}

//! End-to-end checks of the command-line interface: exit codes, CSV
//! determinism across worker counts, and config-file handling.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydgrover"))
}

#[test]
fn usage_error_exits_one() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["run", "--scheme", "bogus", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_seed_is_config_error() {
    let out = bin()
        .args(["run", "--preset", "ideal", "--k", "2", "--marked", "01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed"), "stderr: {err}");
}

#[test]
fn unknown_preset_reports_name() {
    let out = bin()
        .args(["run", "--preset", "zz", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zz"));
}

#[test]
fn ensemble_csv_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4", "8"] {
        let path = dir.path().join(format!("out_{threads}.csv"));
        let status = bin()
            .args([
                "run",
                "--preset",
                "ideal",
                "--k",
                "2",
                "--scheme",
                "direct",
                "--marked",
                "01",
                "--iterations",
                "1",
                "--trajectories",
                "16",
                "--seed",
                "42",
                "--threads",
                threads,
                "--out",
            ])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.contains("iteration,success_prob,std_err,n_traj"));
    assert!(text.contains("chacha8"));
}

#[test]
fn config_file_roundtrip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.toml");
    let out_path = dir.path().join("out.csv");
    fs::write(
        &cfg_path,
        r#"
k = 2
scheme = "direct"
marked = "11"
preset = "ideal"
iterations = 1
trajectories = 4
seed = 9
"#,
    )
    .unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("marked = 11"));

    // flag overrides the file
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--marked", "00", "--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("marked = 00"));
}

#[test]
fn bad_config_file_reports_key_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.toml");
    fs::write(&cfg_path, "k = 2\nscheme—bogus\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn trace_emits_population_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let status = bin()
        .args([
            "trace",
            "--preset",
            "ideal",
            "--k",
            "2",
            "--scheme",
            "ancilla",
            "--marked",
            "01",
            "--iterations",
            "1",
            "--seed",
            "3",
            "--out",
        ])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&path).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("time_s,pop_a0_q0,pop_a0_q1,pop_a0_r,pop_a0_o"));
    assert!(header.contains("pop_anc_g"));
    assert!(header.contains("laser_amp_anc_rad_s"));
}

#[test]
fn schedule_dump_via_cli() {
    let out = bin()
        .args([
            "schedule",
            "--preset",
            "b1",
            "--k",
            "2",
            "--scheme",
            "direct",
            "--marked",
            "01",
            "--iterations",
            "1",
            "--seed",
            "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rydberg_up(0)"));
    assert!(text.contains("idle"));
}

#[test]
fn mecheck_cli_passes_on_ideal_small_case() {
    let out = bin()
        .args([
            "mecheck",
            "--k",
            "2",
            "--scheme",
            "direct",
            "--marked",
            "01",
            "--preset",
            "a1",
            "--iterations",
            "1",
            "--trajectories",
            "60",
            "--seed",
            "11",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("result: PASS"), "{text}");
}

#[test]
fn mecheck_rejects_k4_with_usage_error() {
    let out = bin()
        .args([
            "mecheck", "--k", "4", "--marked", "0101", "--preset", "a1", "--seed", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

//! End-to-end checks of the command-line interface: exit statuses, artifact
//! layout, and the determinism contract on the diagnostics report.
//!
//! Each test drives the compiled binary through `std::process::Command`, so
//! these exercise exactly what a shell user sees: argument parsing, config
//! validation (all violations listed at once, status 3), artifact writing,
//! and the output-directory precedence (flag over environment variable).

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_meanfield"));
    // Isolate from any ambient output-directory override.
    cmd.env_remove("MEANFIELD_OUTPUT_DIR");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary failed to launch")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

/// A fast forward run: 64 cells, 32 steps, quarter horizon.
const SMALL: &str = "[domain]\npoints = 64\ntime_steps = 32\nhorizon = 0.25\n";

#[test]
fn help_exits_zero_and_shows_subcommands() {
    let out = run(bin().arg("--help"));
    assert!(out.status.success());
    let text = stdout_of(&out);
    for sub in [
        "solve-fp",
        "solve-hjb",
        "solve-mfg",
        "simulate-particles",
        "verify",
    ] {
        assert!(text.contains(sub), "usage text misses {sub}:\n{text}");
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = run(bin().arg("solve-everything"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("solve-everything"));
}

#[test]
fn config_violations_are_all_reported_with_status_3() {
    let dir = tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[domain]\ndim = 7\npoints = 100\n\n[solver]\nmax_outer = 0\n",
    );
    let out = run(bin()
        .arg("solve-fp")
        .arg("--config")
        .arg(&config)
        .arg("--output")
        .arg(dir.path().join("out")));
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    // One line per violation, each naming section and key.
    for needle in ["domain.dim", "domain.points", "solver.max_outer"] {
        assert!(err.contains(needle), "missing {needle} in:\n{err}");
    }
}

#[test]
fn solve_fp_writes_fields_and_a_deterministic_report() {
    let dir = tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out_dir in [&out_a, &out_b] {
        let out = run(bin()
            .arg("solve-fp")
            .arg("--config")
            .arg(&config)
            .arg("--output")
            .arg(out_dir));
        assert!(
            out.status.success(),
            "solve-fp failed:\n{}",
            stderr_of(&out)
        );
    }

    // Dumps every 16th slice plus endpoints, final slice also as CSV.
    for name in ["density_0000.fld", "density_0016.fld", "density_0032.fld"] {
        assert!(out_a.join(name).exists(), "missing {name}");
    }
    let bytes = std::fs::read(out_a.join("density_0000.fld")).unwrap();
    assert_eq!(&bytes[..8], b"MFGFLD01", "field dump magic");
    assert_eq!(bytes.len(), 32 + 64 * 8, "header plus 64 samples");

    let csv = std::fs::read_to_string(out_a.join("density_final.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,value"));
    assert_eq!(lines.count(), 64);

    // Identical configuration twice: byte-identical report, no clock leaks.
    let report_a = std::fs::read(out_a.join("report.json")).unwrap();
    let report_b = std::fs::read(out_b.join("report.json")).unwrap();
    assert_eq!(report_a, report_b);
    let text = String::from_utf8(report_a).unwrap();
    assert!(!text.contains("timestamp"));
    assert!(text.contains("\"mass_drift\""));
}

#[test]
fn output_directory_flag_beats_environment_override() {
    let dir = tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");

    // Environment variable alone routes the artifacts.
    let out = run(bin()
        .arg("solve-fp")
        .arg("--config")
        .arg(&config)
        .env("MEANFIELD_OUTPUT_DIR", &env_dir));
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(env_dir.join("report.json").exists());

    // An explicit flag wins over the environment.
    let out = run(bin()
        .arg("solve-fp")
        .arg("--config")
        .arg(&config)
        .arg("--output")
        .arg(&flag_dir)
        .env("MEANFIELD_OUTPUT_DIR", dir.path().join("ignored")));
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(flag_dir.join("report.json").exists());
    assert!(!dir.path().join("ignored").join("report.json").exists());
}

#[test]
fn unconverged_equilibrium_still_writes_artifacts_and_exits_2() {
    let dir = tempdir().unwrap();
    // One outer sweep at an unreachable tolerance cannot converge.
    let config = write_config(
        dir.path(),
        "[domain]\npoints = 64\ntime_steps = 32\nhorizon = 0.25\n\n\
         [solver]\nmax_outer = 1\ntolerance = 1e-15\n",
    );
    let out_dir = dir.path().join("out");
    let out = run(bin()
        .arg("solve-mfg")
        .arg("--config")
        .arg(&config)
        .arg("--output")
        .arg(&out_dir));
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    // Diagnostics are written even for the failed run.
    assert!(out_dir.join("report.json").exists());
    assert!(out_dir.join("residual_history.csv").exists());
    let text = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(text.contains("\"converged\": false"));
}

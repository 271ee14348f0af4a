//! Black-box tests of the `csit` binary: exit codes, the machine-readable
//! error line, CSV emission, and environment overrides.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csit"))
}

fn write_config(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const TINY: &str = r#"
m = 24
n = 2
k = 3
t = 16
p_db = 15.0
s_c = 2
s = 4
trials = 4
seed = 5
sweep_var = "T"
sweep_values = [12.0, 16.0]
algorithms = ["jomp", "ls"]
ric_trials = 0
"#;

#[test]
fn run_emits_csv_with_fixed_schema() {
    let dir = tempdir();
    let cfg = write_config(&dir, "tiny.toml", TINY);
    let out = dir.join("out.csv");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_var,sweep_value,algorithm,nmse_mean,nmse_stderr,nmae_mean,nmae_stderr,\
         pr_theta_c,pr_theta_i_mean,time_s_mean,bound_pr_c,bound_pr_i,bound_nmae,bound_valid"
    );
    // 2 sweep points x 2 algorithms
    assert_eq!(lines.count(), 4);
}

#[test]
fn missing_config_fails_with_machine_readable_error() {
    let output = bin()
        .args(["run", "--config", "/definitely/not/here.toml"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    let line = stderr.lines().last().unwrap();
    let parsed: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(parsed.get("error").is_some());
}

#[test]
fn invalid_config_value_is_rejected() {
    let dir = tempdir();
    let cfg = write_config(&dir, "bad.toml", "s = 40\nm = 24\n");
    let output = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("{\"error\""));
}

#[test]
fn env_override_changes_trial_count_deterministically() {
    let dir = tempdir();
    let cfg = write_config(&dir, "tiny.toml", TINY);
    let a = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .env("CSIT_TRIALS", "2")
        .env("CSIT_SWEEP_VALUES", "16")
        .output()
        .unwrap();
    assert!(a.status.success());
    let b = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .env("CSIT_TRIALS", "2")
        .env("CSIT_SWEEP_VALUES", "16")
        .output()
        .unwrap();
    let strip_time = |s: &[u8]| -> Vec<String> {
        String::from_utf8(s.to_vec())
            .unwrap()
            .lines()
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                if cols.len() > 9 {
                    let mut cols = cols;
                    cols[9] = "-";
                    cols.join(",")
                } else {
                    l.to_string()
                }
            })
            .collect()
    };
    assert_eq!(strip_time(&a.stdout), strip_time(&b.stdout));
    // 1 sweep point x 2 algorithms + header
    assert_eq!(strip_time(&a.stdout).len(), 3);
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "csit-cli-test-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

//! End-to-end checks of the `bacsim` binary: exit codes, validation
//! diagnostics, and byte-identical reruns.

use std::path::Path;
use std::process::Command;

fn bacsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bacsim"))
}

fn write_synth_config(dir: &Path, out_name: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    let text = format!(
        r#"
[synth]
cp_count = 6
sessions_per_cp = 5
seed = 99
start_hour_weights = [1,1,1,1,1,1,1,1,1,1,1,1,2,6,6,6,6,6,6,6,6,2,1,1]
plugin_duration = {{ mu = 2.2, sigma = 0.6 }}
raw_energy = {{ mu = 2.1, sigma = 0.5 }}
ev_max_bands = [{{ min_kw = 3.0, max_kw = 7.0, weight = 1.0 }}]

[sweep]
grid_kw = [3.0]
pack_counts = [0, 1]

[run]
output_dir = "{out_name}"
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_accepts_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_config(dir.path(), "out");
    let output = bacsim().arg(&config).arg("--validate").output().unwrap();
    assert!(output.status.success(), "{output:?}");
    assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), "ok");
}

#[test]
fn validate_lists_all_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        r#"
[sweep]
grid_kw = []
pack_counts = []

[battery]
pack_power_kw = 0.0
"#,
    )
    .unwrap();
    let output = bacsim().arg(&path).arg("--validate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("pack_power_kw"), "{stdout}");
    assert!(stdout.contains("grid_kw"), "{stdout}");
    assert!(stdout.matches("violation:").count() >= 4, "{stdout}");
}

#[test]
fn dataset_and_synth_together_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_config(dir.path(), "out");
    let mut text = std::fs::read_to_string(&config).unwrap();
    text.push_str("\n[dataset]\npath = \"x.csv\"\nflavor = \"domestic\"\n");
    std::fs::write(&config, text).unwrap();
    let output = bacsim().arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("found both"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let output = bacsim().arg("/nonexistent/scenario.toml").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_dataset_file_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    std::fs::write(
        &path,
        r#"
[dataset]
path = "definitely-missing.csv"
flavor = "domestic"

[sweep]
grid_kw = [3.0]
pack_counts = [0]
"#,
    )
    .unwrap();
    let output = bacsim().arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("definitely-missing.csv"));
}

#[test]
fn run_is_reproducible_and_quiet_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_config(dir.path(), "out");

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = bacsim()
            .arg(&config)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{}",
            String::from_utf8_lossy(&output.stderr)
        );
        // Machine outputs go to files; stdout stays clean for scripting.
        assert!(output.stdout.is_empty());
        assert!(!output.stderr.is_empty());
    }

    let mut names: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "sweep.csv"));
    for name in names {
        let a = std::fs::read(out_a.join(&name)).unwrap();
        let b = std::fs::read(out_b.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }
}

#[test]
fn workers_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_config(dir.path(), "out");
    let out_a = dir.path().join("w1");
    let out_b = dir.path().join("w4");
    assert!(bacsim()
        .arg(&config)
        .arg("--out")
        .arg(&out_a)
        .arg("--workers")
        .arg("1")
        .status()
        .unwrap()
        .success());
    assert!(bacsim()
        .arg(&config)
        .arg("--out")
        .arg(&out_b)
        .arg("--workers")
        .arg("4")
        .status()
        .unwrap()
        .success());
    let a = std::fs::read(out_a.join("sweep.csv")).unwrap();
    let b = std::fs::read(out_b.join("sweep.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seed_flag_overrides_synth_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_synth_config(dir.path(), "out");
    let out_a = dir.path().join("s1");
    let out_b = dir.path().join("s2");
    assert!(bacsim()
        .arg(&config)
        .arg("--out")
        .arg(&out_a)
        .arg("--seed")
        .arg("1")
        .status()
        .unwrap()
        .success());
    assert!(bacsim()
        .arg(&config)
        .arg("--out")
        .arg(&out_b)
        .arg("--seed")
        .arg("2")
        .status()
        .unwrap()
        .success());
    let a = std::fs::read(out_a.join("synth_dataset.csv")).unwrap();
    let b = std::fs::read(out_b.join("synth_dataset.csv")).unwrap();
    assert_ne!(a, b);
}

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_randspace"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn fixtures_lists_headline_entries() {
    let out = bin().arg("fixtures").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("iid-p05") && text.contains("ln 2"));
    assert!(text.contains("delta-witness"));
    assert_eq!(text.lines().count(), randspace_cli::fixtures::FIXTURES.len());

    let filtered = bin().args(["fixtures", "ruler"]).output().unwrap();
    assert_eq!(String::from_utf8(filtered.stdout).unwrap().lines().count(), 1);
}

#[test]
fn run_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin()
        .args(["run", "--fixture", "iid-p05", "--seed", "11", "--format", "csv", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    for art in manifest["artifacts"].as_array().unwrap() {
        let bytes = std::fs::read(out.join(art["path"].as_str().unwrap())).unwrap();
        assert_eq!(art["sha256"].as_str().unwrap(), randspace_cli::sha256_hex(&bytes));
        assert_eq!(art["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
    let csv = std::fs::read_to_string(out.join("configurations.csv")).unwrap();
    assert!(csv.starts_with("configuration,probability"));
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "kind = \"model-a\"\n[walkers]\np_right = [1.0, 0.5]\n");
    let out = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("walkers.p_right"));

    let unparsable = write_config(dir.path(), "kind = \"nope\"\n");
    assert_eq!(bin().args(["run", "--config"]).arg(&unparsable).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["run", "--fixture", "missing"]).status().unwrap().code(), Some(2));
}

#[test]
fn failed_checks_exit_with_three() {
    // Too few points for the searches to find any witness.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "kind = \"distances\"\n[distances]\nwindow = 3\nmax_points = 3\nasymmetry_window = 2\nasymmetry_max_points = 3\nsearch_window = 3\nsearch_min_points = 3\nsearch_max_points = 3\nsearch_trials = 5\n",
    );
    let status = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn config_hash_ignores_output_location() {
    let a = randspace_cli::fixtures::load("eur-p05").unwrap();
    let mut b = a.clone();
    b.out = "elsewhere".into();
    b.workers = Some(4);
    assert_eq!(a.canonical_json(), b.canonical_json());
    b.seed += 1;
    assert_ne!(a.canonical_json(), b.canonical_json());
}

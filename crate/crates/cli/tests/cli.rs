use delayrec::{run, CliError, ExperimentReport, LoadedConfig, RunOptions};
use std::path::{Path, PathBuf};
use std::process::Command;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> LoadedConfig {
    LoadedConfig::load(&config_path(name)).unwrap()
}

fn options(out: &Path) -> RunOptions {
    RunOptions {
        out: Some(out.to_path_buf()),
        ..RunOptions::default()
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delayrec"))
}

fn read(path: PathBuf) -> Vec<u8> {
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn identity_entropy_is_zero() {
    let out = tempfile::tempdir().unwrap();
    let outcome = run(&load("identity-entropy.toml"), &options(out.path())).unwrap();
    assert!(outcome.report.passed);
    let h = outcome.report.payload["estimate"]["h_estimate"].as_f64().unwrap();
    assert!(h.abs() <= 0.01, "{h}");
    let dir = out.path().join("identity-entropy");
    assert_eq!(outcome.dir, dir);
    for file in ["report.json", "payload.json", "entropy.csv", "entropy.svg"] {
        assert!(dir.join(file).is_file(), "{file}");
    }
    let csv = String::from_utf8(read(dir.join("entropy.csv"))).unwrap();
    assert!(csv.starts_with("side,epsilon,n,s_n_lower,ln_s,exact\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 6);
}

#[test]
fn doubling_coincidences_vanish() {
    let out = tempfile::tempdir().unwrap();
    let outcome = run(&load("doubling-coincide.toml"), &options(out.path())).unwrap();
    assert!(outcome.report.passed);
    let report = &outcome.report.payload["report"];
    assert_eq!(report["count"], 0);
    assert_eq!(report["violated"], false);
    assert_eq!(report["verdict"]["verdict"], "separated");
}

#[test]
fn same_config_and_seed_give_identical_bytes() {
    for name in [
        "tent-embed.toml",
        "square-chainrec.toml",
        "tent-scan.toml",
        "doubling-tsp-search.toml",
    ] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let loaded = load(name);
        let first = run(&loaded, &options(a.path())).unwrap();
        let second = run(&loaded, &options(b.path())).unwrap();
        let files: Vec<String> = std::fs::read_dir(&first.dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|f| f != "report.json")
            .collect();
        assert!(files.iter().any(|f| f.ends_with(".csv")), "{name}");
        for file in &files {
            assert_eq!(read(first.dir.join(file)), read(second.dir.join(file)), "{name}/{file}");
        }
        let mut r1 = first.report.clone();
        let mut r2 = second.report.clone();
        r1.wall_time_seconds = 0.0;
        r2.wall_time_seconds = 0.0;
        assert_eq!(r1, r2, "{name}");
    }
}

#[test]
fn echoed_config_round_trips() {
    let out = tempfile::tempdir().unwrap();
    let loaded = load("doubling-entropy-equality.toml");
    let mut small = loaded.clone();
    let entropy = small.config.entropy.as_mut().unwrap();
    entropy.mesh = 2f64.powi(-10);
    entropy.epsilons = vec![0.25, 0.125];
    entropy.ns = (2..=7).collect();
    small.text = toml::to_string(&small.config).unwrap();
    let outcome = run(&small, &options(out.path())).unwrap();
    let text = String::from_utf8(read(outcome.dir.join("report.json"))).unwrap();
    let report: ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.config, small.text);
    assert_eq!(LoadedConfig::parse(&report.config).unwrap().config, small.config);
    assert_eq!(report.tool_version, env!("CARGO_PKG_VERSION"));
    assert_eq!(report.seed, Some(2));
    assert_eq!(report.provenance.len(), 64);
    assert!(report.payload["equality"]["h_sigma"].is_number());
}

#[test]
fn seed_flag_overrides_the_config() {
    let out = tempfile::tempdir().unwrap();
    let loaded = load("tent-scan.toml");
    let base = run(&loaded, &options(out.path())).unwrap();
    let overridden = run(
        &loaded,
        &RunOptions {
            seed: Some(99),
            ..options(out.path())
        },
    )
    .unwrap();
    assert_eq!(overridden.report.seed, Some(99));
    assert_ne!(base.report.provenance, overridden.report.provenance);
    assert_ne!(base.report.payload, overridden.report.payload);
}

#[test]
fn missing_seed_is_a_config_error() {
    let mut loaded = load("tent-scan.toml");
    loaded.config.seed = None;
    let out = tempfile::tempdir().unwrap();
    match run(&loaded, &options(out.path())) {
        Err(CliError::Config { path, .. }) => assert_eq!(path, "seed"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unsupported_combinations_are_refused() {
    let text = std::fs::read_to_string(config_path("doubling-tsp-search.toml")).unwrap();
    let finite = text
        .replace("kind = \"circle\"", "kind = \"finite\"\nsize = 3")
        .replace("map = \"doubling\"", "map = \"finite_map\"\ntable = [1, 2, 0]");
    let out = tempfile::tempdir().unwrap();
    let err = run(&LoadedConfig::parse(&finite).unwrap(), &options(out.path())).unwrap_err();
    assert!(matches!(err, CliError::Refused(_)), "{err:?}");

    let mismatched = text.replace("kind = \"circle\"", "kind = \"gasket\"\ndepth = 4");
    let err = run(&LoadedConfig::parse(&mismatched).unwrap(), &options(out.path())).unwrap_err();
    assert!(
        matches!(err, CliError::Config { ref path, .. } if path == "system"),
        "{err:?}"
    );
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| {
        let o = bin().args(args).arg("--out").arg(out.path()).output().unwrap();
        (
            o.status.code().unwrap(),
            String::from_utf8_lossy(&o.stderr).into_owned(),
        )
    };
    let pass = config_path("doubling-tsp-hand.toml");
    assert_eq!(status(&["tsp", "--config", pass.to_str().unwrap()]).0, 0);
    let fail = config_path("identity-tsp.toml");
    assert_eq!(status(&["run", "--config", fail.to_str().unwrap()]).0, 1);

    let (code, stderr) = status(&["entropy", "--config", pass.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("`command`"), "{stderr}");

    let bad = out.path().join("bad.toml");
    std::fs::write(
        &bad,
        "name = \"bad\"\ncommand = \"tsp\"\n[tsp]\nk = \"two\"\neta = 0.3\nd = 1\n",
    )
    .unwrap();
    let (code, stderr) = status(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("`tsp.k`"), "{stderr}");
    let (code, _) = status(&["run", "--config", out.path().join("absent.toml").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn output_root_comes_from_the_environment() {
    let out = tempfile::tempdir().unwrap();
    let config = config_path("tent-infer-orbit.toml");
    let o = bin()
        .args(["infer-orbit", "--config", config.to_str().unwrap(), "--threads", "1"])
        .env("DELAYREC_OUT", out.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let payload: serde_json::Value =
        serde_json::from_slice(&read(out.path().join("tent-infer-orbit/payload.json"))).unwrap();
    assert_eq!(payload["verdict"]["declared_equal_from"], 3);
    assert_eq!(payload["merged_at"], 1);
}

#[test]
fn reruns_overwrite_the_run_directory() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().join("doubling-coincide");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("payload.json"), "stale").unwrap();
    run(&load("doubling-coincide.toml"), &options(out.path())).unwrap();
    assert_ne!(read(dir.join("payload.json")), b"stale");
    let entries = std::fs::read_dir(out.path()).unwrap().count();
    assert_eq!(entries, 1);
}

#[test]
fn verify_rechecks_the_separator() {
    let out = tempfile::tempdir().unwrap();
    let outcome = run(
        &load("doubling-tsp-hand.toml"),
        &RunOptions {
            verify: true,
            ..options(out.path())
        },
    )
    .unwrap();
    assert!(outcome.report.passed);
    assert_eq!(outcome.report.payload["verification"]["samples"], 80_000);
    assert_eq!(outcome.report.payload["verification"]["verified"], true);
}

#[test]
fn oracle_suite_default_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["oracle-suite", "--verify", "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("PASS finite: 6826 of 6826 cases"), "{stdout}");
    assert!(stdout.contains("PASS analytic_cr"), "{stdout}");
}

#[test]
fn oracle_suite_detects_a_corrupted_shift() {
    let out = tempfile::tempdir().unwrap();
    let mut loaded = load("oracle-suite.toml");
    loaded.config.oracle.as_mut().unwrap().fault = true;
    let outcome = run(&loaded, &options(out.path())).unwrap();
    assert!(!outcome.report.passed);
    assert_eq!(outcome.exit_code(), 1);
    let finite = &outcome.report.payload["result"]["suites"][0];
    assert_eq!(finite["suite"], "finite");
    let witness = finite["failures"][0]["witness"].as_str().unwrap();
    assert!(witness.contains("outcome"), "{witness}");
    let csv = String::from_utf8(read(outcome.dir.join("failures.csv"))).unwrap();
    assert!(csv.starts_with("suite,case,witness\n"));
}

#[test]
fn oracle_suite_needs_a_selection() {
    let out = tempfile::tempdir().unwrap();
    let empty = out.path().join("empty.toml");
    std::fs::write(&empty, "name = \"empty\"\n[oracle]\nsuites = []\n").unwrap();
    let o = bin()
        .args(["oracle-suite", "--config", empty.to_str().unwrap(), "--out"])
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no suites selected"));
}

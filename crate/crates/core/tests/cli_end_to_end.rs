//! The binary's entry point on shipped scenario files.

use std::fs;
use std::path::{Path, PathBuf};

use osserman_lab::cli::main_with_args;

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["osserman-lab".to_string()];
    args.extend(extra.iter().map(|s| s.to_string()));
    args.extend(["--config".into(), config.display().to_string(), "--out".into(), out.display().to_string()]);
    main_with_args(args)
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

/// Everything but the timestamp line.
#[cfg(feature = "parallel")]
fn stable_report(out: &Path) -> String {
    fs::read_to_string(out.join("report.json"))
        .unwrap()
        .lines()
        .filter(|l| !l.contains("generated_at_unix"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn fixtures_classify_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["e2_1", "e2_2", "e2_3", "e2_4"] {
        let out = dir.path().join(name);
        let code = run(&manifest(&format!("fixtures/{name}.toml")), &out, &["run"]);
        assert_eq!(code, 0, "{name}");
        let r = report(&out);
        assert_eq!(r["verify"]["result"], "PASS", "{name}");
        assert_ne!(r["classify"]["verdict"]["outcome"], "Trivial", "{name}");
        assert!(out.join("solutions/witness.csv").exists());
    }
}

#[test]
fn tolerance_flag_reaches_verify() {
    let dir = tempfile::tempdir().unwrap();
    // a residual floor above the fixture's margin turns PASS into FAIL
    let code = run(&manifest("fixtures/e2_1.toml"), dir.path(), &["verify", "--tol=-1.5"]);
    assert_eq!(code, 0);
    assert_eq!(report(dir.path())["verify"]["result"], "FAIL");
}

#[cfg(feature = "parallel")]
#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = manifest("scenarios/sweep_lambda_l.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&cfg, &a, &["run"]), 0);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    one.install(|| assert_eq!(run(&cfg, &b, &["run"]), 0));
    assert_eq!(fs::read(a.join("phase.csv")).unwrap(), fs::read(b.join("phase.csv")).unwrap());
    assert_eq!(stable_report(&a), stable_report(&b));
}

#[test]
fn strict_exits_two_on_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    // lambda = 1/2 with l = -2: growth integral diverges, potential converges
    let cfg = dir.path().join("inconclusive.toml");
    fs::write(
        &cfg,
        "name = \"inconclusive\"\ntasks = [\"classify\"]\n[problem]\np = 2\nn = 3\n[b]\nterm = \"r^0\"\n[q]\nterm = \"r^-2\"\n[g]\nkind = \"power\"\nlambda = \"1/2\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &["run"]), 0);
    assert_eq!(report(&out)["classify"]["verdict"]["outcome"], "Inconclusive");
    assert_eq!(run(&cfg, &out, &["run", "--strict"]), 2);
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[problem]\np = \"two\"\n").unwrap();
    assert_eq!(run(&cfg, &dir.path().join("out"), &["classify"]), 1);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rcsn_harness::output::{read_manifest, read_summary, sha256_file, MANIFEST_FILE, SUMMARY_FILE, TRACE_DIR};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn rcsn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcsn")).args(args).output().expect("binary runs")
}

fn run(cfg: &Path, out: &Path) -> Output {
    rcsn(&["run", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
}

#[test]
fn trust_region_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("experiment2_small.json"), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let traces = fs::read_dir(dir.path().join(TRACE_DIR)).unwrap().count();
    assert_eq!(traces, 120);
    let summary = read_summary(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.len(), 120);

    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.runs, 120);
    assert_eq!(manifest.files.len(), 121);
    assert_eq!(manifest.seeds, (1..=10).collect::<Vec<u64>>());
    for f in &manifest.files {
        let (sha, bytes) = sha256_file(&dir.path().join(&f.path)).unwrap();
        assert_eq!((sha.as_str(), bytes), (f.sha256.as_str(), f.bytes), "{}", f.path);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config("experiment3_small.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run(&cfg, a.path()).status.success());
    let parallel = rcsn(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        b.path().to_str().unwrap(),
        "--jobs",
        "3",
    ]);
    assert!(parallel.status.success());
    let read = |d: &Path| fs::read(d.join(SUMMARY_FILE)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));

    let ma = read_manifest(a.path()).unwrap();
    let mb = read_manifest(b.path()).unwrap();
    let summary_hash = |m: &rcsn_harness::output::Manifest| {
        m.files.iter().find(|f| f.path == SUMMARY_FILE).map(|f| f.sha256.clone())
    };
    assert_eq!(summary_hash(&ma), summary_hash(&mb));
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(config("example_max_affine.json")).unwrap()).unwrap();
    v["settings"]["solver"]["beta"] = serde_json::json!(1.5);
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, v.to_string()).unwrap();

    let out = run(&cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta"));
    assert!(!dir.path().join("out").join(MANIFEST_FILE).exists());
}

#[test]
fn summarize_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(run(&config("experiment3_small.json"), dir.path()).status.success());

    let out = rcsn(&["summarize", "--out-dir", d]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("projected_newton"), "{text}");
    assert!(text.contains("dca_fbe vs projected_newton"), "{text}");

    for (kind, header) in [
        ("objective", "instance_id,solver,k,phi"),
        ("stepsize", "instance_id,solver,k,phi,tau,backtracks"),
        ("ratio", "instance_id,seed,solver,reference,iter_ratio,time_ratio,score_diff"),
    ] {
        let out = rcsn(&["plotdata", "--out-dir", d, "--kind", kind, "--reference", "dca_fbe"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = fs::read_to_string(dir.path().join("plots").join(format!("{kind}.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some(header));
        assert!(csv.lines().count() > 1);
    }
    // 200 instances, two non-reference solvers.
    let ratio = fs::read_to_string(dir.path().join("plots/ratio.csv")).unwrap();
    assert_eq!(ratio.lines().count(), 1 + 400);

    let out = rcsn(&["plotdata", "--out-dir", d, "--kind", "ratio", "--reference", "missing"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rcsn(&["summarize", "--out-dir", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

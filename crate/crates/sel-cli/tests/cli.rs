use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sel"))
        .args(args)
        .current_dir(dir)
        .env("SEL_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn without_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("generated_at");
    v
}

#[test]
fn classify_reports_subcase_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = sel(dir.path(), &["classify", "--quad", "0.25,0.25,0.25,0.25"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["existence"], "E1");
    assert_eq!(report["subcase"], "III");
    assert_eq!(report["unique"], true);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(summary["result"]["subcase"], "III");
}

#[test]
fn strong_weight_is_refused_with_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    for q in ["2", "3.5"] {
        let out = sel(dir.path(), &["solve-scalar", "--p", "0.3", "--q-w", q]);
        assert_eq!(out.status.code(), Some(4));
        let err = stderr_json(&out);
        assert_eq!(err["error"], "regime_unsupported");
        assert!(err["reference"].as_str().unwrap().contains("q >= 2"));
    }
    assert!(!dir.path().join("u.csv").exists());
}

#[test]
fn nonexistent_system_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = sel(dir.path(), &["solve-system", "--quad", "0,2,0.5,0"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_json(&out)["reference"].as_str().unwrap().contains("non-existence"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[grid]\nn = 10\nspacing = 2\n").unwrap();
    let out = sel(dir.path(), &["eigen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("spacing"));

    let out = sel(dir.path(), &["classify", "--quad", "0.1,0.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");

    let out = sel(dir.path(), &["run"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "command = \"solve-scalar\"\n[grid]\nn = 60\ngrading = { kind = \"uniform\" }\n[scalar]\np = 0.2\nweight = { form = \"power\", q_w = 0.3 }\n[solver]\nrefinement_check = 0.2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("flagged");
    let out = sel(dir.path(), &["solve-scalar", "--config", cfg.to_str().unwrap(), "--n", "40", "--output-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(out_dir.join("u.csv")).unwrap().lines().count();
    assert_eq!(rows, 40 + 1);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["grid"]["n"], 40);
    assert_eq!(summary["config"]["scalar"]["p"], 0.2);

    let out = sel(dir.path(), &["run", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(dir.path().join("u.csv")).unwrap().lines().count(), 60 + 1);
}

#[test]
fn solver_failure_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = sel(dir.path(), &["solve-system", "--quad", "0.25,0.25,0.25,0.25", "--n", "60", "--max-iter", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["partial_artifacts"].as_array().unwrap().len(), 3);
    for f in ["u.csv.partial", "v.csv.partial", "summary.json.partial"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("u.csv").exists());
}

#[test]
fn sweep_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["sweep", "--p", "0,0.9,0.1", "--q", "0.1,1,0.1", "--r", "0.1,1,0.1", "--s", "0,0.9,0.1"];
    for (d, jobs) in [(&a, "1"), (&b, "4")] {
        fs::create_dir(d).unwrap();
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--jobs", jobs]);
        assert!(sel(d, &full).status.success());
    }
    let csv_a = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(String::from_utf8(csv_a).unwrap().lines().count(), 10_000 + 1);
    assert_eq!(without_timestamp(&a.join("summary.json")), without_timestamp(&b.join("summary.json")));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = sel(dir.path(), &["sweep", "--q", "0,0,1"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("p,q,r,s,det"));
}

#[test]
fn acceptance_subset_emits_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = sel(dir.path(), &["acceptance", "--only", "1,9", "--jobs", "2"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[PASS]  1") && stdout.contains("[PASS]  9"), "{stdout}");
    let table = fs::read_to_string(dir.path().join("acceptance.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn shipped_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        // the barrier command is cheap, so it stands in for loading each file
        let out = sel(dir.path(), &["barrier", "--config", path.to_str().unwrap(), "--b", "0.5"]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert!(seen >= 3);
}

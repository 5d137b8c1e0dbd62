//! End-to-end CLI behavior: exit codes, validation ordering, cache resume,
//! bundle verification, and determinism of regenerated artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_moralign")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn moralign")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Generates the synthetic data set once per test directory.
fn synth_into(dir: &Path) {
    let output = run(
        dir,
        &["synth", "--out", ".", "--seed", "7", "--survey", "wvs"],
    );
    assert_exit(&output, 0);
}

#[test]
fn missing_country_map_fails_validation_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    fs::remove_file(dir.path().join("wvs_countries.csv")).unwrap();
    let output = run(dir.path(), &["ingest", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 1);
    assert!(stderr(&output).contains("country map not found"));
    // Validation happened before the output directory was touched.
    assert!(!dir.path().join("out-wvs").exists());
}

#[test]
fn unknown_model_id_fails_immediately() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    assert_exit(
        &run(dir.path(), &["ingest", "--config", "moralign-wvs.toml"]),
        0,
    );
    let config = dir.path().join("moralign-wvs.toml");
    let text = fs::read_to_string(&config)
        .unwrap()
        .replace("model_id = \"mock-small\"", "model_id = \"gpt-nowhere\"");
    fs::write(&config, text).unwrap();
    let output = run(dir.path(), &["probe", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 1);
    assert!(stderr(&output).contains("unknown to the"));
}

#[test]
fn analyze_without_probe_names_the_producing_command() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    assert_exit(
        &run(dir.path(), &["ingest", "--config", "moralign-wvs.toml"]),
        0,
    );
    let output = run(dir.path(), &["analyze", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 1);
    assert!(stderr(&output).contains("moralign probe"));
}

#[test]
fn probe_without_ingest_names_the_producing_command() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let output = run(dir.path(), &["probe", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 1);
    assert!(stderr(&output).contains("moralign ingest"));
}

#[test]
fn report_without_bundle_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    assert_exit(
        &run(dir.path(), &["ingest", "--config", "moralign-wvs.toml"]),
        0,
    );
    let output = run(dir.path(), &["report", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 1);
    assert!(stderr(&output).contains("moralign analyze"));
}

#[test]
fn report_missing_out_dir_argument() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(dir.path(), &["report"]);
    assert_exit(&output, 1);
}

fn read_run_meta(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("out-wvs/run_meta.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn ingest_rerun_is_byte_identical_and_probe_resumes_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config = &["--config", "moralign-wvs.toml"];

    assert_exit(
        &run(dir.path(), &[&["ingest"], config.as_slice()].concat()),
        0,
    );
    let matrix_path = dir.path().join("out-wvs/matrices/survey_WVS.csv");
    let first = fs::read(&matrix_path).unwrap();
    assert_exit(
        &run(dir.path(), &[&["ingest"], config.as_slice()].concat()),
        0,
    );
    assert_eq!(
        first,
        fs::read(&matrix_path).unwrap(),
        "ingest rerun must not drift"
    );

    assert_exit(
        &run(dir.path(), &[&["probe"], config.as_slice()].concat()),
        0,
    );
    let model_path = dir.path().join("out-wvs/matrices/model_mock-small.csv");
    let first_model = fs::read(&model_path).unwrap();

    // Second probe: the cache satisfies every request.
    assert_exit(
        &run(dir.path(), &[&["probe"], config.as_slice()].concat()),
        0,
    );
    assert_eq!(first_model, fs::read(&model_path).unwrap());
    let meta = read_run_meta(dir.path());
    let probes: Vec<&serde_json::Value> = meta["commands"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["command"] == "probe")
        .collect();
    assert_eq!(probes.len(), 2);
    // 55 countries x 19 topics x 10 pairs x 2 sides.
    assert_eq!(probes[0]["cache"]["backend_calls"], 20_900);
    assert_eq!(probes[1]["cache"]["backend_calls"], 0);
    assert_eq!(probes[1]["cache"]["hit_rate"], 1.0);
}

/// An interrupted probing run leaves a partial cache behind; resuming must
/// converge on the same matrix as an uninterrupted run.
#[test]
fn partial_cache_resume_matches_clean_run() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config = &["--config", "moralign-wvs.toml"];
    assert_exit(
        &run(dir.path(), &[&["ingest"], config.as_slice()].concat()),
        0,
    );
    assert_exit(
        &run(dir.path(), &[&["probe"], config.as_slice()].concat()),
        0,
    );
    let model_path = dir.path().join("out-wvs/matrices/model_mock-small.csv");
    let clean = fs::read(&model_path).unwrap();

    // Simulate an interrupted run: keep only half the cache records.
    let cache_path = dir.path().join("out-wvs/cache/scores.cache");
    let cache = fs::read_to_string(&cache_path).unwrap();
    let lines: Vec<&str> = cache.lines().collect();
    let half: String = lines[..lines.len() / 2].join("\n") + "\n";
    fs::write(&cache_path, half).unwrap();
    fs::remove_file(&model_path).unwrap();

    assert_exit(
        &run(dir.path(), &[&["probe"], config.as_slice()].concat()),
        0,
    );
    assert_eq!(clean, fs::read(&model_path).unwrap());
    let meta = read_run_meta(dir.path());
    let last_probe = meta["commands"]
        .as_array()
        .unwrap()
        .iter()
        .rfind(|c| c["command"] == "probe")
        .unwrap();
    let calls = last_probe["cache"]["backend_calls"].as_u64().unwrap();
    assert!(
        calls > 0 && calls < 20_900,
        "resume rescored {calls} of 20900"
    );
}

#[test]
fn probe_failure_retains_partial_audit_and_exits_backend_code() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config_path = dir.path().join("moralign-wvs.toml");
    assert_exit(
        &run(dir.path(), &["ingest", "--config", "moralign-wvs.toml"]),
        0,
    );
    // An empty score table: every cell fails, far beyond the 10% budget.
    fs::write(
        dir.path().join("empty_table.csv"),
        "prefix_digest,continuation_digest,logprob_sum,token_count\n",
    )
    .unwrap();
    let text = fs::read_to_string(&config_path).unwrap().replace(
        "kind = \"mock\"",
        "kind = \"table\"\ntable_path = \"empty_table.csv\"",
    );
    fs::write(&config_path, text).unwrap();
    let output = run(dir.path(), &["probe", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 2);
    let audit = dir.path().join("out-wvs/audit/model_mock-small_pairs.csv");
    assert!(audit.exists(), "partial audit must be retained");
    assert!(!dir
        .path()
        .join("out-wvs/matrices/model_mock-small.csv")
        .exists());
}

#[test]
fn tampered_bundle_refused_with_corrupt_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    for cmd in ["ingest", "probe", "analyze"] {
        assert_exit(&run(dir.path(), &[cmd, "--config", "moralign-wvs.toml"]), 0);
    }
    let report = dir
        .path()
        .join("out-wvs/reports/method1_mock-small_WVS.json");
    let mut text = fs::read_to_string(&report).unwrap();
    text = text.replace("\"r\":", "\"r_tampered\":");
    fs::write(&report, text).unwrap();
    let output = run(dir.path(), &["report", "--config", "moralign-wvs.toml"]);
    assert_exit(&output, 3);
    assert!(stderr(&output).contains("corrupt"));
}

#[test]
fn summary_regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    for cmd in ["ingest", "probe", "analyze"] {
        assert_exit(&run(dir.path(), &[cmd, "--config", "moralign-wvs.toml"]), 0);
    }
    assert_exit(
        &run(dir.path(), &["report", "--config", "moralign-wvs.toml"]),
        0,
    );
    let summary_path = dir.path().join("out-wvs/summary.md");
    let first = fs::read(&summary_path).unwrap();
    assert_exit(
        &run(dir.path(), &["report", "--config", "moralign-wvs.toml"]),
        0,
    );
    assert_eq!(first, fs::read(&summary_path).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("Method 1"));
    assert!(text.contains("Method 2"));
    assert!(text.contains("Method 3"));
}

#[test]
fn seed_change_alters_only_method3_reports() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let mut bundles: Vec<PathBuf> = Vec::new();
    for (out, seed) in [("outA", "42"), ("outB", "43")] {
        for cmd in ["ingest", "probe", "analyze"] {
            let output = run(
                dir.path(),
                &[
                    cmd,
                    "--config",
                    "moralign-wvs.toml",
                    "--out",
                    out,
                    "--seed",
                    seed,
                ],
            );
            assert_exit(&output, 0);
        }
        bundles.push(dir.path().join(out));
    }
    let reports_equal = |name: &str| -> bool {
        fs::read(bundles[0].join("reports").join(name)).unwrap()
            == fs::read(bundles[1].join("reports").join(name)).unwrap()
    };
    assert!(reports_equal("method1_mock-small_WVS.json"));
    assert!(reports_equal("method2_all_mock-small_WVS.json"));
    assert!(reports_equal("method2_controversial_mock-small_WVS.json"));
    assert!(reports_equal("method2_agreed_mock-small_WVS.json"));
    assert!(!reports_equal("method3_mock-small_WVS.json"));
}

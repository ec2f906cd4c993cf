//! Command-line acceptance: identical configurations must rewrite identical
//! bytes, and the documented exit codes and formats must hold.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hmmbench_core::dataset::SequenceDataset;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hmmbench"))
}

/// All files under `dir` keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path
                    .strip_prefix(base)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn run_ok(args: &[&str], cwd: &Path) {
    let output = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(
        output.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn acceptance_8_rerun_determinism() {
    let started = Instant::now();
    let root = tempfile::tempdir().unwrap();
    let root = root.path();

    // generate
    let gen_args = [
        "generate",
        "--case",
        "I",
        "--n",
        "60",
        "--t",
        "10",
        "--separation",
        "4",
        "--seed",
        "7",
        "--quiet",
        "--out",
        "data",
    ];
    run_ok(&gen_args, root);
    let first = snapshot(&root.join("data"));
    run_ok(&gen_args, root);
    assert_eq!(
        first,
        snapshot(&root.join("data")),
        "generate rerun differs"
    );

    // discretize
    let disc_args = [
        "discretize",
        "--data",
        "data",
        "--mode",
        "pooled",
        "--k",
        "3",
        "--seed",
        "7",
        "--quiet",
        "--out",
        "sym",
    ];
    run_ok(&disc_args, root);
    let first = snapshot(&root.join("sym"));
    run_ok(&disc_args, root);
    assert_eq!(
        first,
        snapshot(&root.join("sym")),
        "discretize rerun differs"
    );

    // train (EM path: restarts, k-means init, the lot)
    let train_args = [
        "train",
        "--data",
        "data",
        "--kind",
        "unsupervised-chmm",
        "--states",
        "3",
        "--restarts",
        "3",
        "--max-iters",
        "40",
        "--seed",
        "7",
        "--quiet",
        "--out",
        "model",
    ];
    run_ok(&train_args, root);
    let first = snapshot(&root.join("model"));
    run_ok(&train_args, root);
    assert_eq!(first, snapshot(&root.join("model")), "train rerun differs");

    // sweep
    let sweep_args = [
        "sweep",
        "--data",
        "data",
        "--ratios",
        "0.5,0.2",
        "--states",
        "3",
        "--symbols",
        "3",
        "--restarts",
        "3",
        "--max-iters",
        "40",
        "--seed",
        "7",
        "--quiet",
        "--out",
        "sweep",
    ];
    run_ok(&sweep_args, root);
    let first = snapshot(&root.join("sweep"));
    run_ok(&sweep_args, root);
    assert_eq!(first, snapshot(&root.join("sweep")), "sweep rerun differs");

    println!(
        "ACCEPTANCE 8 rerun-determinism: PASS ({:.2?})",
        started.elapsed()
    );
}

#[test]
fn unknown_case_is_a_usage_error() {
    let root = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["generate", "--case", "V", "--out", "x"])
        .current_dir(root.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("I, II, III, IV"), "stderr: {stderr}");
}

#[test]
fn missing_flags_are_usage_errors() {
    let root = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["generate", "--out", "x"])
        .current_dir(root.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let output = bin()
        .args(["discretize", "--data", "nowhere", "--k", "3"])
        .current_dir(root.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2)); // missing --out
}

#[test]
fn missing_dataset_is_a_data_error() {
    let root = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["discretize", "--data", "nowhere", "--k", "3", "--out", "y"])
        .current_dir(root.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn full_pipeline_reports_two_decimal_accuracy() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();
    run_ok(
        &[
            "generate",
            "--case",
            "II",
            "--n",
            "80",
            "--separation",
            "4",
            "--seed",
            "3",
            "--quiet",
            "--out",
            "data",
        ],
        root,
    );
    run_ok(
        &[
            "discretize",
            "--data",
            "data",
            "--mode",
            "pooled",
            "--k",
            "5",
            "--seed",
            "3",
            "--quiet",
            "--out",
            "sym",
        ],
        root,
    );
    // Per the published protocol for this topology: 5 clusters, 4 states.
    let sym = SequenceDataset::read_dir(&root.join("sym")).unwrap();
    assert_eq!(sym.alphabet(), Some(5));

    run_ok(
        &[
            "train",
            "--data",
            "sym",
            "--kind",
            "supervised-dhmm",
            "--states",
            "4",
            "--quiet",
            "--out",
            "model",
        ],
        root,
    );
    let output = bin()
        .args([
            "eval",
            "--data",
            "sym",
            "--model",
            "model/model.json",
            "--quiet",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    let line = stdout
        .lines()
        .find(|l| l.starts_with("accuracy: "))
        .unwrap_or_else(|| panic!("no accuracy line in {stdout:?}"));
    let value = line.trim_start_matches("accuracy: ");
    assert!(
        value.split('.').nth(1).map(str::len) == Some(2),
        "accuracy not printed with 2 decimals: {line:?}"
    );
    let parsed: f64 = value.parse().unwrap();
    assert!(parsed > 50.0, "suspiciously low accuracy {parsed}");
}

#[test]
fn arity_mismatch_is_a_data_error() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();
    run_ok(
        &[
            "generate", "--case", "I", "--n", "30", "--t", "8", "--seed", "5", "--quiet", "--out",
            "data",
        ],
        root,
    );
    run_ok(
        &[
            "discretize",
            "--data",
            "data",
            "--mode",
            "pooled",
            "--k",
            "3",
            "--seed",
            "5",
            "--quiet",
            "--out",
            "sym",
        ],
        root,
    );
    run_ok(
        &[
            "train",
            "--data",
            "data",
            "--kind",
            "unsupervised-chmm",
            "--states",
            "3",
            "--restarts",
            "2",
            "--max-iters",
            "20",
            "--seed",
            "5",
            "--quiet",
            "--out",
            "model",
        ],
        root,
    );
    // Continuous model scored against symbols: data error.
    let output = bin()
        .args(["eval", "--data", "sym", "--model", "model/model.json"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn impossible_observation_is_a_numerical_error() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();

    // Training data only ever emits symbol 0 out of an alphabet of 2; with
    // zero smoothing the fitted emission assigns symbol 1 probability 0.
    let train = SequenceDataset::symbolic(vec![vec![0, 0, 0, 0]; 4], 2)
        .unwrap()
        .with_states(vec![vec![0, 0, 0, 0]; 4])
        .unwrap();
    train.write_dir(&root.join("train")).unwrap();
    let test = SequenceDataset::symbolic(vec![vec![0, 1, 0]], 2)
        .unwrap()
        .with_states(vec![vec![0, 0, 0]])
        .unwrap();
    test.write_dir(&root.join("test")).unwrap();

    run_ok(
        &[
            "train",
            "--data",
            "train",
            "--kind",
            "supervised-dhmm",
            "--states",
            "1",
            "--symbols",
            "2",
            "--pseudo-count",
            "0",
            "--quiet",
            "--out",
            "model",
        ],
        root,
    );
    let output = bin()
        .args(["eval", "--data", "test", "--model", "model/model.json"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("step 1"), "stderr: {stderr}");
}

#[test]
fn default_ratio_schedule_gives_five_rows_per_kind() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();
    run_ok(
        &[
            "generate", "--case", "I", "--n", "50", "--t", "8", "--seed", "4", "--quiet", "--out",
            "data",
        ],
        root,
    );
    run_ok(
        &[
            "sweep",
            "--data",
            "data",
            "--kinds",
            "supervised-dhmm",
            "--states",
            "3",
            "--symbols",
            "3",
            "--seed",
            "4",
            "--quiet",
            "--out",
            "sweep",
        ],
        root,
    );
    let csv = std::fs::read_to_string(root.join("sweep/results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5, "csv: {csv}");
    assert!(rows.iter().all(|r| r.starts_with("supervised-dhmm,")));
}

#[test]
fn config_file_fields_are_overridden_by_flags() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();
    std::fs::write(
        root.join("exp.json"),
        r#"{"case": "I", "n": 40, "t": 6, "seed": 9, "separation": 4.0, "out": "from_config"}"#,
    )
    .unwrap();
    run_ok(&["generate", "--config", "exp.json", "--quiet"], root);
    assert!(root.join("from_config/header.json").exists());

    run_ok(
        &[
            "generate", "--config", "exp.json", "--n", "25", "--quiet", "--out", "flagged",
        ],
        root,
    );
    let data = SequenceDataset::read_dir(&root.join("flagged")).unwrap();
    assert_eq!(data.num_sequences(), 25);
    assert_eq!(data.uniform_len(), Some(6));
}

#[test]
fn auto_discretization_reports_both_selectors() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();
    run_ok(
        &[
            "generate",
            "--case",
            "I",
            "--n",
            "60",
            "--t",
            "10",
            "--separation",
            "8",
            "--seed",
            "2",
            "--quiet",
            "--out",
            "data",
        ],
        root,
    );
    let output = bin()
        .args([
            "discretize",
            "--data",
            "data",
            "--mode",
            "pooled",
            "--auto",
            "--k-range",
            "2..8",
            "--seed",
            "2",
            "--out",
            "sym",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("silhouette"), "stdout: {stdout}");
    assert!(stdout.contains("elbow"), "stdout: {stdout}");
}

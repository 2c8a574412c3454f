use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use marcsinh_bench::{parse_csv, CellStatus, Classifier};

const MANIFEST: &str = r#"
[[dataset]]
name = "blobs"
urls = ["https://example.invalid/blobs/blobs.csv"]
format = "comma"
has_header = true
label = "last"
test_fraction = 0.25

[[dataset]]
name = "absent"
urls = ["https://example.invalid/absent/absent.data"]
format = "comma"
label = "last"
test_fraction = 0.2
"#;

/// Two interleaved, well separated classes so an unshuffled split sees both.
fn write_fixture(dir: &Path) {
    fs::write(dir.join("datasets.toml"), MANIFEST).unwrap();
    let mut body = String::from("a,b,c,label\n");
    for i in 0..40 {
        let class = i % 2;
        let centre = if class == 0 { -2.0 } else { 2.0 };
        let jitter = ((i * 7) % 5) as f64 * 0.1;
        body += &format!(
            "{},{},{},{}\n",
            centre + jitter,
            centre - jitter,
            jitter,
            if class == 0 { "no" } else { "yes" }
        );
    }
    fs::create_dir_all(dir.join("data/blobs")).unwrap();
    fs::write(dir.join("data/blobs/blobs.csv"), body).unwrap();
}

fn bench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marcsinh-bench"))
        .current_dir(dir)
        .env_remove("MARCSINH_DATA_DIR")
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn runs_grid_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path());
    let out = bench(
        tmp.path(),
        &["run", "--manifest", "datasets.toml", "--datasets", "blobs", "--out", "rows.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&fs::read_to_string(tmp.path().join("rows.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 10);
    assert_eq!(rows.iter().filter(|r| r.classifier == Classifier::Svm).count(), 5);
    assert_eq!(rows[0].function, "m_arcsinh");
    let linear = rows.iter().find(|r| r.function == "linear").unwrap();
    assert_eq!(linear.status, CellStatus::Converged);
    assert_eq!(linear.scores.unwrap().accuracy, 1.0);
}

#[test]
fn markdown_to_stdout_and_stable_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path());
    let args = [
        "run",
        "--manifest",
        "datasets.toml",
        "--datasets",
        "blobs",
        "--classifiers",
        "svm",
        "--functions",
        "m_arcsinh,rbf",
        "--format",
        "md",
    ];
    let first = bench(tmp.path(), &args);
    assert_eq!(code(&first), 0);
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    assert!(text.starts_with("### blobs\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("| SVM |")).count(), 2);

    let strip_time = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split('|').collect();
                if cells.len() > 3 {
                    cells.remove(3);
                }
                cells.join("|")
            })
            .collect()
    };
    let second = bench(tmp.path(), &args);
    assert_eq!(strip_time(&text), strip_time(&String::from_utf8(second.stdout).unwrap()));
}

#[test]
fn missing_dataset_is_skipped() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path());
    let out = bench(
        tmp.path(),
        &["run", "--manifest", "datasets.toml", "--classifiers", "svm", "--functions", "linear"],
    );
    assert_eq!(code(&out), 0);
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].dataset, "blobs");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    write_fixture(tmp.path());
    let m = ["--manifest", "datasets.toml"];
    let run = |extra: &[&str]| {
        let mut args = vec!["run"];
        args.extend(m);
        args.extend(extra);
        code(&bench(tmp.path(), &args))
    };
    assert_eq!(run(&["--datasets", "nope"]), 1);
    assert_eq!(run(&["--functions", "mlp:rbf"]), 1);
    assert_eq!(run(&["--classifiers", "knn"]), 1);
    assert_eq!(run(&["--format", "xml"]), 1);
    assert_eq!(run(&["--datasets", "absent"]), 2);
    assert_eq!(run(&["--data", "nowhere", "--datasets", "blobs"]), 2);
    assert_eq!(code(&bench(tmp.path(), &["run", "--manifest", "missing.toml"])), 2);
    assert_eq!(code(&bench(tmp.path(), &["frobnicate"])), 1);
    assert_eq!(code(&bench(tmp.path(), &["--help"])), 0);
}

#[test]
fn gradcheck_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bench(tmp.path(), &["gradcheck"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{text}");
}

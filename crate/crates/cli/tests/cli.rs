use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn safe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safe")).args(args).env_remove("SAFE_OUTPUT_DIR").output().unwrap()
}

fn safe_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safe")).args(args).env("SAFE_OUTPUT_DIR", dir).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn flagged_sas(structured: &str) -> Vec<String> {
    structured
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|v| v["record"] == "sa" && v["flagged"] == true)
        .map(|v| v["sa_id"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn analyze_table_marks_the_flagged_area() {
    let case1 = fixture("case_study_1.csv");
    let out = stdout(&safe(&["analyze", case1.to_str().unwrap()]));
    let marked: Vec<&str> = out.lines().filter(|l| l.trim_end().ends_with('*')).collect();
    assert_eq!(marked.len(), 1, "{out}");
    assert!(marked[0].starts_with("Gastrointestinal disorders"));
}

#[test]
fn by_flags_a_subset_of_bh() {
    let case1 = fixture("case_study_1.csv");
    let path = case1.to_str().unwrap();
    let bh = flagged_sas(&stdout(&safe(&["analyze", path, "--format", "structured"])));
    let by = flagged_sas(&stdout(&safe(&["analyze", path, "--format", "structured", "--method", "by"])));
    assert!(by.iter().all(|s| bh.contains(s)));
    assert_eq!(bh, ["Gastrointestinal disorders"]);
}

#[test]
fn large_l_warns_or_fails_by_policy() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tiny.csv");
    std::fs::write(
        &csv,
        "sa,ae,events_1,subjects_1,events_2,subjects_2\nA,a1,30,100,10,100\nA,a2,25,100,8,100\nB,b1,5,100,5,100\nB,b2,4,100,6,100\nB,b3,9,100,3,100\n",
    )
    .unwrap();
    let path = csv.to_str().unwrap();
    let o = safe(&["analyze", path, "--l", "3"]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning") && err.contains("`A`"), "{err}");

    let o = safe(&["analyze", path, "--l", "3", "--small-sa", "error"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(safe(&["analyze", "/definitely/not/here.csv"]).status.code(), Some(3));
    assert_eq!(safe(&["simulate", "--table1", "--iterations", "0"]).status.code(), Some(2));
    assert_eq!(safe(&["analyze", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(safe(&["simulate", "--table1", "--threads", "0", "--iterations", "10"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "sa,ae,events_1,subjects_1,events_2,subjects_2\nA,a1,12,10,1,10\n").unwrap();
    let o = safe(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn output_directory_and_plot_file() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("plots/plot.tsv");
    let case1 = fixture("case_study_1.csv");
    let o = safe_in(dir.path(), &["analyze", case1.to_str().unwrap(), "--plot-out", plot.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let report = std::fs::read_to_string(dir.path().join("safe_report.txt")).unwrap();
    assert!(report.contains("Gastrointestinal disorders"));
    let tsv = std::fs::read_to_string(plot).unwrap();
    assert_eq!(tsv.lines().count(), 24);

    let explicit = dir.path().join("cmp.jsonl");
    let case2 = fixture("case_study_2.csv");
    let o = safe_in(
        dir.path(),
        &["compare", case2.to_str().unwrap(), "--format", "structured", "--out", explicit.to_str().unwrap()],
    );
    assert!(o.status.success());
    assert!(std::fs::read_to_string(explicit).unwrap().contains("Vision blurred"));
    assert!(!dir.path().join("comparison.jsonl").exists());
}

#[test]
fn simulate_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.txt");
    std::fs::write(
        &scenario,
        "m = 3\nn = 5\nrho_r = 0.2\nrho_v = 0.5\nw = 3,0,0\nmu0 = 6,0,0,0,0\niterations = 3000\nseed = 5\n",
    )
    .unwrap();
    let s = scenario.to_str().unwrap();
    let one = stdout(&safe(&["simulate", s, "--threads", "1"]));
    let four = stdout(&safe(&["simulate", s, "--threads", "4"]));
    assert_eq!(one, four);
    let record: serde_json::Value = serde_json::from_str(one.trim()).unwrap();
    assert_eq!(record["iterations"], 3000);
    assert!(record["per_sa_wrong_rejection"][0].is_null());
    assert_ne!(one, stdout(&safe(&["simulate", s, "--seed", "6"])));
}

#[test]
fn grid_output_feeds_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.txt");
    assert!(safe(&["grid", "--table2", "--iterations", "50", "--out", grid.to_str().unwrap()]).status.success());
    let text = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(text.matches("label =").count(), 28);
    assert!(text.contains("rho_v = -0.006711409395973154"));
    let out = stdout(&safe(&["simulate", grid.to_str().unwrap(), "--format", "table"]));
    assert_eq!(out.lines().filter(|l| l.starts_with("table2/")).count(), 28);
}

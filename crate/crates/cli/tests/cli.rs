use std::path::Path;
use std::process::{Command, Output};

use gibbs_tree_cli::{read_csv, SweepRecord, CSV_HEADER, MAX_ENUM_ENV};

fn gibbs_tree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbs-tree")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn solve_reports_three_solutions_below_threshold() {
    let o = gibbs_tree(&["solve", "--q", "3", "--k", "3", "--theta", "0.1", "--set", "im:1", "--json"]);
    assert_eq!(code(&o), 0);
    let records: Vec<SweepRecord> = serde_json::from_str(&stdout(&o)).unwrap();
    let classes: Vec<&str> = records[0].solutions.iter().map(|s| s.classification.short()).collect();
    assert_eq!(classes, ["P2", "TI", "P2"]);
}

#[test]
fn solve_above_threshold_is_unique() {
    let o = gibbs_tree(&["solve", "--q", "3", "--k", "3", "--theta", "0.5", "--set", "im:1", "--json"]);
    let records: Vec<SweepRecord> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(records[0].count, 1);
    assert_eq!(records[0].solutions[0].classification.short(), "TI");
}

#[test]
fn solve_writes_csv_or_json_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("s.json");
    for path in [&csv, &json] {
        let o = gibbs_tree(&["solve", "--q", "4", "--k", "5", "--theta", "0.2", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let from_csv = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    let from_json: Vec<SweepRecord> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(from_csv, from_json);
    assert_eq!(from_csv.len(), 4);
}

#[test]
fn coupling_and_temperature_give_theta() {
    let a = gibbs_tree(&["solve", "--q", "3", "--k", "3", "--coupling", "-2", "--temp", "1", "--json"]);
    let b = gibbs_tree(&["solve", "--q", "3", "--k", "3", "--theta", &(-2f64).exp().to_string(), "--json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn exit_codes() {
    let hypothesis = gibbs_tree(&["solve", "--q", "5", "--k", "3", "--theta", "0.1", "--set", "im:1"]);
    assert_eq!(code(&hypothesis), 2);
    assert_eq!(code(&gibbs_tree(&["solve", "--q", "3", "--k", "3", "--theta", "1.5"])), 2);
    assert_eq!(code(&gibbs_tree(&["count", "--q", "2"])), 2);

    for bad in [
        &["solve", "--q", "3", "--k", "3", "--theta", "0.1", "--set", "im:x"][..],
        &["solve", "--q", "3", "--k", "3", "--theta", "0.1", "--set", "im:3"],
        &["solve", "--q", "3", "--k", "3", "--theta", "0.1", "--set", "imprime:2"],
        &["solve", "--q", "3", "--k", "3", "--theta", "-0.1"],
        &["solve", "--q", "3", "--k", "3"],
        &["solve", "--q", "3", "--k", "3", "--theta", "0.1", "--coupling", "1", "--temp", "1"],
        &["sweep", "--q", "3", "--k", "3", "--theta-min", "0.4", "--theta-max", "0.1"],
        &["frobnicate"],
    ] {
        assert_eq!(code(&gibbs_tree(bad)), 64, "{bad:?}");
    }
    assert_eq!(code(&gibbs_tree(&["--help"])), 0);

    let unwritable = gibbs_tree(&[
        "sweep", "--q", "3", "--k", "3", "--theta-min", "0.1", "--theta-max", "0.3", "--steps", "3", "--out",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(code(&unwritable), 74);
    assert_eq!(code(&gibbs_tree(&["plot", "/nonexistent.csv", "--svg", "/tmp/x.svg"])), 74);
}

#[test]
fn count_table_and_json() {
    let o = gibbs_tree(&["count", "--q", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().last().unwrap().ends_with("66"));
    let o = gibbs_tree(&["count", "--q", "5", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total_lower_bound"], 162);
}

#[test]
fn verify_passes_and_respects_budget() {
    let o = gibbs_tree(&["verify", "--q", "3", "--k", "3", "--theta", "0.5", "--set", "im:1", "--depth", "1", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["passed"], true);

    let o = gibbs_tree(&["verify", "--q", "3", "--k", "3", "--theta", "0.1", "--set", "im:1", "--depth", "4"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));

    // Depth 2 enumerates 3^12 configurations; a smaller budget refuses it.
    let o = Command::new(env!("CARGO_BIN_EXE_gibbs-tree"))
        .args(["verify", "--q", "3", "--k", "3", "--theta", "0.1", "--set", "im:1", "--depth", "2"])
        .env(MAX_ENUM_ENV, "1000")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    let o = Command::new(env!("CARGO_BIN_EXE_gibbs-tree"))
        .args(["verify", "--q", "3", "--k", "3", "--theta", "0.1", "--depth", "1"])
        .env(MAX_ENUM_ENV, "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

fn sweep_csv(dir: &Path, q: &str, k: &str) -> (Vec<SweepRecord>, String) {
    let csv = dir.join(format!("sweep_{q}_{k}.csv"));
    let svg = dir.join(format!("sweep_{q}_{k}.svg"));
    let o = gibbs_tree(&[
        "sweep", "--q", q, "--k", k, "--theta-min", "0.05", "--theta-max", "0.45", "--steps", "81", "--set", "im:1",
        "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    (read_csv(text.as_bytes()).unwrap(), std::fs::read_to_string(svg).unwrap())
}

#[test]
fn sweep_counts_drop_across_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let (records, svg) = sweep_csv(dir.path(), "3", "3");
    assert_eq!(records.len(), 81);
    for (i, r) in records.iter().enumerate() {
        match i {
            0..=39 => assert!(r.count >= 3, "θ = {}", r.theta),
            41.. => assert_eq!(r.count, 1, "θ = {}", r.theta),
            _ => {}
        }
    }
    let points: usize = records.iter().map(|r| r.count).sum();
    assert_eq!(svg.matches("<circle").count(), points + 2);

    let (records, _) = sweep_csv(dir.path(), "3", "4");
    let last_many = records.iter().rposition(|r| r.count >= 3).unwrap();
    assert!((records[last_many].theta - 0.4).abs() <= 0.005 + 1e-12);
}

#[test]
fn single_step_sweep_matches_solve() {
    let sweep = gibbs_tree(&[
        "sweep", "--q", "3", "--k", "3", "--theta-min", "0.1", "--theta-max", "0.4", "--steps", "1", "--json",
    ]);
    let solve = gibbs_tree(&["solve", "--q", "3", "--k", "3", "--theta", "0.1", "--json"]);
    assert_eq!(stdout(&sweep), stdout(&solve));
}

#[test]
fn sweep_to_stdout_is_csv_and_plot_reads_it() {
    let o = gibbs_tree(&["sweep", "--q", "3", "--k", "3", "--theta-min", "0.1", "--theta-max", "0.3", "--steps", "5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    let svg = dir.path().join("out.svg");
    std::fs::write(&csv, &text).unwrap();
    let o = gibbs_tree(&["plot", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let rendered = std::fs::read_to_string(&svg).unwrap();
    let points: usize = read_csv(text.as_bytes()).unwrap().iter().map(|r| r.count).sum();
    assert_eq!(rendered.matches("<circle").count(), points + 2);
    // Plotting leaves the data untouched.
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), text);

    std::fs::write(&csv, "not,a,sweep\n").unwrap();
    assert_eq!(code(&gibbs_tree(&["plot", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()])), 64);
}

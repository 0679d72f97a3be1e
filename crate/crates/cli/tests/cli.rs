use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn seeding(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seeding"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

const CP: &str = "core-periphery:chi=3,m=4,g=0.5";

#[test]
fn generate_core_periphery_file_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cp.tsv");
    let out = seeding(&["generate", "--generate", CP, "--out", arg(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("n=12\n"));
    let edges = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("n="))
        .count();
    assert_eq!(edges, 12);
    let sidecar = read_json(&dir.path().join("cp.tsv.json"));
    assert_eq!(sidecar["edges"], 12);
    assert_eq!(sidecar["config"]["graph"]["chi"], 3);
    assert!(sidecar["version"].is_string());
}

#[test]
fn generate_without_edges_is_header_only() {
    let out = seeding(&["generate", "--generate", "bounded-outdegree:n=10,d=0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "# influenced\tinfluencer\tweight\nn=10\n");
}

#[test]
fn invalid_generator_is_a_usage_error() {
    let out = seeding(&["generate", "--generate", "core-periphery:chi=1,m=4,g=0.5"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("chi must be at least 2"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&seeding(&["bogus"])), 1);
    assert_eq!(code(&seeding(&["nash"])), 1);
    assert_eq!(
        code(&seeding(&["nash", "--generate", CP, "--graph", "x.tsv"])),
        1
    );
    assert_eq!(
        code(&seeding(&["nash", "--generate", CP, "--beta", "1.5"])),
        1
    );
    assert_eq!(code(&seeding(&["--help"])), 0);
    assert_eq!(code(&seeding(&["--version"])), 0);
}

#[test]
fn missing_or_malformed_graph_files() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let out = seeding(&["centrality", "--graph", arg(&missing)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("nope.tsv"));

    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "n=3\n1\t1\t0.5\n").unwrap();
    let out = seeding(&["centrality", "--graph", arg(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("line 2: self-loop"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn nash_on_two_isolated_agents() {
    let dir = tempfile::tempdir().unwrap();
    let out = seeding(&[
        "nash",
        "--generate",
        "empty:n=2",
        "--price",
        "1",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("equilibrium.json"));
    for key in ["s_bar", "s_under"] {
        let s: Vec<f64> = serde_json::from_value(report["nash"][key].clone()).unwrap();
        assert_eq!(s, vec![1.0, 1.0]);
    }
    assert_eq!(report["epsilon"]["epsilon_paper"], 0.0);
    assert_eq!(report["config"]["command"], "nash");
    assert_eq!(report["config"]["tolerances"]["solver"], 1e-10);
}

#[test]
fn epsilon_with_role_model_sets() {
    let dir = tempfile::tempdir().unwrap();
    let sets = dir.path().join("leaders.txt");
    std::fs::write(&sets, "# role models\n4\n8\n12\n").unwrap();
    let at = format!("@{}", arg(&sets));
    let out = seeding(&[
        "epsilon",
        "--generate",
        CP,
        "--sets",
        &at,
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("epsilon.json"));
    let eps = report["epsilon"]["epsilon_paper"].as_f64().unwrap();
    assert!((eps - 0.3198711811297763).abs() < 1e-12, "{eps}");
    assert_eq!(report["epsilon"]["set_bar"], serde_json::json!([4, 8, 12]));
    assert_eq!(report["config"]["sets"][1], serde_json::json!([4, 8, 12]));
}

#[test]
fn out_of_range_set_member_names_the_flag() {
    let out = seeding(&["epsilon", "--generate", CP, "--sets", "4,13"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("--sets: agent 13"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn centrality_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = seeding(&["centrality", "--generate", CP, "--out", arg(dir.path())]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("centrality.json")).unwrap();
    assert!(
        text.contains("2.4857142857142858e0"),
        "17 significant digits"
    );
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["n"], 12);
    assert_eq!(report["attenuations"], serde_json::json!([0.25, 0.75]));
    for key in ["a", "b", "c_new", "c_cross"] {
        assert_eq!(report[key].as_array().unwrap().len(), 12, "{key}");
    }
    assert_eq!(report["residuals"].as_array().unwrap().len(), 2);
    // Summary lists leaders first.
    let summary = stdout(&out);
    let first_row = summary
        .lines()
        .skip_while(|l| !l.contains("c_new"))
        .nth(1)
        .unwrap();
    assert!(first_row.trim_start().starts_with('4'), "{summary}");
}

#[test]
fn assumption_failure_exits_two_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let dense = "core-periphery:chi=3,m=4,g=3";
    let out = seeding(&["nash", "--generate", dense, "--out", arg(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("spectral radius"));
    assert!(!dir.path().join("equilibrium.json").exists());

    let forced = seeding(&[
        "nash",
        "--generate",
        dense,
        "--force",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&forced), 0);
    let diag = read_json(&dir.path().join("assumptions.json"));
    assert_eq!(diag["assumptions"]["spectral_condition"]["passed"], false);
    assert!(!dir.path().join("equilibrium.json").exists());

    let cheap = seeding(&["nash", "--generate", CP, "--alpha", "0.5"]);
    assert_eq!(code(&cheap), 2);
}

#[test]
fn sparsify_picks_the_role_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = seeding(&[
        "sparsify",
        "--generate",
        "core-periphery:chi=3,m=100,g=0.5",
        "--epsilon-target",
        "0.1",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&dir.path().join("sparsify.json"));
    assert_eq!(report["set_bar"], serde_json::json!([100, 200, 300]));
    assert_eq!(report["set_under"], report["set_bar"]);
}

#[test]
fn simulate_writes_trajectory_and_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = seeding(&[
        "simulate",
        "--generate",
        CP,
        "--horizon",
        "5",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,node,x_bar,x_under"));
    assert_eq!(lines.count(), 6 * 12);

    let auto = tempfile::tempdir().unwrap();
    let out = seeding(&[
        "simulate",
        "--generate",
        CP,
        "--sums-only",
        "--out",
        arg(auto.path()),
    ]);
    assert_eq!(code(&out), 0);
    assert!(!auto.path().join("trajectory.csv").exists());
    let report = read_json(&auto.path().join("simulation.json"));
    assert!(report["tail_bound"].as_f64().unwrap() <= 1e-10);
    assert!(report["max_discrepancy"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn asr_scan_csv_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = seeding(&[
        "asr-scan",
        "--schedule",
        "10,31,100",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("size,n,set_size,residual_bar,residual_under,epsilon_paper,epsilon_exact_a,epsilon_exact_b")
    );
    assert_eq!(csv.lines().count(), 4);
    let report = read_json(&dir.path().join("scan.json"));
    assert_eq!(report["verdict"], "decreasing-toward-zero");

    let flat = tempfile::tempdir().unwrap();
    let out = seeding(&[
        "asr-scan",
        "--family",
        "bounded-outdegree:d=2,w=0.5,seed=1",
        "--schedule",
        "50,100,200",
        "--rule",
        "nodes:1,2,3,4,5",
        "--out",
        arg(flat.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        read_json(&flat.path().join("scan.json"))["verdict"],
        "bounded-away"
    );

    assert_eq!(
        code(&seeding(&["asr-scan", "--schedule", "100,10,1000"])),
        1
    );
}

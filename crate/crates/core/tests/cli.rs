//! End-to-end checks of the installed command surface: exit codes,
//! report files, and the text formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn lieflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lieflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lieflow-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn catalog_list_names_the_seven_scenarios() {
    let out = lieflow(&["catalog", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "plane-saddle",
        "plane-rotation",
        "plane-shear",
        "heis-saddle",
        "heis-shear",
        "sl2-inner-nilpotent",
        "so3-inner",
    ] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn run_writes_reports_and_exits_zero_on_pass() {
    let dir = tmp_dir("run");
    let json = dir.join("report.json");
    let csv = dir.join("nodes.csv");
    let out = lieflow(&[
        "run",
        "plane-saddle",
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report["scenario"], "plane-saddle");
    assert_eq!(report["verdict"], "PASS");
    assert_eq!(report["parameters"]["eps"], 0.1);
    assert!(report.get("wall_clock_ms").is_none());

    let table = std::fs::read_to_string(&csv).unwrap();
    let header = table.lines().next().unwrap();
    assert_eq!(header, "node,coord_0,coord_1,interior,cyclic,recurrent,central_distance,component");
    assert_eq!(table.lines().count() as u64, 1681 + 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_is_byte_deterministic() {
    let dir = tmp_dir("det");
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    assert!(lieflow(&["run", "plane-rotation", "--json", a.to_str().unwrap()]).status.success());
    assert!(lieflow(&["run", "plane-rotation", "--json", b.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn failing_verdict_exits_two() {
    // Starving the jump radius below half the grid spacing disconnects
    // the rotation graph, so the one-class prediction fails.
    let out = lieflow(&["run", "plane-rotation", "--eps", "0.04"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_scenario_exits_one() {
    let out = lieflow(&["run", "no-such-scenario"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-scenario"));
}

#[test]
fn sweep_reports_each_level() {
    let out = lieflow(&["sweep", "plane-saddle", "--eps", "0.2,0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["eps_values"], serde_json::json!([0.2, 0.1]));
    assert_eq!(report["monotone"], true);
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn chain_graph_emits_node_level_json() {
    let out = lieflow(&["chain-graph", "plane-saddle"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["node_count"], 1681);
    assert!(report["edge_count"].as_u64().unwrap() > 0);
    let recurrent = report["recurrent_coords"].as_array().unwrap();
    assert!(!recurrent.is_empty());
    for c in recurrent {
        let x = c[0].as_f64().unwrap();
        let y = c[1].as_f64().unwrap();
        assert!((x * x + y * y).sqrt() <= 0.2);
    }
    assert_eq!(report["nodes"].as_array().unwrap().len(), 1681);
}

#[test]
fn decompose_prints_csv_blocks() {
    let dir = tmp_dir("dec");
    let m = dir.join("m.txt");
    std::fs::write(&m, "1 1\n0 1\n").unwrap();
    let out = lieflow(&["decompose", "--matrix", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# hyperbolic\n1,0\n0,1\n"));
    assert!(text.contains("# nilpotent\n0,1\n0,0\n"));
    assert!(text.contains("# classification\nmixed\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn grade_prints_layers_and_signs() {
    let dir = tmp_dir("grade");
    let alg = dir.join("heis.alg");
    std::fs::write(&alg, "dim 3\nlabels X Y Z\nc 0 1 2 1\n").unwrap();
    let m = dir.join("d.txt");
    std::fs::write(&m, "1 0 0\n0 -1 0\n0 0 0\n").unwrap();
    let out = lieflow(&["grade", "--algebra", alg.to_str().unwrap(), "--matrix", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# layers\nlambda,dim\n-1,1\n0,1\n1,1\n"));
    assert!(text.contains("# plus\n"));
    assert!(text.contains("# zero\n"));
    assert!(text.contains("# minus\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn grade_rejects_a_non_derivation() {
    let dir = tmp_dir("gradefail");
    let alg = dir.join("heis.alg");
    std::fs::write(&alg, "dim 3\nlabels X Y Z\nc 0 1 2 1\n").unwrap();
    let m = dir.join("d.txt");
    // Swapping X and Z breaks the Leibniz rule on h3.
    std::fs::write(&m, "0 0 1\n0 1 0\n1 0 0\n").unwrap();
    let out = lieflow(&["grade", "--algebra", alg.to_str().unwrap(), "--matrix", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quotient_by_the_center_passes() {
    let out = lieflow(&["quotient", "heis-saddle", "--ideal", "2", "--samples", "15"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["central"], true);
    assert_eq!(report["quotient_dim"], 2);
    assert!(report["intertwining_defect"].as_f64().unwrap() < 1e-9);
    assert!(report["witness_eps"].as_f64().unwrap() >= 0.2);
    assert_eq!(report["lift_trials"]["count"], report["lift_trials"]["validated"]);
}

#[test]
fn quotient_rejects_a_non_ideal() {
    // span(X) is not an ideal of h3: [X, Y] = Z falls outside it.
    let out = lieflow(&["quotient", "heis-saddle", "--ideal", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

use std::path::Path;
use std::process::{Command, Output};

use nonloc_core::OpsInstance;
use serde_json::Value;

fn nonloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonloc"))
        .args(args)
        .env_remove("NONLOC_TOL")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_writes_sets() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("h12.json");
    let o = nonloc(&["construct", "--family", "H12", "--dims", "3,3,3", "--out", path(&f)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("24 states"), "{}", stdout(&o));
    assert_eq!(OpsInstance::load(&f).unwrap().len(), 24);

    let o = nonloc(&["construct", "--family", "U4party", "--dims", "3,3,3,3"]);
    assert_eq!(code(&o), 0);
    let ops = OpsInstance::from_json(&stdout(&o)).unwrap();
    assert_eq!(ops.len(), 78);
}

#[test]
fn construct_rejects_bad_input() {
    let o = nonloc(&["construct", "--family", "H8x3", "--dims", "3,3,3"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(code(&nonloc(&["construct", "--family", "Nope", "--dims", "3,3,3"])), 1);
    assert_eq!(code(&nonloc(&["construct", "--family", "H12"])), 1);
}

#[test]
fn verify_strongly_nonlocal_sets() {
    let o = nonloc(&["verify", "--family", "Yuan333", "--dims", "3,3,3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    for g in ["BC|A", "CA|B", "AB|C"] {
        assert!(text.lines().any(|l| l.starts_with(g) && l.contains("structural pass") && l.contains("oracle trivial")));
    }
    let o = nonloc(&["verify", "--family", "S48", "--dims", "4,4,4", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exit"], 0);
    assert_eq!(v["groupings"].as_array().unwrap().len(), 3);
    assert!(v["groupings"].as_array().unwrap().iter().all(|g| g["oracle"]["nullspace_dim"] == 1));
    assert_eq!(v["manifest"]["family"], "S48");
}

#[test]
fn verify_negative_controls() {
    let o = nonloc(&["verify", "--family", "disjoint-tiles", "--bipartition", "A"]);
    assert_eq!(code(&o), 3);
    let text = stdout(&o);
    assert!(text.contains("fail(") && text.contains("iv"), "{text}");
    assert!(text.contains("nontrivial"));
    let o = nonloc(&["verify", "--family", "disjoint-tiles", "--bipartition", "A", "--structural-only"]);
    assert_eq!(code(&o), 2);
    let o = nonloc(&["verify", "--family", "full-basis", "--dims", "2,2", "--bipartition", "A", "--format", "json"]);
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["groupings"][0]["oracle"]["nullspace_dim"], 2);
}

#[test]
fn verify_reads_saved_sets_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let set = dir.path().join("yuan.json");
    let rep = dir.path().join("report.json");
    assert_eq!(code(&nonloc(&["construct", "--family", "Yuan333", "--dims", "3,3,3", "--out", path(&set)])), 0);
    let o = nonloc(&["verify", "--input", path(&set), "--bipartition", "BC|A", "--format", "json", "--out", path(&rep)]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["manifest"]["bipartitions"][0], "BC|A");
}

#[test]
fn tolerance_flag_and_env() {
    let base = ["verify", "--family", "Yuan333", "--dims", "3,3,3", "--bipartition", "BC|A", "--format", "json"];
    let run_env = |tol: &str, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_nonloc"))
            .args(base)
            .args(extra)
            .env("NONLOC_TOL", tol)
            .output()
            .unwrap()
    };
    let o = run_env("1e-7", &[]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["manifest"]["tolerance"], 1e-7);
    // the flag wins over the environment
    let o = run_env("1e-7", &["--tolerance", "1e-10"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["manifest"]["tolerance"], 1e-10);
    assert_eq!(code(&run_env("0.5", &[])), 1);
    assert_eq!(code(&run_env("abc", &[])), 1);
    assert_eq!(code(&nonloc(&[&base[..], &["--tolerance", "1e-3"]].concat())), 1);
}

#[test]
fn render_formats() {
    let o = nonloc(&["render", "--family", "Bennett33", "--dims", "3,3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains('.'), "{text}");
    let o = nonloc(&["render", "--family", "Bennett33", "--dims", "3,3", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 3);
    assert!(cells[1][1].is_null());
    let o = nonloc(&["render", "--family", "Yuan333", "--dims", "3,3,3", "--format", "svg"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).trim_start().starts_with("<svg"));
    let v: Value = serde_json::from_str(&stdout(&nonloc(&["render", "--family", "Yuan333", "--dims", "3,3,3", "--format", "json"]))).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 3);
    assert_eq!(v["cells"][0].as_array().unwrap().len(), 9);
}

#[test]
fn simulate_builtin_theorems() {
    let o = nonloc(&["simulate", "--theorem", "thm8", "--dims", "4,4,4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("verdict true"));
    assert!(stdout(&o).contains("total expected 3 ebits"), "{}", stdout(&o));

    let o = nonloc(&["simulate", "--theorem", "9", "--dims", "3,3,3", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let e = &v["result"]["ebits"]["entries"];
    assert_eq!(e[0]["expected_copies"], "1");
    assert_eq!(e[2]["expected_copies"], "1/4");
    assert!(e[0]["entry"].as_str().unwrap().contains("_AB") && e[2]["entry"].as_str().unwrap().contains("_AB"));

    let o = nonloc(&["simulate", "--theorem", "thm13", "--dims", "3,3,3,3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("= log2(27) ebits"), "{}", stdout(&o));

    assert_eq!(code(&nonloc(&["simulate", "--theorem", "thm10", "--dims", "3,3,3"])), 1);
    assert_eq!(code(&nonloc(&["simulate", "--theorem", "thm99", "--dims", "4,4,4"])), 1);
}

#[test]
fn simulate_exported_and_corrupted_trees() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("t8.json");
    let tr = dir.path().join("t8.jsonl");
    let o = nonloc(&["simulate", "--theorem", "8", "--dims", "3,3,3", "--export-tree", path(&tree), "--transcripts", path(&tr)]);
    assert_eq!(code(&o), 0);
    let lines = std::fs::read_to_string(&tr).unwrap();
    assert!(lines.lines().count() >= 24);
    let again = nonloc(&["simulate", "--tree", path(&tree)]);
    assert_eq!(code(&again), 0);
    assert_eq!(stdout(&again), stdout(&o));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&tree).unwrap()).unwrap();
    let leaf = v["leaves"].as_array_mut().unwrap().iter_mut().find(|l| l["id"] == "L21").unwrap();
    leaf["claimed"] = serde_json::json!(["H_6"]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let o = nonloc(&["simulate", "--tree", path(&bad)]);
    assert_eq!(code(&o), 6);
    assert!(stdout(&o).contains("unsound"));

    std::fs::write(&bad, "{\"not\": \"a tree\"}").unwrap();
    assert_eq!(code(&nonloc(&["simulate", "--tree", path(&bad)])), 1);
}

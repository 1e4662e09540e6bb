use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_homog");

fn homog(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn malformed_flag_exits_2() {
    let out = homog(&["run", "weak-rhi", "--space", "grid:0,1,16", "--delta", "half"]);
    assert_eq!(out.status.code(), Some(2));
    let out = homog(&["--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_experiment_exits_2() {
    let out = homog(&["run", "nonsense", "--space", "grid:0,1,16"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));
}

#[test]
fn bad_space_spec_exits_2() {
    let out = homog(&["run", "weak-rhi", "--space", "torus:3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constants_prints_one_row() {
    let out = homog(&["constants", "--space", "grid:0,1,32", "--weight", "constant:2", "--stat", "rh", "--q", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "stat,sigma,q,family,value,witness");
    assert_eq!(lines.len(), 2);
    let value: f64 = lines[1].split(',').nth(4).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-12);
}

#[test]
fn weak_rhi_run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let out = homog(&["--threads", "1", "run", "weak-rhi", "--space", "grid:0,4,64", "--weight", "constant:1", "--out", path(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("item,eps,lhs,rhs,margin,ok\n"));
    assert!(!text.contains("runtime"));

    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("w.provenance.json")).unwrap()).unwrap();
    let s = &side["structural"];
    for key in ["d_hat", "n_hat", "S", "K", "eps_star"] {
        assert!(!s[key].is_null(), "sidecar lacks {key}: {s}");
    }
    assert_eq!(side["verdict"], "pass");
    assert!(side["runtime_ms"].as_f64().is_some());
}

#[test]
fn config_file_and_flags_merge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "experiment = \"weak-rhi\"\nspace = \"grid:0,4,64\"\nweight = \"exp\"\n").unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = homog(&["run", "weak-rhi", "--config", path(&cfg), "--out", path(&a)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = homog(&["run", "weak-rhi", "--config", path(&cfg), "--weight", "constant:1", "--out", path(&b)]);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
}

#[test]
fn counterexample_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("c.svg");
    let csv = dir.path().join("c.csv");
    let out = homog(&[
        "run",
        "counterexample",
        "--space",
        "comb:6,16,2",
        "--variant",
        "h2:0.5",
        "--p",
        "2,4",
        "--jmax",
        "5",
        "--out",
        path(&csv),
        "--svg",
        path(&svg),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = std::fs::read_to_string(&svg).unwrap();
    assert!(doc.starts_with("<svg") || doc.starts_with("<?xml"));
}

#[test]
fn bundle_duplicates_share_rows_not_ids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.toml");
    let run = "[[run]]\nexperiment = \"weak-rhi\"\nspace = \"grid:0,2,32\"\nweight = \"exp\"\n\n";
    let failing = "[[run]]\nexperiment = \"counterexample\"\nspace = \"comb:6,16,2\"\n[run.params]\nvariant = \"h1\"\np = [2.0]\njmax = 5\n";
    std::fs::write(&cfg, format!("{run}{run}{failing}")).unwrap();
    let rows = dir.path().join("rows.csv");
    let index = dir.path().join("rows.index.csv");
    let out = homog(&["bundle", "--config", path(&cfg), "--out", path(&rows), "--index", path(&index)]);

    let mut rd = csv::Reader::from_path(&index).unwrap();
    let entries: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(entries.len(), 3);
    let max_exit = entries.iter().map(|e| e[4].parse::<i32>().unwrap()).max().unwrap();
    assert_eq!(out.status.code(), Some(max_exit));

    let dup: Vec<&csv::StringRecord> = entries.iter().filter(|e| &e[2] == "weak-rhi").collect();
    assert_eq!(dup.len(), 2);
    assert_eq!(dup[0][1], dup[1][1]);
    assert_ne!(dup[0][0], dup[1][0]);

    let all: Vec<csv::StringRecord> = csv::Reader::from_path(&rows).unwrap().records().map(Result::unwrap).collect();
    let body = |id: &str| -> Vec<Vec<String>> {
        all.iter().filter(|r| &r[0] == id).map(|r| r.iter().skip(1).map(str::to_string).collect()).collect()
    };
    let first = body(&dup[0][0]);
    let second = body(&dup[1][0]);
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn dyadic_check_reports_invariants() {
    let out = homog(&["dyadic", "check", "--space", "grid:0,1,64"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("S = "));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn meshca(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshca"))
        .current_dir(dir)
        .env_remove("MESHCA_OUT_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "stdout: {}\nstderr: {}", stdout(&o), stderr(&o));
    stdout(&o)
}

/// Three-node line, 100 m apart, X = 2.
fn line(dir: &Path, radios: &str, channels: &str) -> PathBuf {
    let args = [
        "gen",
        "grid",
        "--rows",
        "1",
        "--cols",
        "3",
        "--spacing",
        "100",
        "--tx-range",
        "100",
        "--radios",
        radios,
        "--channels",
        channels,
        "--out",
        "line.json",
    ];
    ok(meshca(dir, &args));
    dir.join("line.json")
}

fn write_assignment(dir: &Path, channels: &[(&str, u16)]) -> PathBuf {
    let map: serde_json::Map<String, serde_json::Value> =
        channels.iter().map(|&(k, v)| (k.to_string(), v.into())).collect();
    let path = dir.join("ca.json");
    fs::write(&path, serde_json::to_string(&map).unwrap()).unwrap();
    path
}

fn scores(out: &str) -> Vec<f64> {
    out.lines()
        .filter_map(|l| l.split_whitespace().nth(1)?.parse().ok())
        .collect()
}

#[test]
fn gen_grid_writes_all_nodes() {
    let dir = TempDir::new().unwrap();
    let out = ok(meshca(
        dir.path(),
        &[
            "gen",
            "grid",
            "--rows",
            "5",
            "--cols",
            "5",
            "--radios",
            "2",
            "--channels",
            "3",
        ],
    ));
    assert!(out.starts_with("25 nodes, 40 adjacent pairs"), "{out}");
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/topology.json")).unwrap()).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 25);
}

#[test]
fn gen_rejects_zero_rows_naming_the_flag() {
    let dir = TempDir::new().unwrap();
    let o = meshca(dir.path(), &["gen", "grid", "--rows", "0", "--cols", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--rows"), "{}", stderr(&o));
}

#[test]
fn gen_random_is_deterministic() {
    let dir = TempDir::new().unwrap();
    for name in ["a.json", "b.json"] {
        ok(meshca(
            dir.path(),
            &["gen", "random", "--n", "10", "--seed", "7", "--out", name],
        ));
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
}

#[test]
fn out_dir_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_meshca"))
        .current_dir(dir.path())
        .env("MESHCA_OUT_DIR", "elsewhere")
        .args(["gen", "grid", "--rows", "2", "--cols", "2"])
        .output()
        .unwrap();
    ok(o);
    assert!(dir.path().join("elsewhere/topology.json").exists());
}

#[test]
fn assign_bio_tid_on_two_radio_line() {
    let dir = TempDir::new().unwrap();
    let topo = line(dir.path(), "2", "2");
    let out = ok(meshca(
        dir.path(),
        &[
            "assign",
            "--topology",
            topo.to_str().unwrap(),
            "--scheme",
            "bio",
            "--metric",
            "tid",
        ],
    ));
    assert!(out.starts_with("BIO_TID score 4 "), "{out}");
    assert_eq!(scores(&out), vec![4.0, 0.0, 2.0]);
    assert!(dir.path().join("out/trace.json").exists());

    // written assignment reads back through `score`
    let out = ok(meshca(
        dir.path(),
        &[
            "score",
            "--topology",
            "line.json",
            "--assignment",
            "out/assignment.json",
        ],
    ));
    assert_eq!(scores(&out), vec![4.0, 0.0, 2.0]);
}

#[test]
fn assign_is_deterministic() {
    let dir = TempDir::new().unwrap();
    ok(meshca(
        dir.path(),
        &["gen", "grid", "--rows", "3", "--cols", "3", "--out", "g.json"],
    ));
    for tag in ["1", "2"] {
        let (out, trace) = (format!("ca{tag}.json"), format!("trace{tag}.json"));
        ok(meshca(
            dir.path(),
            &[
                "assign",
                "--topology",
                "g.json",
                "--scheme",
                "ho",
                "--metric",
                "cxls",
                "--seed",
                "3",
                "--out",
                &out,
                "--trace",
                &trace,
            ],
        ));
    }
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("ca1.json"), read("ca2.json"));
    assert_eq!(read("trace1.json"), read("trace2.json"));
}

#[test]
fn assign_bio_over_budget_exits_2() {
    let dir = TempDir::new().unwrap();
    ok(meshca(
        dir.path(),
        &["gen", "grid", "--rows", "5", "--cols", "5", "--out", "g.json"],
    ));
    let o = meshca(
        dir.path(),
        &["assign", "--topology", "g.json", "--scheme", "bio", "--metric", "tid"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3^50"), "{}", stderr(&o));
}

#[test]
fn score_single_radio_all_channel_zero() {
    let dir = TempDir::new().unwrap();
    let topo = line(dir.path(), "1", "2");
    let ca = write_assignment(dir.path(), &[("0:0", 0), ("1:0", 0), ("2:0", 0)]);
    let out = ok(meshca(
        dir.path(),
        &[
            "score",
            "--topology",
            topo.to_str().unwrap(),
            "--assignment",
            ca.to_str().unwrap(),
        ],
    ));
    assert_eq!(scores(&out), vec![2.0, 1.0, 0.0]);
}

#[test]
fn score_two_radio_json() {
    let dir = TempDir::new().unwrap();
    let topo = line(dir.path(), "2", "2");
    let ca = write_assignment(
        dir.path(),
        &[("0:0", 0), ("0:1", 1), ("1:0", 0), ("1:1", 1), ("2:0", 0), ("2:1", 1)],
    );
    let out = ok(meshca(
        dir.path(),
        &[
            "score",
            "--topology",
            topo.to_str().unwrap(),
            "--assignment",
            ca.to_str().unwrap(),
            "--json",
        ],
    ));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v, serde_json::json!({"tid": 4.0, "cdal_cost": 0.0, "cxls_wt": 1.0}));
}

#[test]
fn score_rejects_channel_out_of_range() {
    let dir = TempDir::new().unwrap();
    let topo = line(dir.path(), "1", "2");
    let ca = write_assignment(dir.path(), &[("0:0", 0), ("1:0", 2), ("2:0", 0)]);
    let o = meshca(
        dir.path(),
        &[
            "score",
            "--topology",
            topo.to_str().unwrap(),
            "--assignment",
            ca.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("channel 2"), "{}", stderr(&o));
}

#[test]
fn score_rejects_mismatched_files() {
    let dir = TempDir::new().unwrap();
    let topo = line(dir.path(), "2", "2");
    let ca = write_assignment(dir.path(), &[("0:0", 0), ("1:0", 0), ("2:0", 0)]);
    let o = meshca(
        dir.path(),
        &[
            "score",
            "--topology",
            topo.to_str().unwrap(),
            "--assignment",
            ca.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn experiment_golden_report() {
    let dir = TempDir::new().unwrap();
    ok(meshca(
        dir.path(),
        &[
            "gen",
            "grid",
            "--rows",
            "2",
            "--cols",
            "3",
            "--radios",
            "2",
            "--channels",
            "3",
            "--out",
            "t.json",
        ],
    ));
    ok(meshca(
        dir.path(),
        &[
            "--out-dir",
            "r",
            "experiment",
            "--topology",
            "t.json",
            "--schemes",
            "pio,ho",
            "--metrics",
            "tid,cxls",
            "--rates",
            "54",
            "--seeds",
            "1,2",
        ],
    ));
    let mut got = csv_rows(&dir.path().join("r/report.csv"));
    let wall = got[0].iter().position(|c| c == "wall_ms").unwrap();
    for row in &mut got[1..] {
        assert!(row[wall].parse::<f64>().unwrap() >= 0.0);
        row[wall] = "*".into();
    }
    let golden = csv_rows(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report.csv"));
    assert_eq!(got, golden);
    for name in [
        "plot_tid.csv",
        "plot_cdal_cost.csv",
        "plot_cxls_wt.csv",
        "plot_est_aggregate_throughput_mbps.csv",
        "report.json",
    ] {
        assert!(dir.path().join("r").join(name).exists(), "{name}");
    }
}

#[test]
fn experiment_single_cell_from_config() {
    let dir = TempDir::new().unwrap();
    let config = serde_json::json!({
        "topology": {"kind": "grid", "rows": 3, "cols": 3},
        "schemes": ["KO"],
        "metrics": ["CDAL"],
        "phy_rates": [9.0],
        "seeds": [4],
        "output_dir": "single",
        "formats": ["csv"]
    });
    fs::write(dir.path().join("cfg.json"), config.to_string()).unwrap();
    ok(meshca(dir.path(), &["experiment", "--config", "cfg.json"]));
    let rows = csv_rows(&dir.path().join("single/report.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][3], "4");
    assert_eq!(rows[2][3], "mean");
    // everything but seed and wall time matches
    for col in [0, 1, 2, 4, 5, 6, 7, 8] {
        assert_eq!(rows[1][col], rows[2][col], "column {}", rows[0][col]);
    }
    assert!(!dir.path().join("single/report.json").exists());
}

#[test]
fn experiment_defaults_give_full_matrix() {
    let dir = TempDir::new().unwrap();
    let out = ok(meshca(dir.path(), &["experiment"]));
    assert!(out.contains("90 runs, 18 mean rows"), "{out}");
    assert_eq!(csv_rows(&dir.path().join("out/report.csv")).len(), 1 + 90 + 18);
}

#[test]
fn experiment_bio_never_worse_than_ho() {
    let dir = TempDir::new().unwrap();
    ok(meshca(
        dir.path(),
        &[
            "gen",
            "grid",
            "--rows",
            "2",
            "--cols",
            "2",
            "--spacing",
            "100",
            "--tx-range",
            "100",
            "--radios",
            "1",
            "--channels",
            "3",
            "--out",
            "t.json",
        ],
    ));
    ok(meshca(
        dir.path(),
        &[
            "experiment",
            "--topology",
            "t.json",
            "--schemes",
            "bio,ho",
            "--rates",
            "54",
            "--seeds",
            "1,2,3",
        ],
    ));
    let rows = csv_rows(&dir.path().join("out/report.csv"));
    let col = |metric: &str| match metric {
        "TID" => 4,
        "CDAL" => 5,
        _ => 6,
    };
    for metric in ["TID", "CDAL", "CXLS"] {
        let value = |scheme: &str| -> Vec<f64> {
            rows.iter()
                .filter(|r| r[0] == scheme && r[1] == metric && r[3] != "mean")
                .map(|r| r[col(metric)].parse().unwrap())
                .collect()
        };
        let (bio, ho) = (value("BIO"), value("HO"));
        assert_eq!(bio.len(), 3);
        for (b, h) in bio.iter().zip(&ho) {
            if metric == "CXLS" {
                assert!(b >= h, "{metric}: BIO {b} HO {h}");
            } else {
                assert!(b <= h, "{metric}: BIO {b} HO {h}");
            }
        }
    }
}

#[test]
fn experiment_with_failed_runs_exits_3() {
    let dir = TempDir::new().unwrap();
    let o = meshca(
        dir.path(),
        &[
            "experiment",
            "--schemes",
            "bio,pio",
            "--metrics",
            "tid",
            "--rates",
            "54",
            "--seeds",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    let bio = report.lines().find(|l| l.starts_with("BIO,TID,54,1,")).unwrap();
    assert!(bio.contains("budget"), "{bio}");
    let pio = report.lines().find(|l| l.starts_with("PIO,TID,54,1,")).unwrap();
    assert!(pio.ends_with(','), "{pio}");
}

#[test]
fn unknown_scheme_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = meshca(
        dir.path(),
        &["assign", "--topology", "x.json", "--scheme", "xo", "--metric", "tid"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown scheme"));
}

#[test]
fn help_exits_zero() {
    let dir = TempDir::new().unwrap();
    assert!(meshca(dir.path(), &["--help"]).status.success());
}

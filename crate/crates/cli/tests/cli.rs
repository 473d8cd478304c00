use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dc-control"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn value(out: &Output, key: &str) -> String {
    stdout(out)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("no `{key}` in {}", stdout(out)))
}

fn write_garnet(dir: &Path) {
    let out = dc(&["garnet", "--ns", "30", "--na", "4", "--gamma", "0.9", "--seed", "3", "--out", "g.txt"], dir);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn garnet_reports_reward_states_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["garnet", "--ns", "100", "--na", "5", "--gamma", "0.9", "--seed", "7"];
    let a = dc(&[&args[..], &["--out", "a.txt"]].concat(), tmp.path());
    let b = dc(&[&args[..], &["--out", "b.txt"]].concat(), tmp.path());
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    assert_eq!(value(&a, "reward_states"), "10");
    let text = fs::read(tmp.path().join("a.txt")).unwrap();
    assert_eq!(text, fs::read(tmp.path().join("b.txt")).unwrap());
    assert!(String::from_utf8(text).unwrap().starts_with("100 5 0.9\n"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = dc(&["garnet", "--ns", "0", "--out", "x.txt"], tmp.path());
    assert_eq!(zero.status.code(), Some(1));
    assert!(stderr(&zero).contains("Usage"), "{}", stderr(&zero));
    assert_eq!(dc(&["garnet", "--out", "x.txt", "--colour"], tmp.path()).status.code(), Some(1));
    assert_eq!(dc(&["train", "--algo", "svm", "--mdp", "g.txt", "--out", "o"], tmp.path()).status.code(), Some(1));
    let bad_id = dc(&["experiment", "--id", "fig5", "--out-dir", "o"], tmp.path());
    assert_eq!(bad_id.status.code(), Some(1));
    for id in ["rcal_expert_growth", "rled_expert_growth", "rled_rl_growth"] {
        assert!(stderr(&bad_id).contains(id), "{}", stderr(&bad_id));
    }
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dc(&["train", "--algo", "rcal", "--mdp", "missing.txt", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    fs::write(tmp.path().join("bad.txt"), "2 2 0.9\n1\n").unwrap();
    let out = dc(&["train", "--algo", "rcal", "--mdp", "bad.txt", "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_flags_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dc(&["train", "--help"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let help = stdout(&out);
    for needle in ["--lambda", "[default: 0.1]", "--k", "[default: 10]", "--updates", "[default: 100]"] {
        assert!(help.contains(needle), "missing {needle}");
    }
    let help = stdout(&dc(&["experiment", "--help"], tmp.path()));
    for needle in ["--workers", "DC_CONTROL_WORKERS", "--scale", "[default: desk]", "rled_rl_growth", "gamma 0.99"] {
        assert!(help.contains(needle), "missing {needle}");
    }
    let help = stdout(&dc(&["garnet", "--help"], tmp.path()));
    assert!(help.contains("[default: 100]") && help.contains("[default: 0.9]"));
}

#[test]
fn classif_matches_rcal_without_residual() {
    let tmp = tempfile::tempdir().unwrap();
    write_garnet(tmp.path());
    let c = dc(&["train", "--algo", "classif", "--mdp", "g.txt", "--out", "c"], tmp.path());
    let r = dc(&["train", "--algo", "rcal", "--lambda", "0", "--mdp", "g.txt", "--out", "r"], tmp.path());
    assert!(c.status.success() && r.status.success());
    assert_eq!(value(&c, "J"), value(&r, "J"));
    assert_eq!(value(&c, "T"), value(&r, "T"));
}

#[test]
fn dca_uses_the_full_budget_and_traces_outer_points() {
    let tmp = tempfile::tempdir().unwrap();
    write_garnet(tmp.path());
    let out = dc(&["train", "--algo", "rcaldc", "--k", "10", "--n", "10", "--mdp", "g.txt", "--out", "d"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(value(&out, "updates"), "100");
    let trace = fs::read_to_string(tmp.path().join("d/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("update,objective"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 11);
    let theta = fs::read_to_string(tmp.path().join("d/theta.txt")).unwrap();
    assert_eq!(theta.lines().count(), 30 * 4);
}

#[test]
fn every_algorithm_trains() {
    let tmp = tempfile::tempdir().unwrap();
    write_garnet(tmp.path());
    for algo in ["rcal", "rcaldc", "rled", "rleddc", "classif", "lspi"] {
        let out = dc(&["train", "--algo", algo, "--mdp", "g.txt", "--out", algo], tmp.path());
        assert!(out.status.success(), "{algo}: {}", stderr(&out));
        let t: f64 = value(&out, "T").parse().unwrap();
        assert!(t >= 0.0, "{algo}: T = {t}");
    }
}

#[test]
fn experiment_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dc(
        &["experiment", "--id", "rled_expert_growth", "--ns", "15", "--datasets", "2", "--grid", "1,3", "--out-dir", "e"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let dir = tmp.path().join("e");
    let records = fs::read_to_string(dir.join("records.csv")).unwrap();
    assert_eq!(records.lines().next(), Some("experiment,garnet,dataset,grid_value,algorithm,T,wall_time"));
    assert_eq!(records.lines().count(), 1 + 3 * 2 * 2 * 4);
    let aggregate = fs::read_to_string(dir.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + 2 * 4);
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("n_states = 15") && manifest.contains("grid = 1,3"));
}

#[test]
fn record_timing_fills_wall_time() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["experiment", "--id", "rcal_expert_growth", "--ns", "10", "--garnets", "1", "--datasets", "1", "--grid", "2"];
    let out = dc(&[&args[..], &["--out-dir", "t", "--record-timing"]].concat(), tmp.path());
    assert!(out.status.success());
    let records = fs::read_to_string(tmp.path().join("t/records.csv")).unwrap();
    for line in records.lines().skip(1) {
        let wall: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(wall >= 0.0);
    }
}

fn plot(dir: &Path, csv: &str) -> Output {
    fs::write(dir.join("agg.csv"), csv).unwrap();
    dc(&["plot", "--aggregate", "agg.csv", "--out", "p.svg"], dir)
}

const HEADER: &str = "grid_value,algorithm,mean_T,variance,improvement_pct,win_rate\n";

#[test]
fn plot_draws_one_polyline_per_algorithm() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = format!(
        "{HEADER}2,RCAL,0.5,0.01,,\n2,RCALDC,0.45,0.02,10,0.6\n10,RCAL,0.2,0.01,,\n10,RCALDC,0.15,0.01,25,0.7\n20,RCAL,0.1,0.001,,\n20,RCALDC,0.08,0.001,20,0.6\n"
    );
    let out = plot(tmp.path(), &csv);
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = fs::read_to_string(tmp.path().join("p.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        assert_eq!(l.attribute("points").unwrap().split_whitespace().count(), 3);
    }
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polygon")).count(), 2);
    assert!(svg.contains(">RCALDC<"));
}

#[test]
fn plot_of_header_only_is_empty_axes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plot(tmp.path(), HEADER);
    assert!(out.status.success());
    let svg = fs::read_to_string(tmp.path().join("p.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 0);
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("line")).count(), 2);
}

#[test]
fn plot_rejects_malformed_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = plot(tmp.path(), &format!("{HEADER}2,RCAL,0.5,0.01,,\n4,RCAL,half,0.01,,\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
    let out = plot(tmp.path(), &format!("{HEADER}2,RCAL,0.5\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("row 1"), "{}", stderr(&out));
}

#[test]
fn plot_of_a_real_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dc(&["experiment", "--id", "rcal_expert_growth", "--ns", "12", "--out-dir", "e"], tmp.path());
    assert!(out.status.success());
    let out = dc(&["plot", "--aggregate", "e/aggregate.csv", "--out", "e/plot.svg"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = fs::read_to_string(tmp.path().join("e/plot.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 3);
}

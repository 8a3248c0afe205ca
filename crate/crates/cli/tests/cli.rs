use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wsn_tpc::mdp::PolicyDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wsn-tpc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const TWO_LINKS: &str = r#"{
    "topology": {"kind": "circular", "links": 2, "d1": 10, "d2": 10},
    "systems": [
        {"f": 1.01, "h": 0.3, "r1": 0.4, "r2": 1.1},
        {"f": 1.01, "h": 0.3, "r1": 0.4, "r2": 1.1}
    ],
    "grid": {"levels": 6, "min": 0, "max": 10},
    "actions": {"levels": 5},
    "simulation": {"horizon": 10, "runs": 2, "seed": 4}
}"#;

const THREE_EQUAL: &str = r#"{
    "topology": {"kind": "circular", "links": 3, "d1": 10, "d2": 10},
    "systems": [
        {"f": 1.01, "h": 0.3, "r1": 0.4, "r2": 1.1},
        {"f": 1.01, "h": 0.3, "r1": 0.4, "r2": 1.1},
        {"f": 1.01, "h": 0.3, "r1": 0.4, "r2": 1.1}
    ]
}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

fn feasible_set(path: &Path) -> Vec<(String, String)> {
    data_rows(path)
        .iter()
        .filter(|r| r.ends_with(",1"))
        .map(|r| {
            let f: Vec<_> = r.split(',').collect();
            (f[0].to_owned(), f[1].to_owned())
        })
        .collect()
}

#[test]
fn feasibility_rows_and_nesting() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", THREE_EQUAL);
    let hi = dir.path().join("hi");
    let lo = dir.path().join("lo");
    let a = run(&["feasibility", "--config", s(&cfg), "--out", s(&hi), "--fixed", "3=0.9", "--resolution", "40"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["feasibility", "--config", s(&cfg), "--out", s(&lo), "--fixed", "3=0.1", "--resolution", "40"]);
    assert_eq!(code(&b), 0);
    let hi_rows = data_rows(&hi.join("feasibility.csv"));
    assert_eq!(hi_rows.len(), 40 * 40);
    let text = fs::read_to_string(hi.join("feasibility.csv")).unwrap();
    assert!(text.starts_with("# config_hash: "));
    assert_eq!(text.lines().nth(1), Some("kappa_i,kappa_j,feasible"));
    let small = feasible_set(&hi.join("feasibility.csv"));
    let big = feasible_set(&lo.join("feasibility.csv"));
    assert!(!small.is_empty() && small.len() < big.len());
    assert!(small.iter().all(|c| big.contains(c)));
}

#[test]
fn feasibility_needs_two_free_links() {
    let dir = TempDir::new().unwrap();
    let one = THREE_EQUAL
        .replace("\"links\": 3", "\"links\": 1")
        .replace(
            ",\n        {\"f\": 1.01, \"h\": 0.3, \"r1\": 0.4, \"r2\": 1.1},\n        {\"f\": 1.01, \"h\": 0.3, \"r1\": 0.4, \"r2\": 1.1}",
            "",
        );
    let cfg = write_config(dir.path(), "one.json", &one);
    let out = run(&["feasibility", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    let cfg3 = write_config(dir.path(), "three.json", THREE_EQUAL);
    let out = run(&["feasibility", "--config", s(&cfg3), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["solve", "--config", s(&missing)])), 2);
    let bad = write_config(dir.path(), "bad.json", &TWO_LINKS.replace("\"grid\"", "\"gird\""));
    assert_eq!(code(&run(&["solve", "--config", s(&bad), "--out", s(dir.path())])), 2);
    let cfg = write_config(dir.path(), "c.json", TWO_LINKS);
    let out = run(&["sweep", "--config", s(&cfg), "--out", s(dir.path()), "--axis", "beta", "--values", "1"]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&run(&["solve"])), 2);
}

#[test]
fn empty_action_set_exits_3() {
    let dir = TempDir::new().unwrap();
    let body = TWO_LINKS.replace("\"actions\": {\"levels\": 5}", "\"actions\": {\"explicit\": [[0.9999]]}");
    let cfg = write_config(dir.path(), "c.json", &body);
    let out = run(&["solve", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no PSR combination"));
}

#[test]
fn myopic_free_solve_picks_minimum_power() {
    let dir = TempDir::new().unwrap();
    let body = TWO_LINKS
        .replace("\"r2\": 1.1}", "\"r2\": 1.1, \"lambda\": 0}")
        .replace("\"simulation\"", "\"solver\": {\"alpha\": 0}, \"simulation\"");
    let cfg = write_config(dir.path(), "c.json", &body);
    let out = run(&["solve", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: PolicyDocument = serde_json::from_str(&fs::read_to_string(dir.path().join("policy.json")).unwrap()).unwrap();
    let min = doc
        .actions
        .iter()
        .map(|a| a.total_power_watt)
        .fold(f64::INFINITY, f64::min);
    let cheapest = doc.actions.iter().position(|a| a.total_power_watt == min).unwrap();
    assert!(doc.action_index.iter().all(|&i| i == cheapest));
}

#[test]
fn solve_simulate_and_determinism() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", TWO_LINKS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        assert_eq!(code(&run(&["solve", "--config", s(&cfg), "--out", s(d)])), 0);
        let out = run(&["simulate", "--config", s(&cfg), "--out", s(d), "--episodes-traces"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["policy.json", "summary.json", "traces/episode_0000.csv", "traces/episode_0001.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // horizon 10, two links
    let rows = data_rows(&a.join("traces/episode_0000.csv"));
    assert_eq!(rows.len(), 20);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(1) == Some("2")).count(), 10);
    let header = fs::read_to_string(a.join("traces/episode_0000.csv")).unwrap();
    assert_eq!(header.lines().nth(1), Some("k,link,P,p_watt,p_dbm,kappa,beta,x,xhat,err"));

    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    let links = summary["summary"]["links"].as_array().unwrap();
    let sum: f64 = links.iter().map(|l| l["mean_power_watt"].as_f64().unwrap()).sum();
    assert_eq!(sum, summary["summary"]["network_power_watt"].as_f64().unwrap());
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);

    // a different seed changes the summary but not the policy requirement
    let c = dir.path().join("c");
    fs::create_dir_all(&c).unwrap();
    fs::copy(a.join("policy.json"), c.join("policy.json")).unwrap();
    assert_eq!(code(&run(&["simulate", "--config", s(&cfg), "--out", s(&c), "--seed", "5"])), 0);
    assert_ne!(fs::read(a.join("summary.json")).unwrap(), fs::read(c.join("summary.json")).unwrap());
}

#[test]
fn simulate_policy_checks() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", TWO_LINKS);
    let out = run(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&run(&["solve", "--config", s(&cfg), "--out", s(dir.path())])), 0);
    let other = write_config(dir.path(), "d.json", &TWO_LINKS.replace("\"levels\": 5", "\"levels\": 4"));
    let policy = dir.path().join("policy.json");
    let sim = |extra: &[&str]| {
        let mut args = vec!["simulate", "--config", s(&other), "--out", s(dir.path()), "--policy", s(&policy)];
        args.extend_from_slice(extra);
        run(&args)
    };
    assert_eq!(code(&sim(&[])), 2);
    let forced = sim(&["--force"]);
    assert_eq!(code(&forced), 0, "{}", String::from_utf8_lossy(&forced.stderr));
    assert!(String::from_utf8_lossy(&forced.stderr).contains("warning"));
}

#[test]
fn single_value_sweep_matches_solve_then_simulate() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", TWO_LINKS);
    let out = run(&["sweep", "--config", s(&cfg), "--out", s(dir.path()), "--axis", "lambda", "--values", "0.01"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&run(&["solve", "--config", s(&cfg), "--out", s(dir.path())])), 0);
    assert_eq!(code(&run(&["simulate", "--config", s(&cfg), "--out", s(dir.path())])), 0);

    let rows = data_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 1);
    let cols: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(&cols[..3], ["lambda", "0.01", "ok"]);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    let net_p: f64 = cols[7].parse().unwrap();
    let net_w: f64 = cols[9].parse().unwrap();
    assert_eq!(net_p, summary["summary"]["network_covariance"].as_f64().unwrap());
    assert_eq!(net_w, summary["summary"]["network_power_watt"].as_f64().unwrap());
}

#[test]
fn sweep_flags_failed_points() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", TWO_LINKS);
    let out = run(&["sweep", "--config", s(&cfg), "--out", s(dir.path()), "--axis", "alpha", "--values", "0.5,2"]);
    assert_eq!(code(&out), 0);
    let rows = data_rows(&dir.path().join("sweep.csv"));
    assert!(rows[0].split(',').nth(2) == Some("ok"));
    assert!(rows[1].split(',').nth(2).unwrap().starts_with("error"));
    assert_eq!(rows[0].split(',').count(), rows[1].split(',').count());
    let all_bad = run(&["sweep", "--config", s(&cfg), "--out", s(dir.path()), "--axis", "alpha", "--values", "2,3"]);
    assert_eq!(code(&all_bad), 3);
}

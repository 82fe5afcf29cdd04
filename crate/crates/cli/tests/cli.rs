use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shieldkey"))
        .args(args)
        .env_remove("SHIELDKEY_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn spec(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

/// CSV body without `#` rows, as (header, rows).
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn check_verdicts_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ex = spec(dir.path(), "ex.json", r#"{"family":"example4x4","q1":0.6,"q2":0.4}"#);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["check", ex.to_str().unwrap()]))).unwrap();
    assert_eq!(v["verdict"]["ad_ok"], true);

    let h = spec(dir.path(), "h.json", r#"{"family":"horodecki","p":0.3,"d":2,"l":1}"#);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["check", h.to_str().unwrap()]))).unwrap();
    assert_eq!(v["verdict"]["entangled"], false);

    let bad = spec(dir.path(), "bad.json", r#"{"family":"example4x4","q1":0.6,"q2":0.5}"#);
    assert_eq!(run(&["check", bad.to_str().unwrap()]).status.code(), Some(2));

    let missing = spec(dir.path(), "missing.json", r#"{"family":"horodecki","p":0.3,"d":2}"#);
    let o = run(&["check", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`l`"));

    let big = spec(dir.path(), "big.json", r#"{"family":"horodecki","p":0.3,"d":3,"l":3}"#);
    assert_eq!(run(&["check", big.to_str().unwrap(), "--max-dim", "100"]).status.code(), Some(3));
}

#[test]
fn scan_brackets_thresholds() {
    let out = stdout(&run(&["scan-horodecki", "--l", "2", "--p-min", "0.3", "--p-max", "0.34", "--p-step", "0.001"]));
    let (h, rows) = csv_rows(&out);
    let (p, ad) = (col(&h, "p"), col(&h, "ad_ok"));
    let flip = rows.windows(2).find(|w| w[0][ad] != w[1][ad]).expect("ad_ok flips");
    let lo: f64 = flip[0][p].parse().unwrap();
    let hi: f64 = flip[1][p].parse().unwrap();
    assert!(lo >= 0.319 - 1e-12 && hi <= 0.321 + 1e-12, "flip between {lo} and {hi}");
    assert!(rows.iter().all(|r| r[col(&h, "p2")] == "0.32"));
    assert!(out.contains("# ad_ok flips between"));

    let out = stdout(&run(&["scan-horodecki", "--l", "1", "--p", "0.3,0.35", "--gnuplot"]));
    assert!(out.starts_with("# p "));
    assert_eq!(out.lines().nth(1).unwrap().split(' ').nth(2), Some("0"));

    assert_eq!(run(&["scan-horodecki", "--p-min", "0.4", "--p-max", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["scan-horodecki", "--p-step", "0"]).status.code(), Some(2));

    let out = stdout(&run(&["scan-horodecki", "--d", "3", "--l", "3", "--p", "0.3", "--max-dim", "100"]));
    let (h, rows) = csv_rows(&out);
    assert!(rows[0][col(&h, "error")].contains("resource limit"));
}

#[test]
fn scan_4x4_flips_at_one_half() {
    let out = stdout(&run(&["scan-4x4", "--q1", "0.45,0.55,0.75"]));
    let (h, rows) = csv_rows(&out);
    let ad: Vec<&str> = rows.iter().map(|r| r[col(&h, "ad_ok")].as_str()).collect();
    assert_eq!(ad, ["false", "true", "true"]);
}

#[test]
fn recurrence_trace() {
    let dir = tempfile::tempdir().unwrap();
    let ex = spec(dir.path(), "ex.json", r#"{"family":"example4x4","q1":0.6,"q2":0.4}"#);
    let (h, rows) = csv_rows(&stdout(&run(&["recurrence", ex.to_str().unwrap(), "--k", "2"])));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let diff: f64 = r[col(&h, "abs_diff")].parse().unwrap();
        assert!(diff < 1e-9);
    }

    let hs = spec(dir.path(), "h.json", r#"{"family":"horodecki","p":0.3,"d":2,"l":1}"#);
    let out = stdout(&run(&["recurrence", hs.to_str().unwrap(), "--k", "3"]));
    assert!(out.trim_end().lines().last().unwrap().starts_with("# truncated at round 3"));
    let (h, rows) = csv_rows(&out);
    let r: Vec<f64> = rows.iter().map(|row| row[col(&h, "r_closed")].parse().unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]));

    assert_eq!(run(&["recurrence", ex.to_str().unwrap(), "--k", "0"]).status.code(), Some(2));
}

#[test]
fn noise_scan_thresholds() {
    let (h, rows) = csv_rows(&stdout(&run(&["noise-scan", "--l", "2", "--eps-min", "0.1", "--eps-max", "0.13", "--eps-step", "0.0005"])));
    let (e, p) = (col(&h, "eps"), col(&h, "p_min"));
    let first_none = rows.iter().find(|r| r[p].is_empty()).unwrap();
    let eps: f64 = first_none[e].parse().unwrap();
    assert!((eps - 0.1232).abs() < 1e-3, "first none at {eps}");

    let (h, rows) = csv_rows(&stdout(&run(&["noise-scan", "--l", "2", "--eps", "0"])));
    assert_eq!(rows[0][col(&h, "p_min")], "0.32");
    let (h, rows) = csv_rows(&stdout(&run(&["noise-scan", "--l", "1", "--eps", "0"])));
    assert_eq!(rows[0][col(&h, "p_min")], "0.4");
    assert_eq!(rows[0][col(&h, "p_exact_consistent")], "true");
}

#[test]
fn ad_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let h = spec(dir.path(), "h.json", r#"{"family":"horodecki","p":0.3,"d":2,"l":1}"#);
    let h = h.to_str().unwrap();
    let first = stdout(&run(&["ad-sim", h, "--n", "4", "--trials", "100000", "--seed", "42"]));
    let again = stdout(&run(&["ad-sim", h, "--n", "4", "--trials", "100000", "--seed", "42"]));
    assert_eq!(first, again);
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    let acc = v["empirical"]["stats"]["accept_prob"].as_f64().unwrap();
    let se = v["empirical"]["accept_stderr"].as_f64().unwrap();
    let analytic = 0.6f64.powi(4) + 0.4f64.powi(4);
    assert!((v["analytic"]["accept_prob"].as_f64().unwrap() - analytic).abs() < 1e-12);
    assert!((acc - analytic).abs() <= 3.0 * se.max(1e-12));

    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["ad-sim", h, "--n", "1"]))).unwrap();
    assert_eq!(v["empirical"]["stats"]["accept_prob"].as_f64(), Some(1.0));

    let degenerate = spec(
        dir.path(),
        "zero.json",
        r#"{"family":"explicit","shield_dims":[1,1],"sigma":[[[[0,0]]],[[[0,0]]],[[[0.5,0]]],[[[0.5,0]]]]}"#,
    );
    assert_eq!(run(&["ad-sim", degenerate.to_str().unwrap(), "--n", "2"]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_shieldkey"))
        .args(["scan-4x4", "--q1", "0.6"])
        .env("SHIELDKEY_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(std::fs::read_to_string(dir.path().join("scan-4x4.csv")).unwrap().starts_with("q1,q2,"));

    let target = dir.path().join("nested").join("out.json");
    stdout(&run(&["scan-4x4", "--q1", "0.6", "--format", "json", "--out", target.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["rows"][0]["ad_ok"], true);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use navdecode::series::{self, SeriesKind};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_navdecode"))
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

const QUARTERLY: [f64; 12] = [0.03, -0.02, 0.05, 0.01, -0.04, 0.02, 0.06, -0.01, 0.03, 0.00, -0.03, 0.04];

fn write_quarterly_returns(dir: &Path) -> PathBuf {
    let dates = [
        "2015-03-31", "2015-06-30", "2015-09-30", "2015-12-31", "2016-03-31", "2016-06-30", "2016-09-30",
        "2016-12-30", "2017-03-31", "2017-06-30", "2017-09-29", "2017-12-29",
    ];
    let mut text = String::from("date,value\n");
    for (d, r) in dates.iter().zip(QUARTERLY) {
        text.push_str(&format!("{d},{r}\n"));
    }
    let path = dir.join("q.csv");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn decode_fixture_writes_report() {
    let out = tempfile::tempdir().unwrap();
    let (code, stdout, _) = run(bin()
        .current_dir(fixture_dir())
        .args(["decode", "--config", "config.json", "--output-dir"])
        .arg(out.path()));
    assert_eq!(code, 0);
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary["strategy"], "decoded");
    let report: Value = serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["benchmark_comparisons"]["status"], "skipped");
    assert!(out.path().join("plotdata/nav.csv").is_file());
}

#[test]
fn decode_overrides_apply() {
    let out = tempfile::tempdir().unwrap();
    let (code, _, _) = run(bin()
        .current_dir(fixture_dir())
        .args(["decode", "--config", "config.json", "--asymmetry-order", "post", "--af", "0.8", "--output-dir"])
        .arg(out.path()));
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["asymmetry"]["order"], "post");
    assert_eq!(report["asymmetry"]["af"], 0.8);
    assert_eq!(report["strategy"], "transformed");
}

#[test]
fn usage_errors_exit_two() {
    let (code, _, stderr) = run(bin().args(["decode", "--config", "/no/such/config.json"]));
    assert_eq!(code, 2, "{stderr}");
    assert_eq!(run(bin().args(["stats", "--input", "x.csv", "--bogus"])).0, 2);
    assert_eq!(run(bin().args(["synth", "--assets", "0", "--out", "/tmp/unused"])).0, 2);
    assert_eq!(run(bin().args(["decode", "--config", "c.json", "--asymmetry-order", "sideways"])).0, 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"data": {}, "train_end": "2011-01-01", "output_dir": "o"}"#).unwrap();
    assert_eq!(run(bin().arg("validate-config").arg("--config").arg(&cfg)).0, 2);
    assert_eq!(run(bin().arg("decode").arg("--config").arg(&cfg)).0, 2);
}

#[test]
fn malformed_proxy_row_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["config.json", "prices.csv", "nav.csv"] {
        fs::copy(fixture_dir().join(f), dir.path().join(f)).unwrap();
    }
    let nav = dir.path().join("nav.csv");
    let text = fs::read_to_string(&nav).unwrap().replacen("\n2010-01-07,", "\n2010-01-07,x", 1);
    fs::write(&nav, text).unwrap();
    let (code, _, stderr) = run(bin().current_dir(dir.path()).args(["decode", "--config", "config.json"]));
    assert_eq!(code, 1);
    assert!(stderr.contains("line 5"), "{stderr}");
}

#[test]
fn stats_matches_hand_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_quarterly_returns(dir.path());
    let (code, stdout, _) = run(bin()
        .args(["stats", "--sampling", "quarterly", "--kind", "return", "--input"])
        .arg(&path));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let expect = [
        ("annual_return", 0.045545439547774166),
        ("annual_vol", 0.06429100507328636),
        ("sharpe", 0.7084263108945984),
        ("sortino", 1.4402732600447565),
        ("max_dd", 0.04),
        ("worst10_dd", 0.02816),
        ("autocorr_lag1", -0.39097265725048386),
    ];
    for (key, want) in expect {
        let got = v[key].as_f64().unwrap();
        assert!(((got - want) / want).abs() < 1e-9, "{key}: {got} vs {want}");
    }
    assert_eq!(v["sampling"], "quarterly");

    // same data read as daily scales by 252 instead of 4
    let (_, daily, _) = run(bin().args(["stats", "--kind", "return", "--input"]).arg(&path));
    let d: Value = serde_json::from_str(&daily).unwrap();
    let ratio = d["annual_vol"].as_f64().unwrap() / v["annual_vol"].as_f64().unwrap();
    assert!((ratio - (252.0f64 / 4.0).sqrt()).abs() < 1e-9);
}

#[test]
fn stats_on_constant_prices_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    let mut text = String::from("date,value\n");
    for day in 1..=9 {
        text.push_str(&format!("2020-01-0{day},100\n"));
    }
    fs::write(&path, text).unwrap();
    let (code, stdout, stderr) = run(bin().args(["stats", "--kind", "price", "--input"]).arg(&path));
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    assert!(stderr.contains("error"), "{stderr}");
}

#[test]
fn synth_is_deterministic_and_readable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let (code, _, _) = run(bin().args(["synth", "--assets", "2", "--days", "50", "--seed", "3", "--out"]).arg(d.path()));
        assert_eq!(code, 0);
    }
    for f in ["prices.csv", "nav.csv", "true_weights.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let prices = series::load_panel(a.path().join("prices.csv"), SeriesKind::Price).unwrap();
    assert_eq!((prices.n_assets(), prices.len()), (2, 51));
    let nav = series::load_series(a.path().join("nav.csv"), SeriesKind::Nav).unwrap();
    assert_eq!(nav.len(), 51);
    series::load_panel(a.path().join("true_weights.csv"), SeriesKind::Return).unwrap();
}

#[test]
fn synth_into_unwritable_path_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let (code, _, _) = run(bin().args(["synth", "--days", "10", "--out"]).arg(blocker.join("sub")));
    assert_eq!(code, 1);
}

#[test]
fn compare_against_itself() {
    let nav = fixture_dir().join("nav.csv");
    let (code, stdout, stderr) = run(bin()
        .args(["compare", "--benchmark-sampling", "daily", "--horizons", "1Y,lifetime", "--input"])
        .arg(&nav)
        .arg("--benchmark")
        .arg(format!("self={}", nav.display())));
    assert_eq!(code, 0, "{stderr}");
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let corr = &v["self"]["value"]["correlations"]["correlations"];
    for h in ["1Y", "lifetime"] {
        assert!((corr[h].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn validate_config_lists_inputs() {
    let (code, stdout, _) = run(bin().current_dir(fixture_dir()).args(["validate-config", "--config", "config.json"]));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["inputs"].as_array().unwrap().len(), 2);
}

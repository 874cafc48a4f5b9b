use std::path::PathBuf;
use std::process::Command;

use levyliq::cli::run;
use levyliq::config::{emit_config, load_config, parse_config};
use levyliq::liquidation::liquidation_probability;
use levyliq::parisian::parisian_ruin_prob;

fn cfg_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name).display().to_string()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn value(row: &[String]) -> f64 {
    row.last().unwrap().parse().unwrap()
}

#[test]
fn bundled_configs_round_trip() {
    for name in ["parisian.cfg", "dividends.cfg", "joint_law.cfg"] {
        let cfg = load_config(cfg_path(name).as_ref()).unwrap();
        assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg, "{name}");
    }
}

#[test]
fn parisian_prob_matches_library() {
    let out = run(["levyliq", "parisian", "prob", &cfg_path("parisian.cfg")]).unwrap();
    assert!(out.starts_with("kind,a,value\n"));
    let r = rows(&out);
    let cfg = load_config(cfg_path("parisian.cfg").as_ref()).unwrap();
    let expect = parisian_ruin_prob(&cfg.solvent_model().unwrap(), 0.1, 1.0).unwrap();
    assert_eq!(r[0][0], "parisian");
    assert_eq!(value(&r[0]), expect);
    assert_eq!(r[1][0], "parisian_barrier");
    assert!((value(&r[1]) - expect).abs() < 1e-6);
}

#[test]
fn liquidation_prob_via_config_flag() {
    let out = run(["levyliq", "liquidation", "prob", "--config", &cfg_path("joint_law.cfg")]).unwrap();
    let cfg = load_config(cfg_path("joint_law.cfg").as_ref()).unwrap();
    let expect = liquidation_probability(&cfg.problem().unwrap()).unwrap();
    assert_eq!(value(&rows(&out)[0]), expect);
}

#[test]
fn joint_cdf_grid_is_zero_at_start_level_and_monotone() {
    let out = run([
        "levyliq",
        "liquidation",
        "joint-cdf",
        &cfg_path("joint_law.cfg"),
        "--grid-u",
        "-1:2:4",
        "--grid-z",
        "2:12:4",
    ])
    .unwrap();
    let r = rows(&out);
    assert_eq!(r.len(), 16);
    let grid: Vec<(f64, f64, f64)> = r
        .iter()
        .map(|row| (row[0].parse().unwrap(), row[1].parse().unwrap(), value(row)))
        .collect();
    for &(u, z, v) in &grid {
        if z == 2.0 {
            assert_eq!(v, 0.0, "u = {u}");
        }
        assert!((0.0..=1.0).contains(&v));
    }
    for i in 0..4 {
        for j in 1..4 {
            assert!(grid[4 * i + j].2 >= grid[4 * i + j - 1].2, "z-monotone at {i},{j}");
            assert!(grid[4 * j + i].2 >= grid[4 * (j - 1) + i].2, "u-monotone at {j},{i}");
        }
    }
}

#[test]
fn fig2_rows_respect_barrier_order() {
    let out = run(["levyliq", "compare", "fig2", &cfg_path("parisian.cfg")]).unwrap();
    let r = rows(&out);
    assert_eq!(r[0][0], "parisian");
    // Three a values on a 10 × 10 (b, c) grid, every combination admissible.
    assert_eq!(r.len(), 1 + 300);
    let mut table = std::collections::BTreeMap::new();
    for row in &r[1..] {
        let (a, b, c): (f64, f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!(a < b && b < c && c > 0.0);
        let key = |v: f64| (v * 1e6).round() as i64;
        table.insert((key(a), key(b), key(c)), value(row));
    }
    let get = |a: f64, b: f64, c: f64| table[&((a * 1e6).round() as i64, (b * 1e6).round() as i64, (c * 1e6).round() as i64)];
    for (b, c) in [(-2.0, 0.2), (-1.0, 1.0), (-0.2, 2.0)] {
        assert!(get(-100.0, b, c) <= get(-5.0, b, c) && get(-5.0, b, c) <= get(-3.0, b, c), "a-order at ({b}, {c})");
    }
    assert!(get(-3.0, -1.0, 0.2) < get(-3.0, -1.0, 2.0), "increasing in c");
    assert!(get(-3.0, -2.0, 1.0) < get(-3.0, -0.2, 1.0), "increasing in b");
}

#[test]
fn scale_eval_reports_three_functions() {
    let out = run(["levyliq", "scale", "eval", &cfg_path("parisian.cfg"), "--grid-x", "0:2:3"]).unwrap();
    let r = rows(&out);
    assert_eq!(r.len(), 9);
    assert!(value(&r[0]).abs() < 1e-12, "W(0) = 0 with a Gaussian part");
    assert_eq!(value(&r[6]), 1.0, "Z(0) = 1");
    let insolvent = run(["levyliq", "scale", "eval", &cfg_path("joint_law.cfg"), "--grid-x", "1:1:1", "--regime", "insolvent"]).unwrap();
    let solvent = run(["levyliq", "scale", "eval", &cfg_path("joint_law.cfg"), "--grid-x", "1:1:1"]).unwrap();
    assert_ne!(insolvent, solvent);
}

#[test]
fn out_flag_writes_the_printed_csv() {
    let path = std::env::temp_dir().join(format!("levyliq-cli-{}.csv", std::process::id()));
    let p = path.display().to_string();
    let out = run(["levyliq", "liquidation", "prob", &cfg_path("joint_law.cfg"), "--out", &p]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn simulate_reports_standard_errors() {
    let out = run(["levyliq", "simulate", &cfg_path("parisian.cfg"), "--paths", "2000", "--seed", "4"]).unwrap();
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    let v: Vec<f64> = r[0][1..].iter().map(|s| s.parse().unwrap()).collect();
    assert!(v[0] >= 0.0 && v[1] >= 0.0 && v[2] <= v[0] && v[0] <= v[3]);
}

#[test]
fn bad_inputs_are_rejected() {
    let dir = std::env::temp_dir();
    let path = dir.join(format!("levyliq-bad-{}.cfg", std::process::id()));
    let text = std::fs::read_to_string(cfg_path("joint_law.cfg")).unwrap().replace("barriers.b = 1", "barriers.b = 3");
    std::fs::write(&path, text).unwrap();
    let err = run(["levyliq", "liquidation", "prob", &path.display().to_string()]).unwrap_err().to_string();
    assert!(err.contains("a < b < c") && err.contains("barriers.a"), "{err}");
    std::fs::remove_file(&path).unwrap();

    let err = run(["levyliq", "liquidation", "prob"]).unwrap_err().to_string();
    assert!(err.contains("no configuration"), "{err}");
    let err = run(["levyliq", "liquidation", "laplace", &cfg_path("parisian.cfg")]).unwrap_err().to_string();
    assert!(err.contains("upper") || err.contains("barriers"), "{err}");
    assert!(run(["levyliq", "liquidation", "prob", &cfg_path("joint_law.cfg"), "--grid-u", "1:0:3"]).is_err());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_levyliq");
    let ok = Command::new(bin).args(["liquidation", "prob", &cfg_path("joint_law.cfg")]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8(ok.stdout).unwrap().starts_with("kind,value"));
    let bad = Command::new(bin).args(["liquidation", "prob", "/nonexistent.cfg"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let stderr = String::from_utf8(bad.stderr).unwrap();
    assert!(stderr.starts_with("error: ") && stderr.contains("cannot read"), "{stderr}");
}

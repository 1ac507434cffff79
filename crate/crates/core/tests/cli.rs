use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oam_spdc::GridMap;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oam-spdc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn report(path: &Path) -> HashMap<String, String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(report: &HashMap<String, String>, key: &str) -> f64 {
    report[key].parse().unwrap_or_else(|_| panic!("{key} = {}", report[key]))
}

const SMALL_GRID: &str = "grid.x_min = 3.2 cm\ngrid.x_max = 4.2 cm\ngrid.y_min = -1 cm\n\
                          grid.y_max = 1 cm\ngrid.step = 0.05 cm\n";

#[test]
fn defaults_match_the_documented_file() {
    let out = run(&["defaults"]);
    assert!(out.status.success());
    let golden = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/defaults.conf")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["scan"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate", "--config", "x"]).status.code(), Some(2));

    let bad_key = write_config(dir.path(), "a.conf", "bogus = 1\n");
    assert_eq!(run(&["scan", "--config", &bad_key]).status.code(), Some(3));
    let no_unit = write_config(dir.path(), "b.conf", "grid.step = 0.05\n");
    assert_eq!(run(&["scan", "--config", &no_unit]).status.code(), Some(3));

    let missing = dir.path().join("missing.conf");
    assert_eq!(run(&["scan", "--config", missing.to_str().unwrap()]).status.code(), Some(4));
    let no_map = write_config(dir.path(), "c.conf", "analyze.input = nowhere.csv\n");
    assert_eq!(run(&["analyze", "--config", &no_map]).status.code(), Some(4));

    let no_phase_match = write_config(dir.path(), "d.conf", "crystal.l_c = 1 um\n");
    let out = run(&["triple", "--config", &no_phase_match]);
    assert_eq!(out.status.code(), Some(5));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn gaussian_pump_scan_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "l0.conf", &format!("pump.l = 0\n{SMALL_GRID}"));
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();
    assert!(run(&["scan", "--config", &config, "--out", out]).status.success());
    let analyzed = run(&["analyze", "--config", &config, "--out", out]);
    assert!(analyzed.status.success(), "{}", String::from_utf8_lossy(&analyzed.stderr));
    let fit = report(&out_dir.join("fit.txt"));
    assert!(num(&fit, "delta_y0_cm") < 0.05);
    assert_eq!(fit["rounded_l"], "0");

    let csv = fs::read_to_string(out_dir.join("coincidence_map.csv")).unwrap();
    let map = GridMap::from_csv(&csv).unwrap();
    assert_eq!((map.nx(), map.ny()), (21, 41));
    assert_eq!(map.to_csv(), csv);
}

#[test]
fn donut_pump_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "l4.conf", &format!("pump.l = 4\noutput.dir = res\n{SMALL_GRID}"));
    let out = run(&["full", "--config", &config, "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listed.lines().count(), 4);
    let res = dir.path().join("res");
    let fit = report(&res.join("fit.txt"));
    assert_eq!(fit["rounded_l"], "4");
    let rates = report(&res.join("rates.txt"));
    assert_eq!(rates["model"], "quantum");
    assert_ne!(rates["R_triple_true_flag"], "significant");
}

#[test]
fn semiclassical_triple_rate() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "semi.conf", "triple.model = semiclassical\n");
    let out_dir = dir.path().join("o");
    assert!(run(&["triple", "--config", &config, "--out", out_dir.to_str().unwrap()]).status.success());
    let rates = report(&out_dir.join("rates.txt"));
    let measured = num(&rates, "R_triple_measured");
    let sigma = num(&rates, "R_triple_sigma");
    assert!((measured - 0.0196).abs() <= 3.0 * sigma, "{measured} +- {sigma}");
    assert!((num(&rates, "R_triple_semiclassical") - 0.0196).abs() < 0.002);
}

#[test]
fn seed_override_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "t.conf", "triple.duration = 100 s\n");
    let read = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = out_dir.to_str().unwrap();
        assert!(run(&["triple", "--config", &config, "--seed", seed, "--out", out]).status.success());
        fs::read(out_dir.join("rates.txt")).unwrap()
    };
    assert_eq!(read("5", "a"), read("5", "b"));
    assert_ne!(read("5", "a"), read("6", "c"));
}

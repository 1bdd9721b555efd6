//! Scenario loading, experiment runs and CSV reports.

use std::path::PathBuf;

use uclab::capacity::binary_entropy;
use uclab::harness::{report_to_csv, run_experiment, RunReport, Scenario};
use uclab::universal::weighted_rate;
use uclab::Error;

fn scenario(name: &str) -> Scenario {
    Scenario::load(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml")))
        .unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn every_bundled_scenario_loads() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 7);
}

#[test]
fn rows_are_seeds_times_epochs_and_summary_matches() {
    let report = run_experiment(&scenario("bec"), Some(&[9, 2]), 1).unwrap();
    let csv = report_to_csv(&report).unwrap();
    let rows = data_rows(&csv);
    let epochs: usize = report.runs.iter().map(|r| r.result.epochs.len()).sum();
    assert_eq!(rows.len(), epochs);
    assert_eq!(report.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![2, 9]);
    for run in &report.runs {
        let recomputed = weighted_rate(&run.result.epochs, &run.result.schedule).unwrap();
        assert!((recomputed - run.result.overall_rate).abs() < 1e-12);
        // the rows' per-symbol rates weighted by symbol counts give the summary
        let from_rows: f64 = rows
            .iter()
            .filter(|r| r[1] == run.seed.to_string())
            .map(|r| r[5].parse::<f64>().unwrap() * (r[3].parse::<f64>().unwrap() * r[4].parse::<f64>().unwrap()))
            .sum::<f64>()
            / run.result.schedule.total as f64;
        assert!((from_rows - run.result.overall_rate).abs() < 1e-5);
    }
    assert!(report.all_checks_pass());
}

#[test]
fn empty_report_is_header_only() {
    let csv = report_to_csv(&RunReport::empty("none")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn malformed_kind_is_a_config_error() {
    let text = "name = \"x\"\nseeds = [1]\n[channel]\nkind = \"warp\"\n[scheme]\ntotal = 4096\neps = 0.1\n";
    assert!(matches!(Scenario::from_toml(text), Err(Error::Config(_))));
    let empty = "name = \"x\"\nseeds = []\n[channel]\nkind = \"bsc\"\np = 0.1\n[scheme]\ntotal = 4096\neps = 0.1\n";
    assert!(matches!(Scenario::from_toml(empty), Err(Error::Config(_))));
}

#[test]
fn noiseless_channel_never_errs() {
    let report = run_experiment(&scenario("identity"), None, 0).unwrap();
    assert_eq!(report.runs.len(), 8);
    for r in &report.runs {
        assert!(!r.result.error);
        assert!(r.result.overall_rate > 0.0);
    }
    let b = report.reference.unwrap();
    assert_eq!(b.ifb_error, 0.0);
}

#[test]
fn rates_never_exceed_capacity() {
    for (name, capacity) in [("bsc011", 1.0 - binary_entropy(0.11).unwrap()), ("bec", 0.75)] {
        let report = run_experiment(&scenario(name), Some(&[0, 1, 2]), 0).unwrap();
        for r in &report.runs {
            assert!(r.result.overall_rate <= capacity, "{name}: {}", r.result.overall_rate);
            for e in &r.result.epochs {
                assert!(e.rate_per_symbol() <= capacity + 1e-12, "{name}: epoch rate {}", e.rate_per_symbol());
            }
        }
    }
}

//! Acceptance battery: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use uclab::capacity::binary_entropy;
use uclab::checks::{self, CheckOutcome};
use uclab::harness::{report_to_csv, run_experiment, RunReport, Scenario};
use uclab::reference::{ifb_error_exact, BlockCode};
use uclab::types::{Alphabet, TupleCodec};

struct Line {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn suite(id: usize, name: &'static str, outcome: uclab::Result<CheckOutcome>, budget: Option<Duration>) -> Line {
    match outcome {
        Ok(c) => {
            let in_time = budget.is_none_or(|b| c.elapsed < b);
            Line {
                id,
                name,
                passed: c.passed && in_time,
                detail: format!("{} instances in {:.2?}; {}", c.instances, c.elapsed, c.detail),
            }
        }
        Err(e) => Line {
            id,
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn stationary(report: &RunReport, elapsed: Duration) -> Line {
    let threshold = 0.5 * (1.0 - binary_entropy(0.11).expect("valid p"));
    let rates: Vec<f64> = report.runs.iter().map(|r| r.result.final_epoch().rate_per_symbol()).collect();
    let above = rates.iter().filter(|&&r| r >= threshold).count();
    let errors = report.error_fraction();
    let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    Line {
        id: 9,
        name: "stationary BSC(0.11) fixture",
        passed: report.runs.len() == 20
            && errors <= 0.1
            && above as f64 >= 0.9 * rates.len() as f64
            && elapsed <= Duration::from_secs(600),
        detail: format!(
            "error fraction {errors}; {above}/{} seeds with final rate >= {threshold:.6} (min {min:.4}); {elapsed:.2?}",
            rates.len()
        ),
    }
}

/// The k = 2 code that subtracts the known noise phase, evaluated exactly.
fn phase_subtracting_error(s: &Scenario) -> uclab::Result<(f64, f64)> {
    let model = s.channel.build()?;
    let codec = TupleCodec::new(2, Alphabet::new(2)?)?;
    let encoder: Vec<Vec<usize>> = (0..4).map(|m| vec![m >> 1, m & 1]).collect();
    let mut decoder = vec![0; 4];
    for (m, w) in encoder.iter().enumerate() {
        decoder[codec.index_of(&[w[0], w[1] ^ 1])?] = m;
    }
    let code = BlockCode::new(2, 2, 2, encoder, decoder)?;
    Ok((code.rate(), ifb_error_exact(&code, model.as_ref(), 8)?))
}

fn individual(report: &RunReport, reference: uclab::Result<(f64, f64)>) -> Line {
    let rates: Vec<f64> = report.runs.iter().map(|r| r.result.final_epoch().rate_per_symbol()).collect();
    let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let errors = report.runs.iter().filter(|r| r.result.error).count();
    let (ref_ok, ref_detail) = match reference {
        Ok((rate, e)) => ((rate - 1.0).abs() < 1e-12 && e == 0.0, format!("reference rate {rate}, ifb_error {e}")),
        Err(e) => (false, e.to_string()),
    };
    Line {
        id: 10,
        name: "individual-noise period-2 fixture",
        passed: report.runs.len() == 20 && errors == 0 && min >= 0.5 && ref_ok,
        detail: format!("{errors} errors over {} seeds; min final rate {min:.4}; {ref_detail}", rates.len()),
    }
}

fn determinism(first: &[(String, String)]) -> Line {
    let mut mismatched = Vec::new();
    for (name, csv) in first {
        let again = run_experiment(&scenario(name), None, 0).and_then(|r| report_to_csv(&r));
        if again.as_deref() != Ok(csv.as_str()) {
            mismatched.push(name.clone());
        }
    }
    Line {
        id: 11,
        name: "determinism",
        passed: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            format!("{} scenarios rerun byte-identical", first.len())
        } else {
            format!("differing CSV: {}", mismatched.join(", "))
        },
    }
}

fn main() -> ExitCode {
    let mut lines = vec![
        suite(1, "capacity oracle", checks::capacity_oracle(), None),
        suite(2, "mixing bounds", checks::mixing(1000), Some(Duration::from_secs(60))),
        suite(3, "L1 deterioration", checks::l1_deterioration(1000), None),
        suite(4, "Fano variant", checks::fano(200), None),
        suite(5, "fading memory", checks::prop3(50), Some(Duration::from_secs(120))),
        suite(6, "alignment identities", checks::alignment_identities(500), None),
        suite(7, "AFB >= IFB", checks::afb_vs_ifb(120), None),
        suite(8, "summation decay", checks::summation_decay(), None),
    ];

    let mut csvs = Vec::new();
    let bsc = scenario("bsc011");
    let start = Instant::now();
    match run_experiment(&bsc, None, 0) {
        Ok(report) => {
            lines.push(stationary(&report, start.elapsed()));
            csvs.push((bsc.name.clone(), report_to_csv(&report).unwrap_or_default()));
        }
        Err(e) => lines.push(Line {
            id: 9,
            name: "stationary BSC(0.11) fixture",
            passed: false,
            detail: e.to_string(),
        }),
    }

    let modulo = scenario("modulo");
    match run_experiment(&modulo, None, 0) {
        Ok(report) => {
            lines.push(individual(&report, phase_subtracting_error(&modulo)));
            csvs.push((modulo.name.clone(), report_to_csv(&report).unwrap_or_default()));
        }
        Err(e) => lines.push(Line {
            id: 10,
            name: "individual-noise period-2 fixture",
            passed: false,
            detail: e.to_string(),
        }),
    }

    for name in ["identity", "password"] {
        if let Ok(csv) = run_experiment(&scenario(name), None, 0).and_then(|r| report_to_csv(&r)) {
            csvs.push((name.to_string(), csv));
        }
    }
    lines.push(determinism(&csvs));

    for l in &lines {
        println!("{} {:>2} {:<34} {}", if l.passed { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

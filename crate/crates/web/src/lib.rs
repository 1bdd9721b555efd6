//! Browser demo: three operations of `uclab` exported through
//! wasm-bindgen. Each returns a JSON string; errors come back as
//! `{"error": "..."}`.

use std::sync::Arc;

use serde::Serialize;
use uclab::capacity::{blahut_arimoto, binary_entropy, Dmc};
use uclab::channels::exact::fading_memory_gap;
use uclab::channels::{prop3_bound, CausalChannel, ChannelModel, DmcChannel, FsmChannel};
use uclab::types::{RandomSource, Transcript};
use uclab::universal::{universal_run, UniversalParams};
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct CapacityPoint {
    pub p: f64,
    pub bsc: f64,
    pub bsc_exact: f64,
    pub bec: f64,
    pub iterations: usize,
}

/// Blahut-Arimoto capacities of BSC(p) and BEC(p) on a grid of `points`
/// crossover/erasure values in `[0, 0.5]`, with the closed form.
pub fn capacity_curve(points: usize) -> uclab::Result<Vec<CapacityPoint>> {
    let points = points.clamp(2, 201);
    (0..points)
        .map(|i| {
            let p = 0.5 * i as f64 / (points - 1) as f64;
            let bsc = blahut_arimoto(&Dmc::bsc(p)?, 1e-9)?;
            let bec = blahut_arimoto(&Dmc::bec(p)?, 1e-9)?;
            Ok(CapacityPoint {
                p,
                bsc: bsc.capacity,
                bsc_exact: 1.0 - binary_entropy(p)?,
                bec: bec.capacity,
                iterations: bsc.iterations + bec.iterations,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct GapPoint {
    pub l: usize,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct FadingReport {
    pub beta: f64,
    pub points: Vec<GapPoint>,
}

/// Fading-memory gap of a random two-state channel with transition floor
/// `beta`, against its exponential bound, for `L = 0..=max_l` and a window
/// of one output.
pub fn fading_curve(beta: f64, seed: u64, max_l: usize) -> uclab::Result<FadingReport> {
    let max_l = max_l.min(5);
    let mut rng = RandomSource::new(seed, 0);
    let fsm = Arc::new(FsmChannel::random_beta_floor(2, 2, 2, beta, 1, &mut rng)?);
    let mut points = Vec::with_capacity(max_l + 1);
    for l in 0..=max_l {
        let n = l + 2;
        let h = n - l - 1;
        let xs: Vec<usize> = (0..h).map(|_| rng.below(2)).collect();
        let ys = CausalChannel::new(fsm.clone()).transmit(&xs, &mut rng)?;
        let history = Transcript::new(xs, ys)?;
        points.push(GapPoint {
            l,
            gap: fading_memory_gap(fsm.as_ref(), n, n, l, &history)?,
            bound: prop3_bound(2, fsm.beta(), l)?,
        });
    }
    Ok(FadingReport { beta: fsm.beta(), points })
}

#[derive(Debug, Serialize)]
pub struct EpochPoint {
    pub m: usize,
    pub q: usize,
    pub symbols: usize,
    pub rate: f64,
    pub capacity_estimate: f64,
    pub error: bool,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub capacity: f64,
    pub overall_rate: f64,
    pub error: bool,
    pub feedback_bits: u64,
    pub epochs: Vec<EpochPoint>,
}

/// One run of the universal scheme over BSC(p) for `total` symbols.
pub fn bsc_run(p: f64, total: usize, eps: f64, seed: u64) -> uclab::Result<RunSummary> {
    let total = total.clamp(256, 1 << 15);
    let model: Arc<dyn ChannelModel> = Arc::new(DmcChannel::new(Dmc::bsc(p)?));
    let r = universal_run(model, &UniversalParams::new(total, eps), seed)?;
    let epochs = r
        .schedule
        .epochs
        .iter()
        .zip(&r.epochs)
        .map(|(e, a)| EpochPoint {
            m: e.m,
            q: e.q,
            symbols: e.symbols(),
            rate: a.rate_per_symbol(),
            capacity_estimate: a.capacity_estimate / a.q as f64,
            error: a.error,
        })
        .collect();
    Ok(RunSummary {
        capacity: 1.0 - binary_entropy(p)?,
        overall_rate: r.overall_rate,
        error: r.error,
        feedback_bits: r.feedback_bits,
        epochs,
    })
}

fn to_json<T: Serialize>(r: uclab::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[wasm_bindgen(js_name = capacityCurve)]
pub fn capacity_curve_json(points: usize) -> String {
    to_json(capacity_curve(points))
}

#[wasm_bindgen(js_name = fadingCurve)]
pub fn fading_curve_json(beta: f64, seed: u32, max_l: usize) -> String {
    to_json(fading_curve(beta, seed as u64, max_l))
}

#[wasm_bindgen(js_name = bscRun)]
pub fn bsc_run_json(p: f64, total: usize, eps: f64, seed: u32) -> String {
    to_json(bsc_run(p, total, eps, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_curve_matches_closed_form() {
        let c = capacity_curve(11).unwrap();
        assert_eq!(c.len(), 11);
        for pt in &c {
            assert!((pt.bsc - pt.bsc_exact).abs() < 1e-6);
            assert!((pt.bec - (1.0 - pt.p)).abs() < 1e-6);
        }
    }

    #[test]
    fn fading_gaps_respect_the_bound() {
        let r = fading_curve(0.2, 3, 4).unwrap();
        assert_eq!(r.points.len(), 5);
        assert!(r.points.iter().all(|p| p.gap <= p.bound + 1e-12));
    }

    #[test]
    fn run_reports_epochs() {
        let r = bsc_run(0.05, 4096, 0.1, 1).unwrap();
        assert_eq!(r.epochs.iter().map(|e| e.symbols).sum::<usize>(), 4096);
        assert!(r.overall_rate <= r.capacity);
    }

    #[test]
    fn errors_are_json() {
        let v: serde_json::Value = serde_json::from_str(&fading_curve_json(0.9, 0, 2)).unwrap();
        assert!(v.get("error").is_some());
    }
}

//! Seeded invariant suites over exhaustively evaluated small instances.
//!
//! Each suite draws its instances from a fixed seed, evaluates the property
//! exactly, and reports the worst case found. The default sizes are the
//! ones the acceptance battery runs.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rayon::prelude::*;

use crate::capacity::{averaged_channel, binary_entropy, blahut_arimoto, capacity, mixing_bounds, pessimistic_capacity, Dmc};
use crate::channels::exact::{block_kernel, point_belief};
use crate::channels::{
    fading_memory_gap, CausalChannel, ChannelModel, DmcChannel, FsmChannel, ModuloAdditiveChannel, Noise,
    PasswordChannel,
};
use crate::error::{Error, Result};
use crate::reference::{
    afb_error, alignment, block_error_exact, collapsed_channel, fano_lower_bound, ifb_error_exact, random_block_code,
    BlockCode, CollapseMode,
};
use crate::types::{Dist, RandomSource, Transcript, TupleCodec, Alphabet};
use crate::universal::{build_schedule, default_n_star, delta_c, summation_check, weighted_rate, AdaptiveResult};

/// Names accepted by [`run_suite`], in the order `all` runs them.
pub const SUITES: &[&str] = &[
    "capacity",
    "mixing",
    "l1_deterioration",
    "fano",
    "prop3",
    "alignment",
    "afb_ifb",
    "summation",
    "collapse",
    "schedule",
    "proposition2",
    "pessimistic",
];

const SEED: u64 = 0x5eed;

/// Verdict of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub suite: String,
    pub passed: bool,
    pub instances: usize,
    /// Worst case found, or the first violation.
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckOutcome {
    fn new(suite: &str, instances: usize, violation: Option<String>, worst: String, start: Instant) -> Self {
        CheckOutcome {
            suite: suite.to_string(),
            passed: violation.is_none(),
            instances,
            detail: violation.unwrap_or(worst),
            elapsed: start.elapsed(),
        }
    }
}

/// Runs the named suite at its default size.
pub fn run_suite(name: &str) -> Result<CheckOutcome> {
    match name {
        "capacity" => capacity_oracle(),
        "mixing" => mixing(1000),
        "l1_deterioration" => l1_deterioration(1000),
        "fano" => fano(200),
        "prop3" => prop3(50),
        "alignment" => alignment_identities(500),
        "afb_ifb" => afb_vs_ifb(120),
        "summation" => summation_decay(),
        "collapse" => collapse_gap(40),
        "schedule" => schedule_identities(200),
        "proposition2" => proposition2(200),
        "pessimistic" => pessimistic_below_averaged(30),
        other => Err(Error::Config(format!(
            "unknown suite `{other}`; expected one of {} or all",
            SUITES.join(", ")
        ))),
    }
}

/// Runs `all` or a single suite.
pub fn run_suites(name: &str) -> Result<Vec<CheckOutcome>> {
    if name == "all" {
        SUITES.iter().map(|s| run_suite(s)).collect()
    } else {
        Ok(vec![run_suite(name)?])
    }
}

fn random_row(n: usize, rng: &mut RandomSource) -> Vec<f64> {
    // occasional exact zeros exercise the boundary of the simplex
    let w: Vec<f64> = (0..n)
        .map(|_| if rng.below(6) == 0 { 0.0 } else { -rng.unit().max(1e-300).ln() })
        .collect();
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        let mut e = vec![0.0; n];
        e[rng.below(n)] = 1.0;
        return e;
    }
    w.into_iter().map(|v| v / s).collect()
}

fn random_dmc(inputs: usize, outputs: usize, rng: &mut RandomSource) -> Dmc {
    let flat: Vec<f64> = (0..inputs).flat_map(|_| random_row(outputs, rng)).collect();
    Dmc::from_flat(inputs, outputs, flat).expect("rows are normalized")
}

/// Blahut-Arimoto against `1 - h(p)` for BSC and `1 - e` for BEC.
pub fn capacity_oracle() -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    let mut slowest = Duration::ZERO;
    let mut violation = None;
    let mut instances = 0;
    for i in 0..=10 {
        let p = 0.05 * i as f64;
        for (name, w, exact) in [
            ("BSC", Dmc::bsc(p)?, 1.0 - binary_entropy(p)?),
            ("BEC", Dmc::bec(p)?, 1.0 - p),
        ] {
            let t = Instant::now();
            let c = blahut_arimoto(&w, 1e-9)?.capacity;
            let took = t.elapsed();
            slowest = slowest.max(took);
            instances += 1;
            let err = (c - exact).abs();
            if err > worst.0 {
                worst = (err, format!("{name}({p:.2})"));
            }
            if violation.is_none() && (err > 1e-6 || took > Duration::from_secs(1)) {
                violation = Some(format!("{name}({p:.2}): |{c} - {exact}| = {err:e} in {took:?}"));
            }
        }
    }
    let detail = format!("max deviation {:e} at {}; slowest solve {slowest:?}", worst.0, worst.1);
    Ok(CheckOutcome::new("capacity", instances, violation, detail, start))
}

/// `sum p C(W_i) - H(p) <= C(sum p W_i) <= sum p C(W_i)` on random mixtures.
pub fn mixing(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let root = RandomSource::new(SEED, 2);
    let results: Vec<(f64, Option<String>)> = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<String>)> {
            let mut rng = root.fork(&[i as u64]);
            let (nx, ny, j) = (2 + rng.below(3), 2 + rng.below(3), 1 + rng.below(3));
            let ws: Vec<Dmc> = (0..j).map(|_| random_dmc(nx, ny, &mut rng)).collect();
            let p = Dist::new(random_row(j, &mut rng))?;
            let b = mixing_bounds(&ws, &p, 1e-10)?;
            let slack = (b.mixed_capacity - b.lower).min(b.upper - b.mixed_capacity);
            let bad = b.lower - 1e-9 > b.mixed_capacity || b.mixed_capacity > b.upper + 1e-9;
            Ok((slack, bad.then(|| format!("instance {i}: {b:?}"))))
        })
        .collect::<Result<_>>()?;
    let tightest = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let violation = results.into_iter().find_map(|r| r.1);
    Ok(CheckOutcome::new(
        "mixing",
        instances,
        violation,
        format!("tightest side {tightest:e} bits"),
        start,
    ))
}

/// Error probabilities of one code over two vector channels differ by at
/// most their max-row L1 distance.
pub fn l1_deterioration(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let root = RandomSource::new(SEED, 3);
    let mut tightest = f64::INFINITY;
    let mut violation = None;
    for i in 0..instances {
        let mut rng = root.fork(&[i as u64]);
        let (nx, ny, k) = (2 + rng.below(3), 2 + rng.below(3), 1 + rng.below(2));
        let xs = nx.pow(k as u32);
        let ys = ny.pow(k as u32);
        let w1 = random_dmc(xs, ys, &mut rng);
        // the second kernel is a random perturbation of the first
        let t = rng.unit();
        let other = random_dmc(xs, ys, &mut rng);
        let flat: Vec<f64> = w1.as_flat().iter().zip(other.as_flat()).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let w2 = Dmc::from_flat(xs, ys, flat)?;
        let m = 2 + rng.below(xs.min(4) - 1);
        let xc = TupleCodec::new(k, Alphabet::new(nx)?)?;
        let encoder = (0..m).map(|_| xc.tuple_of(rng.below(xs))).collect::<Result<Vec<_>>>()?;
        let decoder = (0..ys).map(|_| rng.below(m)).collect();
        let code = BlockCode::new(k, nx, ny, encoder, decoder)?;
        let gap = (block_error_exact(&code, &w1)? - block_error_exact(&code, &w2)?).abs();
        let h = w1.max_row_l1(&w2)?;
        tightest = tightest.min(h - gap);
        if violation.is_none() && gap > h + 1e-12 {
            violation = Some(format!("instance {i}: |e1 - e2| = {gap} > h = {h}"));
        }
    }
    Ok(CheckOutcome::new(
        "l1_deterioration",
        instances,
        violation,
        format!("smallest h - |e1 - e2| = {tightest:e}"),
        start,
    ))
}

/// Every binary codebook of distinct codewords with `k <= 3`, `2 <= M <= 4`
/// meets the Fano-variant bound on the capacity of its collapsed channel.
pub fn fano(channels: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut codebooks: Vec<(usize, Vec<usize>)> = Vec::new();
    for k in 1..=3usize {
        let words = 1usize << k;
        for mask in 0u32..(1 << words) {
            let m = mask.count_ones() as usize;
            if (2..=4).contains(&m) {
                codebooks.push((k, (0..words).filter(|&w| mask >> w & 1 == 1).collect()));
            }
        }
    }
    let root = RandomSource::new(SEED, 4);
    let results: Vec<(usize, f64, Option<String>)> = (0..channels)
        .into_par_iter()
        .map(|c| -> Result<(usize, f64, Option<String>)> {
            let mut rng = root.fork(&[c as u64]);
            let ny = 2 + rng.below(2);
            let model = DmcChannel::new(random_dmc(2, ny, &mut rng));
            let mut tightest = f64::INFINITY;
            let mut violation = None;
            for (k, words) in &codebooks {
                let xc = TupleCodec::new(*k, Alphabet::new(2)?)?;
                let kernel = model.matrix().power(*k)?;
                let encoder = words.iter().map(|&w| xc.tuple_of(w)).collect::<Result<Vec<_>>>()?;
                let code = BlockCode::with_ml_decoder(*k, encoder, &kernel)?;
                let eps_bar = block_error_exact(&code, &kernel)?;
                let collapsed = collapsed_channel(&model, &code, &[1], *k, 1, CollapseMode::Realized)?;
                let c_value = capacity(&collapsed.channel, 1e-10)?;
                let rate = (words.len() as f64).log2() / *k as f64;
                let bound = fano_lower_bound(*k as f64 * rate, 1, *k, rate, eps_bar)?;
                tightest = tightest.min(c_value - bound);
                if violation.is_none() && c_value + 1e-9 < bound {
                    violation = Some(format!("channel {c}, k={k}, words {words:?}: C = {c_value} < {bound}"));
                }
            }
            Ok((codebooks.len(), tightest, violation))
        })
        .collect::<Result<_>>()?;
    let instances = results.iter().map(|r| r.0).sum();
    let tightest = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let violation = results.into_iter().find_map(|r| r.2);
    Ok(CheckOutcome::new(
        "fano",
        instances,
        violation,
        format!("smallest C - bound = {tightest:e}"),
        start,
    ))
}

/// A positive-probability history of length `h`, sampled from the channel.
fn sampled_history(model: Arc<dyn ChannelModel>, h: usize, rng: &mut RandomSource) -> Result<Transcript> {
    let nx = model.input_size();
    let mut ch = CausalChannel::new(model);
    let xs: Vec<usize> = (0..h).map(|_| rng.below(nx)).collect();
    let ys = ch.transmit(&xs, rng)?;
    Transcript::new(xs, ys)
}

fn random_fsm(rng: &mut RandomSource) -> Result<FsmChannel> {
    let beta = 0.02 + 0.48 * rng.unit();
    let period = 1 + rng.below(2);
    FsmChannel::random_beta_floor(2, 2, 2, beta, period, rng)
}

/// Two-state beta-floor channels forget their past: the fading gap is at
/// most `2 (1 - 2 beta)^(L+1)`.
pub fn prop3(channels: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let root = RandomSource::new(SEED, 5);
    let results: Vec<(usize, f64, Option<String>)> = (0..channels)
        .into_par_iter()
        .map(|c| -> Result<(usize, f64, Option<String>)> {
            let mut rng = root.fork(&[c as u64]);
            let fsm = Arc::new(random_fsm(&mut rng)?);
            let beta = fsm.beta();
            let mut count = 0;
            let mut tightest = f64::INFINITY;
            let mut violation = None;
            for l in 0..=3usize {
                for n in (l + 1)..=4 {
                    for m in n..=4 {
                        let history = sampled_history(fsm.clone(), n - l - 1, &mut rng)?;
                        let gap = fading_memory_gap(fsm.as_ref(), n, m, l, &history)?;
                        let bound = crate::channels::prop3_bound(2, beta, l)?;
                        count += 1;
                        tightest = tightest.min(bound - gap);
                        if violation.is_none() && gap > bound + 1e-12 {
                            violation = Some(format!("channel {c}, L={l}, n={n}, m={m}: gap {gap} > {bound}"));
                        }
                    }
                }
            }
            Ok((count, tightest, violation))
        })
        .collect::<Result<_>>()?;
    let instances = results.iter().map(|r| r.0).sum();
    let tightest = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let violation = results.into_iter().find_map(|r| r.2);
    Ok(CheckOutcome::new(
        "prop3",
        instances,
        violation,
        format!("smallest bound - gap = {tightest:e}"),
        start,
    ))
}

/// `sum lambda_j = 1` exactly, `n0 <= (L - 1 + 2k) N_m` and
/// `lambda_0 <= (L - 1 + 2k) / q` on a random grid.
pub fn alignment_identities(points: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = RandomSource::new(SEED, 6);
    let mut violation = None;
    let mut max_ratio = 0.0f64;
    for i in 0..points {
        let q = 1 + rng.below(64);
        let k = 1 + rng.below(8);
        let l = 1 + rng.below(q);
        let n_m = 1 + rng.below(32);
        let a = alignment(q, k, l, n_m)?;
        let sum: Ratio<u64> = a.lambdas.iter().copied().sum();
        let budget = (l - 1 + 2 * k) * n_m;
        max_ratio = max_ratio.max(a.n0 as f64 / budget as f64);
        let lambda0_ok = a.lambdas[0] <= Ratio::new((l - 1 + 2 * k) as u64, q as u64);
        if violation.is_none() && (sum != Ratio::from_integer(1) || a.n0 > budget || !lambda0_ok) {
            violation = Some(format!(
                "point {i} (q={q}, k={k}, L={l}, N={n_m}): sum {sum}, n0 {} vs {budget}",
                a.n0
            ));
        }
    }
    Ok(CheckOutcome::new(
        "alignment",
        points,
        violation,
        format!("largest n0 / ((L-1+2k) N_m) = {max_ratio:.4}"),
        start,
    ))
}

fn test_channel(i: usize, rng: &mut RandomSource) -> Result<Arc<dyn ChannelModel>> {
    Ok(match i % 5 {
        0 => Arc::new(DmcChannel::new(random_dmc(2, 2, rng))),
        1 => Arc::new(PasswordChannel::new(rng.below(2))?),
        2 => Arc::new(ModuloAdditiveChannel::new(
            2,
            Noise::Periodic((0..1 + rng.below(3)).map(|_| rng.below(2)).collect()),
        )?),
        _ => Arc::new(random_fsm(rng)?),
    })
}

/// The arbitrary-mapping error is never below the iterative one.
pub fn afb_vs_ifb(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let root = RandomSource::new(SEED, 7);
    let results: Vec<(f64, Option<String>)> = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<String>)> {
            let mut rng = root.fork(&[i as u64]);
            let model = test_channel(i, &mut rng)?;
            let k = 1 + rng.below(2);
            let m = 2 + rng.below((1 << k) - 1);
            let blocks = 1 + rng.below(3);
            let kernel = block_kernel(model.as_ref(), 0, &point_belief(model.state_count(), model.initial_state()), k, 0)?;
            let code = random_block_code(k, m, &Dist::uniform(2), Some(&kernel), 2, &mut rng)?;
            let ifb = ifb_error_exact(&code, model.as_ref(), blocks)?;
            let afb = afb_error(&code, model.as_ref(), blocks)?;
            let bad = afb + 1e-12 < ifb;
            Ok((afb - ifb, bad.then(|| format!("instance {i} ({}): afb {afb} < ifb {ifb}", model.name()))))
        })
        .collect::<Result<_>>()?;
    let tightest = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let violation = results.into_iter().find_map(|r| r.1);
    Ok(CheckOutcome::new(
        "afb_ifb",
        instances,
        violation,
        format!("smallest afb - ifb = {tightest:e}"),
        start,
    ))
}

/// `sum 2^i / i / sum 2^i` decreases over n = 10, 20, 40, 80 and ends below 0.05.
pub fn summation_decay() -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut values = Vec::new();
    for n in [10usize, 20, 40, 80] {
        let a: Vec<f64> = (1..=n).map(|i| (i as f64).exp2()).collect();
        let d: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
        values.push(summation_check(&a, &d)?);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let last = *values.last().expect("four values");
    let detail = format!("values {values:.5?}");
    let violation = (!decreasing || last >= 0.05).then(|| detail.clone());
    Ok(CheckOutcome::new("summation", values.len(), violation, detail, start))
}

/// Realized and state-forced collapsed channels of beta-floor channels stay
/// within `2 (1 - 2 beta)^(L-1)` in max-row L1.
pub fn collapse_gap(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let root = RandomSource::new(SEED, 8);
    let results: Vec<(f64, Option<String>)> = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<String>)> {
            let mut rng = root.fork(&[i as u64]);
            let fsm = random_fsm(&mut rng)?;
            let q = 1 + rng.below(3);
            let l = 1 + rng.below(q);
            let k = 1 + rng.below(2);
            let n_m = 2 + rng.below(3);
            let j = 1 + rng.below(k.min(n_m));
            let set = alignment(q, k, l, n_m)?.set(j);
            let kernel = block_kernel(&fsm, 0, &point_belief(2, fsm.initial_state()), k, 0)?;
            let code = random_block_code(k, 2, &Dist::uniform(2), Some(&kernel), 2, &mut rng)?;
            let forced: Vec<usize> = set.iter().map(|_| rng.below(2)).collect();
            let realized = collapsed_channel(&fsm, &code, &set, q, l, CollapseMode::Realized)?;
            let pinned = collapsed_channel(&fsm, &code, &set, q, l, CollapseMode::Forced(forced))?;
            let gap = realized.channel.max_row_l1(&pinned.channel)?;
            let bound = 2.0 * (1.0 - 2.0 * fsm.beta()).powi(l as i32 - 1);
            let bad = gap > bound + 1e-12;
            Ok((bound - gap, bad.then(|| format!("instance {i} (q={q}, L={l}): {gap} > {bound}"))))
        })
        .collect::<Result<_>>()?;
    let tightest = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let violation = results.into_iter().find_map(|r| r.1);
    Ok(CheckOutcome::new(
        "collapse",
        instances,
        violation,
        format!("smallest bound - gap = {tightest:e}"),
        start,
    ))
}

/// Schedules tile the horizon exactly, respect the minimum lengths, and
/// spend at most half the error budget on errors.
pub fn schedule_identities(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = RandomSource::new(SEED, 9);
    let mut violation = None;
    let mut max_epochs = 0;
    for i in 0..instances {
        let total = 64 + rng.below(1 << 18);
        let eps = 0.01 + 0.5 * rng.unit();
        let c_delta = 0.1 + rng.unit();
        let target = delta_c(64.0, c_delta)?;
        let s = build_schedule(total, eps, target, c_delta, default_n_star)?;
        max_epochs = max_epochs.max(s.epochs.len());
        let tiled: usize = s.epochs.iter().map(|e| e.symbols()).sum();
        let spent: f64 = s.epochs.iter().map(|e| 2.0 * e.eps).sum();
        let mut prev = 0;
        let mut short = false;
        for e in &s.epochs {
            short |= e.n < default_n_star(e.m, prev);
            prev = e.symbols();
        }
        if violation.is_none() && (tiled != total || spent > eps || short) {
            violation = Some(format!("instance {i} (N={total}, eps={eps}): tiled {tiled}, spent {spent}"));
        }
    }
    Ok(CheckOutcome::new(
        "schedule",
        instances,
        violation,
        format!("up to {max_epochs} epochs"),
        start,
    ))
}

/// With epoch rates at `q (C_m - delta_m) - Delta_C`, the weighted rate is
/// at least the symbol-averaged capacity minus the weighted shortfall.
pub fn proposition2(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut rng = RandomSource::new(SEED, 10);
    let mut violation = None;
    let mut tightest = f64::INFINITY;
    for i in 0..instances {
        let total = 64 + rng.below(1 << 16);
        let eps = 0.1;
        let target = delta_c(64.0, 1.0)?;
        let s = build_schedule(total, eps, target, 1.0, default_n_star)?;
        let caps: Vec<f64> = s.epochs.iter().map(|_| rng.unit()).collect();
        let results: Vec<AdaptiveResult> = s
            .epochs
            .iter()
            .zip(&caps)
            .map(|(e, &c)| {
                let rate = (e.q as f64 * (c - e.delta) - s.delta_c).max(0.0);
                mocked_result(e.n, e.q, rate)
            })
            .collect();
        let rate = weighted_rate(&results, &s)?;
        let a: Vec<f64> = s.epochs.iter().map(|e| e.symbols() as f64).collect();
        let c_bar = summation_check(&a, &caps)?;
        let shortfall: Vec<f64> = s.epochs.iter().map(|e| e.delta + s.delta_c / e.q as f64).collect();
        let delta_prime = summation_check(&a, &shortfall)?;
        tightest = tightest.min(rate - (c_bar - delta_prime));
        if violation.is_none() && rate + 1e-12 < c_bar - delta_prime {
            violation = Some(format!("instance {i}: rate {rate} < {c_bar} - {delta_prime}"));
        }
    }
    Ok(CheckOutcome::new(
        "proposition2",
        instances,
        violation,
        format!("smallest slack {tightest:e}"),
        start,
    ))
}

fn mocked_result(n: usize, q: usize, rate: f64) -> AdaptiveResult {
    AdaptiveResult {
        n,
        q,
        rate,
        decoded_bits: (rate * n as f64).ceil() as usize,
        error: false,
        capacity_estimate: 0.0,
        margin: 0.0,
        feedback_bits: 0,
        letter: 1,
        training_letters: 0,
        estimate: None,
    }
}

/// The pessimistic capacity never exceeds the capacity of the averaged
/// channel along any particular state sequence.
pub fn pessimistic_below_averaged(instances: usize) -> Result<CheckOutcome> {
    let start = Instant::now();
    let root = RandomSource::new(SEED, 11);
    let results: Vec<(f64, Option<String>)> = (0..instances)
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<String>)> {
            let mut rng = root.fork(&[i as u64]);
            let fsm = random_fsm(&mut rng)?;
            let q = 1 + rng.below(2);
            let n = 1 + rng.below(3);
            let p = pessimistic_capacity(&fsm, q, n, 1e-10)?;
            let states: Vec<usize> = (0..n).map(|_| rng.below(2)).collect();
            let kernels = states
                .iter()
                .enumerate()
                .map(|(t, &s)| block_kernel(&fsm, t * q, &point_belief(2, s), q, 0))
                .collect::<Result<Vec<_>>>()?;
            let c = capacity(&averaged_channel(&kernels)?, 1e-10)?;
            let bad = p.capacity > c + 1e-9;
            Ok((c - p.capacity, bad.then(|| format!("instance {i}: {} > {c} along {states:?}", p.capacity))))
        })
        .collect::<Result<_>>()?;
    let tightest = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let violation = results.into_iter().find_map(|r| r.1);
    Ok(CheckOutcome::new(
        "pessimistic",
        instances,
        violation,
        format!("smallest averaged - pessimistic = {tightest:e}"),
        start,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for outcome in [
            capacity_oracle().unwrap(),
            mixing(20).unwrap(),
            l1_deterioration(20).unwrap(),
            fano(3).unwrap(),
            prop3(2).unwrap(),
            alignment_identities(50).unwrap(),
            afb_vs_ifb(10).unwrap(),
            summation_decay().unwrap(),
            collapse_gap(5).unwrap(),
            schedule_identities(20).unwrap(),
            proposition2(20).unwrap(),
            pessimistic_below_averaged(3).unwrap(),
        ] {
            assert!(outcome.passed, "{}: {}", outcome.suite, outcome.detail);
            assert!(outcome.instances > 0);
        }
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(matches!(run_suite("nope"), Err(Error::Config(_))));
        assert_eq!(run_suites("summation").unwrap().len(), 1);
    }
}

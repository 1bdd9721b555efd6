//! The universal scheme: epochs of growing super-symbol dimension, each
//! running the adaptive-rate inner scheme, with per-epoch error budgets
//! and rate aggregation.

pub mod inner;
pub mod polar;

pub use inner::{inner_scheme_run, AdaptiveResult, InnerParams};

use crate::channels::{CausalChannel, ChannelModel, SuperSymbolView};
use crate::error::{Error, Result};
use crate::types::RandomSource;
use std::sync::Arc;

/// `c_delta (ln^2(n) / n)^(1/4)`.
pub fn delta_c(n: f64, c_delta: f64) -> Result<f64> {
    if !(n >= 2.0) || !(c_delta >= 0.0) {
        return Err(Error::InvalidArgs(format!("delta_c needs n >= 2, c >= 0; got n={n}, c={c_delta}")));
    }
    Ok(c_delta * (n.ln().powi(2) / n).powf(0.25))
}

/// One epoch of the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch {
    /// 1-based epoch number.
    pub m: usize,
    /// Super-symbol dimension `2^(m-1)`.
    pub q: usize,
    /// Super-symbols in the epoch.
    pub n: usize,
    /// Error budget `eps 2^-m / 2`.
    pub eps: f64,
    /// Rate-shortfall budget, equal to `eps`.
    pub delta: f64,
    /// First symbol of the epoch (0-based).
    pub start: usize,
}

impl Epoch {
    pub fn symbols(&self) -> usize {
        self.q * self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSchedule {
    pub total: usize,
    pub eps: f64,
    pub delta_c: f64,
    pub epochs: Vec<Epoch>,
}

/// The default minimum epoch length: at least 64 super-symbols and no
/// fewer symbols than the previous epoch.
pub fn default_n_star(m: usize, previous_symbols: usize) -> usize {
    let q = 1usize << (m - 1);
    64usize.max(previous_symbols / q)
}

/// Builds the epoch plan for `total` symbols.
///
/// Epoch `m` gets the smallest `N_m` that is at least
/// `n_star(m, previous epoch's symbols)` and whose `delta_c(N_m, c_delta)`
/// is at most `target_delta_c`. When the following epoch would run past
/// `total`, the current one is extended instead: it takes every whole
/// super-symbol of the remainder, and the leftover symbols (fewer than
/// `q_M`, a sum of distinct smaller powers of two) each add one
/// super-symbol to the earlier epoch of that dimension, so the plan covers
/// exactly `total` symbols.
pub fn build_schedule(
    total: usize,
    eps: f64,
    target_delta_c: f64,
    c_delta: f64,
    n_star: impl Fn(usize, usize) -> usize,
) -> Result<EpochSchedule> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgs(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(target_delta_c > 0.0) {
        return Err(Error::InvalidArgs(format!("Delta_C = {target_delta_c} must be positive")));
    }
    let length = |m: usize, prev: usize| -> Result<usize> {
        let mut n = n_star(m, prev).max(2);
        if delta_c(n as f64, c_delta)? > target_delta_c {
            // decreasing beyond e^2: double, then bisect
            n = n.max(8);
            let mut hi = n;
            while delta_c(hi as f64, c_delta)? > target_delta_c {
                hi = hi.checked_mul(2).ok_or(Error::InvalidArgs("Delta_C unreachable".into()))?;
            }
            let mut lo = hi / 2;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if delta_c(mid as f64, c_delta)? > target_delta_c {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            n = hi;
        }
        Ok(n)
    };
    let first = length(1, 0)?;
    if total < first {
        return Err(Error::NTooSmall { n: total, min: first });
    }
    let mut sizes: Vec<usize> = Vec::new();
    let mut used = 0usize;
    let mut m = 1;
    let mut n_m = first;
    loop {
        let q = 1usize << (m - 1);
        sizes.push(n_m);
        used += q * n_m;
        let next = length(m + 1, q * n_m)?;
        let next_q = 2 * q;
        if used + next_q * next > total {
            let rest = total - used;
            sizes[m - 1] += rest / q;
            let leftover = rest % q;
            for (j, size) in sizes.iter_mut().enumerate().take(m - 1) {
                if leftover & (1 << j) != 0 {
                    *size += 1;
                }
            }
            break;
        }
        n_m = next;
        m += 1;
    }
    let mut epochs = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for (i, &n) in sizes.iter().enumerate() {
        let m = i + 1;
        let q = 1usize << i;
        let e = eps * (-(m as f64)).exp2() / 2.0;
        epochs.push(Epoch {
            m,
            q,
            n,
            eps: e,
            delta: e,
            start,
        });
        start += q * n;
    }
    debug_assert_eq!(start, total);
    Ok(EpochSchedule {
        total,
        eps,
        delta_c: target_delta_c,
        epochs,
    })
}

/// A noiseless feedback link carrying at most `budget` bits per forward
/// symbol. Each epoch's allowance is granted when the epoch opens.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLink {
    budget: f64,
    forward: u64,
    used: u64,
}

impl FeedbackLink {
    pub fn new(budget: f64) -> Result<Self> {
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::InvalidArgs(format!("feedback budget {budget} must be positive")));
        }
        Ok(FeedbackLink {
            budget,
            forward: 0,
            used: 0,
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Accounts for `symbols` forward symbols about to be sent.
    pub fn open_epoch(&mut self, symbols: u64) {
        self.forward += symbols;
    }

    pub fn available(&self) -> u64 {
        ((self.budget * self.forward as f64).floor() as u64).saturating_sub(self.used)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn send(&mut self, bits: u64) -> Result<()> {
        let available = self.available();
        if bits > available {
            return Err(Error::BudgetExceeded {
                requested: bits,
                available,
            });
        }
        self.used += bits;
        Ok(())
    }
}

/// Parameters of a full run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniversalParams {
    pub total: usize,
    pub eps: f64,
    pub c_delta: f64,
    /// Feedback bits per forward symbol.
    pub fb_budget: f64,
    pub block_target: f64,
    pub cap_slack: f64,
}

impl UniversalParams {
    pub fn new(total: usize, eps: f64) -> Self {
        UniversalParams {
            total,
            eps,
            c_delta: 1.0,
            fb_budget: 0.25,
            block_target: 0.2,
            cap_slack: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalResult {
    pub schedule: EpochSchedule,
    pub epochs: Vec<AdaptiveResult>,
    /// Bits per symbol over the whole run.
    pub overall_rate: f64,
    /// Some epoch delivered a wrong bit.
    pub error: bool,
    pub feedback_bits: u64,
}

impl UniversalResult {
    pub fn final_epoch(&self) -> &AdaptiveResult {
        self.epochs.last().expect("a schedule has at least one epoch")
    }
}

/// Runs the universal scheme over a fresh instance of `model`; every random
/// choice derives from `seed`.
pub fn universal_run(model: Arc<dyn ChannelModel>, params: &UniversalParams, seed: u64) -> Result<UniversalResult> {
    // Delta_C is pinned to what the first epoch's minimum length achieves,
    // so the length rules are driven by the minimum-length rule.
    let target = delta_c(default_n_star(1, 0) as f64, params.c_delta)?.max(f64::MIN_POSITIVE);
    let schedule = build_schedule(params.total, params.eps, target, params.c_delta, default_n_star)?;
    let mut channel = CausalChannel::new(model);
    let mut fb = FeedbackLink::new(params.fb_budget)?;
    let root = RandomSource::new(seed, 0);
    let mut noise = root.fork(&[1]);
    let mut epochs = Vec::with_capacity(schedule.epochs.len());
    for e in &schedule.epochs {
        let mut inner = InnerParams::new(e.eps, e.delta, params.c_delta);
        inner.block_target = params.block_target;
        inner.cap_slack = params.cap_slack;
        let common = root.fork(&[2, e.m as u64]);
        let mut view = SuperSymbolView::new(&mut channel, e.q)?;
        epochs.push(inner_scheme_run(&mut view, e.n, &inner, &mut fb, &common, &mut noise)?);
    }
    let overall_rate = weighted_rate(&epochs, &schedule)?;
    Ok(UniversalResult {
        error: epochs.iter().any(|r| r.error),
        feedback_bits: fb.used(),
        schedule,
        epochs,
        overall_rate,
    })
}

/// `sum_m R_m N_m / N` in bits per symbol, with `R_m` in bits per
/// super-symbol.
pub fn weighted_rate(results: &[AdaptiveResult], schedule: &EpochSchedule) -> Result<f64> {
    if results.len() != schedule.epochs.len() {
        return Err(Error::Misalignment(format!(
            "{} results for {} epochs",
            results.len(),
            schedule.epochs.len()
        )));
    }
    let mut bits = 0.0;
    for (r, e) in results.iter().zip(&schedule.epochs) {
        if r.n != e.n || r.q != e.q {
            return Err(Error::Misalignment(format!(
                "epoch {}: result for (q={}, N={}) vs plan (q={}, N={})",
                e.m, r.q, r.n, e.q, e.n
            )));
        }
        bits += r.rate * r.n as f64;
    }
    Ok(bits / schedule.total as f64)
}

/// `sum a_i d_i / sum a_i` for a positive nondecreasing `a`.
pub fn summation_check(a: &[f64], d: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != d.len() {
        return Err(Error::InvalidSequence(format!("lengths {} and {}", a.len(), d.len())));
    }
    if a.iter().any(|&v| !(v > 0.0)) || a.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSequence("a must be positive and nondecreasing".into()));
    }
    let num: f64 = a.iter().zip(d).map(|(x, y)| x * y).sum();
    Ok(num / a.iter().sum::<f64>())
}

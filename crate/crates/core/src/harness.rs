//! Scenario files, seeded experiment batteries and CSV reports.
//!
//! A scenario is a TOML file naming a channel, the scheme parameters, an
//! optional reference code and the seeds to run:
//!
//! ```toml
//! name = "bsc011"
//! seeds = [0, 1, 2]
//!
//! [channel]
//! kind = "bsc"
//! p = 0.11
//!
//! [scheme]
//! total = 32768
//! eps = 0.1
//! ```
//!
//! `scheme.c_delta` defaults to 1.0 and `scheme.fb_budget` to 0.25 feedback
//! bits per symbol; nothing else has a default.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Deserialize;

use crate::capacity::Dmc;
use crate::channels::exact::{block_kernel, point_belief};
use crate::channels::{ChannelModel, DmcChannel, FsmChannel, ModuloAdditiveChannel, Noise, PasswordChannel};
use crate::checks::CheckOutcome;
use crate::error::{Error, Result};
use crate::reference::{afb_error, ifb_error_exact, ifb_error_mc, random_block_code};
use crate::types::{Dist, RandomSource};
use crate::universal::{universal_run, weighted_rate, UniversalParams, UniversalResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub channel: ChannelConfig,
    pub scheme: SchemeConfig,
    pub reference: Option<ReferenceConfig>,
    pub seeds: Vec<u64>,
    /// Output directory; the command line may override it.
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// Rows of the transition matrix.
    Dmc { matrix: Vec<Vec<f64>> },
    Bsc { p: f64 },
    /// Output 2 is the erasure.
    Bec { e: f64 },
    Identity { size: usize },
    ModuloAdditive { size: usize, noise: NoiseConfig },
    Password { polarity: usize },
    /// `transitions[x][s][s']` and `emissions[s][x][y]`, time-invariant.
    Fsm {
        transitions: Vec<Vec<Vec<f64>>>,
        emissions: Vec<Vec<Vec<f64>>>,
        initial: usize,
    },
    /// A random beta-floor channel drawn from `seed`.
    RandomFsm {
        states: usize,
        inputs: usize,
        outputs: usize,
        beta: f64,
        period: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    List { values: Vec<usize> },
    Periodic { pattern: Vec<usize> },
    Seeded { seed: u64, probs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    /// Horizon in channel symbols.
    pub total: usize,
    pub eps: f64,
    #[serde(default = "default_c_delta")]
    pub c_delta: f64,
    #[serde(default = "default_fb_budget")]
    pub fb_budget: f64,
}

fn default_c_delta() -> f64 {
    1.0
}

fn default_fb_budget() -> f64 {
    0.25
}

/// A random reference code evaluated next to the scheme.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub k: usize,
    pub messages: usize,
    /// Codeword letter distribution; uniform when absent.
    pub prior: Option<Vec<f64>>,
    /// Blocks per evaluation.
    pub blocks: usize,
    pub seed: u64,
    /// Monte-Carlo trials when the channel cannot be enumerated.
    pub trials: usize,
}

impl ChannelConfig {
    pub fn build(&self) -> Result<Arc<dyn ChannelModel>> {
        let rows = |m: &[Vec<f64>]| Dmc::new(m.to_vec());
        let model: Arc<dyn ChannelModel> = match self {
            ChannelConfig::Dmc { matrix } => Arc::new(DmcChannel::new(rows(matrix)?)),
            ChannelConfig::Bsc { p } => Arc::new(DmcChannel::new(Dmc::bsc(*p)?)),
            ChannelConfig::Bec { e } => Arc::new(DmcChannel::new(Dmc::bec(*e)?)),
            ChannelConfig::Identity { size } => {
                if *size < 2 {
                    return Err(Error::InvalidAlphabet(*size));
                }
                Arc::new(DmcChannel::new(Dmc::identity(*size)))
            }
            ChannelConfig::ModuloAdditive { size, noise } => {
                let noise = match noise {
                    NoiseConfig::List { values } => Noise::List(values.clone()),
                    NoiseConfig::Periodic { pattern } => Noise::Periodic(pattern.clone()),
                    NoiseConfig::Seeded { seed, probs } => Noise::Seeded {
                        seed: *seed,
                        probs: Dist::new(probs.clone())?,
                    },
                };
                Arc::new(ModuloAdditiveChannel::new(*size, noise)?)
            }
            ChannelConfig::Password { polarity } => Arc::new(PasswordChannel::new(*polarity)?),
            ChannelConfig::Fsm {
                transitions,
                emissions,
                initial,
            } => {
                let emissions = emissions.iter().map(|e| rows(e)).collect::<Result<Vec<_>>>()?;
                Arc::new(FsmChannel::homogeneous(transitions.clone(), emissions, *initial)?)
            }
            ChannelConfig::RandomFsm {
                states,
                inputs,
                outputs,
                beta,
                period,
                seed,
            } => {
                let mut rng = RandomSource::new(*seed, 0);
                Arc::new(FsmChannel::random_beta_floor(*states, *inputs, *outputs, *beta, *period, &mut rng)?)
            }
        };
        Ok(model)
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        let config = |msg: String| Err(Error::Config(format!("scenario {}: {msg}", self.name)));
        if self.seeds.is_empty() {
            return config("seed list is empty".into());
        }
        if !(self.scheme.eps > 0.0 && self.scheme.eps < 1.0) {
            return config(format!("eps = {} is outside (0, 1)", self.scheme.eps));
        }
        if !(self.scheme.fb_budget > 0.0) || !(self.scheme.c_delta >= 0.0) {
            return config("fb_budget must be positive and c_delta nonnegative".into());
        }
        if let Err(e) = self.channel.build() {
            return config(format!("channel: {e}"));
        }
        Ok(())
    }

    pub fn params(&self) -> UniversalParams {
        let mut p = UniversalParams::new(self.scheme.total, self.scheme.eps);
        p.c_delta = self.scheme.c_delta;
        p.fb_budget = self.scheme.fb_budget;
        p
    }
}

/// Reference baseline: rate and error probabilities of the reference code.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBaseline {
    pub k: usize,
    pub messages: usize,
    pub rate: f64,
    pub ifb_error: f64,
    /// Standard error of a Monte-Carlo `ifb_error`; zero when exact.
    pub ifb_std_error: f64,
    /// Only for channels with an enumerable state.
    pub afb_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub result: UniversalResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    /// Sorted by seed.
    pub runs: Vec<SeedRun>,
    pub reference: Option<ReferenceBaseline>,
    pub checks: Vec<CheckOutcome>,
}

impl RunReport {
    pub fn empty(scenario: &str) -> Self {
        RunReport {
            scenario: scenario.to_string(),
            runs: Vec::new(),
            reference: None,
            checks: Vec::new(),
        }
    }

    pub fn error_fraction(&self) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().filter(|r| r.result.error).count() as f64 / self.runs.len() as f64
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs every seed of the scenario (on `jobs` workers, or all cores when
/// `jobs` is zero), evaluates the reference code and the run invariants.
pub fn run_experiment(scenario: &Scenario, seeds: Option<&[u64]>, jobs: usize) -> Result<RunReport> {
    let model = scenario.channel.build()?;
    let params = scenario.params();
    let mut seeds: Vec<u64> = seeds.unwrap_or(&scenario.seeds).to_vec();
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    seeds.sort_unstable();
    seeds.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let runs = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                Ok(SeedRun {
                    seed,
                    result: universal_run(model.clone(), &params, seed)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let reference = match &scenario.reference {
        Some(r) => Some(pool.install(|| reference_baseline(model.clone(), r))?),
        None => None,
    };
    let mut report = RunReport {
        scenario: scenario.name.clone(),
        runs,
        reference,
        checks: Vec::new(),
    };
    report.checks = run_invariants(&report, &params)?;
    Ok(report)
}

fn reference_baseline(model: Arc<dyn ChannelModel>, cfg: &ReferenceConfig) -> Result<ReferenceBaseline> {
    let caps = model.capabilities();
    let nx = model.input_size();
    let prior = match &cfg.prior {
        Some(p) => Dist::new(p.clone())?,
        None => Dist::uniform(nx),
    };
    if prior.len() != nx {
        return Err(Error::Config(format!("reference prior has {} entries for {nx} inputs", prior.len())));
    }
    let mut rng = RandomSource::new(cfg.seed, 0);
    let kernel = if caps.exactly_enumerable {
        let belief = point_belief(model.state_count(), model.initial_state());
        Some(block_kernel(model.as_ref(), 0, &belief, cfg.k, 0)?)
    } else {
        None
    };
    let code = random_block_code(cfg.k, cfg.messages, &prior, kernel.as_ref(), model.output_size(), &mut rng)?;
    let (ifb_error, ifb_std_error) = if caps.exactly_enumerable {
        (ifb_error_exact(&code, model.as_ref(), cfg.blocks)?, 0.0)
    } else {
        let mc = ifb_error_mc(&code, model.clone(), cfg.blocks, cfg.trials, &rng.fork(&[1]))?;
        (mc.mean, mc.std_error)
    };
    let afb = if caps.state_enumerable {
        Some(afb_error(&code, model.as_ref(), cfg.blocks)?)
    } else {
        None
    };
    Ok(ReferenceBaseline {
        k: cfg.k,
        messages: cfg.messages,
        rate: code.rate(),
        ifb_error,
        ifb_std_error,
        afb_error: afb,
    })
}

/// Per-run invariants: exact tiling, feedback budget, rate bookkeeping and
/// the error fraction against `eps`.
fn run_invariants(report: &RunReport, params: &UniversalParams) -> Result<Vec<CheckOutcome>> {
    let start = std::time::Instant::now();
    let mut out = Vec::new();
    let n = report.runs.len();
    let mut push = |suite: &str, violation: Option<String>, detail: String| {
        out.push(CheckOutcome {
            suite: suite.to_string(),
            passed: violation.is_none(),
            instances: n,
            detail: violation.unwrap_or(detail),
            elapsed: start.elapsed(),
        });
    };

    let untiled = report.runs.iter().find(|r| {
        r.result.schedule.epochs.iter().map(|e| e.symbols()).sum::<usize>() != params.total
    });
    push(
        "run_tiling",
        untiled.map(|r| format!("seed {}: epochs do not tile {} symbols", r.seed, params.total)),
        "every schedule tiles the horizon".into(),
    );

    let limit = (params.fb_budget * params.total as f64).floor() as u64;
    let over = report.runs.iter().find(|r| r.result.feedback_bits > limit);
    push(
        "run_feedback",
        over.map(|r| format!("seed {}: {} feedback bits > {limit}", r.seed, r.result.feedback_bits)),
        format!("at most {} of {limit} feedback bits", report.runs.iter().map(|r| r.result.feedback_bits).max().unwrap_or(0)),
    );

    let mut mismatch = None;
    for r in &report.runs {
        let recomputed = weighted_rate(&r.result.epochs, &r.result.schedule)?;
        if (recomputed - r.result.overall_rate).abs() > 1e-12 && mismatch.is_none() {
            mismatch = Some(format!("seed {}: {} vs {recomputed}", r.seed, r.result.overall_rate));
        }
    }
    push("run_rate", mismatch, "overall rates match the epoch records".into());

    let fraction = report.error_fraction();
    push(
        "run_errors",
        (fraction > params.eps).then(|| format!("error fraction {fraction} > eps {}", params.eps)),
        format!("error fraction {fraction}"),
    );

    if let Some(b) = &report.reference {
        if let Some(afb) = b.afb_error {
            let exact = b.ifb_std_error == 0.0;
            push(
                "run_afb_ifb",
                (exact && afb + 1e-12 < b.ifb_error).then(|| format!("afb {afb} < ifb {}", b.ifb_error)),
                format!("afb {afb} >= ifb {}", b.ifb_error),
            );
        }
    }
    Ok(out)
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

/// CSV text of a report: one row per (seed, epoch), then a summary block.
/// An empty report is the header alone.
pub fn report_to_csv(report: &RunReport) -> Result<String> {
    let writer = |bytes: Vec<u8>| csv::WriterBuilder::new().flexible(true).from_writer(bytes);
    let mut w = writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "scenario",
        "seed",
        "epoch",
        "q",
        "N_m",
        "rate_bits_per_symbol",
        "capacity_estimate",
        "error_flag",
        "feedback_bits",
    ])
    .map_err(csv_err)?;
    for run in &report.runs {
        for (e, r) in run.result.schedule.epochs.iter().zip(&run.result.epochs) {
            w.write_record([
                report.scenario.clone(),
                run.seed.to_string(),
                e.m.to_string(),
                e.q.to_string(),
                e.n.to_string(),
                f6(r.rate_per_symbol()),
                f6(r.capacity_estimate / r.q as f64),
                u8::from(r.error).to_string(),
                r.feedback_bits.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    if !report.runs.is_empty() {
        // a bare empty line separates the blocks
        let mut bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        bytes.push(b'\n');
        w = writer(bytes);
        w.write_record(["summary", "seed", "overall_rate_bits_per_symbol", "error_flag", "feedback_bits"])
            .map_err(csv_err)?;
        for run in &report.runs {
            w.write_record([
                "summary".to_string(),
                run.seed.to_string(),
                f6(run.result.overall_rate),
                u8::from(run.result.error).to_string(),
                run.result.feedback_bits.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let mean = report.runs.iter().map(|r| r.result.overall_rate).sum::<f64>() / report.runs.len() as f64;
        w.write_record(["summary".to_string(), "mean".into(), f6(mean), f6(report.error_fraction()), String::new()])
            .map_err(csv_err)?;
    }
    if let Some(b) = &report.reference {
        w.write_record(["reference", "k", "messages", "rate", "ifb_error", "ifb_std_error", "afb_error"])
            .map_err(csv_err)?;
        w.write_record([
            "reference".to_string(),
            b.k.to_string(),
            b.messages.to_string(),
            f6(b.rate),
            f6(b.ifb_error),
            f6(b.ifb_std_error),
            b.afb_error.map(f6).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    if !report.checks.is_empty() {
        w.write_record(["check", "suite", "passed", "instances", "detail"]).map_err(csv_err)?;
        for c in &report.checks {
            w.write_record([
                "check".to_string(),
                c.suite.clone(),
                u8::from(c.passed).to_string(),
                c.instances.to_string(),
                c.detail.clone(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Writes [`report_to_csv`] to `path`.
pub fn report_csv(report: &RunReport, path: &Path) -> Result<()> {
    fs::write(path, report_to_csv(report)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
seeds = [3, 1]

[channel]
kind = "bsc"
p = 0.0

[scheme]
total = 1024
eps = 0.1
"#;

    #[test]
    fn parses_and_defaults() {
        let s = Scenario::from_toml(SMALL).unwrap();
        assert_eq!(s.scheme.c_delta, 1.0);
        assert_eq!(s.scheme.fb_budget, 0.25);
        assert!(s.reference.is_none());
    }

    #[test]
    fn config_errors() {
        let bad_kind = SMALL.replace("\"bsc\"", "\"teleporter\"");
        assert!(matches!(Scenario::from_toml(&bad_kind), Err(Error::Config(_))));
        let no_seeds = SMALL.replace("[3, 1]", "[]");
        assert!(matches!(Scenario::from_toml(&no_seeds), Err(Error::Config(_))));
        let bad_p = SMALL.replace("p = 0.0", "p = 1.5");
        assert!(matches!(Scenario::from_toml(&bad_p), Err(Error::Config(_))));
        let extra = SMALL.replace("eps = 0.1", "eps = 0.1\nepsilon = 0.2");
        assert!(matches!(Scenario::from_toml(&extra), Err(Error::Config(_))));
    }

    #[test]
    fn every_channel_kind_builds() {
        let kinds = [
            "kind = \"dmc\"\nmatrix = [[0.9, 0.1], [0.2, 0.8]]",
            "kind = \"bec\"\ne = 0.3",
            "kind = \"identity\"\nsize = 3",
            "kind = \"modulo_additive\"\nsize = 2\nnoise = { kind = \"periodic\", pattern = [0, 1] }",
            "kind = \"modulo_additive\"\nsize = 3\nnoise = { kind = \"seeded\", seed = 4, probs = [0.8, 0.1, 0.1] }",
            "kind = \"modulo_additive\"\nsize = 2\nnoise = { kind = \"list\", values = [1, 1, 0] }",
            "kind = \"password\"\npolarity = 1",
            "kind = \"fsm\"\ntransitions = [[[0.9, 0.1], [0.1, 0.9]], [[0.5, 0.5], [0.5, 0.5]]]\nemissions = [[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]]\ninitial = 0",
            "kind = \"random_fsm\"\nstates = 2\ninputs = 2\noutputs = 2\nbeta = 0.2\nperiod = 1\nseed = 9",
        ];
        for k in kinds {
            let text = format!("name = \"t\"\nseeds = [0]\n[channel]\n{k}\n[scheme]\ntotal = 1024\neps = 0.1\n");
            let s = Scenario::from_toml(&text).unwrap_or_else(|e| panic!("{k}: {e}"));
            s.channel.build().unwrap();
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let text = report_to_csv(&RunReport::empty("x")).unwrap();
        assert_eq!(
            text,
            "scenario,seed,epoch,q,N_m,rate_bits_per_symbol,capacity_estimate,error_flag,feedback_bits\n"
        );
    }

    #[test]
    fn rows_per_seed_and_epoch() {
        let s = Scenario::from_toml(SMALL).unwrap();
        let report = run_experiment(&s, None, 2).unwrap();
        assert_eq!(report.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 3]);
        let epochs = report.runs[0].result.epochs.len();
        let text = report_to_csv(&report).unwrap();
        let rows = text.lines().filter(|l| l.starts_with("small,")).count();
        assert_eq!(rows, 2 * epochs);
        assert!(report.all_checks_pass(), "{:?}", report.checks);
        assert_eq!(text, report_to_csv(&run_experiment(&s, None, 1).unwrap()).unwrap());
    }

    #[test]
    fn reference_baseline_is_reported() {
        let text = format!(
            "{SMALL}\n[reference]\nk = 2\nmessages = 4\nblocks = 2\nseed = 1\ntrials = 100\n"
        );
        let s = Scenario::from_toml(&text).unwrap();
        let report = run_experiment(&s, Some(&[0]), 1).unwrap();
        let b = report.reference.unwrap();
        assert_eq!(b.rate, 1.0);
        assert!(b.afb_error.unwrap() >= b.ifb_error);
    }
}

//! Causal channels.
//!
//! Every model here is written in finite-state form: a step at time `t`
//! (0-based) from internal state `s` with input `x` emits `y` and moves to
//! `s'` with probability `Pr(y, s' | s, x; t)`. The internal state is the
//! state that drives the *next* output, so a fresh channel sits in its
//! initial state before the first symbol. Memoryless and modulo-additive
//! channels have a single state; their time variation lives in `t`.

pub mod exact;

use crate::capacity::Dmc;
use crate::error::{Error, Result};
use crate::types::{enum_cap, mix64, Alphabet, Dist, RandomSource, TupleCodec};
use std::fmt;
use std::sync::Arc;

pub use exact::{block_conditional, fading_memory_gap, prop3_bound};

/// What a model supports beyond its defining step law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub samplable: bool,
    /// Exact block conditionals can be computed by enumeration.
    pub exactly_enumerable: bool,
    /// The conditional law depends on the past only through a finite state.
    pub state_enumerable: bool,
}

impl Capabilities {
    pub const ALL: Capabilities = Capabilities {
        samplable: true,
        exactly_enumerable: true,
        state_enumerable: true,
    };
}

/// The law of a causal channel.
pub trait ChannelModel: fmt::Debug + Send + Sync {
    fn name(&self) -> String;
    fn input_size(&self) -> usize;
    fn output_size(&self) -> usize;
    fn state_count(&self) -> usize;
    fn initial_state(&self) -> usize;
    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }
    /// Writes `Pr(y, s' | s, x)` at time `t` into `out[y * S + s']`.
    /// `out` has length `output_size() * state_count()`; `s` and `x` are in range.
    fn step_kernel(&self, t: usize, s: usize, x: usize, out: &mut [f64]);
}

fn check_symbol(symbol: usize, size: usize) -> Result<()> {
    if symbol < size {
        Ok(())
    } else {
        Err(Error::SymbolOutOfRange { symbol, size })
    }
}

/// A fixed DMC applied independently to every symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcChannel {
    w: Dmc,
}

impl DmcChannel {
    pub fn new(w: Dmc) -> Self {
        DmcChannel { w }
    }

    pub fn matrix(&self) -> &Dmc {
        &self.w
    }
}

impl ChannelModel for DmcChannel {
    fn name(&self) -> String {
        format!("dmc({}x{})", self.w.inputs(), self.w.outputs())
    }
    fn input_size(&self) -> usize {
        self.w.inputs()
    }
    fn output_size(&self) -> usize {
        self.w.outputs()
    }
    fn state_count(&self) -> usize {
        1
    }
    fn initial_state(&self) -> usize {
        0
    }
    fn step_kernel(&self, _t: usize, _s: usize, x: usize, out: &mut [f64]) {
        out.copy_from_slice(self.w.row(x));
    }
}

/// An individual noise sequence `z_1, z_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// Explicit values; zero after the list ends.
    List(Vec<usize>),
    /// `pattern[t mod len]`.
    Periodic(Vec<usize>),
    /// A fixed pseudo-random sequence: `z_t` is drawn from `probs` by a
    /// counter-based hash of `(seed, t)`, so it is one deterministic
    /// individual sequence per seed.
    Seeded { seed: u64, probs: Dist },
}

impl Noise {
    /// Noise at 0-based time `t`.
    pub fn at(&self, t: usize) -> usize {
        match self {
            Noise::List(v) => v.get(t).copied().unwrap_or(0),
            Noise::Periodic(p) => p[t % p.len()],
            Noise::Seeded { seed, probs } => {
                let u = (mix64(seed ^ mix64(t as u64)) >> 11) as f64 / (1u64 << 53) as f64;
                let mut acc = 0.0;
                for (z, &p) in probs.probs().iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return z;
                    }
                }
                probs.len() - 1
            }
        }
    }
}

/// `y_t = (x_t + z_t) mod |X|` for an individual noise sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuloAdditiveChannel {
    size: usize,
    noise: Noise,
}

impl ModuloAdditiveChannel {
    pub fn new(size: usize, noise: Noise) -> Result<Self> {
        Alphabet::new(size)?;
        let bad = |v: &[usize]| v.iter().find(|&&z| z >= size).copied();
        let out_of_range = match &noise {
            Noise::List(v) => bad(v),
            Noise::Periodic(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidArgs("empty noise pattern".into()));
                }
                bad(p)
            }
            Noise::Seeded { probs, .. } => {
                if probs.len() != size {
                    return Err(Error::AlphabetMismatch {
                        left: probs.len(),
                        right: size,
                    });
                }
                None
            }
        };
        if let Some(z) = out_of_range {
            return Err(Error::SymbolOutOfRange { symbol: z, size });
        }
        Ok(ModuloAdditiveChannel { size, noise })
    }

    pub fn noise(&self) -> &Noise {
        &self.noise
    }
}

impl ChannelModel for ModuloAdditiveChannel {
    fn name(&self) -> String {
        format!("modulo_additive({})", self.size)
    }
    fn input_size(&self) -> usize {
        self.size
    }
    fn output_size(&self) -> usize {
        self.size
    }
    fn state_count(&self) -> usize {
        1
    }
    fn initial_state(&self) -> usize {
        0
    }
    fn step_kernel(&self, t: usize, _s: usize, x: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[(x + self.noise.at(t)) % self.size] = 1.0;
    }
}

/// Binary channel whose first input fixes it forever: identity if
/// `x_1 = polarity`, constant 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PasswordChannel {
    polarity: usize,
}

impl PasswordChannel {
    pub const UNDETERMINED: usize = 0;
    pub const GOOD: usize = 1;
    pub const BAD: usize = 2;

    pub fn new(polarity: usize) -> Result<Self> {
        check_symbol(polarity, 2)?;
        Ok(PasswordChannel { polarity })
    }

    pub fn polarity(&self) -> usize {
        self.polarity
    }
}

impl ChannelModel for PasswordChannel {
    fn name(&self) -> String {
        format!("password({})", self.polarity)
    }
    fn input_size(&self) -> usize {
        2
    }
    fn output_size(&self) -> usize {
        2
    }
    fn state_count(&self) -> usize {
        3
    }
    fn initial_state(&self) -> usize {
        Self::UNDETERMINED
    }
    fn step_kernel(&self, _t: usize, s: usize, x: usize, out: &mut [f64]) {
        out.fill(0.0);
        let mode = match s {
            Self::UNDETERMINED if x == self.polarity => Self::GOOD,
            Self::UNDETERMINED => Self::BAD,
            m => m,
        };
        let y = if mode == Self::GOOD { x } else { 0 };
        out[y * 3 + mode] = 1.0;
    }
}

/// A finite-state channel with periodic kernel schedules.
///
/// At time `t` (phase `t mod period`) the output is drawn from
/// `outputs[phase][s]` and the next state from `transitions[phase][x]`
/// row `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FsmChannel {
    states: usize,
    inputs: usize,
    outputs: usize,
    /// `[phase][x]`: an `S x S` stochastic matrix.
    transitions: Vec<Vec<Dmc>>,
    /// `[phase][s]`: an `|X| x |Y|` stochastic matrix.
    emissions: Vec<Vec<Dmc>>,
    initial: usize,
}

impl FsmChannel {
    pub fn new(transitions: Vec<Vec<Dmc>>, emissions: Vec<Vec<Dmc>>, initial: usize) -> Result<Self> {
        let period = transitions.len();
        if period == 0 || emissions.len() != period {
            return Err(Error::DimensionMismatch(format!(
                "{} transition phases vs {} output phases",
                period,
                emissions.len()
            )));
        }
        let states = emissions[0].len();
        if states == 0 {
            return Err(Error::InvalidAlphabet(0));
        }
        let inputs = emissions[0][0].inputs();
        let outputs = emissions[0][0].outputs();
        for phase in 0..period {
            if transitions[phase].len() != inputs || emissions[phase].len() != states {
                return Err(Error::DimensionMismatch(format!("kernel counts at phase {phase}")));
            }
            for t in &transitions[phase] {
                if t.inputs() != states || t.outputs() != states {
                    return Err(Error::DimensionMismatch("transition matrix must be S x S".into()));
                }
            }
            for w in &emissions[phase] {
                if w.inputs() != inputs || w.outputs() != outputs {
                    return Err(Error::DimensionMismatch("output kernels disagree in shape".into()));
                }
            }
        }
        check_symbol(initial, states)?;
        Ok(FsmChannel {
            states,
            inputs,
            outputs,
            transitions,
            emissions,
            initial,
        })
    }

    /// Constant kernels; `transitions[x][s][s']`, `emissions[s]`.
    pub fn homogeneous(transitions: Vec<Vec<Vec<f64>>>, emissions: Vec<Dmc>, initial: usize) -> Result<Self> {
        let t = transitions
            .into_iter()
            .map(Dmc::new)
            .collect::<Result<Vec<_>>>()?;
        FsmChannel::new(vec![t], vec![emissions], initial)
    }

    /// A random channel whose transitions all have the floor `beta`:
    /// `T = (S beta) U + (1 - S beta) R` with `R` random and `U` uniform.
    pub fn random_beta_floor(
        states: usize,
        inputs: usize,
        outputs: usize,
        beta: f64,
        period: usize,
        rng: &mut RandomSource,
    ) -> Result<Self> {
        let lambda = states as f64 * beta;
        if !(0.0..=1.0 + 1e-12).contains(&lambda) {
            return Err(Error::InvalidBeta { beta, states });
        }
        let lambda = lambda.min(1.0);
        let random_row = |n: usize, rng: &mut RandomSource| -> Vec<f64> {
            let w: Vec<f64> = (0..n).map(|_| -rng.unit().max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        };
        let mut transitions = Vec::new();
        let mut emissions = Vec::new();
        for _ in 0..period.max(1) {
            let mut per_x = Vec::new();
            for _ in 0..inputs {
                let mut flat = Vec::with_capacity(states * states);
                for _ in 0..states {
                    let r = random_row(states, rng);
                    flat.extend(r.iter().map(|v| lambda / states as f64 + (1.0 - lambda) * v));
                }
                per_x.push(Dmc::from_flat_normalized(states, states, flat));
            }
            transitions.push(per_x);
            let mut per_s = Vec::new();
            for _ in 0..states {
                let mut flat = Vec::with_capacity(inputs * outputs);
                for _ in 0..inputs {
                    flat.extend(random_row(outputs, rng));
                }
                per_s.push(Dmc::from_flat_normalized(inputs, outputs, flat));
            }
            emissions.push(per_s);
        }
        FsmChannel::new(transitions, emissions, 0)
    }

    pub fn period(&self) -> usize {
        self.transitions.len()
    }

    pub fn emission(&self, t: usize, s: usize) -> &Dmc {
        &self.emissions[t % self.period()][s]
    }

    pub fn transition(&self, t: usize, x: usize) -> &Dmc {
        &self.transitions[t % self.period()][x]
    }

    /// Largest `beta` such that every transition entry is at least `beta`.
    pub fn beta(&self) -> f64 {
        self.transitions
            .iter()
            .flatten()
            .flat_map(|t| t.as_flat().iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

impl ChannelModel for FsmChannel {
    fn name(&self) -> String {
        format!("fsm({} states, period {})", self.states, self.period())
    }
    fn input_size(&self) -> usize {
        self.inputs
    }
    fn output_size(&self) -> usize {
        self.outputs
    }
    fn state_count(&self) -> usize {
        self.states
    }
    fn initial_state(&self) -> usize {
        self.initial
    }
    fn step_kernel(&self, t: usize, s: usize, x: usize, out: &mut [f64]) {
        let w = self.emission(t, s).row(x);
        let tr = self.transition(t, x).row(s);
        let n = self.states;
        for (y, &wy) in w.iter().enumerate() {
            for (s2, &ts) in tr.iter().enumerate() {
                out[y * n + s2] = wy * ts;
            }
        }
    }
}

/// The channel over `q`-tuples: one step consumes and produces `q` base
/// symbols. The state is the base channel's state at the tuple boundary.
#[derive(Debug, Clone)]
pub struct SuperModel {
    base: Arc<dyn ChannelModel>,
    q: usize,
    inputs: TupleCodec,
    outputs: TupleCodec,
}

/// The super-symbol view of `base` with tuple dimension `q`.
pub fn super_symbol_view(base: Arc<dyn ChannelModel>, q: usize) -> Result<SuperModel> {
    if q == 0 {
        return Err(Error::InvalidArgs("super-symbol dimension must be positive".into()));
    }
    let cap = enum_cap();
    let inputs = TupleCodec::with_cap(q, Alphabet::new(base.input_size())?, cap)?;
    let outputs = TupleCodec::with_cap(q, Alphabet::new(base.output_size())?, cap)?;
    let joint = (inputs.count() as u64)
        .saturating_mul(outputs.count() as u64)
        .saturating_mul(base.state_count() as u64);
    if joint > cap.saturating_mul(cap) {
        return Err(Error::Overflow {
            what: "super-symbol kernel".into(),
            cap,
        });
    }
    Ok(SuperModel {
        base,
        q,
        inputs,
        outputs,
    })
}

impl SuperModel {
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn base(&self) -> &Arc<dyn ChannelModel> {
        &self.base
    }
    pub fn input_codec(&self) -> &TupleCodec {
        &self.inputs
    }
    pub fn output_codec(&self) -> &TupleCodec {
        &self.outputs
    }
}

impl ChannelModel for SuperModel {
    fn name(&self) -> String {
        format!("{}^[{}]", self.base.name(), self.q)
    }
    fn input_size(&self) -> usize {
        self.inputs.count()
    }
    fn output_size(&self) -> usize {
        self.outputs.count()
    }
    fn state_count(&self) -> usize {
        self.base.state_count()
    }
    fn initial_state(&self) -> usize {
        self.base.initial_state()
    }
    fn capabilities(&self) -> Capabilities {
        self.base.capabilities()
    }
    fn step_kernel(&self, t: usize, s: usize, x: usize, out: &mut [f64]) {
        let xs = self.inputs.tuple_of(x).expect("tuple index in range");
        let belief = exact::point_belief(self.base.state_count(), s);
        let joint = exact::block_joint(self.base.as_ref(), t * self.q, &belief, &xs, 0)
            .expect("tuple alphabets were checked at construction");
        out.copy_from_slice(&joint);
    }
}

/// A running instance of a channel: the model plus its time and state.
/// Single-owner; create one per trial.
#[derive(Debug, Clone)]
pub struct CausalChannel {
    model: Arc<dyn ChannelModel>,
    t: usize,
    state: usize,
    scratch: Vec<f64>,
}

impl CausalChannel {
    pub fn new(model: Arc<dyn ChannelModel>) -> Self {
        let state = model.initial_state();
        let scratch = vec![0.0; model.output_size() * model.state_count()];
        CausalChannel {
            model,
            t: 0,
            state,
            scratch,
        }
    }

    pub fn model(&self) -> &Arc<dyn ChannelModel> {
        &self.model
    }

    /// Symbols transmitted so far.
    pub fn time(&self) -> usize {
        self.t
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn reset(&mut self) {
        self.t = 0;
        self.state = self.model.initial_state();
    }

    /// Sends one symbol and returns the channel output.
    pub fn sample_step(&mut self, x: usize, rng: &mut RandomSource) -> Result<usize> {
        check_symbol(x, self.model.input_size())?;
        if !self.model.capabilities().samplable {
            return Err(Error::InvalidArgs(format!("{} cannot be sampled", self.model.name())));
        }
        self.model.step_kernel(self.t, self.state, x, &mut self.scratch);
        let idx = rng.categorical(&self.scratch);
        let states = self.model.state_count();
        self.state = idx % states;
        self.t += 1;
        Ok(idx / states)
    }

    pub fn transmit(&mut self, xs: &[usize], rng: &mut RandomSource) -> Result<Vec<usize>> {
        xs.iter().map(|&x| self.sample_step(x, rng)).collect()
    }
}

/// Super-symbol access to a running base channel. The state is shared:
/// steps through the view advance the base channel by `q` symbols.
#[derive(Debug)]
pub struct SuperSymbolView<'a> {
    base: &'a mut CausalChannel,
    q: usize,
    codecs: Option<(TupleCodec, TupleCodec)>,
}

impl<'a> SuperSymbolView<'a> {
    /// Tuple indexing is available only when the tuple alphabets fit the
    /// enumeration cap; [`SuperSymbolView::transmit`] always works.
    pub fn new(base: &'a mut CausalChannel, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgs("super-symbol dimension must be positive".into()));
        }
        let cap = enum_cap();
        let codecs = match (
            TupleCodec::with_cap(q, Alphabet::new(base.model.input_size())?, cap),
            TupleCodec::with_cap(q, Alphabet::new(base.model.output_size())?, cap),
        ) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        };
        Ok(SuperSymbolView { base, q, codecs })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn input_size(&self) -> usize {
        self.base.model.input_size()
    }

    pub fn output_size(&self) -> usize {
        self.base.model.output_size()
    }

    /// Sends one super-symbol given as a tuple index.
    pub fn sample_step(&mut self, x: usize, rng: &mut RandomSource) -> Result<usize> {
        let (inp, out) = self.codecs.as_ref().ok_or(Error::Overflow {
            what: "super-symbol alphabet".into(),
            cap: enum_cap(),
        })?;
        let xs = inp.tuple_of(x)?;
        let ys = self.base.transmit(&xs, rng)?;
        out.index_of(&ys)
    }

    /// Sends base symbols without regard to tuple boundaries.
    pub fn transmit_symbols(&mut self, xs: &[usize], rng: &mut RandomSource) -> Result<Vec<usize>> {
        self.base.transmit(xs, rng)
    }

    /// Base symbols sent through the underlying channel so far.
    pub fn time(&self) -> usize {
        self.base.time()
    }

    /// Sends whole super-symbols given as base symbols.
    pub fn transmit(&mut self, xs: &[usize], rng: &mut RandomSource) -> Result<Vec<usize>> {
        if !xs.len().is_multiple_of(self.q) {
            return Err(Error::DimensionMismatch(format!(
                "{} symbols is not a whole number of {}-tuples",
                xs.len(),
                self.q
            )));
        }
        self.base.transmit(xs, rng)
    }
}

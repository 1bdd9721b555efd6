//! Reference systems: finite block codes applied back to back (IFB) or
//! judged block by block against the worst channel history (AFB), together
//! with the alignment bookkeeping, collapsed channels and the Fano-type
//! bound that relate them to the capacity of averaged channels.

use crate::capacity::{hb_mono, Dmc};
use crate::channels::exact::{block_joint, block_kernel, marginal_outputs, point_belief};
use crate::channels::{CausalChannel, ChannelModel};
use crate::error::{Error, Result};
use crate::types::{enum_cap, Alphabet, Dist, RandomSource, TupleCodec};
use num_rational::Ratio;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;

/// An encoder/decoder pair of block length `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCode {
    k: usize,
    inputs: usize,
    outputs: usize,
    /// Codeword of each message.
    encoder: Vec<Vec<usize>>,
    /// Decoded message for each output tuple index.
    decoder: Vec<usize>,
}

impl BlockCode {
    pub fn new(
        k: usize,
        inputs: usize,
        outputs: usize,
        encoder: Vec<Vec<usize>>,
        decoder: Vec<usize>,
    ) -> Result<Self> {
        if k == 0 || encoder.is_empty() {
            return Err(Error::InvalidArgs("a code needs k >= 1 and at least one message".into()));
        }
        let xa = Alphabet::new(inputs)?;
        let ycodec = TupleCodec::new(k, Alphabet::new(outputs)?)?;
        for w in &encoder {
            if w.len() != k {
                return Err(Error::DimensionMismatch(format!("codeword of length {} for k={}", w.len(), k)));
            }
            for &x in w {
                xa.check(x)?;
            }
        }
        if decoder.len() != ycodec.count() {
            return Err(Error::DimensionMismatch(format!(
                "decoder table has {} entries, expected {}",
                decoder.len(),
                ycodec.count()
            )));
        }
        if let Some(&bad) = decoder.iter().find(|&&w| w >= encoder.len()) {
            return Err(Error::SymbolOutOfRange {
                symbol: bad,
                size: encoder.len(),
            });
        }
        Ok(BlockCode {
            k,
            inputs,
            outputs,
            encoder,
            decoder,
        })
    }

    /// Maximum-likelihood decoder for `kernel` (`X^k -> Y^k`); ties go to the
    /// lowest message index.
    pub fn with_ml_decoder(k: usize, encoder: Vec<Vec<usize>>, kernel: &Dmc) -> Result<Self> {
        let inputs = root(kernel.inputs(), k)?;
        let xc = TupleCodec::new(k, Alphabet::new(inputs)?)?;
        let outputs = root(kernel.outputs(), k)?;
        let rows = encoder.iter().map(|w| xc.index_of(w)).collect::<Result<Vec<_>>>()?;
        let decoder = (0..kernel.outputs())
            .map(|y| {
                let mut best = 0;
                for (w, &r) in rows.iter().enumerate() {
                    if kernel.get(r, y) > kernel.get(rows[best], y) {
                        best = w;
                    }
                }
                best
            })
            .collect();
        BlockCode::new(k, inputs, outputs, encoder, decoder)
    }

    /// Minimum-Hamming-distance decoder (symbol equality), ties to the lowest index.
    pub fn with_hamming_decoder(k: usize, inputs: usize, outputs: usize, encoder: Vec<Vec<usize>>) -> Result<Self> {
        let yc = TupleCodec::new(k, Alphabet::new(outputs)?)?;
        let mut ys = vec![0; k];
        let mut decoder = Vec::with_capacity(yc.count());
        for yi in 0..yc.count() {
            yc.tuple_into(yi, &mut ys)?;
            let dist = |w: &Vec<usize>| w.iter().zip(&ys).filter(|(a, b)| a != b).count();
            let best = (0..encoder.len()).min_by_key(|&w| (dist(&encoder[w]), w)).unwrap_or(0);
            decoder.push(best);
        }
        BlockCode::new(k, inputs, outputs, encoder, decoder)
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn messages(&self) -> usize {
        self.encoder.len()
    }
    pub fn input_size(&self) -> usize {
        self.inputs
    }
    pub fn output_size(&self) -> usize {
        self.outputs
    }
    /// `log2(M) / k` bits per symbol.
    pub fn rate(&self) -> f64 {
        (self.messages() as f64).log2() / self.k as f64
    }
    pub fn codeword(&self, w: usize) -> &[usize] {
        &self.encoder[w]
    }
    pub fn decode_index(&self, y_index: usize) -> usize {
        self.decoder[y_index]
    }
    pub fn decode(&self, ys: &[usize]) -> Result<usize> {
        let yc = TupleCodec::new(self.k, Alphabet::new(self.outputs)?)?;
        Ok(self.decoder[yc.index_of(ys)?])
    }

    /// Plain-text table: a `k inputs outputs` header, one codeword per line
    /// (symbols space-separated), then a `decoder` line and the decoder
    /// table in output-tuple order.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.k, self.inputs, self.outputs);
        for w in &self.encoder {
            let line: Vec<String> = w.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        let table: Vec<String> = self.decoder.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "decoder\n{}", table.join(" "));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Config(format!("block code table: {m}"));
        let parse = |line: &str| -> Result<Vec<usize>> {
            line.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| bad(&format!("not a symbol: {t}"))))
                .collect()
        };
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = parse(lines.next().ok_or_else(|| bad("empty"))?)?;
        let [k, inputs, outputs] = header[..] else {
            return Err(bad("header must be `k inputs outputs`"));
        };
        let mut encoder = Vec::new();
        for line in lines.by_ref() {
            if line == "decoder" {
                break;
            }
            encoder.push(parse(line)?);
        }
        let decoder = lines.map(parse).collect::<Result<Vec<_>>>()?.concat();
        BlockCode::new(k, inputs, outputs, encoder, decoder)
    }
}

/// Integer `k`-th root of `n`, which must be exact.
fn root(n: usize, k: usize) -> Result<usize> {
    let r = (n as f64).powf(1.0 / k as f64).round() as usize;
    for c in r.saturating_sub(1)..=r + 1 {
        if c.checked_pow(k as u32) == Some(n) {
            return Ok(c);
        }
    }
    Err(Error::DimensionMismatch(format!("{n} is not a {k}-th power")))
}

/// A code with `M` codewords drawn i.i.d. from `Q^k`. With a kernel the
/// decoder is maximum likelihood; otherwise minimum Hamming distance over
/// `outputs` letters.
pub fn random_block_code(
    k: usize,
    m: usize,
    q: &Dist,
    kernel: Option<&Dmc>,
    outputs: usize,
    rng: &mut RandomSource,
) -> Result<BlockCode> {
    let cap = enum_cap();
    let codewords = crate::types::checked_pow(q.len(), k, cap, "codewords")?;
    if m as u64 > codewords || m == 0 {
        return Err(Error::TooManyMessages { messages: m, codewords });
    }
    let encoder: Vec<Vec<usize>> = (0..m)
        .map(|_| (0..k).map(|_| rng.categorical(q.probs())).collect())
        .collect();
    match kernel {
        Some(w) => BlockCode::with_ml_decoder(k, encoder, w),
        None => BlockCode::with_hamming_decoder(k, q.len(), outputs, encoder),
    }
}

/// The bijective code sending message `w` as the `k`-tuple with index `w`.
pub fn exhaustive_block_code(k: usize, inputs: usize, kernel: Option<&Dmc>, outputs: usize) -> Result<BlockCode> {
    let xc = TupleCodec::new(k, Alphabet::new(inputs)?)?;
    let encoder = (0..xc.count()).map(|i| xc.tuple_of(i)).collect::<Result<Vec<_>>>()?;
    match kernel {
        Some(w) => BlockCode::with_ml_decoder(k, encoder, w),
        None => BlockCode::with_hamming_decoder(k, inputs, outputs, encoder),
    }
}

/// Average error of `code` over the block kernel `kernel` (`X^k -> Y^k`)
/// with uniform messages.
pub fn block_error_exact(code: &BlockCode, kernel: &Dmc) -> Result<f64> {
    let xc = TupleCodec::new(code.k, Alphabet::new(code.inputs)?)?;
    if kernel.inputs() != xc.count() || kernel.outputs() != code.decoder.len() {
        return Err(Error::DimensionMismatch("kernel does not match the code".into()));
    }
    let mut correct = 0.0;
    for (w, cw) in code.encoder.iter().enumerate() {
        let row = kernel.row(xc.index_of(cw)?);
        correct += row
            .iter()
            .zip(&code.decoder)
            .filter(|(_, &d)| d == w)
            .map(|(p, _)| p)
            .sum::<f64>();
    }
    Ok((1.0 - correct / code.messages() as f64).max(0.0))
}

fn check_code_fits(code: &BlockCode, model: &dyn ChannelModel) -> Result<()> {
    if code.inputs != model.input_size() || code.outputs != model.output_size() {
        return Err(Error::AlphabetMismatch {
            left: code.inputs * 1000 + code.outputs,
            right: model.input_size() * 1000 + model.output_size(),
        });
    }
    Ok(())
}

/// Error of one block sent from time `t` with state belief `belief`, plus
/// the state belief after the block (messages uniform).
fn block_step(code: &BlockCode, model: &dyn ChannelModel, t: usize, belief: &[f64]) -> Result<(f64, Vec<f64>)> {
    let states = model.state_count();
    let mut next = vec![0.0; states];
    let mut correct = 0.0;
    let mm = code.messages() as f64;
    for (w, cw) in code.encoder.iter().enumerate() {
        let joint = block_joint(model, t, belief, cw, 0)?;
        for (y, chunk) in joint.chunks(states).enumerate() {
            if code.decoder[y] == w {
                correct += chunk.iter().sum::<f64>();
            }
            for (n, v) in next.iter_mut().zip(chunk) {
                *n += v / mm;
            }
        }
    }
    let z: f64 = next.iter().sum();
    next.iter_mut().for_each(|v| *v /= z);
    Ok(((1.0 - correct / mm).max(0.0), next))
}

/// Exact IFB error: the code applied to `m` consecutive blocks from the
/// channel's initial state, averaged over blocks and uniform messages.
pub fn ifb_error_exact(code: &BlockCode, model: &dyn ChannelModel, m: usize) -> Result<f64> {
    check_code_fits(code, model)?;
    if m == 0 {
        return Err(Error::InvalidArgs("at least one block".into()));
    }
    let mut belief = point_belief(model.state_count(), model.initial_state());
    let mut total = 0.0;
    for i in 0..m {
        let (e, next) = block_step(code, model, i * code.k, &belief)?;
        total += e;
        belief = next;
    }
    Ok(total / m as f64)
}

/// Monte-Carlo IFB error estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte-Carlo IFB error over `trials` independent runs of `m` blocks.
pub fn ifb_error_mc(
    code: &BlockCode,
    model: Arc<dyn ChannelModel>,
    m: usize,
    trials: usize,
    rng: &RandomSource,
) -> Result<McEstimate> {
    check_code_fits(code, model.as_ref())?;
    if m == 0 || trials == 0 {
        return Err(Error::InvalidArgs("need m >= 1 and trials >= 1".into()));
    }
    let yc = TupleCodec::new(code.k, Alphabet::new(code.outputs)?)?;
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut r = rng.fork(&[trial as u64]);
            let mut ch = CausalChannel::new(model.clone());
            let mut errors = 0usize;
            for _ in 0..m {
                let w = r.below(code.messages());
                let ys = ch.transmit(&code.encoder[w], &mut r)?;
                if code.decoder[yc.index_of(&ys)?] != w {
                    errors += 1;
                }
            }
            Ok(errors as f64 / m as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = trials as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let var = if trials > 1 {
        per_trial.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / n).sqrt(),
    })
}

/// States reachable in one step from any state marked in `cur`, under any input.
fn reachable_step(model: &dyn ChannelModel, t: usize, cur: &[bool]) -> Vec<bool> {
    let states = model.state_count();
    let mut kernel = vec![0.0; model.output_size() * states];
    let mut next = vec![false; states];
    for (s, &on) in cur.iter().enumerate() {
        if !on {
            continue;
        }
        for x in 0..model.input_size() {
            model.step_kernel(t, s, x, &mut kernel);
            for (i, &p) in kernel.iter().enumerate() {
                if p > 0.0 {
                    next[i % states] = true;
                }
            }
        }
    }
    next
}

/// Exact AFB error: the mean over `m` blocks of the worst per-block error
/// over every state reachable at the block start. For channels whose
/// history acts only through the state this upper-bounds the worst case
/// over histories and is attained whenever the history can pin the state.
pub fn afb_error(code: &BlockCode, model: &dyn ChannelModel, m: usize) -> Result<f64> {
    check_code_fits(code, model)?;
    if !model.capabilities().state_enumerable {
        return Err(Error::NotEnumerable(model.name()));
    }
    if m == 0 {
        return Err(Error::InvalidArgs("at least one block".into()));
    }
    let states = model.state_count();
    let mut reach = vec![false; states];
    reach[model.initial_state()] = true;
    let mut total = 0.0;
    for i in 0..m {
        let t = i * code.k;
        let mut worst: f64 = 0.0;
        for s in (0..states).filter(|&s| reach[s]) {
            let (e, _) = block_step(code, model, t, &point_belief(states, s))?;
            worst = worst.max(e);
        }
        total += worst;
        for j in 0..code.k {
            reach = reachable_step(model, t + j, &reach);
        }
    }
    Ok(total / m as f64)
}

/// Alignment of reference blocks with super-symbols in one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSummary {
    pub q: usize,
    pub k: usize,
    pub l: usize,
    pub n_m: usize,
    /// `|B_j|` for `j = 1..k` (index `j - 1`).
    pub set_sizes: Vec<usize>,
    /// `n_B(j)`: blocks inside symbols `L..q` of every super-symbol of `B_j`.
    pub blocks: Vec<usize>,
    /// Symbols of the epoch not inside a counted block.
    pub n0: usize,
    /// `lambda_0 .. lambda_k`.
    pub lambdas: Vec<Ratio<u64>>,
}

/// Reference blocks of length `k` tile the epoch from its first symbol.
/// Super-symbol `i` (1-based) covers symbols `[(i-1)q, iq)`; the set `B_j`
/// holds the super-symbols `i = l k + j`, and a block counts for `i` when it
/// lies inside the super-symbol's symbols `L..q`. Because `q k` is a multiple
/// of `k`, every member of `B_j` sees the same block offsets.
pub fn alignment(q: usize, k: usize, l: usize, n_m: usize) -> Result<AlignmentSummary> {
    if q == 0 || k == 0 || l == 0 || n_m == 0 {
        return Err(Error::InvalidGeometry("q, k, L and N_m must be positive".into()));
    }
    if l > q {
        return Err(Error::InvalidGeometry(format!("L = {l} exceeds q = {q}")));
    }
    let mut set_sizes = Vec::with_capacity(k);
    let mut blocks = Vec::with_capacity(k);
    let mut covered = 0usize;
    for j in 1..=k {
        let size = if j <= n_m { (n_m - j) / k + 1 } else { 0 };
        let start = (j - 1) * q + (l - 1);
        let end = j * q;
        let first = start.div_ceil(k);
        let nb = (end / k).saturating_sub(first);
        set_sizes.push(size);
        blocks.push(nb);
        covered += size * nb * k;
    }
    let total = (n_m * q) as u64;
    let n0 = n_m * q - covered;
    let mut lambdas = vec![Ratio::new(n0 as u64, total)];
    for j in 0..k {
        lambdas.push(Ratio::new((set_sizes[j] * blocks[j] * k) as u64, total));
    }
    Ok(AlignmentSummary {
        q,
        k,
        l,
        n_m,
        set_sizes,
        blocks,
        n0,
        lambdas,
    })
}

impl AlignmentSummary {
    /// Members of `B_j` (1-based super-symbol indices).
    pub fn set(&self, j: usize) -> Vec<usize> {
        (j..=self.n_m).step_by(self.k).collect()
    }
}

/// How the collapsed channel conditions on the past.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CollapseMode {
    /// The past produced by the reference system itself.
    Realized,
    /// The channel state at each super-symbol start forced to the given
    /// value (one entry per member of the alignment set).
    Forced(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedChannel {
    pub channel: Dmc,
    pub mode: CollapseMode,
}

/// The average over `i` in `set` (1-based super-symbol indices) of the law
/// of outputs `L..q` of super-symbol `i` given its inputs, for the
/// reference system running `code` from time 0.
///
/// In realized mode the history is the reference system's own: the state at
/// the super-symbol start is tracked jointly with the message of any block
/// straddling it, and conditioned on the inputs the block already sent.
/// Inputs the code never emits use the unconditioned state belief.
pub fn collapsed_channel(
    model: &dyn ChannelModel,
    code: &BlockCode,
    set: &[usize],
    q: usize,
    l: usize,
    mode: CollapseMode,
) -> Result<CollapsedChannel> {
    check_code_fits(code, model)?;
    if set.is_empty() {
        return Err(Error::EmptyList);
    }
    if q == 0 || l == 0 || l > q {
        return Err(Error::InvalidGeometry(format!("need 1 <= L <= q, got L={l}, q={q}")));
    }
    if set.contains(&0) {
        return Err(Error::InvalidArgs("super-symbol indices are 1-based".into()));
    }
    if let CollapseMode::Forced(states) = &mode {
        if states.len() != set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} forced states for {} super-symbols",
                states.len(),
                set.len()
            )));
        }
        if let Some(&s) = states.iter().find(|&&s| s >= model.state_count()) {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                size: model.state_count(),
            });
        }
    }
    let states = model.state_count();
    let skip = l - 1;
    let mut acc: Option<Vec<f64>> = None;
    let mut shape = (0, 0);
    for (pos, &i) in set.iter().enumerate() {
        let start = (i - 1) * q;
        let kernel = match &mode {
            CollapseMode::Forced(s) => block_kernel(model, start, &point_belief(states, s[pos]), q, skip)?,
            CollapseMode::Realized => realized_kernel(model, code, start, q, skip)?,
        };
        shape = (kernel.inputs(), kernel.outputs());
        match acc.as_mut() {
            None => acc = Some(kernel.as_flat().to_vec()),
            Some(a) => a.iter_mut().zip(kernel.as_flat()).for_each(|(d, v)| *d += v),
        }
    }
    let n = set.len() as f64;
    let mut flat = acc.expect("nonempty set");
    flat.iter_mut().for_each(|v| *v /= n);
    Ok(CollapsedChannel {
        channel: Dmc::from_flat_normalized(shape.0, shape.1, flat),
        mode,
    })
}

/// Kernel of one super-symbol starting at `start` under the reference
/// system's own history.
fn realized_kernel(model: &dyn ChannelModel, code: &BlockCode, start: usize, q: usize, skip: usize) -> Result<Dmc> {
    let states = model.state_count();
    let k = code.k;
    let block_start = start / k * k;
    // state belief at the start of the block containing `start`
    let mut belief = point_belief(states, model.initial_state());
    for b in 0..block_start / k {
        belief = block_step(code, model, b * k, &belief)?.1;
    }
    let offset = start - block_start;
    let mm = code.messages() as f64;
    // joint mass of (straddling message, state at `start`)
    let per_message: Vec<Vec<f64>> = if offset == 0 {
        Vec::new()
    } else {
        code.encoder
            .iter()
            .map(|cw| {
                let j = block_joint(model, block_start, &belief, &cw[..offset], offset)?;
                Ok(j.iter().map(|v| v / mm).collect())
            })
            .collect::<Result<_>>()?
    };
    let marginal: Vec<f64> = if offset == 0 {
        belief.clone()
    } else {
        let mut m = vec![0.0; states];
        for pm in &per_message {
            m.iter_mut().zip(pm).for_each(|(d, v)| *d += v);
        }
        m
    };
    let cap = enum_cap();
    let xc = TupleCodec::with_cap(q, Alphabet::new(model.input_size())?, cap)?;
    let mut flat = Vec::new();
    let mut xs = vec![0; q];
    let mut nout = 0;
    for xi in 0..xc.count() {
        xc.tuple_into(xi, &mut xs)?;
        let mut b = vec![0.0; states];
        let head = (k - offset).min(q);
        if offset > 0 {
            for (cw, pm) in code.encoder.iter().zip(&per_message) {
                if cw[offset..offset + head] == xs[..head] {
                    b.iter_mut().zip(pm).for_each(|(d, v)| *d += v);
                }
            }
        }
        let z: f64 = b.iter().sum();
        let b: Vec<f64> = if z > 0.0 {
            b.into_iter().map(|v| v / z).collect()
        } else {
            let z: f64 = marginal.iter().sum();
            marginal.iter().map(|v| v / z).collect()
        };
        let row = marginal_outputs(&block_joint(model, start, &b, &xs, skip)?, states);
        nout = row.len();
        flat.extend(row);
    }
    Ok(Dmc::from_flat_normalized(xc.count(), nout, flat))
}

/// `K (1 - eps_bar) - n_B hb_mono(eps_bar)` with `K = n_B k R` message bits.
pub fn fano_lower_bound(total_bits: f64, n_b: usize, k: usize, rate: f64, eps_bar: f64) -> Result<f64> {
    if !(eps_bar >= 0.0) || !(rate >= 0.0) || k == 0 {
        return Err(Error::InvalidArgs(format!("eps_bar={eps_bar}, R={rate}, k={k}")));
    }
    let expected = n_b as f64 * k as f64 * rate;
    if (total_bits - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(Error::InvalidArgs(format!("K = {total_bits} but n_B k R = {expected}")));
    }
    Ok(total_bits * (1.0 - eps_bar) - n_b as f64 * hb_mono(eps_bar))
}

/// `R t + hb_mono(t) / k`.
pub fn delta1(k: usize, rate: f64, t: f64) -> Result<f64> {
    if k == 0 || !(t >= 0.0) {
        return Err(Error::InvalidArgs(format!("k={k}, t={t}")));
    }
    Ok(rate * t + hb_mono(t) / k as f64)
}

/// `R (L - 1 + 2k) / q + log2(k) / q`.
pub fn delta2_bound(k: usize, rate: f64, l: usize, q: usize) -> Result<f64> {
    if k == 0 || q == 0 || l == 0 {
        return Err(Error::InvalidArgs(format!("k={k}, L={l}, q={q}")));
    }
    Ok(rate * (l as f64 - 1.0 + 2.0 * k as f64) / q as f64 + (k as f64).log2() / q as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::capacity;
    use crate::channels::{DmcChannel, ModuloAdditiveChannel, Noise, PasswordChannel};

    fn bsc3() -> Dmc {
        Dmc::bsc(0.11).unwrap().power(3).unwrap()
    }

    #[test]
    fn ml_decoder_examples() {
        let code = exhaustive_block_code(1, 2, Some(&Dmc::identity(2)), 2).unwrap();
        assert_eq!(code.decoder, vec![0, 1]);

        let rep = BlockCode::with_ml_decoder(3, vec![vec![0, 0, 0], vec![1, 1, 1]], &bsc3()).unwrap();
        for y in 0..8usize {
            let ones = y.count_ones();
            assert_eq!(rep.decode_index(y), usize::from(ones >= 2), "y={y:03b}");
        }
    }

    #[test]
    fn ml_ties_go_to_lowest_index() {
        let w = Dmc::uniform_rows(2, 2);
        let code = BlockCode::with_ml_decoder(1, vec![vec![1], vec![0]], &w).unwrap();
        assert_eq!(code.decoder, vec![0, 0]);
    }

    #[test]
    fn random_code_checks() {
        let mut rng = RandomSource::new(1, 0);
        let q = Dist::uniform(2);
        assert!(matches!(
            random_block_code(2, 5, &q, None, 2, &mut rng),
            Err(Error::TooManyMessages { messages: 5, codewords: 4 })
        ));
        let a = random_block_code(3, 4, &q, Some(&bsc3()), 2, &mut RandomSource::new(9, 0)).unwrap();
        let b = random_block_code(3, 4, &q, Some(&bsc3()), 2, &mut RandomSource::new(9, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_roundtrip() {
        let rep = BlockCode::with_ml_decoder(3, vec![vec![0, 0, 0], vec![1, 1, 1]], &bsc3()).unwrap();
        let text = rep.to_text();
        assert!(text.contains("\n0 0 0\n1 1 1\n"));
        assert_eq!(BlockCode::from_text(&text).unwrap(), rep);
        assert!(BlockCode::from_text("2 2\n").is_err());
        assert!(BlockCode::from_text("1 2 2\n0\n1\ndecoder\n0 7\n").is_err());
    }

    #[test]
    fn ifb_examples() {
        let id = DmcChannel::new(Dmc::identity(2));
        let code = exhaustive_block_code(2, 2, None, 2).unwrap();
        assert_eq!(ifb_error_exact(&code, &id, 3).unwrap(), 0.0);

        let flat = DmcChannel::new(Dmc::uniform_rows(2, 2));
        let code = BlockCode::new(1, 2, 2, vec![vec![0], vec![1]], vec![1, 0]).unwrap();
        assert!((ifb_error_exact(&code, &flat, 4).unwrap() - 0.5).abs() < 1e-15);

        // a code that pre-subtracts the known period-2 pattern
        for phase in 0..2 {
            let pattern = if phase == 0 { vec![0, 1] } else { vec![1, 0] };
            let ch = ModuloAdditiveChannel::new(2, Noise::Periodic(pattern.clone())).unwrap();
            let enc: Vec<Vec<usize>> = (0..4usize)
                .map(|w| vec![((w >> 1) + pattern[0]) % 2, ((w & 1) + pattern[1]) % 2])
                .collect();
            let code = BlockCode::with_hamming_decoder(2, 2, 2, enc).unwrap();
            // decoder must undo the shift: rebuild as ML under the noise kernel
            let kernel = crate::channels::exact::block_kernel(&ch, 0, &[1.0], 2, 0).unwrap();
            let code = BlockCode::with_ml_decoder(2, code.encoder.clone(), &kernel).unwrap();
            assert_eq!(ifb_error_exact(&code, &ch, 5).unwrap(), 0.0);
            assert_eq!(code.rate(), 1.0);
        }
    }

    #[test]
    fn ifb_monte_carlo_agrees_with_exact() {
        let model: Arc<dyn ChannelModel> = Arc::new(DmcChannel::new(Dmc::bsc(0.11).unwrap()));
        let rep = BlockCode::with_ml_decoder(3, vec![vec![0, 0, 0], vec![1, 1, 1]], &bsc3()).unwrap();
        let exact = ifb_error_exact(&rep, model.as_ref(), 4).unwrap();
        let mc = ifb_error_mc(&rep, model, 4, 20_000, &RandomSource::new(3, 0)).unwrap();
        assert!((mc.mean - exact).abs() <= 4.0 * mc.std_error + 1e-3, "{mc:?} vs {exact}");
    }

    #[test]
    fn afb_examples() {
        let w = Dmc::bsc(0.2).unwrap();
        let dmc = DmcChannel::new(w.clone());
        let rep = BlockCode::with_ml_decoder(3, vec![vec![0, 0, 0], vec![1, 1, 1]], &w.power(3).unwrap()).unwrap();
        let (a, i) = (afb_error(&rep, &dmc, 3).unwrap(), ifb_error_exact(&rep, &dmc, 3).unwrap());
        assert!((a - i).abs() < 1e-15);

        // tuned to the good mode: message 0 starts with the polarity bit
        let pw = PasswordChannel::new(1).unwrap();
        let code = BlockCode::new(2, 2, 2, vec![vec![1, 0], vec![1, 1]], vec![0, 0, 0, 1]).unwrap();
        assert_eq!(ifb_error_exact(&code, &pw, 3).unwrap(), 0.0);
        let afb = afb_error(&code, &pw, 3).unwrap();
        // blocks 2 and 3 may face the bad mode, where both messages read 00
        assert!((afb - 1.0 / 3.0).abs() < 1e-15, "{afb}");

        let id = DmcChannel::new(Dmc::identity(2));
        let code = exhaustive_block_code(2, 2, None, 2).unwrap();
        assert_eq!(afb_error(&code, &id, 2).unwrap(), 0.0);
    }

    /// Marks every symbol covered by a counted block, one super-symbol at a time.
    fn brute_alignment(q: usize, k: usize, l: usize, n_m: usize) -> (Vec<usize>, Vec<usize>, usize) {
        let mut sizes = vec![0; k];
        let mut blocks = vec![0; k];
        let mut covered = vec![false; n_m * q];
        for i in 1..=n_m {
            let j = (i - 1) % k;
            sizes[j] += 1;
            let lo = (i - 1) * q + l - 1;
            let hi = i * q;
            let mut count = 0;
            let mut b = 0;
            while b * k < n_m * q {
                if b * k >= lo && (b + 1) * k <= hi {
                    count += 1;
                    covered[b * k..(b + 1) * k].iter_mut().for_each(|c| *c = true);
                }
                b += 1;
            }
            if sizes[j] == 1 {
                blocks[j] = count;
            } else {
                assert_eq!(blocks[j], count, "n_B varies inside B_{}", j + 1);
            }
        }
        (sizes, blocks, covered.iter().filter(|c| !**c).count())
    }

    #[test]
    fn alignment_examples() {
        let a = alignment(1, 1, 1, 5).unwrap();
        assert_eq!((a.set_sizes.clone(), a.blocks.clone(), a.n0), (vec![5], vec![1], 0));
        assert_eq!(a.lambdas, vec![Ratio::new(0, 1), Ratio::new(1, 1)]);

        let a = alignment(12, 3, 2, 6).unwrap();
        let (sizes, blocks, n0) = brute_alignment(12, 3, 2, 6);
        assert_eq!((a.set_sizes.clone(), a.blocks.clone(), a.n0), (sizes, blocks, n0));
        // super-symbols start at offsets 0, 0, 0 mod 3: blocks at 3, 6, 9 fit
        assert_eq!(a.blocks, vec![3, 3, 3]);
        assert_eq!(a.n0, 18);
        assert_eq!(a.lambdas.iter().sum::<Ratio<u64>>(), Ratio::new(1, 1));
        assert_eq!(a.set(2), vec![2, 5]);

        assert!(matches!(alignment(4, 2, 5, 3), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn alignment_matches_brute_force() {
        let mut rng = RandomSource::new(77, 0);
        for _ in 0..300 {
            let q = 1 + rng.below(20);
            let k = 1 + rng.below(6);
            let l = 1 + rng.below(q);
            let n_m = 1 + rng.below(12);
            let a = alignment(q, k, l, n_m).unwrap();
            let (sizes, blocks, n0) = brute_alignment(q, k, l, n_m);
            assert_eq!(a.set_sizes, sizes);
            // n_B of an empty set is irrelevant
            for j in 0..k {
                if sizes[j] > 0 {
                    assert_eq!(a.blocks[j], blocks[j], "q={q} k={k} L={l} N={n_m}");
                }
            }
            assert_eq!(a.n0, n0);
        }
    }

    #[test]
    fn collapsed_examples() {
        let w = Dmc::new(vec![vec![0.9, 0.1], vec![0.25, 0.75]]).unwrap();
        let dmc = DmcChannel::new(w.clone());
        let code = exhaustive_block_code(1, 2, None, 2).unwrap();
        let r = collapsed_channel(&dmc, &code, &[3], 2, 1, CollapseMode::Realized).unwrap();
        assert_eq!(r.channel, w.power(2).unwrap());
        let f = collapsed_channel(&dmc, &code, &[1, 3], 2, 2, CollapseMode::Forced(vec![0, 0])).unwrap();
        let r = collapsed_channel(&dmc, &code, &[1, 3], 2, 2, CollapseMode::Realized).unwrap();
        assert!(f.channel.max_row_l1(&r.channel).unwrap() < 1e-15);

        let ma = ModuloAdditiveChannel::new(2, Noise::List(vec![0, 1])).unwrap();
        let c = collapsed_channel(&ma, &code, &[1, 2], 1, 1, CollapseMode::Realized).unwrap();
        assert_eq!(c.channel, Dmc::bsc(0.5).unwrap());
        assert!(capacity(&c.channel, 1e-10).unwrap() < 1e-9);
    }

    #[test]
    fn collapsed_realized_conditions_on_the_straddling_block() {
        // password channel, polarity 1; code sends (1, w) so the mode is good;
        // super-symbol 2 of size 1 sees the second symbol of block 1
        let pw = PasswordChannel::new(1).unwrap();
        let code = BlockCode::new(2, 2, 2, vec![vec![1, 0], vec![1, 1]], vec![0, 0, 0, 1]).unwrap();
        let c = collapsed_channel(&pw, &code, &[2], 1, 1, CollapseMode::Realized).unwrap();
        assert_eq!(c.channel, Dmc::identity(2));
        let bad = collapsed_channel(&pw, &code, &[2], 1, 1, CollapseMode::Forced(vec![PasswordChannel::BAD])).unwrap();
        assert_eq!(bad.channel, Dmc::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap());
    }

    #[test]
    fn fano_and_delta_examples() {
        assert_eq!(fano_lower_bound(6.0, 2, 3, 1.0, 0.0).unwrap(), 6.0);
        assert_eq!(fano_lower_bound(3.0, 3, 1, 1.0, 0.5).unwrap(), -1.5);
        assert_eq!(fano_lower_bound(1.0, 1, 1, 1.0, 0.0).unwrap(), 1.0);
        assert!(fano_lower_bound(5.0, 2, 3, 1.0, 0.0).is_err());
        assert!(fano_lower_bound(6.0, 2, 3, 1.0, -0.1).is_err());

        assert_eq!(delta1(4, 0.7, 0.0).unwrap(), 0.0);
        assert_eq!(delta1(1, 1.0, 0.5).unwrap(), 1.5);
        assert_eq!(delta2_bound(2, 1.0, 1, 1024).unwrap(), 5.0 / 1024.0);
        assert!(delta2_bound(2, 1.0, 1, 0).is_err());
    }

    #[test]
    fn delta1_is_concave_in_t() {
        for k in 1..5 {
            let f = |t: f64| delta1(k, 0.8, t).unwrap();
            for i in 1..200 {
                let t = i as f64 / 200.0;
                let h = 1.0 / 400.0;
                assert!(f(t) >= 0.5 * (f(t - h) + f(t + h)) - 1e-12);
            }
        }
    }
}

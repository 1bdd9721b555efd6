//! The adaptive-rate scheme run inside one epoch.
//!
//! The `q`-symbol super-symbols are cut into letters of `d` symbols. A
//! training phase sends uniformly drawn letters taken from the common
//! randomness, so the decoder learns the letter kernel without any
//! feedback of outputs. The rest of the epoch carries multilevel binary
//! polar codes (one level per letter bit, decoded from the least
//! significant bit up by list decoding), each chunk protected by a random
//! linear hash that also picks among the list. Codes are designed for the
//! estimated level capacities, less a noise allowance and a backoff that
//! grows with failures. After every block the decoder feeds back the first
//! level whose hash failed and the encoder resends from there; blocks that
//! pass refine the kernel estimate. The announced rate is the number of bits
//! delivered in order.

use super::polar;
use super::{delta_c, FeedbackLink};
use crate::capacity::{blahut_arimoto, Dmc};
use crate::channels::SuperSymbolView;
use crate::error::{Error, Result};
use crate::types::{enum_cap, Alphabet, RandomSource, TupleCodec};
use rand_chacha::rand_core::RngCore;

/// Largest letter input alphabet; small letters keep the kernel estimate
/// from overfitting the training data.
pub const MAX_LETTER_INPUTS: usize = 4;
/// Largest letter output alphabet estimated from training.
pub const MAX_LETTER_OUTPUTS: usize = 256;
/// Smallest epoch the scheme accepts, in super-symbols.
pub const MIN_SUPER_SYMBOLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerParams {
    /// Target probability of a decoding error.
    pub eps: f64,
    /// Allowed probability of falling short of the declared rate.
    pub delta: f64,
    pub c_delta: f64,
    /// Summed estimated bit-error budget per polar block and level.
    pub block_target: f64,
    /// Training uses `ceil(T^train_exponent)` of the `T` letters.
    pub train_exponent: f64,
    /// Codes are designed for the estimated level capacity minus
    /// `cap_slack / sqrt(letters observed)`, hedging estimation noise.
    pub cap_slack: f64,
    pub max_block: usize,
    pub min_block: usize,
}

impl InnerParams {
    pub fn new(eps: f64, delta: f64, c_delta: f64) -> Self {
        InnerParams {
            eps,
            delta,
            c_delta,
            block_target: 0.2,
            train_exponent: 0.75,
            cap_slack: 1.0,
            max_block: 2048,
            min_block: 16,
        }
    }
}

/// Outcome of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    /// Super-symbols in the epoch.
    pub n: usize,
    pub q: usize,
    /// Announced rate, bits per super-symbol.
    pub rate: f64,
    /// Bits delivered, in order.
    pub decoded_bits: usize,
    /// Some delivered bit differs from the message.
    pub error: bool,
    /// Capacity of the estimated channel, bits per super-symbol.
    pub capacity_estimate: f64,
    /// Declared margin: the announced rate is meant to reach
    /// `capacity_estimate - margin`.
    pub margin: f64,
    pub feedback_bits: u64,
    /// Symbols per letter.
    pub letter: usize,
    pub training_letters: usize,
    /// Letter kernel estimated from training alone.
    pub estimate: Option<Dmc>,
}

impl AdaptiveResult {
    /// Rate in bits per channel symbol.
    pub fn rate_per_symbol(&self) -> f64 {
        self.rate / self.q as f64
    }
}

/// Letter length `d` (a power of two dividing `q`) and coded bits per letter.
pub fn letter_shape(q: usize, inputs: usize, outputs: usize) -> Result<(usize, usize)> {
    if inputs > MAX_LETTER_INPUTS.max(2) && (inputs * outputs) as u64 > enum_cap() {
        return Err(Error::AlphabetOverflow(format!("{inputs} inputs x {outputs} outputs")));
    }
    let mut d = 1;
    while 2 * d <= q
        && inputs.checked_pow(2 * d as u32).is_some_and(|v| v <= MAX_LETTER_INPUTS)
        && outputs.checked_pow(2 * d as u32).is_some_and(|v| v <= MAX_LETTER_OUTPUTS)
    {
        d *= 2;
    }
    let letters = inputs.pow(d as u32);
    Ok((d, letters.ilog2() as usize))
}

/// Polar block lengths covering as much of `letters` as possible.
fn plan_blocks(mut letters: usize, min: usize, max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    while letters >= min {
        let nb = (1usize << letters.ilog2()).min(max);
        out.push(nb);
        letters -= nb;
    }
    out
}

/// Survivors kept by the list decoder.
const LIST: usize = 8;

/// Weight, in letters, of the per-symbol model in the letter estimate.
const SHRINK: f64 = 4096.0;

/// Counts of (input letter, output letter) pairs.
#[derive(Debug, Clone)]
struct Counts {
    xc: TupleCodec,
    yc: TupleCodec,
    c: Vec<u64>,
}

impl Counts {
    fn new(xc: TupleCodec, yc: TupleCodec) -> Self {
        let c = vec![0; xc.count() * yc.count()];
        Counts { xc, yc, c }
    }

    fn add(&mut self, x: usize, y: usize) {
        self.c[x * self.yc.count() + y] += 1;
    }

    fn total(&self) -> u64 {
        self.c.iter().sum::<u64>().max(1)
    }

    /// Letter kernel estimate: the empirical rows shrunk towards the
    /// product of per-position symbol kernels, which pools every position's
    /// data. Memory inside a letter still shows once rows fill up.
    fn estimate(&self) -> Result<Dmc> {
        let (nx, ny) = (self.xc.count(), self.yc.count());
        let (bx, by, d) = (self.xc.base(), self.yc.base(), self.xc.k());
        let mut sym = vec![0.0; d * bx * by];
        let (mut xs, mut ys) = (vec![0; d], vec![0; d]);
        for x in 0..nx {
            self.xc.tuple_into(x, &mut xs)?;
            for y in 0..ny {
                let v = self.c[x * ny + y];
                if v == 0 {
                    continue;
                }
                self.yc.tuple_into(y, &mut ys)?;
                for j in 0..d {
                    sym[(j * bx + xs[j]) * by + ys[j]] += v as f64;
                }
            }
        }
        for row in sym.chunks_mut(by) {
            let z: f64 = row.iter().sum::<f64>() + 0.5 * by as f64;
            row.iter_mut().for_each(|v| *v = (*v + 0.5) / z);
        }
        let mut w = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            self.xc.tuple_into(x, &mut xs)?;
            let row = &self.c[x * ny..(x + 1) * ny];
            let total = row.iter().sum::<u64>() as f64 + SHRINK;
            for (y, &v) in row.iter().enumerate() {
                self.yc.tuple_into(y, &mut ys)?;
                let prior: f64 = (0..d).map(|j| sym[(j * bx + xs[j]) * by + ys[j]]).product();
                w.push((v as f64 + SHRINK * prior) / total);
            }
        }
        Ok(Dmc::from_flat_normalized(nx, ny, w))
    }
}

/// Per-level binary views of the letter kernel with lower bits known and
/// higher bits uniform.
struct LevelTables {
    /// `[level][lower * outputs + y]`: log-likelihood ratio of the bit.
    llr: Vec<Vec<f64>>,
    /// Capacity in bits per level.
    capacity: Vec<f64>,
}

fn level_tables(w: &Dmc, bits: usize) -> LevelTables {
    let ny = w.outputs();
    let mut llr = Vec::with_capacity(bits);
    let mut capacity = Vec::with_capacity(bits);
    for l in 0..bits {
        let lower = 1usize << l;
        let higher = 1usize << (bits - l - 1);
        let mut table = vec![0.0; lower * ny];
        let mut cl = 0.0;
        for a in 0..lower {
            for y in 0..ny {
                let mut p = [0.0; 2];
                for (v, pv) in p.iter_mut().enumerate() {
                    for h in 0..higher {
                        *pv += w.get(a | (v << l) | (h << (l + 1)), y);
                    }
                    *pv /= higher as f64;
                }
                table[a * ny + y] = (p[0] / p[1]).ln().clamp(-50.0, 50.0);
                let mix = 0.5 * (p[0] + p[1]);
                for &pv in &p {
                    if pv > 0.0 {
                        cl += 0.5 * pv * (pv / mix).log2();
                    }
                }
            }
        }
        llr.push(table);
        capacity.push((cl / lower as f64).clamp(0.0, 1.0));
    }
    LevelTables { llr, capacity }
}

/// 8-bit conservative quantization of a level capacity, as fed back to the
/// encoder.
fn quantize_capacity(c: f64) -> (u8, f64) {
    let code = (c.clamp(0.0, 1.0) * 256.0).floor().min(255.0) as u8;
    (code, code as f64 / 256.0)
}

/// Random linear hash of `payload` to `c` bits, drawn from `rng`.
fn hash(payload: &[u8], c: usize, rng: &mut RandomSource) -> Vec<u8> {
    let mut out = vec![0u8; c];
    for h in out.iter_mut() {
        let mut acc = 0u8;
        for chunk in payload.chunks(64) {
            let mask = rng.next_u64();
            for (i, &b) in chunk.iter().enumerate() {
                acc ^= b & ((mask >> i) & 1) as u8;
            }
        }
        *h = acc;
    }
    out
}

/// Lazily drawn message bits.
struct Message {
    rng: RandomSource,
    bits: Vec<u8>,
}

impl Message {
    fn get(&mut self, from: usize, len: usize) -> Vec<u8> {
        while self.bits.len() < from + len {
            let word = self.rng.next_u64();
            self.bits.extend((0..64).map(|i| ((word >> i) & 1) as u8));
        }
        self.bits[from..from + len].to_vec()
    }
}

/// Runs the scheme over `n` super-symbols of `view`. Encoder and decoder
/// share `common`; `noise` drives the channel. All `n q` symbols are sent.
pub fn inner_scheme_run(
    view: &mut SuperSymbolView<'_>,
    n: usize,
    params: &InnerParams,
    fb: &mut FeedbackLink,
    common: &RandomSource,
    noise: &mut RandomSource,
) -> Result<AdaptiveResult> {
    if n < MIN_SUPER_SYMBOLS {
        return Err(Error::NTooSmall {
            n,
            min: MIN_SUPER_SYMBOLS,
        });
    }
    if !(params.eps > 0.0 && params.eps < 1.0) {
        return Err(Error::InvalidArgs(format!("eps = {}", params.eps)));
    }
    let q = view.q();
    let (nx, ny) = (view.input_size(), view.output_size());
    let (d, bits) = letter_shape(q, nx, ny)?;
    let xc = TupleCodec::new(d, Alphabet::new(nx)?)?;
    let yc = TupleCodec::new(d, Alphabet::new(ny)?)?;
    let total_symbols = n * q;
    let letters = total_symbols / d;
    let start_time = view.time();
    fb.open_epoch(total_symbols as u64);
    let fb_start = fb.used();

    let send = |view: &mut SuperSymbolView<'_>, letter: usize, noise: &mut RandomSource| -> Result<usize> {
        let ys = view.transmit_symbols(&xc.tuple_of(letter)?, noise)?;
        yc.index_of(&ys)
    };

    // training
    let training = ((letters as f64).powf(params.train_exponent).ceil() as usize).min(letters);
    let mut counts = Counts::new(xc, yc);
    let mut train_rng = common.fork(&[0]);
    for _ in 0..training {
        let x = train_rng.below(xc.count());
        let y = send(view, x, noise)?;
        counts.add(x, y);
    }
    let estimate = counts.estimate()?;
    let letter_capacity = blahut_arimoto(&estimate, 1e-6)?.capacity;
    let capacity_estimate = letter_capacity * (q / d) as f64;

    let blocks = plan_blocks(letters - training, params.min_block, params.max_block);
    let checks = (blocks.len() * bits).max(1);
    // a false pass needs one of LIST candidates to collide
    let c = (2.0 * (checks * LIST) as f64 / params.eps).log2().ceil() as usize;
    let level_feedback = usize::BITS as usize - bits.leading_zeros() as usize;

    let mut message = Message {
        rng: common.fork(&[2]),
        bits: Vec::new(),
    };
    let mut delivered: Vec<u8> = Vec::new();
    let mut planned = 0usize;
    let mut pointer = 0usize;
    let mut sent_letters = training;
    // per-level design backoff, raised whenever a level fails its check
    let mut backoff = vec![0.0; bits];
    for (bi, &nb) in blocks.iter().enumerate() {
        if bits == 0 {
            break;
        }
        // decoder designs from its current estimate and feeds the design back
        let current = counts.estimate()?;
        let tables = level_tables(&current, bits);
        if fb.send(8 * bits as u64).is_err() {
            break;
        }
        let slack = params.cap_slack / (counts.total() as f64).sqrt();
        let infos: Vec<Vec<bool>> = tables
            .capacity
            .iter()
            .zip(&backoff)
            .map(|(&cl, &b)| {
                let (_, design) = quantize_capacity(cl - slack - b);
                let estimates = polar::gaussian_error_estimates(nb, design);
                let mask = polar::select_information(&estimates, params.block_target);
                if mask.iter().filter(|&&b| b).count() > c {
                    mask
                } else {
                    vec![false; nb]
                }
            })
            .collect();
        let payloads: Vec<usize> = infos
            .iter()
            .map(|m| m.iter().filter(|&&b| b).count().saturating_sub(c))
            .collect();
        planned += payloads.iter().sum::<usize>();

        // encoder
        let mut level_bits: Vec<Vec<u8>> = Vec::with_capacity(bits);
        let mut dithers: Vec<Vec<u8>> = Vec::with_capacity(bits);
        let mut offset = pointer;
        for l in 0..bits {
            let payload = message.get(offset, payloads[l]);
            offset += payloads[l];
            let mut u = vec![0u8; nb];
            if payloads[l] > 0 {
                let h = hash(&payload, c, &mut common.fork(&[1, bi as u64, l as u64]));
                let mut src = payload.iter().chain(h.iter());
                for (slot, _) in u.iter_mut().zip(&infos[l]).filter(|(_, &i)| i) {
                    *slot = *src.next().expect("information positions hold payload and hash");
                }
            }
            polar::encode(&mut u);
            let mut dr = common.fork(&[3, bi as u64, l as u64]);
            let dither: Vec<u8> = (0..nb).map(|_| dr.below(2) as u8).collect();
            level_bits.push(u.iter().zip(&dither).map(|(a, b)| a ^ b).collect());
            dithers.push(dither);
        }
        let tx: Vec<usize> = (0..nb)
            .map(|i| (0..bits).fold(0, |acc, l| acc | ((level_bits[l][i] as usize) << l)))
            .collect();
        let mut rx = Vec::with_capacity(nb);
        for &x in &tx {
            rx.push(send(view, x, noise)?);
        }
        sent_letters += nb;

        // decoder
        let mut known = vec![0usize; nb];
        let mut first_fail = bits;
        let mut block_out: Vec<u8> = Vec::new();
        for l in 0..bits {
            if payloads[l] == 0 {
                // nothing sent on this level; its bits are the dither alone
                for (k, &dbit) in known.iter_mut().zip(&dithers[l]) {
                    *k |= (dbit as usize) << l;
                }
                continue;
            }
            let table = &tables.llr[l];
            let llr: Vec<f64> = (0..nb)
                .map(|i| {
                    let v = table[known[i] * yc.count() + rx[i]];
                    if dithers[l][i] == 1 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            let found = polar::decode_list(&llr, &infos[l], LIST).into_iter().find_map(|u| {
                let carried: Vec<u8> = u.iter().zip(&infos[l]).filter(|(_, &i)| i).map(|(&b, _)| b).collect();
                let (payload, h) = carried.split_at(payloads[l]);
                (hash(payload, c, &mut common.fork(&[1, bi as u64, l as u64])) == h).then(|| (u, payload.to_vec()))
            });
            let Some((u, payload)) = found else {
                first_fail = l;
                break;
            };
            block_out.extend_from_slice(&payload);
            let mut x = u;
            polar::encode(&mut x);
            for i in 0..nb {
                known[i] |= ((x[i] ^ dithers[l][i]) as usize) << l;
            }
        }
        let reported = fb.send(level_feedback as u64).is_ok();
        pointer += block_out.len();
        delivered.extend(block_out);
        if first_fail == bits {
            for (&x, &y) in known.iter().zip(&rx) {
                counts.add(x, y);
            }
        } else {
            backoff[first_fail] += slack;
        }
        if !reported {
            break;
        }
    }

    // idle until the epoch ends
    while sent_letters < letters {
        send(view, 0, noise)?;
        sent_letters += 1;
    }
    let rest = start_time + total_symbols - view.time();
    view.transmit_symbols(&vec![0; rest], noise)?;

    let truth = message.get(0, delivered.len());
    let rate = delivered.len() as f64 / n as f64;
    let margin = (capacity_estimate - planned as f64 / n as f64).max(0.0) + delta_c(n as f64, params.c_delta)?;
    Ok(AdaptiveResult {
        n,
        q,
        rate,
        decoded_bits: delivered.len(),
        error: truth != delivered,
        capacity_estimate,
        margin,
        feedback_bits: fb.used() - fb_start,
        letter: d,
        training_letters: training,
        estimate: Some(estimate),
    })
}

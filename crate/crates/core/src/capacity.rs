//! Discrete memoryless channels and the information quantities built on
//! them: entropy, mutual information, Blahut-Arimoto capacity, channel
//! mixtures and the pessimistic averaged-channel capacity.
//!
//! Every quantity is in bits.

use crate::channels::{exact, ChannelModel};
use crate::error::{Error, Result};
use crate::types::{checked_pow, enum_cap, Dist};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Default Blahut-Arimoto tolerance (bits).
pub const DEFAULT_TOL: f64 = 1e-9;
/// Iteration cap before [`Error::NonConvergence`].
pub const MAX_ITERATIONS: usize = 1_000_000;

/// A stochastic matrix `W(y|x)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    inputs: usize,
    outputs: usize,
    w: Vec<f64>,
}

impl Dmc {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::DimensionMismatch("channel without inputs".into()));
        }
        let outputs = rows[0].len();
        let mut w = Vec::with_capacity(inputs * outputs);
        for row in rows {
            if row.len() != outputs {
                return Err(Error::DimensionMismatch(format!(
                    "ragged channel matrix: row of length {} vs {}",
                    row.len(),
                    outputs
                )));
            }
            w.extend(Dist::new(row)?.into_vec());
        }
        Ok(Dmc { inputs, outputs, w })
    }

    /// Builds from a flat row-major matrix, validating every row.
    pub fn from_flat(inputs: usize, outputs: usize, w: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 || w.len() != inputs * outputs {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} channel",
                w.len(),
                inputs,
                outputs
            )));
        }
        let mut out = Vec::with_capacity(w.len());
        for row in w.chunks(outputs) {
            out.extend(Dist::new(row.to_vec())?.into_vec());
        }
        Ok(Dmc {
            inputs,
            outputs,
            w: out,
        })
    }

    /// Rows must already be normalized up to rounding; each row is
    /// renormalized to absorb accumulated error.
    pub(crate) fn from_flat_normalized(inputs: usize, outputs: usize, mut w: Vec<f64>) -> Self {
        debug_assert_eq!(w.len(), inputs * outputs);
        for row in w.chunks_mut(outputs) {
            let s: f64 = row.iter().sum();
            debug_assert!((s - 1.0).abs() < 1e-6, "row sums to {s}");
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        Dmc { inputs, outputs, w }
    }

    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("crossover {p}")));
        }
        Dmc::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Binary erasure channel; output 2 is the erasure.
    pub fn bec(e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::OutOfRange(format!("erasure probability {e}")));
        }
        Dmc::new(vec![vec![1.0 - e, 0.0, e], vec![0.0, 1.0 - e, e]])
    }

    pub fn identity(n: usize) -> Self {
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        Dmc {
            inputs: n,
            outputs: n,
            w,
        }
    }

    /// Every row uniform: output independent of input.
    pub fn uniform_rows(inputs: usize, outputs: usize) -> Self {
        Dmc {
            inputs,
            outputs,
            w: vec![1.0 / outputs as f64; inputs * outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.w[x * self.outputs + y]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.w.chunks(self.outputs)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.w
    }

    /// Tensor product `W ⊗ V`; tuple indices are most-significant-first.
    pub fn kron(&self, other: &Dmc) -> Result<Dmc> {
        let cap = enum_cap();
        let inputs = (self.inputs as u64) * (other.inputs as u64);
        let outputs = (self.outputs as u64) * (other.outputs as u64);
        if inputs * outputs > cap {
            return Err(Error::Overflow {
                what: "product channel".into(),
                cap,
            });
        }
        let (inputs, outputs) = (inputs as usize, outputs as usize);
        let mut w = Vec::with_capacity(inputs * outputs);
        for x1 in 0..self.inputs {
            for x2 in 0..other.inputs {
                for y1 in 0..self.outputs {
                    let a = self.get(x1, y1);
                    w.extend(other.row(x2).iter().map(|b| a * b));
                }
            }
        }
        Ok(Dmc {
            inputs,
            outputs,
            w,
        })
    }

    /// `W^{⊗q}`.
    pub fn power(&self, q: usize) -> Result<Dmc> {
        if q == 0 {
            return Err(Error::InvalidArgs("power of a channel needs q >= 1".into()));
        }
        let mut acc = self.clone();
        for _ in 1..q {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }

    /// Largest L1 distance between corresponding rows.
    pub fn max_row_l1(&self, other: &Dmc) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .rows()
            .zip(other.rows())
            .map(|(a, b)| crate::types::l1(a, b))
            .fold(0.0, f64::max))
    }

    pub fn permute_outputs(&self, perm: &[usize]) -> Result<Dmc> {
        check_perm(perm, self.outputs)?;
        let mut w = vec![0.0; self.w.len()];
        for x in 0..self.inputs {
            for y in 0..self.outputs {
                w[x * self.outputs + perm[y]] = self.get(x, y);
            }
        }
        Ok(Dmc { w, ..self.clone() })
    }

    pub fn permute_inputs(&self, perm: &[usize]) -> Result<Dmc> {
        check_perm(perm, self.inputs)?;
        let mut w = vec![0.0; self.w.len()];
        for (x, &to) in perm.iter().enumerate() {
            let dst = to * self.outputs;
            w[dst..dst + self.outputs].copy_from_slice(self.row(x));
        }
        Ok(Dmc { w, ..self.clone() })
    }

    fn same_shape(&self, other: &Dmc) -> Result<()> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.inputs, self.outputs, other.inputs, other.outputs
            )));
        }
        Ok(())
    }
}

fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch("permutation length".into()));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgs("not a permutation".into()));
        }
    }
    Ok(())
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("binary entropy of {p}")));
    }
    Ok(xlog(p) + xlog(1.0 - p))
}

/// Monotone continuation `h_b(min(p, 1/2))`; accepts any `p >= 0`.
pub fn hb_mono(p: f64) -> f64 {
    let p = p.clamp(0.0, 0.5);
    xlog(p) + xlog(1.0 - p)
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
fn xlog(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &Dist) -> f64 {
    p.probs().iter().map(|&v| xlog(v)).sum()
}

/// `I(X;Y)` under the joint `Q(x) W(y|x)`.
pub fn mutual_information(q: &Dist, w: &Dmc) -> Result<f64> {
    if q.len() != w.inputs() {
        return Err(Error::DimensionMismatch(format!(
            "prior over {} letters for a channel with {} inputs",
            q.len(),
            w.inputs()
        )));
    }
    let r = output_marginal(q.probs(), w);
    let mut mi = 0.0;
    for (x, &qx) in q.probs().iter().enumerate() {
        if qx > 0.0 {
            mi += qx * divergence_to(w.row(x), &r);
        }
    }
    Ok(mi.max(0.0))
}

fn output_marginal(q: &[f64], w: &Dmc) -> Vec<f64> {
    let mut r = vec![0.0; w.outputs()];
    for (x, &qx) in q.iter().enumerate() {
        if qx > 0.0 {
            for (ry, wy) in r.iter_mut().zip(w.row(x)) {
                *ry += qx * wy;
            }
        }
    }
    r
}

/// `D(row || r)` in bits; `r` must dominate `row`.
fn divergence_to(row: &[f64], r: &[f64]) -> f64 {
    row.iter()
        .zip(r)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &ry)| p * (p / ry).log2())
        .sum()
}

/// Output of [`blahut_arimoto`].
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Certified lower bound on `C(W)`; the true capacity lies within
    /// `gap_bound` above it.
    pub capacity: f64,
    pub prior: Dist,
    pub iterations: usize,
    pub gap_bound: f64,
}

/// Capacity by Blahut-Arimoto, stopped once the upper/lower bound gap is
/// at most `tol`.
pub fn blahut_arimoto(w: &Dmc, tol: f64) -> Result<CapacityResult> {
    blahut_arimoto_traced(w, tol, |_, _| {})
}

/// Like [`blahut_arimoto`], reporting `(lower, upper)` after every iteration.
///
/// Plain iteration converges only sublinearly when an input of
/// vanishing weight has divergence just below capacity. Every
/// [`POLISH_EVERY`] iterations the iteration is therefore restarted on
/// the inputs carrying visible weight; the bounds reported are always
/// certified over the full input alphabet.
pub fn blahut_arimoto_traced(
    w: &Dmc,
    tol: f64,
    mut trace: impl FnMut(f64, f64),
) -> Result<CapacityResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgs(format!("tolerance {tol}")));
    }
    let nx = w.inputs();
    let mut q = vec![1.0 / nx as f64; nx];
    let mut d = vec![0.0; nx];
    let ceiling = (nx.min(w.outputs()) as f64).log2();
    let done = |q: &[f64], gap: f64, it: usize, lower: f64| -> Result<CapacityResult> {
        Ok(CapacityResult {
            capacity: lower.clamp(0.0, ceiling),
            prior: Dist::from_weights(q)?,
            iterations: it,
            gap_bound: gap,
        })
    };
    let mut best_gap = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let (lower, upper) = ba_step(w, &mut q, &mut d, None);
        trace(lower, upper);
        let gap = (upper - lower).max(0.0);
        if gap <= tol {
            return done(&q, gap, it, lower);
        }
        best_gap = best_gap.min(gap);
        if it % POLISH_EVERY == 0 {
            if let Some((qs, lower, gap)) = polish(w, &q, tol) {
                return done(&qs, gap, it, lower);
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        gap: best_gap,
    })
}

/// Iterations between attempts to restrict to the apparent support.
pub const POLISH_EVERY: usize = 2_000;

/// One multiplicative update of `q`, restricted to `active` when given.
/// Returns `(lower, upper)` for the prior before the update; `upper`
/// always ranges over every input.
fn ba_step(w: &Dmc, q: &mut [f64], d: &mut [f64], active: Option<&[bool]>) -> (f64, f64) {
    let r = output_marginal(q, w);
    for (x, dx) in d.iter_mut().enumerate() {
        *dx = divergence_to(w.row(x), &r);
    }
    let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let on = |x: usize| active.is_none_or(|a| a[x]);
    // exponentials are taken relative to the max for stability
    let dmax = (0..q.len())
        .filter(|&x| on(x))
        .map(|x| d[x])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in 0..q.len() {
        q[x] = if on(x) { q[x] * (d[x] - dmax).exp2() } else { 0.0 };
        z += q[x];
    }
    let lower = dmax + z.log2();
    for v in q.iter_mut() {
        *v /= z;
    }
    (lower, upper)
}

/// Iterates on candidate supports: the inputs with non-negligible
/// weight, and the inputs left after dropping those of lowest
/// divergence. Succeeds if the full-alphabet gap drops to `tol`.
fn polish(w: &Dmc, q: &[f64], tol: f64) -> Option<(Vec<f64>, f64, f64)> {
    let nx = q.len();
    let top = q.iter().cloned().fold(0.0, f64::max);
    let r = output_marginal(q, w);
    let div: Vec<f64> = (0..nx).map(|x| divergence_to(w.row(x), &r)).collect();
    let mut order: Vec<usize> = (0..nx).collect();
    order.sort_by(|&a, &b| div[a].total_cmp(&div[b]));
    let mut supports: Vec<Vec<bool>> = [1e-3, 1e-6]
        .iter()
        .map(|t| q.iter().map(|&v| v > t * top).collect())
        .collect();
    for k in 1..nx {
        let mut active = vec![true; nx];
        for &x in &order[..k] {
            active[x] = false;
        }
        supports.push(active);
    }
    supports.dedup();
    for active in supports {
        let mut qs: Vec<f64> = q.iter().zip(&active).map(|(&v, &a)| if a { v.max(1e-12) } else { 0.0 }).collect();
        let z: f64 = qs.iter().sum();
        qs.iter_mut().for_each(|v| *v /= z);
        for _ in 0..NEWTON_STEPS {
            let (lower, upper) = certified_bounds(w, &qs);
            let gap = (upper - lower).max(0.0);
            if gap <= tol {
                return Some((qs, lower, gap));
            }
            if !newton_step(w, &mut qs, &active) {
                break;
            }
        }
    }
    None
}

const NEWTON_STEPS: usize = 60;

/// `(I(q; W), max_x D(W_x || qW))`.
fn certified_bounds(w: &Dmc, q: &[f64]) -> (f64, f64) {
    let r = output_marginal(q, w);
    let mut lower = 0.0;
    let mut upper = f64::NEG_INFINITY;
    for (x, &qx) in q.iter().enumerate() {
        let dx = divergence_to(w.row(x), &r);
        if qx > 0.0 {
            lower += qx * dx;
        }
        upper = upper.max(dx);
    }
    (lower, upper)
}

/// One damped Newton step for the mutual information over the simplex
/// face spanned by `active`. Returns false when no ascent step exists.
fn newton_step(w: &Dmc, q: &mut [f64], active: &[bool]) -> bool {
    let idx: Vec<usize> = (0..q.len()).filter(|&x| active[x]).collect();
    let m = idx.len();
    if m < 2 {
        return false;
    }
    let r = output_marginal(q, w);
    // gradient D_x - log e and Hessian -log e * sum_y W(y|x)W(y|x')/r(y)
    let log_e = std::f64::consts::LOG2_E;
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (i, &x) in idx.iter().enumerate() {
        rhs[i] = -(divergence_to(w.row(x), &r) - log_e);
        for (j, &x2) in idx.iter().enumerate().skip(i) {
            let h: f64 = w
                .row(x)
                .iter()
                .zip(w.row(x2))
                .zip(&r)
                .filter(|(_, &ry)| ry > 0.0)
                .map(|((a, b), ry)| a * b / ry)
                .sum();
            kkt[(i, j)] = -log_e * h;
            kkt[(j, i)] = -log_e * h;
        }
        kkt[(i, m)] = 1.0;
        kkt[(m, i)] = 1.0;
    }
    let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-14) else {
        return false;
    };
    let step: Vec<f64> = (0..m).map(|i| sol[i]).collect();
    // stay strictly inside the face
    let mut t: f64 = 1.0;
    for (i, &x) in idx.iter().enumerate() {
        if step[i] < 0.0 {
            t = t.min(0.9 * q[x] / -step[i]);
        }
    }
    let before = certified_bounds(w, q).0;
    let old = q.to_vec();
    for _ in 0..30 {
        for (i, &x) in idx.iter().enumerate() {
            q[x] = (old[x] + t * step[i]).max(0.0);
        }
        if certified_bounds(w, q).0 >= before {
            return true;
        }
        t *= 0.5;
    }
    q.copy_from_slice(&old);
    false
}

/// Capacity only.
pub fn capacity(w: &Dmc, tol: f64) -> Result<f64> {
    blahut_arimoto(w, tol).map(|r| r.capacity)
}

fn check_same_shape(ws: &[Dmc]) -> Result<()> {
    let first = ws.first().ok_or(Error::EmptyList)?;
    for w in &ws[1..] {
        first.same_shape(w)?;
    }
    Ok(())
}

/// Entrywise mixture `Σ p_i W_i`.
pub fn mix_channels(ws: &[Dmc], p: &Dist) -> Result<Dmc> {
    check_same_shape(ws)?;
    if ws.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} channels with {} weights",
            ws.len(),
            p.len()
        )));
    }
    let first = &ws[0];
    let mut w = vec![0.0; first.w.len()];
    for (ch, &pi) in ws.iter().zip(p.probs()) {
        for (acc, v) in w.iter_mut().zip(&ch.w) {
            *acc += pi * v;
        }
    }
    Ok(Dmc::from_flat_normalized(first.inputs, first.outputs, w))
}

/// Unweighted entrywise mean of the kernels.
pub fn averaged_channel(kernels: &[Dmc]) -> Result<Dmc> {
    let n = kernels.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    mix_channels(kernels, &Dist::uniform(n))
}

/// Mixture capacity together with its two-sided bounds
/// `Σ p_i C(W_i) - H(p) <= C(Σ p_i W_i) <= Σ p_i C(W_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingBounds {
    pub lower: f64,
    pub mixed_capacity: f64,
    pub upper: f64,
}

pub fn mixing_bounds(ws: &[Dmc], p: &Dist, tol: f64) -> Result<MixingBounds> {
    let mixed = mix_channels(ws, p)?;
    let mut upper = 0.0;
    for (w, &pi) in ws.iter().zip(p.probs()) {
        if pi > 0.0 {
            upper += pi * capacity(w, tol)?;
        }
    }
    Ok(MixingBounds {
        lower: upper - entropy(p),
        mixed_capacity: capacity(&mixed, tol)?,
        upper,
    })
}

/// Result of [`pessimistic_capacity`]: the minimizing state sequence and its
/// averaged-channel capacity (bits per super-symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct PessimisticCapacity {
    pub capacity: f64,
    pub states: Vec<usize>,
}

/// Minimum, over every state sequence in `S^n` (consistent or not), of the
/// capacity of the averaged channel of the per-super-symbol kernels with the
/// state forced at each super-symbol boundary.
pub fn pessimistic_capacity(
    model: &dyn ChannelModel,
    q: usize,
    n: usize,
    tol: f64,
) -> Result<PessimisticCapacity> {
    if !model.capabilities().state_enumerable {
        return Err(Error::NotEnumerable(format!(
            "{} has no finite state representation",
            model.name()
        )));
    }
    if q == 0 || n == 0 {
        return Err(Error::InvalidArgs("q and n must be positive".into()));
    }
    let states = model.state_count();
    let candidates = checked_pow(states, n, enum_cap(), "state sequences")? as usize;
    // kernels[i][s]: block kernel of super-symbol i with state s forced
    let mut kernels = Vec::with_capacity(n);
    for i in 0..n {
        let per_state = (0..states)
            .map(|s| exact::block_kernel(model, i * q, &exact::point_belief(states, s), q, 0))
            .collect::<Result<Vec<_>>>()?;
        kernels.push(per_state);
    }
    let best = (0..candidates)
        .into_par_iter()
        .map(|c| {
            let seq = digits(c, states, n);
            let chosen: Vec<Dmc> = seq
                .iter()
                .enumerate()
                .map(|(i, &s)| kernels[i][s].clone())
                .collect();
            let cap = capacity(&averaged_channel(&chosen)?, tol)?;
            Ok((cap, c))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(None::<(f64, usize)>, |acc, (cap, c)| match acc {
            Some((best, _)) if best <= cap => acc,
            _ => Some((cap, c)),
        })
        .expect("at least one candidate");
    Ok(PessimisticCapacity {
        capacity: best.0,
        states: digits(best.1, states, n),
    })
}

/// Base-`base` digits of `c`, most significant first, length `n`.
fn digits(mut c: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = c % base;
        c /= base;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{DmcChannel, FsmChannel};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(close(binary_entropy(0.11).unwrap(), 0.499916, 1e-6));
        assert_eq!(hb_mono(0.9), 1.0);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn hb_mono_is_nondecreasing_and_concave() {
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 100.0).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (hb_mono(w[0]), hb_mono(w[1]), hb_mono(w[2]));
            assert!(b >= a - 1e-15);
            assert!(b >= 0.5 * (a + c) - 1e-12);
        }
    }

    #[test]
    fn nearly_useless_channel_converges() {
        // the middle row sits between the others and plain iteration crawls
        let w = Dmc::from_flat(
            3,
            2,
            vec![0.4619029754622665, 0.5380970245377336, 0.4655015483104517, 0.5344984516895483, 0.4626960450588236, 0.5373039549411763],
        )
        .unwrap();
        let r = blahut_arimoto(&w, 1e-12).unwrap();
        assert!(r.gap_bound <= 1e-12);
        assert!(r.capacity > 0.0 && r.capacity < 1e-4);
    }

    #[test]
    fn mutual_information_examples() {
        let u = Dist::uniform(2);
        assert!(close(mutual_information(&u, &Dmc::identity(2)).unwrap(), 1.0, 1e-15));
        let same = Dmc::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let q = Dist::new(vec![0.2, 0.8]).unwrap();
        assert_eq!(mutual_information(&q, &same).unwrap(), 0.0);
        let bsc = Dmc::bsc(0.11).unwrap();
        assert!(close(mutual_information(&u, &bsc).unwrap(), 0.500084, 1e-6));
        assert!(mutual_information(&Dist::uniform(3), &bsc).is_err());
    }

    #[test]
    fn blahut_arimoto_examples() {
        for n in [2, 3, 5] {
            let r = blahut_arimoto(&Dmc::identity(n), DEFAULT_TOL).unwrap();
            assert!(close(r.capacity, (n as f64).log2(), 1e-9));
            assert!(r.prior.probs().iter().all(|&p| close(p, 1.0 / n as f64, 1e-9)));
        }
        let r = blahut_arimoto(&Dmc::bsc(0.11).unwrap(), DEFAULT_TOL).unwrap();
        assert!(close(r.capacity, 1.0 - binary_entropy(0.11).unwrap(), 1e-9));
        let r = blahut_arimoto(&Dmc::bec(0.3).unwrap(), DEFAULT_TOL).unwrap();
        assert!(close(r.capacity, 0.7, 1e-9));
        assert!(r.gap_bound <= DEFAULT_TOL);
        assert!(blahut_arimoto(&Dmc::identity(2), 0.0).is_err());
    }

    #[test]
    fn blahut_arimoto_lower_bound_is_monotone() {
        let w = Dmc::new(vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.25, 0.25, 0.5],
            vec![0.5, 0.0, 0.5],
        ])
        .unwrap();
        let mut lowers = Vec::new();
        let r = blahut_arimoto_traced(&w, 1e-10, |lo, _| lowers.push(lo)).unwrap();
        assert!(lowers.windows(2).all(|p| p[1] >= p[0] - 1e-13));
        assert!(r.gap_bound <= 1e-10);
    }

    #[test]
    fn capacity_permutation_invariance() {
        let w = Dmc::new(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.2, 0.6],
            vec![0.3, 0.5, 0.2],
        ])
        .unwrap();
        let base = blahut_arimoto(&w, 1e-11).unwrap();
        let out = blahut_arimoto(&w.permute_outputs(&[2, 0, 1]).unwrap(), 1e-11).unwrap();
        assert!(close(base.capacity, out.capacity, 1e-9));
        let perm = [1, 2, 0];
        let inp = blahut_arimoto(&w.permute_inputs(&perm).unwrap(), 1e-11).unwrap();
        assert!(close(base.capacity, inp.capacity, 1e-9));
        for (x, &to) in perm.iter().enumerate() {
            assert!(close(base.prior.probs()[x], inp.prior.probs()[to], 1e-4));
        }
    }

    #[test]
    fn mix_and_average_examples() {
        let b0 = Dmc::bsc(0.0).unwrap();
        let b1 = Dmc::bsc(1.0).unwrap();
        let half = Dist::uniform(2);
        let mixed = mix_channels(&[b0.clone(), b1.clone()], &half).unwrap();
        assert!(mixed.as_flat().iter().all(|&v| v == 0.5));
        let w = Dmc::bsc(0.2).unwrap();
        assert_eq!(mix_channels(&[w.clone(), w.clone()], &half).unwrap(), w);
        assert_eq!(mix_channels(std::slice::from_ref(&w), &Dist::point(1, 0)).unwrap(), w);
        assert_eq!(averaged_channel(&[b0.clone(), b1.clone()]).unwrap(), mixed);
        assert_eq!(averaged_channel(&[w.clone(), w.clone(), w.clone()]).unwrap(), w);
        assert!(matches!(averaged_channel(&[]), Err(Error::EmptyList)));
        assert!(mix_channels(&[w.clone(), Dmc::bec(0.1).unwrap()], &half).is_err());
    }

    #[test]
    fn mixing_bounds_examples() {
        let b0 = Dmc::bsc(0.0).unwrap();
        let b1 = Dmc::bsc(1.0).unwrap();
        let mb = mixing_bounds(&[b0, b1], &Dist::uniform(2), 1e-10).unwrap();
        assert!(close(mb.lower, 0.0, 1e-9));
        assert!(close(mb.mixed_capacity, 0.0, 1e-9));
        assert!(close(mb.upper, 1.0, 1e-9));

        let w = Dmc::bsc(0.1).unwrap();
        let c = capacity(&w, 1e-10).unwrap();
        let p = Dist::new(vec![0.3, 0.7]).unwrap();
        let mb = mixing_bounds(&[w.clone(), w.clone()], &p, 1e-10).unwrap();
        assert!(close(mb.upper, c, 1e-9) && close(mb.mixed_capacity, c, 1e-9));
        assert!(close(mb.lower, c - entropy(&p), 1e-9));
        let single = mixing_bounds(&[w], &Dist::point(1, 0), 1e-10).unwrap();
        assert!(close(single.lower, single.upper, 1e-12));
        assert!(close(single.mixed_capacity, single.upper, 1e-9));
    }

    #[test]
    fn pessimistic_capacity_examples() {
        let w = Dmc::bsc(0.1).unwrap();
        let c = capacity(&w, 1e-10).unwrap();
        let ch = DmcChannel::new(w.clone());
        for n in 1..=3 {
            let pc = pessimistic_capacity(&ch, 1, n, 1e-10).unwrap();
            assert!(close(pc.capacity, c, 1e-9));
        }

        // identical per-state kernels: value independent of the states
        let same = FsmChannel::homogeneous(
            vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]; 2],
            vec![w.clone(), w.clone()],
            0,
        )
        .unwrap();
        let pc = pessimistic_capacity(&same, 1, 2, 1e-10).unwrap();
        assert!(close(pc.capacity, c, 1e-9));

        // state 1 erases the input
        let bad = Dmc::uniform_rows(2, 2);
        let fsm = FsmChannel::homogeneous(
            vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]; 2],
            vec![Dmc::identity(2), bad.clone()],
            0,
        )
        .unwrap();
        let pc = pessimistic_capacity(&fsm, 1, 2, 1e-10).unwrap();
        assert_eq!(pc.states, vec![1, 1]);
        assert!(close(pc.capacity, capacity(&bad, 1e-10).unwrap(), 1e-9));
    }
}

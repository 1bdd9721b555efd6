//! Exact small-instance computations by forward recursion over the channel
//! state: block conditionals, block kernels and fading-memory gaps.

use super::ChannelModel;
use crate::capacity::Dmc;
use crate::error::{Error, Result};
use crate::types::{checked_pow, enum_cap, l1, Alphabet, Dist, Transcript, TupleCodec};

fn require_enumerable(model: &dyn ChannelModel) -> Result<()> {
    if model.capabilities().exactly_enumerable {
        Ok(())
    } else {
        Err(Error::NotEnumerable(model.name()))
    }
}

/// Point mass on state `s`.
pub fn point_belief(states: usize, s: usize) -> Vec<f64> {
    let mut b = vec![0.0; states];
    b[s] = 1.0;
    b
}

/// Conditions `belief` (over the state at time `t0`) on the observed
/// `(x, y)` pairs. Returns the posterior state belief after the last pair
/// and the probability of `y` given `x`; the belief is all zeros when that
/// probability is zero.
pub fn filter(model: &dyn ChannelModel, t0: usize, belief: &[f64], x: &[usize], y: &[usize]) -> (Vec<f64>, f64) {
    let states = model.state_count();
    let mut b = belief.to_vec();
    let mut next = vec![0.0; states];
    let mut kernel = vec![0.0; model.output_size() * states];
    let mut prob = 1.0;
    for (j, (&xj, &yj)) in x.iter().zip(y).enumerate() {
        next.fill(0.0);
        for (s, &bs) in b.iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            model.step_kernel(t0 + j, s, xj, &mut kernel);
            for (s2, v) in next.iter_mut().enumerate() {
                *v += bs * kernel[yj * states + s2];
            }
        }
        let z: f64 = next.iter().sum();
        if z <= 0.0 {
            return (vec![0.0; states], 0.0);
        }
        prob *= z;
        for (dst, v) in b.iter_mut().zip(&next) {
            *dst = v / z;
        }
    }
    (b, prob)
}

/// Belief over the state driving the symbol after `history`, for a channel
/// started in its initial state.
pub fn history_belief(model: &dyn ChannelModel, history: &Transcript) -> Result<Vec<f64>> {
    history.validate(Alphabet::new(model.input_size())?, Alphabet::new(model.output_size())?)?;
    let init = point_belief(model.state_count(), model.initial_state());
    let (b, p) = filter(model, 0, &init, &history.x, &history.y);
    if p <= 0.0 {
        return Err(Error::InvalidSequence("history has zero probability".into()));
    }
    Ok(b)
}

/// Joint law of the outputs and the end state for inputs `xs` sent from
/// time `t` with state belief `belief`. The first `skip` outputs are
/// marginalized out; the result is indexed `[y_tuple * S + s_end]` with the
/// kept outputs most-significant first.
pub fn block_joint(model: &dyn ChannelModel, t: usize, belief: &[f64], xs: &[usize], skip: usize) -> Result<Vec<f64>> {
    require_enumerable(model)?;
    let states = model.state_count();
    let ny = model.output_size();
    if belief.len() != states {
        return Err(Error::DimensionMismatch(format!(
            "belief over {} states for a {}-state channel",
            belief.len(),
            states
        )));
    }
    if skip > xs.len() {
        return Err(Error::InvalidArgs("more skipped outputs than inputs".into()));
    }
    checked_pow(ny, xs.len() - skip, enum_cap(), "output tuples")?;
    for &x in xs {
        if x >= model.input_size() {
            return Err(Error::SymbolOutOfRange {
                symbol: x,
                size: model.input_size(),
            });
        }
    }
    let mut cur = belief.to_vec();
    let mut kernel = vec![0.0; ny * states];
    for (j, &x) in xs.iter().enumerate() {
        let keep = j >= skip;
        let prefixes = cur.len() / states;
        let mut next = vec![0.0; if keep { cur.len() * ny } else { cur.len() }];
        for p in 0..prefixes {
            for s in 0..states {
                let mass = cur[p * states + s];
                if mass == 0.0 {
                    continue;
                }
                model.step_kernel(t + j, s, x, &mut kernel);
                for y in 0..ny {
                    let base = if keep { (p * ny + y) * states } else { p * states };
                    for s2 in 0..states {
                        next[base + s2] += mass * kernel[y * states + s2];
                    }
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Sums the end state out of a [`block_joint`] result.
pub fn marginal_outputs(joint: &[f64], states: usize) -> Vec<f64> {
    joint.chunks(states).map(|c| c.iter().sum()).collect()
}

/// Law of the next `xblock.len()` outputs given the realized `history` and
/// the block inputs.
pub fn block_conditional(model: &dyn ChannelModel, history: &Transcript, xblock: &[usize]) -> Result<Dist> {
    require_enumerable(model)?;
    let b = history_belief(model, history)?;
    let joint = block_joint(model, history.len(), &b, xblock, 0)?;
    Dist::from_weights(&marginal_outputs(&joint, model.state_count()))
}

/// The kernel from input `q`-tuples to the last `q - skip` outputs of a
/// block starting at time `t` with state belief `belief`.
pub fn block_kernel(model: &dyn ChannelModel, t: usize, belief: &[f64], q: usize, skip: usize) -> Result<Dmc> {
    require_enumerable(model)?;
    let cap = enum_cap();
    let inputs = TupleCodec::with_cap(q, Alphabet::new(model.input_size())?, cap)?;
    let nout = checked_pow(model.output_size(), q - skip.min(q), cap, "output tuples")? as usize;
    if (inputs.count() as u64) * (nout as u64) > cap {
        return Err(Error::Overflow {
            what: "block kernel".into(),
            cap,
        });
    }
    let mut w = Vec::with_capacity(inputs.count() * nout);
    let mut xs = vec![0; q];
    for xi in 0..inputs.count() {
        inputs.tuple_into(xi, &mut xs)?;
        let joint = block_joint(model, t, belief, &xs, skip)?;
        w.extend(marginal_outputs(&joint, model.state_count()));
    }
    Ok(Dmc::from_flat_normalized(inputs.count(), nout, w))
}

/// `2 (1 - S beta)^(L+1)`, the fading-memory bound of a `beta`-floor
/// finite-state channel with `S` states.
pub fn prop3_bound(state_count: usize, beta: f64, l: usize) -> Result<f64> {
    let lambda = state_count as f64 * beta;
    if state_count == 0 || !(beta >= 0.0) || lambda > 1.0 + 1e-12 {
        return Err(Error::InvalidBeta {
            beta,
            states: state_count,
        });
    }
    Ok(2.0 * (1.0 - lambda.min(1.0)).powi(l as i32 + 1))
}

/// Largest L1 distance between `Pr(Y_n^m | X_1^m, (XY)_1^h)` for any
/// positive-probability history of length `h = n - L - 1` and the same law
/// with `ref_history` in place of the history, over all inputs
/// `x_{h+1}..x_m`. Times are 1-based.
pub fn fading_memory_gap(
    model: &dyn ChannelModel,
    n: usize,
    m: usize,
    l: usize,
    ref_history: &Transcript,
) -> Result<f64> {
    require_enumerable(model)?;
    if n == 0 || m < n || l + 1 > n {
        return Err(Error::InvalidArgs(format!("need 1 <= L+1 <= n <= m, got n={n}, m={m}, L={l}")));
    }
    let h = n - l - 1;
    if ref_history.len() != h {
        return Err(Error::InvalidArgs(format!(
            "reference history has length {}, expected {}",
            ref_history.len(),
            h
        )));
    }
    if h == 0 {
        // the only history is the empty one, which is the reference itself
        return Ok(0.0);
    }
    let cap = enum_cap();
    let (nx, ny, states) = (model.input_size(), model.output_size(), model.state_count());
    let hx = TupleCodec::with_cap(h, Alphabet::new(nx)?, cap)?;
    let hy = TupleCodec::with_cap(h, Alphabet::new(ny)?, cap)?;
    checked_pow(hx.count() * hy.count(), 1, cap, "histories")?;
    let fx = TupleCodec::with_cap(m - h, Alphabet::new(nx)?, cap)?;
    checked_pow(ny, m - n + 1, cap, "output tuples")?;

    let future_law = |belief: &[f64], xs: &[usize]| -> Result<Vec<f64>> {
        Ok(marginal_outputs(&block_joint(model, h, belief, xs, l)?, states))
    };
    let ref_belief = history_belief(model, ref_history)?;
    let mut xs = vec![0; m - h];
    let mut reference = Vec::with_capacity(fx.count());
    for xi in 0..fx.count() {
        fx.tuple_into(xi, &mut xs)?;
        reference.push(future_law(&ref_belief, &xs)?);
    }

    let init = point_belief(states, model.initial_state());
    let (mut hist_x, mut hist_y) = (vec![0; h], vec![0; h]);
    let mut gap: f64 = 0.0;
    for a in 0..hx.count() {
        hx.tuple_into(a, &mut hist_x)?;
        for b in 0..hy.count() {
            hy.tuple_into(b, &mut hist_y)?;
            let (belief, p) = filter(model, 0, &init, &hist_x, &hist_y);
            if p <= 0.0 {
                continue;
            }
            for (xi, r) in reference.iter().enumerate() {
                fx.tuple_into(xi, &mut xs)?;
                gap = gap.max(l1(&future_law(&belief, &xs)?, r));
            }
        }
    }
    Ok(gap.min(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{DmcChannel, FsmChannel, ModuloAdditiveChannel, Noise, PasswordChannel};
    use crate::types::RandomSource;

    fn close_vec(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn block_conditional_examples() {
        let w = Dmc::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]).unwrap();
        let ch = DmcChannel::new(w.clone());
        let w2 = w.kron(&w).unwrap();
        for x1 in 0..2 {
            for x2 in 0..2 {
                let d = block_conditional(&ch, &Transcript::empty(), &[x1, x2]).unwrap();
                assert!(close_vec(d.probs(), w2.row(x1 * 2 + x2), 1e-15));
            }
        }

        let ma = ModuloAdditiveChannel::new(2, Noise::List(vec![0, 1])).unwrap();
        let d = block_conditional(&ma, &Transcript::empty(), &[0, 0]).unwrap();
        // tuple (0, 1) has index 1
        assert_eq!(d.probs(), &[0.0, 1.0, 0.0, 0.0]);

        let same = FsmChannel::homogeneous(
            vec![vec![vec![0.9, 0.1], vec![0.4, 0.6]], vec![vec![0.2, 0.8], vec![0.5, 0.5]]],
            vec![w.clone(), w.clone()],
            0,
        )
        .unwrap();
        let base = block_conditional(&same, &Transcript::empty(), &[1, 0]).unwrap();
        for hist in [vec![(0, 0)], vec![(1, 1), (0, 1)], vec![(1, 0), (1, 0), (1, 1)]] {
            let t = Transcript::new(hist.iter().map(|p| p.0).collect(), hist.iter().map(|p| p.1).collect()).unwrap();
            let d = block_conditional(&same, &t, &[1, 0]).unwrap();
            assert!(close_vec(d.probs(), base.probs(), 1e-14));
        }
    }

    #[test]
    fn zero_probability_history_is_rejected() {
        let ch = DmcChannel::new(Dmc::identity(2));
        let t = Transcript::new(vec![0], vec![1]).unwrap();
        assert!(matches!(block_conditional(&ch, &t, &[0]), Err(Error::InvalidSequence(_))));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let ch = DmcChannel::new(Dmc::identity(2));
        let xs = vec![0; 17];
        assert!(matches!(
            block_joint(&ch, 0, &[1.0], &xs, 0),
            Err(Error::Overflow { .. })
        ));
        assert!(block_joint(&ch, 0, &[1.0], &xs, 1).is_ok());
    }

    #[test]
    fn causality_future_inputs_do_not_matter() {
        let mut rng = RandomSource::new(11, 0);
        let fsm = FsmChannel::random_beta_floor(2, 2, 2, 0.1, 2, &mut rng).unwrap();
        let models: Vec<Box<dyn ChannelModel>> = vec![Box::new(fsm), Box::new(PasswordChannel::new(1).unwrap())];
        for model in &models {
            for k in 1..=3usize {
                for j in 1..k {
                    // marginal of the first j outputs is the same whatever x_{j+1..k}
                    let mut marginals: Vec<Vec<f64>> = Vec::new();
                    for tail in 0..(1usize << (k - j)) {
                        let mut xs = vec![1; j];
                        xs.extend((0..k - j).map(|b| (tail >> b) & 1));
                        let d = block_conditional(model.as_ref(), &Transcript::empty(), &xs).unwrap();
                        let per = 1usize << (k - j);
                        marginals.push(d.probs().chunks(per).map(|c| c.iter().sum()).collect());
                    }
                    for mg in &marginals[1..] {
                        assert!(close_vec(mg, &marginals[0], 1e-14));
                    }
                }
            }
        }
    }

    #[test]
    fn prop3_bound_examples() {
        assert_eq!(prop3_bound(2, 0.25, 3).unwrap(), 0.125);
        for l in 0..5 {
            assert_eq!(prop3_bound(2, 0.5, l).unwrap(), 0.0);
            assert_eq!(prop3_bound(3, 0.0, l).unwrap(), 2.0);
        }
        assert!(matches!(prop3_bound(2, 0.6, 1), Err(Error::InvalidBeta { .. })));
        assert!(prop3_bound(2, -0.1, 1).is_err());
    }

    #[test]
    fn fading_gap_examples() {
        let dmc = DmcChannel::new(Dmc::bsc(0.2).unwrap());
        let r = Transcript::new(vec![0, 1], vec![0, 0]).unwrap();
        assert!(fading_memory_gap(&dmc, 4, 5, 1, &r).unwrap() < 1e-15);

        let pw = PasswordChannel::new(1).unwrap();
        for (n, l) in [(3, 1), (4, 2), (4, 1)] {
            let h = n - l - 1;
            let r = Transcript::new(vec![1; h], vec![1; h]).unwrap();
            assert_eq!(fading_memory_gap(&pw, n, 4, l, &r).unwrap(), 2.0);
        }

        let mut rng = RandomSource::new(5, 0);
        let fsm = FsmChannel::random_beta_floor(2, 2, 2, 0.25, 1, &mut rng).unwrap();
        let r = Transcript::new(vec![0, 0], vec![0, 0]).unwrap();
        let g = fading_memory_gap(&fsm, 4, 4, 1, &r);
        // reference history may be impossible only if a kernel has zeros
        let g = g.unwrap();
        assert!(g <= prop3_bound(2, 0.25, 1).unwrap() + 1e-12, "{g}");
    }

    #[test]
    fn fading_gap_argument_checks() {
        let dmc = DmcChannel::new(Dmc::bsc(0.2).unwrap());
        assert!(fading_memory_gap(&dmc, 2, 1, 0, &Transcript::empty()).is_err());
        assert!(fading_memory_gap(&dmc, 2, 2, 2, &Transcript::empty()).is_err());
        assert!(fading_memory_gap(&dmc, 3, 3, 0, &Transcript::empty()).is_err());
    }
}

//! Log-domain BCJR (forward-backward) engines: the tail-biting recursive
//! convolutional component and the time-variant Markov source trellis.
//!
//! All LLRs follow the convention positive = bit 0. Unnormalized symbol
//! weights are P(0) = 1, P(1) = e^-l, so a branch's metric is minus the sum
//! of the LLRs of its active bits. Tail-biting is handled either by the
//! usual wraparound warm-up lap (production) or by the exact circular sum
//! over start states (oracle / small blocks).

use crate::context::MarkovState;
use crate::turbo::RccSpec;

pub const NEG_INF: f64 = -1e12;

/// Length of each tail-biting warm-up lap (capped at the block length).
const WARMUP_STEPS: usize = 192;

/// Jacobian logarithm: ln(e^a + e^b).
#[inline]
pub fn max_star(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo <= NEG_INF / 2.0 {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// How the tail-biting boundary is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapMode {
    /// One warm-up lap each way to estimate the boundary state distribution.
    TwoLap,
    /// Exact circular posterior: sum over all start = end state constraints.
    Exact,
}

/// Linear-trellis forward-backward pass. Returns per-position unnormalized
/// log-numerators (num0, num1); lambda = num0 - num1. `normalize` rescales
/// alpha/beta per step (breaks cross-run comparability, fine standalone).
fn run_bcjr<F: Fn(usize, usize, u8) -> f64>(
    next: &[[usize; 2]],
    gamma: F,
    k: usize,
    alpha0: &[f64],
    beta_k: &[f64],
    normalize: bool,
) -> (Vec<f64>, Vec<f64>) {
    let s = next.len();
    let mut alpha = vec![NEG_INF; s * (k + 1)];
    alpha[..s].copy_from_slice(alpha0);
    for pos in 0..k {
        let (prev, cur) = alpha.split_at_mut((pos + 1) * s);
        let prev = &prev[pos * s..];
        let cur = &mut cur[..s];
        for st in 0..s {
            if prev[st] <= NEG_INF / 2.0 {
                continue;
            }
            for u in 0..2u8 {
                let nst = next[st][u as usize];
                let m = prev[st] + gamma(pos, st, u);
                cur[nst] = max_star(cur[nst], m);
            }
        }
        if normalize {
            let mx = cur.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if mx.is_finite() {
                cur.iter_mut().for_each(|v| *v -= mx);
            }
        }
    }
    let mut beta = vec![NEG_INF; s * (k + 1)];
    beta[k * s..].copy_from_slice(beta_k);
    for pos in (0..k).rev() {
        for st in 0..s {
            let mut acc = NEG_INF;
            for u in 0..2u8 {
                let nst = next[st][u as usize];
                let b = beta[(pos + 1) * s + nst];
                if b <= NEG_INF / 2.0 {
                    continue;
                }
                acc = max_star(acc, b + gamma(pos, st, u));
            }
            beta[pos * s + st] = acc;
        }
        if normalize {
            let row = &mut beta[pos * s..(pos + 1) * s];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if mx.is_finite() {
                row.iter_mut().for_each(|v| *v -= mx);
            }
        }
    }
    let mut num0 = vec![NEG_INF; k];
    let mut num1 = vec![NEG_INF; k];
    for pos in 0..k {
        for st in 0..s {
            let a = alpha[pos * s + st];
            if a <= NEG_INF / 2.0 {
                continue;
            }
            for u in 0..2u8 {
                let nst = next[st][u as usize];
                let b = beta[(pos + 1) * s + nst];
                if b <= NEG_INF / 2.0 {
                    continue;
                }
                let m = a + gamma(pos, st, u) + b;
                if u == 0 {
                    num0[pos] = max_star(num0[pos], m);
                } else {
                    num1[pos] = max_star(num1[pos], m);
                }
            }
        }
    }
    (num0, num1)
}

fn rcc_tables(spec: &RccSpec) -> (Vec<[usize; 2]>, Vec<[u8; 2]>) {
    let s = spec.num_states();
    let mut next = vec![[0usize; 2]; s];
    let mut out = vec![[0u8; 2]; s];
    for st in 0..s {
        for u in 0..2u8 {
            let (n, x) = spec.step(st as u32, u);
            next[st][u as usize] = n as usize;
            out[st][u as usize] = x;
        }
    }
    (next, out)
}

/// Extrinsic LLRs on the information bits of one tail-biting RCC component.
///
/// `l_u` is the total incoming LLR per information bit (channel systematic
/// observation plus the other engines' extrinsics); `l_p` the channel LLR per
/// parity position, 0 where punctured. The returned extrinsic excludes `l_u`.
pub fn rcc_extrinsic(spec: &RccSpec, l_u: &[f64], l_p: &[f64], mode: WrapMode) -> Vec<f64> {
    let k = l_u.len();
    debug_assert_eq!(l_p.len(), k);
    let (next, out) = rcc_tables(spec);
    let s = next.len();
    let gamma = |pos: usize, st: usize, u: u8| -> f64 {
        let mut g = 0.0;
        if u == 1 {
            g -= l_u[pos];
        }
        if out[st][u as usize] == 1 {
            g -= l_p[pos];
        }
        g
    };
    let lambda = match mode {
        WrapMode::TwoLap => {
            // Warm-up laps to estimate the circular boundary distribution.
            // The 2^mu-state chain mixes in far fewer steps than a full lap,
            // so cap the warm-up window: starting uniform a couple hundred
            // positions before the boundary gives the same distribution.
            let warm = k.min(WARMUP_STEPS);
            let uniform = vec![0.0f64; s];
            let mut alpha = uniform.clone();
            for pos in (k - warm)..k {
                let mut nxt = vec![NEG_INF; s];
                for st in 0..s {
                    if alpha[st] <= NEG_INF / 2.0 {
                        continue;
                    }
                    for u in 0..2u8 {
                        let nst = next[st][u as usize];
                        nxt[nst] = max_star(nxt[nst], alpha[st] + gamma(pos, st, u));
                    }
                }
                let mx = nxt.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                nxt.iter_mut().for_each(|v| *v -= mx);
                alpha = nxt;
            }
            let mut beta = uniform;
            for pos in (0..warm).rev() {
                let mut prv = vec![NEG_INF; s];
                for st in 0..s {
                    for u in 0..2u8 {
                        let nst = next[st][u as usize];
                        if beta[nst] <= NEG_INF / 2.0 {
                            continue;
                        }
                        prv[st] = max_star(prv[st], beta[nst] + gamma(pos, st, u));
                    }
                }
                let mx = prv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prv.iter_mut().for_each(|v| *v -= mx);
                beta = prv;
            }
            let (num0, num1) = run_bcjr(&next, gamma, k, &alpha, &beta, true);
            num0.iter().zip(&num1).map(|(a, b)| a - b).collect::<Vec<_>>()
        }
        WrapMode::Exact => {
            let mut num0 = vec![NEG_INF; k];
            let mut num1 = vec![NEG_INF; k];
            for s0 in 0..s {
                let mut a0 = vec![NEG_INF; s];
                a0[s0] = 0.0;
                let (n0, n1) = run_bcjr(&next, gamma, k, &a0.clone(), &a0, false);
                for pos in 0..k {
                    num0[pos] = max_star(num0[pos], n0[pos]);
                    num1[pos] = max_star(num1[pos], n1[pos]);
                }
            }
            num0.iter().zip(&num1).map(|(a, b)| a - b).collect::<Vec<_>>()
        }
    };
    lambda
        .iter()
        .zip(l_u)
        .map(|(lam, lu)| lam - lu)
        .collect()
}

/// Extrinsic LLRs from the Markov source trellis.
///
/// The trellis starts in state 0 and has a free end. `nu(pos, state)` is the
/// model LLR of the bit at `pos` given the state (positive = bit 0); `l_in`
/// the total incoming LLR per bit from the other engines. The extrinsic
/// excludes `l_in` but includes the model information.
pub fn source_extrinsic<F>(window: usize, nu: F, l_in: &[f64]) -> Vec<f64>
where
    F: Fn(usize, u32) -> f64,
{
    SourceTrellis::new(window, l_in.len(), nu).extrinsic(l_in)
}

/// Markov source trellis with precomputed branch metrics.
///
/// The model part of each branch metric is iteration-invariant, so building
/// the tables once per block and reusing them across belief-propagation
/// iterations avoids recomputing a transcendental per (position, state) pass.
pub struct SourceTrellis {
    next: Vec<[usize; 2]>,
    /// `g[2 * (pos * s + st) + u]` = ln P(u | state st at pos).
    g: Vec<f64>,
    k: usize,
}

impl SourceTrellis {
    /// `nu(pos, state)` is the model LLR of the bit at `pos` given the state
    /// (positive = bit 0). The trellis starts in state 0 with a free end.
    pub fn new<F: Fn(usize, u32) -> f64>(window: usize, k: usize, nu: F) -> Self {
        let s = 1usize << window;
        let next: Vec<[usize; 2]> = (0..s)
            .map(|st| {
                [
                    MarkovState(st as u32).push(0, window).0 as usize,
                    MarkovState(st as u32).push(1, window).0 as usize,
                ]
            })
            .collect();
        // ln P(u | state): unlike channel likelihood ratios, the model
        // conditional must be normalized per state, or paths through
        // strongly-biased states pick up spurious weight
        let mut g = vec![0.0f64; 2 * s * k];
        for pos in 0..k {
            for st in 0..s {
                let nuv = nu(pos, st as u32);
                let ln_p0 = -(-nuv).exp().ln_1p();
                g[2 * (pos * s + st)] = ln_p0;
                g[2 * (pos * s + st) + 1] = ln_p0 - nuv;
            }
        }
        SourceTrellis { next, g, k }
    }

    /// Extrinsic LLRs given the total incoming LLR per bit from the other
    /// engines; excludes `l_in` but includes the model information.
    pub fn extrinsic(&self, l_in: &[f64]) -> Vec<f64> {
        let k = self.k;
        debug_assert_eq!(l_in.len(), k);
        let s = self.next.len();
        let gamma = |pos: usize, st: usize, u: u8| -> f64 {
            let base = self.g[2 * (pos * s + st) + u as usize];
            if u == 1 {
                base - l_in[pos]
            } else {
                base
            }
        };
        let mut alpha0 = vec![NEG_INF; s];
        alpha0[0] = 0.0;
        let beta_k = vec![0.0f64; s];
        let (num0, num1) = run_bcjr(&self.next, gamma, k, &alpha0, &beta_k, true);
        num0.iter()
            .zip(&num1)
            .zip(l_in)
            .map(|((a, b), l)| a - b - l)
            .collect()
    }
}

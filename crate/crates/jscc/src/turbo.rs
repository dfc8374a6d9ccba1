//! Tail-biting recursive convolutional components and the punctured
//! parallel-concatenated (turbo) encoder.
//!
//! A rate-1 component with feedback a(D) and feedforward b(D) realizes the
//! circulant map u -> u * b(D)/a(D) mod (1 + D^K) when started in the
//! circulation state, which exists whenever a(D) is coprime to 1 + D^K.
//! The turbo generator is [R0 | P1 A^-1 B R1 | P2 A^-1 B R2]: optionally
//! punctured systematic bits plus two interleaved tail-biting parity
//! streams, each thinned by an ordered survivor list.

use crate::error::{JsccError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One recursive convolutional component, taps in ascending powers of D
/// (bit i of `a`/`b` is the coefficient of D^i; a0 is always 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RccSpec {
    pub a: u32,
    pub b: u32,
    pub mu: usize,
}

/// Reverse the low `len` bits of v (octal generator convention: the msb-first
/// binary expansion of the octal value lists ascending powers of D).
fn bit_reverse(v: u32, len: u32) -> u32 {
    let mut out = 0u32;
    for i in 0..len {
        out |= ((v >> i) & 1) << (len - 1 - i);
    }
    out
}

impl RccSpec {
    /// From conventional octal generators, e.g. (23, 35)_8 with mu = 4.
    pub fn from_octal(a_octal: u32, b_octal: u32, mu: usize) -> Self {
        let len = mu as u32 + 1;
        let spec = RccSpec {
            a: bit_reverse(a_octal, len),
            b: bit_reverse(b_octal, len),
            mu,
        };
        assert_eq!(spec.a & 1, 1, "feedback must have a0 = 1");
        spec
    }

    pub fn num_states(&self) -> usize {
        1 << self.mu
    }

    /// One shift-register step: returns (next state, parity output).
    /// State bit j holds w_{k-1-j}.
    #[inline]
    pub fn step(&self, state: u32, u: u8) -> (u32, u8) {
        let fb = (u as u32 ^ (state & (self.a >> 1)).count_ones()) & 1;
        let out = ((self.b & 1) * fb + (state & (self.b >> 1)).count_ones()) & 1;
        let next = ((state << 1) | fb) & ((1 << self.mu) - 1);
        (next, out as u8)
    }

    /// Polynomial forms of the taps (for cross-checks against the circulant
    /// algebra oracles).
    pub fn a_poly(&self) -> crate::gf2::Gf2Poly {
        mask_to_poly(self.a)
    }

    pub fn b_poly(&self) -> crate::gf2::Gf2Poly {
        mask_to_poly(self.b)
    }
}

fn mask_to_poly(mask: u32) -> crate::gf2::Gf2Poly {
    let bits: Vec<u8> = (0..32).map(|i| ((mask >> i) & 1) as u8).collect();
    crate::gf2::Gf2Poly::from_coeffs(&bits)
}

/// The component used for image bit-planes: (23, 35)_8.
pub fn jscc_rcc() -> RccSpec {
    RccSpec::from_octal(0o23, 0o35, 4)
}

/// The better-spread component protecting the sideband at rate 1/3:
/// (37, 21)_8.
pub fn sideband_rcc() -> RccSpec {
    RccSpec::from_octal(0o37, 0o21, 4)
}

/// Circulation (tail-biting) start state for an information word: the unique
/// s with end_state(s, u) = s. Errors when 1 + D^K shares a factor with a(D)
/// (the zero-input K-step map has a fixed subspace).
pub fn circulation_state(spec: &RccSpec, u: &[u8]) -> Result<u32> {
    let k = u.len();
    // end state from s = 0 with the data
    let mut e0 = 0u32;
    for &bit in u {
        e0 = spec.step(e0, bit).0;
    }
    // K-step zero-input transition matrix, one basis state per column
    let mut m_cols = [0u32; 32];
    for (j, col) in m_cols.iter_mut().enumerate().take(spec.mu) {
        let mut s = 1u32 << j;
        for _ in 0..k {
            s = spec.step(s, 0).0;
        }
        *col = s;
    }
    // solve (M + I) s = e0 over GF(2)
    let mu = spec.mu;
    let mut rows = vec![0u64; mu]; // bit i: coefficient of s_i; bit 63: rhs
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, col) in m_cols.iter().enumerate().take(mu) {
            let coeff = ((col >> i) & 1) ^ u32::from(i == j);
            *row |= (coeff as u64) << j;
        }
        *row |= (((e0 >> i) & 1) as u64) << 63;
    }
    let mut s = 0u32;
    let mut pivot_row = 0usize;
    let mut pivots = vec![usize::MAX; mu];
    for col in 0..mu {
        if let Some(r) = (pivot_row..mu).find(|&r| (rows[r] >> col) & 1 == 1) {
            rows.swap(pivot_row, r);
            for r2 in 0..mu {
                if r2 != pivot_row && (rows[r2] >> col) & 1 == 1 {
                    rows[r2] ^= rows[pivot_row];
                }
            }
            pivots[col] = pivot_row;
            pivot_row += 1;
        } else {
            return Err(JsccError::SingularLength { k });
        }
    }
    for col in 0..mu {
        if (rows[pivots[col]] >> 63) & 1 == 1 {
            s |= 1 << col;
        }
    }
    Ok(s)
}

/// Tail-biting rate-1 encode: parity stream of length K. The register starts
/// and ends in the circulation state.
pub fn rcc_encode_tailbiting(spec: &RccSpec, u: &[u8]) -> Result<Vec<u8>> {
    let s0 = circulation_state(spec, u)?;
    let mut state = s0;
    let mut out = Vec::with_capacity(u.len());
    for &bit in u {
        let (next, x) = spec.step(state, bit);
        out.push(x);
        state = next;
    }
    debug_assert_eq!(state, s0, "tail-biting wrap failed");
    Ok(out)
}

/// Pseudorandom interleaver (Fisher-Yates) for a given seed.
pub fn make_interleaver(k: usize, seed: u64) -> Vec<u32> {
    let mut pi: Vec<u32> = (0..k as u32).collect();
    pi.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    pi
}

pub fn permute(u: &[u8], pi: &[u32]) -> Vec<u8> {
    pi.iter().map(|&i| u[i as usize]).collect()
}

/// Ordered survivor lists for the three streams (systematic, parity 1,
/// parity 2). Lists are in selection order; prefixes of a longer pattern are
/// valid lower-rate patterns of the same family.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PuncturePattern {
    pub r0: Vec<u32>,
    pub r1: Vec<u32>,
    pub r2: Vec<u32>,
}

impl PuncturePattern {
    pub fn total(&self) -> usize {
        self.r0.len() + self.r1.len() + self.r2.len()
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        for (name, list) in [("R0", &self.r0), ("R1", &self.r1), ("R2", &self.r2)] {
            let mut seen = vec![false; k];
            for &i in list.iter() {
                if i as usize >= k || seen[i as usize] {
                    return Err(JsccError::Malformed(format!(
                        "puncture list {name}: bad or repeated index {i}"
                    )));
                }
                seen[i as usize] = true;
            }
        }
        Ok(())
    }

    /// True if `self` extends `other` on every stream.
    pub fn extends(&self, other: &PuncturePattern) -> bool {
        self.r0.starts_with(&other.r0)
            && self.r1.starts_with(&other.r1)
            && self.r2.starts_with(&other.r2)
    }
}

/// A fully specified turbo code instance for block length K.
#[derive(Debug, Clone, PartialEq)]
pub struct TurboCode {
    pub spec: RccSpec,
    pub k: usize,
    pub pi1: Vec<u32>,
    pub pi2: Vec<u32>,
    pub pattern: PuncturePattern,
}

impl TurboCode {
    pub fn new(spec: RccSpec, k: usize, seed: u64, pattern: PuncturePattern) -> Result<Self> {
        pattern.validate(k)?;
        Ok(TurboCode {
            spec,
            k,
            pi1: make_interleaver(k, seed ^ 0x9E37_79B9_7F4A_7C15),
            pi2: make_interleaver(k, seed ^ 0xC2B2_AE3D_27D4_EB4F),
            pattern,
        })
    }

    pub fn n(&self) -> usize {
        self.pattern.total()
    }

    /// Unpunctured parity streams (also used by the decoder to form LLRs).
    pub fn parities(&self, u: &[u8]) -> Result<(Vec<u8>, Vec<u8>)> {
        let p1 = rcc_encode_tailbiting(&self.spec, &permute(u, &self.pi1))?;
        let p2 = rcc_encode_tailbiting(&self.spec, &permute(u, &self.pi2))?;
        Ok((p1, p2))
    }

    /// Codeword: surviving systematic bits, then surviving parity-1 and
    /// parity-2 bits, each in pattern order.
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        assert_eq!(u.len(), self.k);
        let (p1, p2) = self.parities(u)?;
        let mut x = Vec::with_capacity(self.n());
        x.extend(self.pattern.r0.iter().map(|&i| u[i as usize]));
        x.extend(self.pattern.r1.iter().map(|&i| p1[i as usize]));
        x.extend(self.pattern.r2.iter().map(|&i| p2[i as usize]));
        Ok(x)
    }
}

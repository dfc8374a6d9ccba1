//! Binary symmetric channel, capacity helpers, and LLR formation for the
//! decoder (zero LLR at punctured positions).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Crossover probability in [0, 1/2] with the given binary entropy.
pub fn inverse_binary_entropy(h: f64) -> f64 {
    assert!((0.0..=1.0).contains(&h));
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Memoryless binary symmetric channel with crossover rho.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bsc {
    pub rho: f64,
}

impl Bsc {
    pub fn new(rho: f64) -> Self {
        assert!((0.0..0.5).contains(&rho), "rho must be in [0, 1/2)");
        Bsc { rho }
    }

    /// C = 1 - H2(rho) bits per use.
    pub fn capacity(&self) -> f64 {
        1.0 - binary_entropy(self.rho)
    }

    /// |LLR| of one observation: ln((1 - rho) / rho).
    pub fn llr_magnitude(&self) -> f64 {
        if self.rho == 0.0 {
            f64::INFINITY
        } else {
            ((1.0 - self.rho) / self.rho).ln()
        }
    }

    /// Transmit a codeword; flips are drawn from a stream seeded per trial.
    pub fn transmit(&self, bits: &[u8], seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        bits.iter()
            .map(|&b| b ^ (rng.gen_bool(self.rho) as u8))
            .collect()
    }

    /// LLR of a single received bit: positive when 0 was received.
    #[inline]
    pub fn llr(&self, received: u8) -> f64 {
        if received == 0 {
            self.llr_magnitude()
        } else {
            -self.llr_magnitude()
        }
    }
}

/// Scatter received-bit LLRs onto a full-length stream; positions absent from
/// `kept` (the puncture survivor list) carry LLR = 0.
pub fn scatter_llrs(ch: &Bsc, received: &[u8], kept: &[u32], len: usize) -> Vec<f64> {
    debug_assert_eq!(received.len(), kept.len());
    let mut llrs = vec![0.0f64; len];
    for (&r, &pos) in received.iter().zip(kept) {
        llrs[pos as usize] = ch.llr(r);
    }
    llrs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_values() {
        assert!((Bsc::new(0.05).capacity() - 0.7136).abs() < 5e-4);
        assert!(Bsc::new(0.0).capacity() == 1.0);
        let rho_half_capacity = inverse_binary_entropy(0.5);
        assert!((Bsc::new(rho_half_capacity).capacity() - 0.5).abs() < 1e-9);
        assert!((rho_half_capacity - 0.110).abs() < 1e-3);
    }

    #[test]
    fn inverse_entropy_roundtrip() {
        for h in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9586, 1.0] {
            let p = inverse_binary_entropy(h);
            assert!((binary_entropy(p) - h).abs() < 1e-9, "h = {h}");
            assert!((0.0..=0.5).contains(&p));
        }
    }

    #[test]
    fn llr_matches_likelihood_ratio() {
        let ch = Bsc::new(0.05);
        // P(y=0|x=0)/P(y=0|x=1) = (1-rho)/rho
        let expected = (0.95f64 / 0.05).ln();
        assert!((ch.llr(0) - expected).abs() < 1e-12);
        assert!((ch.llr(1) + expected).abs() < 1e-12);
    }

    #[test]
    fn transmit_is_seed_deterministic_and_flips_at_rate() {
        let ch = Bsc::new(0.1);
        let bits = vec![0u8; 100_000];
        let a = ch.transmit(&bits, 42);
        let b = ch.transmit(&bits, 42);
        assert_eq!(a, b);
        let c = ch.transmit(&bits, 43);
        assert_ne!(a, c);
        let flips: usize = a.iter().map(|&x| x as usize).sum();
        let rate = flips as f64 / 100_000.0;
        assert!((rate - 0.1).abs() < 0.01, "flip rate {rate}");
    }

    #[test]
    fn zero_noise_is_identity() {
        let ch = Bsc::new(0.0);
        let bits: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        assert_eq!(ch.transmit(&bits, 7), bits);
    }

    #[test]
    fn fully_punctured_block_has_zero_llrs() {
        let ch = Bsc::new(0.1);
        let llrs = scatter_llrs(&ch, &[], &[], 16);
        assert!(llrs.iter().all(|&l| l == 0.0));
    }
}

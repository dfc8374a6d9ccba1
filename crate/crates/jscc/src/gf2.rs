//! Polynomial arithmetic over F2 and the circulant-matrix view of
//! tail-biting convolutional encoding.
//!
//! A K x K binary circulant matrix is identified with its first row, i.e.
//! with an element of F2[D]/(1 + D^K). Ring operations on polynomials map to
//! matrix operations on circulants, so inverting the encoder feedback matrix
//! reduces to an extended Euclid run over F2[D].

use crate::error::{JsccError, Result};

/// Dense polynomial over F2, bit i of word i/64 holding the coefficient of D^i.
#[derive(Debug, Clone)]
pub struct Gf2Poly {
    words: Vec<u64>,
}

/// Equality of polynomials, not of buffers: trailing zero words are ignored.
impl PartialEq for Gf2Poly {
    fn eq(&self, other: &Self) -> bool {
        let (short, long) = if self.words.len() <= other.words.len() {
            (&self.words, &other.words)
        } else {
            (&other.words, &self.words)
        };
        short.iter().zip(long.iter()).all(|(a, b)| a == b)
            && long[short.len()..].iter().all(|&w| w == 0)
    }
}

impl Eq for Gf2Poly {}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { words: Vec::new() }
    }

    pub fn one() -> Self {
        Gf2Poly { words: vec![1] }
    }

    /// Monomial D^n.
    pub fn monomial(n: usize) -> Self {
        let mut words = vec![0u64; n / 64 + 1];
        words[n / 64] = 1 << (n % 64);
        Gf2Poly { words }
    }

    /// Build from coefficient bits, index = power of D.
    pub fn from_coeffs(coeffs: &[u8]) -> Self {
        let mut p = Gf2Poly::zero();
        for (i, &c) in coeffs.iter().enumerate() {
            if c & 1 == 1 {
                p.set(i);
            }
        }
        p
    }

    /// Parse octal generator notation: digits msb-first, binary expansion read
    /// as ascending powers of D. `(23)_8` = `10011` = 1 + D^3 + D^4.
    pub fn from_octal(octal: u32) -> Self {
        let mut msb_first = Vec::new();
        let mut v = octal;
        let mut digits = Vec::new();
        while v > 0 {
            digits.push(v & 7);
            v >>= 3;
        }
        for &d in digits.iter().rev() {
            for b in (0..3).rev() {
                msb_first.push(((d >> b) & 1) as u8);
            }
        }
        // strip leading zeros of the msb-first string, then read as ascending powers
        let start = msb_first.iter().position(|&b| b == 1).unwrap_or(0);
        Gf2Poly::from_coeffs(&msb_first[start..])
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn get(&self, i: usize) -> u8 {
        let w = i / 64;
        if w >= self.words.len() {
            0
        } else {
            ((self.words[w] >> (i % 64)) & 1) as u8
        }
    }

    pub fn set(&mut self, i: usize) {
        let w = i / 64;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << (i % 64);
    }

    pub fn degree(&self) -> Option<usize> {
        for (w, &word) in self.words.iter().enumerate().rev() {
            if word != 0 {
                return Some(w * 64 + (63 - word.leading_zeros() as usize));
            }
        }
        None
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn add_assign(&mut self, other: &Gf2Poly) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a ^= b;
        }
    }

    /// self ^= other << shift
    pub fn add_shifted(&mut self, other: &Gf2Poly, shift: usize) {
        let (ws, bs) = (shift / 64, shift % 64);
        let need = other.words.len() + ws + 1;
        if need > self.words.len() {
            self.words.resize(need, 0);
        }
        if bs == 0 {
            for (i, &w) in other.words.iter().enumerate() {
                self.words[i + ws] ^= w;
            }
        } else {
            let mut carry = 0u64;
            for (i, &w) in other.words.iter().enumerate() {
                self.words[i + ws] ^= (w << bs) | carry;
                carry = w >> (64 - bs);
            }
            self.words[other.words.len() + ws] ^= carry;
        }
    }

    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut out = Gf2Poly::zero();
        let deg = match self.degree() {
            Some(d) => d,
            None => return out,
        };
        if other.is_zero() {
            return out;
        }
        for i in 0..=deg {
            if self.get(i) == 1 {
                out.add_shifted(other, i);
            }
        }
        out
    }

    /// Returns (quotient, remainder) of self / divisor.
    pub fn divrem(&self, divisor: &Gf2Poly) -> (Gf2Poly, Gf2Poly) {
        let ddeg = divisor.degree().expect("division by zero polynomial");
        let mut rem = self.clone();
        let mut quot = Gf2Poly::zero();
        while let Some(rdeg) = rem.degree() {
            if rdeg < ddeg {
                break;
            }
            let shift = rdeg - ddeg;
            quot.set(shift);
            rem.add_shifted(divisor, shift);
        }
        (quot, rem)
    }

    /// Reduce modulo 1 + D^k (cyclic fold).
    pub fn reduce_cyclic(&self, k: usize) -> Gf2Poly {
        let mut out = Gf2Poly::zero();
        if let Some(deg) = self.degree() {
            for i in 0..=deg {
                if self.get(i) == 1 {
                    let j = i % k;
                    if out.get(j) == 1 {
                        // clear bit
                        out.words[j / 64] &= !(1 << (j % 64));
                    } else {
                        out.set(j);
                    }
                }
            }
        }
        out
    }

    /// Coefficients 0..k as a bit vector.
    pub fn to_bits(&self, k: usize) -> Vec<u8> {
        (0..k).map(|i| self.get(i)).collect()
    }
}

/// Cyclic product in F2[D]/(1 + D^K).
pub fn cyclic_mul(a: &Gf2Poly, b: &Gf2Poly, k: usize) -> Gf2Poly {
    a.mul(b).reduce_cyclic(k)
}

/// Inverse of `a` in F2[D]/(1 + D^K) via extended Euclid.
///
/// Fails when gcd(a, 1 + D^K) != 1; for a primitive a(D) of degree mu this is
/// exactly the case 2^mu - 1 | K.
pub fn circ_inverse(a: &Gf2Poly, k: usize) -> Result<Gf2Poly> {
    let modulus = {
        let mut m = Gf2Poly::one();
        m.add_assign(&Gf2Poly::monomial(k));
        m
    };
    // Invariants: r0 = t0*a (mod modulus), r1 = t1*a (mod modulus).
    let mut r0 = modulus.clone();
    let mut r1 = a.reduce_cyclic(k);
    let mut t0 = Gf2Poly::zero();
    let mut t1 = Gf2Poly::one();
    while !r1.is_zero() {
        let (q, r) = r0.divrem(&r1);
        let qt = q.mul(&t1);
        let mut tnext = t0.clone();
        tnext.add_assign(&qt);
        r0 = r1;
        r1 = r;
        t0 = t1;
        t1 = tnext;
    }
    if r0 != Gf2Poly::one() {
        return Err(JsccError::SingularLength { k });
    }
    Ok(t0.reduce_cyclic(k))
}

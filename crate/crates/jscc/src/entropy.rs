//! Context-driven binary arithmetic coder.
//!
//! Integer-only bitwise coder with 62-bit interval registers. Both
//! subintervals are rounded *down* (the slack becomes a dead zone the encoder
//! never enters), so each symbol costs at least its ideal codelength under
//! the 16-bit fixed-point probabilities; with the two-bit interval
//! disambiguation at flush the total length l of a plane satisfies
//! ideal <= l <= ideal + 32 bits. The same fixed-point probabilities feed
//! `model::empirical_entropy`, which makes the two accountings comparable
//! bit for bit.

use crate::bitio::{BitReader, BitWriter};
use crate::error::Result;
use crate::model::{ContextModel, PlaneWalker};

const PRECISION: u32 = 62;
const TOP: u64 = 1 << PRECISION;
const HALF: u64 = TOP >> 1;
const QUARTER: u64 = TOP >> 2;

#[inline]
fn split(range: u64, p1: u16) -> (u64, u64) {
    let p0 = 65536 - p1 as u64;
    let i0 = ((range as u128 * p0 as u128) >> 16) as u64;
    let i1 = ((range as u128 * p1 as u128) >> 16) as u64;
    debug_assert!(i0 >= 1 && i1 >= 1 && i0 + i1 <= range);
    (i0, i1)
}

/// Bitwise binary arithmetic encoder.
pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl Default for ArithEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithEncoder {
    pub fn new() -> Self {
        ArithEncoder {
            low: 0,
            high: TOP - 1,
            pending: 0,
            out: BitWriter::new(),
        }
    }

    fn emit(&mut self, bit: u8) {
        self.out.put_bit(bit);
        for _ in 0..self.pending {
            self.out.put_bit(bit ^ 1);
        }
        self.pending = 0;
    }

    /// Encode one bit with P(bit = 1) = p1 / 65536.
    pub fn encode(&mut self, bit: u8, p1: u16) {
        let range = self.high - self.low + 1;
        let (i0, i1) = split(range, p1);
        if bit == 0 {
            self.high = self.low + i0 - 1;
        } else {
            self.low += i0;
            self.high = self.low + i1 - 1;
        }
        loop {
            if self.high < HALF {
                self.emit(0);
            } else if self.low >= HALF {
                self.emit(1);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Flush: two bits select a quarter fully inside the final interval.
    pub fn finish(mut self) -> (Vec<u8>, usize) {
        self.pending += 1;
        if self.low < QUARTER {
            self.emit(0);
        } else {
            self.emit(1);
        }
        let len = self.out.bit_len();
        (self.out.into_bytes(), len)
    }
}

/// Mirror decoder; reads `bit_len` coded bits, then implicit zeros.
pub struct ArithDecoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    reader: BitReader<'a>,
    bit_len: usize,
}

impl<'a> ArithDecoder<'a> {
    pub fn new(bytes: &'a [u8], bit_len: usize) -> Self {
        let mut d = ArithDecoder {
            low: 0,
            high: TOP - 1,
            value: 0,
            reader: BitReader::new(bytes),
            bit_len,
        };
        for _ in 0..PRECISION {
            d.value = (d.value << 1) | d.next_bit();
        }
        d
    }

    fn next_bit(&mut self) -> u64 {
        if self.reader.bit_pos() < self.bit_len {
            self.reader.get_bit().unwrap_or(0) as u64
        } else {
            0
        }
    }

    pub fn decode(&mut self, p1: u16) -> u8 {
        let range = self.high - self.low + 1;
        let (i0, i1) = split(range, p1);
        let bit = if self.value >= self.low + i0 { 1 } else { 0 };
        if bit == 0 {
            self.high = self.low + i0 - 1;
        } else {
            self.low += i0;
            self.high = self.low + i1 - 1;
            debug_assert!(self.value <= self.high, "value in dead zone");
        }
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < HALF + QUARTER {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.next_bit();
        }
        bit
    }
}

/// Arithmetic-code one plane's encoded sequence under the model. Returns the
/// coded bytes and the exact bit length.
pub fn encode_plane(
    plane: usize,
    seq: &[u32],
    plane_bits: &[u8],
    sites: &[crate::dwt::ScanSite],
    bands: &[crate::dwt::BandKind],
    top: &[u8],
    model: &ContextModel,
) -> (Vec<u8>, usize) {
    let mut walker = PlaneWalker::new(plane, seq, sites, bands, top, &model.segments[plane]);
    let mut enc = ArithEncoder::new();
    while !walker.done() {
        let bit = plane_bits[walker.scan_index()];
        enc.encode(bit, crate::model::p1_q16(walker.nu()));
        walker.advance(bit);
    }
    enc.finish()
}

/// Decode one plane's encoded sequence; returns the bits in sequence order
/// (not scattered back onto the scan).
#[allow(clippy::too_many_arguments)]
pub fn decode_plane(
    bytes: &[u8],
    bit_len: usize,
    plane: usize,
    seq: &[u32],
    sites: &[crate::dwt::ScanSite],
    bands: &[crate::dwt::BandKind],
    top: &[u8],
    model: &ContextModel,
) -> Result<Vec<u8>> {
    let mut walker = PlaneWalker::new(plane, seq, sites, bands, top, &model.segments[plane]);
    let mut dec = ArithDecoder::new(bytes, bit_len);
    let mut out = Vec::with_capacity(seq.len());
    while !walker.done() {
        let bit = dec.decode(crate::model::p1_q16(walker.nu()));
        out.push(bit);
        walker.advance(bit);
    }
    Ok(out)
}

//! Little-endian bit packing and CRC-32 used by the sideband and container
//! formats.

use crate::error::{JsccError, Result};

/// Writes bits LSB-first into a byte vector.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_pos: u8,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_bit(&mut self, bit: u8) {
        if self.bit_pos == 0 {
            self.bytes.push(0);
        }
        if bit & 1 == 1 {
            *self.bytes.last_mut().unwrap() |= 1 << self.bit_pos;
        }
        self.bit_pos = (self.bit_pos + 1) % 8;
    }

    pub fn put_bits(&mut self, value: u64, count: usize) {
        for i in 0..count {
            self.put_bit(((value >> i) & 1) as u8);
        }
    }

    pub fn bit_len(&self) -> usize {
        if self.bit_pos == 0 {
            self.bytes.len() * 8
        } else {
            (self.bytes.len() - 1) * 8 + self.bit_pos as usize
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads bits LSB-first from a byte slice.
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    pub fn get_bit(&mut self) -> Result<u8> {
        let byte = self.pos / 8;
        if byte >= self.bytes.len() {
            return Err(JsccError::StreamExhausted);
        }
        let bit = (self.bytes[byte] >> (self.pos % 8)) & 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn get_bits(&mut self, count: usize) -> Result<u64> {
        let mut v = 0u64;
        for i in 0..count {
            v |= (self.get_bit()? as u64) << i;
        }
        Ok(v)
    }

    pub fn bit_pos(&self) -> usize {
        self.pos
    }
}

/// Plain CRC-32 (IEEE 802.3, reflected).
pub fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFF_FFFFu32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB8_8320 & mask);
        }
    }
    !crc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_roundtrip() {
        let mut w = BitWriter::new();
        w.put_bits(0b1011, 4);
        w.put_bits(0x1234_5678_9ABC, 48);
        w.put_bit(1);
        assert_eq!(w.bit_len(), 53);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.get_bits(4).unwrap(), 0b1011);
        assert_eq!(r.get_bits(48).unwrap(), 0x1234_5678_9ABC);
        assert_eq!(r.get_bit().unwrap(), 1);
    }

    #[test]
    fn reader_exhaustion() {
        let mut r = BitReader::new(&[0xFF]);
        assert!(r.get_bits(8).is_ok());
        assert!(r.get_bit().is_err());
    }

    #[test]
    fn crc32_known_vector() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b""), 0);
    }
}

//! Serialization of the model sideband: quantizer steps and the per-segment
//! region partitions and quantized parameters, integrity-protected by CRC-32.
//!
//! The sideband is what the joint scheme protects with its dedicated
//! low-rate code and what the separate baseline prepends to its bitstream;
//! its byte length is the B_model term of the rate accounting.

use crate::bitio::{crc32, BitReader, BitWriter};
use crate::dwt::{SubbandGeometry, STRIPE_ROWS};
use crate::error::{JsccError, Result};
use crate::model::{ctx_count, ContextModel, SegmentModel};

const MAGIC: u64 = 0x4D53; // "SM"
const VERSION: u64 = 1;

/// Serialize the model for a given image geometry. The returned bytes end
/// with a CRC-32 over everything before it.
pub fn serialize(model: &ContextModel, geometry: &SubbandGeometry) -> Vec<u8> {
    assert_eq!(model.delta.len(), geometry.subbands.len());
    assert_eq!(model.segments.len(), model.planes + 1);
    let mut w = BitWriter::new();
    w.put_bits(MAGIC, 16);
    w.put_bits(VERSION, 8);
    w.put_bits(model.planes as u64, 4);
    w.put_bits(geometry.levels as u64, 4);
    w.put_bits(geometry.width as u64, 16);
    w.put_bits(geometry.height as u64, 16);
    for &d in &model.delta {
        w.put_bits(d.to_bits() as u64, 32);
    }
    for row in &model.segments {
        for (sb_idx, seg) in row.iter().enumerate() {
            w.put_bit(seg.zero as u8);
            if seg.zero {
                continue;
            }
            debug_assert!(seg.stripes_per_region >= 1);
            let n_stripes = geometry.subbands[sb_idx].height.div_ceil(STRIPE_ROWS);
            debug_assert!((seg.stripes_per_region as usize) <= n_stripes);
            w.put_bits(seg.stripes_per_region as u64, 12);
            w.put_bits(seg.q_bits as u64, 5);
            for &level in &seg.levels {
                w.put_bits(level as u64, seg.q_bits as usize);
            }
        }
    }
    let mut bytes = w.into_bytes();
    let crc = crc32(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    bytes
}

/// Parse a sideband. Any bit flip is caught by the CRC (or by an explicit
/// structural check before the CRC is even reached).
pub fn deserialize(bytes: &[u8]) -> Result<(ContextModel, SubbandGeometry)> {
    if bytes.len() < 12 {
        return Err(JsccError::Malformed("sideband too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32(body) != stored {
        return Err(JsccError::SidebandCrc);
    }
    let mut r = BitReader::new(body);
    if r.get_bits(16)? != MAGIC {
        return Err(JsccError::Malformed("bad sideband magic".into()));
    }
    if r.get_bits(8)? != VERSION {
        return Err(JsccError::Malformed("unsupported sideband version".into()));
    }
    let planes = r.get_bits(4)? as usize;
    let levels = r.get_bits(4)? as usize;
    let width = r.get_bits(16)? as usize;
    let height = r.get_bits(16)? as usize;
    let geometry = SubbandGeometry::new(width, height, levels)?;
    let mut delta = Vec::with_capacity(geometry.subbands.len());
    for _ in 0..geometry.subbands.len() {
        delta.push(f32::from_bits(r.get_bits(32)? as u32));
    }
    let mut segments = Vec::with_capacity(planes + 1);
    for plane in 0..=planes {
        let mut row = Vec::with_capacity(geometry.subbands.len());
        for sb in &geometry.subbands {
            if r.get_bit()? == 1 {
                row.push(SegmentModel::zero_segment());
                continue;
            }
            let n = r.get_bits(12)? as usize;
            let q = r.get_bits(5)? as u8;
            let n_stripes = sb.height.div_ceil(STRIPE_ROWS);
            if n == 0 || n > n_stripes || q > 16 {
                return Err(JsccError::Malformed(format!(
                    "segment partition out of range: n={n}, q={q}"
                )));
            }
            let m_regions = n_stripes.div_ceil(n);
            let count = if q == 0 { 0 } else { m_regions * ctx_count(plane) };
            let mut levels_v = Vec::with_capacity(count);
            for _ in 0..count {
                levels_v.push(r.get_bits(q as usize)? as u16);
            }
            row.push(SegmentModel {
                zero: false,
                stripes_per_region: n as u16,
                q_bits: q,
                levels: levels_v,
            });
        }
        segments.push(row);
    }
    let model = ContextModel {
        planes,
        delta,
        segments,
    };
    Ok((model, geometry))
}

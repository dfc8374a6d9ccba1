//! Per-subband sign/magnitude scalar quantization into bit-planes, hard
//! reconstruction, and soft-bit MMSE reconstruction from posterior LLRs.

use crate::dwt::{CoeffGrid, ScanSite, SubbandGeometry};

/// Per-subband uniform quantizer bank: P magnitude bits plus a sign bit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerBank {
    /// Magnitude bit count; 2^P - 1 levels cover the subband peak.
    pub planes: usize,
    /// Step per subband, in geometry order. All-zero subbands carry 1.0 and
    /// the matching zero flag lives in the model sideband.
    pub delta: Vec<f32>,
}

impl QuantizerBank {
    /// Full-range bank: delta = max |z| / (2^P - 1) per subband.
    pub fn fit(coeffs: &CoeffGrid, planes: usize) -> Self {
        assert!(planes >= 1);
        let levels = ((1usize << planes) - 1) as f64;
        let delta = coeffs
            .geometry
            .subbands
            .iter()
            .map(|sb| {
                let mut peak = 0.0f64;
                for r in 0..sb.height {
                    for c in 0..sb.width {
                        let v = coeffs.values[(sb.y0 + r) * coeffs.geometry.width + sb.x0 + c];
                        peak = peak.max(v.abs());
                    }
                }
                if peak == 0.0 {
                    1.0
                } else {
                    (peak / levels) as f32
                }
            })
            .collect();
        QuantizerBank { planes, delta }
    }
}

/// The (P+1) x K binary array in stripe-scan order. Plane 0 holds the sign,
/// plane P the most significant magnitude bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPlaneArray {
    /// planes[p][k], p = 0..=P.
    pub planes: Vec<Vec<u8>>,
}

impl BitPlaneArray {
    pub fn num_planes(&self) -> usize {
        self.planes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.planes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes[0].is_empty()
    }

    /// Magnitude integer at position k.
    pub fn magnitude(&self, k: usize) -> u32 {
        let mut m = 0u32;
        for p in 1..self.planes.len() {
            m |= (self.planes[p][k] as u32) << (p - 1);
        }
        m
    }
}

/// Posterior LLRs per plane/position; positive favors bit 0.
#[derive(Debug, Clone)]
pub struct PosteriorLlrs {
    pub planes: Vec<Vec<f64>>,
}

/// Quantize one coefficient to (sign, magnitude); nearest level, ties toward
/// the smaller magnitude, clamped to 2^P - 1.
pub fn quantize_sample(z: f64, delta: f64, planes: usize) -> (u8, u32) {
    let sign = if z < 0.0 { 1 } else { 0 };
    let t = z.abs() / delta;
    let max_m = (1u32 << planes) - 1;
    let lo = t.floor().min(max_m as f64) as u32;
    let hi = (lo + 1).min(max_m);
    // tie (t - lo == 0.5) breaks toward the smaller m
    let m = if (t - lo as f64) > (hi as f64 - t) {
        hi
    } else {
        lo
    };
    let m = m.min(max_m);
    let sign = if m == 0 { 0 } else { sign };
    (sign, m)
}

/// Quantize a coefficient grid into bit-planes, in stripe-scan order.
pub fn quantize(coeffs: &CoeffGrid, bank: &QuantizerBank, scan: &[ScanSite]) -> BitPlaneArray {
    let p = bank.planes;
    let k_total = scan.len();
    let mut planes = vec![vec![0u8; k_total]; p + 1];
    for (k, site) in scan.iter().enumerate() {
        let z = coeffs.values[site.grid_index];
        let delta = bank.delta[site.subband] as f64;
        let (sign, m) = quantize_sample(z, delta, p);
        planes[0][k] = sign;
        for bit in 1..=p {
            planes[bit][k] = ((m >> (bit - 1)) & 1) as u8;
        }
    }
    BitPlaneArray { planes }
}

/// Hard reconstruction: z = (-1)^sign * delta * m.
pub fn reconstruct(
    bits: &BitPlaneArray,
    bank: &QuantizerBank,
    scan: &[ScanSite],
    geometry: &SubbandGeometry,
) -> CoeffGrid {
    let mut values = vec![0.0f64; geometry.num_samples()];
    for (k, site) in scan.iter().enumerate() {
        let m = bits.magnitude(k) as f64;
        let sign = if bits.planes[0][k] == 1 { -1.0 } else { 1.0 };
        values[site.grid_index] = sign * bank.delta[site.subband] as f64 * m;
    }
    CoeffGrid {
        geometry: geometry.clone(),
        values,
    }
}

/// Soft-bit MMSE estimate of one coefficient from its per-bit posterior LLRs:
/// z = (delta/2) * tanh(l0/2) * sum_p 2^p / (1 + exp(l_p)).
pub fn soft_reconstruct_sample(llrs: &[f64], delta: f64) -> f64 {
    let planes = llrs.len() - 1;
    let mut acc = 0.0f64;
    for p in 1..=planes {
        acc += (1u64 << p) as f64 / (1.0 + llrs[p].exp());
    }
    delta / 2.0 * (llrs[0] / 2.0).tanh() * acc
}

/// Soft reconstruction of the whole grid from posterior LLRs.
pub fn soft_reconstruct(
    llrs: &PosteriorLlrs,
    bank: &QuantizerBank,
    scan: &[ScanSite],
    geometry: &SubbandGeometry,
) -> CoeffGrid {
    let planes = llrs.planes.len() - 1;
    let mut values = vec![0.0f64; geometry.num_samples()];
    let mut site_llrs = vec![0.0f64; planes + 1];
    for (k, site) in scan.iter().enumerate() {
        for p in 0..=planes {
            site_llrs[p] = llrs.planes[p][k];
        }
        values[site.grid_index] =
            soft_reconstruct_sample(&site_llrs, bank.delta[site.subband] as f64);
    }
    CoeffGrid {
        geometry: geometry.clone(),
        values,
    }
}

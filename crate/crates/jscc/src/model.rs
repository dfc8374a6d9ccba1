//! Piecewise-stationary conditional-Markov bit-plane model: ML parameter
//! estimation over stripe regions, empirical entropy, and description-length
//! optimization (fixed stripe grouping, per-segment Rissanen, brute force).
//!
//! The model for segment (p, d) is a set of per-region, per-context LLRs
//! nu(p, d, region, ctx). Counts use Krichevsky-Trofimov +1/2 smoothing; LLRs
//! are clamped to +-12 and uniformly quantized to q bits with midpoint
//! reconstruction. Probabilities enter the arithmetic coder and the entropy
//! bookkeeping as the same 16-bit fixed-point values, so coded lengths track
//! the reported entropies exactly.

use crate::context::{
    magnitude_context, sign_context, MarkovState, MAG_CONTEXTS, SIGN_CONTEXTS, STATE_BITS,
};
use crate::dwt::{BandKind, ScanSite, SubbandGeometry, STRIPE_ROWS};
use crate::quant::BitPlaneArray;
use serde::{Deserialize, Serialize};

/// LLR clamp before quantization.
pub const NU_MAX: f64 = 12.0;

/// Local context count for a plane (sign plane is plane 0).
pub fn ctx_count(plane: usize) -> usize {
    if plane == 0 {
        SIGN_CONTEXTS
    } else {
        MAG_CONTEXTS
    }
}

/// Local context (0-based within the plane kind) of a bit given the Markov
/// state and position metadata. `top_sig` is the highest upper plane holding
/// a 1 at this position, 0 when none.
#[inline]
pub fn local_context(
    plane: usize,
    state: MarkovState,
    stripe_row: u8,
    band: BandKind,
    top_sig: u8,
) -> usize {
    if plane == 0 {
        sign_context(state, top_sig == 0) - MAG_CONTEXTS
    } else {
        use crate::context::UpperSignificance;
        magnitude_context(
            state,
            UpperSignificance::classify(top_sig as usize, plane),
            stripe_row,
            band,
        )
    }
}

/// Uniform quantizer for nu on [-NU_MAX, NU_MAX] with 2^q levels, midpoint
/// reconstruction. q = 0 encodes the uninformative nu = 0.
pub fn quantize_nu(nu: f64, q: u8) -> u16 {
    debug_assert!((1..=16).contains(&q));
    let levels = 1u32 << q;
    let step = 2.0 * NU_MAX / levels as f64;
    let idx = ((nu + NU_MAX) / step).floor();
    idx.clamp(0.0, (levels - 1) as f64) as u16
}

pub fn dequantize_nu(level: u16, q: u8) -> f64 {
    let levels = 1u32 << q;
    let step = 2.0 * NU_MAX / levels as f64;
    -NU_MAX + (level as f64 + 0.5) * step
}

/// P(bit = 1) as a 16-bit fixed-point value in [1, 65535].
pub fn p1_q16(nu: f64) -> u16 {
    let p1 = 1.0 / (1.0 + nu.exp());
    ((p1 * 65536.0).round() as i64).clamp(1, 65535) as u16
}

/// Ideal codelength in bits of `bit` under the fixed-point probability.
#[inline]
pub fn codelength_bits(bit: u8, p1: u16) -> f64 {
    let p = if bit == 1 {
        p1 as f64 / 65536.0
    } else {
        (65536 - p1 as i64) as f64 / 65536.0
    };
    -p.log2()
}

/// Parameters of one (plane, subband) segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentModel {
    /// Identically-zero segment: no parameters, no codeword.
    pub zero: bool,
    /// Stripes per region (n_{p,d}); regions are groups of adjacent stripes.
    pub stripes_per_region: u16,
    /// Parameter quantization bits (q_{p,d}); 0 means nu = 0 everywhere.
    pub q_bits: u8,
    /// Quantized levels, region-major: levels[region * C + ctx].
    pub levels: Vec<u16>,
}

impl SegmentModel {
    pub fn zero_segment() -> Self {
        SegmentModel {
            zero: true,
            stripes_per_region: 1,
            q_bits: 0,
            levels: Vec::new(),
        }
    }

    /// Region count implied by the stored levels; 0 for zero or nu = 0
    /// segments, which carry no parameters.
    pub fn num_regions(&self, plane: usize) -> usize {
        if self.zero || self.q_bits == 0 {
            0
        } else {
            self.levels.len() / ctx_count(plane)
        }
    }

    #[inline]
    pub fn nu(&self, plane: usize, region: usize, ctx: usize) -> f64 {
        if self.q_bits == 0 {
            return 0.0;
        }
        let c = ctx_count(plane);
        dequantize_nu(self.levels[region * c + ctx], self.q_bits)
    }

    #[inline]
    pub fn region_of(&self, stripe: usize) -> usize {
        stripe / self.stripes_per_region.max(1) as usize
    }
}

/// The full piecewise-stationary model: one segment per (plane, subband).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextModel {
    pub planes: usize,
    /// Per-subband quantizer steps, duplicated here so the sideband is
    /// self-contained.
    pub delta: Vec<f32>,
    /// segments[plane][subband], plane 0 = sign.
    pub segments: Vec<Vec<SegmentModel>>,
}

impl ContextModel {
    /// Total real-parameter count over all regions and contexts.
    pub fn param_count(&self) -> usize {
        self.segments
            .iter()
            .flat_map(|row| row.iter())
            .map(|seg| {
                if seg.zero || seg.q_bits == 0 {
                    0
                } else {
                    seg.levels.len()
                }
            })
            .sum()
    }

    /// Parameter count recomputed from the partition via the closed formula
    /// M0 * sum_d m_{d,0} + M1 * sum_d sum_p m_{d,p}.
    pub fn param_count_formula(&self) -> usize {
        let mut sign_regions = 0usize;
        let mut mag_regions = 0usize;
        for (p, row) in self.segments.iter().enumerate() {
            for seg in row {
                if seg.zero || seg.q_bits == 0 {
                    continue;
                }
                let m = seg.levels.len() / ctx_count(p);
                if p == 0 {
                    sign_regions += m;
                } else {
                    mag_regions += m;
                }
            }
        }
        SIGN_CONTEXTS * sign_regions + MAG_CONTEXTS * mag_regions
    }
}

/// Per-plane, per-subband all-zero flags derived from the data.
pub fn zero_flags(bits: &BitPlaneArray, sites: &[ScanSite], num_subbands: usize) -> Vec<Vec<bool>> {
    let planes = bits.num_planes();
    let mut flags = vec![vec![true; num_subbands]; planes + 1];
    for (k, site) in sites.iter().enumerate() {
        for p in 0..=planes {
            if bits.planes[p][k] != 0 {
                flags[p][site.subband] = false;
            }
        }
    }
    flags
}

/// Scan indices of plane p's encoded sequence: positions in non-zero segments,
/// in stripe-scan order.
pub fn plane_sequence(sites: &[ScanSite], zero: &[bool]) -> Vec<u32> {
    sites
        .iter()
        .enumerate()
        .filter(|(_, s)| !zero[s.subband])
        .map(|(k, _)| k as u32)
        .collect()
}

/// Highest plane > p holding a 1, tracked per scan position. Start from all
/// zeros at p = P and fold in each decoded/known plane with `update`.
pub fn update_top_significance(top: &mut [u8], plane_bits: &[u8], plane: usize) {
    debug_assert!(plane >= 1);
    for (t, &b) in top.iter_mut().zip(plane_bits) {
        if *t == 0 && b == 1 {
            *t = plane as u8;
        }
    }
}

pub fn band_kinds(geometry: &SubbandGeometry) -> Vec<BandKind> {
    geometry.subbands.iter().map(|s| s.kind).collect()
}

/// Per-stripe, per-context bit counts for one plane:
/// counts[subband][stripe * C + ctx] = [zeros, ones].
pub fn stripe_counts(
    plane: usize,
    seq: &[u32],
    plane_bits: &[u8],
    sites: &[ScanSite],
    bands: &[BandKind],
    top: &[u8],
    geometry: &SubbandGeometry,
) -> Vec<Vec<[u32; 2]>> {
    let c = ctx_count(plane);
    let mut counts: Vec<Vec<[u32; 2]>> = geometry
        .subbands
        .iter()
        .map(|sb| vec![[0u32; 2]; sb.height.div_ceil(STRIPE_ROWS) * c])
        .collect();
    let mut state = MarkovState::default();
    for &k in seq {
        let k = k as usize;
        let site = sites[k];
        let ctx = local_context(plane, state, site.stripe_row, bands[site.subband], top[k]);
        let bit = plane_bits[k];
        counts[site.subband][site.stripe * c + ctx][bit as usize] += 1;
        state = state.push(bit, STATE_BITS);
    }
    counts
}

/// KT-smoothed, clamped LLR from counts.
pub fn nu_from_counts(zeros: u32, ones: u32) -> f64 {
    ((zeros as f64 + 0.5) / (ones as f64 + 0.5))
        .ln()
        .clamp(-NU_MAX, NU_MAX)
}

/// Rissanen bit budget for a region of the given length.
pub fn rissanen_bits(region_len: usize) -> u8 {
    if region_len <= 1 {
        1
    } else {
        ((region_len as f64).log2() / 2.0).ceil() as u8
    }
}

/// Segment header cost in the sideband: zero flag + n + q.
const SEGMENT_HEADER_BITS: usize = 1 + 12 + 5;

/// Evaluate one segment under a given (n, q): returns (total bits, levels).
/// q = 0 means nu = 0 (no parameter bits). Total = data + parameters + header.
fn segment_cost(
    plane: usize,
    counts: &[[u32; 2]],
    n_stripes: usize,
    n: usize,
    q: u8,
) -> (f64, Vec<u16>) {
    let c = ctx_count(plane);
    let m_regions = n_stripes.div_ceil(n);
    let mut levels = Vec::new();
    let mut data_bits = 0.0f64;
    for region in 0..m_regions {
        let s0 = region * n;
        let s1 = (s0 + n).min(n_stripes);
        for ctx in 0..c {
            let mut zeros = 0u32;
            let mut ones = 0u32;
            for s in s0..s1 {
                zeros += counts[s * c + ctx][0];
                ones += counts[s * c + ctx][1];
            }
            let nu_q = if q == 0 {
                0.0
            } else {
                let level = quantize_nu(nu_from_counts(zeros, ones), q);
                levels.push(level);
                dequantize_nu(level, q)
            };
            let p1 = p1_q16(nu_q);
            data_bits += zeros as f64 * codelength_bits(0, p1) + ones as f64 * codelength_bits(1, p1);
        }
    }
    let param_bits = m_regions * c * q as usize;
    (
        data_bits + param_bits as f64 + SEGMENT_HEADER_BITS as f64,
        levels,
    )
}

/// How (n, q) pairs are chosen per segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationMode {
    /// Fixed stripes-per-region for all segments, Rissanen q.
    FixedNs(usize),
    /// Per-segment search over n with Rissanen q.
    Rissanen,
    /// Joint search over n and q; the q scan stops when one more bit no
    /// longer shrinks the total description length.
    BruteForce,
}

/// Estimation result with the description-length bookkeeping.
#[derive(Debug, Clone)]
pub struct ModelBuild {
    pub model: ContextModel,
    /// Ideal data bits under the quantized model (sum over planes).
    pub data_bits: f64,
    /// Parameter + header bits as accounted during optimization.
    pub side_bits: f64,
}

impl ModelBuild {
    pub fn total_bits(&self) -> f64 {
        self.data_bits + self.side_bits
    }
}

/// Estimate the model for all planes under the given allocation mode.
pub fn estimate_model(
    bits: &BitPlaneArray,
    sites: &[ScanSite],
    geometry: &SubbandGeometry,
    delta: &[f32],
    mode: AllocationMode,
) -> ModelBuild {
    let planes = bits.num_planes();
    let bands = band_kinds(geometry);
    let flags = zero_flags(bits, sites, geometry.subbands.len());
    let mut segments: Vec<Vec<SegmentModel>> =
        vec![Vec::with_capacity(geometry.subbands.len()); planes + 1];
    let mut data_bits = 0.0f64;
    let mut side_bits = 0.0f64;

    let mut top = vec![0u8; sites.len()];
    // plane order P..1 then sign, so `top` always reflects upper planes only
    let plane_order: Vec<usize> = (1..=planes).rev().chain(std::iter::once(0)).collect();
    let mut ordered: Vec<(usize, Vec<SegmentModel>, f64, f64)> = Vec::new();
    for &p in &plane_order {
        let seq = plane_sequence(sites, &flags[p]);
        let counts = stripe_counts(p, &seq, &bits.planes[p], sites, &bands, &top, geometry);
        let mut row = Vec::with_capacity(geometry.subbands.len());
        let mut plane_data = 0.0f64;
        let mut plane_side = 0.0f64;
        for (sb_idx, sb) in geometry.subbands.iter().enumerate() {
            if flags[p][sb_idx] {
                row.push(SegmentModel::zero_segment());
                plane_side += 1.0; // zero flag
                continue;
            }
            let n_stripes = sb.height.div_ceil(STRIPE_ROWS);
            let stripe_len = sb.width * STRIPE_ROWS;
            let (n, q, cost, levels) = choose_allocation(
                p,
                &counts[sb_idx],
                n_stripes,
                stripe_len,
                mode,
            );
            let c = ctx_count(p);
            let m_regions = n_stripes.div_ceil(n);
            plane_side += (m_regions * c * q as usize + SEGMENT_HEADER_BITS) as f64;
            plane_data += cost - (m_regions * c * q as usize + SEGMENT_HEADER_BITS) as f64;
            row.push(SegmentModel {
                zero: false,
                stripes_per_region: n as u16,
                q_bits: q,
                levels,
            });
        }
        ordered.push((p, row, plane_data, plane_side));
        data_bits += plane_data;
        side_bits += plane_side;
        if p >= 1 {
            update_top_significance(&mut top, &bits.planes[p], p);
        }
    }
    for (p, row, _, _) in ordered {
        segments[p] = row;
    }
    ModelBuild {
        model: ContextModel {
            planes,
            delta: delta.to_vec(),
            segments,
        },
        data_bits,
        side_bits,
    }
}

fn choose_allocation(
    plane: usize,
    counts: &[[u32; 2]],
    n_stripes: usize,
    stripe_len: usize,
    mode: AllocationMode,
) -> (usize, u8, f64, Vec<u16>) {
    match mode {
        AllocationMode::FixedNs(ns) => {
            let n = ns.clamp(1, n_stripes);
            let q = rissanen_bits(n * stripe_len);
            let (cost, levels) = segment_cost(plane, counts, n_stripes, n, q);
            (n, q, cost, levels)
        }
        AllocationMode::Rissanen => {
            let mut best: Option<(usize, u8, f64, Vec<u16>)> = None;
            for n in 1..=n_stripes {
                let q = rissanen_bits(n * stripe_len);
                let (cost, levels) = segment_cost(plane, counts, n_stripes, n, q);
                if best.as_ref().is_none_or(|b| cost < b.2) {
                    best = Some((n, q, cost, levels));
                }
            }
            best.unwrap()
        }
        AllocationMode::BruteForce => {
            let mut best: Option<(usize, u8, f64, Vec<u16>)> = None;
            for n in 1..=n_stripes {
                // q = 0 baseline (equiprobable bits, no parameters)
                let (cost0, levels0) = segment_cost(plane, counts, n_stripes, n, 0);
                if best.as_ref().is_none_or(|b| cost0 < b.2) {
                    best = Some((n, 0, cost0, levels0));
                }
                let mut prev = cost0;
                for q in 1..=16u8 {
                    let (cost, levels) = segment_cost(plane, counts, n_stripes, n, q);
                    if best.as_ref().is_none_or(|b| cost < b.2) {
                        best = Some((n, q, cost, levels.clone()));
                    }
                    if q > 1 && cost >= prev {
                        break;
                    }
                    prev = cost;
                }
            }
            best.unwrap()
        }
    }
}

/// Walks one plane's encoded sequence, tracking the Markov state and
/// resolving contexts/regions. Shared by estimation checks, the arithmetic
/// coder and the BP source trellis.
pub struct PlaneWalker<'a> {
    pub plane: usize,
    seq: &'a [u32],
    sites: &'a [ScanSite],
    bands: &'a [BandKind],
    top: &'a [u8],
    segment_row: &'a [SegmentModel],
    pos: usize,
    state: MarkovState,
}

impl<'a> PlaneWalker<'a> {
    pub fn new(
        plane: usize,
        seq: &'a [u32],
        sites: &'a [ScanSite],
        bands: &'a [BandKind],
        top: &'a [u8],
        segment_row: &'a [SegmentModel],
    ) -> Self {
        PlaneWalker {
            plane,
            seq,
            sites,
            bands,
            top,
            segment_row,
            pos: 0,
            state: MarkovState::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn done(&self) -> bool {
        self.pos >= self.seq.len()
    }

    pub fn state(&self) -> MarkovState {
        self.state
    }

    /// Scan index of the current position.
    pub fn scan_index(&self) -> usize {
        self.seq[self.pos] as usize
    }

    /// nu for an arbitrary state at the current position (used by the BCJR
    /// trellis, which evaluates all states at once).
    #[inline]
    pub fn nu_for_state(&self, state: MarkovState) -> f64 {
        self.nu_for_state_at(self.pos, state)
    }

    #[inline]
    pub fn nu_for_state_at(&self, pos: usize, state: MarkovState) -> f64 {
        let k = self.seq[pos] as usize;
        let site = self.sites[k];
        let ctx = local_context(
            self.plane,
            state,
            site.stripe_row,
            self.bands[site.subband],
            self.top[k],
        );
        let seg = &self.segment_row[site.subband];
        seg.nu(self.plane, seg.region_of(site.stripe), ctx)
    }

    /// nu at the walker's own state.
    pub fn nu(&self) -> f64 {
        self.nu_for_state(self.state)
    }

    pub fn advance(&mut self, bit: u8) {
        self.state = self.state.push(bit, STATE_BITS);
        self.pos += 1;
    }
}

/// Conditional empirical entropy rate of plane p in bits per encoded symbol,
/// under the quantized model (fixed-point probabilities).
pub fn empirical_entropy(
    plane: usize,
    seq: &[u32],
    plane_bits: &[u8],
    sites: &[ScanSite],
    bands: &[BandKind],
    top: &[u8],
    model: &ContextModel,
) -> f64 {
    if seq.is_empty() {
        return 0.0;
    }
    let mut walker = PlaneWalker::new(plane, seq, sites, bands, top, &model.segments[plane]);
    let mut total = 0.0f64;
    while !walker.done() {
        let bit = plane_bits[walker.scan_index()];
        total += codelength_bits(bit, p1_q16(walker.nu()));
        walker.advance(bit);
    }
    total / seq.len() as f64
}

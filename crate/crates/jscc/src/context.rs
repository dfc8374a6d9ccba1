//! Context classification for the conditional-Markov bit-plane model.
//!
//! A bit's context folds the Markov state (the L most recent bits of the same
//! plane in scan order), the co-located upper-plane bits, the row within the
//! stripe and the subband class into one of 17 classes: 12 for magnitude
//! planes, 5 for the sign plane. The exact table is frozen as a golden file;
//! encoder and decoder share this single implementation.

use crate::dwt::BandKind;

/// Number of magnitude contexts (M1).
pub const MAG_CONTEXTS: usize = 12;
/// Number of sign contexts (M0).
pub const SIGN_CONTEXTS: usize = 5;
/// Total distinct contexts (M).
pub const NUM_CONTEXTS: usize = MAG_CONTEXTS + SIGN_CONTEXTS;
/// Markov window length L; 2^L = 32 trellis states.
pub const STATE_BITS: usize = 5;

/// Sliding window of the most recent bits, bit 0 = newest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MarkovState(pub u32);

impl MarkovState {
    /// Shift in a new bit (the paper's right shift, seen from the register).
    #[inline]
    pub fn push(self, bit: u8, window: usize) -> MarkovState {
        MarkovState(((self.0 << 1) | bit as u32) & ((1 << window) - 1))
    }
}

/// Classification of the co-located upper-plane bits for a magnitude bit at
/// plane p: never significant, first significant exactly at p+1, or earlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperSignificance {
    Never,
    AtNext,
    Earlier,
}

impl UpperSignificance {
    /// From the highest upper plane holding a 1 at this position
    /// (`top_plane` = 0 when none), evaluated for the current plane `p`.
    pub fn classify(top_plane: usize, p: usize) -> Self {
        if top_plane == 0 {
            UpperSignificance::Never
        } else if top_plane == p + 1 {
            UpperSignificance::AtNext
        } else {
            debug_assert!(top_plane > p + 1);
            UpperSignificance::Earlier
        }
    }

    fn index(self) -> usize {
        match self {
            UpperSignificance::Never => 0,
            UpperSignificance::AtNext => 1,
            UpperSignificance::Earlier => 2,
        }
    }
}

/// Context of a magnitude bit; returns a global index < MAG_CONTEXTS.
///
/// The neighborhood weight is the Hamming weight of the three most recent
/// state bits, adjusted by the stripe row (orientation-flipped for HL/HH),
/// then combined with the upper-plane significance class. State 0 always maps
/// to the base class of its significance group, so the four trellis sections
/// agree on the all-insignificant context.
pub fn magnitude_context(
    state: MarkovState,
    sig_up: UpperSignificance,
    stripe_row: u8,
    band: BandKind,
) -> usize {
    let w3 = (state.0 & 0b111).count_ones() as usize;
    let row = match band {
        BandKind::Ll | BandKind::Lh => stripe_row as usize,
        BandKind::Hl | BandKind::Hh => 3 - stripe_row.min(3) as usize,
    };
    let adjusted = if w3 == 0 { 0 } else { (w3 + row).min(5) };
    (adjusted + 3 * sig_up.index()).min(MAG_CONTEXTS - 1)
}

/// Context of a sign bit; returns a global index in MAG_CONTEXTS..NUM_CONTEXTS.
///
/// Class 0 is reserved for zero-magnitude positions (where the sign is fixed
/// to 0 by convention); the rest split on the two most recent sign bits.
pub fn sign_context(state: MarkovState, magnitude_zero: bool) -> usize {
    let c = if magnitude_zero {
        0
    } else {
        1 + (state.0 & 1) as usize + 2 * ((state.0 >> 1) & 1) as usize
    };
    MAG_CONTEXTS + c
}

/// Render the top-plane context table (all states x 4 rows x 4 band kinds) as
/// text, used to freeze the golden file.
pub fn top_plane_table() -> String {
    let mut out = String::from("# top-plane magnitude contexts: state row -> LL HL LH HH\n");
    for state in 0..(1u32 << STATE_BITS) {
        for row in 0..4u8 {
            let k = |band| {
                magnitude_context(MarkovState(state), UpperSignificance::Never, row, band)
            };
            out.push_str(&format!(
                "{:02} {} -> {:2} {:2} {:2} {:2}\n",
                state,
                row,
                k(BandKind::Ll),
                k(BandKind::Hl),
                k(BandKind::Lh),
                k(BandKind::Hh),
            ));
        }
    }
    out
}

//! Discrete wavelet transform, subband geometry and the stripe-oriented scan
//! that linearizes the coefficient grid.
//!
//! The default filter is the reversible LeGall 5/3 lifting filter with
//! whole-sample symmetric extension: integer in, integer out, bit-exact
//! inverse. The irreversible Daubechies 9/7 is available as an option and
//! reconstructs to floating-point precision.

use crate::error::{JsccError, Result};
use crate::image::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletFilter {
    /// Reversible integer LeGall 5/3.
    LeGall53,
    /// Irreversible Daubechies 9/7.
    Daubechies97,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    Ll,
    Hl,
    Lh,
    Hh,
}

/// One subband rectangle inside the coefficient grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subband {
    pub kind: BandKind,
    /// Decomposition level d; the subband side is n / 2^d.
    pub level: usize,
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

/// Geometry of a D-level Mallat decomposition: 3D + 1 subbands tiling the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandGeometry {
    pub levels: usize,
    pub width: usize,
    pub height: usize,
    /// Scan order: LL_D first, then HL_d, LH_d, HH_d for d = D down to 1.
    pub subbands: Vec<Subband>,
}

impl SubbandGeometry {
    pub fn new(width: usize, height: usize, levels: usize) -> Result<Self> {
        if levels == 0
            || !width.is_multiple_of(1 << levels)
            || !height.is_multiple_of(1 << levels)
            || width < (1 << levels)
            || height < (1 << levels)
        {
            return Err(JsccError::DimensionNotDivisible {
                width,
                height,
                levels,
            });
        }
        let mut subbands = Vec::with_capacity(3 * levels + 1);
        subbands.push(Subband {
            kind: BandKind::Ll,
            level: levels,
            x0: 0,
            y0: 0,
            width: width >> levels,
            height: height >> levels,
        });
        for d in (1..=levels).rev() {
            let (w, h) = (width >> d, height >> d);
            subbands.push(Subband {
                kind: BandKind::Hl,
                level: d,
                x0: w,
                y0: 0,
                width: w,
                height: h,
            });
            subbands.push(Subband {
                kind: BandKind::Lh,
                level: d,
                x0: 0,
                y0: h,
                width: w,
                height: h,
            });
            subbands.push(Subband {
                kind: BandKind::Hh,
                level: d,
                x0: w,
                y0: h,
                width: w,
                height: h,
            });
        }
        Ok(SubbandGeometry {
            levels,
            width,
            height,
            subbands,
        })
    }

    pub fn num_samples(&self) -> usize {
        self.width * self.height
    }
}

/// Transform coefficients on the full grid, row-major. For the 5/3 filter the
/// values are exact integers.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGrid {
    pub geometry: SubbandGeometry,
    pub values: Vec<f64>,
}

const LEVEL_SHIFT: i32 = 128;

// Daubechies 9/7 lifting constants, unitary normalization.
const ALPHA: f64 = -1.586134342059924;
const BETA: f64 = -0.052980118572961;
const GAMMA: f64 = 0.882911075530934;
const DELTA: f64 = 0.443506852043971;
const ZETA: f64 = 1.149604398;

fn lift53_forward(x: &mut [i64]) {
    let n = x.len();
    debug_assert!(n >= 2 && n.is_multiple_of(2));
    for i in (1..n).step_by(2) {
        let l = x[i - 1];
        let r = if i + 1 < n { x[i + 1] } else { x[n - 2] };
        x[i] -= (l + r) >> 1;
    }
    for i in (0..n).step_by(2) {
        let l = if i > 0 { x[i - 1] } else { x[1] };
        let r = if i + 1 < n { x[i + 1] } else { x[n - 1] };
        x[i] += (l + r + 2) >> 2;
    }
}

fn lift53_inverse(x: &mut [i64]) {
    let n = x.len();
    for i in (0..n).step_by(2) {
        let l = if i > 0 { x[i - 1] } else { x[1] };
        let r = if i + 1 < n { x[i + 1] } else { x[n - 1] };
        x[i] -= (l + r + 2) >> 2;
    }
    for i in (1..n).step_by(2) {
        let l = x[i - 1];
        let r = if i + 1 < n { x[i + 1] } else { x[n - 2] };
        x[i] += (l + r) >> 1;
    }
}

fn lift97_forward(x: &mut [f64]) {
    let n = x.len();
    let pairs = [(ALPHA, 1usize), (BETA, 0), (GAMMA, 1), (DELTA, 0)];
    for (c, parity) in pairs {
        if parity == 1 {
            for i in (1..n).step_by(2) {
                let l = x[i - 1];
                let r = if i + 1 < n { x[i + 1] } else { x[n - 2] };
                x[i] += c * (l + r);
            }
        } else {
            for i in (0..n).step_by(2) {
                let l = if i > 0 { x[i - 1] } else { x[1] };
                let r = if i + 1 < n { x[i + 1] } else { x[n - 1] };
                x[i] += c * (l + r);
            }
        }
    }
    for i in (0..n).step_by(2) {
        x[i] *= ZETA;
    }
    for i in (1..n).step_by(2) {
        x[i] /= ZETA;
    }
}

fn lift97_inverse(x: &mut [f64]) {
    let n = x.len();
    for i in (0..n).step_by(2) {
        x[i] /= ZETA;
    }
    for i in (1..n).step_by(2) {
        x[i] *= ZETA;
    }
    let pairs = [(DELTA, 0usize), (GAMMA, 1), (BETA, 0), (ALPHA, 1)];
    for (c, parity) in pairs {
        if parity == 1 {
            for i in (1..n).step_by(2) {
                let l = x[i - 1];
                let r = if i + 1 < n { x[i + 1] } else { x[n - 2] };
                x[i] -= c * (l + r);
            }
        } else {
            for i in (0..n).step_by(2) {
                let l = if i > 0 { x[i - 1] } else { x[1] };
                let r = if i + 1 < n { x[i + 1] } else { x[n - 1] };
                x[i] -= c * (l + r);
            }
        }
    }
}

/// Deinterleave low/high halves of a lifted signal.
fn deinterleave<T: Copy>(x: &[T], out: &mut [T]) {
    let n = x.len();
    for i in 0..n / 2 {
        out[i] = x[2 * i];
        out[n / 2 + i] = x[2 * i + 1];
    }
}

fn interleave<T: Copy>(x: &[T], out: &mut [T]) {
    let n = x.len();
    for i in 0..n / 2 {
        out[2 * i] = x[i];
        out[2 * i + 1] = x[n / 2 + i];
    }
}

fn transform_2d<F, G>(
    grid: &mut [f64],
    stride: usize,
    levels: usize,
    forward: bool,
    lift_fwd: F,
    lift_inv: G,
) where
    F: Fn(&mut [f64]),
    G: Fn(&mut [f64]),
{
    let full_w = stride;
    let full_h = grid.len() / stride;
    let level_range: Vec<usize> = if forward {
        (0..levels).collect()
    } else {
        (0..levels).rev().collect()
    };
    for lvl in level_range {
        let w = full_w >> lvl;
        let h = full_h >> lvl;
        let mut line = vec![0.0f64; w.max(h)];
        let mut tmp = vec![0.0f64; w.max(h)];
        if forward {
            // rows, then columns
            for r in 0..h {
                line[..w].copy_from_slice(&grid[r * stride..r * stride + w]);
                lift_fwd(&mut line[..w]);
                deinterleave(&line[..w], &mut tmp[..w]);
                grid[r * stride..r * stride + w].copy_from_slice(&tmp[..w]);
            }
            for c in 0..w {
                for r in 0..h {
                    line[r] = grid[r * stride + c];
                }
                lift_fwd(&mut line[..h]);
                deinterleave(&line[..h], &mut tmp[..h]);
                for r in 0..h {
                    grid[r * stride + c] = tmp[r];
                }
            }
        } else {
            // columns, then rows
            for c in 0..w {
                for r in 0..h {
                    tmp[r] = grid[r * stride + c];
                }
                interleave(&tmp[..h], &mut line[..h]);
                lift_inv(&mut line[..h]);
                for r in 0..h {
                    grid[r * stride + c] = line[r];
                }
            }
            for r in 0..h {
                tmp[..w].copy_from_slice(&grid[r * stride..r * stride + w]);
                interleave(&tmp[..w], &mut line[..w]);
                lift_inv(&mut line[..w]);
                grid[r * stride..r * stride + w].copy_from_slice(&line[..w]);
            }
        }
    }
}

fn lift53_f64_fwd(x: &mut [f64]) {
    let mut ints: Vec<i64> = x.iter().map(|&v| v as i64).collect();
    lift53_forward(&mut ints);
    for (o, v) in x.iter_mut().zip(ints) {
        *o = v as f64;
    }
}

fn lift53_f64_inv(x: &mut [f64]) {
    let mut ints: Vec<i64> = x.iter().map(|&v| v as i64).collect();
    lift53_inverse(&mut ints);
    for (o, v) in x.iter_mut().zip(ints) {
        *o = v as f64;
    }
}

/// Forward D-level 2-D DWT with level shift.
pub fn forward_dwt(img: &ImagePlane, levels: usize, filter: WaveletFilter) -> Result<CoeffGrid> {
    let geometry = SubbandGeometry::new(img.width, img.height, levels)?;
    let mut values: Vec<f64> = img
        .samples
        .iter()
        .map(|&s| (s - LEVEL_SHIFT) as f64)
        .collect();
    match filter {
        WaveletFilter::LeGall53 => transform_2d(
            &mut values,
            img.width,
            levels,
            true,
            lift53_f64_fwd,
            lift53_f64_inv,
        ),
        WaveletFilter::Daubechies97 => transform_2d(
            &mut values,
            img.width,
            levels,
            true,
            lift97_forward,
            lift97_inverse,
        ),
    }
    Ok(CoeffGrid { geometry, values })
}

/// Inverse DWT to the unrounded sample domain (level shift added back).
pub fn inverse_dwt(grid: &CoeffGrid, filter: WaveletFilter) -> Vec<f64> {
    let mut values = grid.values.clone();
    match filter {
        WaveletFilter::LeGall53 => transform_2d(
            &mut values,
            grid.geometry.width,
            grid.geometry.levels,
            false,
            lift53_f64_fwd,
            lift53_f64_inv,
        ),
        WaveletFilter::Daubechies97 => transform_2d(
            &mut values,
            grid.geometry.width,
            grid.geometry.levels,
            false,
            lift97_forward,
            lift97_inverse,
        ),
    }
    for v in values.iter_mut() {
        *v += LEVEL_SHIFT as f64;
    }
    values
}

/// Inverse DWT rounded and clamped back to the 8-bit image range.
pub fn inverse_dwt_image(grid: &CoeffGrid, filter: WaveletFilter) -> ImagePlane {
    let samples = inverse_dwt(grid, filter)
        .into_iter()
        .map(|v| (v.round() as i32).clamp(0, 255))
        .collect();
    ImagePlane::new(grid.geometry.width, grid.geometry.height, samples)
}

pub const STRIPE_ROWS: usize = 4;

/// Scan-order metadata for one linear position k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanSite {
    /// Row-major index into the coefficient grid.
    pub grid_index: usize,
    /// Index into `SubbandGeometry::subbands`.
    pub subband: usize,
    /// Row within the stripe, 0..=3 (a short final stripe keeps its row ids).
    pub stripe_row: u8,
    /// Stripe index within the subband.
    pub stripe: usize,
}

/// Stripe-oriented scan: subbands in geometry order; within each subband,
/// stripes of four rows, column-major inside a stripe.
pub fn stripe_scan(geom: &SubbandGeometry) -> Vec<ScanSite> {
    let mut sites = Vec::with_capacity(geom.num_samples());
    for (sb_idx, sb) in geom.subbands.iter().enumerate() {
        let n_stripes = sb.height.div_ceil(STRIPE_ROWS);
        for stripe in 0..n_stripes {
            let row0 = stripe * STRIPE_ROWS;
            let rows = STRIPE_ROWS.min(sb.height - row0);
            for col in 0..sb.width {
                for r in 0..rows {
                    let grid_index = (sb.y0 + row0 + r) * geom.width + sb.x0 + col;
                    sites.push(ScanSite {
                        grid_index,
                        subband: sb_idx,
                        stripe_row: r as u8,
                        stripe,
                    });
                }
            }
        }
    }
    sites
}

/// Just the permutation k -> grid index.
pub fn stripe_permutation(geom: &SubbandGeometry) -> Vec<usize> {
    stripe_scan(geom).into_iter().map(|s| s.grid_index).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn geometry_counts_and_tiling() {
        let g = SubbandGeometry::new(512, 512, 2).unwrap();
        assert_eq!(g.subbands.len(), 7);
        let g = SubbandGeometry::new(64, 64, 3).unwrap();
        assert_eq!(g.subbands.len(), 10);
        // disjoint tiling
        let mut covered = vec![false; 64 * 64];
        for sb in &g.subbands {
            for r in 0..sb.height {
                for c in 0..sb.width {
                    let i = (sb.y0 + r) * 64 + sb.x0 + c;
                    assert!(!covered[i]);
                    covered[i] = true;
                }
            }
        }
        assert!(covered.iter().all(|&c| c));
    }

    #[test]
    fn geometry_rejects_bad_dims() {
        assert!(SubbandGeometry::new(100, 64, 3).is_err());
        assert!(SubbandGeometry::new(4, 4, 3).is_err());
    }

    #[test]
    fn constant_image_has_no_detail() {
        let img = ImagePlane::new(16, 16, vec![128; 256]);
        let grid = forward_dwt(&img, 2, WaveletFilter::LeGall53).unwrap();
        for sb in grid.geometry.subbands.iter().skip(1) {
            for r in 0..sb.height {
                for c in 0..sb.width {
                    assert_eq!(grid.values[(sb.y0 + r) * 16 + sb.x0 + c], 0.0);
                }
            }
        }
    }

    #[test]
    fn roundtrip_53_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let samples: Vec<i32> = (0..16 * 16).map(|_| rng.gen_range(0..256)).collect();
            let img = ImagePlane::new(16, 16, samples);
            let grid = forward_dwt(&img, 2, WaveletFilter::LeGall53).unwrap();
            let back = inverse_dwt_image(&grid, WaveletFilter::LeGall53);
            assert_eq!(img, back);
        }
    }

    #[test]
    fn roundtrip_97_close() {
        let img = ImagePlane::synthetic(32, 32, 5);
        let grid = forward_dwt(&img, 2, WaveletFilter::Daubechies97).unwrap();
        let back = inverse_dwt(&grid, WaveletFilter::Daubechies97);
        for (a, b) in img.samples.iter().zip(back.iter()) {
            assert!((*a as f64 - b).abs() < 1e-9);
        }
    }

    #[test]
    fn linearity_of_97_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let geom = SubbandGeometry::new(8, 8, 1).unwrap();
        let a: Vec<f64> = (0..64).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let b: Vec<f64> = (0..64).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let mk = |v: Vec<f64>| CoeffGrid {
            geometry: geom.clone(),
            values: v,
        };
        let ia = inverse_dwt(&mk(a), WaveletFilter::Daubechies97);
        let ib = inverse_dwt(&mk(b), WaveletFilter::Daubechies97);
        let isum = inverse_dwt(&mk(sum), WaveletFilter::Daubechies97);
        for i in 0..64 {
            // one LEVEL_SHIFT cancels when comparing inverse(a+b) vs inverse(a)+inverse(b)
            assert!((isum[i] + 128.0 - ia[i] - ib[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_coeffs_give_level_shift() {
        let geom = SubbandGeometry::new(8, 8, 2).unwrap();
        let grid = CoeffGrid {
            geometry: geom,
            values: vec![0.0; 64],
        };
        let img = inverse_dwt(&grid, WaveletFilter::LeGall53);
        assert!(img.iter().all(|&v| v == 128.0));
    }

    #[test]
    fn scan_is_permutation() {
        let geom = SubbandGeometry::new(16, 16, 2).unwrap();
        let mut perm = stripe_permutation(&geom);
        assert_eq!(perm.len(), 256);
        perm.sort_unstable();
        assert!(perm.iter().enumerate().all(|(i, &p)| i == p));
    }

    #[test]
    fn scan_stripe_order_8x8() {
        // single 8x8 subband: first four indices are column 0 rows 0..3
        let geom = SubbandGeometry {
            levels: 1,
            width: 8,
            height: 8,
            subbands: vec![Subband {
                kind: BandKind::Ll,
                level: 1,
                x0: 0,
                y0: 0,
                width: 8,
                height: 8,
            }],
        };
        let sites = stripe_scan(&geom);
        let idx: Vec<usize> = sites.iter().map(|s| s.grid_index).collect();
        assert_eq!(&idx[..5], &[0, 8, 16, 24, 1]);
        assert_eq!(sites.iter().filter(|s| s.stripe == 1).count(), 32);
        // second stripe starts at row 4, column 0
        assert_eq!(idx[32], 4 * 8);
    }

    #[test]
    fn scan_single_column() {
        let geom = SubbandGeometry {
            levels: 1,
            width: 1,
            height: 4,
            subbands: vec![Subband {
                kind: BandKind::Ll,
                level: 1,
                x0: 0,
                y0: 0,
                width: 1,
                height: 4,
            }],
        };
        let perm = stripe_permutation(&geom);
        assert_eq!(perm, vec![0, 1, 2, 3]);
    }

    #[test]
    fn short_stripe_remainder() {
        // height 6: one full stripe of 4 rows, one short stripe of 2
        let geom = SubbandGeometry {
            levels: 1,
            width: 2,
            height: 6,
            subbands: vec![Subband {
                kind: BandKind::Ll,
                level: 1,
                x0: 0,
                y0: 0,
                width: 2,
                height: 6,
            }],
        };
        let sites = stripe_scan(&geom);
        assert_eq!(sites.len(), 12);
        assert_eq!(sites[8].stripe, 1);
        assert_eq!(sites[8].stripe_row, 0);
        assert_eq!(sites[9].stripe_row, 1);
    }
}

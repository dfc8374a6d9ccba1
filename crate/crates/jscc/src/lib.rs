//! Joint source-channel image codec.
//!
//! The encoder chain is: 2-D wavelet transform, per-subband sign/magnitude
//! scalar quantization into bit-planes, a piecewise-stationary conditional
//! Markov model over the stripe-scanned bit-planes, and per-plane linear
//! encoding with punctured tail-biting turbo codes. No entropy-coding stage
//! sits between the quantizer and the channel, so a handful of residual bit
//! errors after decoding perturbs the reconstruction only locally.
//!
//! The decoder runs one belief-propagation instance per bit-plane, built from
//! three BCJR engines (one source trellis, two tail-biting RCC trellises)
//! exchanging extrinsic LLRs, and reconstructs transform coefficients from the
//! posterior LLRs with the soft-bit MMSE formula.
//!
//! A context-driven binary arithmetic coder is included for the
//! compression-only study and for the separated (SSCC) baseline the
//! experiments compare against.

// indexed loops over parallel arrays are used deliberately throughout
#![allow(clippy::needless_range_loop)]

pub mod bcjr;
pub mod bitio;
pub mod channel;
pub mod context;
pub mod decode;
pub mod dwt;
pub mod entropy;
pub mod error;
pub mod gf2;
pub mod image;
pub mod library;
pub mod model;
pub mod pipeline;
pub mod quant;
pub mod sideband;
pub mod turbo;

pub use error::JsccError;

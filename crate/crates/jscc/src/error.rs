use thiserror::Error;

/// Error type shared across the codec.
#[derive(Debug, Error)]
pub enum JsccError {
    #[error("image dimensions {width}x{height} not divisible by 2^{levels}")]
    DimensionNotDivisible {
        width: usize,
        height: usize,
        levels: usize,
    },
    #[error("coefficient grid geometry does not match: {0}")]
    GeometryMismatch(String),
    #[error("a(D) is singular modulo 1 + D^{k}: 2^mu - 1 divides K")]
    SingularLength { k: usize },
    #[error("entropy {h} outside the library grid [{lo}, {hi}]")]
    EntropyOutOfGrid { h: f64, lo: f64, hi: f64 },
    #[error("malformed stream: {0}")]
    Malformed(String),
    #[error("stream exhausted while decoding")]
    StreamExhausted,
    #[error("sideband CRC check failed")]
    SidebandCrc,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, JsccError>;

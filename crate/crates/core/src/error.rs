use thiserror::Error;

use crate::dyadic::DyadicCube;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty domain")]
    EmptyDomain,
    #[error("not a proper subset: the shape covers its whole bounding box")]
    NotProperSubset,
    #[error("unsupported dimension {0} (supported: 1..={max})", max = crate::dyadic::MAX_DIM)]
    UnsupportedDimension(usize),
    #[error("resolution must be at least 1, got {0}")]
    InvalidResolution(i32),
    #[error("exponent must be < n (s = {s}, n = {n})")]
    ExponentNotBelowDimension { s: f64, n: usize },
    #[error("exponent must be positive (s = {0})")]
    ExponentNotPositive(f64),
    #[error("exponent out of range: p = {0} must satisfy 1 < p < inf")]
    ExponentOutOfRange(f64),
    #[error("center outside domain")]
    CenterOutsideDomain,
    #[error("no Whitney cube contains the John center")]
    CenterCubeMissing,
    #[error("sample unreachable from the John center (cell {0})")]
    SampleUnreachable(usize),
    #[error("chain construction failed at {terminal:?}: consecutive cubes {from:?} -> {to:?} have star overlap ratio {ratio}")]
    ChainConstructionFailed {
        terminal: DyadicCube,
        from: DyadicCube,
        to: DyadicCube,
        ratio: f64,
    },
    #[error("cube not contained in G")]
    CubeNotContained,
    #[error("no local partition found")]
    NoLocalPartition,
    #[error("f_G meaningless across components: domain is disconnected")]
    DisconnectedDomain,
    #[error("requires chain decomposition")]
    ChainsMissing,
    #[error("Sobolev exponent undefined: q = {q} must satisfy 1 <= q < n = {n}")]
    SobolevExponentUndefined { q: f64, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

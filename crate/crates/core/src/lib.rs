//! Harmonic analysis over F_p and F_p^2: the polynomial corner averaging
//! operator, its exponential-sum kernel, and numerical verifiers for the
//! Weil / Gauss / Bombieri style bounds that control it.
//!
//! Fourier convention (used everywhere):
//!
//! | direction | formula                                   | normalization |
//! |-----------|-------------------------------------------|---------------|
//! | forward   | `f^(z) = p^-dim * sum_x f(x) e_p(-x.z)`   | `1/p^dim`     |
//! | inverse   | `f(x)  = sum_z f^(z) e_p(x.z)`            | none          |
//!
//! `||.||_r` norms on the physical side are expectation-normalized;
//! frequency-side norms are plain `l^2`.

pub mod averaging;
pub mod bounds;
pub mod corners;
pub mod fp;
pub mod io;
pub mod kernel;
pub mod report;
pub mod rng;
pub mod transform;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not an odd prime in the supported range [3, 2^31)")]
    NotPrime(u64),
    #[error("residue 0 has no inverse mod {0}")]
    ZeroInverse(u64),
    #[error("invalid polynomial: {0}")]
    BadPoly(String),
    #[error("expected a {expected}-side grid, got {got}")]
    SideMismatch { expected: &'static str, got: &'static str },
    #[error("grid dimensions do not match: {0}")]
    DimensionMismatch(String),
    #[error("kernel table is already truncated")]
    AlreadyTruncated,
    #[error("kernel table does not match the operands: {0}")]
    KernelMismatch(String),
    #[error("shift must be nonzero")]
    ZeroShift,
    #[error("polynomial is not of the form a*y^2 + b*y with a != 0")]
    NotQuadratic,
    #[error("indices violate the nonzero constraints (m2, m2', m2+h2, m2'+h2 != 0)")]
    InadmissibleIndices,
    #[error("requires d1 < d2 (got d1={0}, d2={1})")]
    DegreeOrder(u64, u64),
    #[error("point does not lie on the leading-term variety (or is zero)")]
    PointNotOnVariety,
    #[error("function values must be real in [0,1]; offending entry {0}")]
    RangeViolation(usize),
    #[error("rational function reduces to a constant mod p")]
    DegenerateRational,
    #[error("density must lie in [0,1], got {0}")]
    BadDensity(f64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

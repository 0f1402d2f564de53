use num_complex::Complex64;
use thiserror::Error;

use crate::angle_arith::RationalAngle;

/// Errors raised by the exact angle machinery.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AngleError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse angle {0:?}: expected \"p/q\"")]
    Parse(String),
    #[error("multiplier must satisfy |m| >= 2, got {0}")]
    SmallMultiplier(i64),
    #[error("iterate exponents must satisfy a > b >= 0, got a={a}, b={b}")]
    ExponentOrder { a: u32, b: u32 },
    #[error(
        "invalid indices n={n}, k={k}: need n > k > 1 (the k = 1 sets are empty: \
         the critical point would have to be periodic)"
    )]
    InvalidIndices { n: u32, k: u32 },
    #[error("set of {0} angles is too large to enumerate in memory")]
    TooLarge(String),
    #[error("angle sets are not disjoint")]
    NotDisjoint,
    #[error("angles of a portrait set do not share one image under multiplication by {degree}")]
    ImageMismatch { degree: u32 },
    #[error("degenerate portrait for angle {theta}: preimages collide")]
    DegeneratePortrait {
        theta: RationalAngle,
        theta0: Vec<RationalAngle>,
    },
    #[error("empty input")]
    Empty,
}

/// Raised when an orbit leaves the working disk.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("orbit escaped at step {step} with modulus {modulus:e}")]
pub struct Escaped {
    pub step: usize,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RayError {
    #[error("invalid ray schedule: {0}")]
    InvalidSchedule(String),
    #[error("ray for angle {theta} did not reach the final potential (stalled at t={t_best:e})")]
    NotReached { theta: RationalAngle, t_best: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LandingError {
    #[error("Newton refinement diverged from seed {seed}")]
    NewtonDiverged { seed: Complex64 },
    #[error("ambiguous seed {seed}: two cycles tie for the target multiplier")]
    AmbiguousSeed { seed: Complex64 },
    #[error("invalid refinement indices n={n}, k={k}")]
    InvalidIndices { n: u32, k: u32 },
    #[error("cluster {cluster} has diameter {diameter:e} > 10 * epsilon ({epsilon:e})")]
    ChainingDetected {
        cluster: usize,
        diameter: f64,
        epsilon: f64,
    },
    #[error(transparent)]
    Ray(#[from] RayError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("normalizer must be positive")]
    BadNormalizer,
    #[error("measure is not normalized (total mass {0})")]
    NotNormalized(f64),
    #[error("only {landed} of {count} reference rays landed (need 90%)")]
    InsufficientLandings { landed: usize, count: usize },
    #[error("count must be at least 1")]
    EmptySample,
    #[error(transparent)]
    Ray(#[from] RayError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing header: {0}")]
    Header(String),
}

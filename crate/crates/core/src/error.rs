use thiserror::Error;

/// Errors raised by the library. Verdict failures in the experiment drivers
/// are not errors; they are reported through [`crate::experiments::Verdict`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("space would have {points} points, above the cap of {cap}")]
    TooManyPoints { points: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("`all` ball enumeration needs at most {cap} points, space has {points}")]
    FamilyTooLarge { points: usize, cap: usize },

    #[error("empty radius range [{floor}, {diameter}] for doubling measurement")]
    EmptyRadiusRange { floor: f64, diameter: f64 },

    #[error("delta {delta} out of range for {mode} mode")]
    DeltaOutOfRange { delta: f64, mode: &'static str },

    #[error("ball containment unsatisfiable with {systems} systems: ball at point {center} radius {radius}")]
    ContainmentUnsatisfiable { systems: usize, center: usize, radius: f64 },

    #[error("radius {radius} lies outside the level range")]
    RadiusOutOfRange { radius: f64 },

    #[error("no cube contains the ball at point {center} radius {radius}")]
    NoContainingCube { center: usize, radius: f64 },

    #[error("level underflow: level {level} has no ancestor {depth} levels up (k_min = {k_min})")]
    LevelUnderflow { level: i32, depth: i32, k_min: i32 },

    #[error("no gdp for cube (system {system}, level {level}, index {index})")]
    NoGdp { system: usize, level: i32, index: usize },

    #[error("lambda {lambda} is below S * w(Q0*) = {required}")]
    LambdaTooSmall { lambda: f64, required: f64 },

    #[error("infinite constant: {0}")]
    InfiniteConstant(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

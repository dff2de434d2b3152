use thiserror::Error;

/// Errors raised by the construction and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter point outside the chamber: {0}")]
    ChamberViolation(String),

    #[error("index {index} out of range for {n} components")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate interpolation abscissa at position {0}")]
    DuplicateNode(usize),

    #[error("step size underflow at arclength {arclength:.6e}")]
    StepUnderflow { arclength: f64 },

    #[error("phi vanishes at the evaluation point (movable singularity), |phi(q)| = {0:.3e}")]
    MovableSingularity(f64),

    #[error("power base {0} is within the branch-cut exclusion zone")]
    BranchCut(String),

    #[error("t-direction block is singular (condition number {condition:.3e})")]
    SingularTimeBlock { condition: f64 },

    #[error("rank deficiency: expected rank {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("sample point {0} lies on the singular set")]
    SingularSample(String),

    #[error("invalid jet: {0}")]
    InvalidJet(String),

    #[error("vanishing denominator: {0}")]
    VanishingDenominator(&'static str),

    #[error("theta truncation cannot reach tol {tol:.1e} within {max_terms} terms")]
    TruncationUnreachable { tol: f64, max_terms: usize },

    #[error("invalid elliptic configuration: {0}")]
    InvalidEllipticPoint(String),

    #[error("pole contact: {0}")]
    PoleContact(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

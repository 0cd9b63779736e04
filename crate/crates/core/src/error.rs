//! Error type shared by all kernel modules.

use thiserror::Error;

/// Errors raised by kernel operations.
///
/// Domain errors carry enough context to be reported verbatim by the CLI;
/// internal-consistency failures (shape checks, non-divisibility) indicate a
/// bug upstream and say so.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: n = {0} vs n = {1}")]
    DimensionMismatch(u32, u32),

    #[error("truncation mismatch: N = {0} vs N = {1}")]
    TruncationMismatch(u32, u32),

    #[error("series is not divisible by nu (term with nu^0 present): {0}")]
    NuDivision(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("matrix is not antisymmetric")]
    NotAntisymmetric,

    #[error("invalid group exponent: term {0} has fiber degree >= 1 but total degree {1} < 3, so ad does not raise degree")]
    InvalidExponent(String, i64),

    #[error("canonical commutation relations violated at degree {degree}: {detail}")]
    CcrViolation { degree: i64, detail: String },

    #[error("degree-1 part of the images is not symplectic")]
    NonSymplecticLinearPart,

    #[error("map is not symplectic: offending pairs {0:?}")]
    NonSymplectic(Vec<(usize, usize)>),

    #[error("section fails the parallel-shape check (not a Weyl continuation); this signals a product bug: {0}")]
    ShapeCheck(String),

    #[error("form degree overflow: operation undefined on forms of degree {0}")]
    FormDegreeOverflow(u32),

    #[error("connection is not flat: defect {0}")]
    NotFlat(String),

    #[error("fixed-point iteration stagnated at degree {degree}: {detail}")]
    Stagnation { degree: i64, detail: String },

    #[error("closed-form amplitude is singular near t = {t}")]
    Singularity { t: f64 },

    #[error("empty box: lower bound exceeds upper bound on axis {0}")]
    EmptyBox(usize),

    #[error("base map must be linear for this operation")]
    NonlinearBase,

    #[error("closedness audit failed (this is impossible for valid input and signals an upstream bug): {0}")]
    NotClosed(String),

    #[error("exponent has odd nu-powers in its scalar parts: {0}")]
    OddNuPower(String),

    #[error("expected a fiber-free series, found term {0}")]
    FiberTerms(String),

    #[error("expected a form-free series, found term {0}")]
    FormTerms(String),

    #[error("{0}")]
    Invalid(String),
}

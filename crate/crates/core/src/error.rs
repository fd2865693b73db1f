use thiserror::Error;

use crate::invariants::InvariantRecord;

/// Errors produced by mesh construction, field validation and invariant
/// computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh invariant violated: {0}")]
    MeshInvariant(String),

    #[error("vertex {vertex}: not a projection (idempotence defect {idempotence:.3e}, hermiticity defect {hermiticity:.3e})")]
    NotAProjection {
        vertex: usize,
        idempotence: f64,
        hermiticity: f64,
    },

    #[error("rank jump on component {component}: vertex {vertex} has rank {found}, expected {expected}")]
    RankJump {
        component: usize,
        vertex: usize,
        found: usize,
        expected: usize,
    },

    #[error("edge ({u},{v}): projection distance {distance:.6} is not < 1")]
    EdgeDiscontinuity { u: usize, v: usize, distance: f64 },

    #[error("vertex {vertex}: section leaves the fiber (defect {defect:.3e})")]
    NotASection { vertex: usize, defect: f64 },

    #[error("vertex {vertex}: isometry invariant violated ({what}, defect {defect:.3e})")]
    NotAnIsometry {
        vertex: usize,
        what: &'static str,
        defect: f64,
    },

    #[error("field does not stabilize at the corona: deviation {deviation:.3e} > tolerance {tolerance:.3e}")]
    NonStabilizing { deviation: f64, tolerance: f64 },

    #[error("per-level invariant records disagree: {records:?}")]
    Unstable { records: Vec<InvariantRecord> },

    #[error("argument lift failed: {0}")]
    LiftFailure(String),

    #[error("winding datum declares k={declared} but the samples wind {computed}")]
    WindingMismatch { declared: i64, computed: i64 },

    #[error("probe sections do not span the fiber at vertex {vertex} (smallest Gram eigenvalue {min_eigenvalue:.3e})")]
    SpanFailure { vertex: usize, min_eigenvalue: f64 },

    #[error("not a module morphism: {0}")]
    MorphismFailure(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bundle mismatch: {0}")]
    BundleMismatch(String),

    #[error("membership predicate violated: {0}")]
    Membership(String),

    #[error("kernel dimensions did not stabilize for truncations up to N={cap}")]
    KernelNotStabilizing { cap: usize },

    #[error("homotopy certificate construction failed: {0}")]
    CertificateFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Multipartite entanglement measures for qudit states.
//!
//! The crate provides the numerical machinery to quantify entanglement in
//! systems of `n` qudits with arbitrary per-factor dimensions:
//!
//! * [`tensor`] — dense complex linear algebra over multipartite Hilbert
//!   spaces: Kronecker products, partial trace and partial transpose, and a
//!   cyclic Jacobi eigensolver for Hermitian matrices.
//! * [`states`] — constructors for the state families used throughout the
//!   test corpus (Bell, GHZ, W, Smolin, two-qutrit line states, seeded random
//!   states) plus a textual state-spec format.
//! * [`entropy`] — linear and Renyi entropies; the canonical entropy used by
//!   all measures is Renyi order 2 to base 2.
//! * [`concurrence`] — enumeration of multi-factor flip operators, exact
//!   pure-state m-flip concurrences, the entropy decomposition identity, and
//!   spectral lower bounds for mixed states.
//! * [`roof`] — convex-roof upper bounds by derivative-free minimization over
//!   ensemble decompositions.
//! * [`measures`] — the separability-measure and physical-measure
//!   hierarchies, partition detection for pure states, the PPT oracle, and
//!   the Smolin-family dual diagnostic.

pub mod concurrence;
pub mod entropy;
pub mod measures;
pub mod roof;
pub mod states;
pub mod tensor;
pub mod tolerances;

pub use tensor::{ComplexMatrix, HilbertShape, MultiState, SubsystemSet};

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A Hilbert-space shape violated its invariants (factor dims, counts).
    #[error("invalid Hilbert shape: {0}")]
    InvalidShape(String),
    /// Matrix or vector dimensions do not line up for the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A 1-based factor index fell outside the state's factor range.
    #[error("factor index {index} out of range for {factors} factors")]
    IndexOutOfRange { index: usize, factors: usize },
    /// A subsystem set violated its invariants (empty, duplicates).
    #[error("invalid subsystem set: {0}")]
    InvalidSubsystemSet(String),
    /// An operation requiring a Hermitian matrix received a non-Hermitian one.
    #[error("matrix is not Hermitian: max |M - M^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    /// A matrix required to be positive semidefinite had a significantly
    /// negative eigenvalue.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    /// A pure amplitude vector was not normalized.
    #[error("state vector is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },
    /// A density matrix did not have unit trace.
    #[error("density matrix trace deviates from 1 by {deviation:.3e}")]
    TraceNotOne { deviation: f64 },
    /// An operation defined only for pure states received a mixed state.
    #[error("pure-state input required: {0}")]
    PureStateRequired(String),
    /// The iterative eigensolver failed to reach its convergence target.
    #[error("eigensolver failed to converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    /// A parametric superposition evaluated to the zero vector.
    #[error("zero-norm superposition for the requested parameters")]
    ZeroNorm,
    /// A parameter fell outside its documented domain.
    #[error("parameter out of domain: {0}")]
    InvalidParameter(String),
    /// The total dimension exceeded the configured safety cap.
    #[error("total dimension {total} exceeds the configured cap {cap}")]
    DimensionCap { total: usize, cap: usize },
    /// A textual state spec could not be parsed.
    #[error("state spec parse error at column {column}: {message}")]
    SpecParse { column: usize, message: String },
    /// A certified internal identity (the concurrence sum rule or an
    /// ensemble reconstruction) was violated, signalling a bug.
    #[error("certified identity violated: residual {residual:.3e}")]
    IdentityViolation { residual: f64 },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

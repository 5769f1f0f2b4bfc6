//! Centralized numerical tolerances.
//!
//! Every absolute or relative tolerance used by the crate lives here so the
//! relationships between them stay visible: construction-time invariants are
//! the tightest, spectral routines sit in the middle, and derived quantities
//! (bounds, optimizer results) get the loosest thresholds.

/// Maximum deviation of a pure state's 2-norm from 1 at construction.
pub const NORM_TOL: f64 = 1e-12;

/// Maximum entrywise deviation from Hermiticity at density construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Maximum deviation of a density matrix trace from 1 at construction.
pub const TRACE_TOL: f64 = 1e-12;

/// Most negative eigenvalue a matrix may show and still count as positive
/// semidefinite. Anything above this floor is treated as roundoff and
/// clipped to zero; anything below is an error.
pub const PSD_FLOOR: f64 = -1e-10;

/// Hermiticity tolerance accepted by the eigensolver (looser than the
/// construction tolerance because callers feed it derived matrices such as
/// partial transposes and operator products).
pub const EIG_HERMITIAN_TOL: f64 = 1e-10;

/// The Jacobi sweep stops once the off-diagonal Frobenius norm falls below
/// this fraction of the total Frobenius norm.
pub const JACOBI_REL_OFFDIAG: f64 = 1e-13;

/// Hard cap on Jacobi sweeps; the solver reports failure beyond this.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalue below which an ensemble weight is treated as exactly zero
/// when seeding or normalizing decompositions.
pub const WEIGHT_FLOOR: f64 = 1e-14;

/// Eigenvalue cutoff, relative to the trace, below which a density
/// eigenmode is treated as outside the support when a spectrum is computed
/// through a factorization of the state.
pub const SPECTRUM_SUPPORT_CUTOFF: f64 = 1e-14;

/// Maximum Frobenius reconstruction residual for a valid ensemble
/// decomposition of a density matrix.
pub const DECOMPOSITION_RECON_TOL: f64 = 1e-8;

/// Maximum residual allowed when certifying that squared concurrences with
/// a fixed target sum to twice the marginal impurity of that factor.
pub const DECOMPOSITION_IDENTITY_TOL: f64 = 1e-10;

/// Entropy value below which a subsystem counts as unentangled for the
/// Kronecker-delta gates in the measure hierarchies (CLI-configurable).
pub const DEFAULT_ENTROPY_EPS: f64 = 1e-9;

/// Eigenvalue threshold below which a partial transpose counts as negative.
pub const NPT_THRESHOLD: f64 = -1e-10;

/// Default cap on the total Hilbert-space dimension for operator
/// enumerations and scans.
pub const DEFAULT_MAX_TOTAL_DIM: usize = 256;

/// Default cap on the factor count for measures that enumerate all
/// subsystem sets.
pub const DEFAULT_MAX_FACTORS: usize = 8;

/// Maximum deviation allowed between the summed separability entries and
/// the total subsystem entropy of a pure input.
pub const REPORT_SUM_TOL: f64 = 1e-9;

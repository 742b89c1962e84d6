//! Numerical tolerances used across the crate.
//!
//! Construction-time checks sit two orders of magnitude above double
//! precision eigensolver noise at the supported dimensions (d <= 64);
//! comparison tolerances follow from what the eigensolver can deliver.

/// Max entrywise deviation from `M = M^dag` accepted at construction.
pub const HERMITICITY: f64 = 1e-10;

/// Dichotomy and commutation residual accepted for observable tuples.
pub const FEASIBILITY: f64 = 1e-8;

/// Absolute gap below which two eigenvalues are grouped into one eigenspace.
pub const EIG_GROUP: f64 = 1e-8;

/// Partial-sum slack in majorization comparisons.
pub const MAJORIZATION: f64 = 1e-9;

/// Outcome probabilities below this cut are treated as zero.
pub const OUTCOME_PROB_CUT: f64 = 1e-12;

/// Sign-update eigenvalues with |mu| below this tie threshold map to +1.
pub const SIGN_TIE: f64 = 1e-12;

/// Largest supported Hilbert space dimension.
pub const MAX_DIM: usize = 64;

/// Default guard on exhaustive assignment enumeration (2^N cases).
pub const ENUM_GUARD: usize = 24;

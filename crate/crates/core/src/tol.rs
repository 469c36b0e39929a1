//! Numerical tolerances used by the library, collected in one place so
//! tests and library code agree on every threshold.

/// Jacobi identity defect allowed on a basis triple.
pub const JACOBI_TOL: f64 = 1e-10;

/// Leibniz defect below which a linear map counts as a derivation.
pub const DERIVATION_TOL: f64 = 1e-10;

/// Relative singular-value cutoff for rank and span decisions.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Reconstruction error `|D - (H + E + N)|` allowed for a Jordan split.
pub const JORDAN_RECON_TOL: f64 = 1e-9;

/// Pairwise commutator norm allowed between Jordan components.
pub const JORDAN_COMMUTE_TOL: f64 = 1e-8;

/// Imaginary (resp. real) part allowed in the spectrum of the hyperbolic
/// (resp. elliptic) component, and the norm floor for classification.
pub const SPECTRAL_TYPE_TOL: f64 = 1e-8;

/// Agreement required between the production Jordan split and the
/// independent projector-based oracle.
pub const ORACLE_TOL: f64 = 1e-8;

/// Eigenvalue clustering radius, relative to the spectral radius. A
/// defective eigenvalue of multiplicity k is computed with an error on
/// the order of the k-th root of the working precision, so the radius
/// must sit well above that for the multiplicities in scope (k <= 3
/// reaches a few times 1e-5 under conditioning near 100).
pub const CLUSTER_REL_TOL: f64 = 5e-4;

/// Absolute floor for the clustering radius on nilpotent-scale spectra.
pub const CLUSTER_ABS_FLOOR: f64 = 1e-10;

/// Relative threshold separating eigenvalue signs in the grading,
/// scaled by `1 + spectral radius` of the hyperbolic part.
pub const LAYER_SIGN_REL_TOL: f64 = 1e-8;

/// Residual allowed in grading, closure, and invariance checks.
pub const GRADING_TOL: f64 = 1e-9;

/// Flow-law and homomorphism residual allowed at sampled points.
pub const FLOW_LAW_TOL: f64 = 1e-9;

/// Frobenius distance from the identity inside which the principal
/// matrix logarithm chart is trusted.
pub const LOG_WINDOW: f64 = 0.5;

/// Newton step norm at which the factorization iteration stops.
pub const NEWTON_STEP_TOL: f64 = 1e-12;

/// Iteration cap for the factorization Newton loop.
pub const NEWTON_MAX_ITER: usize = 50;

/// Residual allowed for a converged factorization.
pub const FACTORIZE_RESIDUAL_TOL: f64 = 1e-9;

/// Exactness required of chain translation: jump residuals of the
/// translated chain must match the original to this tolerance.
pub const TRANSLATE_TOL: f64 = 1e-12;

/// Residual inflation allowed when composing with an isometric
/// elliptic flow.
pub const ELLIPTIC_COMPOSE_TOL: f64 = 1e-10;

/// Residuals allowed in quotient-map checks: ideal closure, derivation
/// invariance, and projection/flow intertwining.
pub const QUOTIENT_TOL: f64 = 1e-9;

/// Component of a lifted chain's terminal correction allowed outside
/// the ideal.
pub const LIFT_OFF_IDEAL_TOL: f64 = 1e-6;

//! Periodic-orbit numerical laboratory for model hyperbolic flows.
//!
//! The crate computes resonance spectra of flow generators two independent
//! ways and cross-checks them at desk scale:
//!
//! * exact lattices read off closed-form product representations of the
//!   dynamical zeta function (suspensions of hyperbolic maps, Morse-Smale
//!   closed orbits and fixed points), and
//! * numerical localization: argument-principle counting on rectangles
//!   followed by damped Newton refinement on `zeta_1`.
//!
//! On top of the spectra it verifies the local trace formula (orbit sums
//! against resonance sums paired with compactly supported test functions)
//! and resonance-counting statistics (strip counts, growth-exponent fits).
//!
//! Module layout: [`orbit`] holds the per-orbit domain types and arithmetic,
//! [`systems`] generates orbit data for the model systems, [`zeta`] evaluates
//! zeta functions with truncation-tail bounds, [`resonance`] produces and
//! localizes resonance sets, [`trace`] and [`count`] carry the trace-formula
//! and counting checks, and [`quad`] is the shared quadrature toolbox.

pub mod count;
pub mod orbit;
pub mod quad;
pub mod resonance;
pub mod systems;
pub mod trace;
pub mod zeta;

/// Complex scalar used throughout; resonances live in the lambda plane with
/// decaying modes at `Im < 0`.
pub type C64 = num_complex::Complex64;

/// Separates genuine unit-modulus degeneracy from double-precision round-off
/// at iterate powers up to n ~ 50: an eigenvalue `e` is accepted only when
/// `|log|e|| >= HYPERBOLICITY_TOLERANCE`.
pub const HYPERBOLICITY_TOLERANCE: f64 = 1e-9;

/// Absolute tolerance in the lambda plane under which two resonance values
/// are considered the same lattice point.
pub const MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-hyperbolic eigenvalue {value} in {context}: modulus within tolerance of 1")]
    NonHyperbolic { value: C64, context: String },
    #[error("matrix not hyperbolic: |trace| = {trace_abs} <= 2")]
    NotHyperbolic { trace_abs: i64 },
    #[error("invalid orbit `{id}`: {reason}")]
    InvalidOrbit { id: String, reason: String },
    #[error("invalid fixed point `{id}`: {reason}")]
    InvalidFixedPoint { id: String, reason: String },
    #[error("term magnitudes grew for 3 consecutive classes at lambda = {lambda}; point lies below the convergence abscissa")]
    DivergentRegion { lambda: C64 },
    #[error("primitive orbit data required, but only period classes are present")]
    MissingPrimitiveData,
    #[error("insufficient data: {reason}")]
    InsufficientData { reason: String },
    #[error("map resonance at zero: logarithm undefined (non-resonant datum)")]
    ZeroMapResonance,
    #[error("a zero stays within clearance of the contour after {attempts} window perturbations")]
    ContourTooClose { attempts: u32 },
    #[error("winding integral {raw} fails the integer guard 0.1; truncation horizon likely insufficient")]
    NonIntegerResidue { raw: f64 },
    #[error("Newton refinement did not converge in {max_iterations} iterations from seed {seed}")]
    NoConvergence { seed: C64, max_iterations: u32 },
    #[error("|Im mu| = {im_abs} outside the quadrature accuracy domain |Im mu| <= {limit}")]
    AccuracyDomainExceeded { im_abs: f64, limit: f64 },
    #[error("orbit data horizon {horizon} shorter than required {required}")]
    HorizonTooShort { horizon: f64, required: f64 },
    #[error("resonance source validated on {validated}, query needs {needed}")]
    IncompleteSource { validated: String, needed: String },
    #[error("enumeration budget exceeded: projected {projected} items, budget {budget}")]
    BudgetExceeded { projected: u128, budget: u64 },
    #[error("localization incomplete: refined multiplicities sum to {located} but the window winding count is {counted}")]
    LocateVerification { located: i64, counted: i64 },
    #[error("invalid window: {reason}")]
    InvalidWindow { reason: String },
    #[error("invalid bump spec: {reason}")]
    InvalidBump { reason: String },
    #[error("invalid system spec: {reason}")]
    InvalidSystem { reason: String },
}

impl Error {
    /// True for failures of a numerical guard on otherwise valid input
    /// (the CLI maps these to exit code 2, validation errors to 1).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::DivergentRegion { .. }
                | Error::ContourTooClose { .. }
                | Error::NonIntegerResidue { .. }
                | Error::NoConvergence { .. }
                | Error::AccuracyDomainExceeded { .. }
                | Error::LocateVerification { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Numerical laboratory for self-similar blowup of co-rotational wave maps
//! from (1+d)-dimensional Minkowski space into the d-sphere, d ≥ 3 odd.
//!
//! The equation under study is the radial semilinear wave equation
//!
//! ```text
//! ψ_tt − ψ_rr − (d−1)/r ψ_r + (d−1)/2 sin(2ψ)/r² = 0,
//! ```
//!
//! which blows up along the explicit profile ψ^T(t,r) = 2 arctan(r/(√(d−2)(T−t))).
//! The crate evolves perturbations of this profile in similarity coordinates,
//! analyzes the spectrum of the linearized operator (shooting and collocation),
//! and certifies the closed-form identities that enter the stability argument.
//!
//! Module map:
//! - [`profiles`]: closed-form profile, potentials, gauge mode, nonlinearity.
//! - [`frames`]: cone ↔ cylinder coordinate changes and initial-data assembly.
//! - [`grid`]: parity-aware spectral grids, differentiation, weighted Sobolev norms.
//! - [`evolution`]: time stepping, gauge projection, vertex-time selection.
//! - [`spectrum`]: Frobenius series, connection Wronskian, eigenvalue search.
//! - [`appendix`]: nonanalyticity certificates and the supersymmetric cross-checks.
//! - [`acceptance`]: the executable verification suite behind `wmlab verify-all`.

pub mod acceptance;
pub mod appendix;
pub mod cli;
pub mod dimension;
pub mod error;
pub mod evolution;
pub mod exact;
pub mod frames;
pub mod grid;
pub mod numerics;
pub mod profiles;
pub mod spectrum;

pub use dimension::Dimension;
pub use error::Error;

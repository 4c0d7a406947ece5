//! Spectral machinery for finite-dimensional one-parameter semigroups
//! `T_t = exp(tZ)`: resolvents and their extensions, Riesz projectors,
//! Bromwich inversion with contour shifting, the decomposition
//! `T_t = P_t + Σ e^{t z_j} Π_j`, and numerical checks of the exponential
//! and rapid decay estimates for `P_t` together with their explicit
//! constants.

pub mod error;
pub mod linalg;
pub mod models;
pub mod params;
pub mod quadrature;
pub mod resolvent;
pub mod spectral;
pub mod verification;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use models::{build_model, evolve, op_norm, GeneratorModel, ModelDescriptor, NormKind, NormPair};
pub use params::AssumptionParams;

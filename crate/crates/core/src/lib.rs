//! Angular-momentum covariance matrices for two-mode bosonic fields and
//! collective spins.
//!
//! The crate simulates pure (and weighted-ensemble) states on a truncated
//! Fock space, builds the Stokes / Schwinger angular-momentum operators, and
//! implements the measurement schemes that determine the 3×3 covariance
//! matrix `M` of `(j₁, j₂, j₃)`:
//!
//! * [`spin`]: direct computation of `M` and its principal variances;
//! * [`su2`]: SU(2) elements, their 3×3 rotations, and Fock-space lifts;
//! * [`protocol`]: six-variance reconstruction through rotated single-component
//!   measurements (polarimetric and interferometric plans);
//! * [`multiport`]: the 12-port noisy simultaneous measurement and its exact
//!   vacuum-noise correction;
//! * [`atoms`]: Ramsey pulse compilation for two-level-atom ensembles;
//! * [`bright`]: the bright-limit (strong local oscillator) expansion;
//! * [`measure`]: seeded photon-count sampling and estimators.

pub mod atoms;
pub mod bright;
mod error;
pub mod fock;
pub mod linalg;
pub mod measure;
pub mod multiport;
pub mod protocol;
pub mod spin;
pub mod su2;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector (state amplitudes).
pub type CVector = nalgebra::DVector<C64>;

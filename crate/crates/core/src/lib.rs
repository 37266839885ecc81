//! Numerical machinery for mass-conserving self-similar profiles of the
//! Smoluchowski coagulation equation with product kernel (xy)^lambda,
//! 0 < lambda < 1/2.
//!
//! The rescaled profile solves a fixed-point integral equation which is
//! reformulated as a Volterra integro-differential system in logarithmic
//! size X = log x. This crate provides:
//!
//! - [`special`]: Beta/Gamma evaluation, the constant `H_lambda`, and the
//!   complex dispersion roots of `Psi_lambda`,
//! - [`profile`]: trajectory storage, the nonlocal operator `I[H]`, and the
//!   fixed-point / consistency residuals,
//! - [`shooting`]: forward marching of the Volterra system and bisection on
//!   the shooting amplitude `K`,
//! - [`regime`]: the small-amplitude ODE regime (energy `E`, period `T(E)`,
//!   adiabatic gain `Phi(E)`) and the intermediate valley ODE,
//! - [`peaks`]: explicit peak-regime solutions by numerical Laplace
//!   inversion on a wedge contour,
//! - [`matching`]: the cycle recursion `a_n -> a_{n+1}` with station
//!   positions and the composite asymptotic profile,
//! - [`adiabatic`]: within-cycle energy variation and the sandwich bound.
//!
//! The crate is `no_std` (with `alloc`); all operations are pure and safe
//! to call concurrently.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod adiabatic;
pub(crate) mod math;
pub mod error;
pub mod matching;
pub mod ode;
pub mod peaks;
pub mod profile;
pub mod quad;
pub mod regime;
pub mod shooting;
pub mod special;

pub use error::Error;
pub use num_complex::Complex64;
pub use special::ModelParams;

/// Convenient result alias used across the crate.
pub type Result<T> = core::result::Result<T, Error>;

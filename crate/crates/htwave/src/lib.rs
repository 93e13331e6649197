//! Numerical engine for the wave equation of the sub-Laplacian on
//! Heisenberg-type groups.
//!
//! The crate is organized bottom-up:
//! * [`group`]: group law, dilations, norms, H-type validation, `J_mu`;
//! * [`special`]: cutoff partitions, Bessel and Hermite functions, quadrature;
//! * [`phase`]: the phase calculus `tau cot tau`, `psi`, `phi`, `w`, the singular
//!   curve, corridors and the mixed-Hessian identity;
//! * [`spectral`]: partial Fourier transform, twisted convolution, Schrödinger
//!   kernels, functional calculus and Plancherel;
//! * [`subordination`]: the amplitudes `a_lambda`, `rho_lambda`;
//! * [`wave`]: the kernel pieces `K^0`, `K^{k,l}`, the A/B split, norms and scalings;
//! * [`multiplier`]: the quantity `A_R` of the multiplier condition;
//! * [`io`]: CSV/JSON/binary output helpers;
//! * [`checks`]: the acceptance criteria as runnable checks.

pub mod checks;
pub mod error;
pub mod fit;
pub mod group;
pub mod io;
pub mod multiplier;
pub mod phase;
pub mod special;
pub mod spectral;
pub mod subordination;
pub mod wave;

pub use error::{Error, Result};
pub use group::{GroupElement, HTypeGroup};
pub use num_complex::Complex64;

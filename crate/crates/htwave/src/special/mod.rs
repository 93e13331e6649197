//! Special functions: cutoffs, Bessel and Hermite functions, and quadrature.

pub mod bessel;
pub mod cutoff;
pub mod hermite;
pub mod quad;

pub use bessel::{bessel_script, bessel_split, BesselSplit};
pub use cutoff::{eta, zeta, CutoffFamily, CutoffKind};
pub use hermite::{hermite, hermite_rescaled};
pub use quad::{oscillatory_quad, QuadOptions, QuadResult};

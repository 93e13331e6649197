//! Spectral calculus on the horizontal layer: grids, the partial Fourier transform
//! along the center, twisted convolution, the twisted Schrödinger group and the
//! joint functional calculus of `(L, U)`.

pub mod calculus;
pub mod fourier;
pub mod grid;
pub mod schrodinger;
pub mod twisted;

pub use calculus::{functional_calculus_kernel, functional_calculus_slice, plancherel_check, PlancherelReport};
pub use fourier::{inverse_partial_ft_center, partial_ft_center, partial_ft_center_with, FtOptions};
pub use grid::{Axis, CentralDomain, GridFunction};
pub use schrodinger::{
    gamma_fft_check, schrodinger_evolve, schrodinger_gamma, schrodinger_gamma_hat, GammaFftCheck, HermiteExpansion,
    SchrodingerKernel,
};
pub use twisted::{twisted_convolve, twisted_convolve_at, twisted_convolve_direct, twisted_convolve_fft};

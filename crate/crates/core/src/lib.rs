//! IMEX Runge-Kutta schemes for linear hyperbolic relaxation systems.
//!
//! - [`densemat`]: small dense matrix kernels.
//! - [`tableaux`]: double Butcher tableaux, order conditions and certificates.
//! - [`relaxsys`]: relaxation systems and structural stability checks.
//! - [`spectral`]: Fourier-Galerkin representation.
//! - [`stepper`]: per-mode IMEX stepping and the exact exponential oracle.
//! - [`lab`]: convergence studies and CSV output.

pub mod densemat;
pub mod lab;
pub mod relaxsys;
pub mod spectral;
pub mod stepper;
pub mod tableaux;

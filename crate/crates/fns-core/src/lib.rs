//! Numerical laboratory for mild solutions of the fractional incompressible
//! Navier-Stokes (and MHD) equations on a periodic box.
//!
//! The crate provides, bottom up:
//!
//! * [`grid`], [`fft`], [`field`] — periodic pseudo-spectral representation of
//!   real fields with Hermitian-symmetric Fourier coefficients;
//! * [`operators`] — fractional Laplacian symbol `|xi|^alpha`, Leray projection,
//!   Riesz transforms, dealiased advection `div(u (x) v)`;
//! * [`kernels`] — fractional heat semigroup `e^{-t|xi|^alpha}`, numerical
//!   `H^{-s}` distances between fractional and classical heat kernels, and
//!   two-sided linear-rate certification in `(2 - alpha)`;
//! * [`existence`] — closed-form local existence times and their uniform-in-alpha
//!   floor;
//! * [`solver`] — per-step Picard (Duhamel) and ETD-RK2 time integration of the
//!   mild formulation, with pressure recovery and energy/divergence diagnostics;
//! * [`norms`] — sup, `L^2`, `H^s`, `H^{-s}`, discrete BMO and mixed
//!   `L^p_t L^q_x` trajectory norms;
//! * [`fit`], [`lab`] — initial-data families with prescribed data rate kappa,
//!   alpha-sweeps against the alpha = 2 reference, and log-log rate fits testing
//!   the `min(1, kappa)` rate-competition law.

pub mod error;
pub mod existence;
pub mod fft;
pub mod field;
pub mod fit;
pub mod grid;
pub mod kernels;
pub mod lab;
pub mod norms;
pub mod operators;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use existence::{existence_time, existence_time_mhd, uniform_time_floor};
pub use field::SpectralField;
pub use grid::GridSpec;
pub use kernels::SemigroupMultiplier;
pub use norms::NormSpec;
pub use operators::FractionalSymbol;
pub use quadrature::QuadratureConfig;
pub use solver::{solve_mhd, solve_ns, SolveRecord, SolverConfig};

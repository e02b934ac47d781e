//! Spectral renormalization group on truncated bosonic Fock spaces.
//!
//! The crate follows one Hamiltonian `H(w)` through repeated smooth
//! Feshbach-Schur decimations and dilations, both at the level of integral
//! kernels and as explicit matrices, and compares the two.

pub mod cli;
pub mod eigensolve;
pub mod error;
pub mod feshbach;
pub mod fock;
pub mod kernels;
pub mod linalg;
pub mod rgflow;
pub mod wick;
pub mod scalar;

pub use error::{Result, SrgError};
pub use scalar::Real;

pub type RadialGrid = kernels::RadialGrid<f64>;
pub type Kernel = kernels::Kernel<f64>;
pub type KernelChain = kernels::KernelChain<f64>;
pub type BanachParams = kernels::BanachParams<f64>;
pub type Polydisc = kernels::Polydisc<f64>;

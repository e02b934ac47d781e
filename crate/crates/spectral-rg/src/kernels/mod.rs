//! Kernel space: sampled integral kernels `w_{m,n}`, their weighted norms,
//! the scaling map and the smooth cutoff.

mod chain;
mod cutoff;
mod grid;
pub mod io;
mod kernel;

pub use chain::{BanachParams, KernelChain, Polydisc, PolydiscStats};
pub use cutoff::{c_chi, chi1, chi1_derivative, chi1_derivative_sup, chibar1, cutoff_chi, cutoff_chibar};
pub use grid::{RStencil, RadialGrid};
pub use kernel::{permutations, Kernel};

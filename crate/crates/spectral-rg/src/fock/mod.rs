//! Truncated bosonic Fock space over a geometric mode set, ladder
//! operators, and assembly of `H(w)` as a dense matrix.

pub(crate) mod assemble;
pub mod io;
mod modes;
mod space;

use num_complex::Complex64 as c64;

pub use assemble::{
    assemble_hamiltonian, assemble_monomial, c_quad, cutoff_diagonal, operator_bound_check, pull_through_check,
    sampled_sup, sandwich_bound_check, BoundReport,
};
pub use modes::ModeSet;
pub use space::{fock_dim, FockSpace, DEFAULT_DIM_CAP};

use crate::error::Result;
use crate::linalg::{self, CMatrix, CVector};

/// Every eigenvalue of `m`, sorted by real then imaginary part. Hermitian
/// input goes through the Hermitian solver and comes back exactly real.
pub fn dense_spectrum(m: &CMatrix) -> Result<Vec<c64>> {
    let mut v: Vec<c64> = if linalg::is_hermitian(m, 1e-14) {
        linalg::eigvalsh(m)?.into_iter().map(linalg::c).collect()
    } else {
        linalg::eigvals(m)?
    };
    linalg::sort_spectrum(&mut v);
    Ok(v)
}

/// Lowest eigenpair of a Hermitian matrix.
pub fn ground_state(m: &CMatrix) -> Result<(f64, CVector)> {
    let (e, v) = linalg::eigh(m)?;
    Ok((e[0], v.column(0).to_owned()))
}

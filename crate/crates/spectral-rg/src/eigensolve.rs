//! Eigenvector of `H` from a converged flow: the dilation `Gamma_rho`, the
//! maps `Q^(n)` of every step and the vectors
//!
//! ```text
//! Psi_k = Q^(0) Gamma* Q^(1) Gamma* ... Gamma* Q^(k-1) Omega
//! ```
//!
//! with their residuals `||(H - E) Psi_k||`.

use std::io::Write;

use num_complex::Complex64 as c64;
use serde::Serialize;

use crate::error::{Result, SrgError};
use crate::feshbach::{FeshbachPair, Partition};
use crate::fock::{assemble_hamiltonian, FockSpace};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::rgflow::{shifted, split_unstable, FlowResult, RGConfig};
use crate::KernelChain;

/// Shell relabeling `i -> i - 1` on occupation vectors, with its adjoint.
///
/// States occupying mode 0 have no image and map to zero, and so do states
/// that would need a mode below the last one.
pub fn gamma_dilation(fock: &FockSpace, rho: f64) -> Result<(CMatrix, CMatrix)> {
    let modes = fock.modes();
    if (modes.rho() - rho).abs() > 1e-12 * rho {
        return Err(SrgError::Domain(format!("mode grid ratio {} does not match rho = {rho}", modes.rho())));
    }
    let g = modes.len();
    let dim = fock.dim();
    let mut gamma = CMatrix::zeros((dim, dim));
    let mut occ = vec![0u8; g];
    for b in 0..dim {
        let s = fock.state(b);
        if s[0] != 0 {
            continue;
        }
        occ[..g - 1].copy_from_slice(&s[1..]);
        occ[g - 1] = 0;
        let t = fock.index_of(&occ).expect("shift preserves the boson number");
        gamma[[t, b]] = c(1.0);
    }
    let star = linalg::adjoint(&gamma);
    Ok((gamma, star))
}

/// `Gamma* v` without forming the matrix.
fn gamma_star_apply(fock: &FockSpace, v: &CVector) -> CVector {
    let g = fock.modes().len();
    let mut out = CVector::zeros(fock.dim());
    let mut occ = vec![0u8; g];
    for (b, z) in v.iter().enumerate() {
        if *z == c(0.0) {
            continue;
        }
        let s = fock.state(b);
        if s[g - 1] != 0 {
            continue;
        }
        occ[0] = 0;
        occ[1..].copy_from_slice(&s[..g - 1]);
        out[fock.index_of(&occ).expect("shift preserves the boson number")] += *z;
    }
    out
}

/// Feshbach pair of `H(w)` for the partition `chi_rho(H_f)` with
/// `T0 = w00(H_f)`.
pub fn step_pair(chain: &KernelChain, fock: &FockSpace, rho: f64) -> Result<FeshbachPair> {
    let h = assemble_hamiltonian(chain, fock, 1.0)?;
    let w00 = chain.w00();
    let t0 = fock.function_of_hf(|e| w00.eval_nodes(chain.grid(), e, &[]));
    FeshbachPair::new(h, t0, Partition::fock_cutoff(fock, rho)?)
}

/// `Q^(n)` for every chain.
pub fn q_chain(chains: &[KernelChain], fock: &FockSpace, cfg: &RGConfig) -> Result<Vec<CMatrix>> {
    chains.iter().map(|ch| Ok(step_pair(ch, fock, cfg.rho)?.q())).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub k: usize,
    pub residual: f64,
    pub bound_2gamma: f64,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// `Psi_0 .. Psi_kmax`, unnormalized.
    pub psi: Vec<CVector>,
    /// `||H^(0) Psi_k||`.
    pub residuals: Vec<f64>,
    /// `rho^k ||H^(k) Omega||`.
    pub telescoped: Vec<f64>,
    /// Measured `||w_1||` of `H^(k)`.
    pub gamma: Vec<f64>,
    /// `||Psi_{k+1} - Psi_k||`.
    pub increments: Vec<f64>,
    /// `(16 gamma_k / rho) prod_{j<k} (1 + 16 gamma_j / rho)`.
    pub increment_bounds: Vec<f64>,
    /// `(32 gamma_0 / rho) exp(32 gamma_0 / rho)`.
    pub limit_bound: f64,
    /// `H^(0) = H - E` with `E` from the flow.
    pub h0: CMatrix,
    pub energy: c64,
}

impl EigenResult {
    pub fn last(&self) -> &CVector {
        self.psi.last().expect("Psi_0 is always present")
    }

    /// The last vector, normalized.
    pub fn normalized(&self) -> CVector {
        let v = self.last();
        v.mapv(|z| z / linalg::vec_norm(v))
    }

    pub fn distance_from_vacuum(&self) -> f64 {
        let mut d = self.last().clone();
        d[0] -= c(1.0);
        linalg::vec_norm(&d)
    }

    /// `||Psi|| < 1/2`: the construction lost the vector.
    pub fn collapsed(&self) -> bool {
        linalg::vec_norm(self.last()) < 0.5
    }

    pub fn rows(&self) -> Vec<ResidualRow> {
        self.residuals
            .iter()
            .enumerate()
            .map(|(k, &r)| ResidualRow { k, residual: r, bound_2gamma: 2.0 * self.gamma[k] })
            .collect()
    }

    pub fn write_residuals<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row).map_err(|e| SrgError::Parse(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds `Psi_0 .. Psi_kmax` for `chain` from its flow. `H^(0)` is
/// `H_s - e_N` and `H^(j)` its `j`-th renormalization as stored in `flow`.
pub fn eigenvector_sequence(
    chain: &KernelChain,
    flow: &FlowResult,
    fock: &FockSpace,
    cfg: &RGConfig,
    k_max: usize,
) -> Result<EigenResult> {
    if k_max > flow.chains.len() {
        return Err(SrgError::InvalidArgument(format!(
            "k_max = {k_max} needs {k_max} renormalized chains, the flow has {}",
            flow.chains.len()
        )));
    }
    gamma_dilation(fock, cfg.rho)?;
    let (_, chain_s) = split_unstable(chain);
    let mut steps = vec![shifted(&chain_s, flow.e_s)];
    steps.extend(flow.chains.iter().take(k_max).cloned());

    let h0 = assemble_hamiltonian(&steps[0], fock, 1.0)?;
    let omega = fock.vacuum();
    let gamma: Vec<f64> = steps.iter().map(|s| s.w1_norm()).collect();
    let mut telescoped = Vec::with_capacity(k_max + 1);
    for (k, s) in steps.iter().enumerate() {
        let h = assemble_hamiltonian(s, fock, 1.0)?;
        telescoped.push(cfg.rho.powi(k as i32) * linalg::vec_norm(&h.dot(&omega)));
    }
    let qs = q_chain(&steps[..k_max], fock, cfg)?;

    let mut psi = vec![omega.clone()];
    for k in 1..=k_max {
        let mut v = qs[k - 1].dot(&omega);
        for j in (0..k - 1).rev() {
            v = qs[j].dot(&gamma_star_apply(fock, &v));
        }
        psi.push(v);
    }
    let residuals = psi.iter().map(|v| linalg::vec_norm(&h0.dot(v))).collect();
    let increments = psi.windows(2).map(|w| linalg::vec_norm(&(&w[1] - &w[0]))).collect();
    let mut increment_bounds = Vec::with_capacity(k_max);
    let mut prod = 1.0;
    for &gk in gamma.iter().take(k_max) {
        let a = 16.0 * gk / cfg.rho;
        increment_bounds.push(a * prod);
        prod *= 1.0 + a;
    }
    let a0 = 32.0 * gamma[0] / cfg.rho;
    Ok(EigenResult {
        psi,
        residuals,
        telescoped,
        gamma,
        increments,
        increment_bounds,
        limit_bound: a0 * a0.exp(),
        h0,
        energy: flow.energy(),
    })
}

/// Relative Frobenius distance between `H(R_rho w)`, assembled from the
/// renormalized kernels, and `rho^{-1} Gamma F_rho(H(w)) Gamma*`, on the
/// states with at most `max_bosons` bosons and the last mode empty.
pub fn kernel_matrix_discrepancy(
    chain: &KernelChain,
    renormalized: &KernelChain,
    fock: &FockSpace,
    rho: f64,
    max_bosons: usize,
) -> Result<f64> {
    let (g, gs) = gamma_dilation(fock, rho)?;
    let f = step_pair(chain, fock, rho)?.feshbach();
    let m = g.dot(&f).dot(&gs).mapv(|z| z / rho);
    let h = assemble_hamiltonian(renormalized, fock, 1.0)?;
    let last = fock.modes().len() - 1;
    let sector: Vec<usize> =
        (0..fock.dim()).filter(|&b| fock.number(b) <= max_bosons && fock.state(b)[last] == 0).collect();
    let (mut diff, mut norm) = (0.0, 0.0);
    for &i in &sector {
        for &j in &sector {
            diff += (h[[i, j]] - m[[i, j]]).norm_sqr();
            norm += m[[i, j]].norm_sqr();
        }
    }
    Ok((diff / norm).sqrt())
}

/// `|<a, b>| / (||a|| ||b||)`.
pub fn overlap(a: &CVector, b: &CVector) -> f64 {
    let dot: c64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    dot.norm() / (linalg::vec_norm(a) * linalg::vec_norm(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ModeSet;

    #[test]
    fn dilation_shifts_shells_and_fixes_the_vacuum() {
        let modes = ModeSet::new(4, 0.5, 1.0).unwrap();
        let fock = FockSpace::new(modes, 2).unwrap();
        let (g, gs) = gamma_dilation(&fock, 0.5).unwrap();
        assert_eq!(g.column(0)[0], c(1.0));
        let one = fock.index_of(&[0, 1, 0, 0]).unwrap();
        let target = fock.index_of(&[1, 0, 0, 0]).unwrap();
        assert_eq!(g[[target, one]], c(1.0));
        let v = CVector::from_shape_fn(fock.dim(), |i| c64::new(i as f64, 1.0 - i as f64));
        let d = gamma_star_apply(&fock, &v) - gs.dot(&v);
        assert_eq!(linalg::vec_norm(&d), 0.0);
        assert!(gamma_dilation(&fock, 0.4).is_err());
    }
}

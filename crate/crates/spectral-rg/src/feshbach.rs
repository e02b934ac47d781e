//! Smooth Feshbach-Schur map on dense matrices.
//!
//! For `H = T0 + W` and a partition `chi^2 + chibar^2 = 1` commuting with `T0`:
//!
//! ```text
//! F   = T0 + chi W chi - chi W chibar H_bar^{-1} chibar W chi
//! Q   = chi - chibar H_bar^{-1} chibar W chi
//! Q#  = chi - chi W chibar H_bar^{-1} chibar
//! H_bar = T0 + chibar W chibar,  inverted on Ran chibar
//! ```

use num_complex::Complex64 as c64;

use crate::error::{Result, SrgError};
use crate::fock::{assemble_hamiltonian, cutoff_diagonal, FockSpace};
use crate::kernels::PolydiscStats;
use crate::linalg::{self, adjoint, c, CMatrix};
use crate::{KernelChain, Polydisc};

/// Eigenvalues of `chi`/`chibar` below this count as zero when building
/// range bases.
pub const RANGE_THRESHOLD: f64 = 1e-10;
/// The complementary block must have `sigma_min > INVERTIBILITY * ||H||`.
pub const INVERTIBILITY: f64 = 1e-10;
/// Singular values below `RANK * ||H||` count towards the kernel.
pub const RANK: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Partition {
    chi: CMatrix,
    chibar: CMatrix,
}

impl Partition {
    pub fn new(chi: CMatrix, chibar: CMatrix) -> Result<Self> {
        let n = chi.nrows();
        if chi.dim() != (n, n) || chibar.dim() != (n, n) {
            return Err(SrgError::Shape("partition matrices must be square and equal in size".into()));
        }
        for (name, m) in [("chi", &chi), ("chibar", &chibar)] {
            if !linalg::is_hermitian(m, 1e-12) {
                return Err(SrgError::InvalidArgument(format!("{name} is not Hermitian")));
            }
        }
        let sum = chi.dot(&chi) + chibar.dot(&chibar);
        let dev = linalg::max_abs(&(sum - CMatrix::eye(n)));
        if dev > 1e-12 {
            return Err(SrgError::InvalidArgument(format!("chi^2 + chibar^2 deviates from 1 by {dev:.3e}")));
        }
        if linalg::max_abs(&chi) == 0.0 {
            return Err(SrgError::InvalidArgument("chi vanishes".into()));
        }
        for (name, m) in [("chi", &chi), ("chibar", &chibar)] {
            let e = linalg::eigvalsh(m)?;
            if e.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
                return Err(SrgError::InvalidArgument(format!("{name} is not between 0 and 1")));
            }
        }
        Ok(Self { chi, chibar })
    }

    /// Diagonal partition with `chibar = sqrt(1 - chi^2)`.
    pub fn from_diagonal(chi: &[f64]) -> Result<Self> {
        let cd: Vec<c64> = chi.iter().map(|&x| c(x)).collect();
        let cb: Vec<c64> = chi.iter().map(|&x| c((1.0 - x * x).max(0.0).sqrt())).collect();
        Self::new(linalg::diag(&cd), linalg::diag(&cb))
    }

    /// `chi_rho(H_f)` on a Fock space.
    pub fn fock_cutoff(fock: &FockSpace, rho: f64) -> Result<Self> {
        Self::new(cutoff_diagonal(fock, rho, false), cutoff_diagonal(fock, rho, true))
    }

    pub fn chi(&self) -> &CMatrix {
        &self.chi
    }

    pub fn chibar(&self) -> &CMatrix {
        &self.chibar
    }

    pub fn dim(&self) -> usize {
        self.chi.nrows()
    }
}

/// A validated Feshbach pair with the complementary resolvent precomputed.
#[derive(Clone, Debug)]
pub struct FeshbachPair {
    h: CMatrix,
    t0: CMatrix,
    w: CMatrix,
    part: Partition,
    h_norm: f64,
    bar_basis: CMatrix,
    bar_inv: CMatrix,
    bar_smin: f64,
    rbar: CMatrix,
}

impl FeshbachPair {
    pub fn new(h: CMatrix, t0: CMatrix, part: Partition) -> Result<Self> {
        let n = part.dim();
        if h.dim() != (n, n) || t0.dim() != (n, n) {
            return Err(SrgError::Shape(format!("H and T0 must be {n}x{n}")));
        }
        let scale = linalg::max_abs(&t0).max(1.0);
        for (name, x) in [("chi", part.chi()), ("chibar", part.chibar())] {
            let comm = t0.dot(x) - x.dot(&t0);
            if linalg::max_abs(&comm) > 1e-12 * scale {
                return Err(SrgError::InvalidArgument(format!("T0 does not commute with {name}")));
            }
        }
        let w = &h - &t0;
        let h_norm = linalg::spectral_norm(&h)?;
        let bar_basis = linalg::range_basis(part.chibar(), RANGE_THRESHOLD)?;
        let hbar = &t0 + &part.chibar().dot(&w).dot(part.chibar());
        let block = adjoint(&bar_basis).dot(&hbar).dot(&bar_basis);
        let threshold = INVERTIBILITY * h_norm;
        let (bar_smin, bar_inv) = if block.is_empty() {
            (f64::INFINITY, block.clone())
        } else {
            let smin = *linalg::singular_values(&block)?.last().unwrap();
            if !(smin > threshold) {
                return Err(SrgError::NotFeshbachPair { smin, threshold });
            }
            (smin, linalg::inverse(&block)?)
        };
        let rbar = part.chibar().dot(&bar_basis).dot(&bar_inv).dot(&adjoint(&bar_basis)).dot(part.chibar());
        Ok(Self { h, t0, w, part, h_norm, bar_basis, bar_inv, bar_smin, rbar })
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn t0(&self) -> &CMatrix {
        &self.t0
    }

    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn partition(&self) -> &Partition {
        &self.part
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm
    }

    /// Smallest singular value of `H_bar` on `Ran chibar`.
    pub fn complement_smin(&self) -> f64 {
        self.bar_smin
    }

    /// `H_bar^{-1}` on `Ran chibar`, in the range basis.
    pub fn complement_inverse(&self) -> &CMatrix {
        &self.bar_inv
    }

    pub fn complement_basis(&self) -> &CMatrix {
        &self.bar_basis
    }

    /// `chibar H_bar^{-1} chibar`.
    pub fn rbar(&self) -> &CMatrix {
        &self.rbar
    }

    /// `F(H)` as a full-size matrix; it vanishes off `Ran chi`.
    pub fn feshbach(&self) -> CMatrix {
        let chi = self.part.chi();
        let chw = chi.dot(&self.w);
        &self.t0 + &chw.dot(chi) - chw.dot(&self.rbar).dot(&self.w).dot(chi)
    }

    pub fn q(&self) -> CMatrix {
        let chi = self.part.chi();
        chi - &self.rbar.dot(&self.w).dot(chi)
    }

    pub fn q_sharp(&self) -> CMatrix {
        let chi = self.part.chi();
        chi - &chi.dot(&self.w).dot(&self.rbar)
    }

    /// Orthonormal basis of `Ran chi`.
    pub fn range_basis(&self) -> Result<CMatrix> {
        linalg::range_basis(self.part.chi(), RANGE_THRESHOLD)
    }

    /// `F` compressed to `Ran chi`.
    pub fn feshbach_on_range(&self) -> Result<(CMatrix, CMatrix)> {
        let v = self.range_basis()?;
        let f = adjoint(&v).dot(&self.feshbach()).dot(&v);
        Ok((v, f))
    }
}

/// `Q F^{-1} Q# + chibar H_bar^{-1} chibar`, with `F^{-1}` taken on `Ran chi`.
pub fn resolvent_reconstruct(pair: &FeshbachPair) -> Result<CMatrix> {
    let (v, f) = pair.feshbach_on_range()?;
    let finv = v.dot(&linalg::inverse(&f)?).dot(&adjoint(&v));
    Ok(pair.q().dot(&finv).dot(&pair.q_sharp()) + pair.rbar())
}

/// `||H Q - chi F||` restricted to `Ran chi`, relative to `||H||`.
pub fn intertwining_residual(pair: &FeshbachPair) -> Result<f64> {
    let v = pair.range_basis()?;
    let lhs = pair.h().dot(&pair.q()).dot(&v);
    let rhs = pair.partition().chi().dot(&pair.feshbach()).dot(&v);
    Ok(linalg::spectral_norm(&(lhs - rhs))? / pair.h_norm().max(f64::MIN_POSITIVE))
}

/// Plain Schur complement `H11 - H12 H22^{-1} H21` over the first `k`
/// basis vectors.
pub fn schur_complement(h: &CMatrix, k: usize) -> Result<CMatrix> {
    use ndarray::s;
    let n = h.nrows();
    if k == 0 || k > n {
        return Err(SrgError::InvalidArgument(format!("block size {k} out of range for dim {n}")));
    }
    let h11 = h.slice(s![..k, ..k]).to_owned();
    if k == n {
        return Ok(h11);
    }
    let h12 = h.slice(s![..k, k..]).to_owned();
    let h21 = h.slice(s![k.., ..k]).to_owned();
    let h22 = h.slice(s![k.., k..]).to_owned();
    Ok(h11 - h12.dot(&linalg::inverse(&h22)?).dot(&h21))
}

#[derive(Clone, Debug)]
pub struct IsospectralityReport {
    pub smin_h: f64,
    pub smin_f: f64,
    pub threshold: f64,
    pub dim_ker_h: usize,
    pub dim_ker_f: usize,
    /// `max ||F chi psi|| / ||H||` over numerical null vectors `psi` of `H`.
    pub forward_residual: f64,
    /// `max ||psi - Q chi psi||` over the same vectors.
    pub reconstruction_residual: f64,
    /// `max ||H Q phi|| / ||H||` over numerical null vectors `phi` of `F`.
    pub backward_residual: f64,
}

impl IsospectralityReport {
    pub fn invertibility_agrees(&self) -> bool {
        (self.smin_h > self.threshold) == (self.smin_f > self.threshold)
    }

    pub fn consistent(&self, tol: f64) -> bool {
        self.invertibility_agrees()
            && self.dim_ker_h == self.dim_ker_f
            && self.forward_residual <= tol
            && self.reconstruction_residual <= tol
            && self.backward_residual <= tol
    }
}

/// Compares invertibility, kernel dimensions and the kernel maps
/// `psi -> chi psi` and `phi -> Q phi` between `H` and `F(H)`.
pub fn isospectrality_suite(pair: &FeshbachPair) -> Result<IsospectralityReport> {
    let threshold = RANK * pair.h_norm();
    let (_, sh, vh) = linalg::svd_full(pair.h())?;
    let (v, f) = pair.feshbach_on_range()?;
    let (_, sf, vf) = linalg::svd_full(&f)?;
    let dim_ker_h = sh.iter().filter(|&&s| s <= threshold).count();
    let dim_ker_f = sf.iter().filter(|&&s| s <= threshold).count();
    let chi = pair.partition().chi();
    let q = pair.q();
    let full_f = pair.feshbach();
    let hn = pair.h_norm().max(f64::MIN_POSITIVE);
    let (mut fwd, mut rec, mut bwd) = (0.0f64, 0.0f64, 0.0f64);
    for (j, _) in sh.iter().enumerate().filter(|(_, &s)| s <= threshold) {
        let psi = vh.column(j).to_owned();
        let cpsi = chi.dot(&psi);
        fwd = fwd.max(linalg::vec_norm(&full_f.dot(&cpsi)) / hn);
        rec = rec.max(linalg::vec_norm(&(&psi - &q.dot(&cpsi))));
    }
    for (j, _) in sf.iter().enumerate().filter(|(_, &s)| s <= threshold) {
        let phi = v.dot(&vf.column(j));
        let qphi = q.dot(&phi);
        let scale = linalg::vec_norm(&qphi).max(f64::MIN_POSITIVE);
        bwd = bwd.max(linalg::vec_norm(&pair.h().dot(&qphi)) / (hn * scale));
    }
    Ok(IsospectralityReport {
        smin_h: sh.last().copied().unwrap_or(0.0),
        smin_f: sf.last().copied().unwrap_or(0.0),
        threshold,
        dim_ker_h,
        dim_ker_f,
        forward_residual: fwd,
        reconstruction_residual: rec,
        backward_residual: bwd,
    })
}

/// Feshbach-pair diagnostics of `H(w)` for the partition `chi_rho(H_f)`.
#[derive(Clone, Debug)]
pub struct PairCheck {
    pub is_pair: bool,
    pub complement_smin: f64,
    /// `||H_bar^{-1}||` on `Ran chibar`; `None` when the block is singular.
    pub complement_inverse_norm: Option<f64>,
    /// Analytic bound `8 / (3 rho)` for chains in the renormalization domain.
    pub inverse_bound: f64,
    pub stats: PolydiscStats<f64>,
    pub in_domain: bool,
}

pub fn pair_check(chain: &KernelChain, fock: &FockSpace, rho: f64) -> Result<PairCheck> {
    let h = assemble_hamiltonian(chain, fock, 1.0)?;
    let w00 = chain.w00();
    let t0 = fock.function_of_hf(|e| w00.eval_nodes(chain.grid(), e, &[]));
    let stats = chain.polydisc_stats();
    let in_domain = Polydisc::renormalization_domain(rho).contains(&stats);
    let part = Partition::fock_cutoff(fock, rho)?;
    let inverse_bound = 8.0 / (3.0 * rho);
    match FeshbachPair::new(h, t0, part) {
        Ok(p) => Ok(PairCheck {
            is_pair: true,
            complement_smin: p.complement_smin(),
            complement_inverse_norm: Some(if p.complement_inverse().is_empty() {
                0.0
            } else {
                linalg::spectral_norm(p.complement_inverse())?
            }),
            inverse_bound,
            stats,
            in_domain,
        }),
        Err(SrgError::NotFeshbachPair { smin, .. }) => Ok(PairCheck {
            is_pair: false,
            complement_smin: smin,
            complement_inverse_norm: None,
            inverse_bound,
            stats,
            in_domain,
        }),
        Err(e) => Err(e),
    }
}

/// Random test instances.
pub mod random {
    use rand::Rng;

    use super::*;

    fn gaussian<R: Rng>(rng: &mut R) -> c64 {
        // Box-Muller, both components.
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let v: f64 = rng.gen();
        let r = (-2.0 * u.ln()).sqrt();
        let a = 2.0 * std::f64::consts::PI * v;
        c64::new(r * a.cos(), r * a.sin()) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
        CMatrix::from_shape_fn((rows, cols), |_| gaussian(rng))
    }

    /// Haar-like random unitary from the eigenvectors of a random Hermitian
    /// matrix.
    pub fn unitary<R: Rng>(n: usize, rng: &mut R) -> Result<CMatrix> {
        let g = gaussian_matrix(n, n, rng);
        let h = &g + &adjoint(&g);
        Ok(linalg::eigh(&h)?.1)
    }

    /// Orthonormal `n x k` frame.
    pub fn frame<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<CMatrix> {
        if k == 0 {
            return Ok(CMatrix::zeros((n, 0)));
        }
        let (u, _, _) = linalg::svd_full(&gaussian_matrix(n, k, rng))?;
        Ok(u.slice(ndarray::s![.., ..k]).to_owned())
    }

    /// Random Feshbach pair of size `n` whose `H` has a planted kernel of
    /// dimension `kernel_dim`. Candidates with a singular complementary
    /// block are redrawn.
    pub fn pair<R: Rng>(n: usize, kernel_dim: usize, rng: &mut R) -> Result<FeshbachPair> {
        loop {
            let u = unitary(n, rng)?;
            let ud = adjoint(&u);
            let mut chi = Vec::with_capacity(n);
            let mut t = Vec::with_capacity(n);
            for i in 0..n {
                let theta = match i % 3 {
                    0 => 0.0,
                    1 => rng.gen_range(0.0..std::f64::consts::FRAC_PI_2),
                    _ => std::f64::consts::FRAC_PI_2,
                };
                chi.push(theta);
                t.push(if theta == 0.0 { rng.gen_range(-1.0..1.0) } else { rng.gen_range(1.0..3.0) });
            }
            let conj = |d: Vec<c64>| u.dot(&linalg::diag(&d)).dot(&ud);
            let cm = conj(chi.iter().map(|&x| c(x.cos())).collect());
            let cb = conj(chi.iter().map(|&x| c(x.sin())).collect());
            // Exact zeros where theta is 0 or pi/2 are lost to rounding in the
            // rotated frame; symmetrize to keep Hermiticity at 1e-16.
            let cm = (&cm + &adjoint(&cm)).mapv(|z| z * 0.5);
            let cb = (&cb + &adjoint(&cb)).mapv(|z| z * 0.5);
            let t0 = conj(t.iter().map(|&x| c(x)).collect());
            let t0 = (&t0 + &adjoint(&t0)).mapv(|z| z * 0.5);
            let w0 = gaussian_matrix(n, n, rng).mapv(|z| z * (0.3 / (n as f64).sqrt()));
            let h1 = &t0 + &w0;
            let psi = frame(n, kernel_dim, rng)?;
            let h = &h1 - &h1.dot(&psi).dot(&adjoint(&psi));
            let part = match Partition::new(cm, cb) {
                Ok(p) => p,
                Err(_) => continue,
            };
            match FeshbachPair::new(h, t0, part) {
                Ok(p) => return Ok(p),
                Err(SrgError::NotFeshbachPair { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(a: f64, b: f64, d: f64) -> CMatrix {
        CMatrix::from_shape_vec((2, 2), vec![c(a), c(b), c(b), c(d)]).unwrap()
    }

    #[test]
    fn two_level_schur_value() {
        let h = two_by_two(1.0, 0.5, 2.0);
        let f = schur_complement(&h, 1).unwrap();
        assert!((f[[0, 0]].re - 0.875).abs() < 1e-15);
        let part = Partition::from_diagonal(&[1.0, 0.0]).unwrap();
        let t0 = linalg::diag(&[c(1.0), c(2.0)]);
        let pair = FeshbachPair::new(h, t0, part).unwrap();
        assert!((pair.feshbach()[[0, 0]].re - 0.875).abs() < 1e-15);
    }

    #[test]
    fn singular_complement_is_refused() {
        let h = two_by_two(1.0, 0.5, 0.0);
        let part = Partition::from_diagonal(&[1.0, 0.0]).unwrap();
        let t0 = linalg::diag(&[c(1.0), c(0.0)]);
        assert!(matches!(FeshbachPair::new(h, t0, part), Err(SrgError::NotFeshbachPair { .. })));
    }

    #[test]
    fn invalid_partition_is_refused() {
        let chi = linalg::diag(&[c(1.0), c(0.5)]);
        let chibar = linalg::diag(&[c(0.0), c(0.5)]);
        assert!(Partition::new(chi, chibar).is_err());
    }
}

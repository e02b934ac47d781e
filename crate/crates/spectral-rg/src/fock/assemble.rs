use num_complex::Complex64 as c64;

use super::FockSpace;
use crate::error::{Result, SrgError};
use crate::kernels::cutoff_chi;
use crate::linalg::{c, CMatrix};
use crate::{Kernel, KernelChain, RadialGrid};

/// Calls `f(target, amplitude, modes)` for every ordered tuple of `depth`
/// ladder operators applied to basis state `b`.
pub(crate) fn for_each_ladder_path<F>(fock: &FockSpace, b: usize, depth: usize, create: bool, f: &mut F)
where
    F: FnMut(usize, f64, &[usize]),
{
    let mut tuple = Vec::with_capacity(depth);
    walk(fock, b, 1.0, depth, create, &mut tuple, f);
}

fn walk<F>(fock: &FockSpace, b: usize, amp: f64, depth: usize, create: bool, tuple: &mut Vec<usize>, f: &mut F)
where
    F: FnMut(usize, f64, &[usize]),
{
    if tuple.len() == depth {
        f(b, amp, tuple);
        return;
    }
    for i in 0..fock.modes().len() {
        let step = if create { fock.create(b, i) } else { fock.annihilate(b, i) };
        if let Some((t, a)) = step {
            tuple.push(i);
            walk(fock, t, amp * a, depth, create, tuple, f);
            tuple.pop();
        }
    }
}

/// `W_{m,n} = sum sqrt(v_I v_J) a^*(I) w(H_f; kappa_I, kappa_J) a(J)` on the
/// truncated space, summed over ordered index tuples.
pub fn assemble_monomial(w: &Kernel, grid: &RadialGrid, fock: &FockSpace) -> Result<CMatrix> {
    if !w.fits(grid) {
        return Err(SrgError::Shape("kernel does not match its grid".into()));
    }
    let node = fock.modes().node_map(grid)?;
    let sq: Vec<f64> = fock.modes().weights().iter().map(|v| v.sqrt()).collect();
    let (m, n) = w.order();
    let dim = fock.dim();
    let mut out = CMatrix::zeros((dim, dim));
    let mut slots = vec![0usize; m + n];
    for col in 0..dim {
        for_each_ladder_path(fock, col, n, false, &mut |mid, amp_a, jt| {
            let r = fock.energy(mid);
            let wa: f64 = jt.iter().map(|&j| sq[j]).product();
            for (s, &j) in slots[m..].iter_mut().zip(jt) {
                *s = node[j];
            }
            for_each_ladder_path(fock, mid, m, true, &mut |row, amp_c, it| {
                for (s, &i) in slots[..m].iter_mut().zip(it) {
                    *s = node[i];
                }
                let wc: f64 = it.iter().map(|&i| sq[i]).product();
                out[[row, col]] += w.eval_nodes(grid, r, &slots) * (amp_a * amp_c * wa * wc);
            });
        });
    }
    Ok(out)
}

/// `H(w) = w00(H_f) + sum_{m+n>=1} chi(H_f) W_{m,n} chi(H_f)` where `chi` is
/// the cutoff at scale `cutoff_rho` (1 for the standard sandwich).
pub fn assemble_hamiltonian(chain: &KernelChain, fock: &FockSpace, cutoff_rho: f64) -> Result<CMatrix> {
    let grid = chain.grid();
    let w00 = chain.w00();
    let mut h = fock.function_of_hf(|e| w00.eval_nodes(grid, e, &[]));
    let chi: Vec<f64> = fock.energies().iter().map(|&e| cutoff_chi(e, cutoff_rho)).collect();
    for (_, w) in chain.iter_w1() {
        let mono = assemble_monomial(w, grid, fock)?;
        for ((i, j), v) in mono.indexed_iter() {
            if *v != c64::new(0.0, 0.0) {
                h[[i, j]] += *v * (chi[i] * chi[j]);
            }
        }
    }
    Ok(h)
}

/// Largest entry of `a_i F(H_f) - F(H_f + kappa_i) a_i` over columns with
/// fewer than `n_max` bosons.
pub fn pull_through_check(f: impl Fn(f64) -> c64, fock: &FockSpace, i: usize) -> f64 {
    let a = fock.annihilation_matrix(i);
    let kappa = fock.modes().kappa()[i];
    let lhs = a.dot(&fock.function_of_hf(&f));
    let rhs = fock.function_of_hf(|e| f(e + kappa)).dot(&a);
    let mut worst: f64 = 0.0;
    for col in (0..fock.dim()).filter(|&b| fock.number(b) < fock.n_max()) {
        for row in 0..fock.dim() {
            worst = worst.max((lhs[[row, col]] - rhs[[row, col]]).norm());
        }
    }
    worst
}

/// `sup |w|` over every node and over the `H_f` values at which the
/// assembled operator samples `w`.
pub fn sampled_sup(w: &Kernel, grid: &RadialGrid, fock: &FockSpace) -> f64 {
    let len = w.row_len();
    let mut best = w.max_abs();
    let mut idx = vec![0usize; w.slots()];
    for &e in fock.energies() {
        for flat in 0..len {
            w.decode(flat, &mut idx);
            best = best.max(w.eval_nodes(grid, e, &idx).norm());
        }
    }
    best
}

/// Relative slack for bounds that are attained, e.g. by `w00(H_f)`.
const ROUNDING: f64 = 1e-12;

/// Outcome of an operator-norm bound check.
#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Alternative right-hand side with the per-slot constant
    /// `(sum_i v_i / kappa_i)^{1/2}`.
    pub rhs_alt: f64,
    pub ok: bool,
}

/// `(sum_i v_i)^{1/2}` per slot.
pub fn c_quad(fock: &FockSpace, slots: usize) -> f64 {
    fock.modes().total_weight().powf(0.5 * slots as f64)
}

fn c_quad_alt(fock: &FockSpace, slots: usize) -> f64 {
    let m = fock.modes();
    let s: f64 = m.weights().iter().zip(m.kappa()).map(|(v, k)| v / k).sum();
    s.powf(0.5 * slots as f64)
}

/// `||(H_f + lambda)^{-m/2} W_{m,n} (H_f + lambda)^{-n/2}|| <= C_quad ||w||_0`.
pub fn operator_bound_check(w: &Kernel, grid: &RadialGrid, fock: &FockSpace, lambda: f64) -> Result<BoundReport> {
    if !(lambda > 0.0) {
        return Err(SrgError::InvalidArgument("lambda must be positive".into()));
    }
    let (m, n) = w.order();
    let mut op = assemble_monomial(w, grid, fock)?;
    let e = fock.energies();
    for ((i, j), v) in op.indexed_iter_mut() {
        *v *= (e[i] + lambda).powf(-0.5 * m as f64) * (e[j] + lambda).powf(-0.5 * n as f64);
    }
    let lhs = crate::linalg::spectral_norm(&op)?;
    let norm0 = sampled_sup(w, grid, fock);
    let rhs = c_quad(fock, m + n) * norm0;
    Ok(BoundReport { lhs, rhs, rhs_alt: c_quad_alt(fock, m + n) * norm0, ok: lhs <= rhs * (1.0 + ROUNDING) })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `||chi_rho W_{m,n} chi_rho|| <= C_quad rho^{(m+n)(1+mu)} / sqrt(m! n!) ||w||_mu`.
pub fn sandwich_bound_check(w: &Kernel, grid: &RadialGrid, fock: &FockSpace, rho: f64, mu: f64) -> Result<BoundReport> {
    let (m, n) = w.order();
    let mut op = assemble_monomial(w, grid, fock)?;
    let chi: Vec<f64> = fock.energies().iter().map(|&e| cutoff_chi(e, rho)).collect();
    for ((i, j), v) in op.indexed_iter_mut() {
        *v *= chi[i] * chi[j];
    }
    let lhs = crate::linalg::spectral_norm(&op)?;
    let factor = rho.powf((m + n) as f64 * (1.0 + mu)) / (factorial(m) * factorial(n)).sqrt();
    let norm_mu = w.mu_sup(grid, mu);
    let rhs = c_quad(fock, m + n) * factor * norm_mu;
    Ok(BoundReport { lhs, rhs, rhs_alt: c_quad_alt(fock, m + n) * factor * norm_mu, ok: lhs <= rhs * (1.0 + ROUNDING) })
}

/// Diagonal of `chi_rho(H_f)`.
pub fn cutoff_diagonal(fock: &FockSpace, rho: f64, bar: bool) -> CMatrix {
    fock.function_of_hf(|e| {
        c(if bar { crate::kernels::cutoff_chibar(e, rho) } else { cutoff_chi(e, rho) })
    })
}

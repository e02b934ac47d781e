//! Invariant suites run by `srg check` and by the acceptance tests.

use num_complex::Complex64 as c64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::eigensolve::{gamma_dilation, step_pair};
use crate::error::Result;
use crate::feshbach::{
    intertwining_residual, isospectrality_suite, random, resolvent_reconstruct, schur_complement, FeshbachPair,
    Partition,
};
use crate::fock::{operator_bound_check, sandwich_bound_check, FockSpace, ModeSet};
use crate::kernels::{chi1, chibar1};
use crate::linalg::{self, frobenius, CMatrix};
use crate::wick::{renormalize, toy_chain, WickConfig};
use crate::{BanachParams, Kernel, KernelChain};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Largest error measured against `tol`.
    pub worst: f64,
    pub tol: f64,
}

impl SuiteReport {
    fn new(suite: &'static str, tol: f64) -> Self {
        Self { suite, instances: 0, failures: 0, worst: 0.0, tol }
    }

    /// Records one instance; `ok` is judged by the caller.
    fn record(&mut self, err: f64, ok: bool) {
        self.instances += 1;
        self.worst = self.worst.max(err);
        if !ok {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.instances > 0
    }
}

/// Random 40-dimensional pairs with planted kernels of dimension 0..3:
/// kernel dimensions of `H` and `F(H)` must agree, and the resolvent
/// identity must hold to `1e-10` whenever `cond(H) <= 1e8`.
pub fn feshbach_isospectrality(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("feshbach_isospectrality", 1e-10);
    for _ in 0..n {
        let planted = rng.gen_range(0..4);
        let pair = random::pair(40, planted, rng)?;
        let iso = isospectrality_suite(&pair)?;
        let kernels_agree = iso.dim_ker_h == iso.dim_ker_f && iso.invertibility_agrees();
        let mut err = 0.0;
        if pair.h_norm() / iso.smin_h <= 1e8 {
            let inv = linalg::inverse(pair.h())?;
            let rec = resolvent_reconstruct(&pair)?;
            err = frobenius(&(&rec - &inv)) / frobenius(&inv);
        }
        rep.record(err, kernels_agree && err <= rep.tol);
    }
    Ok(rep)
}

/// Sharp projection and `T0 = 0`: `F` is the Schur complement.
pub fn schur_degeneration(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("schur_degeneration", 1e-12);
    let dim = 10;
    for _ in 0..n {
        let k = rng.gen_range(1..dim);
        let h = random::gaussian_matrix(dim, dim, rng) + CMatrix::eye(dim).mapv(|z| z * 3.0);
        let chi: Vec<f64> = (0..dim).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
        let pair = FeshbachPair::new(h.clone(), CMatrix::zeros((dim, dim)), Partition::from_diagonal(&chi)?)?;
        let f = pair.feshbach();
        let s = schur_complement(&h, k)?;
        let top = f.slice(ndarray::s![..k, ..k]).to_owned();
        let err = frobenius(&(&top - &s)) / frobenius(&s);
        rep.record(err, err <= rep.tol);
    }
    Ok(rep)
}

fn random_kernel(m: usize, n: usize, fock: &FockSpace, rng: &mut ChaCha8Rng) -> Result<Kernel> {
    let grid = fock.modes().grid(13, 3.0)?;
    let vals = (0..grid.nr() * grid.nk().pow((m + n) as u32))
        .map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Kernel::from_values(m, n, &grid, vals)
}

/// Random kernels with `m + n <= 2` on `G = 8`, `n_max = 3`: the weighted
/// operator bound and the `chi_rho` sandwich bound. `worst` is the largest
/// ratio of left to right side.
pub fn operator_bounds(n: usize, rng: &mut ChaCha8Rng) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("operator_bounds", 1.0);
    let rho = 0.5;
    let fock = FockSpace::new(ModeSet::new(8, rho, 1.0)?, 3)?;
    let orders = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];
    for _ in 0..n {
        let (m, k) = orders[rng.gen_range(0..orders.len())];
        let w = random_kernel(m, k, &fock, rng)?;
        let grid = fock.modes().grid(13, 3.0)?;
        let a = operator_bound_check(&w, &grid, &fock, 1.0)?;
        let b = sandwich_bound_check(&w, &grid, &fock, rho, 0.5)?;
        rep.record((a.lhs / a.rhs).max(b.lhs / b.rhs), a.ok && b.ok);
    }
    Ok(rep)
}

/// Scaling law on monomials `w = prod_j |k_j|^mu`. One slot: `||s_rho(w)||_mu`
/// equals the bound `rho^{m+n+mu-1} ||w||_mu`. Two slots: it equals
/// `rho^{m+n-1+(m+n) mu} ||w||_mu`, which lies below the bound.
pub fn scaling_law() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("scaling_law", 1e-12);
    for rho in [0.5, 0.4, 0.25] {
        for mu in [0.25, 0.5, 1.0] {
            let grid = ModeSet::new(10, rho, 1.0)?.grid(21, 2.0)?;
            for (m, n) in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 2)] {
                let slots = (m + n) as f64;
                let w = Kernel::from_fn(m, n, &grid, |_, ks| c64::new(ks.iter().map(|k| k.powf(mu)).product(), 0.0));
                let norm = w.mu_sup(&grid, mu);
                let lhs = w.scale(&grid, rho).mu_sup(&grid, mu);
                let bound = rho.powf(slots + mu - 1.0) * norm;
                let exact = rho.powf(slots - 1.0 + slots * mu) * norm;
                let err = (lhs - exact).abs() / exact;
                rep.record(err, err <= rep.tol && lhs <= bound * (1.0 + rep.tol));
            }
        }
    }
    Ok(rep)
}

/// `R_rho(tau H_f) = tau H_f`, and `w00 = E + r` maps to `E / rho + r`.
pub fn fixed_line() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("fixed_line", 1e-14);
    let rho = 0.4;
    let modes = ModeSet::new(6, rho, 1.0)?;
    let grid = modes.grid(41, 2.0)?;
    let params = BanachParams::new(0.5, 1, 0.25)?;
    let cfg = WickConfig::default();
    for tau in [1.0, 0.95, 1.05] {
        let w00 = Kernel::from_fn(0, 0, &grid, |r, _| c64::new(tau * r, 0.0));
        let chain = KernelChain::new(grid.clone(), 2, params, w00)?;
        let out = renormalize(&chain, &modes, rho, &cfg)?;
        let err = out.chain.max_abs_diff(&chain);
        rep.record(err, err <= rep.tol);
    }
    for e in [c64::new(0.01, 0.0), c64::new(-0.02, 0.005)] {
        let w00 = Kernel::from_fn(0, 0, &grid, |r, _| e + r);
        let chain = KernelChain::new(grid.clone(), 2, params, w00.clone())?;
        let out = renormalize(&chain, &modes, rho, &cfg)?;
        let want = Kernel::from_fn(0, 0, &grid, |r, _| e / rho + r);
        let err = out.chain.w00().max_abs_diff(&want);
        rep.record(err, err <= rep.tol);
    }
    Ok(rep)
}

/// `chi_1^2 + chibar_1^2 = 1` on `1e5` points of `[0, 2]`.
pub fn cutoff_partition() -> SuiteReport {
    let mut rep = SuiteReport::new("cutoff_partition", 1e-14);
    let n = 100_000;
    let err = (0..n)
        .map(|i| {
            let r = 2.0 * i as f64 / n as f64;
            (chi1(r).powi(2) + chibar1(r).powi(2) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    rep.record(err, err < rep.tol);
    rep
}

/// `Gamma* Gamma` is the identity on states with mode 0 empty, and
/// `Gamma H_f Gamma* = rho H_f` on states with the last mode empty.
pub fn dilation() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("dilation", 1e-13);
    for rho in [0.5, 0.4] {
        let fock = FockSpace::new(ModeSet::new(6, rho, 1.0)?, 3)?;
        let (g, gs) = gamma_dilation(&fock, rho)?;
        let retained = |mode: usize| -> CMatrix {
            let d: Vec<c64> = (0..fock.dim()).map(|b| linalg::c(if fock.state(b)[mode] == 0 { 1.0 } else { 0.0 })).collect();
            linalg::diag(&d)
        };
        let p0 = retained(0);
        let iso = linalg::max_abs(&(gs.dot(&g) - &p0));
        rep.record(iso, iso <= rep.tol);
        let pl = retained(fock.modes().len() - 1);
        let lhs = g.dot(&fock.hf()).dot(&gs);
        let rhs = pl.dot(&fock.hf()).dot(&pl).mapv(|z| z * rho);
        let err = linalg::max_abs(&(lhs - rhs));
        rep.record(err, err <= rep.tol);
        let vac = (g.dot(&fock.vacuum()) - fock.vacuum()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        rep.record(vac, vac == 0.0);
    }
    Ok(rep)
}

/// `H Q = chi F(H)` on a toy step.
pub fn intertwining() -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("intertwining", 1e-10);
    let rho = 0.4;
    let modes = ModeSet::new(6, rho, 1.0)?;
    let fock = FockSpace::new(modes.clone(), 3)?;
    let params = BanachParams::new(0.5, 1, 0.25)?;
    for g in [c64::new(0.005, 0.0), c64::new(0.005, 0.001)] {
        let chain = toy_chain(&modes, 41, 2.0, g, params, 2)?;
        let err = intertwining_residual(&step_pair(&chain, &fock, rho)?)?;
        rep.record(err, err <= rep.tol);
    }
    Ok(rep)
}

/// Every suite; random ones draw `instances` cases (100 for the operator
/// bounds, whose instances are dense `165 x 165` SVDs).
pub fn all(instances: usize, rng: &mut ChaCha8Rng) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        feshbach_isospectrality(instances, rng)?,
        schur_degeneration(instances, rng)?,
        operator_bounds(instances.min(100), rng)?,
        scaling_law()?,
        fixed_line()?,
        cutoff_partition(),
        dilation()?,
        intertwining()?,
    ])
}

//! Kernel-level renormalization map `R_rho`.
//!
//! One step computes the Feshbach map of `H(w)` for the partition
//! `chi_rho(H_f)`, expands the complementary resolvent in a Neumann series
//! truncated at `L_max` factors, brings every term to normal order and
//! rescales by `rho`. The normal-ordered kernel of a product of `L`
//! factors is, for fixed external momenta, a vacuum amplitude on the Fock
//! space of the contracted bosons:
//!
//! ```text
//! x_{M,N}(r; K; Kt) = sum_L (-1)^{L-1} sum binom * <0| g_0 I_1 g_1 I_2 ... I_L g_L |0>
//! ```
//!
//! with `g_0 = g_L = chi_1` and `g_l = chi_1^2 chibar_rho^2 / w00` in between,
//! every external momentum shifting the `H_f` argument of the functions it
//! is pulled through. Then `w^_{M,N}(r; K) = rho^{M+N-1} x_{M,N}(rho r; rho K)`
//! for `M + N >= 1` and `w^_{0,0}(r) = (w00(rho r) + chi_1(r)^2 x_{0,0}(rho r)) / rho`.

mod internal;

use num_complex::Complex64 as c64;

use internal::{InternalSpace, PathTable, StateVec};

use crate::error::{Result, SrgError};
use crate::fock::{FockSpace, ModeSet};
use crate::fock::assemble::for_each_ladder_path;
use crate::linalg::CMatrix;
use crate::kernels::{c_chi, chi1, cutoff_chibar, PolydiscStats};
use crate::{Kernel, KernelChain, Polydisc, RadialGrid};

#[derive(Clone, Debug)]
pub struct WickConfig {
    /// Largest number of `W` factors kept in the Neumann series.
    pub l_max: usize,
    /// Stop the series early once a whole order has chain norm below this.
    pub tail_threshold: f64,
    /// Refuse chains outside `D(rho/8, 1/8, rho/8)`.
    pub enforce_domain: bool,
    /// Also evaluate the first discarded order `M + N = M_max + 1` at
    /// `r = 0` to report its norm.
    pub estimate_dropped: bool,
}

impl Default for WickConfig {
    fn default() -> Self {
        Self { l_max: 3, tail_threshold: 1e-12, enforce_domain: true, estimate_dropped: false }
    }
}

/// Result of one renormalization step.
#[derive(Clone, Debug)]
pub struct RenormStep {
    pub chain: KernelChain,
    /// Chain norm of the contribution of each series order `L = 1, 2, ...`.
    pub term_norms: Vec<f64>,
    /// Weighted norm of the first discarded order, if requested.
    pub dropped_norm: Option<f64>,
    pub stats_in: PolydiscStats<f64>,
}

struct KRef<'a> {
    m: usize,
    n: usize,
    w: &'a Kernel,
    row_len: usize,
}

#[derive(Clone, Copy)]
struct Opt {
    k: usize,
    p: usize,
    q: usize,
    weight: f64,
}

struct Factor {
    m: usize,
    n: usize,
    opts: Vec<Opt>,
    /// Internal bosons allowed after this factor acts.
    cap: usize,
}

/// Longest product of kernels the expansion supports.
pub const MAX_L: usize = 8;

struct Ctx<'a> {
    grid: &'a RadialGrid,
    rho: f64,
    w00: &'a Kernel,
    kernels: Vec<KRef<'a>>,
    space: InternalSpace,
    /// Momentum node of every original mode.
    node: Vec<usize>,
    kappa: Vec<f64>,
    nk: usize,
    ann: Vec<PathTable>,
    cre: Vec<PathTable>,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Ordered compositions of `total` into `parts` non-negative parts.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl<'a> Ctx<'a> {
    fn new(chain: &'a KernelChain, modes: &ModeSet, rho: f64, l_max: usize) -> Result<Self> {
        if l_max > MAX_L {
            return Err(SrgError::InvalidArgument(format!("l_max must be at most {MAX_L}")));
        }
        let grid = chain.grid();
        let node = modes.node_map(grid)?;
        if grid.nk() != modes.len() {
            return Err(SrgError::Domain("kernel momentum nodes must coincide with the mode set".into()));
        }
        let kappa = modes.kappa().to_vec();
        check_denominator(chain, rho)?;
        // Bosons at kappa >= 1 are cut off by chi_1 wherever they could sit.
        let internal: Vec<usize> = (0..modes.len()).filter(|&i| kappa[i] < 1.0).collect();
        // After factor l (counting from the right) at most min(created so
        // far, still annihilable) bosons are internal.
        let legs = chain.iter_w1().map(|((m, n), _)| *m.max(n)).max().unwrap_or(0);
        let n_int = legs * (l_max / 2).max(1);
        let space = InternalSpace::new(internal, &kappa, modes.weights(), n_int);
        let kernels = chain
            .iter_w1()
            .map(|((m, n), w)| KRef { m: *m, n: *n, w, row_len: w.row_len() })
            .collect();
        let nk = grid.nk();
        let ann = (0..=legs).map(|d| space.paths(d, false, &node, nk)).collect();
        let cre = (0..=legs).map(|d| space.paths(d, true, &node, nk)).collect();
        Ok(Self { grid, rho, w00: chain.w00(), kernels, space, node, kappa, nk, ann, cre })
    }

    /// Factor list for one distribution of external legs, or `None` when
    /// some factor admits no kernel.
    fn factors(&self, mc: &[usize], na: &[usize]) -> Option<Vec<Factor>> {
        let l = mc.len();
        let mut out: Vec<Factor> = Vec::with_capacity(l);
        for pos in 0..l {
            let (m, n) = (mc[pos], na[pos]);
            let opts: Vec<Opt> = self
                .kernels
                .iter()
                .enumerate()
                .filter(|(_, k)| k.m >= m && k.n >= n)
                .map(|(i, k)| Opt { k: i, p: k.m - m, q: k.n - n, weight: binom(k.m, m) * binom(k.n, n) })
                .filter(|o| (pos > 0 || o.p == 0) && (pos + 1 < l || o.q == 0))
                .collect();
            if opts.is_empty() {
                return None;
            }
            out.push(Factor { m, n, opts, cap: 0 });
        }
        let mut cap = 0;
        for f in out.iter_mut() {
            f.cap = cap;
            cap += f.opts.iter().map(|o| o.q).max().unwrap_or(0);
        }
        Some(out)
    }

    fn g_mid(&self, s: f64) -> f64 {
        let a = chi1(s);
        if a == 0.0 {
            return 0.0;
        }
        let b = cutoff_chibar(s, self.rho);
        if b == 0.0 {
            return 0.0;
        }
        a * a * b * b
    }

    fn inv_w00(&self, s: f64) -> c64 {
        self.w00.eval_nodes(self.grid, s, &[]).inv()
    }

    /// Applies factor `f` with external creators `ec` and annihilators `ea`
    /// (original mode indices) and `H_f` shift `shift`.
    fn apply(&self, f: &Factor, ec: &[usize], ea: &[usize], shift: f64, src: &StateVec, dst: &mut StateVec) {
        let nk = self.nk;
        let sp = &self.space;
        let ext_c = ec.iter().fold(0usize, |acc, &i| acc * nk + self.node[i]);
        let ext_a = ea.iter().fold(0usize, |acc, &i| acc * nk + self.node[i]);
        for &b in &src.support {
            let amp = src.v[b];
            if amp == c64::new(0.0, 0.0) {
                continue;
            }
            for o in &f.opts {
                let kr = &self.kernels[o.k];
                let vals = kr.w.values();
                let a_stride = nk.pow(kr.n as u32);
                let a_shift = ext_a * nk.pow(o.q as u32);
                let c_shift = ext_c * nk.pow(o.p as u32);
                let cre = &self.cre[o.p];
                for pa in self.ann[o.q].from(b) {
                    let mid = pa.target as usize;
                    if sp.number[mid] + o.p > f.cap {
                        continue;
                    }
                    let st = self.grid.stencil(sp.energy[mid] + shift);
                    let a_flat = a_shift + pa.key as usize;
                    let base0 = st.i * kr.row_len + a_flat;
                    let base1 = base0 + kr.row_len;
                    let pre = amp * (pa.amp * o.weight);
                    for pc in cre.from(mid) {
                        let flat = (c_shift + pc.key as usize) * a_stride;
                        let v0 = vals[base0 + flat];
                        let v1 = vals[base1 + flat];
                        dst.add(pc.target as usize, pre * pc.amp * (v0 + (v1 - v0) * st.t));
                    }
                }
            }
        }
    }

    /// Vacuum amplitude of one term for one external configuration.
    #[allow(clippy::too_many_arguments)]
    fn amplitude(
        &self,
        factors: &[Factor],
        ec: &[usize],
        ea: &[usize],
        r: f64,
        a: &mut StateVec,
        b: &mut StateVec,
    ) -> c64 {
        let l = factors.len();
        let mut kc = [0.0; MAX_L];
        let mut ka = [0.0; MAX_L];
        for (dst, s) in kc.iter_mut().zip(split(ec, factors.iter().map(|f| f.m))) {
            *dst = self.ksum(s);
        }
        for (dst, s) in ka.iter_mut().zip(split(ea, factors.iter().map(|f| f.n))) {
            *dst = self.ksum(s);
        }
        let g0 = chi1(r + kc[..l].iter().sum::<f64>());
        let gl = chi1(r + ka[..l].iter().sum::<f64>());
        if g0 == 0.0 || gl == 0.0 {
            return c64::new(0.0, 0.0);
        }
        // after[l] = sum of creator momenta in factors right of l;
        // before[l] = sum of annihilator momenta in factors left of l.
        let mut after = [0.0; MAX_L];
        for pos in (0..l.saturating_sub(1)).rev() {
            after[pos] = after[pos + 1] + kc[pos + 1];
        }
        let mut before = [0.0; MAX_L];
        for pos in 1..l {
            before[pos] = before[pos - 1] + ka[pos - 1];
        }
        let mut offs_c = [0usize; MAX_L + 1];
        let mut offs_a = [0usize; MAX_L + 1];
        for pos in 0..l {
            offs_c[pos + 1] = offs_c[pos] + factors[pos].m;
            offs_a[pos + 1] = offs_a[pos] + factors[pos].n;
        }
        a.set_vacuum(c64::new(gl, 0.0));
        let (mut cur, mut next) = (a, b);
        for pos in (0..l).rev() {
            let f = &factors[pos];
            next.clear();
            let shift = r + after[pos] + before[pos];
            self.apply(f, &ec[offs_c[pos]..offs_c[pos + 1]], &ea[offs_a[pos]..offs_a[pos + 1]], shift, cur, next);
            if pos > 0 {
                // g between factor pos-1 and pos.
                let t = r + after[pos - 1] + before[pos];
                let mut any = false;
                for &s in &next.support {
                    let e = self.space.energy[s] + t;
                    let g = self.g_mid(e);
                    next.v[s] = if g == 0.0 { c64::new(0.0, 0.0) } else { next.v[s] * self.inv_w00(e) * g };
                    any |= g != 0.0;
                }
                if !any {
                    return c64::new(0.0, 0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur.v[0] * g0
    }

    fn ksum(&self, modes: &[usize]) -> f64 {
        modes.iter().map(|&i| self.kappa[i]).sum()
    }
}

fn split<'s>(v: &'s [usize], sizes: impl Iterator<Item = usize> + 's) -> impl Iterator<Item = &'s [usize]> + 's {
    let mut at = 0;
    sizes.map(move |s| {
        let out = &v[at..at + s];
        at += s;
        out
    })
}

/// Unsymmetrized `x_{M,N}^{(L)}` on a set of radial arguments and every
/// ordered tuple of external modes `1..G` (original frame).
struct XBlock {
    m: usize,
    n: usize,
    /// External digit count per slot (`G - 1`).
    base: usize,
    /// `values[ir][flat K][flat Kt]`.
    values: Vec<c64>,
}

fn compute_x(ctx: &Ctx, m: usize, n: usize, l: usize, rs: &[f64]) -> XBlock {
    let g = ctx.kappa.len();
    let base = g - 1;
    let tuples = base.pow((m + n) as u32);
    let mut values = vec![c64::new(0.0, 0.0); rs.len() * tuples];
    let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
    let mut sa = StateVec::new(ctx.space.dim());
    let mut sb = StateVec::new(ctx.space.dim());
    let mut ec = vec![0usize; m];
    let mut ea = vec![0usize; n];
    for mc in compositions(m, l) {
        for na in compositions(n, l) {
            let Some(factors) = ctx.factors(&mc, &na) else { continue };
            for (ir, &r) in rs.iter().enumerate() {
                for flat in 0..tuples {
                    let mut f = flat;
                    for d in ea.iter_mut().rev() {
                        *d = f % base + 1;
                        f /= base;
                    }
                    for d in ec.iter_mut().rev() {
                        *d = f % base + 1;
                        f /= base;
                    }
                    let amp = ctx.amplitude(&factors, &ec, &ea, r, &mut sa, &mut sb);
                    values[ir * tuples + flat] += amp * sign;
                }
            }
        }
    }
    XBlock { m, n, base, values }
}

/// Builds the rescaled kernel `rho^{M+N-1} x(rho r; rho K)` on the grid from
/// a block evaluated at `rho * r_j` for the first `nrows` radial nodes.
fn scaled_kernel(grid: &RadialGrid, x: &XBlock, rho: f64, nrows: usize) -> Kernel {
    let (m, n) = (x.m, x.n);
    let slots = m + n;
    let nk = grid.nk();
    let g = nk;
    let mut w = Kernel::zeros(m, n, grid);
    let row = w.row_len();
    let tuples = x.base.pow(slots as u32);
    let factor = rho.powi(slots as i32 - 1);
    let mut idx = vec![0usize; slots];
    for ir in 0..nrows {
        for flat in 0..row {
            w.decode(flat, &mut idx);
            // Node a <-> new mode g-1-a <-> original mode g-a; node 0 has no
            // original partner and is filled by continuation below.
            if idx.contains(&0) {
                continue;
            }
            let xf = idx.iter().fold(0usize, |acc, &a| acc * x.base + (g - a - 1));
            w.values_mut()[ir * row + flat] = x.values[ir * tuples + xf] * factor;
        }
    }
    w.symmetrize();
    w.continue_lowest_k(grid);
    w
}

fn term_chain_norm(chain: &KernelChain, kernels: &[Kernel]) -> f64 {
    let p = chain.params();
    let grid = chain.grid();
    kernels
        .iter()
        .map(|w| {
            let (m, n) = w.order();
            w.norm_mu_s(grid, p.mu, p.s) * p.xi.powi(-((m + n) as i32))
        })
        .sum()
}

/// One step of `R_rho` on a kernel chain whose momentum nodes are `modes`.
pub fn renormalize(chain: &KernelChain, modes: &ModeSet, rho: f64, cfg: &WickConfig) -> Result<RenormStep> {
    let stats_in = chain.polydisc_stats();
    check_domain(rho, cfg, &stats_in)?;
    if cfg.l_max == 0 {
        return Err(SrgError::InvalidArgument("l_max must be at least 1".into()));
    }
    let ctx = Ctx::new(chain, modes, rho, cfg.l_max)?;
    let grid = chain.grid();
    let nu = grid.nr_unit();
    let rs: Vec<f64> = grid.r_nodes()[..nu].iter().map(|&r| rho * r).collect();
    let m_max = chain.m_max();
    let orders: Vec<(usize, usize)> =
        (0..=m_max).flat_map(|t| (0..=t).map(move |m| (m, t - m))).collect();

    let mut totals: Vec<Kernel> = orders.iter().map(|&(m, n)| Kernel::zeros(m, n, grid)).collect();
    let mut term_norms = Vec::new();
    for l in 1..=cfg.l_max {
        let mut terms = Vec::with_capacity(orders.len());
        for &(m, n) in &orders {
            let w = if m + n == 0 {
                let mut w = Kernel::zeros(0, 0, grid);
                if l >= 2 {
                    let x = compute_x(&ctx, 0, 0, l, &rs);
                    for (ir, v) in x.values.iter().enumerate() {
                        let c = chi1(grid.r_nodes()[ir]);
                        w.values_mut()[ir] = *v * (c * c / rho);
                    }
                }
                w
            } else {
                let x = compute_x(&ctx, m, n, l, &rs);
                let mut w = scaled_kernel(grid, &x, rho, nu);
                w.continue_beyond_unit(grid);
                w
            };
            terms.push(w);
        }
        let norm = term_chain_norm(chain, &terms);
        term_norms.push(norm);
        for (t, w) in totals.iter_mut().zip(&terms) {
            for (a, b) in t.values_mut().iter_mut().zip(w.values()) {
                *a += *b;
            }
        }
        if l >= 2 && norm < cfg.tail_threshold {
            break;
        }
    }

    // Constant part: scaled w00 plus the sandwiched correction.
    let w00 = chain.w00();
    let mut it = orders.iter().zip(totals);
    let (_, corr) = it.next().unwrap();
    let mut new00 = Kernel::zeros(0, 0, grid);
    for (ir, &r) in grid.r_nodes().iter().enumerate() {
        new00.values_mut()[ir] = w00.eval_nodes(grid, rho * r, &[]) / rho + corr.values()[ir];
    }
    let mut out = KernelChain::new(grid.clone(), m_max, *chain.params(), new00)?;
    for (_, w) in it {
        out.insert(w)?;
    }

    let dropped_norm = if cfg.estimate_dropped { Some(dropped_estimate(&ctx, chain, cfg)?) } else { None };
    Ok(RenormStep { chain: out, term_norms, dropped_norm, stats_in })
}

fn check_domain(rho: f64, cfg: &WickConfig, stats: &PolydiscStats<f64>) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(SrgError::InvalidArgument(format!("rho = {rho} is not in (0, 1)")));
    }
    let d = Polydisc::renormalization_domain(rho);
    if cfg.enforce_domain && !d.contains(stats) {
        return Err(SrgError::OutsidePolydisc(format!(
            "|E| = {:.3e} (<= {:.3e}), sup|T'-1| = {:.3e} (<= {:.3e}), ||w1|| = {:.3e} (<= {:.3e})",
            stats.e.norm(),
            d.alpha,
            stats.t_prime_dev,
            d.beta,
            stats.w1_norm,
            d.gamma
        )));
    }
    Ok(())
}

/// `w00` must stay away from zero where the complementary resolvent is
/// sampled, `0.9 rho < r < 1`.
fn check_denominator(chain: &KernelChain, rho: f64) -> Result<()> {
    let grid = chain.grid();
    let w00 = chain.w00();
    let lo = 0.9 * rho;
    let worst = grid
        .r_nodes()
        .iter()
        .copied()
        .filter(|&r| r > lo && r < 1.0)
        .chain([lo, 1.0])
        .map(|r| w00.eval_nodes(grid, r, &[]).norm())
        .fold(f64::INFINITY, f64::min);
    if worst < 1e-12 {
        return Err(SrgError::Domain(format!("w00 nearly vanishes on the cutoff window: |w00| = {worst:e}")));
    }
    Ok(())
}

fn dropped_estimate(ctx: &Ctx, chain: &KernelChain, cfg: &WickConfig) -> Result<f64> {
    let grid = chain.grid();
    let p = chain.params();
    let t = chain.m_max() + 1;
    let mut total = 0.0;
    for m in 0..=t {
        let n = t - m;
        let mut acc: Option<XBlock> = None;
        for l in 2..=cfg.l_max {
            let x = compute_x(ctx, m, n, l, &[0.0]);
            match acc.as_mut() {
                None => acc = Some(x),
                Some(a) => {
                    for (u, v) in a.values.iter_mut().zip(&x.values) {
                        *u += *v;
                    }
                }
            }
        }
        if let Some(x) = acc {
            let w = scaled_kernel(grid, &x, ctx.rho, 1);
            total += w.mu_sup(grid, p.mu) * p.xi.powi(-(t as i32));
        }
    }
    Ok(total)
}

/// `w^_{0,0}(0)` of one renormalization step, evaluated without the rest of
/// the chain.
pub fn renormalized_energy(chain: &KernelChain, modes: &ModeSet, rho: f64, cfg: &WickConfig) -> Result<c64> {
    let stats = chain.polydisc_stats();
    check_domain(rho, cfg, &stats)?;
    let ctx = Ctx::new(chain, modes, rho, cfg.l_max)?;
    let mut x = c64::new(0.0, 0.0);
    for l in 2..=cfg.l_max {
        let term = compute_x(&ctx, 0, 0, l, &[0.0]).values[0];
        x += term;
        if term.norm() / rho < cfg.tail_threshold {
            break;
        }
    }
    Ok((chain.energy() + x) / rho)
}

/// One term of the Neumann-Wick expansion: per factor `(m, p, n, q)`, the
/// external creators, internal creators, external annihilators and internal
/// annihilators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WickTerm {
    pub factors: Vec<(usize, usize, usize, usize)>,
}

impl WickTerm {
    pub fn new(factors: Vec<(usize, usize, usize, usize)>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&(m, p, n, q)| m + p + n + q == 0) {
            return Err(SrgError::InvalidArgument("every factor needs at least one leg".into()));
        }
        Ok(Self { factors })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `(M, N)`: external creators and annihilators in total.
    pub fn external(&self) -> (usize, usize) {
        self.factors.iter().fold((0, 0), |(a, b), &(m, _, n, _)| (a + m, b + n))
    }
}

/// `W^{m,n}_{p,q}[r; K, Kt]` on `fock`: the kernel `w_{m+p,n+q}` with the
/// external slots fixed at modes `ext_c`, `ext_a`, internal legs summed
/// with `sqrt(v)` weights, evaluated at `H_f + r` and sandwiched by
/// `chi_1(H_f + r + Sigma K)` on the left and `chi_1(H_f + r + Sigma Kt)` on
/// the right.
pub fn generalized_monomial(
    chain: &KernelChain,
    fock: &FockSpace,
    ext_c: &[usize],
    ext_a: &[usize],
    p: usize,
    q: usize,
    r: f64,
) -> Result<CMatrix> {
    let (m, n) = (ext_c.len(), ext_a.len());
    let w = chain
        .get(m + p, n + q)
        .ok_or_else(|| SrgError::Domain(format!("chain has no kernel of order ({}, {})", m + p, n + q)))?;
    let grid = chain.grid();
    let node = fock.modes().node_map(grid)?;
    let kappa = fock.modes().kappa();
    let sq: Vec<f64> = fock.modes().weights().iter().map(|v| v.sqrt()).collect();
    let kc: f64 = ext_c.iter().map(|&i| kappa[i]).sum();
    let ka: f64 = ext_a.iter().map(|&i| kappa[i]).sum();
    let dim = fock.dim();
    let mut out = CMatrix::zeros((dim, dim));
    let mut slots = vec![0usize; m + p + n + q];
    for (s, &i) in slots[..m].iter_mut().zip(ext_c) {
        *s = node[i];
    }
    for (s, &i) in slots[m + p..m + p + n].iter_mut().zip(ext_a) {
        *s = node[i];
    }
    for col in 0..dim {
        let right = chi1(fock.energy(col) + r + ka);
        if right == 0.0 {
            continue;
        }
        for_each_ladder_path(fock, col, q, false, &mut |mid, amp_a, jt| {
            let e = fock.energy(mid) + r;
            let wa: f64 = jt.iter().map(|&j| sq[j]).product();
            for (s, &j) in slots[m + p + n..].iter_mut().zip(jt) {
                *s = node[j];
            }
            for_each_ladder_path(fock, mid, p, true, &mut |row, amp_c, it| {
                let left = chi1(fock.energy(row) + r + kc);
                if left == 0.0 {
                    return;
                }
                for (s, &i) in slots[m..m + p].iter_mut().zip(it) {
                    *s = node[i];
                }
                let wc: f64 = it.iter().map(|&i| sq[i]).product();
                out[[row, col]] += w.eval_nodes(grid, e, &slots) * (amp_a * amp_c * wa * wc * left * right);
            });
        });
    }
    Ok(out)
}

/// Vacuum amplitude `<0| W_1 F_1 W_2 ... F_{L-1} W_L |0>` of one term on the
/// dense Fock space, with `F = chibar_rho(H_f)^2 / w00(H_f)` and external
/// modes distributed over the factors in order. No sign or binomial
/// weights are included.
pub fn vacuum_amplitude(
    term: &WickTerm,
    chain: &KernelChain,
    fock: &FockSpace,
    rho: f64,
    r: f64,
    ext_c: &[usize],
    ext_a: &[usize],
) -> Result<c64> {
    if term.external() != (ext_c.len(), ext_a.len()) {
        return Err(SrgError::Shape("external modes do not match the term".into()));
    }
    let kappa = fock.modes().kappa();
    let l = term.len();
    let mut kc = Vec::with_capacity(l);
    let mut ka = Vec::with_capacity(l);
    let (mut ic, mut ia) = (0, 0);
    for &(m, _, n, _) in &term.factors {
        kc.push(ext_c[ic..ic + m].iter().map(|&i| kappa[i]).sum::<f64>());
        ka.push(ext_a[ia..ia + n].iter().map(|&i| kappa[i]).sum::<f64>());
        ic += m;
        ia += n;
    }
    let grid = chain.grid();
    let w00 = chain.w00();
    let mut v = fock.vacuum();
    let (mut ic, mut ia) = (ext_c.len(), ext_a.len());
    for pos in (0..l).rev() {
        let (m, p, n, q) = term.factors[pos];
        let after: f64 = kc[pos + 1..].iter().sum();
        let before: f64 = ka[..pos].iter().sum();
        let mono = generalized_monomial(chain, fock, &ext_c[ic - m..ic], &ext_a[ia - n..ia], p, q, r + after + before)?;
        ic -= m;
        ia -= n;
        v = mono.dot(&v);
        if pos > 0 {
            let t = r + after + kc[pos] + before;
            for (b, z) in v.iter_mut().enumerate() {
                let e = fock.energy(b) + t;
                let bar = cutoff_chibar(e, rho);
                *z = if bar == 0.0 { c64::new(0.0, 0.0) } else { *z * bar * bar / w00.eval_nodes(grid, e, &[]) };
            }
        }
    }
    Ok(v[0])
}

/// Order-`L` contribution to the unscaled kernel `x_{M,N}` at one point:
/// `(-1)^{L-1}` times the binomially weighted sum of vacuum amplitudes over
/// every term with these external modes. Mode indices refer to `modes`.
pub fn series_term(
    chain: &KernelChain,
    modes: &ModeSet,
    rho: f64,
    l: usize,
    r: f64,
    ext_c: &[usize],
    ext_a: &[usize],
) -> Result<c64> {
    if l == 0 {
        return Err(SrgError::InvalidArgument("series order starts at 1".into()));
    }
    let ctx = Ctx::new(chain, modes, rho, l)?;
    let mut sa = StateVec::new(ctx.space.dim());
    let mut sb = StateVec::new(ctx.space.dim());
    let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
    let mut acc = c64::new(0.0, 0.0);
    for mc in compositions(ext_c.len(), l) {
        for na in compositions(ext_a.len(), l) {
            if let Some(factors) = ctx.factors(&mc, &na) {
                acc += ctx.amplitude(&factors, ext_c, ext_a, r, &mut sa, &mut sb) * sign;
            }
        }
    }
    Ok(acc)
}

/// Measured corrections of one step next to the a-priori bounds.
#[derive(Clone, Copy, Debug)]
pub struct WickDiagnostics {
    pub c_chi: f64,
    pub w1_in: f64,
    pub w1_out: f64,
    pub w1_bound: f64,
    pub energy_dev: f64,
    pub energy_bound: f64,
    pub t_prime_dev: f64,
    pub t_prime_bound: f64,
}

impl WickDiagnostics {
    pub fn within_bounds(&self) -> bool {
        self.w1_out <= self.w1_bound && self.energy_dev <= self.energy_bound && self.t_prime_dev <= self.t_prime_bound
    }
}

fn w1_norm_s(chain: &KernelChain, s: usize) -> f64 {
    let p = chain.params();
    chain
        .iter_w1()
        .map(|((m, n), w)| w.norm_mu_s(chain.grid(), p.mu, s) * p.xi.powi(-((m + n) as i32)))
        .sum()
}

/// Compares `hat = R_rho(chain)` with the norm estimates of one step, using
/// the parameters stored in `chain`.
pub fn wick_norm_diagnostics(chain: &KernelChain, hat: &KernelChain, rho: f64) -> WickDiagnostics {
    let p = chain.params();
    let c = c_chi::<f64>(p.s.min(2));
    let w1_in = chain.w1_norm();
    let d = |s: usize| c * p.xi * w1_norm_s(chain, s) / rho;
    let t_in = chain.polydisc_stats().t_prime_dev;
    let out = hat.polydisc_stats();
    WickDiagnostics {
        c_chi: c,
        w1_in,
        w1_out: hat.w1_norm(),
        w1_bound: 256.0 * c * c * rho.powf(p.mu) * w1_in,
        energy_dev: (hat.energy() - chain.energy() / rho).norm(),
        energy_bound: 24.0 * c * d(0).powi(2),
        t_prime_dev: out.t_prime_dev,
        t_prime_bound: t_in + 24.0 * c * rho * d(1).powi(2),
    }
}

/// Toy chain `w00 = r`, `w10 = w01 = g |k|^mu` on the grid of `modes`.
pub fn toy_chain(modes: &ModeSet, nr: usize, r_max: f64, g: c64, params: crate::BanachParams, m_max: usize) -> Result<KernelChain> {
    let grid = modes.grid(nr, r_max)?;
    let w00 = Kernel::from_fn(0, 0, &grid, |r, _| c64::new(r, 0.0));
    let mut chain = KernelChain::new(grid.clone(), m_max, params, w00)?;
    if m_max >= 1 {
        let mu = params.mu;
        chain.insert(Kernel::from_fn(1, 0, &grid, |_, k| g * k[0].powf(mu)))?;
        chain.insert(Kernel::from_fn(0, 1, &grid, |_, k| g * k[0].powf(mu)))?;
    }
    Ok(chain)
}

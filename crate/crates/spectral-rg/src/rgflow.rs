//! Iteration of `R_rho`: the energies `E_n(lambda)`, the fixed points
//! `e_n`, the flow toward `tau H_f`, and the spectrum cone.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SrgError};
use crate::fock::ModeSet;
use crate::kernels::c_chi;
use crate::wick::{renormalize, renormalized_energy, WickConfig};
use crate::{BanachParams, KernelChain};

/// Scale, norm and truncation parameters of a flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RGConfig {
    pub rho: f64,
    pub mu: f64,
    pub s: usize,
    /// Norm weight; `None` selects `sqrt(rho) / (4 C_chi)`.
    pub xi: Option<f64>,
    pub m_max: usize,
    pub l_max: usize,
    pub n_steps: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub rank_tol: f64,
    pub tail_threshold: f64,
    /// Number of boson modes `G`.
    pub modes: usize,
    pub kappa_max: f64,
    pub n_max: usize,
    pub nr: usize,
    pub r_max: f64,
    /// Extra steps past `n_steps` used to measure the tail of the flow.
    pub tail_steps: usize,
}

impl Default for RGConfig {
    fn default() -> Self {
        Self {
            rho: 0.4,
            mu: 0.5,
            s: 1,
            xi: None,
            m_max: 2,
            l_max: 3,
            n_steps: 6,
            fp_tol: 1e-16,
            fp_max_iter: 200,
            rank_tol: 1e-8,
            tail_threshold: 1e-12,
            modes: 16,
            kappa_max: 1.0,
            n_max: 3,
            nr: 41,
            r_max: 2.0,
            tail_steps: 2,
        }
    }
}

impl RGConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 0.5) {
            return Err(SrgError::InvalidArgument(format!("rho = {} is not in (0, 1/2]", self.rho)));
        }
        if self.s > 2 {
            return Err(SrgError::InvalidArgument("s must be 0, 1 or 2".into()));
        }
        if self.l_max == 0 || self.modes == 0 || self.nr < 4 || self.r_max < 1.0 {
            return Err(SrgError::InvalidArgument("l_max, modes >= 1, nr >= 4 and r_max >= 1 required".into()));
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return Err(SrgError::InvalidArgument("fp_tol and fp_max_iter must be positive".into()));
        }
        BanachParams::new(self.mu, self.s, self.xi())?;
        Ok(())
    }

    pub fn c_chi(&self) -> f64 {
        c_chi(self.s.max(1))
    }

    pub fn xi(&self) -> f64 {
        self.xi.unwrap_or_else(|| self.rho.sqrt() / (4.0 * self.c_chi()))
    }

    pub fn params(&self) -> Result<BanachParams> {
        BanachParams::new(self.mu, self.s, self.xi())
    }

    pub fn mode_set(&self) -> Result<ModeSet> {
        ModeSet::new(self.modes, self.rho, self.kappa_max)
    }

    pub fn wick(&self) -> WickConfig {
        WickConfig { l_max: self.l_max, tail_threshold: self.tail_threshold, enforce_domain: true, estimate_dropped: true }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| SrgError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Iterates of `(alpha, beta, gamma)` under one step of the map
/// `alpha' = 3 C gamma^2 / (2 rho)`, `beta' = beta + alpha'`,
/// `gamma' = 256 C^2 rho^mu gamma`.
pub fn theory_sequences(cfg: &RGConfig, beta0: f64, gamma0: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let c = cfg.c_chi();
    let mut out = Vec::with_capacity(n + 1);
    let (mut a, mut b, mut g) = (0.0, beta0, gamma0);
    out.push((a, b, g));
    for _ in 0..n {
        a = 3.0 * c * g * g / (2.0 * cfg.rho);
        b += a;
        g *= 256.0 * c * c * cfg.rho.powf(cfg.mu);
        out.push((a, b, g));
    }
    out
}

/// `tau(0)` and `sup_{0 < r <= 1} |tau(r) - tau(0)|` for
/// `w00(r) = E + tau(r) r`.
pub fn tau_profile(chain: &KernelChain) -> (c64, f64) {
    let grid = chain.grid();
    let w = chain.w00();
    let d = w.r_derivative(grid, 1);
    let tau0 = d.values()[0];
    let e = w.values()[0];
    let flat = grid
        .r_nodes()
        .iter()
        .enumerate()
        .skip(1)
        .take_while(|(_, &r)| r <= 1.0 + 1e-12)
        .map(|(i, &r)| ((w.values()[i] - e) / r - tau0).norm())
        .fold(0.0, f64::max);
    (tau0, flat)
}

/// Measurements of one renormalization step.
#[derive(Clone, Debug)]
pub struct StepData {
    pub chain: KernelChain,
    /// `Delta_n E = E_n - E_{n-1} / rho`: the constant-part correction.
    pub delta_e: c64,
    /// Chain norm of the last series order that was kept.
    pub last_term: f64,
    pub dropped: f64,
}

/// Applies `R_rho` `n` times to `chain`, keeping every intermediate chain.
pub fn evolve(chain: &KernelChain, modes: &ModeSet, cfg: &RGConfig, n: usize) -> Result<Vec<StepData>> {
    evolve_with(chain, modes, cfg, 1..=n, &cfg.wick())
}

/// `evolve` with error messages numbered by `steps`.
fn evolve_with(
    chain: &KernelChain,
    modes: &ModeSet,
    cfg: &RGConfig,
    steps: std::ops::RangeInclusive<usize>,
    wick: &WickConfig,
) -> Result<Vec<StepData>> {
    let mut out: Vec<StepData> = Vec::with_capacity(steps.clone().count());
    let mut cur = chain.clone();
    for step in steps {
        let r = renormalize(&cur, modes, cfg.rho, wick).map_err(|e| at_step(e, step))?;
        let delta_e = r.chain.energy() - cur.energy() / cfg.rho;
        out.push(StepData {
            chain: r.chain.clone(),
            delta_e,
            last_term: r.term_norms.last().copied().unwrap_or(0.0),
            dropped: r.dropped_norm.unwrap_or(0.0),
        });
        cur = r.chain;
    }
    Ok(out)
}

fn at_step(e: SrgError, step: usize) -> SrgError {
    match e {
        SrgError::OutsidePolydisc(m) => SrgError::OutsidePolydisc(format!("step {step}: {m}")),
        SrgError::Domain(m) => SrgError::Domain(format!("step {step}: {m}")),
        other => other,
    }
}

/// `H_s - lambda` for a stable-part chain.
pub fn shifted(chain_s: &KernelChain, lambda: c64) -> KernelChain {
    let mut c = chain_s.clone();
    c.shift(-lambda);
    c
}

/// `E_n(lambda)`: the vacuum expectation of `R_rho^n(H_s - lambda)`.
pub fn en_eval(chain_s: &KernelChain, modes: &ModeSet, cfg: &RGConfig, lambda: c64, n: usize) -> Result<c64> {
    let h = shifted(chain_s, lambda);
    if n == 0 {
        return Ok(h.energy());
    }
    let wick = WickConfig { estimate_dropped: false, ..cfg.wick() };
    let prefix = evolve_with(&h, modes, cfg, 1..=n - 1, &wick)?;
    let last = prefix.last().map(|s| &s.chain).unwrap_or(&h);
    renormalized_energy(last, modes, cfg.rho, &wick).map_err(|e| at_step(e, n))
}

/// Solves `lambda = lambda + rho^n E_n(lambda)` by Picard iteration from
/// `e_prev`. Returns `e_n` and the number of iterations.
pub fn solve_en(chain_s: &KernelChain, modes: &ModeSet, cfg: &RGConfig, n: usize, e_prev: c64) -> Result<(c64, usize)> {
    solve_en_from(chain_s, modes, cfg, n, e_prev, None)
}

/// [`solve_en`] with `E_n(e_prev)` already known.
fn solve_en_from(
    chain_s: &KernelChain,
    modes: &ModeSet,
    cfg: &RGConfig,
    n: usize,
    e_prev: c64,
    mut first: Option<c64>,
) -> Result<(c64, usize)> {
    let scale = cfg.rho.powi(n as i32);
    let mut lambda = e_prev;
    let mut last = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=cfg.fp_max_iter {
        let en = match first.take() {
            Some(v) => v,
            None => en_eval(chain_s, modes, cfg, lambda, n)?,
        };
        let step = en * scale;
        lambda += step;
        let size = step.norm();
        if size < cfg.fp_tol * lambda.norm().max(1.0) {
            return Ok((lambda, it));
        }
        growth = if size > last { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(SrgError::FixedPointNotConverged { iterations: it, last_step: size });
        }
        last = size;
    }
    Err(SrgError::FixedPointNotConverged { iterations: cfg.fp_max_iter, last_step: last })
}

/// One row of a flow trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    #[serde(rename = "re_En")]
    pub re_en_cap: f64,
    #[serde(rename = "im_En")]
    pub im_en_cap: f64,
    pub re_en: f64,
    pub im_en: f64,
    #[serde(rename = "absE")]
    pub abs_e: f64,
    #[serde(rename = "supTprime")]
    pub sup_tprime: f64,
    pub norm_w1: f64,
    pub dropped: f64,
    pub tau0_re: f64,
    pub tau0_im: f64,
    pub tau_flatness: f64,
}

/// Per-step record of a flow. Step `n` is measured on `R^n(H_s - e_{n-1})`,
/// the chain the fixed-point search of `e_n` starts from.
#[derive(Clone, Debug)]
pub struct FlowStep {
    pub n: usize,
    /// `E_n(e_{n-1})`.
    pub en: c64,
    pub e: c64,
    /// `|Delta_n E(e_{n-1})|`.
    pub alpha: f64,
    pub abs_e: f64,
    pub sup_tprime: f64,
    pub norm_w1: f64,
    pub dropped: f64,
    pub tau0: c64,
    pub tau_flatness: f64,
    pub iterations: usize,
}

/// Error budget of a flow's energy, each entry an absolute bound on `e`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TruncationBudget {
    /// `3 alpha_{N+1} rho^{N+1}`: stopping the flow after `N` steps.
    pub termination: f64,
    /// `sum rho^n` times the last kept series order.
    pub series: f64,
    /// `sum rho^n` times the first dropped kernel order.
    pub dropped: f64,
    /// Radial interpolation, from a Richardson comparison with a grid of
    /// half the resolution.
    pub r_interp: f64,
}

impl TruncationBudget {
    pub fn total(&self) -> f64 {
        self.termination + self.series + self.dropped + self.r_interp
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub steps: Vec<FlowStep>,
    /// `H_u`: vacuum expectation of the input chain.
    pub h_u: c64,
    /// `e(H_s)` approximated by `e_N`.
    pub e_s: c64,
    pub tau: c64,
    /// `Delta_i E(e_N)` for `i = 1 .. N + tail_steps`.
    pub delta_e: Vec<c64>,
    /// `R^i(H_s - e_N)` for `i = 1 .. N + tail_steps`.
    pub chains: Vec<KernelChain>,
    pub budget: TruncationBudget,
}

impl FlowResult {
    /// Eigenvalue estimate for the full chain, `H_u + e(H_s)`.
    pub fn energy(&self) -> c64 {
        self.h_u + self.e_s
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.steps
            .iter()
            .map(|s| TraceRow {
                n: s.n,
                re_en_cap: s.en.re,
                im_en_cap: s.en.im,
                re_en: s.e.re,
                im_en: s.e.im,
                abs_e: s.abs_e,
                sup_tprime: s.sup_tprime,
                norm_w1: s.norm_w1,
                dropped: s.dropped,
                tau0_re: s.tau0.re,
                tau0_im: s.tau0.im,
                tau_flatness: s.tau_flatness,
            })
            .collect()
    }

    /// Measured `alpha_i = |Delta_i E(e_N)|`.
    pub fn alphas(&self) -> Vec<f64> {
        self.delta_e.iter().map(|d| d.norm()).collect()
    }
}

/// Splits `H = H_u + H_s`.
pub fn split_unstable(chain: &KernelChain) -> (c64, KernelChain) {
    let h_u = chain.energy();
    let mut s = chain.clone();
    s.shift(-h_u);
    (h_u, s)
}

/// Runs `n_steps` rounds of (measure, solve for `e_n`) on `chain`, then
/// measures the flow of `H_s - e_N` for `tail_steps` more steps.
pub fn run_flow(chain: &KernelChain, cfg: &RGConfig) -> Result<FlowResult> {
    cfg.validate()?;
    let modes = cfg.mode_set()?;
    let (h_u, chain_s) = split_unstable(chain);
    let mut steps = Vec::with_capacity(cfg.n_steps);
    let mut e = c64::new(0.0, 0.0);
    // R^{n-1}(H_s - e_{n-1}), extended by one step each round.
    let mut prefix: Vec<StepData> = Vec::new();
    for n in 1..=cfg.n_steps {
        let start = prefix.last().map(|s| s.chain.clone()).unwrap_or_else(|| shifted(&chain_s, e));
        let mut one = evolve_with(&start, &modes, cfg, n..=n, &cfg.wick())?;
        let data = one.pop().unwrap();
        let stats = data.chain.polydisc_stats();
        let (tau0, tau_flatness) = tau_profile(&data.chain);
        let en = data.chain.energy();
        let (e_new, iterations) = solve_en_from(&chain_s, &modes, cfg, n, e, Some(en))?;
        steps.push(FlowStep {
            n,
            en,
            e: e_new,
            alpha: data.delta_e.norm(),
            abs_e: stats.e.norm(),
            sup_tprime: stats.t_prime_dev,
            norm_w1: stats.w1_norm,
            dropped: data.dropped + data.last_term,
            tau0,
            tau_flatness,
            iterations,
        });
        e = e_new;
        if n < cfg.n_steps {
            prefix = evolve(&shifted(&chain_s, e), &modes, cfg, n)?;
        }
    }

    let total = cfg.n_steps + cfg.tail_steps;
    let fin = evolve(&shifted(&chain_s, e), &modes, cfg, total)?;
    let delta_e: Vec<c64> = fin.iter().map(|s| s.delta_e).collect();
    let tau = fin.get(cfg.n_steps.max(1) - 1).map(|s| tau_profile(&s.chain).0).unwrap_or(c64::new(1.0, 0.0));

    let mut budget = TruncationBudget::default();
    let nn = cfg.n_steps;
    budget.termination = if total > nn { 3.0 * delta_e[nn].norm() * cfg.rho.powi(nn as i32 + 1) } else { 0.0 };
    for (i, s) in fin.iter().take(nn).enumerate() {
        let w = cfg.rho.powi(i as i32 + 1);
        budget.series += w * s.last_term;
        budget.dropped += w * s.dropped;
    }
    budget.r_interp = r_interp_estimate(&chain_s, cfg, e, &delta_e)?;

    Ok(FlowResult {
        steps,
        h_u,
        e_s: e,
        tau,
        delta_e,
        chains: fin.into_iter().map(|s| s.chain).collect(),
        budget,
    })
}

/// `|E_0N(e)|` on the grid of the flow against a grid with every other
/// radial node, scaled for second-order interpolation error.
fn r_interp_estimate(chain_s: &KernelChain, cfg: &RGConfig, e: c64, fine: &[c64]) -> Result<f64> {
    if cfg.n_steps == 0 || cfg.nr < 8 || cfg.nr.is_multiple_of(2) {
        return Ok(0.0);
    }
    let modes = cfg.mode_set()?;
    let coarse = chain_s.coarsen_r()?;
    let mut ccfg = cfg.clone();
    ccfg.nr = coarse.grid().nr();
    let steps = evolve(&shifted(&coarse, e), &modes, &ccfg, cfg.n_steps)?;
    let weighted = |i: usize, d: c64| d * cfg.rho.powi(i as i32 + 1);
    let f: c64 = fine.iter().take(cfg.n_steps).enumerate().map(|(i, &d)| weighted(i, d)).sum();
    let c: c64 = steps.iter().enumerate().map(|(i, s)| weighted(i, s.delta_e)).sum();
    Ok((f - c).norm() / 3.0)
}

/// `|e - sum_{i <= n} rho^i Delta_i E(e)|` and the measured tail
/// `sum_{i > n} rho^i alpha_i`, using the flow's last `e_N` and `n = N`.
pub fn consistency(flow: &FlowResult, rho: f64) -> (f64, f64) {
    let n = flow.steps.len();
    let partial: c64 = flow.delta_e.iter().take(n).enumerate().map(|(i, d)| d * rho.powi(i as i32 + 1)).sum();
    let tail: f64 = flow.delta_e.iter().enumerate().skip(n).map(|(i, d)| d.norm() * rho.powi(i as i32 + 1)).sum();
    ((flow.e_s - partial).norm(), tail)
}

/// Distance from `w` to the cone `S = {Re w >= 0, |Im w| <= Re w / 3}`.
pub fn cone_distance(w: c64) -> f64 {
    if w.re >= 0.0 && w.im.abs() <= w.re / 3.0 {
        return 0.0;
    }
    let n = 10f64.sqrt();
    [(3.0 / n, 1.0 / n), (3.0 / n, -1.0 / n)]
        .iter()
        .map(|&(dx, dy)| {
            let t = (w.re * dx + w.im * dy).max(0.0);
            ((w.re - t * dx).powi(2) + (w.im - t * dy).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Membership of every eigenvalue in `e + S` inflated by `tol`.
pub fn cone_check(eigs: &[c64], e: c64, tol: f64) -> Vec<bool> {
    eigs.iter().map(|&z| cone_distance(z - e) <= tol).collect()
}

pub fn write_trace<W: Write>(flow: &FlowResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in flow.rows() {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> SrgError {
    SrgError::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_membership() {
        let e = c64::new(-0.1, 0.0);
        let got = cone_check(&[c64::new(0.0, 0.0), c64::new(-0.2, 0.0), c64::new(0.2, 0.09)], e, 0.0);
        assert_eq!(got, vec![true, false, true]);
        assert!((cone_distance(c64::new(-1.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((cone_distance(c64::new(0.0, 1.0)) - 3.0 / 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RGConfig { xi: Some(0.25), n_steps: 4, ..RGConfig::default() };
        let back = RGConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert!(RGConfig::from_toml("rho = 0.7").is_err());
        assert!(RGConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn default_xi_is_small() {
        let cfg = RGConfig::default();
        let xi = cfg.xi();
        assert!((xi - cfg.rho.sqrt() / (4.0 * cfg.c_chi())).abs() < 1e-18);
        assert!(xi < 1e-3);
    }
}

use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_rg::fock::{FockSpace, ModeSet};
use spectral_rg::kernels::{chi1, cutoff_chibar};
use spectral_rg::wick::{
    renormalize, renormalized_energy, series_term, toy_chain, vacuum_amplitude, wick_norm_diagnostics, WickConfig,
    WickTerm,
};
use spectral_rg::{BanachParams, Kernel, KernelChain, SrgError};

const RHO: f64 = 0.5;
const MU: f64 = 0.5;

fn params() -> BanachParams {
    BanachParams::new(MU, 1, 0.25).unwrap()
}

fn loose() -> WickConfig {
    WickConfig { l_max: 2, tail_threshold: 0.0, enforce_domain: false, estimate_dropped: false }
}

fn g_mid(s: f64) -> f64 {
    let a = chi1(s);
    let b = cutoff_chibar(s, RHO);
    if b == 0.0 {
        return 0.0;
    }
    a * a * b * b / s
}

#[test]
fn free_field_is_a_fixed_point() {
    let modes = ModeSet::new(5, RHO, 1.0).unwrap();
    let grid = modes.grid(41, 2.0).unwrap();
    let w00 = Kernel::from_fn(0, 0, &grid, |r, _| c64::new(r, 0.0));
    let chain = KernelChain::new(grid.clone(), 2, params(), w00).unwrap();
    let out = renormalize(&chain, &modes, RHO, &WickConfig::default()).unwrap();
    assert!(out.chain.max_abs_diff(&chain) < 1e-14);
    for (_, w) in out.chain.iter_w1() {
        assert_eq!(w.max_abs(), 0.0);
    }
}

#[test]
fn constant_is_expanded_by_inverse_rho() {
    let modes = ModeSet::new(5, RHO, 1.0).unwrap();
    let grid = modes.grid(41, 2.0).unwrap();
    let e = c64::new(0.01, -0.02);
    let w00 = Kernel::from_fn(0, 0, &grid, |r, _| e + r);
    let chain = KernelChain::new(grid.clone(), 2, params(), w00).unwrap();
    let out = renormalize(&chain, &modes, RHO, &WickConfig::default()).unwrap();
    for (ir, &r) in grid.r_nodes().iter().enumerate() {
        let got = out.chain.w00().values()[ir];
        assert!((got - (e / RHO + r)).norm() < 1e-14, "r = {r}: {got}");
    }
}

#[test]
fn second_order_matches_closed_forms() {
    let g = 0.05;
    let modes = ModeSet::new(6, RHO, 1.0).unwrap();
    let chain = toy_chain(&modes, 41, 2.0, c64::new(g, 0.0), params(), 2).unwrap();
    let grid = chain.grid().clone();
    let out = renormalize(&chain, &modes, RHO, &loose()).unwrap();
    let kappa = modes.kappa();
    let v = modes.weights();
    let nk = grid.nk();

    // Self-energy.
    for (ir, &r) in grid.r_nodes().iter().enumerate().filter(|(_, &r)| r <= 1.0) {
        let rp = RHO * r;
        let x00: f64 = -(1..modes.len())
            .map(|x| v[x] * g * g * kappa[x].powf(2.0 * MU) * g_mid(rp + kappa[x]))
            .sum::<f64>()
            * chi1(rp).powi(2);
        let want = (rp + chi1(r).powi(2) * x00) / RHO;
        let got = out.chain.w00().values()[ir];
        assert!((got - want).norm() < 1e-14, "r = {r}: {got} vs {want}");
    }

    // Direct and exchange terms of w11, and the single-exchange w20.
    let w11 = out.chain.get(1, 1).unwrap();
    let w20 = out.chain.get(2, 0).unwrap();
    for (ir, &r) in grid.r_nodes().iter().enumerate().filter(|(_, &r)| r <= 1.0) {
        let rp = RHO * r;
        for a in 1..nk {
            for b in 1..nk {
                let (k, kt) = (RHO * grid.k_nodes()[a], RHO * grid.k_nodes()[b]);
                let pre = -g * g * k.powf(MU) * kt.powf(MU);
                let x11 = pre * chi1(rp + k) * chi1(rp + kt) * (g_mid(rp) + g_mid(rp + k + kt));
                let got = w11.get(ir, &[a, b]);
                assert!((got - RHO * x11).norm() < 1e-14, "w11 at r={r}, {a},{b}: {got} vs {}", RHO * x11);

                let x20 = |k1: f64, k2: f64| pre * chi1(rp + k1 + k2) * chi1(rp) * g_mid(rp + k2);
                let sym = 0.5 * (x20(k, kt) + x20(kt, k));
                let got = w20.get(ir, &[a, b]);
                assert!((got - RHO * sym).norm() < 1e-14, "w20 at r={r}, {a},{b}");
            }
        }
    }

    // The first-order part of w10 is the scaled input.
    let w10 = out.chain.get(1, 0).unwrap();
    for (ir, &r) in grid.r_nodes().iter().enumerate().filter(|(_, &r)| r <= 1.0) {
        for a in 1..nk {
            let k = grid.k_nodes()[a];
            let want = g * (RHO * k).powf(MU) * chi1(RHO * (r + k)) * chi1(RHO * r);
            assert!((w10.get(ir, &[a]) - want).norm() < 1e-15);
        }
    }
}

fn random_chain(modes: &ModeSet, rng: &mut ChaCha8Rng, scale: f64) -> KernelChain {
    let grid = modes.grid(21, 2.0).unwrap();
    let w00 = Kernel::from_fn(0, 0, &grid, |r, _| c64::new(r + 0.01, 0.02 * r));
    let mut chain = KernelChain::new(grid.clone(), 2, params(), w00).unwrap();
    for t in 1..=2 {
        for m in 0..=t {
            let mut w = Kernel::zeros(m, t - m, &grid);
            for z in w.values_mut() {
                *z = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            }
            chain.insert(w).unwrap();
        }
    }
    chain
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Every `(m, p, n, q)` term with the given external distribution whose
/// kernels exist, weighted by its binomials.
fn terms(mc: &[usize], na: &[usize], m_max: usize) -> Vec<(WickTerm, f64)> {
    let l = mc.len();
    let mut out = vec![(Vec::new(), 1.0)];
    for pos in 0..l {
        let mut next = Vec::new();
        for (f, wgt) in &out {
            for p in 0..=m_max {
                for q in 0..=m_max {
                    let (m, n) = (mc[pos], na[pos]);
                    let legs = m + p + n + q;
                    if legs == 0 || legs > m_max {
                        continue;
                    }
                    let mut f: Vec<(usize, usize, usize, usize)> = f.clone();
                    f.push((m, p, n, q));
                    next.push((f, wgt * binom(m + p, p) * binom(n + q, q)));
                }
            }
        }
        out = next;
    }
    out.into_iter().map(|(f, w)| (WickTerm::new(f).unwrap(), w)).collect()
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .flat_map(|first| {
            compositions(total - first, parts - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

#[test]
fn sparse_amplitudes_match_dense_vacuum_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let modes = ModeSet::new(4, RHO, 1.0).unwrap();
    let chain = random_chain(&modes, &mut rng, 0.3);
    let fock = FockSpace::new(modes.clone(), 4).unwrap();
    let externals: &[(&[usize], &[usize])] =
        &[(&[], &[]), (&[2], &[]), (&[], &[3]), (&[1], &[2]), (&[2, 3], &[]), (&[3], &[3]), (&[], &[1, 2])];
    let mut checked = 0;
    for l in 1..=4 {
        for &(ec, ea) in externals {
            if l == 1 && ec.is_empty() && ea.is_empty() {
                continue;
            }
            for &r in &[0.0, 0.13, 0.37] {
                let sparse = series_term(&chain, &modes, RHO, l, r, ec, ea).unwrap();
                let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
                let mut dense = c64::new(0.0, 0.0);
                for mc in compositions(ec.len(), l) {
                    for na in compositions(ea.len(), l) {
                        for (t, wgt) in terms(&mc, &na, 2) {
                            dense += vacuum_amplitude(&t, &chain, &fock, RHO, r, ec, ea).unwrap() * (wgt * sign);
                        }
                    }
                }
                let tol = 1e-13 * dense.norm().max(1e-3);
                assert!((sparse - dense).norm() < tol, "L={l} {ec:?} {ea:?} r={r}: {sparse} vs {dense}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 4 * 3 * 7 - 3);
}

#[test]
fn one_mode_self_energy() {
    let g = 0.1;
    let modes = ModeSet::new(2, RHO, 1.0).unwrap();
    let chain = toy_chain(&modes, 21, 2.0, c64::new(g, 0.0), params(), 1).unwrap();
    let fock = FockSpace::new(modes.clone(), 2).unwrap();
    let k = modes.kappa()[1];
    let v = modes.weights()[1];
    let t = WickTerm::new(vec![(0, 0, 0, 1), (0, 1, 0, 0)]).unwrap();
    let got = vacuum_amplitude(&t, &chain, &fock, RHO, 0.0, &[], &[]).unwrap();
    let want = g * g * k.powf(2.0 * MU) * v * chi1(0.0f64).powi(2) * g_mid(k);
    assert!((got - want).norm() < 1e-15);
}

#[test]
fn outputs_are_symmetric_and_energy_path_agrees() {
    let modes = ModeSet::new(6, RHO, 1.0).unwrap();
    let chain = toy_chain(&modes, 41, 2.0, c64::new(0.002, 0.0), params(), 2).unwrap();
    let cfg = WickConfig { l_max: 3, ..WickConfig::default() };
    let out = renormalize(&chain, &modes, RHO, &cfg).unwrap();
    for (_, w) in out.chain.iter_w1() {
        assert!(w.asymmetry() < 1e-16);
    }
    let e = renormalized_energy(&chain, &modes, RHO, &cfg).unwrap();
    assert!((e - out.chain.energy()).norm() < 1e-16);
    assert!(out.term_norms[1] < out.term_norms[0]);
    let d = wick_norm_diagnostics(&chain, &out.chain, RHO);
    assert!(d.within_bounds(), "{d:?}");
}

#[test]
fn refuses_chains_outside_the_domain() {
    let modes = ModeSet::new(5, RHO, 1.0).unwrap();
    let chain = toy_chain(&modes, 21, 2.0, c64::new(1.0, 0.0), params(), 2).unwrap();
    let err = renormalize(&chain, &modes, RHO, &WickConfig::default()).unwrap_err();
    assert!(matches!(err, SrgError::OutsidePolydisc(_)));
}

#[test]
fn dropped_order_is_reported() {
    let modes = ModeSet::new(5, RHO, 1.0).unwrap();
    let chain = toy_chain(&modes, 21, 2.0, c64::new(0.002, 0.0), params(), 1).unwrap();
    let cfg = WickConfig { estimate_dropped: true, ..WickConfig::default() };
    let out = renormalize(&chain, &modes, RHO, &cfg).unwrap();
    let d = out.dropped_norm.unwrap();
    assert!(d > 0.0 && d.is_finite());
}

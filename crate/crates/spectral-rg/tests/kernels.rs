use num_complex::Complex64 as c64;
use proptest::prelude::*;

use spectral_rg::fock::ModeSet;
use spectral_rg::kernels::io::{chain_from_str, chain_to_string};
use spectral_rg::kernels::{chi1, chibar1, cutoff_chi, cutoff_chibar};
use spectral_rg::{BanachParams, Kernel, KernelChain, RadialGrid};

fn grid(rho: f64) -> RadialGrid {
    ModeSet::new(5, rho, 1.0).unwrap().grid(11, 2.0).unwrap()
}

fn kernel(m: usize, n: usize, g: &RadialGrid, vals: &[(f64, f64)]) -> Kernel {
    let len = g.nr() * g.nk().pow((m + n) as u32);
    let values = (0..len).map(|i| {
        let (a, b) = vals[i % vals.len()];
        c64::new(a + i as f64 * 1e-3, b)
    });
    Kernel::from_values(m, n, g, values.collect()).unwrap()
}

proptest! {
    #[test]
    fn cutoffs_form_a_partition_of_unity(r in 0.0..3.0f64) {
        prop_assert!((chi1(r).powi(2) + chibar1(r).powi(2) - 1.0).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&chi1(r)));
    }

    #[test]
    fn chi1_is_nonincreasing(a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(chi1(lo) >= chi1(hi));
    }

    #[test]
    fn rho_cutoff_is_a_rescaled_unit_cutoff(r in 0.0..1.0f64, rho in 0.1..0.9f64) {
        prop_assert_eq!(cutoff_chi(r, rho), chi1(r / rho));
        prop_assert_eq!(cutoff_chibar(r, rho), chibar1(r / rho));
        if r <= 0.9 * rho {
            prop_assert_eq!(cutoff_chi(r, rho), 1.0);
        }
    }

    #[test]
    fn symmetrization_is_a_projection(
        m in 0usize..3,
        n in 0usize..3,
        vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..7),
    ) {
        let g = grid(0.5);
        let mut w = kernel(m, n, &g, &vals);
        w.symmetrize();
        let tol = 1e-14 * w.max_abs().max(1.0);
        prop_assert!(w.asymmetry() <= tol);
        let mut twice = w.clone();
        twice.symmetrize();
        prop_assert!(twice.max_abs_diff(&w) <= tol);
    }

    #[test]
    fn adjoint_is_an_involution(
        m in 0usize..3,
        n in 0usize..3,
        vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..7),
    ) {
        let g = grid(0.5);
        let w = kernel(m, n, &g, &vals);
        let a = w.adjoint();
        prop_assert_eq!(a.order(), (n, m));
        prop_assert_eq!(a.adjoint().max_abs_diff(&w), 0.0);
    }

    #[test]
    fn one_slot_monomials_obey_the_scaling_bound(
        rho in 0.2..0.6f64,
        mu in 0.25..1.0f64,
        extra in 0.0..1.5f64,
        adjoint in any::<bool>(),
    ) {
        let g = grid(rho);
        let a = mu + extra;
        let (m, n) = if adjoint { (0, 1) } else { (1, 0) };
        let w = Kernel::from_fn(m, n, &g, |r, ks| c64::new((1.0 + r) * ks[0].powf(a), 0.0));
        let lhs = w.scale(&g, rho).mu_sup(&g, mu);
        let norm = w.mu_sup(&g, mu);
        prop_assert!(lhs <= rho.powf(mu) * norm * (1.0 + 1e-12));
    }

    #[test]
    fn text_format_round_trips_exactly(
        vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..9),
        mu in 0.1..1.0f64,
        xi in 0.01..1.0f64,
    ) {
        let g = grid(0.4);
        let params = BanachParams::new(mu, 1, xi).unwrap();
        let w00 = Kernel::from_fn(0, 0, &g, |r, _| c64::new(r, vals[0].1));
        let mut chain = KernelChain::new(g.clone(), 2, params, w00).unwrap();
        chain.insert(kernel(1, 0, &g, &vals)).unwrap();
        chain.insert(kernel(1, 1, &g, &vals)).unwrap();
        let back: KernelChain = chain_from_str(&chain_to_string(&chain)).unwrap();
        prop_assert_eq!(back.max_abs_diff(&chain), 0.0);
        prop_assert_eq!(back.params().mu, mu);
        prop_assert_eq!(back.grid().k_nodes(), chain.grid().k_nodes());
    }
}

#[test]
fn truncated_text_is_rejected() {
    let g = grid(0.4);
    let params = BanachParams::new(0.5, 1, 0.25).unwrap();
    let chain = KernelChain::new(g.clone(), 2, params, Kernel::from_fn(0, 0, &g, |r, _| c64::new(r, 0.0))).unwrap();
    let text = chain_to_string(&chain);
    assert!(chain_from_str::<f64>(&text[..text.len() / 2]).is_err());
    assert!(chain_from_str::<f64>(&text.replace("kernel-chain 1", "kernel-chain 7")).is_err());
}

use proptest::prelude::*;

use spectral_rg::cli::{Model, RunConfig};
use spectral_rg::eigensolve::{eigenvector_sequence, gamma_dilation, overlap};
use spectral_rg::fock::{assemble_hamiltonian, ground_state, FockSpace, ModeSet};
use spectral_rg::linalg::{self, c, CMatrix};
use spectral_rg::rgflow::run_flow;

fn occupancy_projector(fock: &FockSpace, mode: usize) -> CMatrix {
    let d: Vec<_> = (0..fock.dim()).map(|b| c(if fock.state(b)[mode] == 0 { 1.0 } else { 0.0 })).collect();
    linalg::diag(&d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dilation_is_a_partial_isometry(g in 2usize..7, n_max in 1usize..4, rho in 0.2..0.7f64) {
        let fock = FockSpace::new(ModeSet::new(g, rho, 1.0).unwrap(), n_max).unwrap();
        let (gm, gs) = gamma_dilation(&fock, rho).unwrap();
        prop_assert_eq!(linalg::max_abs(&(gs.dot(&gm) - occupancy_projector(&fock, 0))), 0.0);
        prop_assert_eq!(linalg::max_abs(&(gm.dot(&gs) - occupancy_projector(&fock, g - 1))), 0.0);
        let hf = fock.hf();
        let p = occupancy_projector(&fock, g - 1);
        let lhs = gm.dot(&hf).dot(&gs);
        let rhs = p.dot(&hf).dot(&p).mapv(|z| z * rho);
        prop_assert!(linalg::max_abs(&(lhs - rhs)) <= 1e-14);
    }
}

#[test]
fn eigenvector_sequence_converges_to_the_ground_state() {
    let mut cfg = RunConfig { model: Model::Toy { g: [0.005, 0.0] }, ..RunConfig::default() };
    cfg.rg.modes = 8;
    cfg.rg.n_steps = 4;
    let chain = cfg.chain().unwrap();
    let flow = run_flow(&chain, &cfg.rg).unwrap();
    let fock = cfg.fock().unwrap();
    let res = eigenvector_sequence(&chain, &flow, &fock, &cfg.rg, 5).unwrap();

    assert_eq!(res.psi.len(), 6);
    for row in res.rows() {
        assert!(row.residual <= row.bound_2gamma, "{row:?}");
    }
    for w in res.residuals.windows(2) {
        assert!(w[1] < w[0]);
    }
    for (r, t) in res.residuals.iter().zip(&res.telescoped) {
        assert!((r - t).abs() <= 1e-2 * t, "{r} vs {t}");
    }
    for (inc, bound) in res.increments.iter().zip(&res.increment_bounds) {
        assert!(inc <= bound);
    }
    assert!(res.distance_from_vacuum() <= res.limit_bound);
    assert!(!res.collapsed());

    let h = assemble_hamiltonian(&chain, &fock, 1.0).unwrap();
    let (_, v) = ground_state(&h).unwrap();
    assert!(overlap(&res.normalized(), &v) > 0.9999);

    let mut buf = Vec::new();
    res.write_residuals(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("k,residual,bound_2gamma"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn too_many_steps_are_refused() {
    let mut cfg = RunConfig::default();
    cfg.rg.modes = 6;
    cfg.rg.n_steps = 1;
    cfg.rg.tail_steps = 0;
    let chain = cfg.chain().unwrap();
    let flow = run_flow(&chain, &cfg.rg).unwrap();
    assert!(eigenvector_sequence(&chain, &flow, &cfg.fock().unwrap(), &cfg.rg, 2).is_err());
}

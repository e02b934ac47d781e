use num_complex::Complex64 as c64;
use proptest::prelude::*;

use spectral_rg::cli::{Model, RunConfig};
use spectral_rg::fock::{assemble_hamiltonian, dense_spectrum};
use spectral_rg::rgflow::{cone_distance, consistency, read_trace, run_flow, write_trace, FlowResult};

fn small(model: Model) -> RunConfig {
    let mut cfg = RunConfig { model, ..RunConfig::default() };
    cfg.rg.modes = 8;
    cfg.rg.n_steps = 4;
    cfg
}

fn flow(cfg: &RunConfig) -> FlowResult {
    run_flow(&cfg.chain().unwrap(), &cfg.rg).unwrap()
}

fn in_cone(w: c64) -> bool {
    w.re >= 0.0 && w.im.abs() <= w.re / 3.0
}

proptest! {
    #[test]
    fn cone_distance_vanishes_exactly_on_the_cone(re in -1.0..1.0f64, im in -1.0..1.0f64) {
        let w = c64::new(re, im);
        prop_assert_eq!(cone_distance(w) == 0.0, in_cone(w));
    }

    #[test]
    fn cone_distance_is_at_most_the_distance_to_any_cone_point(
        re in -1.0..1.0f64,
        im in -1.0..1.0f64,
        t in 0.0..2.0f64,
        s in -1.0..1.0f64,
    ) {
        let w = c64::new(re, im);
        let p = c64::new(t, s * t / 3.0);
        prop_assert!(cone_distance(w) <= (w - p).norm() + 1e-15);
    }
}

#[test]
fn free_field_has_zero_energy_and_unit_tau() {
    let f = flow(&small(Model::Hf));
    assert_eq!(f.energy(), c64::new(0.0, 0.0));
    assert!((f.tau - 1.0).norm() < 1e-14);
    assert_eq!(f.budget.total(), 0.0);
}

#[test]
fn toy_energy_matches_the_dense_ground_state() {
    let cfg = small(Model::Toy { g: [0.005, 0.0] });
    let chain = cfg.chain().unwrap();
    let f = run_flow(&chain, &cfg.rg).unwrap();
    let h = assemble_hamiltonian(&chain, &cfg.fock().unwrap(), 1.0).unwrap();
    let e0 = dense_spectrum(&h).unwrap()[0];
    let e = f.energy();
    assert!(e.im.abs() <= 1e-12);
    assert!((e - e0).norm() <= f.budget.total().max(1e-6), "{e} vs {e0}");
    for s in &f.steps {
        assert!(s.e.im.abs() <= 1e-12);
    }
}

#[test]
fn energy_is_the_sum_of_the_weighted_steps() {
    let f = flow(&small(Model::Toy { g: [0.005, 0.001] }));
    let (res, tail) = consistency(&f, 0.4);
    assert!(res <= tail.max(1e-15), "{res} > {tail}");
    let mut prev = c64::new(0.0, 0.0);
    for s in &f.steps {
        assert!((s.e - prev).norm() <= 2.0 * s.alpha * 0.4f64.powi(s.n as i32));
        prev = s.e;
    }
}

#[test]
fn trace_round_trips_through_csv() {
    let f = flow(&small(Model::Toy { g: [0.005, 0.0] }));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&f, std::fs::File::create(&path).unwrap()).unwrap();
    let rows = read_trace(&path).unwrap();
    assert_eq!(rows.len(), f.steps.len());
    for (row, step) in rows.iter().zip(&f.steps) {
        assert_eq!(row.n, step.n);
        assert_eq!(row.re_en, step.e.re);
        assert_eq!(row.norm_w1, step.norm_w1);
    }
}

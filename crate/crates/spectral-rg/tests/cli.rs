use std::path::Path;
use std::process::Command as Process;

use proptest::prelude::*;

use spectral_rg::cli::{run, Command, Model, RunConfig};

fn small(out: &Path) -> RunConfig {
    let mut cfg = RunConfig { out: out.to_path_buf(), instances: 3, ..RunConfig::default() };
    cfg.rg.modes = 8;
    cfg.rg.n_steps = 4;
    cfg
}

fn srg(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_srg")).args(args).output().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_config_round_trips_through_toml(
        seed in any::<u64>(),
        re in -0.05..0.05f64,
        im in -0.05..0.05f64,
        rho in 0.1..0.5f64,
        steps in 1usize..9,
        dump in any::<bool>(),
    ) {
        let mut cfg = RunConfig { seed, dump_matrices: dump, model: Model::Toy { g: [re, im] }, ..RunConfig::default() };
        cfg.rg.rho = rho;
        cfg.rg.n_steps = steps;
        cfg.k_max = steps.min(5);
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn missing_fields_take_defaults() {
    let cfg = RunConfig::from_toml("seed = 7\n[model]\nkind = \"hf\"\n").unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.model, Model::Hf);
    assert_eq!(cfg.rg.xi, Some(spectral_rg::cli::MODEL_XI));
    assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    assert!(RunConfig::from_toml("k_max = 50\n").is_err());
}

#[test]
fn check_writes_one_row_per_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Check, &small(dir.path())).unwrap();
    assert!(out.ok(), "{:?}", out.lines);
    let text = std::fs::read_to_string(dir.path().join("check.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("seed,suite,instances,failures,worst,tol"));
    assert_eq!(lines.count(), 8);
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn flow_eig_spectrum_and_oracle_pass_on_a_small_toy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.dump_matrices = true;
    for cmd in [Command::Flow, Command::Eig, Command::Spectrum, Command::Oracle] {
        let out = run(cmd, &cfg).unwrap();
        assert!(out.ok(), "{cmd:?}: {:?}", out.failures);
    }
    for f in ["trace.csv", "summary.txt", "residuals.csv", "psi.bin", "h0.bin", "h.bin", "eigenvalues.csv", "oracle.txt"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let saved = RunConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn binary_reports_config_errors_and_runs_flow() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let bad = srg(&["flow", "--out", out, "--rho", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));

    let ok = srg(&["flow", "--out", out, "--gmax", "6", "--steps", "3", "--g", "0.005,0.001"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("kind = \"toy\""));
    assert!(stdout.contains("e = "));
    assert!(dir.path().join("trace.csv").exists());

    let loud = srg(&["flow", "--out", out, "--gmax", "6", "--steps", "1", "--g", "0.06"]);
    assert!(String::from_utf8_lossy(&loud.stderr).contains("warning"));
}

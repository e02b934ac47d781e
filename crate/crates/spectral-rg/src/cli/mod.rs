//! Batch driver behind the `srg` binary: run configuration, model
//! generation and the five commands.

pub mod checks;

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigensolve::eigenvector_sequence;
use crate::error::{Result, SrgError};
use crate::fock::{self, assemble_hamiltonian, dense_spectrum, FockSpace};
use crate::kernels::io::{read_chain, write_chain};
use crate::rgflow::{cone_check, consistency, run_flow, write_trace, FlowResult, RGConfig};
use crate::wick::toy_chain;
use crate::{linalg, KernelChain, RadialGrid};

/// Norm weight used for generated models when the config leaves `xi`
/// unset. The library default `sqrt(rho) / (4 C_chi)` puts every nonzero
/// coupling far outside the renormalization domain.
pub const MODEL_XI: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Model {
    /// `H_f` alone.
    Hf,
    /// `w00 = r`, `w10 = w01 = g |k|^mu` with `g = g[0] + i g[1]`.
    Toy { g: [f64; 2] },
    /// A kernel chain in the text format of [`crate::kernels::io`].
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub rg: RGConfig,
    pub seed: u64,
    /// Random instances per check suite.
    pub instances: usize,
    /// Number of `Psi_k` built by `eig`.
    pub k_max: usize,
    pub out: PathBuf,
    pub dump_matrices: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::Toy { g: [0.005, 0.0] },
            rg: RGConfig { xi: Some(MODEL_XI), ..RGConfig::default() },
            seed: 0x5eed,
            instances: 1000,
            k_max: 5,
            out: PathBuf::from("out"),
            dump_matrices: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(s).map_err(|e| SrgError::Parse(e.to_string()))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Fills in `xi` when the `[rg]` table leaves it out.
    pub fn resolve(&mut self) {
        self.rg.xi.get_or_insert(MODEL_XI);
    }

    pub fn validate(&self) -> Result<()> {
        self.rg.validate()?;
        if self.k_max > self.rg.n_steps + self.rg.tail_steps {
            return Err(SrgError::InvalidArgument(format!(
                "k_max = {} exceeds the {} chains of the flow",
                self.k_max,
                self.rg.n_steps + self.rg.tail_steps
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn coupling(&self) -> c64 {
        match self.model {
            Model::Toy { g } => c64::new(g[0], g[1]),
            _ => c64::new(0.0, 0.0),
        }
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let g = self.coupling().norm();
        if g >= self.rg.rho / 8.0 {
            out.push(format!("|g| = {g} is not below rho/8 = {}", self.rg.rho / 8.0));
        }
        out
    }

    pub fn fock(&self) -> Result<FockSpace> {
        FockSpace::new(self.rg.mode_set()?, self.rg.n_max)
    }

    pub fn chain(&self) -> Result<KernelChain> {
        let modes = self.rg.mode_set()?;
        match &self.model {
            Model::Hf => {
                let grid = modes.grid(self.rg.nr, self.rg.r_max)?;
                generate_toy_model(c64::new(0.0, 0.0), &grid, &self.rg)
            }
            Model::Toy { .. } => {
                let grid = modes.grid(self.rg.nr, self.rg.r_max)?;
                generate_toy_model(self.coupling(), &grid, &self.rg)
            }
            Model::File { path } => read_chain(path),
        }
    }
}

/// `w00 = r` and `w10 = w01 = g |k|^mu` on `grid`, whose momentum nodes
/// must be the mode set of `cfg`.
pub fn generate_toy_model(g: c64, grid: &RadialGrid, cfg: &RGConfig) -> Result<KernelChain> {
    if !(cfg.mu > 0.0) {
        return Err(SrgError::InvalidArgument("mu must be positive".into()));
    }
    let modes = cfg.mode_set()?;
    if modes.k_nodes() != grid.k_nodes() {
        return Err(SrgError::Domain("grid momentum nodes differ from the mode set".into()));
    }
    toy_chain(&modes, grid.nr(), grid.r_max(), g, cfg.params()?, cfg.m_max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Flow,
    Eig,
    Spectrum,
    Oracle,
}

/// What a command reports: summary lines and the failed invariants.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn line(&mut self, s: String) {
        self.lines.push(s);
    }

    fn require(&mut self, name: &str, ok: bool, detail: String) {
        self.lines.push(format!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" }));
        if !ok {
            self.failures.push(name.to_string());
        }
    }
}

/// Runs `cmd`, writing artifacts under `cfg.out`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.toml"), cfg.to_toml())?;
    match cmd {
        Command::Check => check(cfg),
        Command::Flow => flow(cfg),
        Command::Eig => eig(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::Oracle => oracle(cfg),
    }
}

fn check(cfg: &RunConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let reports = checks::all(cfg.instances, &mut rng)?;
    let csv_err = |e: csv::Error| SrgError::Parse(e.to_string());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(cfg.out.join("check.csv")).map_err(csv_err)?;
    w.write_record(["seed", "suite", "instances", "failures", "worst", "tol"]).map_err(csv_err)?;
    let mut out = Outcome::default();
    out.line(format!("seed {}", cfg.seed));
    for r in &reports {
        w.serialize((cfg.seed, r)).map_err(csv_err)?;
        out.require(
            r.suite,
            r.passed(),
            format!("{} instances, {} failures, worst {:.3e} (tol {:.0e})", r.instances, r.failures, r.worst, r.tol),
        );
    }
    w.flush()?;
    Ok(out)
}

fn run_model_flow(cfg: &RunConfig) -> Result<(KernelChain, FlowResult)> {
    let chain = cfg.chain()?;
    let flow = run_flow(&chain, &cfg.rg)?;
    write_trace(&flow, File::create(cfg.out.join("trace.csv"))?)?;
    if cfg.dump_matrices {
        if let Some(last) = flow.chains.last() {
            write_chain(last, &cfg.out.join("chain_final.txt"))?;
        }
    }
    Ok((chain, flow))
}

fn flow_summary(out: &mut Outcome, flow: &FlowResult, rho: f64) {
    let e = flow.energy();
    out.line(format!("e = {:.15e} {:+.15e}i", e.re, e.im));
    out.line(format!("tau = {:.15e} {:+.15e}i", flow.tau.re, flow.tau.im));
    let b = &flow.budget;
    out.line(format!(
        "budget = {:.3e} (termination {:.3e}, series {:.3e}, dropped {:.3e}, r_interp {:.3e})",
        b.total(),
        b.termination,
        b.series,
        b.dropped,
        b.r_interp
    ));
    let (res, tail) = consistency(flow, rho);
    out.line(format!("consistency residual {res:.3e}, tail {tail:.3e}"));
}

fn flow(cfg: &RunConfig) -> Result<Outcome> {
    let (_, flow) = run_model_flow(cfg)?;
    let mut out = Outcome::default();
    flow_summary(&mut out, &flow, cfg.rg.rho);
    fs::write(cfg.out.join("summary.txt"), out.lines.join("\n") + "\n")?;
    Ok(out)
}

fn eig(cfg: &RunConfig) -> Result<Outcome> {
    let (chain, flow) = run_model_flow(cfg)?;
    let fock = cfg.fock()?;
    let res = eigenvector_sequence(&chain, &flow, &fock, &cfg.rg, cfg.k_max)?;
    res.write_residuals(File::create(cfg.out.join("residuals.csv"))?)?;
    if cfg.dump_matrices {
        fock::io::write_vector(&cfg.out.join("psi.bin"), &res.normalized())?;
        fock::io::write_matrix(&cfg.out.join("h0.bin"), &res.h0)?;
    }
    let mut out = Outcome::default();
    flow_summary(&mut out, &flow, cfg.rg.rho);
    for row in res.rows() {
        out.require(
            &format!("residual_{}", row.k),
            row.residual <= row.bound_2gamma,
            format!("{:.3e} <= {:.3e}", row.residual, row.bound_2gamma),
        );
    }
    let d = res.distance_from_vacuum();
    out.require("limit_bound", d <= res.limit_bound, format!("||Psi - Omega|| = {d:.3e} <= {:.3e}", res.limit_bound));
    out.require("nonvanishing", !res.collapsed(), format!("||Psi|| = {:.6}", linalg::vec_norm(res.last())));
    Ok(out)
}

/// Dense eigenvalues of `H`, with the lowest eigenvector when `H` is
/// Hermitian.
fn dense(cfg: &RunConfig, chain: &KernelChain) -> Result<(Vec<c64>, Option<linalg::CVector>)> {
    let fock = cfg.fock()?;
    let h = assemble_hamiltonian(chain, &fock, 1.0)?;
    if cfg.dump_matrices {
        fock::io::write_matrix(&cfg.out.join("h.bin"), &h)?;
    }
    let eigs = dense_spectrum(&h)?;
    let v = if linalg::is_hermitian(&h, 1e-14) { Some(fock::ground_state(&h)?.1) } else { None };
    Ok((eigs, v))
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let (chain, flow) = run_model_flow(cfg)?;
    let (eigs, _) = dense(cfg, &chain)?;
    fock::io::write_eigenvalues(&cfg.out.join("eigenvalues.csv"), &eigs)?;
    let e = flow.energy();
    let tol = flow.budget.total();
    let inside = cone_check(&eigs, e, tol);
    let outside = inside.iter().filter(|&&b| !b).count();
    let mut out = Outcome::default();
    flow_summary(&mut out, &flow, cfg.rg.rho);
    out.require("cone", outside == 0, format!("{outside} of {} eigenvalues outside e + S inflated by {tol:.3e}", eigs.len()));
    Ok(out)
}

fn oracle(cfg: &RunConfig) -> Result<Outcome> {
    let (chain, flow) = run_model_flow(cfg)?;
    let (eigs, _) = dense(cfg, &chain)?;
    let e0 = eigs[0];
    let e = flow.energy();
    let tol = flow.budget.total().max(1e-4);
    let mut out = Outcome::default();
    flow_summary(&mut out, &flow, cfg.rg.rho);
    out.line(format!("dense ground energy {:.15e} {:+.15e}i", e0.re, e0.im));
    out.require("oracle", (e - e0).norm() <= tol, format!("|e_flow - e_dense| = {:.3e} <= {tol:.3e}", (e - e0).norm()));
    fs::write(cfg.out.join("oracle.txt"), out.lines.join("\n") + "\n")?;
    Ok(out)
}

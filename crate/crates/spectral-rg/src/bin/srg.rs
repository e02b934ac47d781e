use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_rg::cli::{self, Command, Model, RunConfig};

#[derive(Parser)]
#[command(name = "srg", version, about = "Spectral renormalization group on truncated Fock spaces")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of flow steps; also caps `k_max`.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Toy coupling, `RE` or `RE,IM`.
    #[arg(long, global = true, value_parser = parse_coupling)]
    g: Option<[f64; 2]>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Number of boson modes.
    #[arg(long, global = true)]
    gmax: Option<usize>,
    /// Boson number cutoff.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Random instances per check suite.
    #[arg(long, global = true)]
    instances: Option<usize>,
    /// Also write matrices, vectors and the final chain.
    #[arg(long, global = true)]
    dump_matrices: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Run the invariant suites.
    Check,
    /// Run the flow and write its trace.
    Flow,
    /// Build the eigenvector and its residual certificates.
    Eig,
    /// Dense spectrum against the cone around the flow energy.
    Spectrum,
    /// Flow energy against the dense ground energy.
    Oracle,
}

fn parse_coupling(s: &str) -> Result<[f64; 2], String> {
    let mut parts = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")));
    let re = parts.next().ok_or("empty coupling")??;
    let im = parts.next().transpose()?.unwrap_or(0.0);
    if parts.next().is_some() {
        return Err("expected RE or RE,IM".into());
    }
    Ok([re, im])
}

fn config(args: &Args) -> spectral_rg::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &args.out {
        cfg.out = v.clone();
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.steps {
        cfg.rg.n_steps = v;
        cfg.k_max = cfg.k_max.min(v + cfg.rg.tail_steps);
    }
    if let Some(g) = args.g {
        cfg.model = Model::Toy { g };
    }
    if let Some(v) = args.rho {
        cfg.rg.rho = v;
    }
    if let Some(v) = args.mu {
        cfg.rg.mu = v;
    }
    if let Some(v) = args.gmax {
        cfg.rg.modes = v;
    }
    if let Some(v) = args.nmax {
        cfg.rg.n_max = v;
    }
    if let Some(v) = args.instances {
        cfg.instances = v;
    }
    cfg.dump_matrices |= args.dump_matrices;
    cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", cfg.to_toml());
    println!();
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let cmd = match args.cmd {
        Cmd::Check => Command::Check,
        Cmd::Flow => Command::Flow,
        Cmd::Eig => Command::Eig,
        Cmd::Spectrum => Command::Spectrum,
        Cmd::Oracle => Command::Oracle,
    };
    match cli::run(cmd, &cfg) {
        Ok(out) => {
            for l in &out.lines {
                println!("{l}");
            }
            if out.ok() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed: {}", out.failures.join(", "));
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

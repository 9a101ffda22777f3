use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polyshape::Error;
use polyshape_cli::commands::{self, Outcome};
use polyshape_cli::config::RunConfig;
use polyshape_cli::selftest;

/// Spectral shape calculus for polyharmonic eigenproblems on mapped disks.
#[derive(Parser)]
#[command(name = "polyshape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// key=value configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_pair)]
    set: Vec<(String, String)>,
    /// Operator order n.
    #[arg(long)]
    n: Option<usize>,
    /// Lower-order index m.
    #[arg(long)]
    m: Option<usize>,
    /// Map tag such as `identity`, `ellipse(0.2)` or `file:map.kv`.
    #[arg(long)]
    map: Option<String>,
    /// Perturbation field, e.g. `dilation+0.5*re(2)`.
    #[arg(long)]
    field: Option<String>,
    /// One-based contiguous eigenvalue labels, e.g. `2,3`.
    #[arg(long)]
    cluster: Option<String>,
    /// Symmetric-function index.
    #[arg(long)]
    h: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of one domain.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Emit CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Tracked cluster functions along a one-parameter family (CSV).
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Shape derivative of a symmetric function against finite differences.
    HadamardCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Operator differentials against finite differences.
    OpderivCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Criticality residual and constrained Lagrange fit.
    Criticality {
        #[command(flatten)]
        common: Common,
    },
    /// Volume-constrained gradient descent on a cluster function.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Also write the iteration trajectory as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Only these criteria (1..=11).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Print the determinism digest instead of the criteria.
        #[arg(long)]
        digest: bool,
    },
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

impl Common {
    fn config(&self) -> polyshape::Result<RunConfig> {
        let mut overrides = Vec::new();
        let flags = [
            ("n", self.n.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("map", self.map.clone()),
            ("field", self.field.clone()),
            ("cluster", self.cluster.clone()),
            ("h", self.h.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        }
        overrides.extend(self.set.iter().cloned());
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn init_threads(threads: Option<usize>) -> polyshape::Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn emit(path: Option<&PathBuf>, text: &str) -> polyshape::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_common(common: &Common, f: impl FnOnce(&RunConfig) -> polyshape::Result<Outcome>) -> polyshape::Result<bool> {
    init_threads(common.threads)?;
    let cfg = common.config()?;
    let outcome = f(&cfg)?;
    emit(common.out.as_ref(), &outcome.text)?;
    Ok(outcome.passed)
}

fn run(cli: Cli) -> polyshape::Result<bool> {
    match cli.command {
        Command::Solve { common, csv } => run_common(&common, |c| commands::solve(c, csv)),
        Command::Sweep { common } => run_common(&common, commands::sweep),
        Command::HadamardCheck { common } => run_common(&common, commands::hadamard),
        Command::OpderivCheck { common } => run_common(&common, commands::opderiv),
        Command::Criticality { common } => run_common(&common, commands::criticality),
        Command::Optimize { common, trajectory } => run_common(&common, |c| {
            let (summary, csv) = commands::optimize(c)?;
            if let Some(p) = &trajectory {
                emit(Some(p), &csv)?;
            }
            Ok(summary)
        }),
        Command::Selftest { only, threads, digest } => {
            init_threads(threads)?;
            if digest {
                print!("{}", selftest::determinism_digest()?);
                return Ok(true);
            }
            let ids: Vec<u8> = if only.is_empty() { (1..=11).collect() } else { only };
            let mut all = true;
            for id in ids {
                if !(1..=11).contains(&id) {
                    return Err(Error::InvalidInput(format!("no criterion {id} (1..=11)")));
                }
                let r = selftest::run_reported(id);
                print!("{}", r.render());
                all &= r.passed;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

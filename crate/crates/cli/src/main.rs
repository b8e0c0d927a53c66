use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use onerun_cli::config::FlatConfig;
use onerun_cli::experiments::{
    default_gaussian_grid, default_pure_grid, DpsgdAuditSpec, SimMechanism, SimulateSpec, DEFAULT_CONFIDENCE,
    DEFAULT_DELTA,
};
use onerun_cli::output::append_jsonl;
use onerun_cli::runner::{ExperimentSpec, Outcome};

/// Audit differential-privacy guarantees from a single training run.
#[derive(Debug, Parser)]
#[command(name = "onerun", version)]
struct Cli {
    /// Directory for results.jsonl, CSV tables and reports.
    #[arg(long, global = true, env = "ONERUN_OUT_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Probability of at least v correct guesses under an (eps, delta) null.
    Pvalue(PvalueArgs),
    /// Largest eps rejected at the given confidence.
    Epslb(EpslbArgs),
    /// Randomized response at its expected accuracy, across guess counts.
    ExperimentPure(PureArgs),
    /// Idealized Gaussian scores across guess counts, deltas and confidences.
    ExperimentGaussian(GaussianArgs),
    /// Lower bound for fixed guess counts across deltas and confidences.
    DeltaSweep(DeltaSweepArgs),
    /// Monte-Carlo tightness check of the bound on the pathological mechanism.
    PathologicalCheck(PathologicalArgs),
    /// Train with DP-SGD on canaries and audit the run (flat key = value config).
    DpsgdAudit(DpsgdArgs),
    /// Repeated audits of a simulated mechanism.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct PvalueArgs {
    #[arg(long)]
    m: u64,
    /// Total guesses; alternative to --k-plus/--k-minus.
    #[arg(long, conflicts_with_all = ["k_plus", "k_minus"])]
    r: Option<u64>,
    #[arg(long)]
    k_plus: Option<u64>,
    #[arg(long)]
    k_minus: Option<u64>,
    #[arg(long)]
    v: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Inclusion probability when it is not one half.
    #[arg(long)]
    p_incl: Option<f64>,
}

#[derive(Debug, Args)]
struct EpslbArgs {
    #[arg(long)]
    m: u64,
    #[arg(long)]
    r: u64,
    #[arg(long)]
    v: u64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long = "conf", alias = "confidence", default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
}

#[derive(Debug, Args)]
struct PureArgs {
    #[arg(long)]
    eps: f64,
    /// Comma-separated guess counts.
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<u64>>,
    #[arg(long = "conf", alias = "confidence", default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
}

#[derive(Debug, Args)]
struct GaussianArgs {
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    m: u64,
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', default_value = "1e-5")]
    delta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.95")]
    conf_grid: Vec<f64>,
}

#[derive(Debug, Args)]
struct DeltaSweepArgs {
    #[arg(long, default_value_t = 100_000)]
    m: u64,
    #[arg(long, default_value_t = 1500)]
    r: u64,
    #[arg(long, default_value_t = 1429)]
    v: u64,
    #[arg(long, value_delimiter = ',', default_value = "0,1e-8,1e-7,1e-6,1e-5,1e-4,1e-3,1e-2")]
    delta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.9,0.95,0.99")]
    conf_grid: Vec<f64>,
}

#[derive(Debug, Args)]
struct PathologicalArgs {
    #[arg(long)]
    m: u64,
    #[arg(long)]
    r: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DpsgdArgs {
    /// Flat `key = value` file.
    config: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SimKind {
    Rr,
    Gaussian,
    Pathological,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    mechanism: SimKind,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k_plus: usize,
    #[arg(long)]
    k_minus: usize,
    /// Privacy of randomized response or the pathological mechanism.
    #[arg(long)]
    eps: Option<f64>,
    /// Noise of the Gaussian mechanism (sensitivity 2).
    #[arg(long)]
    sigma: Option<f64>,
    /// Pathological mechanism only.
    #[arg(long)]
    r: Option<u64>,
    /// Pathological mechanism only.
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long = "conf", alias = "confidence", default_value_t = DEFAULT_CONFIDENCE)]
    confidence: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn build(cmd: Command) -> Result<ExperimentSpec> {
    Ok(match cmd {
        Command::Pvalue(a) => {
            let (k_plus, k_minus) = match a.r {
                Some(r) => (r, 0),
                None => (
                    a.k_plus.context("give --r or --k-plus/--k-minus")?,
                    a.k_minus.unwrap_or(0),
                ),
            };
            ExperimentSpec::PValue {
                m: a.m,
                k_plus,
                k_minus,
                v: a.v,
                eps: a.eps,
                delta: a.delta,
                p_incl: a.p_incl,
            }
        }
        Command::Epslb(a) => ExperimentSpec::EpsLb {
            m: a.m,
            r: a.r,
            v: a.v,
            delta: a.delta,
            confidence: a.confidence,
        },
        Command::ExperimentPure(a) => ExperimentSpec::PureRr {
            eps: a.eps,
            r_grid: a.r_grid.unwrap_or_else(default_pure_grid),
            confidence: a.confidence,
        },
        Command::ExperimentGaussian(a) => ExperimentSpec::GaussianIdealized {
            sigma: a.sigma,
            m: a.m,
            r_grid: a
                .r_grid
                .unwrap_or_else(|| default_gaussian_grid().into_iter().filter(|&r| r <= a.m).collect()),
            delta_grid: a.delta_grid,
            conf_grid: a.conf_grid,
        },
        Command::DeltaSweep(a) => ExperimentSpec::DeltaSweep {
            m: a.m,
            r: a.r,
            v: a.v,
            delta_grid: a.delta_grid,
            conf_grid: a.conf_grid,
        },
        Command::PathologicalCheck(a) => ExperimentSpec::PathologicalCheck {
            m: a.m,
            r: a.r,
            eps: a.eps,
            delta: a.delta,
            beta: a.beta,
            trials: a.trials,
            seed: a.seed,
        },
        Command::DpsgdAudit(a) => {
            let cfg = FlatConfig::load(&a.config)?;
            let mut spec = DpsgdAuditSpec::from_config(&cfg)?;
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            ExperimentSpec::DpsgdAudit(spec)
        }
        Command::Simulate(a) => {
            let mechanism = match a.mechanism {
                SimKind::Rr => SimMechanism::RandomizedResponse {
                    eps: a.eps.context("--mechanism rr needs --eps")?,
                },
                SimKind::Gaussian => SimMechanism::Gaussian {
                    sigma: a.sigma.context("--mechanism gaussian needs --sigma")?,
                },
                SimKind::Pathological => SimMechanism::Pathological {
                    r: a.r.context("--mechanism pathological needs --r")?,
                    eps: a.eps.context("--mechanism pathological needs --eps")?,
                    delta: a.delta,
                    beta: a.beta,
                },
            };
            ExperimentSpec::Simulate(SimulateSpec {
                mechanism,
                m: a.m,
                k_plus: a.k_plus,
                k_minus: a.k_minus,
                delta: a.delta,
                confidence: a.confidence,
                trials: a.trials,
                seed: a.seed,
            })
        }
    })
}

fn persist(dir: &PathBuf, kind: &str, out: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    append_jsonl(&dir.join("results.jsonl"), &out.rows)?;
    if let Some(table) = &out.table {
        let path = dir.join(format!("{kind}.csv"));
        std::fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(report) = &out.report {
        append_jsonl(&dir.join(format!("{kind}-report.jsonl")), std::slice::from_ref(report))?;
    }
    Ok(())
}

const USAGE: u8 = 1;
const RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let spec = match build(cli.command).and_then(|s| s.validate().map(|_| s)) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: {e:#}\n\nFor more information, try '--help'.");
            return ExitCode::from(USAGE);
        }
    };
    let result = spec.run().and_then(|out| {
        for line in &out.lines {
            println!("{line}");
        }
        if let Some(dir) = &cli.out {
            persist(dir, spec.kind(), &out)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(RUNTIME)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use amcmc::chain::Formulation;
use amcmc::coefficient::{CoefficientKind, Estimator};
use amcmc::experiment::{
    default_sde_cells, emit_csv, run_experiment, summary_table, to_csv_string, ArmSelection,
    CoeffSpec, DiscreteSpec, ExperimentSpec, SdeCell, SdeSpec,
};
use amcmc::stats::KsCorrection;
use amcmc::target::{BoundaryPolicy, TargetKind};

#[derive(Parser)]
#[command(
    name = "amcmc",
    version,
    about = "Adaptive vs standard Metropolis experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete-time chains: KS and ESJD over a theta0 x p grid.
    Discrete(DiscreteArgs),
    /// Euler ensembles of the limiting diffusion over an h x p grid.
    Sde(SdeArgs),
    /// Monte Carlo estimates of the one-step drift and diffusion coefficients.
    Coeff(CoeffArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_parser = parse_target, default_value = "normal")]
    target: TargetKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the summary table when writing to --out.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct DiscreteArgs {
    #[command(flatten)]
    common: Common,
    /// Initial proposal scale; repeat for a grid. Defaults to the reference grid.
    #[arg(long)]
    theta0: Vec<f64>,
    /// Target acceptance rate; repeat for a grid. Defaults to the reference grid.
    #[arg(long)]
    p: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    n_samples: usize,
    #[arg(long, default_value_t = 1_000)]
    burn_in: usize,
    /// Starting point; defaults to 0 (1 for exp).
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long, default_value_t = 11)]
    replicates: usize,
    #[arg(long, value_enum, default_value_t = ArmArg::Both)]
    arm: ArmArg,
    #[arg(long, value_enum, default_value_t = CorrectionArg::None)]
    ks_correction: CorrectionArg,
    #[arg(long, value_enum, default_value_t = FormulationArg::Propose)]
    formulation: FormulationArg,
    /// Dump every trajectory as CSV into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SdeArgs {
    #[command(flatten)]
    common: Common,
    /// Mesh size; repeat for a grid. Defaults to the reference grid.
    #[arg(long)]
    h: Vec<f64>,
    /// Benchmark; repeat for a grid. Applied to every h when given.
    #[arg(long)]
    p: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    theta0: f64,
    /// Starting point; defaults to 0 (1 for exp).
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 11)]
    replicates: usize,
    #[arg(long, value_enum, default_value_t = ArmArg::Both)]
    arm: ArmArg,
    #[arg(long, value_enum, default_value_t = CorrectionArg::None)]
    ks_correction: CorrectionArg,
    /// Boundary rule for exp; defaults to reflect.
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    /// Dump each ensemble's terminal values as CSV into this directory.
    #[arg(long)]
    terminal_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CoeffArgs {
    #[command(flatten)]
    common: Common,
    /// Coefficient; repeat for several. Defaults to all five.
    #[arg(long, value_parser = parse_kind)]
    kind: Vec<CoefficientKind>,
    #[arg(long, required = true)]
    x: Vec<f64>,
    #[arg(long, required = true)]
    theta: Vec<f64>,
    #[arg(long, default_value = "0.5")]
    p: Vec<f64>,
    /// Scaling index; repeat for a convergence sweep.
    #[arg(long, default_values_t = [1_000u64, 10_000, 100_000, 1_000_000])]
    n: Vec<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    draws: u64,
    /// Use the zero-mean control variates for B1 and A11.
    #[arg(long)]
    control_variates: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArmArg {
    Adaptive,
    Standard,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    None,
    Stephens,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulationArg {
    Propose,
    Bernoulli,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Reflect,
    Hold,
}

fn parse_target(s: &str) -> Result<TargetKind, String> {
    s.parse().map_err(|e: amcmc::Error| e.to_string())
}

fn parse_kind(s: &str) -> Result<CoefficientKind, String> {
    s.parse().map_err(|e: amcmc::Error| e.to_string())
}

impl From<ArmArg> for ArmSelection {
    fn from(a: ArmArg) -> Self {
        match a {
            ArmArg::Adaptive => ArmSelection::Adaptive,
            ArmArg::Standard => ArmSelection::Standard,
            ArmArg::Both => ArmSelection::Both,
        }
    }
}

impl From<CorrectionArg> for KsCorrection {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::None => KsCorrection::None,
            CorrectionArg::Stephens => KsCorrection::Stephens,
        }
    }
}

fn discrete_spec(a: DiscreteArgs) -> (ExperimentSpec, Common) {
    let mut spec = DiscreteSpec::reference_grid(a.common.target, a.common.seed);
    if !a.theta0.is_empty() {
        spec.theta0_grid = a.theta0;
    }
    if !a.p.is_empty() {
        spec.p_grid = a.p;
    }
    spec.n_samples = a.n_samples;
    spec.burn_in = a.burn_in;
    if let Some(x0) = a.x0 {
        spec.x0 = x0;
    }
    spec.replicates = a.replicates;
    spec.arms = a.arm.into();
    spec.correction = a.ks_correction.into();
    spec.formulation = match a.formulation {
        FormulationArg::Propose => Formulation::ProposeThenAccept,
        FormulationArg::Bernoulli => Formulation::BernoulliFirst,
    };
    spec.trace_dir = a.trace_dir;
    (ExperimentSpec::Discrete(spec), a.common)
}

fn sde_spec(a: SdeArgs) -> anyhow::Result<(ExperimentSpec, Common)> {
    let mut spec = SdeSpec::reference_grid(a.common.target, a.common.seed);
    let defaults = default_sde_cells(a.common.target);
    spec.cells = match (a.h.is_empty(), a.p.is_empty()) {
        (true, true) => defaults,
        (true, false) => defaults
            .into_iter()
            .map(|c| SdeCell {
                h: c.h,
                ps: a.p.clone(),
            })
            .collect(),
        (false, false) => {
            a.h.iter()
                .map(|&h| SdeCell { h, ps: a.p.clone() })
                .collect()
        }
        (false, true) => {
            a.h.iter()
                .map(|&h| match defaults.iter().find(|c| c.h == h) {
                    Some(c) => Ok(c.clone()),
                    None => bail!("no default p grid for h = {h}; pass --p"),
                })
                .collect::<anyhow::Result<_>>()?
        }
    };
    spec.theta0 = a.theta0;
    if let Some(x0) = a.x0 {
        spec.x0 = x0;
    }
    spec.n_paths = a.paths;
    spec.horizon = a.horizon;
    spec.replicates = a.replicates;
    spec.arms = a.arm.into();
    spec.correction = a.ks_correction.into();
    spec.boundary = a.boundary.map(|b| match b {
        BoundaryArg::Reflect => BoundaryPolicy::ReflectAtZero,
        BoundaryArg::Hold => BoundaryPolicy::HoldAtZero,
    });
    spec.terminal_dir = a.terminal_dir;
    Ok((ExperimentSpec::Sde(spec), a.common))
}

fn coeff_spec(a: CoeffArgs) -> (ExperimentSpec, Common) {
    let kinds = if a.kind.is_empty() {
        CoefficientKind::ALL.to_vec()
    } else {
        a.kind
    };
    let spec = CoeffSpec {
        target: a.common.target,
        kinds,
        xs: a.x,
        thetas: a.theta,
        ps: a.p,
        n_grid: a.n,
        n_draws: a.draws,
        seed: a.common.seed,
        estimator: if a.control_variates {
            Estimator::ControlVariate
        } else {
            Estimator::Plain
        },
    };
    (ExperimentSpec::Coeff(spec), a.common)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (spec, common, mode) = match cli.command {
        Command::Discrete(a) => {
            let (s, c) = discrete_spec(a);
            (s, c, "discrete")
        }
        Command::Sde(a) => {
            let (s, c) = sde_spec(a)?;
            (s, c, "sde")
        }
        Command::Coeff(a) => {
            let (s, c) = coeff_spec(a);
            (s, c, "coeff")
        }
    };
    let rows = run_experiment(&spec)?;
    let mut stdout = std::io::stdout().lock();
    match &common.out {
        Some(path) => {
            emit_csv(&rows, mode, path).with_context(|| format!("writing {}", path.display()))?;
            if !common.quiet {
                stdout.write_all(summary_table(&rows).as_bytes())?;
            }
        }
        None => stdout.write_all(to_csv_string(&rows, mode)?.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

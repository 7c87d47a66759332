//! Experiment grids and their CSV output.
//!
//! Every grid cell and replicate is an independent job with its own seed,
//! derived from the base seed and the job's coordinates. Jobs run in
//! parallel but rows come back in grid order, so the CSV for a given
//! spec is byte-identical from run to run.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::chain::{run_amcmc, run_smcmc, AdaptiveConfig, Formulation};
use crate::coefficient::{
    convergence_report_with, CoefficientKind, Estimator, EvalPoint, ReportRow,
};
use crate::diffusion::{run_ensemble, EulerConfig};
use crate::rng::derive_seed;
use crate::stats::{ks_pvalue_with, ks_statistic, summarize, KsCorrection};
use crate::target::{make_target, BoundaryPolicy, TargetKind, TargetModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Adaptive,
    Standard,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Adaptive => "adaptive",
            Arm::Standard => "standard",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Arm::Adaptive => 1,
            Arm::Standard => 2,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Arm::Adaptive),
            "standard" => Ok(Arm::Standard),
            other => Err(Error::Csv(format!("unknown arm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArmSelection {
    Adaptive,
    Standard,
    #[default]
    Both,
}

impl ArmSelection {
    fn adaptive(self) -> bool {
        matches!(self, ArmSelection::Adaptive | ArmSelection::Both)
    }

    fn standard(self) -> bool {
        matches!(self, ArmSelection::Standard | ArmSelection::Both)
    }
}

pub const DEFAULT_REPLICATES: usize = 11;

pub const DISCRETE_THETA_GRID: [f64; 6] = [0.10, 0.25, 1.0, 2.38, 10.0, 20.0];

/// Reference benchmark grid for the discrete runs of each target. The
/// heavy-tailed targets use 0.234 where Normal and Exp use 0.25.
pub fn default_discrete_p_grid(kind: TargetKind) -> Vec<f64> {
    match kind {
        TargetKind::Cauchy01 | TargetKind::StudentT2 => vec![0.10, 0.234, 0.50, 0.75],
        TargetKind::Normal01 | TargetKind::Exp1 => vec![0.10, 0.25, 0.50, 0.75],
    }
}

/// One mesh size and the benchmark values run at it.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeCell {
    pub h: f64,
    pub ps: Vec<f64>,
}

fn cells(rows: &[(f64, &[f64])]) -> Vec<SdeCell> {
    rows.iter()
        .map(|&(h, ps)| SdeCell { h, ps: ps.to_vec() })
        .collect()
}

/// Reference per-mesh benchmark lists for the Euler runs. Student-t has no
/// grid of its own and reuses the Cauchy one.
pub fn default_sde_cells(kind: TargetKind) -> Vec<SdeCell> {
    match kind {
        TargetKind::Normal01 => cells(&[
            (0.0001, &[1.0, 2.0, 2.5]),
            (0.0005, &[4.5, 5.0, 5.5, 6.0]),
            (0.001, &[4.0, 5.0, 5.5, 6.0, 6.5, 7.5, 8.0]),
            (0.005, &[0.2, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]),
            (0.01, &[1.0, 1.5, 2.0, 3.0]),
        ]),
        TargetKind::Exp1 => cells(&[
            (0.0001, &[1.5, 2.0, 2.5, 3.0, 20.0]),
            (0.0005, &[2.0, 2.5, 3.0, 3.5, 4.0, 4.25, 4.5]),
            (0.001, &[1.5, 2.0, 2.5]),
            (0.005, &[5.5, 6.0, 6.5]),
            (0.01, &[6.0, 6.5, 7.0]),
        ]),
        TargetKind::Cauchy01 | TargetKind::StudentT2 => cells(&[
            (0.0001, &[5.0, 7.0, 8.0]),
            (0.0005, &[3.0, 4.0, 4.5, 6.0, 7.0]),
            (0.001, &[0.5, 5.0, 6.0, 7.0]),
            (0.005, &[2.0, 2.5, 3.0, 3.5, 4.0]),
            (0.01, &[0.5, 1.0, 2.0, 2.5, 2.75, 3.0, 3.5]),
        ]),
    }
}

/// Starting point of the Euler runs: the origin, or 1 for the half-line target.
pub fn default_sde_x0(kind: TargetKind) -> f64 {
    match kind {
        TargetKind::Exp1 => 1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpec {
    pub target: TargetKind,
    pub theta0_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub n_samples: usize,
    pub burn_in: usize,
    pub x0: f64,
    pub seed: u64,
    pub replicates: usize,
    pub arms: ArmSelection,
    pub formulation: Formulation,
    pub correction: KsCorrection,
    /// Write each trajectory as `step,x,theta,xi` CSV into this directory.
    pub trace_dir: Option<PathBuf>,
}

impl DiscreteSpec {
    /// The reference grid for `target` with 10 000 samples and 1 000 burn-in.
    pub fn reference_grid(target: TargetKind, seed: u64) -> Self {
        DiscreteSpec {
            target,
            theta0_grid: DISCRETE_THETA_GRID.to_vec(),
            p_grid: default_discrete_p_grid(target),
            n_samples: 10_000,
            burn_in: 1_000,
            x0: if target == TargetKind::Exp1 { 1.0 } else { 0.0 },
            seed,
            replicates: DEFAULT_REPLICATES,
            arms: ArmSelection::Both,
            formulation: Formulation::ProposeThenAccept,
            correction: KsCorrection::None,
            trace_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta0_grid.is_empty() {
            return Err(Error::InvalidConfig("theta0 grid is empty".into()));
        }
        if self.arms.adaptive() && self.p_grid.is_empty() {
            return Err(Error::InvalidConfig("p grid is empty".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        if let Some(&t) = self
            .theta0_grid
            .iter()
            .find(|t| !(**t > 0.0 && t.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "theta0 must be positive, got {t}"
            )));
        }
        if self.arms.adaptive() {
            if let Some(&p) = self.p_grid.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
                return Err(Error::InvalidConfig(format!(
                    "p must lie in (0, 1), got {p}"
                )));
            }
        }
        if self.n_samples == 0 || self.burn_in >= self.n_samples {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= burn_in < n_samples, got burn_in {} and n_samples {}",
                self.burn_in, self.n_samples
            )));
        }
        let target = make_target(self.target);
        if !target.in_support(self.x0) {
            return Err(Error::OutsideSupport {
                target: self.target.as_str(),
                x: self.x0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeSpec {
    pub target: TargetKind,
    pub cells: Vec<SdeCell>,
    pub theta0: f64,
    pub x0: f64,
    pub n_paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub replicates: usize,
    pub arms: ArmSelection,
    pub correction: KsCorrection,
    pub boundary: Option<BoundaryPolicy>,
    /// Write each ensemble's terminal `X_T` values as a one-column CSV here.
    pub terminal_dir: Option<PathBuf>,
}

impl SdeSpec {
    /// The reference Euler grid for `target`: 1000 paths to `T = 1`, `theta0 = 1`.
    pub fn reference_grid(target: TargetKind, seed: u64) -> Self {
        SdeSpec {
            target,
            cells: default_sde_cells(target),
            theta0: 1.0,
            x0: default_sde_x0(target),
            n_paths: 1000,
            horizon: 1.0,
            seed,
            replicates: DEFAULT_REPLICATES,
            arms: ArmSelection::Both,
            correction: KsCorrection::None,
            boundary: None,
            terminal_dir: None,
        }
    }

    fn target_model(&self) -> Result<TargetModel> {
        let t = make_target(self.target);
        match self.boundary {
            Some(b) => t.with_boundary_policy(b),
            None => Ok(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidConfig("mesh grid is empty".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        for cell in &self.cells {
            if self.arms.adaptive() && cell.ps.is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "no p values for h = {}",
                    cell.h
                )));
            }
            let cfg = self.euler_config(cell.h, cell.ps.first().copied().unwrap_or(1.0), true, 0);
            cfg.validate(&self.target_model()?)?;
            if let Some(&p) = cell.ps.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
                return Err(Error::InvalidConfig(format!("p must be positive, got {p}")));
            }
        }
        Ok(())
    }

    fn euler_config(&self, h: f64, p: f64, adaptive: bool, seed: u64) -> EulerConfig {
        EulerConfig {
            h,
            horizon: self.horizon,
            p,
            theta0: self.theta0,
            x0: self.x0,
            n_paths: self.n_paths,
            seed,
            adaptive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSpec {
    pub target: TargetKind,
    pub kinds: Vec<CoefficientKind>,
    pub xs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub ps: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub n_draws: u64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl CoeffSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty()
            || self.xs.is_empty()
            || self.thetas.is_empty()
            || self.ps.is_empty()
        {
            return Err(Error::InvalidConfig("coefficient grid is empty".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "n grid must be nonempty and strictly ascending".into(),
            ));
        }
        let target = make_target(self.target);
        if let Some(&x) = self.xs.iter().find(|x| !target.in_support(**x)) {
            return Err(Error::OutsideSupport {
                target: self.target.as_str(),
                x,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    Discrete(DiscreteSpec),
    Sde(SdeSpec),
    Coeff(CoeffSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteRow {
    pub target: TargetKind,
    pub arm: Arm,
    pub theta0: f64,
    /// `None` for the standard arm.
    pub p: Option<f64>,
    pub seed: u64,
    pub replicate: usize,
    pub d: f64,
    pub p_value: f64,
    pub esjd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeRow {
    pub target: TargetKind,
    pub arm: Arm,
    pub h: f64,
    pub theta0: f64,
    pub p: Option<f64>,
    pub seed: u64,
    pub replicate: usize,
    pub d: f64,
    pub p_value: f64,
    pub theta_t_mean: f64,
    pub theta_floor_hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResultRow {
    Discrete(DiscreteRow),
    Sde(SdeRow),
    Coeff(ReportRow),
}

pub const DISCRETE_HEADER: &str = "target,mode,arm,theta0,p,seed,replicate,D,p_value,esjd";
pub const SDE_HEADER: &str =
    "target,mode,arm,h,theta0,p,seed,replicate,D,p_value,theta_T_mean,theta_floor_hits";

fn opt(v: Option<f64>) -> String {
    v.map(|p| format!("{p:?}")).unwrap_or_default()
}

impl DiscreteRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},discrete,{},{:?},{},{},{},{:?},{:?},{:?}",
            self.target,
            self.arm,
            self.theta0,
            opt(self.p),
            self.seed,
            self.replicate,
            self.d,
            self.p_value,
            self.esjd
        )
    }
}

impl SdeRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},sde,{},{:?},{:?},{},{},{},{:?},{:?},{:?},{}",
            self.target,
            self.arm,
            self.h,
            self.theta0,
            opt(self.p),
            self.seed,
            self.replicate,
            self.d,
            self.p_value,
            self.theta_t_mean,
            self.theta_floor_hits
        )
    }
}

impl ResultRow {
    fn mode(&self) -> &'static str {
        match self {
            ResultRow::Discrete(_) => "discrete",
            ResultRow::Sde(_) => "sde",
            ResultRow::Coeff(_) => "coeff",
        }
    }

    fn header(&self) -> &'static str {
        match self {
            ResultRow::Discrete(_) => DISCRETE_HEADER,
            ResultRow::Sde(_) => SDE_HEADER,
            ResultRow::Coeff(_) => ReportRow::CSV_HEADER,
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            ResultRow::Discrete(r) => r.to_csv(),
            ResultRow::Sde(r) => r.to_csv(),
            ResultRow::Coeff(r) => r.to_csv(),
        }
    }
}

struct DiscreteJob {
    replicate: usize,
    arm: Arm,
    theta_idx: usize,
    p_idx: Option<usize>,
}

pub fn run_discrete_experiment(spec: &DiscreteSpec) -> Result<Vec<DiscreteRow>> {
    spec.validate()?;
    if let Some(dir) = &spec.trace_dir {
        fs::create_dir_all(dir)?;
    }
    let target = make_target(spec.target);
    let mut jobs = Vec::new();
    for replicate in 0..spec.replicates {
        for theta_idx in 0..spec.theta0_grid.len() {
            if spec.arms.adaptive() {
                for p_idx in 0..spec.p_grid.len() {
                    jobs.push(DiscreteJob {
                        replicate,
                        arm: Arm::Adaptive,
                        theta_idx,
                        p_idx: Some(p_idx),
                    });
                }
            }
            if spec.arms.standard() {
                jobs.push(DiscreteJob {
                    replicate,
                    arm: Arm::Standard,
                    theta_idx,
                    p_idx: None,
                });
            }
        }
    }

    jobs.par_iter()
        .map(|job| {
            let theta0 = spec.theta0_grid[job.theta_idx];
            let p = job.p_idx.map(|i| spec.p_grid[i]);
            let coords = [
                job.arm.tag(),
                job.theta_idx as u64,
                job.p_idx.map_or(u64::MAX, |i| i as u64),
                job.replicate as u64,
            ];
            let cfg = AdaptiveConfig {
                p: p.unwrap_or(0.5),
                theta0,
                x0: spec.x0,
                n_samples: spec.n_samples,
                burn_in: spec.burn_in,
                seed: derive_seed(spec.seed, &coords),
                formulation: spec.formulation,
            };
            let traj = match job.arm {
                Arm::Adaptive => run_amcmc(&cfg, &target)?,
                Arm::Standard => run_smcmc(&cfg, &target)?,
            };
            if let Some(dir) = &spec.trace_dir {
                let name = format!(
                    "{}_{}_theta{:?}_p{}_rep{}.csv",
                    spec.target,
                    job.arm,
                    theta0,
                    p.map(|p| format!("{p:?}")).unwrap_or_else(|| "na".into()),
                    job.replicate
                );
                fs::write(dir.join(name), traj.to_csv())?;
            }
            let summary = summarize(&traj.path(), spec.burn_in, &target, spec.correction)?;
            Ok(DiscreteRow {
                target: spec.target,
                arm: job.arm,
                theta0,
                p,
                seed: spec.seed,
                replicate: job.replicate,
                d: summary.d,
                p_value: summary.p_value,
                esjd: summary.esjd,
            })
        })
        .collect()
}

struct SdeJob {
    replicate: usize,
    arm: Arm,
    cell_idx: usize,
    p_idx: Option<usize>,
}

pub fn run_sde_experiment(spec: &SdeSpec) -> Result<Vec<SdeRow>> {
    spec.validate()?;
    if let Some(dir) = &spec.terminal_dir {
        fs::create_dir_all(dir)?;
    }
    let target = spec.target_model()?;
    let mut jobs = Vec::new();
    for replicate in 0..spec.replicates {
        for (cell_idx, cell) in spec.cells.iter().enumerate() {
            if spec.arms.adaptive() {
                for p_idx in 0..cell.ps.len() {
                    jobs.push(SdeJob {
                        replicate,
                        arm: Arm::Adaptive,
                        cell_idx,
                        p_idx: Some(p_idx),
                    });
                }
            }
            if spec.arms.standard() {
                jobs.push(SdeJob {
                    replicate,
                    arm: Arm::Standard,
                    cell_idx,
                    p_idx: None,
                });
            }
        }
    }

    jobs.par_iter()
        .map(|job| {
            let cell = &spec.cells[job.cell_idx];
            let p = job.p_idx.map(|i| cell.ps[i]);
            let coords = [
                job.arm.tag(),
                job.cell_idx as u64,
                job.p_idx.map_or(u64::MAX, |i| i as u64),
                job.replicate as u64,
            ];
            let cfg = spec.euler_config(
                cell.h,
                p.unwrap_or(1.0),
                job.arm == Arm::Adaptive,
                derive_seed(spec.seed, &coords),
            );
            let ens = run_ensemble(&target, &cfg)?;
            if let Some(dir) = &spec.terminal_dir {
                let name = format!(
                    "{}_{}_h{:?}_p{}_rep{}.csv",
                    spec.target,
                    job.arm,
                    cell.h,
                    p.map(|p| format!("{p:?}")).unwrap_or_else(|| "na".into()),
                    job.replicate
                );
                let mut body = String::from("x_T\n");
                for x in &ens.x_terminal {
                    body.push_str(&format!("{x:?}\n"));
                }
                fs::write(dir.join(name), body)?;
            }
            let d = ks_statistic(&ens.x_terminal, &target)?;
            Ok(SdeRow {
                target: spec.target,
                arm: job.arm,
                h: cell.h,
                theta0: spec.theta0,
                p,
                seed: spec.seed,
                replicate: job.replicate,
                d,
                p_value: ks_pvalue_with(d, ens.x_terminal.len(), spec.correction),
                theta_t_mean: ens.theta_terminal_mean,
                theta_floor_hits: ens.theta_floor_hits,
            })
        })
        .collect()
}

pub fn run_coeff_experiment(spec: &CoeffSpec) -> Result<Vec<ReportRow>> {
    spec.validate()?;
    let target = make_target(spec.target);
    let mut out = Vec::new();
    for &kind in &spec.kinds {
        for &x in &spec.xs {
            for &theta in &spec.thetas {
                for &p in &spec.ps {
                    let point = EvalPoint {
                        x,
                        theta,
                        p,
                        target,
                    };
                    out.extend(convergence_report_with(
                        kind,
                        &point,
                        &spec.n_grid,
                        spec.n_draws,
                        spec.seed,
                        spec.estimator,
                    )?);
                }
            }
        }
    }
    Ok(out)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    Ok(match spec {
        ExperimentSpec::Discrete(s) => run_discrete_experiment(s)?
            .into_iter()
            .map(ResultRow::Discrete)
            .collect(),
        ExperimentSpec::Sde(s) => run_sde_experiment(s)?
            .into_iter()
            .map(ResultRow::Sde)
            .collect(),
        ExperimentSpec::Coeff(s) => run_coeff_experiment(s)?
            .into_iter()
            .map(ResultRow::Coeff)
            .collect(),
    })
}

/// Header plus one line per row. An empty slice yields the header named by
/// `mode` (`discrete`, `sde` or `coeff`).
pub fn to_csv_string(rows: &[ResultRow], mode: &str) -> Result<String> {
    let header = match rows.first() {
        Some(r) => {
            if rows.iter().any(|x| x.mode() != r.mode()) {
                return Err(Error::InvalidConfig("rows mix several modes".into()));
            }
            r.header()
        }
        None => match mode {
            "discrete" => DISCRETE_HEADER,
            "sde" => SDE_HEADER,
            "coeff" => ReportRow::CSV_HEADER,
            other => return Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        },
    };
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    Ok(out)
}

/// Write rows to `dest`. The file only appears once fully written.
pub fn emit_csv(rows: &[ResultRow], mode: &str, dest: &Path) -> Result<()> {
    let body = to_csv_string(rows, mode)?;
    let dir = dest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = dest
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", dest.display())))?;
    let tmp = dir.join(format!(".{}.partial", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dest)?;
    Ok(())
}

fn field<T: FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Csv(format!("bad {name} `{s}`")))
}

fn opt_field(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(s, "p").map(Some)
    }
}

/// Parse a CSV produced by [`to_csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Csv("missing header".into()))?;
    let width = header.split(',').count();
    let parse_line = |line: &str| -> Result<ResultRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != width {
            return Err(Error::Csv(format!(
                "expected {width} fields, got {}: {line}",
                f.len()
            )));
        }
        match header {
            DISCRETE_HEADER => Ok(ResultRow::Discrete(DiscreteRow {
                target: field(f[0], "target")?,
                arm: field(f[2], "arm")?,
                theta0: field(f[3], "theta0")?,
                p: opt_field(f[4])?,
                seed: field(f[5], "seed")?,
                replicate: field(f[6], "replicate")?,
                d: field(f[7], "D")?,
                p_value: field(f[8], "p_value")?,
                esjd: field(f[9], "esjd")?,
            })),
            SDE_HEADER => Ok(ResultRow::Sde(SdeRow {
                target: field(f[0], "target")?,
                arm: field(f[2], "arm")?,
                h: field(f[3], "h")?,
                theta0: field(f[4], "theta0")?,
                p: opt_field(f[5])?,
                seed: field(f[6], "seed")?,
                replicate: field(f[7], "replicate")?,
                d: field(f[8], "D")?,
                p_value: field(f[9], "p_value")?,
                theta_t_mean: field(f[10], "theta_T_mean")?,
                theta_floor_hits: field(f[11], "theta_floor_hits")?,
            })),
            ReportRow::CSV_HEADER => {
                let target: TargetKind = field(f[1], "target")?;
                Ok(ResultRow::Coeff(ReportRow {
                    kind: field(f[0], "kind")?,
                    point: EvalPoint {
                        x: field(f[2], "x")?,
                        theta: field(f[3], "theta")?,
                        p: field(f[4], "p")?,
                        target: make_target(target),
                    },
                    n: field(f[5], "n")?,
                    estimate: field(f[6], "estimate")?,
                    std_error: field(f[7], "std_error")?,
                    limit: field(f[8], "limit")?,
                    z: field(f[9], "z")?,
                }))
            }
            other => Err(Error::Csv(format!("unrecognised header `{other}`"))),
        }
    };
    lines.filter(|l| !l.is_empty()).map(parse_line).collect()
}

/// For each group (replicate and theta0, or replicate and h) flag the
/// adaptive row with the largest p-value, smallest D on ties.
pub fn best_in_group(rows: &[ResultRow]) -> Vec<bool> {
    let key = |r: &ResultRow| -> Option<(usize, u64, f64, f64)> {
        match r {
            ResultRow::Discrete(d) if d.arm == Arm::Adaptive => {
                Some((d.replicate, d.theta0.to_bits(), d.p_value, d.d))
            }
            ResultRow::Sde(s) if s.arm == Arm::Adaptive => {
                Some((s.replicate, s.h.to_bits(), s.p_value, s.d))
            }
            _ => None,
        }
    };
    let mut flags = vec![false; rows.len()];
    let mut best: Vec<((usize, u64), usize)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let Some((rep, g, pv, d)) = key(r) else {
            continue;
        };
        match best.iter_mut().find(|(k, _)| *k == (rep, g)) {
            Some((_, j)) => {
                let (_, _, bpv, bd) = key(&rows[*j]).expect("adaptive row");
                if pv > bpv || (pv == bpv && d < bd) {
                    *j = i;
                }
            }
            None => best.push(((rep, g), i)),
        }
    }
    for (_, i) in best {
        flags[i] = true;
    }
    flags
}

/// Fixed-width table for the terminal, with the `best_in_group` marker.
pub fn summary_table(rows: &[ResultRow]) -> String {
    use crate::stats::format_pvalue;
    let flags = best_in_group(rows);
    let mut out = String::new();
    let fmt_p = |p: Option<f64>| p.map(|p| format!("{p}")).unwrap_or_else(|| "-".into());
    for (r, best) in rows.iter().zip(flags) {
        let line = match r {
            ResultRow::Discrete(d) => {
                if out.is_empty() {
                    out.push_str(&format!(
                        "{:<7} {:<9} {:>8} {:>6} {:>4} {:>8} {:>10} {:>9} {}\n",
                        "target",
                        "arm",
                        "theta0",
                        "p",
                        "rep",
                        "D",
                        "p-value",
                        "ESJD",
                        "best_in_group"
                    ));
                }
                format!(
                    "{:<7} {:<9} {:>8} {:>6} {:>4} {:>8.4} {:>10} {:>9.4} {}\n",
                    d.target.as_str(),
                    d.arm.as_str(),
                    d.theta0,
                    fmt_p(d.p),
                    d.replicate,
                    d.d,
                    format_pvalue(d.p_value),
                    d.esjd,
                    u8::from(best)
                )
            }
            ResultRow::Sde(s) => {
                if out.is_empty() {
                    out.push_str(&format!(
                        "{:<7} {:<9} {:>7} {:>6} {:>4} {:>8} {:>10} {:>9} {}\n",
                        "target",
                        "arm",
                        "h",
                        "p",
                        "rep",
                        "D",
                        "p-value",
                        "theta(T)",
                        "best_in_group"
                    ));
                }
                format!(
                    "{:<7} {:<9} {:>7} {:>6} {:>4} {:>8.4} {:>10} {:>9.4} {}\n",
                    s.target.as_str(),
                    s.arm.as_str(),
                    s.h,
                    fmt_p(s.p),
                    s.replicate,
                    s.d,
                    format_pvalue(s.p_value),
                    s.theta_t_mean,
                    u8::from(best)
                )
            }
            ResultRow::Coeff(c) => {
                if out.is_empty() {
                    out.push_str(&format!(
                        "{:<4} {:<7} {:>6} {:>6} {:>5} {:>9} {:>12} {:>10} {:>10} {:>7}\n",
                        "kind",
                        "target",
                        "x",
                        "theta",
                        "p",
                        "n",
                        "estimate",
                        "std_err",
                        "limit",
                        "z"
                    ));
                }
                format!(
                    "{:<4} {:<7} {:>6} {:>6} {:>5} {:>9} {:>12.6} {:>10.3e} {:>10.6} {:>7.2}\n",
                    c.kind.as_str(),
                    c.point.target.kind().as_str(),
                    c.point.x,
                    c.point.theta,
                    c.point.p,
                    c.n,
                    c.estimate,
                    c.std_error,
                    c.limit,
                    c.z
                )
            }
        };
        out.push_str(&line);
    }
    out
}

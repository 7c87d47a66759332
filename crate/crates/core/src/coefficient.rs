//! Monte-Carlo check of the drift and diffusion limits.
//!
//! For the `n`-th embedded chain started at `(x, theta)`, the scaled one-step
//! moments
//!
//! ```text
//! B1 = n E[dX]      B2 = n E[dtheta]
//! A11 = n E[dX^2]   A22 = n E[dtheta^2]   A12 = n E[dX dtheta]
//! ```
//!
//! converge to the coefficients of the limiting SDE. We estimate them from
//! independent one-step transitions and compare with [`limit_coefficient`].
//!
//! [`Estimator::Plain`] averages the scaled moments themselves. With
//! [`Estimator::ControlVariate`], B1 and A11 subtract a zero-mean term built
//! from the proposal draw `eps` (exact, since `E[eps] = 0` and `E[eps^2] = 1`):
//!
//! - B1 averages `sqrt(n) theta (xi - 1) eps` instead of `sqrt(n) theta xi eps`;
//! - A11 averages `theta^2 ((xi - 1) eps^2 + 1)` instead of `theta^2 xi eps^2`.
//!
//! The plain B1 standard error grows like `sqrt(n)`, so its sign is
//! meaningless at `n = 10^6`; the control variate removes that growth. Its
//! much smaller standard error also resolves the `O(1/sqrt(n))` bias of the
//! finite-`n` moments, so z-scores against the limit are no longer O(1).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::chain::{embedded_benchmark, embedded_transition};
use crate::rng;
use crate::target::TargetModel;
use crate::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const BATCH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoefficientKind {
    B1,
    B2,
    A11,
    A22,
    A12,
}

impl CoefficientKind {
    pub const ALL: [CoefficientKind; 5] = [
        CoefficientKind::B1,
        CoefficientKind::B2,
        CoefficientKind::A11,
        CoefficientKind::A22,
        CoefficientKind::A12,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CoefficientKind::B1 => "b1",
            CoefficientKind::B2 => "b2",
            CoefficientKind::A11 => "a11",
            CoefficientKind::A22 => "a22",
            CoefficientKind::A12 => "a12",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoefficientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CoefficientKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown coefficient `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub x: f64,
    pub theta: f64,
    pub p: f64,
    pub target: TargetModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEstimate {
    pub kind: CoefficientKind,
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_draws: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    #[default]
    Plain,
    ControlVariate,
}

/// Streaming mean and sum of squared deviations (Welford / Chan).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Moments { count, mean, m2 }
    }

    fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.m2 / (self.count - 1) as f64).sqrt() / (self.count as f64).sqrt()
    }
}

/// Summand for `kind` from one transition `(xi, eps)` out of `(x, theta)`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn summand(
    kind: CoefficientKind,
    estimator: Estimator,
    theta: f64,
    dtheta: f64,
    xi: bool,
    eps: f64,
    sqrt_n: f64,
    n: f64,
) -> f64 {
    let hit = f64::from(u8::from(xi));
    let dx = hit * theta * eps / sqrt_n;
    let cv = estimator == Estimator::ControlVariate;
    match kind {
        CoefficientKind::B1 if cv => sqrt_n * theta * (hit - 1.0) * eps,
        CoefficientKind::B1 => sqrt_n * theta * hit * eps,
        CoefficientKind::B2 => n * dtheta,
        CoefficientKind::A11 if cv => theta * theta * ((hit - 1.0) * eps * eps + 1.0),
        CoefficientKind::A11 => theta * theta * hit * eps * eps,
        CoefficientKind::A22 => n * dtheta * dtheta,
        CoefficientKind::A12 => n * dx * dtheta,
    }
}

/// `theta * (exp((xi - p_n)/sqrt(n)) - 1)` without cancellation.
#[inline]
fn scale_increment(theta: f64, xi: bool, pn: f64, inv_sqrt_n: f64) -> f64 {
    theta * ((f64::from(u8::from(xi)) - pn) * inv_sqrt_n).exp_m1()
}

/// Plain Monte-Carlo mean of the scaled moment over `n_draws` transitions.
pub fn estimate_coefficient(
    kind: CoefficientKind,
    point: &EvalPoint,
    n: u64,
    n_draws: u64,
    seed: u64,
) -> Result<CoefficientEstimate> {
    estimate_coefficient_with(kind, point, n, n_draws, seed, Estimator::Plain)
}

pub fn estimate_coefficient_with(
    kind: CoefficientKind,
    point: &EvalPoint,
    n: u64,
    n_draws: u64,
    seed: u64,
    estimator: Estimator,
) -> Result<CoefficientEstimate> {
    if n < 4 {
        return Err(Error::InvalidConfig(format!(
            "resolution n must be at least 4, got {n}"
        )));
    }
    if n_draws < 1_000 {
        return Err(Error::InvalidConfig(format!(
            "need at least 1000 draws, got {n_draws}"
        )));
    }
    if !(point.theta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "theta must be positive, got {}",
            point.theta
        )));
    }
    if !point.target.in_support(point.x) {
        return Err(Error::OutsideSupport {
            target: point.target.kind().as_str(),
            x: point.x,
        });
    }
    let pn = embedded_benchmark(point.p, n)?;
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let inv_sqrt_n = 1.0 / sqrt_n;
    let n_batches = n_draws.div_ceil(BATCH as u64);

    let moments = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let len = (n_draws - b * BATCH as u64).min(BATCH as u64);
            let mut rng = rng::stream(seed, &[kind.tag(), n, b]);
            let mut acc = Moments::default();
            for _ in 0..len {
                let (_, _, xi, eps) = embedded_transition(
                    point.x,
                    point.theta,
                    inv_sqrt_n,
                    None,
                    &point.target,
                    &mut rng,
                );
                let dtheta = scale_increment(point.theta, xi, pn, inv_sqrt_n);
                acc.push(summand(
                    kind,
                    estimator,
                    point.theta,
                    dtheta,
                    xi,
                    eps,
                    sqrt_n,
                    nf,
                ));
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);

    Ok(CoefficientEstimate {
        kind,
        n,
        estimate: moments.mean,
        std_error: moments.std_error(),
        n_draws,
    })
}

/// Analytic `n -> infinity` limit of the scaled moment.
pub fn limit_coefficient(kind: CoefficientKind, point: &EvalPoint) -> f64 {
    let s = point.target.score_unchecked(point.x);
    let th = point.theta;
    match kind {
        CoefficientKind::B1 => 0.5 * th * th * s,
        CoefficientKind::B2 => th * (point.p - th * INV_SQRT_2PI * s.abs()),
        CoefficientKind::A11 => th * th,
        CoefficientKind::A22 | CoefficientKind::A12 => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub kind: CoefficientKind,
    pub point: EvalPoint,
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub limit: f64,
    pub z: f64,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str = "kind,target,x,theta,p,n,estimate,std_error,limit,z";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{},{:?},{:?},{:?},{:?}",
            self.kind,
            self.point.target.kind(),
            self.point.x,
            self.point.theta,
            self.point.p,
            self.n,
            self.estimate,
            self.std_error,
            self.limit,
            self.z
        )
    }
}

fn z_score(estimate: f64, limit: f64, se: f64) -> f64 {
    let diff = estimate - limit;
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// One estimate per resolution in `n_grid` (ascending) with the limit and
/// the standardised deviation from it.
pub fn convergence_report(
    kind: CoefficientKind,
    point: &EvalPoint,
    n_grid: &[u64],
    n_draws: u64,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    convergence_report_with(kind, point, n_grid, n_draws, seed, Estimator::Plain)
}

pub fn convergence_report_with(
    kind: CoefficientKind,
    point: &EvalPoint,
    n_grid: &[u64],
    n_draws: u64,
    seed: u64,
    estimator: Estimator,
) -> Result<Vec<ReportRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "n grid must be strictly ascending".into(),
        ));
    }
    let limit = limit_coefficient(kind, point);
    n_grid
        .iter()
        .map(|&n| {
            let est = estimate_coefficient_with(kind, point, n, n_draws, seed, estimator)?;
            Ok(ReportRow {
                kind,
                point: *point,
                n,
                estimate: est.estimate,
                std_error: est.std_error,
                limit,
                z: z_score(est.estimate, limit, est.std_error),
            })
        })
        .collect()
}

//! Discrete-time chains: the adaptive Metropolis-Hastings sampler, its
//! fixed-scale counterpart, and the `1/n`-grid embeddings of both.
//!
//! The proposal scale `theta` is the standard deviation of the Gaussian
//! random-walk proposal. After every step the adaptive chain updates
//!
//! ```text
//! theta_n = theta_{n-1} * exp((xi_n - p) / sqrt(n))
//! ```
//!
//! where `xi_n` is the acceptance indicator, so the log-scale moves by at most
//! `max(p, 1 - p) / sqrt(n)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{self, StreamRng};
use crate::target::TargetModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainState {
    pub x: f64,
    pub theta: f64,
    pub xi: bool,
    pub step: u64,
}

impl ChainState {
    pub fn initial(x0: f64, theta0: f64) -> Self {
        ChainState {
            x: x0,
            theta: theta0,
            xi: false,
            step: 0,
        }
    }
}

/// The two equivalent ways of writing one adaptive step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formulation {
    /// Propose `Y ~ N(x, theta^2)`, then accept with `min(1, psi(Y)/psi(x))`.
    #[default]
    ProposeThenAccept,
    /// Draw `xi ~ Bernoulli(min(1, psi(x + theta eps)/psi(x)))`, then move by
    /// `theta * xi * eps`.
    BernoulliFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub p: f64,
    pub theta0: f64,
    pub x0: f64,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub formulation: Formulation,
}

impl AdaptiveConfig {
    /// Defaults of the discrete comparison runs: 10 000 samples, 1 000 burn-in,
    /// started at the origin.
    pub fn new(theta0: f64, p: f64, seed: u64) -> Self {
        AdaptiveConfig {
            p,
            theta0,
            x0: 0.0,
            n_samples: 10_000,
            burn_in: 1_000,
            seed,
            formulation: Formulation::default(),
        }
    }

    fn validate(&self, target: &TargetModel, adaptive: bool) -> Result<()> {
        if !(self.theta0 > 0.0 && self.theta0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "theta0 must be positive, got {}",
                self.theta0
            )));
        }
        if adaptive && !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be positive".into()));
        }
        if self.burn_in >= self.n_samples {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be smaller than n_samples ({})",
                self.burn_in, self.n_samples
            )));
        }
        if !target.in_support(self.x0) {
            return Err(Error::OutsideSupport {
                target: target.kind().as_str(),
                x: self.x0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedConfig {
    pub n_resolution: u64,
    pub horizon: f64,
    pub p: f64,
    pub theta0: f64,
    pub x0: f64,
    pub seed: u64,
    pub adaptive: bool,
}

impl EmbeddedConfig {
    /// `ceil(n * T)`, tolerant of the rounding in `n * T` for exact grids.
    pub fn n_steps(&self) -> u64 {
        grid_steps(self.n_resolution as f64 * self.horizon)
    }
}

pub(crate) fn grid_steps(ratio: f64) -> u64 {
    let r = ratio.round();
    if (ratio - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        ratio.ceil() as u64
    }
}

/// Recorded path of a chain. `states[k]` is the state after `k + 1` steps;
/// the starting point is kept separately in `initial`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrajectory {
    pub initial: ChainState,
    pub states: Vec<ChainState>,
    pub acceptance_count: u64,
    /// Time between recorded states: 1 for plain chains, `1/n` for embeddings.
    pub dt: f64,
}

impl ChainTrajectory {
    fn with_capacity(initial: ChainState, len: usize, dt: f64) -> Self {
        ChainTrajectory {
            initial,
            states: Vec::with_capacity(len),
            acceptance_count: 0,
            dt,
        }
    }

    fn push(&mut self, s: ChainState) {
        self.acceptance_count += u64::from(s.xi);
        self.states.push(s);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Sample values after each step.
    pub fn xs(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.x).collect()
    }

    /// The full path `X_0, X_1, ..., X_N`, initial point included.
    pub fn path(&self) -> Vec<f64> {
        std::iter::once(self.initial.x)
            .chain(self.states.iter().map(|s| s.x))
            .collect()
    }

    /// Samples left after dropping the first `burn_in` recorded states.
    pub fn retained(&self, burn_in: usize) -> Vec<f64> {
        self.states.iter().skip(burn_in).map(|s| s.x).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.states.is_empty() {
            0.0
        } else {
            self.acceptance_count as f64 / self.states.len() as f64
        }
    }

    /// Piecewise-constant interpolation: the state in force at time `t`.
    pub fn state_at(&self, t: f64) -> ChainState {
        if t < self.dt {
            return self.initial;
        }
        let k = (t / self.dt).floor() as usize;
        match k.checked_sub(1) {
            Some(i) if i < self.states.len() => self.states[i],
            _ => *self.states.last().unwrap_or(&self.initial),
        }
    }

    /// CSV dump with header `step,x,theta,xi`, initial state first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,x,theta,xi\n");
        for s in std::iter::once(&self.initial).chain(self.states.iter()) {
            out.push_str(&format!(
                "{},{:?},{:?},{}\n",
                s.step,
                s.x,
                s.theta,
                u8::from(s.xi)
            ));
        }
        out
    }
}

/// Draws the step's standard normal and uniform, in that fixed order.
#[inline]
fn draw_pair(rng: &mut StreamRng) -> (f64, f64) {
    let eps: f64 = rng.sample(StandardNormal);
    let u: f64 = rng.random();
    (eps, u)
}

#[inline]
fn accept(target: &TargetModel, x: f64, y: f64, u: f64) -> bool {
    u < target.density_ratio_unchecked(x, y).min(1.0)
}

/// `log(theta)` increment for the adaptive update at iteration `n`.
#[inline]
pub fn adaptation_increment(xi: bool, p: f64, n: u64) -> f64 {
    (f64::from(u8::from(xi)) - p) / (n as f64).sqrt()
}

/// One step of the adaptive chain. `state.step + 1` is the iteration index
/// `n` in the scale update.
pub fn amcmc_step(
    state: &ChainState,
    p: f64,
    formulation: Formulation,
    target: &TargetModel,
    rng: &mut StreamRng,
) -> ChainState {
    let n = state.step + 1;
    let (x, xi) = mh_move(state.x, state.theta, formulation, target, rng);
    ChainState {
        x,
        theta: state.theta * adaptation_increment(xi, p, n).exp(),
        xi,
        step: n,
    }
}

/// Position update shared by the adaptive and standard chains.
#[inline]
fn mh_move(
    x: f64,
    theta: f64,
    formulation: Formulation,
    target: &TargetModel,
    rng: &mut StreamRng,
) -> (f64, bool) {
    let (eps, u) = draw_pair(rng);
    match formulation {
        Formulation::ProposeThenAccept => {
            let y = x + theta * eps;
            if accept(target, x, y, u) {
                (y, true)
            } else {
                (x, false)
            }
        }
        Formulation::BernoulliFirst => {
            let xi = accept(target, x, x + theta * eps, u);
            (x + theta * f64::from(u8::from(xi)) * eps, xi)
        }
    }
}

pub fn run_amcmc(config: &AdaptiveConfig, target: &TargetModel) -> Result<ChainTrajectory> {
    config.validate(target, true)?;
    let mut rng = rng::stream(config.seed, &[]);
    let initial = ChainState::initial(config.x0, config.theta0);
    let mut traj = ChainTrajectory::with_capacity(initial, config.n_samples, 1.0);
    let mut state = initial;
    for _ in 0..config.n_samples {
        state = amcmc_step(&state, config.p, config.formulation, target, &mut rng);
        traj.push(state);
    }
    Ok(traj)
}

/// Standard random-walk Metropolis with the scale fixed at `theta0`;
/// `config.p` is ignored.
pub fn run_smcmc(config: &AdaptiveConfig, target: &TargetModel) -> Result<ChainTrajectory> {
    config.validate(target, false)?;
    let mut rng = rng::stream(config.seed, &[]);
    let initial = ChainState::initial(config.x0, config.theta0);
    let mut traj = ChainTrajectory::with_capacity(initial, config.n_samples, 1.0);
    let mut state = initial;
    for _ in 0..config.n_samples {
        let (x, xi) = mh_move(state.x, config.theta0, config.formulation, target, &mut rng);
        state = ChainState {
            x,
            theta: config.theta0,
            xi,
            step: state.step + 1,
        };
        traj.push(state);
    }
    Ok(traj)
}

/// `p_n = 1 - p / sqrt(n)`, the benchmark used by the embedded scale update.
pub fn embedded_benchmark(p: f64, n: u64) -> Result<f64> {
    let pn = 1.0 - p / (n as f64).sqrt();
    if !(pn > 0.0) || !(p > 0.0) {
        return Err(Error::DegenerateBenchmark { p, n });
    }
    Ok(pn.clamp(0.0, 1.0))
}

/// One transition of the `n`-th embedded chain from `(x, theta)`.
///
/// Returns the new `(x, theta, xi)` together with the normal draw. When
/// `pn` is `None` the scale is held fixed.
#[inline]
pub(crate) fn embedded_transition(
    x: f64,
    theta: f64,
    inv_sqrt_n: f64,
    pn: Option<f64>,
    target: &TargetModel,
    rng: &mut StreamRng,
) -> (f64, f64, bool, f64) {
    let (eps, u) = draw_pair(rng);
    let step = inv_sqrt_n * theta * eps;
    let xi = accept(target, x, x + step, u);
    let x_new = if xi { x + step } else { x };
    let theta_new = match pn {
        Some(pn) => theta * ((f64::from(u8::from(xi)) - pn) * inv_sqrt_n).exp(),
        None => theta,
    };
    (x_new, theta_new, xi, eps)
}

/// Embedded chain on the grid `i / n`, `i = 0 .. ceil(n T)`.
pub fn run_embedded(config: &EmbeddedConfig, target: &TargetModel) -> Result<ChainTrajectory> {
    if config.n_resolution == 0 {
        return Err(Error::InvalidConfig(
            "n_resolution must be at least 1".into(),
        ));
    }
    if !(config.horizon > 0.0) {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    if !(config.theta0 > 0.0 && config.theta0.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "theta0 must be positive, got {}",
            config.theta0
        )));
    }
    if !target.in_support(config.x0) {
        return Err(Error::OutsideSupport {
            target: target.kind().as_str(),
            x: config.x0,
        });
    }
    let n = config.n_resolution;
    let pn = if config.adaptive {
        Some(embedded_benchmark(config.p, n)?)
    } else {
        None
    };
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let steps = config.n_steps();
    let mut rng = rng::stream(config.seed, &[]);
    let initial = ChainState::initial(config.x0, config.theta0);
    let mut traj = ChainTrajectory::with_capacity(initial, steps as usize, 1.0 / n as f64);
    let mut state = initial;
    for i in 0..steps {
        let (x, theta, xi, _) =
            embedded_transition(state.x, state.theta, inv_sqrt_n, pn, target, &mut rng);
        state = ChainState {
            x,
            theta,
            xi,
            step: i + 1,
        };
        traj.push(state);
    }
    Ok(traj)
}

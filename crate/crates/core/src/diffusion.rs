//! Euler schemes for the diffusion limits.
//!
//! The adaptive chain converges to the degenerate two-dimensional SDE
//!
//! ```text
//! dX     = theta^2 / 2 * s(X) dt + theta dW
//! dtheta = theta * (p - theta / sqrt(2 pi) * |s(X)|) dt
//! ```
//!
//! with `s = psi' / psi`; the standard chain converges to the first line with
//! `theta` frozen, an Ornstein-Uhlenbeck process for the Normal target.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::chain::grid_steps;
use crate::rng;
use crate::target::{BoundaryPolicy, TargetModel};
use crate::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Floor applied when an Euler step drives `theta` to zero or below.
pub const THETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeState {
    pub x: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerConfig {
    pub h: f64,
    pub horizon: f64,
    /// Drift benchmark; any positive value, not only `(0, 1)`.
    pub p: f64,
    pub theta0: f64,
    pub x0: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub adaptive: bool,
}

impl EulerConfig {
    pub fn n_steps(&self) -> u64 {
        grid_steps(self.horizon / self.h)
    }

    pub fn validate(&self, target: &TargetModel) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("mesh size h must be positive, got {}", self.h));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.theta0 > 0.0 && self.theta0.is_finite()) {
            return bad(format!("theta0 must be positive, got {}", self.theta0));
        }
        if self.adaptive && !(self.p > 0.0 && self.p.is_finite()) {
            return bad(format!("p must be positive, got {}", self.p));
        }
        if self.n_paths == 0 {
            return bad("n_paths must be at least 1".into());
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

/// Drift vector of the coupled SDE at `state`.
pub fn drift(target: &TargetModel, state: SdeState, p: f64) -> Result<(f64, f64)> {
    if !target.in_support(state.x) {
        return Err(Error::OutsideSupport {
            target: target.kind().as_str(),
            x: state.x,
        });
    }
    Ok(drift_unchecked(target, state, p))
}

#[inline]
fn drift_unchecked(target: &TargetModel, state: SdeState, p: f64) -> (f64, f64) {
    let s = target.score_unchecked(state.x);
    let th = state.theta;
    (0.5 * th * th * s, th * (p - th * INV_SQRT_2PI * s.abs()))
}

/// Result of one Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: SdeState,
    /// `theta` hit zero and was floored at [`THETA_FLOOR`].
    pub theta_floored: bool,
}

/// One Euler step driven by the standard normal `z`.
///
/// The `theta` update carries no noise. The non-adaptive scheme uses
/// `config.theta0` throughout and leaves `theta` untouched.
pub fn euler_step(
    target: &TargetModel,
    state: SdeState,
    config: &EulerConfig,
    z: f64,
) -> StepOutcome {
    let h = config.h;
    let (x_new, theta_new) = if config.adaptive {
        let (bx, bt) = drift_unchecked(target, state, config.p);
        (
            state.x + h * bx + h.sqrt() * state.theta * z,
            state.theta + h * bt,
        )
    } else {
        let th = config.theta0;
        let s = target.score_unchecked(state.x);
        (
            state.x + h * 0.5 * th * th * s + h.sqrt() * th * z,
            state.theta,
        )
    };
    let x_new = match target.boundary_policy() {
        BoundaryPolicy::None => x_new,
        BoundaryPolicy::ReflectAtZero => x_new.abs(),
        BoundaryPolicy::HoldAtZero => {
            if x_new < 0.0 {
                state.x
            } else {
                x_new
            }
        }
    };
    let theta_floored = theta_new <= 0.0;
    StepOutcome {
        state: SdeState {
            x: x_new,
            theta: if theta_floored {
                THETA_FLOOR
            } else {
                theta_new
            },
        },
        theta_floored,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub terminal: SdeState,
    pub theta_floor_hits: u64,
}

/// Simulate path `index` of an ensemble from `(x0, theta0)` to the horizon.
pub fn simulate_path(target: &TargetModel, config: &EulerConfig, index: u64) -> PathResult {
    let mut rng = rng::stream(config.seed, &[index]);
    let mut state = SdeState {
        x: config.x0,
        theta: config.theta0,
    };
    let mut hits = 0;
    for _ in 0..config.n_steps() {
        let z: f64 = StandardNormal.sample(&mut rng);
        let out = euler_step(target, state, config, z);
        hits += u64::from(out.theta_floored);
        state = out.state;
    }
    PathResult {
        terminal: state,
        theta_floor_hits: hits,
    }
}

/// Record every visited state of one path, initial state included.
pub fn simulate_path_trace(
    target: &TargetModel,
    config: &EulerConfig,
    index: u64,
) -> Vec<SdeState> {
    let mut rng = rng::stream(config.seed, &[index]);
    let mut state = SdeState {
        x: config.x0,
        theta: config.theta0,
    };
    let steps = config.n_steps() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state);
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        state = euler_step(target, state, config, z).state;
        out.push(state);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub x_terminal: Vec<f64>,
    pub theta_terminal: Vec<f64>,
    pub theta_terminal_mean: f64,
    pub theta_floor_hits: u64,
}

/// `n_paths` independent Euler paths; path `i` draws from stream `(seed, i)`
/// so the result does not depend on the rayon schedule.
pub fn run_ensemble(target: &TargetModel, config: &EulerConfig) -> Result<EnsembleResult> {
    config.validate(target)?;
    let paths: Vec<PathResult> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(target, config, i))
        .collect();
    let x_terminal: Vec<f64> = paths.iter().map(|r| r.terminal.x).collect();
    let theta_terminal: Vec<f64> = paths.iter().map(|r| r.terminal.theta).collect();
    let theta_terminal_mean = theta_terminal.iter().sum::<f64>() / theta_terminal.len() as f64;
    Ok(EnsembleResult {
        x_terminal,
        theta_terminal,
        theta_terminal_mean,
        theta_floor_hits: paths.iter().map(|r| r.theta_floor_hits).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{make_target, TargetKind};

    fn cfg(adaptive: bool) -> EulerConfig {
        EulerConfig {
            h: 0.01,
            horizon: 1.0,
            p: 0.5,
            theta0: 1.0,
            x0: 0.0,
            n_paths: 10,
            seed: 1,
            adaptive,
        }
    }

    #[test]
    fn drift_values() {
        let normal = make_target(TargetKind::Normal01);
        let (a, b) = drift(&normal, SdeState { x: 0.0, theta: 1.0 }, 0.5).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(b, 0.5);
        let (a, b) = drift(&normal, SdeState { x: 1.0, theta: 2.0 }, 0.5).unwrap();
        assert_eq!(a, -2.0);
        assert!((b + 0.595_769_121_605_730_8).abs() < 1e-12, "{b}");
        let cauchy = make_target(TargetKind::Cauchy01);
        let (a, b) = drift(&cauchy, SdeState { x: 1.0, theta: 1.0 }, 0.3).unwrap();
        assert_eq!(a, -0.5);
        assert!((b + 0.098_942_280_401_432_7).abs() < 1e-12);
        assert!(drift(
            &make_target(TargetKind::Exp1),
            SdeState {
                x: -0.1,
                theta: 1.0
            },
            0.3
        )
        .is_err());
    }

    #[test]
    fn step_examples() {
        let normal = make_target(TargetKind::Normal01);
        let out = euler_step(&normal, SdeState { x: 0.0, theta: 1.0 }, &cfg(true), 0.0);
        assert_eq!(out.state.x, 0.0);
        assert!((out.state.theta - 1.005).abs() < 1e-15);

        let out = euler_step(&normal, SdeState { x: 1.0, theta: 1.0 }, &cfg(false), 1.0);
        assert!((out.state.x - 1.095).abs() < 1e-15);
        assert_eq!(out.state.theta, 1.0);

        let exp = make_target(TargetKind::Exp1);
        let out = euler_step(
            &exp,
            SdeState {
                x: 0.05,
                theta: 1.0,
            },
            &cfg(true),
            -1.0,
        );
        assert!((out.state.x - 0.055).abs() < 1e-15, "{}", out.state.x);

        let hold = exp
            .with_boundary_policy(BoundaryPolicy::HoldAtZero)
            .unwrap();
        let out = euler_step(
            &hold,
            SdeState {
                x: 0.05,
                theta: 1.0,
            },
            &cfg(true),
            -1.0,
        );
        assert_eq!(out.state.x, 0.05);
    }

    #[test]
    fn theta_floor() {
        let normal = make_target(TargetKind::Normal01);
        let mut c = cfg(true);
        c.h = 1.0;
        // theta = 10 at x = 5: 10 + 10 * (0.5 - 10 * 5 / sqrt(2 pi)) < 0
        let out = euler_step(
            &normal,
            SdeState {
                x: 5.0,
                theta: 10.0,
            },
            &c,
            0.0,
        );
        assert!(out.theta_floored);
        assert_eq!(out.state.theta, THETA_FLOOR);
    }

    #[test]
    fn single_step_horizon() {
        let normal = make_target(TargetKind::Normal01);
        let c = EulerConfig {
            horizon: 0.01,
            n_paths: 1,
            ..cfg(true)
        };
        assert_eq!(c.n_steps(), 1);
        let res = run_ensemble(&normal, &c).unwrap();
        let mut r = rng::stream(c.seed, &[0]);
        let z: f64 = StandardNormal.sample(&mut r);
        let expect = euler_step(&normal, SdeState { x: 0.0, theta: 1.0 }, &c, z).state;
        assert_eq!(res.x_terminal, vec![expect.x]);
        assert_eq!(res.theta_terminal, vec![expect.theta]);
    }

    #[test]
    fn step_counts_on_exact_grids() {
        for (h, n) in [
            (0.0001, 10_000),
            (0.0005, 2_000),
            (0.001, 1_000),
            (0.005, 200),
            (0.01, 100),
        ] {
            assert_eq!(EulerConfig { h, ..cfg(true) }.n_steps(), n);
        }
        assert_eq!(
            EulerConfig {
                h: 0.3,
                ..cfg(true)
            }
            .n_steps(),
            4
        );
    }

    #[test]
    fn ensemble_is_deterministic() {
        let t = make_target(TargetKind::Cauchy01);
        let c = EulerConfig {
            n_paths: 64,
            ..cfg(true)
        };
        let a = run_ensemble(&t, &c).unwrap();
        let b = run_ensemble(&t, &c).unwrap();
        assert_eq!(a, b);
        let seq: Vec<f64> = (0..64)
            .map(|i| simulate_path(&t, &c, i).terminal.x)
            .collect();
        assert_eq!(a.x_terminal, seq);
    }

    #[test]
    fn invalid_ensemble_configs() {
        let t = make_target(TargetKind::Normal01);
        assert!(run_ensemble(
            &t,
            &EulerConfig {
                h: 0.0,
                ..cfg(true)
            }
        )
        .is_err());
        assert!(run_ensemble(
            &t,
            &EulerConfig {
                n_paths: 0,
                ..cfg(true)
            }
        )
        .is_err());
        assert!(run_ensemble(
            &t,
            &EulerConfig {
                p: -1.0,
                ..cfg(true)
            }
        )
        .is_err());
        assert!(run_ensemble(&make_target(TargetKind::Exp1), &cfg(true)).is_ok());
        assert!(run_ensemble(
            &make_target(TargetKind::Exp1),
            &EulerConfig {
                x0: -1.0,
                ..cfg(true)
            }
        )
        .is_err());
    }

    #[test]
    fn reflected_paths_stay_nonnegative() {
        let exp = make_target(TargetKind::Exp1);
        let c = EulerConfig {
            x0: 0.01,
            p: 3.0,
            horizon: 2.0,
            ..cfg(true)
        };
        for i in 0..20 {
            assert!(simulate_path_trace(&exp, &c, i).iter().all(|s| s.x >= 0.0));
        }
    }
}

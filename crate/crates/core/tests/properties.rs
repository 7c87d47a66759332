use proptest::prelude::*;

use amcmc::chain::{
    run_amcmc, run_embedded, run_smcmc, AdaptiveConfig, EmbeddedConfig, Formulation,
};
use amcmc::coefficient::{estimate_coefficient_with, CoefficientKind, Estimator, EvalPoint};
use amcmc::diffusion::{drift, euler_step, EulerConfig, SdeState};
use amcmc::rng;
use amcmc::stats::{esjd, ks_pvalue, ks_statistic};
use amcmc::target::{make_target, TargetKind};
use rand::Rng;
use rand_distr::StandardNormal;

fn any_kind() -> impl Strategy<Value = TargetKind> {
    prop::sample::select(TargetKind::ALL.to_vec())
}

fn symmetric_kind() -> impl Strategy<Value = TargetKind> {
    prop::sample::select(vec![
        TargetKind::Normal01,
        TargetKind::Cauchy01,
        TargetKind::StudentT2,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ks_permutation_invariant(
        kind in symmetric_kind(),
        sample in prop::collection::vec(-50.0f64..50.0, 1..200),
        seed in any::<u64>(),
    ) {
        let target = make_target(kind);
        let mut shuffled = sample.clone();
        let mut r = rng::stream(seed, &[]);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        prop_assert_eq!(
            ks_statistic(&sample, &target).unwrap().to_bits(),
            ks_statistic(&shuffled, &target).unwrap().to_bits()
        );
    }

    #[test]
    fn esjd_shift_invariant(
        chain in prop::collection::vec(-10.0f64..10.0, 3..300),
        shift in -100.0f64..100.0,
        burn_frac in 0.0f64..0.9,
    ) {
        let burn_in = ((chain.len() - 2) as f64 * burn_frac) as usize;
        let shifted: Vec<f64> = chain.iter().map(|x| x + shift).collect();
        let a = esjd(&chain, burn_in).unwrap();
        let b = esjd(&shifted, burn_in).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{} vs {}", a, b);
    }

    #[test]
    fn theta_stays_positive_and_adaptation_diminishes(
        kind in symmetric_kind(),
        theta0 in 1e-3f64..100.0,
        p in 0.01f64..0.99,
        seed in any::<u64>(),
    ) {
        let target = make_target(kind);
        let cfg = AdaptiveConfig { n_samples: 2000, burn_in: 0, ..AdaptiveConfig::new(theta0, p, seed) };
        let traj = run_amcmc(&cfg, &target).unwrap();
        let mut prev = theta0;
        for (k, s) in traj.states.iter().enumerate() {
            prop_assert!(s.theta > 0.0 && s.theta.is_finite());
            let bound = p.max(1.0 - p) / ((k + 1) as f64).sqrt();
            prop_assert!((s.theta.ln() - prev.ln()).abs() <= bound * (1.0 + 1e-9));
            prev = s.theta;
        }
    }

    #[test]
    fn formulations_bitwise_equal(
        kind in any_kind(),
        theta0 in 0.01f64..30.0,
        p in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let target = make_target(kind);
        let mut cfg = AdaptiveConfig { n_samples: 1000, burn_in: 0, ..AdaptiveConfig::new(theta0, p, seed) };
        if kind == TargetKind::Exp1 {
            cfg.x0 = 1.0;
        }
        let a = run_amcmc(&cfg, &target).unwrap();
        cfg.formulation = Formulation::BernoulliFirst;
        let b = run_amcmc(&cfg, &target).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn ks_pvalue_in_unit_interval(d in 0.0f64..1.0, m in 1usize..100_000) {
        let p = ks_pvalue(d, m);
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

/// `E[alpha eps^k]` for the move `x -> x + theta eps / sqrt(n)` by the
/// trapezoid rule on `[-12, 12]`.
fn acceptance_moment(kind: TargetKind, x: f64, step: f64, k: i32) -> f64 {
    let target = make_target(kind);
    let m = 24_000;
    let du = 24.0 / m as f64;
    let mut sum = 0.0;
    for i in 0..=m {
        let e = -12.0 + i as f64 * du;
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        let alpha = target.density_ratio(x, x + step * e).unwrap().min(1.0);
        sum += w * alpha * e.powi(k) * (-0.5 * e * e).exp();
    }
    sum * du / (2.0 * std::f64::consts::PI).sqrt()
}

#[test]
fn embedded_increment_variance_bounded() {
    for kind in TargetKind::ALL {
        let target = make_target(kind);
        let n = 400;
        let theta0 = 1.5;
        let cfg = EmbeddedConfig {
            n_resolution: n,
            horizon: 1.0,
            p: 0.5,
            theta0,
            x0: if kind == TargetKind::Exp1 { 1.0 } else { 0.0 },
            seed: 11,
            adaptive: false,
        };
        let traj = run_embedded(&cfg, &target).unwrap();
        assert_eq!(traj.len() as u64, n);
        let step = theta0 / (n as f64).sqrt();
        let mut x = cfg.x0;
        for s in traj.states.iter().step_by(20) {
            let m1 = acceptance_moment(kind, x, step, 1);
            let m2 = acceptance_moment(kind, x, step, 2);
            let var = step * step * (m2 - m1 * m1);
            assert!(
                var <= theta0 * theta0 / n as f64 * (1.0 + 1e-9),
                "{kind} x={x}: {var}"
            );
            assert_eq!(s.theta, theta0);
            x = s.x;
        }
    }
}

#[test]
fn fixed_theta_chain_passes_ks() {
    let normal = make_target(TargetKind::Normal01);
    let passes = (0..10u64)
        .filter(|&seed| {
            let cfg = AdaptiveConfig {
                n_samples: 100_000,
                burn_in: 10_000,
                ..AdaptiveConfig::new(2.38, 0.5, rng::derive_seed(42, &[seed]))
            };
            let traj = run_smcmc(&cfg, &normal).unwrap();
            let retained = traj.retained(cfg.burn_in);
            let d = ks_statistic(&retained, &normal).unwrap();
            ks_pvalue(d, retained.len()) > 0.001
        })
        .count();
    assert!(passes >= 8, "{passes}/10 replicates pass");
}

#[test]
fn euler_one_step_moments() {
    const DRAWS: usize = 1_000_000;
    let cases = [
        (TargetKind::Normal01, 1.3, 2.0, true),
        (TargetKind::Cauchy01, -0.7, 1.0, false),
        (TargetKind::StudentT2, 2.5, 0.5, true),
        (TargetKind::Exp1, 3.0, 1.5, false),
    ];
    for (kind, x, theta, adaptive) in cases {
        let target = make_target(kind);
        let cfg = EulerConfig {
            h: 0.01,
            horizon: 1.0,
            p: 0.4,
            theta0: theta,
            x0: x,
            n_paths: 1,
            seed: 0,
            adaptive,
        };
        let state = SdeState { x, theta };
        let (b1, b2) = drift(&target, state, cfg.p).unwrap();
        let mut r = rng::stream(99, &[kind as u64]);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..DRAWS {
            let z: f64 = r.sample(StandardNormal);
            let out = euler_step(&target, state, &cfg, z);
            let dx = out.state.x - x;
            sum += dx;
            sum_sq += dx * dx;
            let expected_theta = if adaptive { theta + cfg.h * b2 } else { theta };
            assert!((out.state.theta - expected_theta).abs() < 1e-12);
        }
        let n = DRAWS as f64;
        let mean = sum / n;
        let var = sum_sq / n - mean * mean;
        let var_true = cfg.h * theta * theta;
        let b1_used = if adaptive {
            b1
        } else {
            0.5 * theta * theta * target.score(x).unwrap()
        };
        assert!(
            (mean - cfg.h * b1_used).abs() <= 4.0 * (var_true / n).sqrt(),
            "{kind}: mean {mean}"
        );
        assert!(
            (var - var_true).abs() <= 4.0 * var_true * (2.0 / n).sqrt(),
            "{kind}: var {var}"
        );
    }
}

#[test]
fn b1_sign_follows_score() {
    for kind in TargetKind::ALL {
        let target = make_target(kind);
        let xs: &[f64] = if kind == TargetKind::Exp1 {
            &[0.5, 1.0, 2.0]
        } else {
            &[-1.0, 0.5, 2.0]
        };
        for &x in xs {
            for theta in [0.5, 1.0, 2.0] {
                let point = EvalPoint {
                    x,
                    theta,
                    p: 0.5,
                    target,
                };
                let est = estimate_coefficient_with(
                    CoefficientKind::B1,
                    &point,
                    1_000_000,
                    1_000_000,
                    7,
                    Estimator::ControlVariate,
                )
                .unwrap();
                let s = target.score(x).unwrap();
                assert_eq!(
                    est.estimate.signum(),
                    s.signum(),
                    "{kind} x={x} theta={theta}: {est:?}"
                );
            }
        }
    }
}

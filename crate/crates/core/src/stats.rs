//! Goodness-of-fit and mixing diagnostics.

use crate::target::TargetModel;
use crate::{Error, Result};

/// How `sqrt(m) * D` is formed before entering the Kolmogorov series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KsCorrection {
    /// `lambda = sqrt(m) * D`.
    #[default]
    None,
    /// `lambda = (sqrt(m) + 0.12 + 0.11 / sqrt(m)) * D`.
    Stephens,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub d: f64,
    pub p_value: f64,
    pub esjd: f64,
    pub n_retained: usize,
}

/// One-sample KS distance between the empirical CDF of `sample` and the
/// target CDF.
pub fn ks_statistic(sample: &[f64], target: &TargetModel) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = target.cdf(x);
            let above = (i + 1) as f64 / m - f;
            let below = f - i as f64 / m;
            above.max(below)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Asymptotic p-value `P(K > lambda)` of the Kolmogorov distribution.
pub fn ks_pvalue(d: f64, m: usize) -> f64 {
    ks_pvalue_with(d, m, KsCorrection::None)
}

pub fn ks_pvalue_with(d: f64, m: usize, correction: KsCorrection) -> f64 {
    let sm = (m as f64).sqrt();
    let lambda = match correction {
        KsCorrection::None => sm * d,
        KsCorrection::Stephens => (sm + 0.12 + 0.11 / sm) * d,
    };
    kolmogorov_survival(lambda)
}

/// `2 * sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`, truncated once a term
/// falls below 1e-12. Below `lambda = 0.1` the true value is 1 to within
/// `1e-50`, and the series does not converge at 0.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda >= 0.1) {
        return 1.0;
    }
    let a = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 1.0f64;
    loop {
        let term = (a * k * k).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Mean squared consecutive difference over indices `burn_in + 1 ..= n`,
/// where `chain = [X_0, ..., X_n]`.
pub fn esjd(chain: &[f64], burn_in: usize) -> Result<f64> {
    if chain.len() < 2 || burn_in > chain.len() - 2 {
        return Err(Error::ChainTooShort {
            len: chain.len(),
            burn_in,
        });
    }
    let jumps = &chain[burn_in..];
    let total: f64 = jumps.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(total / (jumps.len() - 1) as f64)
}

/// KS and ESJD for a path `[X_0, ..., X_n]` after discarding `burn_in`
/// samples. KS uses `X_{burn_in+1} ..= X_n`.
pub fn summarize(
    path: &[f64],
    burn_in: usize,
    target: &TargetModel,
    correction: KsCorrection,
) -> Result<RunSummary> {
    let e = esjd(path, burn_in)?;
    let retained = &path[burn_in + 1..];
    let d = ks_statistic(retained, target)?;
    Ok(RunSummary {
        d,
        p_value: ks_pvalue_with(d, retained.len(), correction),
        esjd: e,
        n_retained: retained.len(),
    })
}

/// Human-readable p-value, floored at the usual `<2.2e-16` display.
pub fn format_pvalue(p: f64) -> String {
    if p < 1e-16 {
        "<2.2e-16".to_string()
    } else if p < 1e-3 {
        format!("{p:.3e}")
    } else {
        format!("{p:.5}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{make_target, TargetKind};

    #[test]
    fn ks_small_cases() {
        let normal = make_target(TargetKind::Normal01);
        assert_eq!(ks_statistic(&[0.0], &normal).unwrap(), 0.5);
        let d = ks_statistic(&[-1.0, 0.0, 1.0], &normal).unwrap();
        // 1/3 - Phi(-1) computed by hand from the ECDF steps
        assert!((d - 0.174_678_0).abs() < 1e-6, "{d}");
        assert!(matches!(
            ks_statistic(&[], &normal),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn ks_on_quantile_grid() {
        // x_i = F^{-1}((i - 0.5) / m) for Exp1
        let exp = make_target(TargetKind::Exp1);
        let m = 40;
        let xs: Vec<f64> = (1..=m)
            .map(|i| -(1.0 - (i as f64 - 0.5) / m as f64).ln())
            .collect();
        let d = ks_statistic(&xs, &exp).unwrap();
        assert!((d - 0.5 / m as f64).abs() < 1e-12);
    }

    #[test]
    fn pvalue_values() {
        assert_eq!(ks_pvalue(0.0, 100), 1.0);
        let p = ks_pvalue(0.0153, 9000);
        assert!((p - 0.02883).abs() < 0.005, "{p}");
        assert!((p - 0.029_56).abs() < 1e-4, "{p}");
        assert!(ks_pvalue(0.1369, 9000) < 1e-100);
        assert_eq!(format_pvalue(ks_pvalue(0.1369, 9000)), "<2.2e-16");
        // Stephens correction raises lambda, so lowers p
        assert!(ks_pvalue_with(0.0153, 9000, KsCorrection::Stephens) < p);
    }

    #[test]
    fn pvalue_decreasing_in_d() {
        for m in [1000, 9000] {
            let ps: Vec<f64> = (1..=20).map(|i| ks_pvalue(0.01 * i as f64, m)).collect();
            for w in ps.windows(2) {
                assert!(w[1] < w[0] || w[0] == 0.0, "m={m}: {w:?}");
            }
        }
        // for small m the top of the grid rounds to 1.0 in double precision
        let ps: Vec<f64> = (1..=20).map(|i| ks_pvalue(0.01 * i as f64, 50)).collect();
        assert!(ps.windows(2).all(|w| w[1] <= w[0]));
        assert!(ps[19] < ps[5]);
    }

    #[test]
    fn esjd_cases() {
        assert_eq!(esjd(&[3.0; 10], 0).unwrap(), 0.0);
        assert_eq!(esjd(&[0.0, 1.0, 3.0], 0).unwrap(), 2.5);
        let alt: Vec<f64> = (0..101).map(|i| (i % 2) as f64).collect();
        assert_eq!(esjd(&alt, 7).unwrap(), 1.0);
        assert_eq!(esjd(&[0.0, 1.0, 3.0], 1).unwrap(), 4.0);
        assert!(esjd(&[0.0, 1.0, 3.0], 2).is_err());
        assert!(esjd(&[1.0], 0).is_err());
    }

    #[test]
    fn summary_counts() {
        let normal = make_target(TargetKind::Normal01);
        let path: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0 - 0.5).collect();
        let s = summarize(&path, 3, &normal, KsCorrection::None).unwrap();
        assert_eq!(s.n_retained, 7);
        assert!((s.esjd - 0.01).abs() < 1e-12);
        assert!(s.d > 0.0 && s.d <= 1.0);
        assert!((0.0..=1.0).contains(&s.p_value));
    }
}

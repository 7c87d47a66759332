//! One-dimensional target densities.
//!
//! Densities carry their exact normalising constants so the same model can
//! drive both the Metropolis-Hastings ratio and the Kolmogorov-Smirnov
//! reference CDF.

use std::f64::consts::{FRAC_1_PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;
// ln(2 * sqrt(2)), the normalising constant of Student-t with 2 d.o.f.
const LN_2_SQRT_2: f64 = 1.039_720_770_839_917_9;

/// `ln(1 + c x^2)` without overflowing `x^2` in the far tail.
#[inline]
fn ln_1p_sq(x: f64, c: f64) -> f64 {
    let a = x.abs();
    if a > 1e100 {
        2.0 * a.ln() + c.ln()
    } else {
        (c * x * x).ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetKind {
    Normal01,
    Cauchy01,
    StudentT2,
    Exp1,
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [
        TargetKind::Normal01,
        TargetKind::Cauchy01,
        TargetKind::StudentT2,
        TargetKind::Exp1,
    ];

    /// Name used on the command line and in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Normal01 => "normal",
            TargetKind::Cauchy01 => "cauchy",
            TargetKind::StudentT2 => "t2",
            TargetKind::Exp1 => "exp",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(TargetKind::Normal01),
            "cauchy" => Ok(TargetKind::Cauchy01),
            "t2" => Ok(TargetKind::StudentT2),
            "exp" => Ok(TargetKind::Exp1),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }
}

/// What a simulated path does when a step leaves the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Whole-line support, nothing to do.
    None,
    /// `X <- |X|`.
    ReflectAtZero,
    /// Keep the previous position when the step would cross zero.
    HoldAtZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetModel {
    kind: TargetKind,
    boundary: BoundaryPolicy,
}

pub fn make_target(kind: TargetKind) -> TargetModel {
    let boundary = match kind {
        TargetKind::Exp1 => BoundaryPolicy::ReflectAtZero,
        _ => BoundaryPolicy::None,
    };
    TargetModel { kind, boundary }
}

impl TargetModel {
    pub fn new(kind: TargetKind) -> Self {
        make_target(kind)
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn boundary_policy(&self) -> BoundaryPolicy {
        self.boundary
    }

    /// Switch the half-line boundary handling. Only meaningful for `Exp1`;
    /// whole-line targets accept nothing but `BoundaryPolicy::None`.
    pub fn with_boundary_policy(self, boundary: BoundaryPolicy) -> Result<Self> {
        let ok = match self.kind {
            TargetKind::Exp1 => boundary != BoundaryPolicy::None,
            _ => boundary == BoundaryPolicy::None,
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "boundary policy {boundary:?} does not apply to the {} target",
                self.kind
            )));
        }
        Ok(TargetModel { boundary, ..self })
    }

    /// Lower end of the support (`-inf` for whole-line targets).
    pub fn support_lower(&self) -> f64 {
        match self.kind {
            TargetKind::Exp1 => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    /// Closed support: `Exp1` has positive density at 0.
    pub fn in_support(&self, x: f64) -> bool {
        match self.kind {
            TargetKind::Exp1 => x >= 0.0,
            _ => x.is_finite(),
        }
    }

    /// Strict interior, where the score is defined.
    pub fn in_interior(&self, x: f64) -> bool {
        match self.kind {
            TargetKind::Exp1 => x > 0.0 && x.is_finite(),
            _ => x.is_finite(),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        self.log_density_unchecked(x).exp()
    }

    /// Natural log of the density; `-inf` outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        self.log_density_unchecked(x)
    }

    #[inline]
    pub(crate) fn log_density_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            TargetKind::Normal01 => -0.5 * x * x - LN_SQRT_2PI,
            TargetKind::Cauchy01 => -LN_PI - ln_1p_sq(x, 1.0),
            TargetKind::StudentT2 => -LN_2_SQRT_2 - 1.5 * ln_1p_sq(x, 0.5),
            TargetKind::Exp1 => -x,
        }
    }

    /// `psi'(x) / psi(x)`. Errors at or beyond the support boundary.
    pub fn score(&self, x: f64) -> Result<f64> {
        if !self.in_interior(x) {
            return Err(self.outside(x));
        }
        Ok(self.score_unchecked(x))
    }

    /// Closed-form score. For `Exp1` this is the constant `-1`, which is also
    /// the one-sided value at the boundary.
    #[inline]
    pub(crate) fn score_unchecked(&self, x: f64) -> f64 {
        match self.kind {
            TargetKind::Normal01 => -x,
            TargetKind::Cauchy01 => -2.0 * x / (1.0 + x * x),
            TargetKind::StudentT2 => -3.0 * x / (2.0 + x * x),
            TargetKind::Exp1 => -1.0,
        }
    }

    /// `psi(y) / psi(x)` evaluated in log space.
    pub fn density_ratio(&self, x: f64, y: f64) -> Result<f64> {
        if !self.in_support(x) {
            return Err(self.outside(x));
        }
        Ok(self.density_ratio_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn density_ratio_unchecked(&self, x: f64, y: f64) -> f64 {
        if !self.in_support(y) {
            return 0.0;
        }
        match self.kind {
            // The normalising constant cancels; skip it to save a rounding.
            TargetKind::Normal01 => (0.5 * (x - y) * (x + y)).exp(),
            _ => (self.log_density_unchecked(y) - self.log_density_unchecked(x)).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.kind {
            TargetKind::Normal01 => 0.5 * libm::erfc(-x / SQRT_2),
            TargetKind::Cauchy01 => 0.5 + x.atan() * FRAC_1_PI,
            TargetKind::StudentT2 => {
                if x.is_infinite() {
                    return if x > 0.0 { 1.0 } else { 0.0 };
                }
                0.5 + x / (2.0 * (2.0 + x * x).sqrt())
            }
            TargetKind::Exp1 => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
        }
    }

    fn outside(&self, x: f64) -> Error {
        Error::OutsideSupport {
            target: self.kind.as_str(),
            x,
        }
    }
}

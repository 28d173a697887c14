//! Risk attitudes induced by growth: a lottery over consumption is compared
//! with its mean after mapping consumption to a heritable birth rate.

use serde::Serialize;
use thiserror::Error;

use crate::lottery::{Lottery, LotteryError};
use crate::scalar::Real;
use crate::solver::{solve_x_star, SolverError};

/// Lower end of the exponent search.
pub const BETA_FLOOR: f64 = 1e-6;
pub const THRESHOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("beta must lie in (0, 1], got {0}")]
    InvalidBeta(f64),
    #[error("consumption levels must be strictly positive")]
    NonPositiveConsumption,
    #[error(transparent)]
    Lottery(#[from] LotteryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Maps consumption to a birth rate.
pub trait FertilityMap<T> {
    fn fertility(&self, consumption: T) -> T;
}

/// `psi(c) = c^beta` with `beta` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerUtility<T> {
    beta: T,
}

impl<T: Real> PowerUtility<T> {
    pub fn new(beta: T) -> Result<Self, RiskError> {
        if !(beta > T::zero() && beta <= T::one()) {
            return Err(RiskError::InvalidBeta(beta.to_f64_lossy()));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> T {
        self.beta
    }
}

impl<T: Real> FertilityMap<T> for PowerUtility<T> {
    fn fertility(&self, c: T) -> T {
        c.powf(self.beta)
    }
}

/// Wraps an arbitrary scalar map, e.g. another concave family.
pub struct ScalarMap<F>(pub F);

impl<T, F: Fn(T) -> T> FertilityMap<T> for ScalarMap<F> {
    fn fertility(&self, c: T) -> T {
        (self.0)(c)
    }
}

/// Lottery over strictly positive consumption levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionLottery<T> {
    lottery: Lottery<T>,
}

impl<T: Real> ConsumptionLottery<T> {
    pub fn new(lottery: Lottery<T>) -> Result<Self, RiskError> {
        if lottery.min_rate() <= T::zero() {
            return Err(RiskError::NonPositiveConsumption);
        }
        Ok(Self { lottery })
    }

    pub fn lottery(&self) -> &Lottery<T> {
        &self.lottery
    }

    /// Mean consumption.
    pub fn mean(&self) -> T {
        self.lottery.mean()
    }

    /// Largest consumption level.
    pub fn max(&self) -> T {
        self.lottery.max_rate()
    }
}

/// Growth rate of a population whose heritable birth rate is `psi(c)` for
/// consumption drawn from the lottery. Atoms that `psi` maps to the same
/// birth rate are merged before solving.
pub fn growth_under_utility<T: Real, M: FertilityMap<T>>(
    consumption: &ConsumptionLottery<T>,
    psi: &M,
    lambda_x: T,
) -> Result<T, RiskError> {
    let fertility = consumption.lottery.map_support(|c| psi.fertility(c))?;
    Ok(solve_x_star(&fertility, lambda_x)?.x_star)
}

/// Strictly prefers the lottery to receiving its mean for sure.
pub fn prefers_lottery<T: Real, M: FertilityMap<T>>(
    consumption: &ConsumptionLottery<T>,
    psi: &M,
    lambda_x: T,
) -> Result<bool, RiskError> {
    let lottery_growth = growth_under_utility(consumption, psi, lambda_x)?;
    Ok(lottery_growth > psi.fertility(consumption.mean()))
}

fn preference_gap<T: Real>(
    consumption: &ConsumptionLottery<T>,
    beta: T,
    lambda_x: T,
) -> Result<T, RiskError> {
    let psi = PowerUtility::new(beta)?;
    Ok(growth_under_utility(consumption, &psi, lambda_x)? - psi.fertility(consumption.mean()))
}

/// Exponent at which the preference between the lottery and its mean flips,
/// searched on `[BETA_FLOOR, 1]`. `None` when the preference does not go from
/// "mean" at the floor to "lottery" at one.
pub fn beta_threshold<T: Real>(
    consumption: &ConsumptionLottery<T>,
    lambda_x: T,
) -> Result<Option<T>, RiskError> {
    if consumption.lottery.is_degenerate() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (T::lit(BETA_FLOOR), T::one());
    let gap_lo = preference_gap(consumption, lo, lambda_x)?;
    let gap_hi = preference_gap(consumption, hi, lambda_x)?;
    if !(gap_lo < T::zero() && gap_hi > T::zero()) {
        return Ok(None);
    }
    let tol = T::lit(THRESHOLD_TOL);
    let mut best = (hi, gap_hi);
    for _ in 0..200 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let gap = preference_gap(consumption, mid, lambda_x)?;
        if gap.abs() < best.1.abs() {
            best = (mid, gap);
        }
        if gap == T::zero() || (gap.abs() <= tol && hi - lo <= tol) {
            break;
        }
        if gap < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(best.0))
}

/// Skewness condition `psi(m) - lambda > psi(mean)`: the top outcome alone
/// guarantees the lottery out-grows its mean.
pub fn skewness_sufficient_condition<T: Real, M: FertilityMap<T>>(
    consumption: &ConsumptionLottery<T>,
    psi: &M,
    lambda_x: T,
) -> bool {
    psi.fertility(consumption.max()) - lambda_x > psi.fertility(consumption.mean())
}

/// JSON record emitted by the `risk` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct RiskReport<T> {
    pub beta: T,
    pub lottery_growth: T,
    pub mean_growth: T,
    pub prefers_lottery: bool,
    pub skewness_sufficient: bool,
    pub beta_threshold: Option<T>,
}

pub fn risk_report<T: Real>(
    consumption: &ConsumptionLottery<T>,
    beta: T,
    lambda_x: T,
) -> Result<RiskReport<T>, RiskError> {
    let psi = PowerUtility::new(beta)?;
    let lottery_growth = growth_under_utility(consumption, &psi, lambda_x)?;
    let mean_growth = psi.fertility(consumption.mean());
    Ok(RiskReport {
        beta,
        lottery_growth,
        mean_growth,
        prefers_lottery: lottery_growth > mean_growth,
        skewness_sufficient: skewness_sufficient_condition(consumption, &psi, lambda_x),
        beta_threshold: beta_threshold(consumption, lambda_x)?,
    })
}

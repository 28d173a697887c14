//! Heritable growth component: the fixed point `x*`, the steady-state
//! composition `p*`, closed forms for binary lotteries and the benchmark
//! with synchronous deterministic redraws.
//!
//! The fixed point solves
//!
//! ```text
//! x = lambda * sum_k q_k x_k / (lambda + x - x_k)
//! ```
//!
//! on `(max(mu, x_n - lambda), x_n)`. Writing `gap = lambda + x - x_n`, every
//! denominator is `gap + (x_n - x_k)`, a sum of nonnegative terms. For
//! `lambda <= x_n` the bisection runs on `gap` with `x = (x_n - lambda) + gap`;
//! for larger `lambda` it runs on `x` with `gap = (lambda - x_n) + x`.

use serde::Serialize;
use thiserror::Error;

use crate::lottery::{GrowthProcess, Lottery};
use crate::scalar::Real;

pub const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("redraw rate must be strictly positive and finite")]
    NonPositiveLambda,
    #[error("fixed point is not bracketed (internal invariant violated)")]
    NoBracket,
    #[error("binary lottery needs 0 <= x_low < x_high")]
    InvalidOrdering,
    #[error("probability must lie strictly inside (0, 1)")]
    InvalidProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct SteadyState<T> {
    pub x_star: T,
    pub p_star: Vec<T>,
    /// `|x* - RHS(x*)|` evaluated at the returned point.
    pub residual: T,
}

/// Solver output bundled with the equivalent growth rate, in the JSON layout
/// `{"x_star", "p_star", "residual", "g"}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct SolveReport<T> {
    pub x_star: T,
    pub p_star: Vec<T>,
    pub residual: T,
    pub g: T,
}

impl<T: Real> SolveReport<T> {
    pub fn new(state: SteadyState<T>, g: T) -> Self {
        Self {
            x_star: state.x_star,
            p_star: state.p_star,
            residual: state.residual,
            g,
        }
    }
}

/// Residual tolerance for a given top rate.
pub fn tolerance<T: Real>(x_top: T) -> T {
    T::solver_tol() * x_top.max(T::one())
}

struct FixedPoint<'a, T> {
    support: &'a [T],
    probs: &'a [T],
    lambda: T,
    x_top: T,
}

impl<T: Real> FixedPoint<'_, T> {
    /// `x - RHS(x)` given both representations of the iterate. Increasing in
    /// the iterate on the admissible domain.
    fn residual(&self, x: T, gap: T) -> T {
        let rhs: T = self
            .support
            .iter()
            .zip(self.probs)
            .map(|(&xk, &qk)| qk * xk / (gap + (self.x_top - xk)))
            .sum();
        x - self.lambda * rhs
    }

    fn shares(&self, gap: T) -> Vec<T> {
        self.support
            .iter()
            .zip(self.probs)
            .map(|(&xk, &qk)| self.lambda * qk / (gap + (self.x_top - xk)))
            .collect()
    }
}

/// Solves for `x*` and `p*` by bracketed bisection, run until the bracket
/// cannot be split further in `T`.
pub fn solve_x_star<T: Real>(
    heritable: &Lottery<T>,
    lambda_x: T,
) -> Result<SteadyState<T>, SolverError> {
    if !(lambda_x > T::zero()) || !lambda_x.is_finite() {
        return Err(SolverError::NonPositiveLambda);
    }
    if heritable.is_degenerate() {
        return Ok(SteadyState {
            x_star: heritable.support()[0],
            p_star: vec![T::one()],
            residual: T::zero(),
        });
    }

    let fp = FixedPoint {
        support: heritable.support(),
        probs: heritable.probs(),
        lambda: lambda_x,
        x_top: heritable.max_rate(),
    };
    let mu = heritable.mean();

    // Map the bisection variable to (x, gap).
    let on_gap = lambda_x <= fp.x_top;
    let split = |u: T| -> (T, T) {
        if on_gap {
            ((fp.x_top - lambda_x) + u, u)
        } else {
            (u, (lambda_x - fp.x_top) + u)
        }
    };
    let (mut lo, mut hi) = if on_gap {
        // gap in (max(0, lambda + mu - x_n), lambda)
        ((lambda_x + mu - fp.x_top).max(T::zero()), lambda_x)
    } else {
        (mu, fp.x_top)
    };
    if !(lo < hi) {
        return Err(SolverError::NoBracket);
    }

    let mut best = None;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let (x, gap) = split(mid);
        let r = fp.residual(x, gap);
        if best.is_none_or(|(_, br): (T, T)| r.abs() < br.abs()) {
            best = Some((mid, r));
        }
        if r == T::zero() {
            break;
        }
        if r < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (u, r) = best.ok_or(SolverError::NoBracket)?;
    let (x_star, gap) = split(u);
    Ok(SteadyState {
        x_star,
        p_star: fp.shares(gap),
        residual: r.abs(),
    })
}

/// `residual` of the fixed-point equation at an arbitrary `x`, evaluated in
/// the straightforward way. Useful when checking states produced elsewhere.
pub fn fixed_point_residual<T: Real>(heritable: &Lottery<T>, lambda_x: T, x: T) -> T {
    let rhs: T = heritable
        .support()
        .iter()
        .zip(heritable.probs())
        .map(|(&xk, &qk)| qk * xk / (lambda_x + x - xk))
        .sum();
    (x - lambda_x * rhs).abs()
}

/// Long-run growth rate `x* + mu_y + mu_z - delta`.
pub fn equivalent_growth_rate<T: Real>(process: &GrowthProcess<T>) -> Result<T, SolverError> {
    let h = process.heritable();
    let state = solve_x_star(&h.lottery, h.lambda)?;
    Ok(state.x_star + process.common_birth_rate() - process.delta())
}

/// Growth rate predicted by treating heritable risk as aggregate: `mu - delta`.
pub fn naive_aggregate_rate<T: Real>(heritable: &Lottery<T>, delta: T) -> T {
    heritable.mean() - delta
}

/// Explicit steady state for a two-point heritable lottery.
pub fn binary_closed_form<T: Real>(
    x_low: T,
    x_high: T,
    q_high: T,
    lambda_x: T,
) -> Result<SteadyState<T>, SolverError> {
    if !(x_low >= T::zero() && x_low < x_high) || !x_high.is_finite() {
        return Err(SolverError::InvalidOrdering);
    }
    if !(q_high > T::zero() && q_high < T::one()) {
        return Err(SolverError::InvalidProbability);
    }
    if !(lambda_x > T::zero()) || !lambda_x.is_finite() {
        return Err(SolverError::NonPositiveLambda);
    }
    let two = T::lit(2.0);
    let spread = x_high - x_low;
    let b = spread - lambda_x;
    let root = (b * b + T::lit(4.0) * q_high * spread * lambda_x).sqrt();
    // positive root of spread p^2 + (lambda - spread) p - q lambda = 0,
    // in rationalized form when b < 0
    let p_high = if b >= T::zero() {
        (b + root) / (two * spread)
    } else {
        two * q_high * lambda_x / (root - b)
    };
    let mu = (T::one() - q_high) * x_low + q_high * x_high;
    let x_star = mu + (p_high - q_high) * spread;
    let heritable = Lottery::new(vec![x_low, x_high], vec![T::one() - q_high, q_high])
        .map_err(|_| SolverError::InvalidProbability)?;
    Ok(SteadyState {
        x_star,
        p_star: vec![T::one() - p_high, p_high],
        residual: fixed_point_residual(&heritable, lambda_x, x_star),
    })
}

/// Growth rate when every agent redraws at the same deterministic instants,
/// every `1 / lambda` years: `lambda * ln(q_l e^{r_l / lambda} + q_h e^{r_h / lambda})`.
/// Evaluated as a shifted log-sum-exp.
pub fn synchronous_growth_rate<T: Real>(r_low: T, r_high: T, q_low: T, lambda: T) -> T {
    let tau = T::one() / lambda;
    let q_high = T::one() - q_low;
    let top = r_low.max(r_high);
    let s = q_low * ((r_low - top) * tau).exp() + q_high * ((r_high - top) * tau).exp();
    top + s.ln() / tau
}

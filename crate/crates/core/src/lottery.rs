//! Finite lotteries over nonnegative rates and the growth process built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LotteryError {
    #[error("lottery has no atoms")]
    Empty,
    #[error("support has {support} entries but probs has {probs}")]
    LengthMismatch { support: usize, probs: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("support is not strictly increasing at index {index}")]
    NonIncreasingSupport { index: usize },
    #[error("negative rate {value} at index {index}")]
    NegativeRate { index: usize, value: f64 },
    #[error("probability {value} at index {index} is not strictly positive")]
    NonPositiveProb { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    ProbSumMismatch { sum: f64 },
    #[error("spread is infeasible: {0}")]
    InfeasibleSpread(&'static str),
    #[error("distributions are defined on different supports")]
    SupportMismatch,
    #[error("cannot parse lottery: {0}")]
    Parse(String),
}

/// A finite distribution over per-year rates.
///
/// The support is strictly increasing and nonnegative, every atom carries
/// strictly positive mass and the masses sum to one. Values of this type are
/// only ever constructed validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawLottery<T>",
    bound(serialize = "T: Real", deserialize = "T: Real")
)]
pub struct Lottery<T> {
    support: Vec<T>,
    probs: Vec<T>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Real")]
struct RawLottery<T> {
    support: Vec<T>,
    probs: Vec<T>,
}

impl<T: Real> TryFrom<RawLottery<T>> for Lottery<T> {
    type Error = LotteryError;

    fn try_from(raw: RawLottery<T>) -> Result<Self, Self::Error> {
        Lottery::new(raw.support, raw.probs)
    }
}

/// Checks the lottery invariants on raw vectors.
pub fn validate<T: Real>(support: &[T], probs: &[T]) -> Result<(), LotteryError> {
    if support.is_empty() {
        return Err(LotteryError::Empty);
    }
    if support.len() != probs.len() {
        return Err(LotteryError::LengthMismatch {
            support: support.len(),
            probs: probs.len(),
        });
    }
    for (index, (&x, &p)) in support.iter().zip(probs).enumerate() {
        if !x.is_finite() || !p.is_finite() {
            return Err(LotteryError::NonFinite { index });
        }
    }
    for index in 1..support.len() {
        if support[index] <= support[index - 1] {
            return Err(LotteryError::NonIncreasingSupport { index });
        }
    }
    for (index, &x) in support.iter().enumerate() {
        if x < T::zero() {
            return Err(LotteryError::NegativeRate {
                index,
                value: x.to_f64_lossy(),
            });
        }
    }
    for (index, &p) in probs.iter().enumerate() {
        if p <= T::zero() {
            return Err(LotteryError::NonPositiveProb {
                index,
                value: p.to_f64_lossy(),
            });
        }
    }
    let sum: T = probs.iter().copied().sum();
    if (sum - T::one()).abs() > T::prob_sum_tol() {
        return Err(LotteryError::ProbSumMismatch {
            sum: sum.to_f64_lossy(),
        });
    }
    Ok(())
}

impl<T: Real> Lottery<T> {
    pub fn new(support: Vec<T>, probs: Vec<T>) -> Result<Self, LotteryError> {
        validate(&support, &probs)?;
        Ok(Self { support, probs })
    }

    /// Builds a lottery after dividing the weights by their sum. This is the
    /// only place where normalization happens.
    pub fn normalized(support: Vec<T>, weights: Vec<T>) -> Result<Self, LotteryError> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(LotteryError::ProbSumMismatch {
                sum: total.to_f64_lossy(),
            });
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(support, probs)
    }

    /// Single-point lottery.
    pub fn degenerate(rate: T) -> Result<Self, LotteryError> {
        Self::new(vec![rate], vec![T::one()])
    }

    /// Two-point lottery `{low, high}` with mass `q_high` on `high`.
    pub fn binary(low: T, high: T, q_high: T) -> Result<Self, LotteryError> {
        Self::new(vec![low, high], vec![T::one() - q_high, q_high])
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.support.len() == 1
    }

    /// Largest rate in the support.
    pub fn max_rate(&self) -> T {
        self.support[self.support.len() - 1]
    }

    pub fn min_rate(&self) -> T {
        self.support[0]
    }

    pub fn mean(&self) -> T {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&x, &p)| x * p)
            .sum()
    }

    pub fn variance(&self) -> T {
        let m = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(&x, &p)| p * (x - m) * (x - m))
            .sum()
    }

    /// Applies `f` to every atom, merging atoms that collide and re-sorting.
    /// Used for consumption-to-fertility maps, which need not be injective
    /// in floating point.
    pub fn map_support<F: Fn(T) -> T>(&self, f: F) -> Result<Self, LotteryError> {
        let mut pairs: Vec<(T, T)> = self
            .support
            .iter()
            .zip(&self.probs)
            .map(|(&x, &p)| (f(x), p))
            .collect();
        if pairs.iter().any(|(x, _)| !x.is_finite()) {
            return Err(LotteryError::NonFinite { index: 0 });
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
        let mut support: Vec<T> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<T> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            match support.last() {
                Some(&last) if last == x => *probs.last_mut().expect("paired") += p,
                _ => {
                    support.push(x);
                    probs.push(p);
                }
            }
        }
        Self::new(support, probs)
    }

    /// Pulls atoms `index` and `index + 1` apart while keeping the mean.
    ///
    /// The lower atom moves down by `widen / q_index` and the upper atom up
    /// by `widen / q_{index+1}`, so the probability-weighted displacement
    /// cancels. Ordering and nonnegativity must survive the move.
    pub fn mean_preserving_spread(&self, index: usize, widen: T) -> Result<Self, LotteryError> {
        if index + 1 >= self.len() {
            return Err(LotteryError::InfeasibleSpread(
                "index has no upper neighbour",
            ));
        }
        if !(widen > T::zero()) || !widen.is_finite() {
            return Err(LotteryError::InfeasibleSpread("widen must be positive"));
        }
        let mut support = self.support.clone();
        let lo = support[index] - widen / self.probs[index];
        let hi = support[index + 1] + widen / self.probs[index + 1];
        if lo < T::zero() {
            return Err(LotteryError::InfeasibleSpread(
                "lower atom would become negative",
            ));
        }
        if index > 0 && lo <= support[index - 1] {
            return Err(LotteryError::InfeasibleSpread(
                "lower atom would pass its neighbour",
            ));
        }
        if index + 2 < support.len() && hi >= support[index + 2] {
            return Err(LotteryError::InfeasibleSpread(
                "upper atom would pass its neighbour",
            ));
        }
        support[index] = lo;
        support[index + 1] = hi;
        Self::new(support, self.probs.clone())
    }

    /// Moves a fraction of the mass at interior atom `index` onto its two
    /// neighbours, weighted so that the mean is unchanged.
    pub fn split_spread(&self, index: usize, fraction: T) -> Result<Self, LotteryError> {
        if index == 0 || index + 1 >= self.len() {
            return Err(LotteryError::InfeasibleSpread(
                "split needs an interior atom",
            ));
        }
        if !(fraction > T::zero() && fraction < T::one()) {
            return Err(LotteryError::InfeasibleSpread(
                "fraction must lie in (0, 1)",
            ));
        }
        let (below, at, above) = (
            self.support[index - 1],
            self.support[index],
            self.support[index + 1],
        );
        let moved = self.probs[index] * fraction;
        let to_below = moved * (above - at) / (above - below);
        let to_above = moved - to_below;
        let mut probs = self.probs.clone();
        probs[index - 1] += to_below;
        probs[index + 1] += to_above;
        probs[index] -= moved;
        Self::new(self.support.clone(), probs)
    }

    /// First-order stochastic dominance of `self` over `other` on a shared support.
    pub fn fosd_dominates(&self, other: &Self) -> Result<bool, LotteryError> {
        if self.support != other.support {
            return Err(LotteryError::SupportMismatch);
        }
        fosd_dominates(&self.probs, &other.probs)
    }
}

/// True iff the cumulative distribution of `p` lies weakly below that of `q`
/// everywhere and strictly below somewhere. Both vectors are laid out over
/// the same increasing support.
pub fn fosd_dominates<T: Real>(p: &[T], q: &[T]) -> Result<bool, LotteryError> {
    if p.len() != q.len() {
        return Err(LotteryError::SupportMismatch);
    }
    let slack = T::epsilon() * T::lit(8.0);
    let (mut cp, mut cq) = (T::zero(), T::zero());
    let mut strict = false;
    // The last cumulative value is one for both, so it carries no information.
    for k in 0..p.len().saturating_sub(1) {
        cp += p[k];
        cq += q[k];
        if cp > cq + slack {
            return Ok(false);
        }
        if cp < cq - slack {
            strict = true;
        }
    }
    Ok(strict)
}

impl<T: Real> fmt::Display for Lottery<T> {
    /// Writes the `support=... probs=...` literal form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[T]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "support={} probs={}",
            join(&self.support),
            join(&self.probs)
        )
    }
}

/// Parses a comma-separated list of reals.
pub fn parse_list<T: Real>(s: &str) -> Result<Vec<T>, LotteryError> {
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| LotteryError::Parse(format!("not a number: {tok:?}")))
        })
        .collect()
}

impl<T: Real> FromStr for Lottery<T> {
    type Err = LotteryError;

    /// Accepts either `support=0,0.02 probs=0.5,0.5` or the JSON object
    /// `{"support":[...],"probs":[...]}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str::<Lottery<T>>(s)
                .map_err(|e| LotteryError::Parse(e.to_string()));
        }
        let (mut support, mut probs) = (None, None);
        for field in s.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| LotteryError::Parse(format!("expected key=value, got {field:?}")))?;
            match key {
                "support" => support = Some(parse_list(value)?),
                "probs" => probs = Some(parse_list(value)?),
                other => return Err(LotteryError::Parse(format!("unknown key {other:?}"))),
            }
        }
        match (support, probs) {
            (Some(support), Some(probs)) => Lottery::new(support, probs),
            _ => Err(LotteryError::Parse("need both support= and probs=".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProcessError {
    #[error("heritable lottery needs at least two atoms")]
    DegenerateHeritable,
    #[error("{component} redraw rate must be strictly positive")]
    NonPositiveLambda { component: &'static str },
    #[error("death rate must be finite and nonnegative")]
    InvalidDelta,
}

/// One risk component: the lottery redrawn from and the redraw intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct RiskComponent<T> {
    pub lottery: Lottery<T>,
    pub lambda: T,
}

impl<T: Real> RiskComponent<T> {
    pub fn new(lottery: Lottery<T>, lambda: T) -> Self {
        Self { lottery, lambda }
    }

    /// A component that contributes nothing: degenerate at zero.
    pub fn zero() -> Self {
        Self {
            lottery: Lottery::degenerate(T::zero()).expect("zero is a valid rate"),
            lambda: T::one(),
        }
    }
}

/// Death rate plus the heritable, idiosyncratic and aggregate birth components.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct GrowthProcess<T> {
    delta: T,
    heritable: RiskComponent<T>,
    idiosyncratic: RiskComponent<T>,
    aggregate: RiskComponent<T>,
}

impl<T: Real> GrowthProcess<T> {
    pub fn new(
        delta: T,
        heritable: RiskComponent<T>,
        idiosyncratic: RiskComponent<T>,
        aggregate: RiskComponent<T>,
    ) -> Result<Self, ProcessError> {
        if !delta.is_finite() || delta < T::zero() {
            return Err(ProcessError::InvalidDelta);
        }
        if heritable.lottery.len() < 2 {
            return Err(ProcessError::DegenerateHeritable);
        }
        for (component, c) in [
            ("heritable", &heritable),
            ("idiosyncratic", &idiosyncratic),
            ("aggregate", &aggregate),
        ] {
            if !(c.lambda > T::zero()) || !c.lambda.is_finite() {
                return Err(ProcessError::NonPositiveLambda { component });
            }
        }
        Ok(Self {
            delta,
            heritable,
            idiosyncratic,
            aggregate,
        })
    }

    /// Purely heritable process with death rate `delta`.
    pub fn heritable_only(
        heritable: Lottery<T>,
        lambda_x: T,
        delta: T,
    ) -> Result<Self, ProcessError> {
        Self::new(
            delta,
            RiskComponent::new(heritable, lambda_x),
            RiskComponent::zero(),
            RiskComponent::zero(),
        )
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn heritable(&self) -> &RiskComponent<T> {
        &self.heritable
    }

    pub fn idiosyncratic(&self) -> &RiskComponent<T> {
        &self.idiosyncratic
    }

    pub fn aggregate(&self) -> &RiskComponent<T> {
        &self.aggregate
    }

    /// Birth-rate shift common to every heritable class: `mu_y + mu_z`.
    pub fn common_birth_rate(&self) -> T {
        self.idiosyncratic.lottery.mean() + self.aggregate.lottery.mean()
    }
}

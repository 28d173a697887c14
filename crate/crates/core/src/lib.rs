//! Long-run population growth under heritable, idiosyncratic and aggregate
//! fertility risk.
//!
//! The analytic modules are generic over [`Real`] (`f64` and `f32`); the
//! aliases below fix the scalar to `f64`, which is what the CLI and the
//! simulator use.
//!
//! ```
//! use hgrowth::{solve_x_star, Lottery};
//!
//! let heritable = Lottery::binary(0.0, 0.02, 0.5).unwrap();
//! let state = solve_x_star(&heritable, 0.02).unwrap();
//! assert!((state.x_star - 0.0141421356).abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod dynamics;
pub mod lottery;
pub mod output;
pub mod popsim;
pub mod risk;
pub mod scalar;
pub mod solver;

pub use dynamics::{
    integrate_dynasty_mass, integrate_mass_dynamics, integrate_share_dynamics,
    type_competition_share, DynamicsError,
};
pub use lottery::{fosd_dominates, LotteryError, ProcessError};
pub use popsim::{ratio_sweep, run, run_batch, SimConfig, SimError, SimTrace, Termination};
pub use risk::{
    beta_threshold, growth_under_utility, prefers_lottery, skewness_sufficient_condition,
    FertilityMap, RiskError,
};
pub use scalar::Real;
pub use solver::{
    binary_closed_form, equivalent_growth_rate, naive_aggregate_rate, solve_x_star,
    synchronous_growth_rate, SolverError,
};

pub type Lottery = lottery::Lottery<f64>;
pub type LotteryF32 = lottery::Lottery<f32>;
pub type RiskComponent = lottery::RiskComponent<f64>;
pub type GrowthProcess = lottery::GrowthProcess<f64>;
pub type GrowthProcessF32 = lottery::GrowthProcess<f32>;
pub type SteadyState = solver::SteadyState<f64>;
pub type SteadyStateF32 = solver::SteadyState<f32>;
pub type SolveReport = solver::SolveReport<f64>;
pub type ShareTrajectory = dynamics::ShareTrajectory<f64>;
pub type MassTrajectory = dynamics::MassTrajectory<f64>;
pub type PowerUtility = risk::PowerUtility<f64>;
pub type ConsumptionLottery = risk::ConsumptionLottery<f64>;
pub type RiskReport = risk::RiskReport<f64>;

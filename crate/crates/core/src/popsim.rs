//! Finite-population dynasty simulator.
//!
//! One time step is one year. Each dynasty holds a count of exchangeable
//! agents and a current heritable birth probability, so every per-agent
//! Bernoulli event becomes a binomial draw per dynasty. Within a year the
//! events happen in a fixed order:
//!
//! 1. each dynasty redraws its rate with probability `lambda_r`, drawing
//!    `x_high` with probability `q_high`;
//! 2. each agent migrates with probability `lambda_m` to a uniformly chosen
//!    dynasty (possibly its own) and adopts that dynasty's rate;
//! 3. each agent gives birth with its dynasty's probability, the newborn
//!    joining the same dynasty;
//! 4. each agent alive before step 3 dies with probability `delta`.
//!
//! Newborns neither migrate nor die in the year they are born.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::output::format_real;

/// Identifier of the random stream, recorded in every manifest.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.9/seed_from_u64";

/// Migration-to-redraw ratios studied in the reference sweep.
pub const REFERENCE_RATIOS: [f64; 10] = [0.01, 0.02, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: u64,
    pub n_dynasties: usize,
    pub x_low: f64,
    pub x_high: f64,
    pub q_high: f64,
    pub lambda_m: f64,
    pub lambda_r: f64,
    pub delta: f64,
    pub max_years: u64,
    /// Stop once the population reaches `growth_cap * n_agents`.
    pub growth_cap: f64,
    /// Extinction once the population falls to `n_agents / extinction_floor_factor`.
    pub extinction_floor_factor: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    /// 3,000 agents in 300 dynasties, rates 0% / 2% with equal odds,
    /// 1% migration and 1% redraw, 1.4% mortality, at most 20,000 years,
    /// stopping at 1,000,000 or at 10 agents.
    fn default() -> Self {
        Self {
            n_agents: 3_000,
            n_dynasties: 300,
            x_low: 0.0,
            x_high: 0.02,
            q_high: 0.5,
            lambda_m: 0.01,
            lambda_r: 0.01,
            delta: 0.014,
            max_years: 20_000,
            growth_cap: 1_000_000.0 / 3_000.0,
            extinction_floor_factor: 300.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        for (name, p) in [
            ("x_low", self.x_low),
            ("x_high", self.x_high),
            ("q_high", self.q_high),
            ("lambda_m", self.lambda_m),
            ("lambda_r", self.lambda_r),
            ("delta", self.delta),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} = {p} is not a probability"
                )));
            }
        }
        if self.x_low > self.x_high {
            return bad("x_low must not exceed x_high");
        }
        if self.n_agents == 0 {
            return bad("n_agents must be at least 1");
        }
        if self.n_dynasties == 0 {
            return bad("n_dynasties must be at least 1");
        }
        if self.max_years == 0 {
            return bad("max_years must be at least 1");
        }
        if !(self.growth_cap > 1.0) || !self.growth_cap.is_finite() {
            return bad("growth_cap must be a finite factor above 1");
        }
        if !(self.extinction_floor_factor >= 1.0) || !self.extinction_floor_factor.is_finite() {
            return bad("extinction_floor_factor must be a finite factor of at least 1");
        }
        Ok(())
    }

    /// Population at or above which a run stops.
    pub fn cap_population(&self) -> u64 {
        (self.growth_cap * self.n_agents as f64 - 1e-6).ceil() as u64
    }

    /// Population at or below which a run counts as extinct.
    pub fn extinction_population(&self) -> u64 {
        (self.n_agents as f64 / self.extinction_floor_factor + 1e-6).floor() as u64
    }

    /// Splits `total` switching rate so that `lambda_m / lambda_r = ratio`.
    pub fn with_ratio(&self, ratio: f64, total: f64) -> Self {
        Self {
            lambda_m: ratio / (1.0 + ratio) * total,
            lambda_r: total / (1.0 + ratio),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    MaxYears,
    GrowthCap,
    Extinction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YearRecord {
    pub year: u64,
    pub population: u64,
    pub births: u64,
    pub deaths: u64,
    /// Dynasties with at least one living member.
    pub occupied: usize,
    pub high_share: f64,
    pub max_dynasty_share: f64,
    /// `ln(w(t) / w(0)) / t`.
    pub cum_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimTrace {
    pub config: SimConfig,
    pub rng: &'static str,
    pub initial_population: u64,
    pub records: Vec<YearRecord>,
    pub status: Termination,
}

impl SimTrace {
    pub fn last(&self) -> &YearRecord {
        self.records.last().expect("a run covers at least one year")
    }

    pub fn final_growth(&self) -> f64 {
        self.last().cum_growth
    }

    /// Mean of `high_share` over years in `[from, to]` that the run reached.
    pub fn mean_high_share(&self, from: u64, to: u64) -> Option<f64> {
        let vals: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.year >= from && r.year <= to)
            .map(|r| r.high_share)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Writes `year,population,high_share,max_dynasty_share,cum_growth`,
    /// keeping every `every`-th year plus the final one.
    pub fn write_csv<W: Write + ?Sized>(
        &self,
        out: &mut W,
        every: usize,
        precision: Option<usize>,
    ) -> io::Result<()> {
        let every = every.max(1) as u64;
        writeln!(
            out,
            "year,population,high_share,max_dynasty_share,cum_growth"
        )?;
        let last_year = self.last().year;
        for r in &self.records {
            if r.year % every != 0 && r.year != last_year {
                continue;
            }
            writeln!(
                out,
                "{},{},{},{},{}",
                r.year,
                r.population,
                format_real(r.high_share, precision),
                format_real(r.max_dynasty_share, precision),
                format_real(r.cum_growth, precision)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, every: usize, precision: Option<usize>) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, every, precision)
            .expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dynasty {
    high: bool,
    count: u64,
}

/// Per-dynasty rates and counts.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    dynasties: Vec<Dynasty>,
    population: u64,
}

impl PopulationState {
    fn initial(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut dynasties: Vec<Dynasty> = (0..cfg.n_dynasties)
            .map(|_| Dynasty {
                high: rng.random_bool(cfg.q_high),
                count: 0,
            })
            .collect();
        for _ in 0..cfg.n_agents {
            dynasties[rng.random_range(0..cfg.n_dynasties)].count += 1;
        }
        Self {
            dynasties,
            population: cfg.n_agents,
        }
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.dynasties.iter().map(|d| d.count)
    }

    pub fn high_count(&self) -> u64 {
        self.dynasties
            .iter()
            .filter(|d| d.high)
            .map(|d| d.count)
            .sum()
    }

    pub fn largest_dynasty(&self) -> u64 {
        self.counts().max().unwrap_or(0)
    }

    pub fn occupied(&self) -> usize {
        self.dynasties.iter().filter(|d| d.count > 0).count()
    }
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// Advances one year, returning `(births, deaths)`.
fn step_year(cfg: &SimConfig, state: &mut PopulationState, rng: &mut ChaCha8Rng) -> (u64, u64) {
    let ds = &mut state.dynasties;

    for d in ds.iter_mut() {
        if rng.random_bool(cfg.lambda_r) {
            d.high = rng.random_bool(cfg.q_high);
        }
    }

    if cfg.lambda_m > 0.0 {
        let mut movers = 0u64;
        for d in ds.iter_mut() {
            let m = binomial(rng, d.count, cfg.lambda_m);
            d.count -= m;
            movers += m;
        }
        let n = ds.len();
        if movers < n as u64 {
            for _ in 0..movers {
                ds[rng.random_range(0..n)].count += 1;
            }
        } else {
            // uniform multinomial as a chain of conditional binomials
            let mut left = movers;
            for (j, d) in ds.iter_mut().enumerate() {
                if left == 0 {
                    break;
                }
                let k = binomial(rng, left, 1.0 / (n - j) as f64);
                d.count += k;
                left -= k;
            }
        }
    }

    let (mut births, mut deaths) = (0u64, 0u64);
    for d in ds.iter_mut() {
        let rate = if d.high { cfg.x_high } else { cfg.x_low };
        let b = binomial(rng, d.count, rate);
        let k = binomial(rng, d.count, cfg.delta);
        d.count = d.count + b - k;
        births += b;
        deaths += k;
    }
    state.population = state.population + births - deaths;
    (births, deaths)
}

/// Runs one simulation until a stopping condition.
pub fn run(config: &SimConfig) -> Result<SimTrace, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = PopulationState::initial(config, &mut rng);
    let n0 = config.n_agents;
    let (cap, floor) = (config.cap_population(), config.extinction_population());
    let mut records = Vec::with_capacity(config.max_years.min(1 << 20) as usize);
    let mut status = Termination::MaxYears;

    for year in 1..=config.max_years {
        let (births, deaths) = step_year(config, &mut state, &mut rng);
        let pop = state.population();
        let (high_share, max_dynasty_share) = if pop > 0 {
            (
                state.high_count() as f64 / pop as f64,
                state.largest_dynasty() as f64 / pop as f64,
            )
        } else {
            (0.0, 0.0)
        };
        records.push(YearRecord {
            year,
            population: pop,
            births,
            deaths,
            occupied: state.occupied(),
            high_share,
            max_dynasty_share,
            cum_growth: (pop as f64 / n0 as f64).ln() / year as f64,
        });
        if pop <= floor {
            status = Termination::Extinction;
            break;
        }
        if pop >= cap {
            status = Termination::GrowthCap;
            break;
        }
    }

    Ok(SimTrace {
        config: config.clone(),
        rng: RNG_ALGORITHM,
        initial_population: n0,
        records,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub n_runs: usize,
    pub mean_growth: f64,
    /// Sample standard deviation; zero for a single run.
    pub stdev_growth: f64,
    pub extinctions: usize,
}

impl BatchSummary {
    pub fn from_traces(traces: &[SimTrace]) -> Self {
        let growth: Vec<f64> = traces.iter().map(SimTrace::final_growth).collect();
        let n = growth.len();
        let mean = growth.iter().sum::<f64>() / n as f64;
        let stdev = if n > 1 {
            (growth.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n_runs: n,
            mean_growth: mean,
            stdev_growth: stdev,
            extinctions: traces
                .iter()
                .filter(|t| t.status == Termination::Extinction)
                .count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub traces: Vec<SimTrace>,
    pub summary: BatchSummary,
}

/// Runs seeds `seed_base, seed_base + 1, ...` in parallel on the current
/// rayon pool. Results are ordered by seed regardless of completion order.
pub fn run_batch(
    config: &SimConfig,
    n_runs: usize,
    seed_base: u64,
) -> Result<BatchResult, SimError> {
    if n_runs == 0 {
        return Err(SimError::InvalidConfig("n_runs must be at least 1".into()));
    }
    config.validate()?;
    let traces = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            run(&SimConfig {
                seed: seed_base.wrapping_add(i),
                ..config.clone()
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = BatchSummary::from_traces(&traces);
    Ok(BatchResult { traces, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub lambda_m: f64,
    pub lambda_r: f64,
    pub mean_growth: f64,
    pub stdev_growth: f64,
    pub extinctions: usize,
    pub n_runs: usize,
}

/// Batch runs over migration-to-redraw ratios at a fixed total switching
/// rate. Every ratio uses seeds starting at `base.seed`.
pub fn ratio_sweep(
    base: &SimConfig,
    ratios: &[f64],
    total_switch_rate: f64,
    n_runs: usize,
) -> Result<Vec<SweepRow>, SimError> {
    if !(total_switch_rate > 0.0 && total_switch_rate < 1.0) {
        return Err(SimError::InvalidConfig(
            "total_switch_rate must lie in (0, 1)".into(),
        ));
    }
    if let Some(r) = ratios.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(SimError::InvalidConfig(format!(
            "ratio {r} must be positive"
        )));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let cfg = base.with_ratio(ratio, total_switch_rate);
            let batch = run_batch(&cfg, n_runs, base.seed)?;
            Ok(SweepRow {
                ratio,
                lambda_m: cfg.lambda_m,
                lambda_r: cfg.lambda_r,
                mean_growth: batch.summary.mean_growth,
                stdev_growth: batch.summary.stdev_growth,
                extinctions: batch.summary.extinctions,
                n_runs,
            })
        })
        .collect()
}

/// Writes `ratio,lambda_m,lambda_r,mean_growth,stdev_growth,extinctions,n_runs`.
pub fn write_sweep_csv<W: Write + ?Sized>(
    rows: &[SweepRow],
    out: &mut W,
    precision: Option<usize>,
) -> io::Result<()> {
    writeln!(
        out,
        "ratio,lambda_m,lambda_r,mean_growth,stdev_growth,extinctions,n_runs"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_real(r.ratio, precision),
            format_real(r.lambda_m, precision),
            format_real(r.lambda_r, precision),
            format_real(r.mean_growth, precision),
            format_real(r.stdev_growth, precision),
            r.extinctions,
            r.n_runs
        )?;
    }
    Ok(())
}

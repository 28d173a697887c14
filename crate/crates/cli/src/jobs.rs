use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hgrowth::dynamics::DEFAULT_DT;
use hgrowth::lottery::parse_list;
use hgrowth::output::format_real;
use hgrowth::popsim::{write_sweep_csv, REFERENCE_RATIOS, RNG_ALGORITHM};
use hgrowth::risk::{risk_report, ConsumptionLottery};
use hgrowth::{
    equivalent_growth_rate, integrate_dynasty_mass, integrate_mass_dynamics,
    integrate_share_dynamics, ratio_sweep, run, solve_x_star, DynamicsError, GrowthProcess,
    Lottery, LotteryError, MassTrajectory, ProcessError, RiskComponent, RiskError, SimConfig,
    SimError, SolveReport, SolverError,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{
    DynamicsArgs, LotteryArgs, RiskArgs, SimArgs, SimConfigArgs, SolveArgs, SweepArgs, Variant,
};

/// Exit status 2 for bad input, 3 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
            Failure::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn invalid(m: impl fmt::Display) -> Failure {
    Failure::Invalid(m.to_string())
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<LotteryError> for Failure {
    fn from(e: LotteryError) -> Self {
        invalid(e)
    }
}

impl From<ProcessError> for Failure {
    fn from(e: ProcessError) -> Self {
        invalid(e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        invalid(e)
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NoBracket => Failure::Runtime(e.to_string()),
            _ => invalid(e),
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::StepTooLarge { .. } => Failure::Runtime(e.to_string()),
            _ => invalid(e),
        }
    }
}

impl From<RiskError> for Failure {
    fn from(e: RiskError) -> Self {
        match e {
            RiskError::Solver(s) => s.into(),
            _ => invalid(e),
        }
    }
}

/// Fields a `--config` file may set for solve, dynamics and risk.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputFile {
    support: Option<Vec<f64>>,
    probs: Option<Vec<f64>>,
    lottery: Option<Lottery>,
    lambda_x: Option<f64>,
    lambda_m: Option<f64>,
    lambda_r: Option<f64>,
    delta: Option<f64>,
    mu_y: Option<f64>,
    mu_z: Option<f64>,
    beta: Option<f64>,
    initial: Option<Vec<f64>>,
    t_end: Option<f64>,
    dt: Option<f64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn input_file(path: &Option<PathBuf>) -> Result<InputFile, Failure> {
    path.as_deref()
        .map_or_else(|| Ok(InputFile::default()), read_json)
}

fn resolve_lottery(args: &LotteryArgs, file: &InputFile) -> Result<Lottery, Failure> {
    if let Some(text) = &args.lottery {
        return Ok(text.parse()?);
    }
    let support = match &args.support {
        Some(s) => Some(parse_list(s)?),
        None => file.support.clone(),
    };
    let probs = match &args.probs {
        Some(s) => Some(parse_list(s)?),
        None => file.probs.clone(),
    };
    match (support, probs, &file.lottery) {
        (Some(s), Some(p), _) => Ok(Lottery::new(s, p)?),
        (None, None, Some(l)) => Ok(l.clone()),
        (Some(_), None, _) | (None, Some(_), _) => {
            Err(invalid("--support and --probs must be given together"))
        }
        (None, None, None) => Err(invalid(
            "no lottery given (use --support/--probs, --lottery or --config)",
        )),
    }
}

fn required(value: Option<f64>, flag: &str) -> Result<f64, Failure> {
    value.ok_or_else(|| invalid(format!("missing --{flag}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub linear: bool,
}

impl LambdaGrid {
    fn parse(spec: &str, linear: bool) -> Result<Self, Failure> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = || {
            invalid(format!(
                "--sweep-lambda expects start:end:points, got {spec:?}"
            ))
        };
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        let grid = Self {
            start: a.trim().parse().map_err(|_| bad())?,
            end: b.trim().parse().map_err(|_| bad())?,
            points: n.trim().parse().map_err(|_| bad())?,
            linear,
        };
        if !(grid.start > 0.0 && grid.end >= grid.start && grid.end.is_finite()) || grid.points == 0
        {
            return Err(invalid(
                "sweep grid needs 0 < start <= end and at least one point",
            ));
        }
        Ok(grid)
    }

    fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / last;
                if i == 0 {
                    self.start
                } else if i == self.points - 1 {
                    self.end
                } else if self.linear {
                    self.start + (self.end - self.start) * f
                } else {
                    (self.start.ln() + (self.end.ln() - self.start.ln()) * f).exp()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveJob {
    pub lottery: Lottery,
    pub lambda_x: f64,
    pub delta: f64,
    pub mu_y: f64,
    pub mu_z: f64,
    pub sweep: Option<LambdaGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsJob {
    pub variant: Variant,
    pub lottery: Lottery,
    pub lambda_x: Option<f64>,
    pub lambda_m: Option<f64>,
    pub lambda_r: Option<f64>,
    pub delta: f64,
    pub mu_y: f64,
    pub mu_z: f64,
    pub initial: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskJob {
    pub consumption: Lottery,
    pub beta: f64,
    pub lambda_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimJob {
    pub config: SimConfig,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepJob {
    pub base: SimConfig,
    pub ratios: Vec<f64>,
    pub total_switch_rate: f64,
    pub runs: usize,
    pub jobs: Option<usize>,
}

/// Fully resolved parameters of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "lowercase")]
pub enum Job {
    Solve(SolveJob),
    Dynamics(DynamicsJob),
    Risk(RiskJob),
    Sim(SimJob),
    Sweep(SweepJob),
}

impl Job {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Job::Sim(j) => vec![j.config.seed],
            Job::Sweep(j) => (0..j.runs as u64).map(|i| j.base.seed + i).collect(),
            _ => Vec::new(),
        }
    }
}

pub fn solve_job(a: &SolveArgs) -> Result<Job, Failure> {
    let file = input_file(&a.config)?;
    let lottery = resolve_lottery(&a.lottery, &file)?;
    let sweep = a
        .sweep_lambda
        .as_deref()
        .map(|s| LambdaGrid::parse(s, a.linear))
        .transpose()?;
    let lambda_x = match (&sweep, a.lambda_x.or(file.lambda_x)) {
        (_, Some(l)) => l,
        (Some(grid), None) => grid.start,
        (None, None) => return Err(invalid("missing --lambda-x")),
    };
    Ok(Job::Solve(SolveJob {
        lottery,
        lambda_x,
        delta: a.delta.or(file.delta).unwrap_or(0.0),
        mu_y: a.mu_y.or(file.mu_y).unwrap_or(0.0),
        mu_z: a.mu_z.or(file.mu_z).unwrap_or(0.0),
        sweep,
    }))
}

pub fn dynamics_job(a: &DynamicsArgs) -> Result<Job, Failure> {
    let file = input_file(&a.config)?;
    let lottery = resolve_lottery(&a.lottery, &file)?;
    let initial = match &a.initial {
        Some(s) => parse_list(s)?,
        None => file
            .initial
            .clone()
            .unwrap_or_else(|| vec![1.0 / lottery.len() as f64; lottery.len()]),
    };
    let lambda_x = a.lambda_x.or(file.lambda_x);
    let (lambda_m, lambda_r) = (a.lambda_m.or(file.lambda_m), a.lambda_r.or(file.lambda_r));
    match a.variant {
        Variant::Share | Variant::Mass => {
            required(lambda_x, "lambda-x")?;
        }
        Variant::Dynasty => {
            required(lambda_m, "lambda-m")?;
            required(lambda_r, "lambda-r")?;
        }
    }
    Ok(Job::Dynamics(DynamicsJob {
        variant: a.variant,
        lottery,
        lambda_x,
        lambda_m,
        lambda_r,
        delta: a.delta.or(file.delta).unwrap_or(0.0),
        mu_y: a.mu_y.or(file.mu_y).unwrap_or(0.0),
        mu_z: a.mu_z.or(file.mu_z).unwrap_or(0.0),
        initial,
        t_end: a.t_end.or(file.t_end).unwrap_or(1_000.0),
        dt: a.dt.or(file.dt).unwrap_or(DEFAULT_DT),
    }))
}

pub fn risk_job(a: &RiskArgs) -> Result<Job, Failure> {
    let file = input_file(&a.config)?;
    Ok(Job::Risk(RiskJob {
        consumption: resolve_lottery(&a.lottery, &file)?,
        beta: required(a.beta.or(file.beta), "beta")?,
        lambda_x: required(a.lambda_x.or(file.lambda_x), "lambda-x")?,
    }))
}

fn sim_config(a: &SimConfigArgs) -> Result<SimConfig, Failure> {
    let mut c: SimConfig = a
        .config
        .as_deref()
        .map_or_else(|| Ok(SimConfig::default()), read_json)?;
    macro_rules! apply {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { c.$field = v; } )* };
    }
    apply!(
        n_agents,
        n_dynasties,
        x_low,
        x_high,
        q_high,
        lambda_m,
        lambda_r,
        delta,
        max_years,
        growth_cap,
        extinction_floor_factor,
        seed
    );
    Ok(c)
}

pub fn sim_job(a: &SimArgs) -> Result<Job, Failure> {
    let mut config = sim_config(&a.config)?;
    if let Some(ratio) = a.ratio {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(invalid("--ratio must be positive"));
        }
        config = config.with_ratio(ratio, a.total_switch_rate);
    }
    config.validate()?;
    Ok(Job::Sim(SimJob {
        config,
        every: a.every.max(1),
    }))
}

pub fn sweep_job(a: &SweepArgs) -> Result<Job, Failure> {
    let base = sim_config(&a.config)?;
    let ratios = match &a.ratios {
        Some(s) => parse_list(s)?,
        None => REFERENCE_RATIOS.to_vec(),
    };
    if a.runs == 0 {
        return Err(invalid("--runs must be at least 1"));
    }
    if a.jobs == Some(0) {
        return Err(invalid("--jobs must be at least 1"));
    }
    Ok(Job::Sweep(SweepJob {
        base,
        ratios,
        total_switch_rate: a.total_switch_rate,
        runs: a.runs,
        jobs: a.jobs,
    }))
}

/// Rounds every float in a JSON tree to `digits` significant digits.
fn round_json(v: &mut Value, digits: Option<usize>) {
    let Some(digits) = digits else { return };
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            if let Some(x) = n.as_f64() {
                let rounded: f64 = format_real(x, Some(digits)).parse().unwrap_or(x);
                if let Some(r) = serde_json::Number::from_f64(rounded) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|i| round_json(i, Some(digits))),
        Value::Object(map) => map.values_mut().for_each(|i| round_json(i, Some(digits))),
        _ => {}
    }
}

fn write_json<T: Serialize>(
    value: &T,
    out: &mut dyn Write,
    digits: Option<usize>,
) -> Result<(), Failure> {
    let mut v = serde_json::to_value(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    round_json(&mut v, digits);
    serde_json::to_writer_pretty(&mut *out, &v).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn process(
    lottery: &Lottery,
    lambda_x: f64,
    delta: f64,
    mu_y: f64,
    mu_z: f64,
) -> Result<GrowthProcess, Failure> {
    let component = |mu: f64| Lottery::degenerate(mu).map(|l| RiskComponent::new(l, 1.0));
    Ok(GrowthProcess::new(
        delta,
        RiskComponent::new(lottery.clone(), lambda_x),
        component(mu_y)?,
        component(mu_z)?,
    )?)
}

fn run_solve(j: &SolveJob, out: &mut dyn Write, digits: Option<usize>) -> Result<(), Failure> {
    if let Some(grid) = &j.sweep {
        let mu = j.lottery.mean();
        let top = j.lottery.max_rate();
        writeln!(out, "lambda,x_star,mu,r_h_minus_lambda")?;
        for lambda in grid.values() {
            let x = solve_x_star(&j.lottery, lambda)?.x_star;
            let row = [lambda, x, mu, top - lambda].map(|v| format_real(v, digits));
            writeln!(out, "{}", row.join(","))?;
        }
        return Ok(());
    }
    let state = solve_x_star(&j.lottery, j.lambda_x)?;
    let g = if j.lottery.is_degenerate() {
        if !(j.delta >= 0.0 && j.delta.is_finite()) {
            return Err(ProcessError::InvalidDelta.into());
        }
        state.x_star + j.mu_y + j.mu_z - j.delta
    } else {
        equivalent_growth_rate(&process(&j.lottery, j.lambda_x, j.delta, j.mu_y, j.mu_z)?)?
    };
    write_json(&SolveReport::new(state, g), out, digits)
}

fn write_mass(
    t: &MassTrajectory,
    out: &mut dyn Write,
    digits: Option<usize>,
) -> Result<(), Failure> {
    t.write_csv(out, digits)?;
    Ok(())
}

fn run_dynamics(
    j: &DynamicsJob,
    out: &mut dyn Write,
    digits: Option<usize>,
) -> Result<(), Failure> {
    match j.variant {
        Variant::Share => {
            let lambda = required(j.lambda_x, "lambda-x")?;
            let t = integrate_share_dynamics(&j.lottery, lambda, &j.initial, j.t_end, j.dt)?;
            t.write_csv(out, digits)?;
            Ok(())
        }
        Variant::Mass => {
            let lambda = required(j.lambda_x, "lambda-x")?;
            let p = process(&j.lottery, lambda, j.delta, j.mu_y, j.mu_z)?;
            write_mass(
                &integrate_mass_dynamics(&p, &j.initial, j.t_end, j.dt)?,
                out,
                digits,
            )
        }
        Variant::Dynasty => {
            let (lm, lr) = (
                required(j.lambda_m, "lambda-m")?,
                required(j.lambda_r, "lambda-r")?,
            );
            if j.mu_y != 0.0 || j.mu_z != 0.0 {
                return Err(invalid(
                    "the dynasty variant has no idiosyncratic or aggregate component",
                ));
            }
            let t = integrate_dynasty_mass(&j.lottery, lm, lr, j.delta, &j.initial, j.t_end, j.dt)?;
            write_mass(&t, out, digits)
        }
    }
}

fn run_risk(j: &RiskJob, out: &mut dyn Write, digits: Option<usize>) -> Result<(), Failure> {
    let c = ConsumptionLottery::new(j.consumption.clone())?;
    write_json(&risk_report(&c, j.beta, j.lambda_x)?, out, digits)
}

fn run_sim(j: &SimJob, out: &mut dyn Write, digits: Option<usize>) -> Result<(), Failure> {
    let trace = run(&j.config)?;
    trace.write_csv(out, j.every, digits)?;
    let last = trace.last();
    eprintln!(
        "{:?} after {} years: population {}, cum_growth {}",
        trace.status,
        last.year,
        last.population,
        format_real(last.cum_growth, Some(6))
    );
    Ok(())
}

fn run_sweep(j: &SweepJob, out: &mut dyn Write, digits: Option<usize>) -> Result<(), Failure> {
    let sweep = || ratio_sweep(&j.base, &j.ratios, j.total_switch_rate, j.runs);
    let rows = match j.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(e.to_string()))?
            .install(sweep)?,
        None => sweep()?,
    };
    write_sweep_csv(&rows, out, digits)?;
    Ok(())
}

pub fn execute(job: &Job, out: &mut dyn Write, digits: Option<usize>) -> Result<(), Failure> {
    match job {
        Job::Solve(j) => run_solve(j, out, digits),
        Job::Dynamics(j) => run_dynamics(j, out, digits),
        Job::Risk(j) => run_risk(j, out, digits),
        Job::Sim(j) => run_sim(j, out, digits),
        Job::Sweep(j) => run_sweep(j, out, digits),
    }
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub rng_algorithm: String,
    pub seeds: Vec<u64>,
    pub precision: Option<usize>,
    #[serde(flatten)]
    pub job: Job,
    pub outputs: Vec<PathBuf>,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, Failure> {
    read_json(path)
}

/// Runs `job`, writing to `output` (with a manifest) or to stdout.
pub fn run_to(job: &Job, output: Option<&Path>, digits: Option<usize>) -> Result<(), Failure> {
    let Some(path) = output else {
        let stdout = io::stdout();
        let mut lock = io::BufWriter::new(stdout.lock());
        execute(job, &mut lock, digits)?;
        lock.flush()?;
        return Ok(());
    };
    let bytes = render(job, digits)?;
    fs::write(path, &bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        seeds: job.seeds(),
        precision: digits,
        job: job.clone(),
        outputs: vec![path.to_path_buf()],
    };
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    let mpath = manifest_path(path);
    fs::write(&mpath, text + "\n")
        .map_err(|e| Failure::Runtime(format!("{}: {e}", mpath.display())))?;
    Ok(())
}

pub fn render(job: &Job, digits: Option<usize>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    execute(job, &mut buf, digits)?;
    Ok(buf)
}

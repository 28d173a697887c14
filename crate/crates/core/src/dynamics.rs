//! Continuum dynamics: heritable-class shares, class masses and the dynasty
//! variant, all integrated with fixed-step classical Runge-Kutta.

use std::io::{self, Write};

use thiserror::Error;

use crate::lottery::{GrowthProcess, Lottery};
use crate::output::format_real;
use crate::scalar::Real;

/// Default step, in years.
pub const DEFAULT_DT: f64 = 0.1;
/// How many times the step is halved after a positivity failure.
pub const MAX_HALVINGS: u32 = 6;
/// Upper bound on stored samples per trajectory.
pub const MAX_SAMPLES: usize = 10_000;

const RESCALE_HIGH: f64 = 1e100;
const RESCALE_LOW: f64 = 1e-100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("a state component became nonpositive at t = {t}; reduce dt")]
    StepTooLarge { t: f64 },
    #[error("migration and redraw rates are both zero")]
    BothRatesZero,
    #[error("rates must be finite and nonnegative")]
    NegativeRate,
    #[error("redraw rate must be strictly positive")]
    NonPositiveLambda,
    #[error("step and horizon must be finite and positive")]
    InvalidStep,
    #[error("initial state has {got} entries, lottery has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("initial state must be strictly positive{0}")]
    InvalidInitial(&'static str),
}

/// Share trajectory `p_k(t)` with the mean heritable rate at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareTrajectory<T> {
    pub times: Vec<T>,
    pub shares: Vec<Vec<T>>,
    pub mean_rates: Vec<T>,
    /// Step actually used, after any automatic halving.
    pub dt: T,
}

impl<T: Real> ShareTrajectory<T> {
    pub fn terminal(&self) -> &[T] {
        self.shares
            .last()
            .expect("trajectory has at least one sample")
    }

    /// Writes `t,p_1,...,p_n,x_bar`.
    pub fn write_csv<W: Write + ?Sized>(
        &self,
        out: &mut W,
        precision: Option<usize>,
    ) -> io::Result<()> {
        let n = self.shares.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("p_{k}")));
        header.push("x_bar".into());
        writeln!(out, "{}", header.join(","))?;
        for ((t, p), xb) in self.times.iter().zip(&self.shares).zip(&self.mean_rates) {
            let mut row = vec![format_real(t.to_f64_lossy(), precision)];
            row.extend(p.iter().map(|v| format_real(v.to_f64_lossy(), precision)));
            row.push(format_real(xb.to_f64_lossy(), precision));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Mass trajectory. Masses are stored as `scaled * exp(log_scale)` so the
/// representation survives horizons where `w` itself would overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct MassTrajectory<T> {
    pub times: Vec<T>,
    pub scaled: Vec<Vec<T>>,
    pub log_scale: Vec<T>,
    /// `ln w(t)` at each sample.
    pub log_w: Vec<T>,
    /// `ln w(t_end) / t_end`.
    pub growth: T,
    pub dt: T,
}

impl<T: Real> MassTrajectory<T> {
    pub fn masses(&self, sample: usize) -> Vec<T> {
        let s = self.log_scale[sample].exp();
        self.scaled[sample].iter().map(|&v| v * s).collect()
    }

    pub fn shares(&self, sample: usize) -> Vec<T> {
        let v = &self.scaled[sample];
        let total: T = v.iter().copied().sum();
        v.iter().map(|&x| x / total).collect()
    }

    /// Writes `t,w_1,...,w_n,log_w,g_cum`; `g_cum` is `NaN` at `t = 0`.
    pub fn write_csv<W: Write + ?Sized>(
        &self,
        out: &mut W,
        precision: Option<usize>,
    ) -> io::Result<()> {
        let n = self.scaled.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|k| format!("w_{k}")));
        header.push("log_w".into());
        header.push("g_cum".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.times.len() {
            let t = self.times[i].to_f64_lossy();
            let lw = self.log_w[i].to_f64_lossy();
            let mut row = vec![format_real(t, precision)];
            row.extend(
                self.masses(i)
                    .iter()
                    .map(|v| format_real(v.to_f64_lossy(), precision)),
            );
            row.push(format_real(lw, precision));
            row.push(format_real(
                if t > 0.0 { lw / t } else { f64::NAN },
                precision,
            ));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// One classical RK4 step of `y' = f(y)` in place. Returns `false` as soon as
/// a stage or the result has a nonpositive component.
fn rk4_step<T: Real, F>(f: &F, y: &mut [T], h: T, work: &mut Rk4Work<T>) -> bool
where
    F: Fn(&[T], &mut [T]),
{
    let half = h / T::lit(2.0);
    let n = y.len();
    let Rk4Work {
        k1,
        k2,
        k3,
        k4,
        tmp,
    } = work;

    f(y, k1);
    for i in 0..n {
        tmp[i] = y[i] + half * k1[i];
    }
    if tmp.iter().any(|&v| v <= T::zero()) {
        return false;
    }
    f(tmp, k2);
    for i in 0..n {
        tmp[i] = y[i] + half * k2[i];
    }
    if tmp.iter().any(|&v| v <= T::zero()) {
        return false;
    }
    f(tmp, k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    if tmp.iter().any(|&v| v <= T::zero()) {
        return false;
    }
    f(tmp, k4);
    let two = T::lit(2.0);
    let sixth = h / T::lit(6.0);
    for i in 0..n {
        y[i] += sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    y.iter().all(|&v| v > T::zero())
}

struct Rk4Work<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4Work<T> {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![T::zero(); n],
            k2: vec![T::zero(); n],
            k3: vec![T::zero(); n],
            k4: vec![T::zero(); n],
            tmp: vec![T::zero(); n],
        }
    }
}

/// Number of steps and the step length actually used to cover `t_end`.
fn step_plan<T: Real>(t_end: T, dt: T) -> (usize, T) {
    let ratio = t_end / dt;
    let mut steps = ratio.round();
    if (ratio - steps).abs() > T::lit(1e-9) * ratio.max(T::one()) {
        steps = ratio.ceil();
    }
    let steps = steps.to_usize().unwrap_or(usize::MAX).max(1);
    (
        steps,
        t_end / T::from_usize(steps).expect("step count fits"),
    )
}

fn sample_stride(steps: usize) -> usize {
    steps.div_ceil(MAX_SAMPLES - 2).max(1)
}

fn is_sampled(step: usize, steps: usize, stride: usize) -> bool {
    step.is_multiple_of(stride) || step == steps
}

fn check_horizon<T: Real>(t_end: T, dt: T) -> Result<(), DynamicsError> {
    if !(dt > T::zero()) || !(t_end > T::zero()) || !dt.is_finite() || !t_end.is_finite() {
        return Err(DynamicsError::InvalidStep);
    }
    Ok(())
}

fn check_initial<T: Real>(v: &[T], expected: usize) -> Result<(), DynamicsError> {
    if v.len() != expected {
        return Err(DynamicsError::LengthMismatch {
            expected,
            got: v.len(),
        });
    }
    if v.iter().any(|&x| !(x > T::zero()) || !x.is_finite()) {
        return Err(DynamicsError::InvalidInitial(""));
    }
    Ok(())
}

/// Retries `attempt` with the step halved after each positivity failure.
fn with_halving<T: Real, R>(
    dt: T,
    mut attempt: impl FnMut(T) -> Result<R, DynamicsError>,
) -> Result<R, DynamicsError> {
    let mut h = dt;
    let mut last = None;
    for _ in 0..=MAX_HALVINGS {
        match attempt(h) {
            Err(e @ DynamicsError::StepTooLarge { .. }) => {
                last = Some(e);
                h /= T::lit(2.0);
            }
            other => return other,
        }
    }
    Err(last.expect("at least one attempt"))
}

fn mean_rate<T: Real>(support: &[T], p: &[T]) -> T {
    support.iter().zip(p).map(|(&x, &pk)| x * pk).sum()
}

/// Integrates `dp_k/dt = ((x_k - x_bar) - lambda) p_k + lambda q_k` from `p0`.
pub fn integrate_share_dynamics<T: Real>(
    heritable: &Lottery<T>,
    lambda_x: T,
    p0: &[T],
    t_end: T,
    dt: T,
) -> Result<ShareTrajectory<T>, DynamicsError> {
    if !(lambda_x > T::zero()) || !lambda_x.is_finite() {
        return Err(DynamicsError::NonPositiveLambda);
    }
    check_horizon(t_end, dt)?;
    check_initial(p0, heritable.len())?;
    let total: T = p0.iter().copied().sum();
    if (total - T::one()).abs() > T::prob_sum_tol() {
        return Err(DynamicsError::InvalidInitial(" and sum to one"));
    }
    with_halving(dt, |h| share_run(heritable, lambda_x, p0, t_end, h))
}

fn share_run<T: Real>(
    heritable: &Lottery<T>,
    lambda: T,
    p0: &[T],
    t_end: T,
    dt: T,
) -> Result<ShareTrajectory<T>, DynamicsError> {
    let x = heritable.support();
    let q = heritable.probs();
    // homogeneous in p; sum(dp) == 0 for every p, not only on the simplex
    let rhs = |p: &[T], dp: &mut [T]| {
        let total: T = p.iter().copied().sum();
        let xb = mean_rate(x, p) / total;
        for k in 0..p.len() {
            dp[k] = ((x[k] - xb) - lambda) * p[k] + lambda * q[k] * total;
        }
    };
    let (steps, h) = step_plan(t_end, dt);
    let stride = sample_stride(steps);
    let mut p = p0.to_vec();
    let mut work = Rk4Work::new(p.len());
    let mut traj = ShareTrajectory {
        times: vec![T::zero()],
        shares: vec![p.clone()],
        mean_rates: vec![mean_rate(x, &p)],
        dt: h,
    };
    for step in 1..=steps {
        if !rk4_step(&rhs, &mut p, h, &mut work) {
            return Err(DynamicsError::StepTooLarge {
                t: (T::from_usize(step - 1).expect("fits") * h).to_f64_lossy(),
            });
        }
        if is_sampled(step, steps, stride) {
            traj.times.push(T::from_usize(step).expect("fits") * h);
            traj.mean_rates.push(mean_rate(x, &p));
            traj.shares.push(p.clone());
        }
    }
    Ok(traj)
}

/// Integrates the class masses
/// `dw_k/dt = w_k b_k - lambda w_k + lambda w q_k - delta w_k`, with
/// `b_k = x_k + mu_y + mu_z`.
pub fn integrate_mass_dynamics<T: Real>(
    process: &GrowthProcess<T>,
    w0: &[T],
    t_end: T,
    dt: T,
) -> Result<MassTrajectory<T>, DynamicsError> {
    let h = process.heritable();
    let shift = process.common_birth_rate() - process.delta();
    mass_checked(&h.lottery, h.lambda, shift, w0, t_end, dt)
}

/// Dynasty variant: members leave at rate `lambda_m` (migration) and whole
/// dynasties redraw at rate `lambda_r`. In the continuum both enter only
/// through their sum, so this delegates to the same kernel.
#[allow(clippy::too_many_arguments)]
pub fn integrate_dynasty_mass<T: Real>(
    heritable: &Lottery<T>,
    lambda_m: T,
    lambda_r: T,
    delta: T,
    w0: &[T],
    t_end: T,
    dt: T,
) -> Result<MassTrajectory<T>, DynamicsError> {
    if !(lambda_m >= T::zero() && lambda_r >= T::zero()) || !(lambda_m + lambda_r).is_finite() {
        return Err(DynamicsError::NegativeRate);
    }
    if lambda_m + lambda_r == T::zero() {
        return Err(DynamicsError::BothRatesZero);
    }
    if !(delta >= T::zero()) {
        return Err(DynamicsError::NegativeRate);
    }
    // Same arithmetic as a process with zero idiosyncratic and aggregate means.
    let shift = (T::zero() + T::zero()) - delta;
    mass_checked(heritable, lambda_m + lambda_r, shift, w0, t_end, dt)
}

fn mass_checked<T: Real>(
    heritable: &Lottery<T>,
    lambda: T,
    shift: T,
    w0: &[T],
    t_end: T,
    dt: T,
) -> Result<MassTrajectory<T>, DynamicsError> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(DynamicsError::NonPositiveLambda);
    }
    check_horizon(t_end, dt)?;
    check_initial(w0, heritable.len())?;
    with_halving(dt, |h| mass_run(heritable, lambda, shift, w0, t_end, h))
}

fn mass_run<T: Real>(
    heritable: &Lottery<T>,
    lambda: T,
    shift: T,
    w0: &[T],
    t_end: T,
    dt: T,
) -> Result<MassTrajectory<T>, DynamicsError> {
    let x = heritable.support();
    let q = heritable.probs();
    let rhs = |w: &[T], dw: &mut [T]| {
        let total: T = w.iter().copied().sum();
        for k in 0..w.len() {
            dw[k] = w[k] * (x[k] + shift) - lambda * w[k] + lambda * total * q[k];
        }
    };
    let (steps, h) = step_plan(t_end, dt);
    let stride = sample_stride(steps);
    let mut w = w0.to_vec();
    let mut log_scale = T::zero();
    let mut work = Rk4Work::new(w.len());
    let log_total = |w: &[T], scale: T| w.iter().copied().sum::<T>().ln() + scale;
    let mut traj = MassTrajectory {
        times: vec![T::zero()],
        scaled: vec![w.clone()],
        log_scale: vec![log_scale],
        log_w: vec![log_total(&w, log_scale)],
        growth: T::zero(),
        dt: h,
    };
    let (high, low) = (T::lit(RESCALE_HIGH), T::lit(RESCALE_LOW));
    for step in 1..=steps {
        if !rk4_step(&rhs, &mut w, h, &mut work) {
            return Err(DynamicsError::StepTooLarge {
                t: (T::from_usize(step - 1).expect("fits") * h).to_f64_lossy(),
            });
        }
        let total: T = w.iter().copied().sum();
        if total > high || total < low {
            // Power-of-two rescaling is exact, so stepping is unaffected.
            let k = total.log2().floor();
            let factor = T::lit(2.0).powi(-k.to_i32().expect("exponent fits"));
            w.iter_mut().for_each(|v| *v *= factor);
            log_scale += k * T::LN_2();
        }
        if is_sampled(step, steps, stride) {
            traj.times.push(T::from_usize(step).expect("fits") * h);
            traj.log_w.push(log_total(&w, log_scale));
            traj.scaled.push(w.clone());
            traj.log_scale.push(log_scale);
        }
    }
    let t_last = *traj.times.last().expect("sampled");
    traj.growth = *traj.log_w.last().expect("sampled") / t_last;
    Ok(traj)
}

/// Share of type `theta` after time `t` when two types start at equal
/// frequency and grow at `g_theta` and `g_other`. Logistic in log-space.
pub fn type_competition_share<T: Real>(g_theta: T, g_other: T, t: T) -> T {
    let z = (g_theta - g_other) * t;
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

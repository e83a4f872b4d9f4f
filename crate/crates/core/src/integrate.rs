//! Fixed-step Heun and classical RK4 integration.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{field_unchecked, Coefficients, ModelError, StateVec};

/// Any state component beyond this magnitude marks the run as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e9;
/// Default hard cap on the number of steps in a single run.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 100.0;
/// Horizon for the long-time runs.
pub const LONG_T_END: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("step produced a non-finite state")]
    NonFinite,
    #[error("invalid simulation setting {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("run needs {steps} steps, above the cap of {cap}")]
    StepCapExceeded { steps: u64, cap: u64 },
    #[error("run diverged at dt = {dt}")]
    UnstableAtDt { dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    /// Improved Euler: Euler predictor, trapezoidal corrector.
    Heun,
    #[default]
    Rk4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Heun => "heun",
            Method::Rk4 => "rk4",
        }
    }

    /// Nominal global order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Method::Heun => 2,
            Method::Rk4 => 4,
        }
    }

    fn step(self, s: StateVec, c: &Coefficients, dt: f64) -> StateVec {
        match self {
            Method::Heun => heun_raw(s, c, dt),
            Method::Rk4 => rk4_raw(s, c, dt),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heun" => Ok(Method::Heun),
            "rk4" => Ok(Method::Rk4),
            other => Err(format!("unknown method '{other}' (expected heun or rk4)")),
        }
    }
}

#[inline]
fn heun_raw(s: StateVec, c: &Coefficients, dt: f64) -> StateVec {
    let k1 = field_unchecked(s, c);
    let k2 = field_unchecked(s + dt * k1, c);
    s + (0.5 * dt) * (k1 + k2)
}

#[inline]
fn rk4_raw(s: StateVec, c: &Coefficients, dt: f64) -> StateVec {
    let half = 0.5 * dt;
    let k1 = field_unchecked(s, c);
    let k2 = field_unchecked(s + half * k1, c);
    let k3 = field_unchecked(s + half * k2, c);
    let k4 = field_unchecked(s + dt * k3, c);
    s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn checked_step(method: Method, s: StateVec, c: &Coefficients, dt: f64) -> Result<StateVec, IntegrateError> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(IntegrateError::InvalidSpec { field: "dt", reason: format!("must be finite and >= 0, got {dt}") });
    }
    s.check_finite()?;
    let next = method.step(s, c, dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(IntegrateError::NonFinite)
    }
}

/// One Heun step.
pub fn step_heun(state: StateVec, coeffs: &Coefficients, dt: f64) -> Result<StateVec, IntegrateError> {
    checked_step(Method::Heun, state, coeffs, dt)
}

/// One classical RK4 step (weights 1/6, 1/3, 1/3, 1/6).
pub fn step_rk4(state: StateVec, coeffs: &Coefficients, dt: f64) -> Result<StateVec, IntegrateError> {
    checked_step(Method::Rk4, state, coeffs, dt)
}

/// Time span, step size, method, and initial state of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub method: Method,
    pub initial: StateVec,
    pub step_cap: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            t0: 0.0,
            t_end: DEFAULT_T_END,
            dt: DEFAULT_DT,
            method: Method::Rk4,
            initial: StateVec::ORIGIN,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

impl SimSpec {
    pub fn new(t0: f64, t_end: f64, dt: f64, method: Method, initial: StateVec) -> Self {
        SimSpec { t0, t_end, dt, method, initial, step_cap: DEFAULT_STEP_CAP }
    }

    /// Number of steps the run takes. `t_end == t0` is accepted and gives 0.
    pub fn step_count(&self) -> Result<u64, IntegrateError> {
        let invalid = |field, reason: String| Err(IntegrateError::InvalidSpec { field, reason });
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return invalid("dt", format!("must be positive and finite, got {}", self.dt));
        }
        if !self.t0.is_finite() {
            return invalid("t0", format!("must be finite, got {}", self.t0));
        }
        if !self.t_end.is_finite() || self.t_end < self.t0 {
            return invalid("t_end", format!("must be finite and >= t0, got {}", self.t_end));
        }
        if !self.initial.is_finite() {
            return invalid("initial", "initial state must be finite".into());
        }
        let exact = (self.t_end - self.t0) / self.dt;
        let steps = exact.round();
        // Accept horizons that are a whole number of steps up to rounding.
        let steps = if (exact - steps).abs() <= 1e-9 * exact.max(1.0) { steps } else { exact.ceil() };
        if steps > self.step_cap as f64 {
            return Err(IntegrateError::StepCapExceeded { steps: steps as u64, cap: self.step_cap });
        }
        Ok(steps as u64)
    }
}

/// Uniformly sampled states; sample `k` is the state at `t0 + k*dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<StateVec>,
    /// First sample index whose sup-norm exceeded [`DIVERGENCE_BOUND`].
    /// When set it is also the last sample.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    pub fn last(&self) -> StateVec {
        *self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn channel(&self, c: crate::model::Component) -> Vec<f64> {
        self.samples.iter().map(|s| s.component(c)).collect()
    }
}

fn exceeds_bound(s: &StateVec) -> bool {
    !s.is_finite() || s.sup_norm() > DIVERGENCE_BOUND
}

/// Integrates from `spec.initial`, recording every state. Stops at the first
/// state beyond [`DIVERGENCE_BOUND`] (or non-finite) and flags it.
pub fn integrate(spec: &SimSpec, coeffs: &Coefficients) -> Result<Trajectory, IntegrateError> {
    let steps = spec.step_count()?;
    let mut samples = Vec::with_capacity(steps as usize + 1);
    let mut s = spec.initial;
    samples.push(s);
    let mut diverged_at = None;
    for k in 1..=steps as usize {
        s = spec.method.step(s, coeffs, spec.dt);
        if exceeds_bound(&s) {
            // A non-finite sample would break downstream invariants; clamp
            // it to a signed bound that still exceeds the divergence limit.
            let clamp = |v: f64| if v.is_nan() { f64::MAX } else { v.clamp(-f64::MAX, f64::MAX) };
            samples.push(StateVec::new(clamp(s.x), clamp(s.y), clamp(s.z)));
            diverged_at = Some(k);
            break;
        }
        samples.push(s);
    }
    Ok(Trajectory { t0: spec.t0, dt: spec.dt, samples, diverged_at })
}

/// Final state of a run without storing the intermediate samples.
/// `None` if the run diverges.
pub(crate) fn final_state(
    method: Method,
    initial: StateVec,
    coeffs: &Coefficients,
    dt: f64,
    steps: u64,
) -> Option<StateVec> {
    let mut s = initial;
    for _ in 0..steps {
        s = method.step(s, coeffs, dt);
        if exceeds_bound(&s) {
            return None;
        }
    }
    Some(s)
}

/// Advances `s` by `steps` steps in place; `false` if it diverged.
pub(crate) fn advance(method: Method, s: &mut StateVec, coeffs: &Coefficients, dt: f64, steps: usize) -> bool {
    for _ in 0..steps {
        *s = method.step(*s, coeffs, dt);
        if exceeds_bound(s) {
            return false;
        }
    }
    true
}

/// Result of an empirical order measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderEstimate {
    Order(f64),
    /// All runs agree exactly (for example when starting at an
    /// equilibrium), so no order can be measured.
    Degenerate,
}

impl OrderEstimate {
    pub fn value(self) -> Option<f64> {
        match self {
            OrderEstimate::Order(p) => Some(p),
            OrderEstimate::Degenerate => None,
        }
    }
}

/// Number of coarse steps used by [`convergence_order`] over the horizon.
pub const ORDER_BASE_STEPS: u64 = 100;

/// Empirical global order of `method` over `[0, t_end]`.
///
/// Runs with `dt = t_end / 100`, `dt/2` and `dt/4`. The reference solution is
/// the Richardson extrapolation of the two finest runs using the method's
/// nominal order; the result is `log2(err(dt) / err(dt/2))` in sup-norm.
pub fn convergence_order(
    method: Method,
    coeffs: &Coefficients,
    initial: StateVec,
    t_end: f64,
) -> Result<OrderEstimate, IntegrateError> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(IntegrateError::InvalidSpec { field: "t_end", reason: format!("must be positive, got {t_end}") });
    }
    initial.check_finite()?;
    let dt = t_end / ORDER_BASE_STEPS as f64;
    let run = |div: u64| {
        let h = dt / div as f64;
        final_state(method, initial, coeffs, h, ORDER_BASE_STEPS * div).ok_or(IntegrateError::UnstableAtDt { dt: h })
    };
    let coarse = run(1)?;
    let mid = run(2)?;
    let fine = run(4)?;
    let factor = 1.0 / ((1u64 << method.order()) as f64 - 1.0);
    let reference = fine + factor * (fine - mid);
    let e_coarse = (coarse - reference).sup_norm();
    let e_mid = (mid - reference).sup_norm();
    if e_coarse == 0.0 || e_mid == 0.0 {
        return Ok(OrderEstimate::Degenerate);
    }
    Ok(OrderEstimate::Order((e_coarse / e_mid).log2()))
}

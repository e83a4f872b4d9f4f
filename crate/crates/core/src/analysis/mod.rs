//! Regime classification, settle time, Lyapunov estimation, and parameter
//! sweeps.

mod lyapunov;
mod peaks;
mod regime;
mod sweep;

use thiserror::Error;

use crate::integrate::IntegrateError;
use crate::model::CoefficientName;

pub use lyapunov::{lyapunov_max, DEFAULT_RENORM_INTERVAL, DEFAULT_SEPARATION};
pub use peaks::detect_peaks;
pub use regime::{classify_regime, settle_time, RegimeLabel, RegimeReport, Thresholds, MIN_CLASSIFY_SAMPLES};
pub use sweep::{bifurcation_sweep, BifurcationDiagram, SweepSpec, SWEEP_HYSTERESIS_FLOOR, SWEEP_HYSTERESIS_FRACTION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("trajectory has {len} samples, at least {min} are required")]
    TooShort { len: usize, min: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("invalid {parameter} = {value} in sweep: {reason}")]
    InvalidCoefficient { parameter: CoefficientName, value: f64, reason: String },
    #[error("trajectory diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("trajectory separation collapsed to zero during renormalization")]
    Degenerate,
}

use std::fmt;

use crate::analysis::peaks::{attractor_hysteresis, detect_peaks, range};
use crate::analysis::AnalysisError;
use crate::integrate::Trajectory;
use crate::model::{field_unchecked, Coefficients, Component};

/// Asymptotic behaviour of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeLabel {
    /// Settled onto an equilibrium (vector-field norm below tolerance).
    Converged,
    Periodic,
    Aperiodic,
    Diverged,
    Undetermined,
}

impl RegimeLabel {
    pub fn name(self) -> &'static str {
        match self {
            RegimeLabel::Converged => "converged",
            RegimeLabel::Periodic => "periodic",
            RegimeLabel::Aperiodic => "aperiodic",
            RegimeLabel::Diverged => "diverged",
            RegimeLabel::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tolerances used by [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Vector-field norm below which the final state counts as converged.
    pub converge: f64,
    /// Maximum coefficient of variation of peak spacing for a periodic orbit.
    pub cv: f64,
    /// Allowed relative drift of peak amplitude for a periodic orbit.
    pub amp: f64,
    /// Lyapunov exponent above which an irregular orbit counts as aperiodic.
    pub lyap: f64,
    /// Peak hysteresis as a fraction of the post-transient range.
    pub hysteresis_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { converge: 1e-6, cv: 0.05, amp: 0.1, lyap: 0.01, hysteresis_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    /// Euclidean norm of the vector field at the last sample.
    pub final_residual: f64,
    pub peak_count: usize,
    /// Coefficient of variation of inter-peak intervals; NaN with fewer
    /// than two intervals.
    pub peak_spacing_cv: f64,
    /// Mean peak amplitude in the last quarter of the post-transient window
    /// over that in its second quarter; NaN when either quarter has no peaks.
    pub amplitude_trend: f64,
    pub lyapunov_hint: Option<f64>,
    /// Component the peak metrics were measured on.
    pub component: Component,
}

/// Minimum trajectory length accepted by [`classify_regime`].
pub const MIN_CLASSIFY_SAMPLES: usize = 16;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn coefficient_of_variation(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    let var = v.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / v.len() as f64;
    var.sqrt() / m
}

/// Labels the asymptotic regime of `traj`.
///
/// Needs at least [`MIN_CLASSIFY_SAMPLES`] samples unless the run diverged,
/// which is labelled at any length.
/// The first half of the samples is discarded as transient. Peak metrics are
/// taken on the component with the largest post-transient range. Rules apply
/// in order: diverged, converged, periodic, aperiodic, undetermined.
pub fn classify_regime(
    traj: &Trajectory,
    coeffs: &Coefficients,
    thresholds: &Thresholds,
    lyapunov_hint: Option<f64>,
) -> Result<RegimeReport, AnalysisError> {
    if traj.len() < MIN_CLASSIFY_SAMPLES && traj.diverged_at.is_none() {
        return Err(AnalysisError::TooShort { len: traj.len(), min: MIN_CLASSIFY_SAMPLES });
    }
    let last = traj.last();
    let final_residual = field_unchecked(last, coeffs).norm();

    let tail = &traj.samples[traj.len() / 2..];
    let channels: Vec<(Component, Vec<f64>)> =
        Component::ALL.iter().map(|&c| (c, tail.iter().map(|s| s.component(c)).collect())).collect();
    let (component, series) = channels
        .iter()
        .max_by(|a, b| range(&a.1).total_cmp(&range(&b.1)))
        .map(|(c, s)| (*c, s.as_slice()))
        .expect("three channels");

    let hysteresis = attractor_hysteresis(series, thresholds.hysteresis_fraction, thresholds.converge);
    let peaks = detect_peaks(series, hysteresis);

    let intervals: Vec<f64> = peaks.windows(2).map(|w| (w[1].0 - w[0].0) as f64 * traj.dt).collect();
    let peak_spacing_cv = coefficient_of_variation(&intervals);

    let center = mean(series);
    let quarter = series.len().div_ceil(4).max(1);
    let amp_in = |q: usize| {
        let lo = q * quarter;
        let hi = ((q + 1) * quarter).min(series.len());
        let a: Vec<f64> = peaks.iter().filter(|(i, _)| *i >= lo && *i < hi).map(|(_, v)| v - center).collect();
        if a.is_empty() {
            f64::NAN
        } else {
            mean(&a)
        }
    };
    let amplitude_trend = amp_in(3) / amp_in(1);

    let peak_count = peaks.len();
    let spacing_ok = peak_spacing_cv <= thresholds.cv;
    let amp_ok = (1.0 - thresholds.amp..=1.0 + thresholds.amp).contains(&amplitude_trend);

    let label = if traj.diverged_at.is_some() {
        RegimeLabel::Diverged
    } else if final_residual <= thresholds.converge {
        RegimeLabel::Converged
    } else if peak_count >= 4 && spacing_ok && amp_ok {
        RegimeLabel::Periodic
    } else if peak_count >= 4 && lyapunov_hint.is_none_or(|l| l > thresholds.lyap) {
        RegimeLabel::Aperiodic
    } else {
        RegimeLabel::Undetermined
    };

    Ok(RegimeReport { label, final_residual, peak_count, peak_spacing_cv, amplitude_trend, lyapunov_hint, component })
}

/// Earliest sample time after which the vector-field norm stays at or below
/// `tol` through the end of the run. `None` if the last sample is above
/// `tol` or the run diverged.
pub fn settle_time(traj: &Trajectory, coeffs: &Coefficients, tol: f64) -> Option<f64> {
    assert!(tol > 0.0, "settle tolerance must be positive");
    if traj.diverged_at.is_some() {
        return None;
    }
    let mut first_ok = None;
    for (k, s) in traj.samples.iter().enumerate().rev() {
        if field_unchecked(*s, coeffs).norm() <= tol {
            first_ok = Some(k);
        } else {
            break;
        }
    }
    first_ok.map(|k| traj.time(k))
}

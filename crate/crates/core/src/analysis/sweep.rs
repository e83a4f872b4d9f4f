use rayon::prelude::*;

use crate::analysis::peaks::{attractor_hysteresis, detect_peaks};
use crate::analysis::AnalysisError;
use crate::integrate::{integrate, SimSpec};
use crate::model::{CoefficientName, Coefficients, Component};

/// Fraction of the post-transient range used as peak hysteresis.
pub const SWEEP_HYSTERESIS_FRACTION: f64 = 0.01;
/// Absolute hysteresis floor, matching the default convergence tolerance.
pub const SWEEP_HYSTERESIS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    pub parameter: CoefficientName,
    pub component: Component,
    /// Strictly increasing.
    pub parameter_values: Vec<f64>,
    /// Post-transient local maxima of `component`, one set per value.
    pub attractor_samples: Vec<Vec<f64>>,
    /// Whether the run at each value hit the divergence bound.
    pub diverged: Vec<bool>,
}

impl BifurcationDiagram {
    /// `(parameter, value)` pairs in parameter order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.parameter_values.iter().zip(&self.attractor_samples).flat_map(|(&p, vs)| vs.iter().map(move |&v| (p, v)))
    }
}

/// Sweep request: which coefficient, over which closed range, how many
/// evenly spaced values, and which component to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub parameter: CoefficientName,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub component: Component,
}

impl SweepSpec {
    /// Evenly spaced values from `lo` to `hi` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| if i + 1 == n { self.hi } else { self.lo + (self.hi - self.lo) * (i as f64 / (n - 1) as f64) })
            .collect()
    }

    pub fn validate(&self, base: &Coefficients) -> Result<Vec<Coefficients>, AnalysisError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(AnalysisError::InvalidArgument(format!(
                "sweep range must satisfy lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.count < 2 {
            return Err(AnalysisError::InvalidArgument(format!("sweep count must be at least 2, got {}", self.count)));
        }
        if self.parameter.is_divisor() && self.lo <= 0.0 && self.hi >= 0.0 {
            return Err(AnalysisError::InvalidCoefficient {
                parameter: self.parameter,
                value: 0.0,
                reason: format!("range [{}, {}] crosses zero", self.lo, self.hi),
            });
        }
        self.values()
            .into_iter()
            .map(|v| {
                base.with(self.parameter, v).map_err(|e| AnalysisError::InvalidCoefficient {
                    parameter: self.parameter,
                    value: v,
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}

/// Bifurcation diagram of `sweep.component` against `sweep.parameter`.
///
/// Each value gets an independent run from `spec.initial`; the first half is
/// discarded and the local maxima of the remainder are recorded. Points may
/// be evaluated on the current rayon pool in any order; the result is
/// assembled in parameter order and is identical to a sequential run.
pub fn bifurcation_sweep(
    sweep: &SweepSpec,
    base: &Coefficients,
    spec: &SimSpec,
) -> Result<BifurcationDiagram, AnalysisError> {
    let coeff_sets = sweep.validate(base)?;
    spec.step_count()?;
    let results: Vec<(Vec<f64>, bool)> =
        coeff_sets.par_iter().map(|c| sample_attractor(c, spec, sweep.component)).collect::<Result<_, _>>()?;
    let (attractor_samples, diverged) = results.into_iter().unzip();
    Ok(BifurcationDiagram {
        parameter: sweep.parameter,
        component: sweep.component,
        parameter_values: sweep.values(),
        attractor_samples,
        diverged,
    })
}

fn sample_attractor(c: &Coefficients, spec: &SimSpec, component: Component) -> Result<(Vec<f64>, bool), AnalysisError> {
    let traj = integrate(spec, c)?;
    if traj.diverged_at.is_some() {
        return Ok((Vec::new(), true));
    }
    let series = traj.channel(component);
    let tail = &series[series.len() / 2..];
    let h = attractor_hysteresis(tail, SWEEP_HYSTERESIS_FRACTION, SWEEP_HYSTERESIS_FLOOR);
    Ok((detect_peaks(tail, h).into_iter().map(|(_, v)| v).collect(), false))
}

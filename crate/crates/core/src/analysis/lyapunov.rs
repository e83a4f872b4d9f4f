use crate::analysis::AnalysisError;
use crate::integrate::{advance, SimSpec};
use crate::model::{Coefficients, StateVec};

pub const DEFAULT_SEPARATION: f64 = 1e-8;
pub const DEFAULT_RENORM_INTERVAL: usize = 100;

/// Largest Lyapunov exponent by the two-trajectory (Benettin) method.
///
/// A fiducial run starts at `spec.initial` and a companion run at distance
/// `separation` along `(1, 1, 1)`. Every `renorm_interval` steps the log
/// growth `ln(d / separation)` is recorded and the companion is pulled back
/// to distance `separation` along the current separation vector. Only the
/// renormalizations in the second half of the run contribute to the
/// average; the first half is transient.
pub fn lyapunov_max(
    coeffs: &Coefficients,
    spec: &SimSpec,
    renorm_interval: usize,
    separation: f64,
) -> Result<f64, AnalysisError> {
    if renorm_interval == 0 {
        return Err(AnalysisError::InvalidArgument("renorm_interval must be at least 1".into()));
    }
    if !(separation.is_finite() && separation > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("separation must be positive, got {separation}")));
    }
    let steps = spec.step_count()? as usize;
    let blocks = steps / renorm_interval;
    if blocks < 2 {
        return Err(AnalysisError::InvalidArgument(format!(
            "run of {steps} steps is too short for renormalization every {renorm_interval} steps"
        )));
    }
    let skip = blocks / 2;

    let offset = separation / 3f64.sqrt();
    let mut a = spec.initial;
    let mut b = a + StateVec::new(offset, offset, offset);
    let mut sum = 0.0;

    for block in 0..blocks {
        let ok_a = advance(spec.method, &mut a, coeffs, spec.dt, renorm_interval);
        let ok_b = advance(spec.method, &mut b, coeffs, spec.dt, renorm_interval);
        if !(ok_a && ok_b) {
            return Err(AnalysisError::Diverged { time: spec.t0 + ((block + 1) * renorm_interval) as f64 * spec.dt });
        }
        let delta = b - a;
        let d = delta.norm();
        if d == 0.0 || !d.is_finite() {
            return Err(AnalysisError::Degenerate);
        }
        if block >= skip {
            sum += (d / separation).ln();
        }
        b = a + (separation / d) * delta;
        if b == a {
            return Err(AnalysisError::Degenerate);
        }
    }
    let elapsed = (blocks - skip) as f64 * renorm_interval as f64 * spec.dt;
    Ok(sum / elapsed)
}

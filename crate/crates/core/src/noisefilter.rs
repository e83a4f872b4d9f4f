//! Measurement noise on the system outputs and the low-pass filters that
//! recover them.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::integrate::{integrate, IntegrateError, SimSpec, Trajectory};
use crate::model::{Coefficients, Component};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("noise amplitude must be finite and >= 0, got {0}")]
    Amplitude(f64),
    #[error("moving-average window must be at least 1")]
    Window,
    #[error("one-pole alpha must lie in (0, 1], got {0}")]
    Alpha(f64),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseDistribution {
    #[default]
    Gaussian,
    Uniform,
}

impl NoiseDistribution {
    pub fn name(self) -> &'static str {
        match self {
            NoiseDistribution::Gaussian => "gaussian",
            NoiseDistribution::Uniform => "uniform",
        }
    }
}

impl fmt::Display for NoiseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseDistribution {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(NoiseDistribution::Gaussian),
            "uniform" => Ok(NoiseDistribution::Uniform),
            other => Err(format!("unknown noise distribution '{other}' (expected gaussian or uniform)")),
        }
    }
}

/// Additive, zero-mean measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    /// Standard deviation (gaussian) or half-width (uniform).
    pub amplitude: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.amplitude.is_finite() && self.amplitude >= 0.0 {
            Ok(())
        } else {
            Err(FilterError::Amplitude(self.amplitude))
        }
    }
}

/// Per-channel constants XORed into the seed so that channels draw from
/// independent streams.
pub const CHANNEL_SEED_MIX: [u64; 3] = [0x9E37_79B9_7F4A_7C15, 0xC2B2_AE3D_27D4_EB4F, 0x1656_67B1_9E37_79F9];

/// Noisy copies of the three channels of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl ChannelSeries {
    pub fn get(&self, c: Component) -> &[f64] {
        match c {
            Component::X => &self.x,
            Component::Y => &self.y,
            Component::Z => &self.z,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> ChannelSeries {
        ChannelSeries { x: f(&self.x), y: f(&self.y), z: f(&self.z) }
    }

    /// Rebuilds a trajectory on the given time base.
    pub fn to_trajectory(&self, t0: f64, dt: f64) -> Trajectory {
        let samples = (0..self.len()).map(|k| crate::model::StateVec::new(self.x[k], self.y[k], self.z[k])).collect();
        Trajectory { t0, dt, samples, diverged_at: None }
    }
}

fn noisy_channel(clean: &[f64], spec: &NoiseSpec, mix: u64) -> Vec<f64> {
    if spec.amplitude == 0.0 {
        return clean.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ mix);
    clean
        .iter()
        .map(|&v| {
            let e = match spec.distribution {
                NoiseDistribution::Gaussian => {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    spec.amplitude * n
                }
                NoiseDistribution::Uniform => spec.amplitude * rng.random_range(-1.0..=1.0),
            };
            v + e
        })
        .collect()
}

/// Adds independent noise to every sample of every channel. Channel `i`
/// draws from a ChaCha8 stream seeded with `seed ^ CHANNEL_SEED_MIX[i]`.
pub fn add_noise(traj: &Trajectory, spec: &NoiseSpec) -> Result<ChannelSeries, FilterError> {
    spec.validate()?;
    let ch = |c: Component, i: usize| noisy_channel(&traj.channel(c), spec, CHANNEL_SEED_MIX[i]);
    Ok(ChannelSeries { x: ch(Component::X, 0), y: ch(Component::Y, 1), z: ch(Component::Z, 2) })
}

/// Low-pass filter applied independently to each channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    MovingAverage { window: usize },
    OnePole { alpha: f64 },
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), FilterError> {
        match *self {
            FilterSpec::MovingAverage { window: 0 } => Err(FilterError::Window),
            FilterSpec::OnePole { alpha } if !(alpha > 0.0 && alpha <= 1.0) => Err(FilterError::Alpha(alpha)),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, series: &[f64]) -> Result<Vec<f64>, FilterError> {
        match *self {
            FilterSpec::MovingAverage { window } => filter_moving_average(series, window),
            FilterSpec::OnePole { alpha } => filter_one_pole(series, alpha),
        }
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterSpec::MovingAverage { window } => write!(f, "moving_average(window={window})"),
            FilterSpec::OnePole { alpha } => write!(f, "one_pole(alpha={alpha})"),
        }
    }
}

/// Causal moving average over the last `window` samples; the first
/// `window - 1` outputs average over the samples available so far.
pub fn filter_moving_average(series: &[f64], window: usize) -> Result<Vec<f64>, FilterError> {
    if window == 0 {
        return Err(FilterError::Window);
    }
    // Averaging deviations from the newest sample keeps constant input
    // bit-exact; a running sum would not.
    Ok((0..series.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(window);
            let w = &series[lo..=k];
            let anchor = series[k];
            anchor + w.iter().map(|v| v - anchor).sum::<f64>() / w.len() as f64
        })
        .collect())
}

/// First-order recursive low-pass, `y[k] = alpha*u[k] + (1-alpha)*y[k-1]`,
/// started at `y[0] = u[0]`.
pub fn filter_one_pole(series: &[f64], alpha: f64) -> Result<Vec<f64>, FilterError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FilterError::Alpha(alpha));
    }
    if alpha == 1.0 {
        return Ok(series.to_vec());
    }
    let mut out = Vec::with_capacity(series.len());
    let mut prev = match series.first() {
        Some(&v) => v,
        None => return Ok(out),
    };
    out.push(prev);
    // prev + alpha*(u - prev) is the same recursion and leaves a constant
    // input exactly unchanged.
    for &u in &series[1..] {
        prev += alpha * (u - prev);
        out.push(prev);
    }
    Ok(out)
}

/// Clean, noisy, and filtered signals of one run on a shared time base.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredRun {
    pub clean: Trajectory,
    pub noisy: ChannelSeries,
    pub filtered: ChannelSeries,
    pub noise_spec: NoiseSpec,
    pub filter_spec: FilterSpec,
}

/// Integrate, add measurement noise, and filter each channel.
pub fn pipeline(
    spec: &SimSpec,
    coeffs: &Coefficients,
    noise: &NoiseSpec,
    filt: &FilterSpec,
) -> Result<FilteredRun, FilterError> {
    noise.validate()?;
    filt.validate()?;
    let clean = integrate(spec, coeffs)?;
    let noisy = add_noise(&clean, noise)?;
    let filtered = noisy.map(|s| filt.apply(s).expect("filter spec validated"));
    Ok(FilteredRun { clean, noisy, filtered, noise_spec: *noise, filter_spec: *filt })
}

/// Root-mean-square difference of two equal-length slices.
pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64).sqrt()
}

//! Flat `key = value` run configuration.
//!
//! One entry per line; `#` starts a comment that runs to end of line; blank
//! lines are ignored. Unknown and repeated keys are errors.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `preset` | `fig12`, `fig13` or `all_ones` | |
//! | `c1`..`c4` | explicit coefficients (all four, instead of `preset`) | |
//! | `method` | `rk4` or `heun` | `rk4` |
//! | `t0`, `t_end`, `dt` | time span and step | `0`, `100`, `0.001` |
//! | `x0`, `y0`, `z0` | initial state | `0` |
//! | `noise` | `gaussian` or `uniform` | `gaussian` |
//! | `noise_amplitude` | standard deviation / half-width (required with any `noise*` key) | |
//! | `noise_seed` | 64-bit seed | `0` |
//! | `filter` | `moving_average` or `one_pole` | |
//! | `filter_window`, `filter_alpha` | filter knob matching `filter` | |
//! | `sweep_param` | `c1`..`c4` (required with any `sweep_*` key) | |
//! | `sweep_lo`, `sweep_hi` | closed sweep range | |
//! | `sweep_count` | number of values | `100` |
//! | `sweep_component` | `x`, `y` or `z` | `x` |
//! | `out_trajectory`, `out_report`, `out_plot`, `out_bifurcation` | output paths | |

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::analysis::SweepSpec;
use crate::integrate::{Method, SimSpec, DEFAULT_DT, DEFAULT_T_END};
use crate::model::{preset, CoefficientName, Coefficients, Component, PresetId, StateVec};
use crate::noisefilter::{FilterSpec, NoiseDistribution, NoiseSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("{key}: {message}")]
    Constraint { key: String, message: String },
}

impl ConfigError {
    fn constraint(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Constraint { key: key.to_string(), message: message.into() }
    }

    /// The key an error refers to, when it refers to one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. } | ConfigError::Constraint { key, .. } => Some(key),
            ConfigError::Parse { .. } => None,
        }
    }
}

const KEYS: &[&str] = &[
    "preset",
    "c1",
    "c2",
    "c3",
    "c4",
    "method",
    "t0",
    "t_end",
    "dt",
    "x0",
    "y0",
    "z0",
    "noise",
    "noise_amplitude",
    "noise_seed",
    "filter",
    "filter_window",
    "filter_alpha",
    "sweep_param",
    "sweep_lo",
    "sweep_hi",
    "sweep_count",
    "sweep_component",
    "out_trajectory",
    "out_report",
    "out_plot",
    "out_bifurcation",
];

pub const DEFAULT_SWEEP_COUNT: usize = 100;

/// Where the coefficients of a run come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientSource {
    Preset(PresetId),
    Explicit(Coefficients),
}

impl CoefficientSource {
    pub fn resolve(&self) -> Coefficients {
        match self {
            CoefficientSource::Preset(id) => preset(*id).0,
            CoefficientSource::Explicit(c) => *c,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OutputPaths {
    pub trajectory: Option<String>,
    pub report: Option<String>,
    pub plot: Option<String>,
    pub bifurcation: Option<String>,
}

/// A fully defaulted run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub coefficients: CoefficientSource,
    pub sim: SimSpec,
    pub noise: Option<NoiseSpec>,
    pub filter: Option<FilterSpec>,
    pub sweep: Option<SweepSpec>,
    pub outputs: OutputPaths,
}

struct Entries {
    map: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn any_with_prefix(&self, prefix: &str) -> bool {
        self.map.keys().any(|k| k.starts_with(prefix))
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| ConfigError::Parse { line, message: format!("{key}: invalid value '{v}': {e}") }),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v = self.parsed::<f64>(key)?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::constraint(key, format!("must be finite, got {x}"))),
            _ => Ok(v),
        }
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected 'key = value', found '{content}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let known =
            KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_string() })?;
        if value.is_empty() {
            return Err(ConfigError::Parse { line, message: format!("{key}: missing value") });
        }
        if map.insert(*known, (line, value.to_string())).is_some() {
            return Err(ConfigError::Parse { line, message: format!("{key}: repeated key") });
        }
    }
    Ok(Entries { map })
}

/// Parses a configuration file into a fully defaulted [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;

    let coefficients = coefficient_source(&e)?;

    let t0 = e.real("t0")?.unwrap_or(0.0);
    let t_end = e.real("t_end")?.unwrap_or(DEFAULT_T_END);
    let dt = e.real("dt")?.unwrap_or(DEFAULT_DT);
    let method = e.parsed::<Method>("method")?.unwrap_or_default();
    let initial =
        StateVec::new(e.real("x0")?.unwrap_or(0.0), e.real("y0")?.unwrap_or(0.0), e.real("z0")?.unwrap_or(0.0));
    let sim = SimSpec::new(t0, t_end, dt, method, initial);
    check_sim(&sim)?;

    let noise = noise_block(&e)?;
    let filter = filter_block(&e)?;
    let sweep = sweep_block(&e, &coefficients.resolve())?;
    let path = |k: &str| e.raw(k).map(|(_, v)| v.to_string());
    let outputs = OutputPaths {
        trajectory: path("out_trajectory"),
        report: path("out_report"),
        plot: path("out_plot"),
        bifurcation: path("out_bifurcation"),
    };
    Ok(RunConfig { coefficients, sim, noise, filter, sweep, outputs })
}

fn coefficient_source(e: &Entries) -> Result<CoefficientSource, ConfigError> {
    let names = ["c1", "c2", "c3", "c4"];
    let mut values = [None; 4];
    for (slot, name) in values.iter_mut().zip(names) {
        *slot = e.real(name)?;
        if let Some(v) = *slot {
            if (name == "c3" || name == "c4") && v == 0.0 {
                return Err(ConfigError::constraint(name, "must be nonzero (divides the vector field)"));
            }
        }
    }
    let any_explicit = values.iter().any(Option::is_some);
    match (e.parsed::<PresetId>("preset")?, any_explicit) {
        (Some(_), true) => Err(ConfigError::constraint("preset", "cannot be combined with explicit c1..c4")),
        (Some(id), false) => Ok(CoefficientSource::Preset(id)),
        (None, true) => {
            if let Some(missing) = names.iter().zip(values).find(|(_, v)| v.is_none()) {
                return Err(ConfigError::constraint(missing.0, "explicit coefficients need all of c1..c4"));
            }
            let [c1, c2, c3, c4] = values.map(|v| v.expect("checked above"));
            let c = Coefficients::new(c1, c2, c3, c4).map_err(|err| ConfigError::constraint("c1", err.to_string()))?;
            Ok(CoefficientSource::Explicit(c))
        }
        (None, false) => Err(ConfigError::constraint("preset", "either preset or all of c1..c4 is required")),
    }
}

/// Validates a [`SimSpec`], naming the offending key.
pub fn check_sim(sim: &SimSpec) -> Result<(), ConfigError> {
    use crate::integrate::IntegrateError;
    match sim.step_count() {
        Ok(_) => Ok(()),
        Err(IntegrateError::InvalidSpec { field, reason }) => {
            let key = if field == "initial" { "x0" } else { field };
            Err(ConfigError::constraint(key, reason))
        }
        Err(IntegrateError::StepCapExceeded { steps, cap }) => {
            Err(ConfigError::constraint("dt", format!("run needs {steps} steps, above the cap of {cap}")))
        }
        Err(other) => Err(ConfigError::constraint("dt", other.to_string())),
    }
}

fn noise_block(e: &Entries) -> Result<Option<NoiseSpec>, ConfigError> {
    if !e.any_with_prefix("noise") {
        return Ok(None);
    }
    let distribution = e.parsed::<NoiseDistribution>("noise")?.unwrap_or_default();
    let amplitude = e
        .real("noise_amplitude")?
        .ok_or_else(|| ConfigError::constraint("noise_amplitude", "required when noise is configured"))?;
    if amplitude < 0.0 {
        return Err(ConfigError::constraint("noise_amplitude", format!("must be >= 0, got {amplitude}")));
    }
    let seed = e.parsed::<u64>("noise_seed")?.unwrap_or(0);
    Ok(Some(NoiseSpec { distribution, amplitude, seed }))
}

fn filter_block(e: &Entries) -> Result<Option<FilterSpec>, ConfigError> {
    if !e.any_with_prefix("filter") {
        return Ok(None);
    }
    let kind = e.raw("filter").map(|(_, v)| v);
    match kind {
        Some("moving_average") => {
            if e.has("filter_alpha") {
                return Err(ConfigError::constraint("filter_alpha", "not used by moving_average"));
            }
            let window = e
                .parsed::<usize>("filter_window")?
                .ok_or_else(|| ConfigError::constraint("filter_window", "required for moving_average"))?;
            if window == 0 {
                return Err(ConfigError::constraint("filter_window", "must be at least 1"));
            }
            Ok(Some(FilterSpec::MovingAverage { window }))
        }
        Some("one_pole") => {
            if e.has("filter_window") {
                return Err(ConfigError::constraint("filter_window", "not used by one_pole"));
            }
            let alpha = e
                .real("filter_alpha")?
                .ok_or_else(|| ConfigError::constraint("filter_alpha", "required for one_pole"))?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(ConfigError::constraint("filter_alpha", format!("must lie in (0, 1], got {alpha}")));
            }
            Ok(Some(FilterSpec::OnePole { alpha }))
        }
        Some(other) => {
            let line = e.raw("filter").map(|(l, _)| l).unwrap_or(0);
            Err(ConfigError::Parse { line, message: format!("filter: unknown kind '{other}'") })
        }
        None => Err(ConfigError::constraint("filter", "required with filter_window or filter_alpha")),
    }
}

fn sweep_block(e: &Entries, base: &Coefficients) -> Result<Option<SweepSpec>, ConfigError> {
    if !e.any_with_prefix("sweep_") {
        return Ok(None);
    }
    let parameter = e
        .parsed::<CoefficientName>("sweep_param")?
        .ok_or_else(|| ConfigError::constraint("sweep_param", "required when a sweep is configured"))?;
    let lo = e.real("sweep_lo")?.ok_or_else(|| ConfigError::constraint("sweep_lo", "required"))?;
    let hi = e.real("sweep_hi")?.ok_or_else(|| ConfigError::constraint("sweep_hi", "required"))?;
    let count = e.parsed::<usize>("sweep_count")?.unwrap_or(DEFAULT_SWEEP_COUNT);
    let component = e.parsed::<Component>("sweep_component")?.unwrap_or(Component::X);
    let sweep = SweepSpec { parameter, lo, hi, count, component };
    check_sweep(&sweep, base)?;
    Ok(Some(sweep))
}

/// Validates a sweep against its base coefficients, naming the offending key.
pub fn check_sweep(sweep: &SweepSpec, base: &Coefficients) -> Result<(), ConfigError> {
    if sweep.count < 2 {
        return Err(ConfigError::constraint("sweep_count", "must be at least 2"));
    }
    if sweep.lo.partial_cmp(&sweep.hi) != Some(std::cmp::Ordering::Less) {
        return Err(ConfigError::constraint(
            "sweep_hi",
            format!("must exceed sweep_lo ({} >= {})", sweep.lo, sweep.hi),
        ));
    }
    sweep.validate(base).map(|_| ()).map_err(|err| ConfigError::constraint("sweep_lo", err.to_string()))
}

/// Writes `config` back in canonical form: every key that has a value,
/// in a fixed order, defaults included.
pub fn emit_config(config: &RunConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    match config.coefficients {
        CoefficientSource::Preset(id) => kv("preset", id.to_string()),
        CoefficientSource::Explicit(c) => {
            for (name, v) in ["c1", "c2", "c3", "c4"].iter().zip(c.to_array()) {
                kv(name, format!("{v:?}"));
            }
        }
    }
    let s = &config.sim;
    kv("method", s.method.to_string());
    kv("t0", format!("{:?}", s.t0));
    kv("t_end", format!("{:?}", s.t_end));
    kv("dt", format!("{:?}", s.dt));
    kv("x0", format!("{:?}", s.initial.x));
    kv("y0", format!("{:?}", s.initial.y));
    kv("z0", format!("{:?}", s.initial.z));
    if let Some(n) = &config.noise {
        kv("noise", n.distribution.to_string());
        kv("noise_amplitude", format!("{:?}", n.amplitude));
        kv("noise_seed", n.seed.to_string());
    }
    match config.filter {
        Some(FilterSpec::MovingAverage { window }) => {
            kv("filter", "moving_average".into());
            kv("filter_window", window.to_string());
        }
        Some(FilterSpec::OnePole { alpha }) => {
            kv("filter", "one_pole".into());
            kv("filter_alpha", format!("{alpha:?}"));
        }
        None => {}
    }
    if let Some(sw) = &config.sweep {
        kv("sweep_param", sw.parameter.to_string());
        kv("sweep_lo", format!("{:?}", sw.lo));
        kv("sweep_hi", format!("{:?}", sw.hi));
        kv("sweep_count", sw.count.to_string());
        kv("sweep_component", sw.component.to_string());
    }
    let o = &config.outputs;
    for (k, v) in [
        ("out_trajectory", &o.trajectory),
        ("out_report", &o.report),
        ("out_plot", &o.plot),
        ("out_bifurcation", &o.bifurcation),
    ] {
        if let Some(p) = v {
            kv(k, p.clone());
        }
    }
    out
}

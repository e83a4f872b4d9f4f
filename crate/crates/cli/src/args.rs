use std::path::PathBuf;

use clap::Args;
use regimelab::io::{check_sim, parse_config, CoefficientSource, ConfigError, RunConfig};
use regimelab::model::{CoefficientName, Coefficients, PresetId};
use regimelab::{Method, SimSpec, StateVec};

use crate::CliError;

/// Flags shared by every command that runs a simulation. Explicit
/// coefficient flags override the preset (or config) field by field.
#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Run configuration file (flat `key = value`); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Coefficient preset: fig12, fig13 or all_ones.
    #[arg(long, alias = "base")]
    pub preset: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c4: Option<f64>,
    /// Integrator: rk4 or heun.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    #[arg(long = "t-end", allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z0: Option<f64>,
    /// Directory for output files with default names.
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

/// A configuration with flags applied and coefficients resolved.
pub struct Resolved {
    pub config: RunConfig,
    pub coeffs: Coefficients,
}

fn constraint(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::Constraint { key: key.to_string(), message: message.into() })
}

impl SimArgs {
    /// Loads the config file (if any), applies flags, and validates.
    /// `default_preset` is used when neither a config, a preset, nor a
    /// complete set of explicit coefficients is given.
    pub fn resolve(&self, default_preset: Option<PresetId>) -> Result<Resolved, CliError> {
        let base = match &self.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                Some(parse_config(&text)?)
            }
            None => None,
        };

        let preset = self
            .preset
            .as_deref()
            .map(|p| p.parse::<PresetId>().map_err(|e| constraint("preset", e.to_string())))
            .transpose()?;
        let overrides = [
            (CoefficientName::C1, self.c1),
            (CoefficientName::C2, self.c2),
            (CoefficientName::C3, self.c3),
            (CoefficientName::C4, self.c4),
        ];

        let source = match (preset, &base) {
            (Some(id), _) => Some(CoefficientSource::Preset(id)),
            (None, Some(cfg)) => Some(cfg.coefficients),
            (None, None) => None,
        };
        let mut values: [Option<f64>; 4] = match source {
            Some(src) => src.resolve().to_array().map(Some),
            None if overrides.iter().any(|(_, v)| v.is_some()) => [None; 4],
            None => match default_preset {
                Some(id) => regimelab::preset(id).0.to_array().map(Some),
                None => return Err(constraint("preset", "give --preset, --config, or all of --c1..--c4")),
            },
        };
        for (i, (name, v)) in overrides.iter().enumerate() {
            if let Some(v) = v {
                if name.is_divisor() && *v == 0.0 {
                    return Err(constraint(name.name(), "must be nonzero (divides the vector field)"));
                }
                values[i] = Some(*v);
            }
        }
        let mut arr = [0.0; 4];
        for (i, v) in values.iter().enumerate() {
            arr[i] = v.ok_or_else(|| {
                constraint(["c1", "c2", "c3", "c4"][i], "missing; give all of --c1..--c4 or a preset")
            })?;
        }
        let coeffs = Coefficients::new(arr[0], arr[1], arr[2], arr[3]).map_err(|e| {
            let bad = arr.iter().position(|v| !v.is_finite()).unwrap_or(0);
            constraint(["c1", "c2", "c3", "c4"][bad], e.to_string())
        })?;

        let mut config = base.unwrap_or(RunConfig {
            coefficients: CoefficientSource::Explicit(coeffs),
            sim: SimSpec::default(),
            noise: None,
            filter: None,
            sweep: None,
            outputs: Default::default(),
        });
        config.coefficients = CoefficientSource::Explicit(coeffs);
        let sim = &mut config.sim;
        if let Some(m) = &self.method {
            sim.method = m.parse::<Method>().map_err(|e| constraint("method", e))?;
        }
        sim.dt = self.dt.unwrap_or(sim.dt);
        sim.t0 = self.t0.unwrap_or(sim.t0);
        sim.t_end = self.t_end.unwrap_or(sim.t_end);
        sim.initial = StateVec::new(
            self.x0.unwrap_or(sim.initial.x),
            self.y0.unwrap_or(sim.initial.y),
            self.z0.unwrap_or(sim.initial.z),
        );
        check_sim(sim)?;
        Ok(Resolved { config, coeffs })
    }
}

//! Configuration parsing, CSV emission and parsing, SVG plots.

mod config;
mod csv;
mod float;
mod svg;

use thiserror::Error;

pub use config::{
    check_sim, check_sweep, emit_config, parse_config, CoefficientSource, ConfigError, OutputPaths, RunConfig,
    DEFAULT_SWEEP_COUNT,
};
pub use csv::{
    bifurcation_metadata, read_bifurcation_csv, read_trajectory_csv, trajectory_metadata, write_bifurcation_csv,
    write_trajectory_csv, CsvBifurcation, CsvTrajectory,
};
pub use float::format_f64;
pub use svg::{render_plot_svg, write_plot_svg, PlotLabels, Series, SeriesStyle, MAX_POLYLINE_POINTS};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("no channels selected for CSV output")]
    EmptyChannels,
    #[error("nothing to plot: every series is empty")]
    EmptyPlot,
}

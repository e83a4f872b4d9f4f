//! Simulation and analysis of the three-variable system
//!
//! ```text
//! dx/dt = -x - x*y^2 + c2*z + c1
//! dy/dt = (x + x*y^2 - y) / c3
//! dz/dt = (y - z - x*y*z) / c4
//! ```
//!
//! Fixed-step Heun and RK4 integration, equilibrium search, regime
//! classification, bifurcation sweeps, largest-Lyapunov estimation, and a
//! noise-plus-filter output pipeline, with CSV/SVG/config serialization.

pub mod analysis;
pub mod integrate;
pub mod io;
pub mod model;
pub mod noisefilter;

pub use analysis::{
    bifurcation_sweep, classify_regime, detect_peaks, lyapunov_max, settle_time, AnalysisError, BifurcationDiagram,
    RegimeLabel, RegimeReport, SweepSpec, Thresholds,
};
pub use integrate::{
    convergence_order, integrate, step_heun, step_rk4, IntegrateError, Method, OrderEstimate, SimSpec, Trajectory,
};
pub use model::{
    fixed_points, preset, vector_field, CoefficientName, Coefficients, Component, FixedPoint, ModelError, PresetId,
    StateVec,
};
pub use noisefilter::{
    add_noise, filter_moving_average, filter_one_pole, pipeline, FilterError, FilterSpec, FilteredRun,
    NoiseDistribution, NoiseSpec,
};

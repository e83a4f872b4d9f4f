use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use regimelab::analysis::{DEFAULT_RENORM_INTERVAL, DEFAULT_SEPARATION};
use regimelab::io::{
    bifurcation_metadata, check_sweep, format_f64, render_plot_svg, trajectory_metadata, write_bifurcation_csv,
    write_trajectory_csv, ConfigError, PlotLabels, Series, DEFAULT_SWEEP_COUNT,
};
use regimelab::model::{CoefficientName, Component, PresetId};
use regimelab::noisefilter::rms_diff;
use regimelab::{
    bifurcation_sweep, classify_regime, convergence_order, integrate, lyapunov_max, pipeline, preset, settle_time,
    FilterSpec, Method, NoiseDistribution, NoiseSpec, OrderEstimate, SweepSpec, Thresholds, Trajectory,
};

use crate::args::SimArgs;
use crate::output::{opt_f64, provenance, target, Outputs};
use crate::CliError;

/// Settle tolerance reported alongside the regime label.
const REPORT_SETTLE_TOL: f64 = 1e-6;
/// Order windows checked by `self-test`.
const RK4_ORDER_WINDOW: (f64, f64) = (3.7, 4.3);
const HEUN_ORDER_WINDOW: (f64, f64) = (1.7, 2.3);
const SELF_TEST_T_END: f64 = 5.0;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one run; write trajectory CSV, regime report, optional SVG.
    Simulate(SimulateArgs),
    /// Sweep one coefficient; write bifurcation CSV and scatter SVG.
    Sweep(SweepArgs),
    /// Estimate the largest Lyapunov exponent and its renorm self-consistency.
    Lyapunov(LyapunovArgs),
    /// Integrate, add measurement noise, filter; write CSVs and an overlay SVG.
    FilterRun(FilterRunArgs),
    /// Print the built-in coefficient sets.
    Presets,
    /// Check integrator convergence orders.
    SelfTest,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Also write an SVG of x, y, z against time to this path.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Estimate the largest Lyapunov exponent and pass it to the classifier.
    #[arg(long = "with-lyapunov")]
    with_lyapunov: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Coefficient to sweep: c1, c2, c3 or c4.
    #[arg(long)]
    param: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    /// Component sampled on the attractor: x, y or z.
    #[arg(long)]
    component: Option<String>,
    /// Worker threads; never changes output bytes.
    #[arg(long, env = "REGIMELAB_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Steps between renormalizations.
    #[arg(long, default_value_t = DEFAULT_RENORM_INTERVAL)]
    renorm: usize,
    /// Initial separation of the perturbed trajectory.
    #[arg(long, default_value_t = DEFAULT_SEPARATION)]
    separation: f64,
}

#[derive(Debug, Args)]
pub struct FilterRunArgs {
    #[command(flatten)]
    sim: SimArgs,
    /// Noise amplitude: standard deviation (gaussian) or half-width (uniform).
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    /// gaussian or uniform.
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// One-pole smoothing factor in (0, 1].
    #[arg(long = "one-pole", allow_negative_numbers = true, conflicts_with = "window")]
    one_pole: Option<f64>,
    /// Moving-average window length.
    #[arg(long)]
    window: Option<usize>,
    /// Channel shown in the overlay plot.
    #[arg(long, default_value = "x")]
    channel: String,
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Lyapunov(a) => lyapunov(a),
        Command::FilterRun(a) => filter_run(a),
        Command::Presets => {
            print!("{}", presets_text());
            Ok(())
        }
        Command::SelfTest => self_test(),
    }
}

fn constraint(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config(ConfigError::Constraint { key: key.into(), message: message.into() })
}

fn diverged_message(traj: &Trajectory) -> Option<String> {
    traj.diverged_at.map(|k| format!("trajectory left the bound at t = {}", format_f64(traj.time(k))))
}

fn csv_bytes(traj: &Trajectory, meta: &[String]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &Component::ALL, meta, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(buf)
}

fn time_series_plot(traj: &Trajectory, title: String, meta: Vec<String>) -> Result<Vec<u8>, CliError> {
    let series: Vec<Series> = Component::ALL
        .iter()
        .map(|&c| {
            Series::line(
                c.name(),
                traj.samples.iter().enumerate().map(|(k, s)| (traj.time(k), s.component(c))).collect(),
            )
        })
        .collect();
    let labels = PlotLabels { title, x_label: "t".into(), y_label: "state".into(), metadata: meta, x_range: None };
    Ok(render_plot_svg(&series, &labels).map_err(|e| CliError::Io(e.to_string()))?.into_bytes())
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let r = a.sim.resolve(None)?;
    let spec = r.config.sim;
    let thresholds = Thresholds::default();
    let traj = integrate(&spec, &r.coeffs)?;
    let hint = if a.with_lyapunov && traj.diverged_at.is_none() {
        Some(lyapunov_max(&r.coeffs, &spec, DEFAULT_RENORM_INTERVAL, DEFAULT_SEPARATION)?)
    } else {
        None
    };
    let report = classify_regime(&traj, &r.coeffs, &thresholds, hint)?;
    let settle = settle_time(&traj, &r.coeffs, REPORT_SETTLE_TOL);

    let extra = vec![format!("with_lyapunov = {}", a.with_lyapunov)];
    let meta = provenance("simulate", &r.config, Some(&thresholds), &extra);
    let mut csv_meta = meta.clone();
    csv_meta.extend(trajectory_metadata(&traj));

    let last = traj.last();
    let mut text = String::new();
    for m in &meta {
        let _ = writeln!(text, "# {m}");
    }
    let fields = [
        ("label", report.label.to_string()),
        ("final_residual", format_f64(report.final_residual)),
        ("peak_count", report.peak_count.to_string()),
        ("peak_spacing_cv", format_f64(report.peak_spacing_cv)),
        ("amplitude_trend", format_f64(report.amplitude_trend)),
        ("lyapunov_hint", opt_f64(report.lyapunov_hint)),
        ("component", report.component.to_string()),
        ("settle_tolerance", format_f64(REPORT_SETTLE_TOL)),
        ("settle_time", opt_f64(settle)),
        ("samples", traj.len().to_string()),
        ("diverged_at", opt_f64(traj.diverged_at.map(|k| traj.time(k)))),
        ("final_x", format_f64(last.x)),
        ("final_y", format_f64(last.y)),
        ("final_z", format_f64(last.z)),
    ];
    for (k, v) in fields {
        let _ = writeln!(text, "{k}: {v}");
    }

    let outs = &r.config.outputs;
    let mut files = Outputs::new(a.sim.force);
    files.add(target(&outs.trajectory, &a.sim.out_dir, "trajectory.csv"), csv_bytes(&traj, &csv_meta)?);
    files.add(target(&outs.report, &a.sim.out_dir, "report.txt"), text.into_bytes());
    let plot = a.plot.or_else(|| outs.plot.as_ref().map(PathBuf::from));
    if let Some(p) = plot {
        files.add(p, time_series_plot(&traj, format!("trajectory ({})", report.label), meta)?);
    }
    for p in files.write_all()? {
        println!("wrote {}", p.display());
    }
    println!("label: {}", report.label);
    match diverged_message(&traj) {
        Some(m) => Err(CliError::Diverged(m)),
        None => Ok(()),
    }
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut r = a.sim.resolve(Some(PresetId::Fig13))?;
    let base = r.coeffs;
    let from_config = r.config.sweep;
    let parameter = match (&a.param, from_config) {
        (Some(p), _) => p.parse::<CoefficientName>().map_err(|e| constraint("sweep_param", e))?,
        (None, Some(s)) => s.parameter,
        (None, None) => return Err(constraint("sweep_param", "missing; pass --param")),
    };
    let component = match (&a.component, from_config) {
        (Some(c), _) => c.parse::<Component>().map_err(|e| constraint("sweep_component", e))?,
        (None, Some(s)) => s.component,
        (None, None) => Component::X,
    };
    let pick = |flag: Option<f64>, cfg: Option<f64>, key: &str| {
        flag.or(cfg).ok_or_else(|| constraint(key, format!("missing; pass --{}", &key[6..])))
    };
    let sweep = SweepSpec {
        parameter,
        lo: pick(a.lo, from_config.map(|s| s.lo), "sweep_lo")?,
        hi: pick(a.hi, from_config.map(|s| s.hi), "sweep_hi")?,
        count: a.count.or(from_config.map(|s| s.count)).unwrap_or(DEFAULT_SWEEP_COUNT),
        component,
    };
    check_sweep(&sweep, &base)?;
    r.config.sweep = Some(sweep);

    let workers = match a.workers {
        Some(0) => return Err(constraint("workers", "must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))?;
    let spec = r.config.sim;
    let diagram = pool.install(|| bifurcation_sweep(&sweep, &base, &spec))?;

    let meta = provenance("sweep", &r.config, None, &[]);
    let mut csv_meta = meta.clone();
    csv_meta.extend(bifurcation_metadata(&diagram));
    let mut csv = Vec::new();
    write_bifurcation_csv(&diagram, &csv_meta, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;

    let points: Vec<(f64, f64)> = diagram.points().collect();
    let labels = PlotLabels {
        title: format!("bifurcation diagram: {} over {}", component, parameter),
        x_label: parameter.to_string(),
        y_label: format!("{component} at peaks"),
        metadata: meta,
        x_range: Some((sweep.lo, sweep.hi)),
    };
    let series = [Series::scatter(component.name(), points)];
    let svg = render_plot_svg(&series, &labels).map_err(|e| CliError::Io(e.to_string()))?;

    let outs = &r.config.outputs;
    let mut files = Outputs::new(a.sim.force);
    files.add(target(&outs.bifurcation, &a.sim.out_dir, "bifurcation.csv"), csv);
    files.add(target(&outs.plot, &a.sim.out_dir, "bifurcation.svg"), svg.into_bytes());
    for p in files.write_all()? {
        println!("wrote {}", p.display());
    }
    let diverged = diagram.diverged.iter().filter(|d| **d).count();
    println!("points: {}, attractor samples: {}, diverged: {}", sweep.count, diagram.points().count(), diverged);
    Ok(())
}

fn lyapunov(a: LyapunovArgs) -> Result<(), CliError> {
    if a.renorm < 2 {
        return Err(constraint("renorm", "must be at least 2 so that halving stays positive"));
    }
    if !(a.separation.is_finite() && a.separation > 0.0) {
        return Err(constraint("separation", "must be finite and positive"));
    }
    let r = a.sim.resolve(None)?;
    let spec = r.config.sim;
    let est = lyapunov_max(&r.coeffs, &spec, a.renorm, a.separation)?;
    let halved = lyapunov_max(&r.coeffs, &spec, a.renorm / 2, a.separation)?;
    println!("lyapunov_max: {}", format_f64(est));
    println!("renorm_interval: {}", a.renorm);
    println!("halved_renorm_estimate: {}", format_f64(halved));
    println!("self_consistency_delta: {}", format_f64((est - halved).abs()));
    Ok(())
}

fn filter_run(a: FilterRunArgs) -> Result<(), CliError> {
    let mut r = a.sim.resolve(None)?;
    let base_noise =
        r.config.noise.unwrap_or(NoiseSpec { distribution: NoiseDistribution::Gaussian, amplitude: 0.05, seed: 0 });
    let noise = NoiseSpec {
        distribution: match &a.distribution {
            Some(d) => d.parse().map_err(|e| constraint("noise", e))?,
            None => base_noise.distribution,
        },
        amplitude: a.noise.unwrap_or(base_noise.amplitude),
        seed: a.seed.unwrap_or(base_noise.seed),
    };
    let filter = match (a.one_pole, a.window, r.config.filter) {
        (Some(alpha), _, _) => FilterSpec::OnePole { alpha },
        (None, Some(window), _) => FilterSpec::MovingAverage { window },
        (None, None, Some(f)) => f,
        (None, None, None) => FilterSpec::OnePole { alpha: 0.05 },
    };
    let channel: Component = a.channel.parse().map_err(|e| constraint("channel", e))?;
    r.config.noise = Some(noise);
    r.config.filter = Some(filter);

    let run = pipeline(&r.config.sim, &r.coeffs, &noise, &filter)?;
    let clean = &run.clean;
    let noisy = run.noisy.to_trajectory(clean.t0, clean.dt);
    let filtered = run.filtered.to_trajectory(clean.t0, clean.dt);

    let extra = vec![format!("plot_channel = {channel}")];
    let meta = provenance("filter-run", &r.config, None, &extra);
    let csv_meta = |signal: &str| {
        let mut m = meta.clone();
        m.push(format!("signal = {signal}"));
        m.extend(trajectory_metadata(clean));
        m
    };

    let times = |t: &Trajectory| -> Vec<(f64, f64)> {
        t.samples.iter().enumerate().map(|(k, s)| (t.time(k), s.component(channel))).collect()
    };
    let series = [
        Series::line("noisy", times(&noisy)),
        Series::line("filtered", times(&filtered)),
        Series::line("clean", times(clean)),
    ];
    let labels = PlotLabels {
        title: format!("{channel}: clean, noisy ({}), filtered ({filter})", noise.distribution),
        x_label: "t".into(),
        y_label: channel.to_string(),
        metadata: meta.clone(),
        x_range: None,
    };
    let svg = render_plot_svg(&series, &labels).map_err(|e| CliError::Io(e.to_string()))?;

    let dir = &a.sim.out_dir;
    let mut files = Outputs::new(a.sim.force);
    files.add(dir.join("clean.csv"), csv_bytes(clean, &csv_meta("clean"))?);
    files.add(dir.join("noisy.csv"), csv_bytes(&noisy, &csv_meta("noisy"))?);
    files.add(dir.join("filtered.csv"), csv_bytes(&filtered, &csv_meta("filtered"))?);
    files.add(target(&r.config.outputs.plot, dir, "filter.svg"), svg.into_bytes());
    for p in files.write_all()? {
        println!("wrote {}", p.display());
    }

    let half = clean.len() / 2;
    let clean_ch: Vec<f64> = clean.samples[half..].iter().map(|s| s.component(channel)).collect();
    let rms_noisy = rms_diff(&run.noisy.get(channel)[half..], &clean_ch);
    let rms_filtered = rms_diff(&run.filtered.get(channel)[half..], &clean_ch);
    println!("rms_noisy_{channel}: {}", format_f64(rms_noisy));
    println!("rms_filtered_{channel}: {}", format_f64(rms_filtered));
    match diverged_message(clean) {
        Some(m) => Err(CliError::Diverged(m)),
        None => Ok(()),
    }
}

pub fn presets_text() -> String {
    let mut out = String::new();
    for id in PresetId::ALL {
        let (c, init, t0) = preset(id);
        let [c1, c2, c3, c4] = c.to_array();
        let _ = writeln!(
            out,
            "{:<9} c1 = {c1}, c2 = {c2}, c3 = {c3}, c4 = {c4}; start ({}, {}, {}) at t = {t0}; {}",
            id.name(),
            init.x,
            init.y,
            init.z,
            id.description()
        );
    }
    out
}

fn self_test() -> Result<(), CliError> {
    let c = preset(PresetId::AllOnes).0;
    let init = preset(PresetId::AllOnes).1;
    let mut ok = true;
    for (method, (lo, hi)) in [(Method::Rk4, RK4_ORDER_WINDOW), (Method::Heun, HEUN_ORDER_WINDOW)] {
        let est = convergence_order(method, &c, init, SELF_TEST_T_END)?;
        let (shown, pass) = match est {
            OrderEstimate::Order(p) => (format!("{p:.4}"), (lo..=hi).contains(&p)),
            OrderEstimate::Degenerate => ("degenerate".to_string(), false),
        };
        ok &= pass;
        println!("{method} order {shown} in [{lo}, {hi}]: {}", if pass { "PASS" } else { "FAIL" });
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Failed("self-test failed".into()))
    }
}

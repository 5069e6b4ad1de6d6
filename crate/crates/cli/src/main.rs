//! `optomech`: weak-probe spectra, feature reports, Fano fits and time-domain
//! cross-checks for the hybrid atom-cavity optomechanical system.

mod config;
mod plot;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use optomech_core::{
    compare_with_solver, extract_features, fit_fano, mhz, preset, sweep, BranchPolicy, FanoFit,
    NormalizedGrid, OracleComparison, SpectralFeatures, Spectrum, Thresholds, PRESET_NAMES,
};
use serde::Serialize;

use crate::config::{parse_branch, parse_grid, ConfigError, RunConfig};

#[derive(Parser)]
#[command(
    name = "optomech",
    version,
    about = "Weak-probe spectra of a hybrid atom-cavity optomechanical system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the probe and write the spectrum CSV and a summary.
    Sweep(SweepArgs),
    /// Report peaks, dips, windows and Fano zeros.
    Features(FeaturesArgs),
    /// Fit a Fano profile to part of a spectrum.
    FanoFit(FitArgs),
    /// Compare the frequency-domain solver with direct time integration.
    OracleCheck(OracleArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct ModelArgs {
    /// Built-in parameter set (see `optomech presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Flat `key = value` file, frequencies in MHz.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Probe grid `start:stop:count` in units of ω_m.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<NormalizedGrid>,
    /// Steady-state branch: lowest, highest or an index.
    #[arg(long, value_parser = parse_branch)]
    branch: Option<BranchPolicy>,
    /// Override the frozen atomic inversion.
    #[arg(long, allow_hyphen_values = true)]
    sigma_z: Option<f64>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(name), _) => RunConfig::from_preset(name)?,
            (None, Some(path)) => RunConfig::load(path)?,
            (None, None) => {
                return Err(ConfigError::new("one of --preset or --config is required"))
            }
        };
        if let Some(g) = self.grid {
            cfg.grid = g;
        }
        if let Some(b) = self.branch {
            cfg.branch = b;
        }
        if let Some(s) = self.sigma_z {
            cfg.params.sigma_z_ss = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Spectrum CSV destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON destination (default: stdout when --out is given).
    #[arg(long)]
    json: Option<PathBuf>,
    /// SVG plot destination.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Fail if the selected steady state is dynamically unstable.
    #[arg(long)]
    require_stable: bool,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    dip_fraction: Option<f64>,
    #[arg(long)]
    zero_threshold: Option<f64>,
    #[arg(long)]
    asym_ratio: Option<f64>,
}

impl ThresholdArgs {
    fn apply(&self, mut t: Thresholds) -> Thresholds {
        t.dip_fraction = self.dip_fraction.unwrap_or(t.dip_fraction);
        t.zero_threshold = self.zero_threshold.unwrap_or(t.zero_threshold);
        t.asym_ratio = self.asym_ratio.unwrap_or(t.asym_ratio);
        t
    }
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Read the spectrum from a CSV written by `sweep`.
    #[arg(long, conflicts_with_all = ["preset", "config"])]
    csv: Option<PathBuf>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    /// Report destination (default: stdout).
    #[arg(long)]
    json: Option<PathBuf>,
    /// SVG plot destination.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Read the spectrum from a CSV written by `sweep`.
    #[arg(long, conflicts_with_all = ["preset", "config"])]
    csv: Option<PathBuf>,
    /// Lower window edge in units of ω_m.
    #[arg(long)]
    from: Option<f64>,
    /// Upper window edge in units of ω_m.
    #[arg(long)]
    to: Option<f64>,
    /// Fit result destination (default: stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Built-in parameter set.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Detunings `start:stop:count` in units of ω_m.
    #[arg(long, value_parser = parse_grid, default_value = "0.9:1.1:21")]
    grid: NormalizedGrid,
    #[arg(long, value_parser = parse_branch)]
    branch: Option<BranchPolicy>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_z: Option<f64>,
    /// Mechanical damping used on both sides of the comparison, MHz.
    #[arg(long, default_value_t = 0.01)]
    oracle_gamma_m: f64,
    /// Largest acceptable relative error in c₋.
    #[arg(long, default_value_t = 1e-2)]
    threshold: f64,
    /// Report destination (default: stdout).
    #[arg(long)]
    json: Option<PathBuf>,
}

/// The oracle disagreed with the solver by more than the threshold.
#[derive(Debug)]
struct ThresholdExceeded {
    max: f64,
    threshold: f64,
}

impl fmt::Display for ThresholdExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "max relative error {:.3e} exceeds threshold {:.3e}",
            self.max, self.threshold
        )
    }
}

impl std::error::Error for ThresholdExceeded {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use optomech_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<ThresholdExceeded>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e.root_cause() {
                E::InvalidParameter { .. } | E::InvalidGrid(_) | E::InvalidWindow(_) => 2,
                E::EmptySpectrum | E::MalformedCsv { .. } | E::Io(_) => 4,
                E::NoConvergence { .. } => 5,
                E::Divergence { .. } | E::NotSettled { .. } | E::InvalidPlan(_) => 6,
                _ => 3,
            };
        }
    }
    1
}

#[derive(Serialize)]
struct Counts {
    peaks: usize,
    boundary_peaks: usize,
    dips: usize,
    windows: usize,
    fano_zeros: usize,
}

impl Counts {
    fn of(f: &SpectralFeatures) -> Self {
        let peaks = f.interior_peak_count();
        Self {
            peaks,
            boundary_peaks: f.peaks.len() - peaks,
            dips: f.dips.len(),
            windows: f.windows.len(),
            fano_zeros: f.fano_zeros.len(),
        }
    }
}

#[derive(Serialize)]
struct FeatureReport<'a> {
    counts: Counts,
    features: &'a SpectralFeatures,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    name: &'a str,
    grid: NormalizedGrid,
    branch: usize,
    stable: bool,
    growth_rate: f64,
    photon_number: f64,
    counts: Counts,
    features: &'a SpectralFeatures,
}

#[derive(Serialize)]
struct FitReport {
    window: [usize; 2],
    center_over_omega_m: f64,
    peak_over_omega_m: f64,
    fit: FanoFit,
}

#[derive(Serialize)]
struct OracleReport<'a> {
    name: &'a str,
    gamma_m_mhz: f64,
    eps_p_over_omega_l: f64,
    threshold: f64,
    passed: bool,
    comparison: &'a OracleComparison,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn emit_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => create(p)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_plot(spectrum: &Spectrum, title: &str, path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        create(p)?.write_all(plot::render_svg(spectrum, title).as_bytes())?;
    }
    Ok(())
}

fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let f = File::open(path)
        .map_err(optomech_core::Error::from)
        .with_context(|| format!("cannot open {}", path.display()))?;
    Spectrum::read_csv(io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// Spectrum as written to CSV, so that in-memory and file-based reports match.
fn computed_spectrum(cfg: &RunConfig) -> Result<(optomech_core::SteadyState, Spectrum)> {
    let (ss, spectrum) = sweep(&cfg.params, &cfg.drive, &cfg.grid, cfg.branch)?;
    info!(
        "{}: branch {} of {}, n = {:.6e}, stable = {}",
        cfg.name,
        ss.branch,
        ss.all_roots.len(),
        ss.n,
        ss.stable
    );
    Ok((ss, spectrum.quantized()))
}

fn input_spectrum(model: &ModelArgs, csv: Option<&Path>) -> Result<(Spectrum, String, Thresholds)> {
    match csv {
        Some(p) => Ok((
            read_spectrum(p)?,
            p.display().to_string(),
            Thresholds::default(),
        )),
        None => {
            let cfg = model.resolve()?;
            let (_, s) = computed_spectrum(&cfg)?;
            Ok((s, cfg.name, cfg.thresholds))
        }
    }
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let cfg = a.model.resolve()?;
    let (ss, spectrum) = computed_spectrum(&cfg)?;
    if a.require_stable {
        ss.clone().require_stable()?;
    }
    match &a.out {
        Some(p) => {
            let mut w = create(p)?;
            spectrum.write_csv(&mut w)?;
            w.flush()?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            spectrum.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    let features = extract_features(&spectrum, &cfg.thresholds)?;
    let summary = SweepSummary {
        name: &cfg.name,
        grid: cfg.grid,
        branch: ss.branch,
        stable: ss.stable,
        growth_rate: ss.growth_rate,
        photon_number: ss.n,
        counts: Counts::of(&features),
        features: &features,
    };
    match (&a.json, &a.out) {
        (Some(p), _) => emit_json(&summary, Some(p))?,
        (None, Some(_)) => emit_json(&summary, None)?,
        (None, None) => {}
    }
    write_plot(&spectrum, &cfg.name, a.plot.as_deref())
}

fn run_features(a: &FeaturesArgs) -> Result<()> {
    let (spectrum, title, base) = input_spectrum(&a.model, a.csv.as_deref())?;
    let thresholds = a.thresholds.apply(base);
    let features = extract_features(&spectrum, &thresholds)?;
    let report = FeatureReport {
        counts: Counts::of(&features),
        features: &features,
    };
    emit_json(&report, a.json.as_deref())?;
    write_plot(&spectrum, &title, a.plot.as_deref())
}

/// ω_m recovered from the two detuning columns.
fn omega_m_of(s: &Spectrum) -> f64 {
    s.grid
        .iter()
        .zip(&s.normalized)
        .filter(|(_, n)| n.abs() > 0.0)
        .map(|(g, n)| g / n)
        .next()
        .unwrap_or(f64::NAN)
}

fn run_fano_fit(a: &FitArgs) -> Result<()> {
    let (spectrum, _, _) = input_spectrum(&a.model, a.csv.as_deref())?;
    let lo = a.from.unwrap_or(f64::NEG_INFINITY);
    let hi = a.to.unwrap_or(f64::INFINITY);
    if lo >= hi {
        return Err(
            ConfigError::field("--from", format!("must be below --to ({lo} ≥ {hi})")).into(),
        );
    }
    let start = spectrum
        .normalized
        .iter()
        .position(|&x| x >= lo)
        .unwrap_or(spectrum.len());
    let end = spectrum
        .normalized
        .iter()
        .rposition(|&x| x <= hi)
        .map_or(start, |i| i + 1)
        .max(start);
    let omega_m = omega_m_of(&spectrum);
    let report = |fit: FanoFit| FitReport {
        window: [start, end],
        center_over_omega_m: fit.center / omega_m,
        peak_over_omega_m: fit.peak_location() / omega_m,
        fit,
    };
    match fit_fano(&spectrum, start..end, None) {
        Ok(fit) => emit_json(&report(fit), a.json.as_deref()),
        Err(optomech_core::Error::NoConvergence { best }) => {
            emit_json(&report(*best), a.json.as_deref())?;
            Err(optomech_core::Error::NoConvergence { best }.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn run_oracle_check(a: &OracleArgs) -> Result<()> {
    let model = ModelArgs {
        preset: a.preset.clone(),
        config: a.config.clone(),
        grid: Some(a.grid),
        branch: a.branch,
        sigma_z: a.sigma_z,
    };
    let mut cfg = model.resolve()?;
    if !(a.oracle_gamma_m.is_finite() && a.oracle_gamma_m >= 0.0) {
        return Err(ConfigError::field(
            "--oracle-gamma-m",
            format!("must be ≥ 0, got {}", a.oracle_gamma_m),
        )
        .into());
    }
    cfg.params.gamma_m = mhz(a.oracle_gamma_m);
    let deltas: Vec<f64> = cfg
        .grid
        .points()
        .iter()
        .map(|x| x * cfg.params.omega_m)
        .collect();
    info!("{}: integrating {} detunings", cfg.name, deltas.len());
    let cmp = compare_with_solver(&cfg.params, &cfg.drive, &deltas, cfg.branch)?;
    let passed = cmp.max_relative_error < a.threshold;
    let report = OracleReport {
        name: &cfg.name,
        gamma_m_mhz: a.oracle_gamma_m,
        eps_p_over_omega_l: cfg.drive.eps_p / cfg.drive.omega_l_amp,
        threshold: a.threshold,
        passed,
        comparison: &cmp,
    };
    emit_json(&report, a.json.as_deref())?;
    if passed {
        Ok(())
    } else {
        Err(ThresholdExceeded {
            max: cmp.max_relative_error,
            threshold: a.threshold,
        }
        .into())
    }
}

fn run_presets() -> Result<()> {
    let mut out = io::stdout().lock();
    for name in PRESET_NAMES {
        let p = preset(name).expect("listed preset");
        writeln!(out, "{name:<14} {}", p.description)?;
    }
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("OMIT_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            ConfigError::field(
                "OMIT_THREADS",
                format!("expected a thread count, got `{v}`"),
            )
        })?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn run(cli: &Cli) -> Result<()> {
    thread_pool()?.install(|| match &cli.command {
        Command::Sweep(a) => run_sweep(a),
        Command::Features(a) => run_features(a),
        Command::FanoFit(a) => run_fano_fit(a),
        Command::OracleCheck(a) => run_oracle_check(a),
        Command::Presets => run_presets(),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

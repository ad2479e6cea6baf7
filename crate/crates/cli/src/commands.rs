//! Table-producing commands.

use std::path::Path;

use hic_core::estimators::{fit_beatnote, BeatnoteSamples, EstimatorError};
use hic_core::imperfections::{max_cooperativity, measured_outcome, ImperfectionError};
use hic_core::interaction::{build_joint_state, landscape_probability, project, CouplingParams, ModelError};
use hic_core::montecarlo::{self, predict, uniform_phases, MonteCarloError, RunConfig, RunSummary};
use hic_core::polarization::{basis_from_waveplates, PoincareBasis, PolarizationError, WaveplateSetting};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, ConfigError, Model, SweepSpec, SweepVariable};
use crate::table::{col, nullable, Column, OutputTable, TableError};

pub const TOOL: &str = "hic";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Imperfection(#[from] ImperfectionError),
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
}

impl CommandError {
    /// 1 for usage and configuration problems, 2 for everything at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn table(command: &str, config: &Config, columns: Vec<Column>) -> OutputTable {
    OutputTable::new(columns)
        .with_metadata("tool", TOOL)
        .with_metadata("version", VERSION)
        .with_metadata("command", command)
        .with_metadata("config", config.to_text())
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Basis and reported coordinates (degrees) of one sweep point.
struct SweepPoint {
    basis: Result<PoincareBasis, PolarizationError>,
    theta: f64,
    phi: f64,
    waveplates: Option<(f64, f64)>,
}

fn sweep_point(spec: &SweepSpec, x: f64) -> SweepPoint {
    let (theta, phi) = match spec.variable {
        SweepVariable::Theta => (x, spec.phi),
        SweepVariable::Phi => (spec.theta, x),
        SweepVariable::ThetaH | SweepVariable::ThetaQ => {
            let (h, q) = if spec.variable == SweepVariable::ThetaH {
                (x, spec.theta_q)
            } else {
                (spec.theta_h, x)
            };
            let basis = WaveplateSetting::new(h.to_radians(), q.to_radians())
                .and_then(|w| basis_from_waveplates(&w));
            let (theta, phi) = basis
                .as_ref()
                .map(|b| (b.theta().to_degrees(), b.phi().to_degrees()))
                .unwrap_or((f64::NAN, f64::NAN));
            return SweepPoint {
                basis,
                theta,
                phi,
                waveplates: Some((h, q)),
            };
        }
    };
    SweepPoint {
        basis: PoincareBasis::folded(theta.to_radians(), phi.to_radians()),
        theta,
        phi,
        waveplates: None,
    }
}

fn sweep_columns(spec: &SweepSpec) -> Vec<Column> {
    let waveplate = spec.variable.is_waveplate();
    let mut cols = vec![
        if waveplate { nullable("theta") } else { col("theta") },
        if waveplate { nullable("phi") } else { col("phi") },
    ];
    if waveplate {
        cols.extend([col("theta_h"), col("theta_q")]);
    }
    cols.extend([
        nullable("gain_ideal"),
        nullable("phase_ideal"),
        nullable("p1_ideal"),
        col("fock_projected"),
    ]);
    if spec.model >= Model::Imperfect {
        cols.extend([
            nullable("gain_imperfect"),
            nullable("phase_imperfect"),
            nullable("fringe_phase_imperfect"),
            nullable("p1"),
            nullable("background_fraction"),
            nullable("herald_fraction"),
            nullable("fringe_contrast"),
            nullable("g2_imperfect"),
        ]);
    }
    if spec.model == Model::MonteCarlo {
        for name in ["p1_hat", "g2_hat", "gain_hat", "phase_hat"] {
            cols.push(nullable(name));
            cols.push(nullable(&format!("{name}_se")));
        }
        cols.push(col("n_heralds"));
    }
    cols.push(col("error_flag"));
    cols
}

fn estimate_pair(e: Option<montecarlo::Estimate>) -> [f64; 2] {
    match e {
        Some(e) => [e.value, opt(e.se)],
        None => [f64::NAN; 2],
    }
}

fn mc_run_config(config: &Config, basis: PoincareBasis, seed: u64) -> RunConfig {
    RunConfig {
        seed,
        n_trials: config.montecarlo.trials,
        signal: config.signal(),
        geometry: config.geometry(),
        noise: config.noise(),
        basis,
        reference_phases: uniform_phases(config.montecarlo.bins),
        reference_amplitude: config.montecarlo.reference_amplitude,
    }
}

fn sweep_row(spec: &SweepSpec, config: &Config, index: usize, x: f64) -> Vec<f64> {
    let point = sweep_point(spec, x);
    let mut row = vec![point.theta, point.phi];
    if let Some((h, q)) = point.waveplates {
        row.extend([h, q]);
    }
    let mut error = false;
    let basis = point.basis.map_err(|_| error = true).ok();

    match basis {
        Some(b) => {
            let out = project(&build_joint_state(&config.signal(), &config.coupling()), &b);
            row.extend([opt(out.gain), opt(out.phase_shift), out.p1, flag(out.fock_projected)]);
        }
        None => row.extend([f64::NAN, f64::NAN, f64::NAN, 0.0]),
    }

    if spec.model >= Model::Imperfect {
        let measured = basis.map(|b| {
            measured_outcome(&config.signal(), &b, &config.geometry(), &config.noise(), &config.quadrature())
        });
        match measured {
            Some(Ok(m)) => {
                let g2 = m
                    .gain
                    .filter(|_| m.herald_fraction < 1.0)
                    .and_then(|g| hic_core::estimators::g2_from_gain(g, m.herald_fraction).ok());
                row.extend([
                    opt(m.gain),
                    opt(m.phase),
                    opt(m.fringe_phase),
                    m.mixture.p1_avg,
                    m.background_fraction,
                    m.herald_fraction,
                    opt(m.mixture.fringe_contrast),
                    opt(g2),
                ]);
            }
            _ => {
                error = true;
                row.extend([f64::NAN; 8]);
            }
        }
    }

    if spec.model == Model::MonteCarlo {
        let seed = config.montecarlo.seed.wrapping_add(index as u64);
        let summary: Option<RunSummary> = basis.and_then(|b| match montecarlo::run(&mc_run_config(config, b, seed)) {
            Ok(s) => Some(s),
            Err(MonteCarloError::NoHeralds(s)) => {
                error = true;
                Some(*s)
            }
            Err(_) => {
                error = true;
                None
            }
        });
        match summary {
            Some(s) => {
                row.extend(estimate_pair(s.p1_hat));
                row.extend(estimate_pair(s.g2_hat));
                row.extend(estimate_pair(s.gain_hat));
                row.extend(estimate_pair(s.phase_hat.filter(|_| !s.fringe_zero_amplitude)));
                row.push(s.n_heralds as f64);
            }
            None => {
                row.extend([f64::NAN; 8]);
                row.push(0.0);
            }
        }
    }
    row.push(flag(error));
    row
}

/// One row per sweep point; module errors set `error_flag` instead of
/// aborting. Angles in degrees, phases in radians.
pub fn run_sweep(spec: &SweepSpec, config: &Config) -> Result<OutputTable, CommandError> {
    let mut out = table("sweep", config, sweep_columns(spec));
    if spec.model == Model::MonteCarlo {
        out.metadata.push(("seed".into(), config.montecarlo.seed.to_string()));
    }
    let rows: Vec<Vec<f64>> = spec
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(i, x)| sweep_row(spec, config, i, x))
        .collect();
    for row in rows {
        out.push_row(row)?;
    }
    Ok(out)
}

/// Success probability over the target grid; unreachable targets have
/// `reachable = 0` and `p1 = nan`. Phases in degrees.
pub fn run_landscape(config: &Config) -> Result<OutputTable, CommandError> {
    let mut out = table(
        "landscape",
        config,
        vec![col("gain"), col("phase"), nullable("p1"), col("reachable")],
    );
    let signal = config.signal();
    let coupling: CouplingParams = config.coupling();
    let phases = config.landscape.phases();
    let grid: Vec<(f64, f64)> = config
        .landscape
        .gains()
        .into_iter()
        .flat_map(|g| phases.iter().map(move |&p| (g, p)))
        .collect();
    let rows: Vec<Vec<f64>> = grid
        .into_par_iter()
        .map(|(g, p)| match landscape_probability(g, p.to_radians(), &signal, &coupling) {
            Ok(p1) => vec![g, p, p1, 1.0],
            Err(_) => vec![g, p, f64::NAN, 0.0],
        })
        .collect();
    for row in rows {
        out.push_row(row)?;
    }
    Ok(out)
}

/// Derived model parameters.
pub fn run_params(config: &Config) -> Result<OutputTable, CommandError> {
    let names = [
        "n_s",
        "alpha",
        "truncated_photon_number",
        "beyond_weak_limit",
        "eta0",
        "t_re",
        "t_im",
        "eta0_geometry",
        "eta_center",
        "t_center",
        "finesse",
        "lambda",
        "w_c",
        "sigma_axial",
        "epsilon",
        "qe",
        "jitter_deg",
    ];
    let columns = names
        .iter()
        .map(|&n| if n == "eta0" { nullable(n) } else { col(n) })
        .collect();
    let mut out = table("params", config, columns);
    let signal = config.signal();
    let t = config.coupling().t();
    let geometry = config.geometry();
    let eta0_geo = max_cooperativity(&geometry);
    out.push_row(vec![
        config.n_s,
        signal.alpha().re,
        signal.truncated_photon_number(),
        flag(signal.beyond_weak_limit()),
        opt(config.coupling().eta()),
        t.re,
        t.im,
        eta0_geo,
        eta0_geo / 2.0,
        1.0 / (1.0 + eta0_geo / 2.0),
        config.finesse,
        config.wavelength,
        config.waist,
        config.sigma_axial,
        config.epsilon,
        config.qe,
        config.jitter,
    ])?;
    Ok(out)
}

/// Single click-level run at the `[montecarlo]` basis, with the analytic
/// expectation of each estimate.
pub fn run_mc(config: &Config) -> Result<(OutputTable, RunConfig), CommandError> {
    let run_config = mc_run_config(config, config.mc_basis(), config.montecarlo.seed);
    let summary = match montecarlo::run(&run_config) {
        Ok(s) => s,
        Err(MonteCarloError::NoHeralds(s)) => *s,
        Err(e) => return Err(e.into()),
    };
    let prediction = predict(&run_config)?;
    let mut cols = vec![
        col("theta"),
        col("phi"),
        col("n_trials"),
        col("n_heralds"),
        col("n_background_heralds"),
        col("herald_rate"),
        nullable("herald_rate_se"),
        col("herald_rate_expected"),
    ];
    for name in ["p1_hat", "g2_hat", "gain_hat", "phase_hat"] {
        cols.push(nullable(name));
        cols.push(nullable(&format!("{name}_se")));
        cols.push(nullable(&format!("{}_expected", name.trim_end_matches("_hat"))));
    }
    cols.push(col("fringe_zero_amplitude"));
    for k in 0..config.montecarlo.bins {
        cols.push(nullable(&format!("fringe_{k}")));
    }
    let mut out = table("mc", config, cols);
    out.metadata.push(("seed".into(), config.montecarlo.seed.to_string()));

    let mut row = vec![
        config.montecarlo.theta,
        config.montecarlo.phi,
        summary.n_trials as f64,
        summary.n_heralds as f64,
        summary.n_background_heralds as f64,
        summary.herald_rate.value,
        opt(summary.herald_rate.se),
        prediction.herald_rate,
    ];
    let phase = summary.phase_hat.filter(|_| !summary.fringe_zero_amplitude);
    for (est, expected) in [
        (summary.p1_hat, Some(prediction.port_fraction)),
        (summary.g2_hat, prediction.g2),
        (summary.gain_hat, prediction.gain),
        (phase, prediction.phase),
    ] {
        row.extend(estimate_pair(est));
        row.push(opt(expected));
    }
    row.push(flag(summary.fringe_zero_amplitude));
    row.extend(summary.conditional_fringe.iter().map(|&v| opt(v)));
    out.push_row(row)?;
    Ok((out, run_config))
}

/// Fits a `time_s,counts` CSV at reference frequency `frequency` (Hz).
pub fn run_fit_beatnote(path: &Path, frequency: f64, config: &Config) -> Result<OutputTable, CommandError> {
    let input_err = |message: String| CommandError::Input {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input_err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| input_err(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| input_err(format!("missing column '{name}'")))
    };
    let (ti, ci) = (find("time_s")?, find("counts")?);
    let mut times = Vec::new();
    let mut counts = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| input_err(e.to_string()))?;
        let field = |j: usize| -> Result<f64, CommandError> {
            record
                .get(j)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| input_err(format!("row {}: invalid number", i + 2)))
        };
        times.push(field(ti)?);
        counts.push(field(ci)?);
    }
    let fit = fit_beatnote(&BeatnoteSamples::new(times, counts, frequency)?)?;
    let mut out = table(
        "fit-beatnote",
        config,
        vec![
            col("amplitude"),
            col("amplitude_stderr"),
            col("phase"),
            nullable("phase_uncertainty"),
            col("offset"),
            col("zero_amplitude"),
        ],
    );
    out.metadata.push(("input".into(), path.display().to_string()));
    out.metadata.push(("ref_frequency".into(), crate::table::format_number(frequency)));
    let uncertainty = if fit.phase_uncertainty.is_finite() { fit.phase_uncertainty } else { f64::NAN };
    out.push_row(vec![
        fit.amplitude,
        fit.amplitude_stderr,
        fit.phase,
        uncertainty,
        fit.offset,
        flag(fit.zero_amplitude),
    ])?;
    Ok(out)
}

//! Click-level emulation of the heralding experiment.
//!
//! Each trial draws an atom-cloud position, routes one transmitted ancilla
//! photon to the heralding port `β` or its orthogonal port `β⊥` according to
//! the joint state at that cooperativity, leaks `β⊥` photons into `β` with
//! probability `ε`, and applies detector efficiency to every click. The signal
//! mode is drawn from the conditional truncated state for true heralds and
//! from the input state otherwise. Heralded trials also record a beat-note
//! count against a reference field whose phase cycles through the configured
//! bins.
//!
//! Every trial owns a ChaCha stream keyed by `(seed, trial index)`, so results
//! do not depend on how trials are split across threads.

mod tally;

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::estimators::{fit_sinusoid, g2_from_gain, gain_from_g2, EstimatorError};
use crate::imperfections::{
    cooperativity_at, measured_outcome, ApparatusGeometry, ImperfectionError, NoiseParams,
    QuadratureSpec,
};
use crate::interaction::{build_joint_state, project, CouplingParams, ModelError, SignalMode};
use crate::polarization::{arg, unit_phasor, wrap_phase, PoincareBasis};

pub use tally::Tally;

/// Detuning of the reference field, which sets the beat-note frequency.
pub const BEAT_FREQUENCY: f64 = 30e6;
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("no records to summarize")]
    EmptyRecords,
    #[error("no heralding clicks in {} trials", .0.n_trials)]
    NoHeralds(Box<RunSummary>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Imperfection(#[from] ImperfectionError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

type Result<T> = std::result::Result<T, MonteCarloError>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n_trials: u64,
    pub signal: SignalMode,
    pub geometry: ApparatusGeometry,
    pub noise: NoiseParams,
    pub basis: PoincareBasis,
    /// Reference phases of the fringe bins, strictly increasing in `[0, 2π)`.
    pub reference_phases: Vec<f64>,
    /// Reference field amplitude in units of the signal field.
    pub reference_amplitude: f64,
}

impl RunConfig {
    /// Paper apparatus at `n_s = 0.2` with 16 evenly spaced fringe bins.
    pub fn paper(basis: PoincareBasis, n_trials: u64, seed: u64) -> Self {
        Self {
            seed,
            n_trials,
            signal: SignalMode::from_mean_photon_number(0.2).expect("valid photon number"),
            geometry: ApparatusGeometry::paper(),
            noise: NoiseParams::paper(),
            basis,
            reference_phases: uniform_phases(16),
            reference_amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(MonteCarloError::InvalidConfig("n_trials must be at least 1".into()));
        }
        if self.reference_phases.is_empty() {
            return Err(MonteCarloError::InvalidConfig("reference_phases is empty".into()));
        }
        let in_range = self.reference_phases.iter().all(|p| (0.0..2.0 * PI).contains(p));
        let increasing = self.reference_phases.windows(2).all(|w| w[1] > w[0]);
        if !in_range || !increasing {
            return Err(MonteCarloError::InvalidConfig(
                "reference_phases must increase strictly within [0, 2π)".into(),
            ));
        }
        if !(self.reference_amplitude >= 0.0) || !self.reference_amplitude.is_finite() {
            return Err(MonteCarloError::InvalidConfig(
                "reference_amplitude must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.reference_phases.len()
    }
}

/// `n` evenly spaced phases `2πk/n`.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub y_sample: f64,
    pub eta: f64,
    pub signal_excited: bool,
    pub ancilla_click: bool,
    /// Implies `ancilla_click`.
    pub click_is_background: bool,
    /// Click at the orthogonal ancilla port.
    pub perp_click: bool,
    pub signal_click: bool,
    pub reference_phase_bin: usize,
    /// Beat-note detections for heralded trials, 0 otherwise.
    pub fringe_counts: u32,
}

/// RNG for one trial: ChaCha8 keyed by `seed`, stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Per-run constants shared by all trials.
struct Sampler<'a> {
    config: &'a RunConfig,
    cloud: Option<Normal<f64>>,
    jitter: Option<Normal<f64>>,
    n_in: f64,
    field_in: Complex64,
    references: Vec<Complex64>,
}

impl<'a> Sampler<'a> {
    fn new(config: &'a RunConfig) -> Self {
        let sigma = config.geometry.sigma_axial();
        let jitter = config.noise.jitter_sigma();
        Self {
            config,
            cloud: (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma")),
            jitter: (jitter > 0.0).then(|| Normal::new(0.0, jitter).expect("finite jitter")),
            n_in: config.signal.truncated_photon_number(),
            field_in: config.signal.truncated_field(),
            references: config.reference_phases.iter().map(|&p| unit_phasor(p)).collect(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, trial: u64) -> TrialRecord {
        let cfg = self.config;
        let y = self.cloud.map_or(0.0, |d| d.sample(rng));
        let eta = cooperativity_at(y, &cfg.geometry);
        let basis = match self.jitter {
            Some(d) => PoincareBasis::folded(cfg.basis.theta() + d.sample(rng), cfg.basis.phi())
                .expect("finite jittered angle"),
            None => cfg.basis,
        };
        let coupling = CouplingParams::resonant(eta).expect("non-negative cooperativity");
        let outcome = project(&build_joint_state(&cfg.signal, &coupling), &basis);

        let true_beta = rng.random::<f64>() < outcome.p1;
        let leaked = !true_beta && rng.random::<f64>() < cfg.noise.epsilon();
        let detected = rng.random::<f64>() < cfg.noise.qe();
        let at_beta = true_beta || leaked;
        let ancilla_click = at_beta && detected;

        let (n_cond, field) = match (
            true_beta,
            outcome.conditional_photon_number(),
            outcome.conditional_field(),
        ) {
            (true, Some(n), Some(a)) => (n, a),
            _ => (self.n_in, self.field_in),
        };
        let signal_excited = rng.random::<f64>() < n_cond;
        let signal_click = signal_excited && rng.random::<f64>() < cfg.noise.qe();

        let bin = (trial % self.references.len() as u64) as usize;
        let fringe_counts = if ancilla_click {
            let r = cfg.reference_amplitude;
            let rate = cfg.noise.qe() * (n_cond + r * r + 2.0 * r * (field * self.references[bin]).re);
            if rate > 0.0 {
                Poisson::new(rate).expect("finite rate").sample(rng) as u32
            } else {
                0
            }
        } else {
            0
        };

        TrialRecord {
            trial,
            y_sample: y,
            eta,
            signal_excited,
            ancilla_click,
            click_is_background: leaked && ancilla_click,
            perp_click: !at_beta && detected,
            signal_click,
            reference_phase_bin: bin,
            fringe_counts,
        }
    }
}

/// Samples trial number `trial` from its own stream.
pub fn sample_trial<R: Rng>(rng: &mut R, config: &RunConfig, trial: u64) -> TrialRecord {
    Sampler::new(config).sample(rng, trial)
}

fn chunk_ranges(n_trials: u64) -> Vec<(u64, u64)> {
    (0..n_trials.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n_trials)))
        .collect()
}

/// All trial records of a run, in trial order.
pub fn simulate(config: &RunConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let sampler = Sampler::new(config);
    let chunks: Vec<Vec<TrialRecord>> = chunk_ranges(config.n_trials)
        .into_par_iter()
        .map(|(lo, hi)| {
            (lo..hi)
                .map(|i| sampler.sample(&mut trial_rng(config.seed, i), i))
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Tally of a full run without storing records.
pub fn run_tally(config: &RunConfig) -> Result<Tally> {
    config.validate()?;
    let sampler = Sampler::new(config);
    let partials: Vec<Tally> = chunk_ranges(config.n_trials)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut tally = Tally::new(config.n_bins());
            for i in lo..hi {
                tally.push(&sampler.sample(&mut trial_rng(config.seed, i), i));
            }
            tally
        })
        .collect();
    let mut total = Tally::new(config.n_bins());
    for part in &partials {
        total.merge(part);
    }
    Ok(total)
}

pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let tally = run_tally(config)?;
    finish(summary_from_tally(&tally, config))
}

/// Summarizes stored records; equal to [`run`] on the records of the same run.
pub fn summarize(records: &[TrialRecord], config: &RunConfig) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(MonteCarloError::EmptyRecords);
    }
    finish(summary_from_tally(&Tally::from_records(config.n_bins(), records), config))
}

fn finish(summary: RunSummary) -> Result<RunSummary> {
    if summary.n_heralds == 0 {
        Err(MonteCarloError::NoHeralds(Box::new(summary)))
    } else {
        Ok(summary)
    }
}

/// A point estimate with its standard error; `se` is `None` when it cannot
/// be estimated (fewer than two heralds or a degenerate ratio).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n_trials: u64,
    pub n_heralds: u64,
    pub n_background_heralds: u64,
    /// Heralds per trial.
    pub herald_rate: Estimate,
    /// Fraction of ancilla clicks at the heralding port.
    pub p1_hat: Option<Estimate>,
    pub g2_hat: Option<Estimate>,
    pub gain_hat: Option<Estimate>,
    /// Conditional signal phase relative to the input field.
    pub phase_hat: Option<Estimate>,
    pub fringe_amplitude: Option<Estimate>,
    /// The fringe amplitude is consistent with zero; `phase_hat` is noise.
    pub fringe_zero_amplitude: bool,
    /// Mean beat-note counts per heralded trial, per bin.
    pub conditional_fringe: Vec<Option<f64>>,
    pub conditional_signal_rate: Option<f64>,
    pub unconditional_signal_rate: f64,
}

/// Covariance of the per-trial indicators `(X·H, H, X, P)`.
fn indicator_covariance(t: &Tally) -> [[f64; 4]; 4] {
    let n = t.trials as f64;
    let m_xh = t.heralded_signal_clicks as f64 / n;
    let m_h = t.heralds as f64 / n;
    let m_x = t.signal_clicks as f64 / n;
    let m_p = t.perp_clicks as f64 / n;
    let m_xp = t.perp_signal_clicks as f64 / n;
    let m = [m_xh, m_h, m_x, m_p];
    // E[V_i V_j] for the binary indicators.
    let second = [
        [m_xh, m_xh, m_xh, 0.0],
        [m_xh, m_h, m_xh, 0.0],
        [m_xh, m_xh, m_x, m_xp],
        [0.0, 0.0, m_xp, m_p],
    ];
    let mut cov = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] = second[i][j] - m[i] * m[j];
        }
    }
    cov
}

fn delta_se(grad: [f64; 4], cov: &[[f64; 4]; 4], n: f64) -> Option<f64> {
    let mut var = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    let se = (var.max(0.0) / n).sqrt();
    (se > 0.0 && se.is_finite()).then_some(se)
}

fn summary_from_tally(t: &Tally, config: &RunConfig) -> RunSummary {
    let n = t.trials.max(1) as f64;
    let enough = t.heralds >= 2;
    let cov = indicator_covariance(t);
    let m_xh = t.heralded_signal_clicks as f64 / n;
    let m_h = t.heralds as f64 / n;
    let m_x = t.signal_clicks as f64 / n;
    let m_p = t.perp_clicks as f64 / n;

    let herald_rate = Estimate {
        value: m_h,
        se: if enough { delta_se([0.0, 1.0, 0.0, 0.0], &cov, n) } else { None },
    };

    let ports = m_h + m_p;
    let p1_hat = (ports > 0.0).then(|| {
        let p = m_h / ports;
        let grad = [0.0, m_p / (ports * ports), 0.0, -m_h / (ports * ports)];
        Estimate {
            value: p,
            se: if enough { delta_se(grad, &cov, n) } else { None },
        }
    });

    let g2 = (m_h > 0.0 && m_x > 0.0).then(|| m_xh / (m_h * m_x));
    let g2_grad = g2.filter(|_| m_xh > 0.0).map(|g| [g / m_xh, -g / m_h, -g / m_x, 0.0]);
    let g2_hat = g2.map(|value| Estimate {
        value,
        se: g2_grad.filter(|_| enough).and_then(|grad| delta_se(grad, &cov, n)),
    });

    let gain_hat = match (g2, p1_hat) {
        (Some(g), Some(p)) => gain_from_g2(g, p.value).ok().map(|value| {
            let denom = 1.0 - p.value * g;
            let d_g2 = (1.0 - p.value) / (denom * denom);
            let d_p = g * (g - 1.0) / (denom * denom);
            let d_pm = [0.0, m_p / (ports * ports), 0.0, -m_h / (ports * ports)];
            let se = g2_grad.filter(|_| enough).and_then(|g2g| {
                let grad: [f64; 4] = std::array::from_fn(|i| d_g2 * g2g[i] + d_p * d_pm[i]);
                delta_se(grad, &cov, n)
            });
            Estimate { value, se }
        }),
        _ => None,
    };

    let conditional_fringe: Vec<Option<f64>> = (0..t.n_bins())
        .map(|k| (t.bin_heralds[k] > 0).then(|| t.bin_counts[k] as f64 / t.bin_heralds[k] as f64))
        .collect();
    let fringe = fit_fringe(t, config);
    let (phase_hat, fringe_amplitude, fringe_zero_amplitude) = match fringe {
        Some(fit) => (
            Some(Estimate {
                value: wrap_phase(fit.phase - arg(config.signal.alpha())),
                se: fit.phase_uncertainty.is_finite().then_some(fit.phase_uncertainty),
            }),
            Some(Estimate {
                value: fit.amplitude,
                se: Some(fit.amplitude_stderr),
            }),
            fit.zero_amplitude,
        ),
        None => (None, None, true),
    };

    RunSummary {
        n_trials: t.trials,
        n_heralds: t.heralds,
        n_background_heralds: t.background_heralds,
        herald_rate,
        p1_hat,
        g2_hat,
        gain_hat,
        phase_hat,
        fringe_amplitude,
        fringe_zero_amplitude,
        conditional_fringe,
        conditional_signal_rate: (t.heralds > 0).then(|| t.heralded_signal_clicks as f64 / t.heralds as f64),
        unconditional_signal_rate: t.signal_clicks as f64 / n,
    }
}

/// Weighted fit of the per-bin mean counts; each bin needs two heralds for
/// a sample variance.
fn fit_fringe(t: &Tally, config: &RunConfig) -> Option<crate::estimators::BeatnoteFit> {
    let mut times = Vec::new();
    let mut means = Vec::new();
    let mut variances = Vec::new();
    for k in 0..t.n_bins() {
        let h = t.bin_heralds[k];
        if h < 2 {
            return None;
        }
        let hf = h as f64;
        let sum = t.bin_counts[k] as f64;
        let mean = sum / hf;
        let sample_var = ((t.bin_counts_sq[k] as f64) - sum * mean) / (hf - 1.0);
        let floor = if mean > 0.0 { mean } else { 1.0 };
        times.push(config.reference_phases[k] / (2.0 * PI * BEAT_FREQUENCY));
        means.push(mean);
        variances.push(sample_var.max(floor) / hf);
    }
    fit_sinusoid(&times, &means, &variances, BEAT_FREQUENCY).ok()
}

/// Analytic expectation of the quantities a run estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Cloud-averaged success probability.
    pub p1_avg: f64,
    /// Expected `p1_hat`, `p1 + ε·p0`.
    pub port_fraction: f64,
    /// Expected heralds per trial.
    pub herald_rate: f64,
    pub background_fraction: f64,
    pub gain: Option<f64>,
    pub g2: Option<f64>,
    /// Expected `phase_hat`: the fringe phase, not the unit-phasor mixture.
    pub phase: Option<f64>,
    /// Expected fringe amplitude per heralded trial.
    pub fringe_amplitude: f64,
}

pub fn predict(config: &RunConfig) -> Result<Prediction> {
    let m = measured_outcome(
        &config.signal,
        &config.basis,
        &config.geometry,
        &config.noise,
        &QuadratureSpec::default(),
    )?;
    let p = m.herald_fraction;
    let g2 = match m.gain {
        Some(gain) if p < 1.0 => Some(g2_from_gain(gain, p)?),
        _ => None,
    };
    let bg = m.background_fraction;
    let field = m.mixture.mean_conditional_amplitude * (1.0 - bg) + config.signal.truncated_field() * bg;
    Ok(Prediction {
        p1_avg: m.mixture.p1_avg,
        port_fraction: p,
        herald_rate: config.noise.qe() * p,
        background_fraction: bg,
        gain: m.gain,
        g2,
        phase: m.fringe_phase,
        fringe_amplitude: 2.0 * config.noise.qe() * config.reference_amplitude * field.norm(),
    })
}

/// Event-log header.
pub const EVENT_LOG_COLUMNS: &str =
    "trial,y,eta,signal_excited,ancilla_click,background,signal_click,ref_bin,perp_click,fringe_counts";

/// One record per line, booleans as 0/1, floats in shortest round-trip form.
pub fn write_event_log<W: Write>(mut out: W, records: &[TrialRecord]) -> io::Result<()> {
    writeln!(out, "{EVENT_LOG_COLUMNS}")?;
    for r in records {
        writeln!(
            out,
            "{},{:?},{:?},{},{},{},{},{},{},{}",
            r.trial,
            r.y_sample,
            r.eta,
            u8::from(r.signal_excited),
            u8::from(r.ancilla_click),
            u8::from(r.click_is_background),
            u8::from(r.signal_click),
            r.reference_phase_bin,
            u8::from(r.perp_click),
            r.fringe_counts
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;

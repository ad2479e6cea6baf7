//! Estimators that turn detection statistics into model quantities.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::polarization::wrap_phase;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("probability {0} is outside its valid range")]
    InvalidProbability(f64),
    #[error("gain {0} must be non-negative")]
    NegativeGain(f64),
    #[error("p1·g2 = {0} ≥ 1; the correlation is saturated")]
    SaturatedCorrelation(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples span {periods:.3} beat periods, at least one is required")]
    InsufficientSpan { periods: f64 },
    #[error("sample times must be finite and strictly increasing")]
    NonMonotoneTimes,
    #[error("counts must be finite and non-negative")]
    InvalidCounts,
    #[error("variances must be finite and positive")]
    InvalidVariances,
    #[error("reference frequency {0} Hz must be finite and positive")]
    InvalidFrequency(f64),
    #[error("times and counts differ in length ({times} vs {counts})")]
    LengthMismatch { times: usize, counts: usize },
    #[error("sample times do not resolve the sinusoid")]
    SingularFit,
}

type Result<T> = std::result::Result<T, EstimatorError>;

/// Minimum number of beat-note samples.
pub const MIN_SAMPLES: usize = 8;
/// Amplitudes below this many standard errors flag the phase as meaningless.
pub const ZERO_AMPLITUDE_SIGMAS: f64 = 3.0;

/// Signal–ancilla cross-correlation for gain `G` at herald probability `p1`,
/// `g² = G / (p0 + p1·G)`.
pub fn g2_from_gain(gain: f64, p1: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p1) {
        return Err(EstimatorError::InvalidProbability(p1));
    }
    if !(gain >= 0.0) {
        return Err(EstimatorError::NegativeGain(gain));
    }
    Ok(gain / ((1.0 - p1) + p1 * gain))
}

/// Inverse of [`g2_from_gain`], `G = p0·g² / (1 − p1·g²)`.
pub fn gain_from_g2(g2: f64, p1: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p1) {
        return Err(EstimatorError::InvalidProbability(p1));
    }
    if !(g2 >= 0.0) {
        return Err(EstimatorError::NegativeGain(g2));
    }
    let saturation = p1 * g2;
    if saturation >= 1.0 {
        return Err(EstimatorError::SaturatedCorrelation(saturation));
    }
    Ok((1.0 - p1) * g2 / (1.0 - saturation))
}

/// Beat-note samples at a known reference frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatnoteSamples {
    times: Vec<f64>,
    counts: Vec<f64>,
    ref_frequency: f64,
}

impl BeatnoteSamples {
    /// Validates at least [`MIN_SAMPLES`] strictly increasing times covering
    /// one beat period. `n` evenly spaced samples cover
    /// `(t_last − t_first)·n/(n − 1)`.
    pub fn new(times: Vec<f64>, counts: Vec<f64>, ref_frequency: f64) -> Result<Self> {
        validate_axis(&times, counts.len(), ref_frequency)?;
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(EstimatorError::InvalidCounts);
        }
        Ok(Self {
            times,
            counts,
            ref_frequency,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn ref_frequency(&self) -> f64 {
        self.ref_frequency
    }
}

fn validate_axis(times: &[f64], n_values: usize, frequency: f64) -> Result<()> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(EstimatorError::InvalidFrequency(frequency));
    }
    if times.len() != n_values {
        return Err(EstimatorError::LengthMismatch {
            times: times.len(),
            counts: n_values,
        });
    }
    let n = times.len();
    if n < MIN_SAMPLES {
        return Err(EstimatorError::TooFewSamples {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EstimatorError::NonMonotoneTimes);
    }
    let periods = (times[n - 1] - times[0]) * n as f64 / (n - 1) as f64 * frequency;
    if periods < 1.0 - 1e-9 {
        return Err(EstimatorError::InsufficientSpan { periods });
    }
    Ok(())
}

/// Fit of `counts ≈ offset + amplitude·cos(2πf·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatnoteFit {
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    /// In `(−π, π]`.
    pub phase: f64,
    pub offset: f64,
    pub phase_uncertainty: f64,
    /// The amplitude is below three standard errors; `phase` is meaningless.
    pub zero_amplitude: bool,
}

/// Shot-noise weighted fit, each sample weighted by `1/max(count, 1)`.
pub fn fit_beatnote(samples: &BeatnoteSamples) -> Result<BeatnoteFit> {
    let variances: Vec<f64> = samples.counts.iter().map(|c| c.max(1.0)).collect();
    solve(&samples.times, &samples.counts, &variances, samples.ref_frequency)
}

/// Fit with caller-supplied per-sample variances (e.g. of bin means).
pub fn fit_sinusoid(times: &[f64], values: &[f64], variances: &[f64], frequency: f64) -> Result<BeatnoteFit> {
    validate_axis(times, values.len(), frequency)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EstimatorError::InvalidCounts);
    }
    if variances.len() != values.len() || variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(EstimatorError::InvalidVariances);
    }
    solve(times, values, variances, frequency)
}

fn solve(times: &[f64], values: &[f64], variances: &[f64], frequency: f64) -> Result<BeatnoteFit> {
    let omega = 2.0 * PI * frequency;
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for ((&t, &y), &var) in times.iter().zip(values).zip(variances) {
        let (s, c) = (omega * t).sin_cos();
        let row = Vector3::new(1.0, c, s);
        let w = 1.0 / var;
        normal += row * row.transpose() * w;
        rhs += row * (w * y);
    }
    let cov = normal.try_inverse().ok_or(EstimatorError::SingularFit)?;
    let beta = cov * rhs;
    let (offset, a, b) = (beta[0], beta[1], beta[2]);
    let (vaa, vbb, vab) = (cov[(1, 1)], cov[(2, 2)], cov[(1, 2)]);
    let amplitude = a.hypot(b);
    let a2 = amplitude * amplitude;
    let (amplitude_stderr, phase_uncertainty) = if amplitude > 0.0 {
        let var_amp = (a * a * vaa + b * b * vbb + 2.0 * a * b * vab) / a2;
        let var_phase = (b * b * vaa + a * a * vbb - 2.0 * a * b * vab) / (a2 * a2);
        (var_amp.max(0.0).sqrt(), var_phase.max(0.0).sqrt())
    } else {
        // Isotropic limit of the amplitude error; the phase is undetermined.
        (0.5 * (vaa + vbb).max(0.0).sqrt() * std::f64::consts::SQRT_2, f64::INFINITY)
    };
    Ok(BeatnoteFit {
        amplitude,
        amplitude_stderr,
        phase: wrap_phase((-b).atan2(a)),
        offset,
        phase_uncertainty,
        zero_amplitude: !(amplitude >= ZERO_AMPLITUDE_SIGMAS * amplitude_stderr),
    })
}

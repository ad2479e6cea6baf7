//! Run configuration in a sectioned `key = value` text format.
//!
//! ```text
//! # comment
//! [signal]
//! n_s = 0.2
//! [noise]
//! epsilon = 0.02
//! ```
//!
//! Angles are given in degrees and lengths in meters. Every key is optional
//! and defaults to the paper apparatus; `[sweep]` is only required by the
//! `sweep` command.

use std::fmt::{self, Write as _};

use hic_core::imperfections::{ApparatusGeometry, NoiseParams, QuadratureSpec, Weighting};
use hic_core::interaction::{CouplingParams, SignalMode};
use hic_core::polarization::PoincareBasis;
use hic_core::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    Syntax,
    UnknownSection,
    UnknownKey,
    DuplicateKey,
    InvalidValue,
    OutOfRange,
    MissingSection,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    /// 1-based line; `None` for whole-file problems.
    pub line: Option<usize>,
    pub key: String,
    pub kind: ConfigErrorKind,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl ConfigError {
    fn at(line: usize, key: &str, kind: ConfigErrorKind, message: String) -> Self {
        Self {
            line: Some(line),
            key: key.to_string(),
            kind,
            message,
        }
    }

    pub fn missing_section(name: &str) -> Self {
        Self {
            line: None,
            key: name.to_string(),
            kind: ConfigErrorKind::MissingSection,
            message: format!("missing required section [{name}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Theta,
    Phi,
    ThetaH,
    ThetaQ,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theta => "theta",
            Self::Phi => "phi",
            Self::ThetaH => "theta_h",
            Self::ThetaQ => "theta_q",
        }
    }

    pub fn is_waveplate(self) -> bool {
        matches!(self, Self::ThetaH | Self::ThetaQ)
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::Theta, Self::Phi, Self::ThetaH, Self::ThetaQ]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Model {
    Ideal,
    Imperfect,
    MonteCarlo,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ideal => "ideal",
            Self::Imperfect => "imperfect",
            Self::MonteCarlo => "montecarlo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Ideal, Self::Imperfect, Self::MonteCarlo]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

/// One-dimensional basis sweep. Angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
    /// Fixed values of the variables not swept.
    pub theta: f64,
    pub phi: f64,
    pub theta_h: f64,
    pub theta_q: f64,
    pub model: Model,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Theta,
            start: 0.0,
            stop: 180.0,
            n_points: 181,
            theta: 0.0,
            phi: 180.0,
            theta_h: 0.0,
            theta_q: 0.0,
            model: Model::Ideal,
        }
    }
}

impl SweepSpec {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| if i + 1 == self.n_points { self.stop } else { self.start + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

impl Spacing {
    fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Log => "log",
        }
    }
}

/// Target grid of the success-probability landscape. Phases in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeSpec {
    pub gain_min: f64,
    pub gain_max: f64,
    pub gain_points: usize,
    pub gain_spacing: Spacing,
    pub phase_min: f64,
    pub phase_max: f64,
    pub phase_points: usize,
}

impl Default for LandscapeSpec {
    fn default() -> Self {
        Self {
            gain_min: 1.0,
            gain_max: 40.0,
            gain_points: 79,
            gain_spacing: Spacing::Linear,
            phase_min: -180.0,
            phase_max: 180.0,
            phase_points: 37,
        }
    }
}

impl LandscapeSpec {
    pub fn gains(&self) -> Vec<f64> {
        let n = self.gain_points;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    return self.gain_max;
                }
                let f = i as f64 / (n - 1) as f64;
                match self.gain_spacing {
                    Spacing::Linear => self.gain_min + f * (self.gain_max - self.gain_min),
                    Spacing::Log => self.gain_min * (self.gain_max / self.gain_min).powf(f),
                }
            })
            .collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        let n = self.phase_points;
        if n == 1 {
            return vec![self.phase_min];
        }
        let step = (self.phase_max - self.phase_min) / (n - 1) as f64;
        (0..n)
            .map(|i| if i + 1 == n { self.phase_max } else { self.phase_min + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    pub seed: u64,
    pub trials: u64,
    pub bins: usize,
    pub reference_amplitude: f64,
    /// Basis of the `mc` command, degrees.
    pub theta: f64,
    pub phi: f64,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100_000,
            bins: 16,
            reference_amplitude: 1.0,
            theta: 64.0,
            phi: 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub n_s: f64,
    pub eta0: f64,
    /// Overrides `eta0` for the ideal model when set.
    pub transmission: Option<Complex64>,
    pub finesse: f64,
    pub wavelength: f64,
    pub waist: f64,
    pub sigma_axial: f64,
    pub nodes: usize,
    pub span_sigmas: f64,
    pub weighting: Weighting,
    pub epsilon: f64,
    pub qe: f64,
    /// Basis-angle jitter, degrees.
    pub jitter: f64,
    pub sweep: Option<SweepSpec>,
    pub montecarlo: MonteCarloSpec,
    pub landscape: LandscapeSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            n_s: 0.2,
            eta0: 8.6,
            transmission: None,
            finesse: ApparatusGeometry::PAPER_FINESSE,
            wavelength: ApparatusGeometry::PAPER_WAVELENGTH,
            waist: ApparatusGeometry::PAPER_WAIST,
            sigma_axial: ApparatusGeometry::PAPER_SIGMA_AXIAL,
            nodes: 201,
            span_sigmas: 4.0,
            weighting: Weighting::Heralded,
            epsilon: NoiseParams::PAPER_EPSILON,
            qe: NoiseParams::PAPER_QE,
            jitter: 0.0,
            sweep: None,
            montecarlo: MonteCarloSpec::default(),
            landscape: LandscapeSpec::default(),
        }
    }
}

impl Config {
    pub fn signal(&self) -> SignalMode {
        SignalMode::from_mean_photon_number(self.n_s).expect("validated n_s")
    }

    /// Coupling of the ideal model.
    pub fn coupling(&self) -> CouplingParams {
        match self.transmission {
            Some(t) => CouplingParams::with_transmission(t).expect("validated transmission"),
            None => CouplingParams::resonant(self.eta0).expect("validated eta0"),
        }
    }

    pub fn geometry(&self) -> ApparatusGeometry {
        ApparatusGeometry::new(self.finesse, self.wavelength, self.waist, self.sigma_axial)
            .expect("validated geometry")
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams::new(self.epsilon, self.qe, self.jitter.to_radians()).expect("validated noise")
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            nodes: self.nodes,
            span_sigmas: self.span_sigmas,
            weighting: self.weighting,
            ..QuadratureSpec::default()
        }
    }

    pub fn mc_basis(&self) -> PoincareBasis {
        PoincareBasis::folded(self.montecarlo.theta.to_radians(), self.montecarlo.phi.to_radians())
            .expect("validated angles")
    }

    /// Serializes every key; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = if k.starts_with('[') {
                writeln!(s, "{k}")
            } else {
                writeln!(s, "{k} = {v}")
            };
        };
        line("[signal]", String::new());
        line("n_s", num(self.n_s));
        line("[coupling]", String::new());
        line("eta0", num(self.eta0));
        if let Some(t) = self.transmission {
            line("t_re", num(t.re));
            line("t_im", num(t.im));
        }
        line("[geometry]", String::new());
        line("finesse", num(self.finesse));
        line("lambda", num(self.wavelength));
        line("w_c", num(self.waist));
        line("sigma_axial", num(self.sigma_axial));
        line("nodes", self.nodes.to_string());
        line("span_sigmas", num(self.span_sigmas));
        line(
            "weighting",
            match self.weighting {
                Weighting::Heralded => "heralded",
                Weighting::Uniform => "uniform",
            }
            .to_string(),
        );
        line("[noise]", String::new());
        line("epsilon", num(self.epsilon));
        line("qe", num(self.qe));
        line("jitter_deg", num(self.jitter));
        if let Some(sw) = &self.sweep {
            line("[sweep]", String::new());
            line("variable", sw.variable.name().to_string());
            line("start", num(sw.start));
            line("stop", num(sw.stop));
            line("n_points", sw.n_points.to_string());
            line("theta", num(sw.theta));
            line("phi", num(sw.phi));
            line("theta_h", num(sw.theta_h));
            line("theta_q", num(sw.theta_q));
            line("model", sw.model.name().to_string());
        }
        let mc = &self.montecarlo;
        line("[montecarlo]", String::new());
        line("seed", mc.seed.to_string());
        line("trials", mc.trials.to_string());
        line("bins", mc.bins.to_string());
        line("reference_amplitude", num(mc.reference_amplitude));
        line("theta", num(mc.theta));
        line("phi", num(mc.phi));
        let ls = &self.landscape;
        line("[landscape]", String::new());
        line("gain_min", num(ls.gain_min));
        line("gain_max", num(ls.gain_max));
        line("gain_points", ls.gain_points.to_string());
        line("gain_spacing", ls.gain_spacing.name().to_string());
        line("phase_min", num(ls.phase_min));
        line("phase_max", num(ls.phase_max));
        line("phase_points", ls.phase_points.to_string());
        s
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

const SECTIONS: [&str; 7] = ["signal", "coupling", "geometry", "noise", "sweep", "montecarlo", "landscape"];

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, kind: ConfigErrorKind, message: String) -> ConfigError {
        ConfigError::at(self.line, self.key, kind, message)
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        match self.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(
                ConfigErrorKind::InvalidValue,
                format!("{}: '{}' is not a finite number", self.key, self.value),
            )),
        }
    }

    fn in_range(&self, lo: f64, hi: f64) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v < lo || v > hi {
            return Err(self.out_of_range(format!("{v} not in [{lo}, {hi}]")));
        }
        Ok(v)
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v <= 0.0 {
            return Err(self.out_of_range(format!("{v} must be positive")));
        }
        Ok(v)
    }

    fn non_negative(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v < 0.0 {
            return Err(self.out_of_range(format!("{v} must be non-negative")));
        }
        Ok(v)
    }

    fn integer(&self, min: u64) -> Result<u64, ConfigError> {
        let v = self.value.parse::<u64>().map_err(|_| {
            self.err(
                ConfigErrorKind::InvalidValue,
                format!("{}: '{}' is not a non-negative integer", self.key, self.value),
            )
        })?;
        if v < min {
            return Err(self.out_of_range(format!("{v} must be at least {min}")));
        }
        Ok(v)
    }

    fn out_of_range(&self, detail: String) -> ConfigError {
        self.err(
            ConfigErrorKind::OutOfRange,
            format!("{} out of range: {detail}", self.key),
        )
    }

    fn choice<T>(&self, parse: impl Fn(&str) -> Option<T>, allowed: &str) -> Result<T, ConfigError> {
        parse(self.value).ok_or_else(|| {
            self.err(
                ConfigErrorKind::InvalidValue,
                format!("{}: '{}' is not one of {allowed}", self.key, self.value),
            )
        })
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut cfg = Config::default();
    let mut section: Option<&str> = None;
    let mut seen: Vec<(String, String)> = Vec::new();
    let mut sweep: Option<(usize, SweepSpec)> = None;
    let mut t_parts: (Option<f64>, Option<f64>) = (None, None);
    let mut landscape_line = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split(['#', ';']).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').map(str::trim).ok_or_else(|| {
                ConfigError::at(line, content, ConfigErrorKind::Syntax, format!("malformed section header '{content}'"))
            })?;
            let known = SECTIONS.iter().find(|s| **s == name).ok_or_else(|| {
                ConfigError::at(line, name, ConfigErrorKind::UnknownSection, format!("unknown section [{name}]"))
            })?;
            if *known == "sweep" && sweep.is_none() {
                sweep = Some((line, SweepSpec::default()));
            }
            if *known == "landscape" {
                landscape_line.get_or_insert(line);
            }
            section = Some(known);
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            ConfigError::at(line, content, ConfigErrorKind::Syntax, format!("expected 'key = value', got '{content}'"))
        })?;
        let e = Entry {
            line,
            key: key.trim(),
            value: value.trim(),
        };
        let sec = section.ok_or_else(|| {
            e.err(ConfigErrorKind::Syntax, format!("{}: key outside of any section", e.key))
        })?;
        if seen.iter().any(|(s, k)| s == sec && k == e.key) {
            return Err(e.err(ConfigErrorKind::DuplicateKey, format!("{}: duplicate key in [{sec}]", e.key)));
        }
        seen.push((sec.to_string(), e.key.to_string()));

        match (sec, e.key) {
            ("signal", "n_s") => cfg.n_s = e.in_range(0.0, 1.0)?,
            ("coupling", "eta0") => cfg.eta0 = e.non_negative()?,
            ("coupling", "t_re") => t_parts.0 = Some(e.f64()?),
            ("coupling", "t_im") => t_parts.1 = Some(e.f64()?),
            ("geometry", "finesse") => cfg.finesse = e.positive()?,
            ("geometry", "lambda") => cfg.wavelength = e.positive()?,
            ("geometry", "w_c") => cfg.waist = e.positive()?,
            ("geometry", "sigma_axial") => cfg.sigma_axial = e.non_negative()?,
            ("geometry", "nodes") => cfg.nodes = e.integer(2)? as usize,
            ("geometry", "span_sigmas") => cfg.span_sigmas = e.positive()?,
            ("geometry", "weighting") => {
                cfg.weighting = e.choice(
                    |s| match s {
                        "heralded" => Some(Weighting::Heralded),
                        "uniform" => Some(Weighting::Uniform),
                        _ => None,
                    },
                    "{heralded, uniform}",
                )?
            }
            ("noise", "epsilon") => cfg.epsilon = e.in_range(0.0, 1.0)?,
            ("noise", "qe") => cfg.qe = e.in_range(0.0, 1.0)?,
            ("noise", "jitter_deg") => cfg.jitter = e.in_range(0.0, 90.0)?,
            ("sweep", key) => {
                let sw = &mut sweep.as_mut().expect("sweep section opened").1;
                match key {
                    "variable" => sw.variable = e.choice(SweepVariable::parse, "{theta, phi, theta_h, theta_q}")?,
                    "start" => sw.start = e.f64()?,
                    "stop" => sw.stop = e.f64()?,
                    "n_points" => sw.n_points = e.integer(2)? as usize,
                    "theta" => sw.theta = e.f64()?,
                    "phi" => sw.phi = e.f64()?,
                    "theta_h" => sw.theta_h = e.f64()?,
                    "theta_q" => sw.theta_q = e.f64()?,
                    "model" => sw.model = e.choice(Model::parse, "{ideal, imperfect, montecarlo}")?,
                    _ => return Err(unknown_key(&e, sec)),
                }
            }
            ("montecarlo", "seed") => cfg.montecarlo.seed = e.integer(0)?,
            ("montecarlo", "trials") => cfg.montecarlo.trials = e.integer(1)?,
            ("montecarlo", "bins") => cfg.montecarlo.bins = e.integer(8)? as usize,
            ("montecarlo", "reference_amplitude") => cfg.montecarlo.reference_amplitude = e.non_negative()?,
            ("montecarlo", "theta") => cfg.montecarlo.theta = e.f64()?,
            ("montecarlo", "phi") => cfg.montecarlo.phi = e.f64()?,
            ("landscape", "gain_min") => cfg.landscape.gain_min = e.positive()?,
            ("landscape", "gain_max") => cfg.landscape.gain_max = e.positive()?,
            ("landscape", "gain_points") => cfg.landscape.gain_points = e.integer(2)? as usize,
            ("landscape", "gain_spacing") => {
                cfg.landscape.gain_spacing = e.choice(
                    |s| match s {
                        "linear" => Some(Spacing::Linear),
                        "log" => Some(Spacing::Log),
                        _ => None,
                    },
                    "{linear, log}",
                )?
            }
            ("landscape", "phase_min") => cfg.landscape.phase_min = e.f64()?,
            ("landscape", "phase_max") => cfg.landscape.phase_max = e.f64()?,
            ("landscape", "phase_points") => cfg.landscape.phase_points = e.integer(1)? as usize,
            _ => return Err(unknown_key(&e, sec)),
        }
    }

    cfg.transmission = match t_parts {
        (None, None) => None,
        (re, im) => {
            let t = Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0));
            if t.norm() > 1.0 {
                return Err(ConfigError {
                    line: None,
                    key: "t_re".into(),
                    kind: ConfigErrorKind::OutOfRange,
                    message: format!("t out of range: |t| = {} exceeds 1", t.norm()),
                });
            }
            Some(t)
        }
    };
    if let Some((line, sw)) = &sweep {
        if sw.start >= sw.stop {
            return Err(ConfigError::at(
                *line,
                "start",
                ConfigErrorKind::OutOfRange,
                format!("start out of range: sweep start {} must be below stop {}", sw.start, sw.stop),
            ));
        }
    }
    if let Some(line) = landscape_line {
        if cfg.landscape.gain_min >= cfg.landscape.gain_max {
            return Err(ConfigError::at(
                line,
                "gain_min",
                ConfigErrorKind::OutOfRange,
                "gain_min out of range: must be below gain_max".into(),
            ));
        }
        if cfg.landscape.phase_min > cfg.landscape.phase_max {
            return Err(ConfigError::at(
                line,
                "phase_min",
                ConfigErrorKind::OutOfRange,
                "phase_min out of range: must not exceed phase_max".into(),
            ));
        }
    }
    cfg.sweep = sweep.map(|(_, sw)| sw);
    Ok(cfg)
}

fn unknown_key(e: &Entry<'_>, section: &str) -> ConfigError {
    e.err(ConfigErrorKind::UnknownKey, format!("unknown key '{}' in [{section}]", e.key))
}

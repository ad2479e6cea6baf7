//! Experimental imperfections: inhomogeneous atom-cavity coupling, background
//! heralds from polarization impurity, detector efficiency and basis jitter.
//!
//! Coupling along the cavity standing wave is folded into an effective
//! `η₀/2`; the cloud's Gaussian extent across the cavity waist then spreads
//! the cooperativity as `η(y) = η₀/2 · exp(−2y²/w_c²)` with cloud weight
//! `exp(−y²/2σ²)`. Radial inhomogeneity is neglected.
//!
//! Mixture averages use the photon number `n′` and field `⟨a⟩` of the
//! normalized conditional states of the truncated signal, weighted by how
//! often each cooperativity class heralds.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::interaction::{
    build_joint_state, project, CouplingParams, ModelError, ProjectionOutcome, SignalMode,
};
use crate::polarization::{arg, unit_phasor, PoincareBasis, ZERO_TOL};
use crate::quadrature;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImperfectionError {
    #[error("geometry parameter {name} = {value} is invalid")]
    InvalidGeometry { name: &'static str, value: f64 },
    #[error("noise parameter {name} = {value} is outside its range")]
    InvalidNoise { name: &'static str, value: f64 },
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("no heralding weight survives the quadrature")]
    QuadratureDegenerate,
    #[error("neither true nor background clicks are possible (p1 = 0, epsilon = 0)")]
    NoClicksPossible,
    #[error("mixed phasor vanishes; the measured phase is undefined")]
    UndefinedPhase,
    #[error(transparent)]
    Model(#[from] ModelError),
}

type Result<T> = std::result::Result<T, ImperfectionError>;

/// Cavity and atomic-cloud geometry. Lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusGeometry {
    finesse: f64,
    wavelength: f64,
    waist: f64,
    sigma_axial: f64,
    eta0: f64,
}

impl ApparatusGeometry {
    pub const PAPER_FINESSE: f64 = 77.1e3;
    pub const PAPER_WAVELENGTH: f64 = 852e-9;
    pub const PAPER_WAIST: f64 = 35.5e-6;
    pub const PAPER_SIGMA_AXIAL: f64 = 50e-6;
    /// Radial cloud size; documented only, radial inhomogeneity is neglected.
    pub const PAPER_SIGMA_RADIAL: f64 = 2e-6;

    /// `sigma_axial = 0` is the point-cloud limit.
    pub fn new(finesse: f64, wavelength: f64, waist: f64, sigma_axial: f64) -> Result<Self> {
        for (name, value) in [
            ("finesse", finesse),
            ("lambda", wavelength),
            ("w_c", waist),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ImperfectionError::InvalidGeometry { name, value });
            }
        }
        if !(sigma_axial >= 0.0) || !sigma_axial.is_finite() {
            return Err(ImperfectionError::InvalidGeometry {
                name: "sigma_axial",
                value: sigma_axial,
            });
        }
        let k = 2.0 * PI / wavelength;
        let eta0 = 24.0 * finesse / PI / (k * k * waist * waist);
        Ok(Self {
            finesse,
            wavelength,
            waist,
            sigma_axial,
            eta0,
        })
    }

    pub fn paper() -> Self {
        Self::new(
            Self::PAPER_FINESSE,
            Self::PAPER_WAVELENGTH,
            Self::PAPER_WAIST,
            Self::PAPER_SIGMA_AXIAL,
        )
        .expect("paper geometry is valid")
    }

    pub fn with_sigma_axial(self, sigma_axial: f64) -> Result<Self> {
        Self::new(self.finesse, self.wavelength, self.waist, sigma_axial)
    }

    pub fn finesse(&self) -> f64 {
        self.finesse
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn sigma_axial(&self) -> f64 {
        self.sigma_axial
    }

    pub fn wavevector(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }
}

/// Maximum (antinode, on-axis) cooperativity `η₀ = 24F/π / (k²w_c²)`.
pub fn max_cooperativity(g: &ApparatusGeometry) -> f64 {
    g.eta0
}

/// Standing-wave-averaged cooperativity at transverse offset `y`.
pub fn cooperativity_at(y: f64, g: &ApparatusGeometry) -> f64 {
    0.5 * g.eta0 * (-2.0 * y * y / (g.waist * g.waist)).exp()
}

/// Unnormalized cloud density along `y`; 1 at the center.
pub fn axial_weight(y: f64, g: &ApparatusGeometry) -> f64 {
    if g.sigma_axial == 0.0 {
        return if y == 0.0 { 1.0 } else { 0.0 };
    }
    (-y * y / (2.0 * g.sigma_axial * g.sigma_axial)).exp()
}

/// Imperfection knobs of the detection path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    epsilon: f64,
    qe: f64,
    jitter_sigma: f64,
}

impl NoiseParams {
    pub const PAPER_EPSILON: f64 = 0.02;
    pub const PAPER_QE: f64 = 0.3;

    pub fn new(epsilon: f64, qe: f64, jitter_sigma: f64) -> Result<Self> {
        for (name, value) in [("epsilon", epsilon), ("qe", qe)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ImperfectionError::InvalidNoise { name, value });
            }
        }
        if !(jitter_sigma >= 0.0) || !jitter_sigma.is_finite() {
            return Err(ImperfectionError::InvalidNoise {
                name: "jitter_sigma",
                value: jitter_sigma,
            });
        }
        Ok(Self {
            epsilon,
            qe,
            jitter_sigma,
        })
    }

    pub fn paper() -> Self {
        Self {
            epsilon: Self::PAPER_EPSILON,
            qe: Self::PAPER_QE,
            jitter_sigma: 0.0,
        }
    }

    pub fn ideal() -> Self {
        Self {
            epsilon: 0.0,
            qe: 1.0,
            jitter_sigma: 0.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn qe(&self) -> f64 {
        self.qe
    }

    pub fn jitter_sigma(&self) -> f64 {
        self.jitter_sigma
    }
}

/// How the cooperativity classes are weighted inside the conditioned mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// By cloud density times heralding probability (what post-selection sees).
    #[default]
    Heralded,
    /// By cloud density only.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub nodes: usize,
    /// Half-width of the `y` window in units of `σ_axial`.
    pub span_sigmas: f64,
    pub weighting: Weighting,
    /// Gauss–Hermite order for the basis-angle jitter average.
    pub jitter_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 201,
            span_sigmas: 4.0,
            weighting: Weighting::Heralded,
            jitter_nodes: 24,
        }
    }
}

/// Heralded-ensemble average over inhomogeneous coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureOutcome {
    /// Mixture mean of the conditional field `⟨a⟩`; zero for the
    /// Fock-projected basis.
    pub mean_conditional_amplitude: Complex64,
    /// Conditional photon number relative to the unconditioned input state.
    /// `None` for a vacuum input.
    pub avg_gain: Option<f64>,
    /// `Arg` of the mean conditional field relative to `α`; `None` when the
    /// mean field vanishes.
    pub avg_phase: Option<f64>,
    /// `|mean field| / mean |field|`.
    pub fringe_contrast: Option<f64>,
    /// Cloud-averaged success probability.
    pub p1_avg: f64,
    /// Mixture mean of the conditional photon number.
    pub conditional_photon_number: f64,
    pub fock_projected: bool,
}

/// Linear sums behind a [`MixtureOutcome`]; weights combine additively.
#[derive(Debug, Clone, Copy, Default)]
struct MixtureSums {
    density: f64,
    herald: f64,
    mixture: f64,
    photons: f64,
    field: Complex64,
    field_abs: f64,
    fock: bool,
}

impl MixtureSums {
    fn add(&mut self, weight: f64, out: &ProjectionOutcome, weighting: Weighting) {
        self.density += weight;
        self.herald += weight * out.p1;
        self.fock |= out.fock_projected;
        let (n, a) = match (out.conditional_photon_number(), out.conditional_field()) {
            (Some(n), Some(a)) => (n, a),
            _ => return,
        };
        let m = match weighting {
            Weighting::Heralded => weight * out.p1,
            Weighting::Uniform => weight,
        };
        self.mixture += m;
        self.photons += m * n;
        self.field += a * m;
        self.field_abs += m * a.norm();
    }

    fn absorb(&mut self, other: &MixtureSums, weight: f64) {
        self.density += weight * other.density;
        self.herald += weight * other.herald;
        self.mixture += weight * other.mixture;
        self.photons += weight * other.photons;
        self.field += other.field * weight;
        self.field_abs += weight * other.field_abs;
        self.fock |= other.fock;
    }

    fn finish(&self, s: &SignalMode) -> Result<MixtureOutcome> {
        if !(self.density > 0.0) || !(self.mixture > 0.0) {
            return Err(ImperfectionError::QuadratureDegenerate);
        }
        let field = self.field / self.mixture;
        let photons = self.photons / self.mixture;
        let n_in = s.truncated_photon_number();
        let reference = s.truncated_field();
        let field_abs = self.field_abs / self.mixture;
        let avg_phase = if field.norm() > ZERO_TOL && reference.norm() > 0.0 {
            Some(arg(field / reference))
        } else {
            None
        };
        Ok(MixtureOutcome {
            mean_conditional_amplitude: field,
            avg_gain: (n_in > 0.0).then(|| photons / n_in),
            avg_phase,
            fringe_contrast: (field_abs > 0.0).then(|| (field.norm() / field_abs).min(1.0)),
            p1_avg: self.herald / self.density,
            conditional_photon_number: photons,
            fock_projected: self.fock,
        })
    }
}

fn projection_at(y: f64, s: &SignalMode, b: &PoincareBasis, g: &ApparatusGeometry) -> Result<ProjectionOutcome> {
    let coupling = CouplingParams::resonant(cooperativity_at(y, g))?;
    Ok(project(&build_joint_state(s, &coupling), b))
}

fn cloud_sums(
    s: &SignalMode,
    b: &PoincareBasis,
    g: &ApparatusGeometry,
    spec: &QuadratureSpec,
) -> Result<MixtureSums> {
    let mut sums = MixtureSums::default();
    if g.sigma_axial == 0.0 {
        sums.add(1.0, &projection_at(0.0, s, b, g)?, spec.weighting);
        return Ok(sums);
    }
    let half = spec.span_sigmas * g.sigma_axial;
    for (y, w) in quadrature::trapezoid(-half, half, spec.nodes.max(2)) {
        let weight = w * axial_weight(y, g);
        sums.add(weight, &projection_at(y, s, b, g)?, spec.weighting);
    }
    Ok(sums)
}

/// Average over the cloud with the default quadrature.
pub fn averaged_projection(
    s: &SignalMode,
    b: &PoincareBasis,
    g: &ApparatusGeometry,
) -> Result<MixtureOutcome> {
    averaged_projection_with(s, b, g, &QuadratureSpec::default())
}

pub fn averaged_projection_with(
    s: &SignalMode,
    b: &PoincareBasis,
    g: &ApparatusGeometry,
    spec: &QuadratureSpec,
) -> Result<MixtureOutcome> {
    cloud_sums(s, b, g, spec)?.finish(s)
}

/// Cloud average further averaged over a Gaussian jitter of `θ`.
pub fn jitter_average(
    s: &SignalMode,
    b: &PoincareBasis,
    n: &NoiseParams,
    g: &ApparatusGeometry,
) -> Result<MixtureOutcome> {
    jitter_average_with(s, b, n, g, &QuadratureSpec::default())
}

pub fn jitter_average_with(
    s: &SignalMode,
    b: &PoincareBasis,
    n: &NoiseParams,
    g: &ApparatusGeometry,
    spec: &QuadratureSpec,
) -> Result<MixtureOutcome> {
    if n.jitter_sigma == 0.0 {
        return averaged_projection_with(s, b, g, spec);
    }
    let mut total = MixtureSums::default();
    for (dtheta, p) in quadrature::gaussian_average(n.jitter_sigma, spec.jitter_nodes.max(1)) {
        let shifted = PoincareBasis::folded(b.theta() + dtheta, b.phi()).map_err(ModelError::from)?;
        total.absorb(&cloud_sums(s, &shifted, g, spec)?, p);
    }
    total.finish(s)
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(ImperfectionError::ProbabilityOutOfRange(p))
    }
}

/// Fraction of heralds that are background clicks,
/// `ε·p0 / (ε·p0 + p1)` with `p0 = 1 − p1`.
pub fn background_fraction(p1: f64, epsilon: f64) -> Result<f64> {
    check_probability(p1)?;
    check_probability(epsilon)?;
    let background = epsilon * (1.0 - p1);
    let total = background + p1;
    if total == 0.0 {
        return Err(ImperfectionError::NoClicksPossible);
    }
    Ok(background / total)
}

/// Gain inferred with background heralds mixed in:
/// `(G·SNR + 1)/(SNR + 1)` with `SNR = p1/(ε·p0)`.
pub fn measured_gain(gain: f64, p1: f64, epsilon: f64) -> Result<f64> {
    if !(gain >= 0.0) {
        return Err(ImperfectionError::Model(ModelError::InvalidTarget(gain)));
    }
    let bg = background_fraction(p1, epsilon)?;
    Ok((1.0 - bg) * gain + bg)
}

/// Phase of a fringe mixing true heralds (phase `theta_sig`) with background
/// heralds (phase 0), `Arg(P_bg + (1 − P_bg)e^{iθ})`.
pub fn measured_phase(theta_sig: f64, p_bg: f64) -> Result<f64> {
    measured_phase_weighted(theta_sig, p_bg, 1.0)
}

/// As [`measured_phase`], with the true-herald field `rel_amplitude` times
/// stronger than the background field.
pub fn measured_phase_weighted(theta_sig: f64, p_bg: f64, rel_amplitude: f64) -> Result<f64> {
    check_probability(p_bg)?;
    let phasor = Complex64::new(p_bg, 0.0) + unit_phasor(theta_sig) * ((1.0 - p_bg) * rel_amplitude);
    if phasor.norm() < ZERO_TOL {
        return Err(ImperfectionError::UndefinedPhase);
    }
    Ok(arg(phasor))
}

/// What the imperfect apparatus reports for one basis setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredOutcome {
    pub mixture: MixtureOutcome,
    /// Fraction of heralds from impurity leakage.
    pub background_fraction: f64,
    /// Fraction of ancilla clicks at the heralding port, `p1 + ε·p0`.
    pub herald_fraction: f64,
    pub gain: Option<f64>,
    /// [`measured_phase`] of the mixture phase; `None` when the mixture
    /// phase is undefined.
    pub phase: Option<f64>,
    /// Phase of the heralded beat-note fringe, where true and background
    /// heralds contribute in proportion to their conditional fields.
    pub fringe_phase: Option<f64>,
}

/// Cloud and jitter averaging followed by background mixing.
pub fn measured_outcome(
    s: &SignalMode,
    b: &PoincareBasis,
    g: &ApparatusGeometry,
    n: &NoiseParams,
    spec: &QuadratureSpec,
) -> Result<MeasuredOutcome> {
    let mixture = jitter_average_with(s, b, n, g, spec)?;
    let p1 = mixture.p1_avg;
    let bg = background_fraction(p1, n.epsilon)?;
    let gain = mixture
        .avg_gain
        .map(|gain| measured_gain(gain, p1, n.epsilon))
        .transpose()?;
    let phase = mixture
        .avg_phase
        .map(|theta| measured_phase(theta, bg))
        .transpose()
        .or_else(|e| match e {
            ImperfectionError::UndefinedPhase => Ok(None),
            other => Err(other),
        })?;
    let reference = s.truncated_field();
    let fringe_phase = if reference.norm() > 0.0 {
        let rel = mixture.mean_conditional_amplitude.norm() / reference.norm();
        let theta = mixture.avg_phase.unwrap_or(0.0);
        measured_phase_weighted(theta, bg, rel).ok()
    } else {
        None
    };
    Ok(MeasuredOutcome {
        mixture,
        background_fraction: bg,
        herald_fraction: p1 + n.epsilon * (1.0 - p1),
        gain,
        phase,
        fringe_phase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn signal() -> SignalMode {
        SignalMode::from_mean_photon_number(0.2).unwrap()
    }

    #[test]
    fn paper_cooperativity() {
        let g = ApparatusGeometry::paper();
        assert!((max_cooperativity(&g) - 8.59).abs() < 0.01);
        let wide = ApparatusGeometry::new(77.1e3, 852e-9, 71e-6, 50e-6).unwrap();
        assert!((max_cooperativity(&wide) - g.eta0() / 4.0).abs() < 1e-12);
        let fine = ApparatusGeometry::new(154.2e3, 852e-9, 35.5e-6, 50e-6).unwrap();
        assert!((max_cooperativity(&fine) - 2.0 * g.eta0()).abs() < 1e-12);
        assert!(ApparatusGeometry::new(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn cooperativity_profile() {
        let g = ApparatusGeometry::paper();
        assert_eq!(cooperativity_at(0.0, &g), g.eta0() / 2.0);
        let at_waist = cooperativity_at(g.waist(), &g);
        assert!((at_waist - g.eta0() / 2.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!(cooperativity_at(1.0, &g) < 1e-300);
    }

    #[test]
    fn cloud_weight() {
        let g = ApparatusGeometry::paper();
        assert_eq!(axial_weight(0.0, &g), 1.0);
        assert!((axial_weight(g.sigma_axial(), &g) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(axial_weight(13e-6, &g), axial_weight(-13e-6, &g));
    }

    #[test]
    fn background_fraction_values() {
        assert_eq!(background_fraction(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(background_fraction(0.0, 0.1).unwrap(), 1.0);
        assert!((background_fraction(0.01, 0.02).unwrap() - 0.0198 / 0.0298).abs() < 1e-12);
        assert_eq!(background_fraction(0.0, 0.0), Err(ImperfectionError::NoClicksPossible));
        assert!(background_fraction(1.2, 0.0).is_err());
    }

    #[test]
    fn measured_gain_values() {
        assert_eq!(measured_gain(6.21, 0.103, 0.0).unwrap(), 6.21);
        assert_eq!(measured_gain(6.21, 0.0, 0.02).unwrap(), 1.0);
        // SNR = 0.1030 / (0.02 · 0.897) = 5.7414
        let g = measured_gain(6.21, 0.1030, 0.02).unwrap();
        let snr = 0.1030 / (0.02 * 0.897);
        assert!((g - (6.21 * snr + 1.0) / (snr + 1.0)).abs() < 1e-12);
        assert!((g - 5.44).abs() < 0.01);
        for p1 in [0.0, 0.01, 0.3, 1.0] {
            for eps in [0.01, 0.02, 0.5] {
                assert!((measured_gain(1.0, p1, eps).unwrap() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn measured_phase_values() {
        assert!((measured_phase(1.2, 0.0).unwrap() - 1.2).abs() < 1e-15);
        assert_eq!(measured_phase(PI, 0.6644).unwrap(), 0.0);
        assert_eq!(measured_phase(PI, 0.3356).unwrap(), PI);
        assert_eq!(measured_phase(PI, 0.5), Err(ImperfectionError::UndefinedPhase));
    }

    #[test]
    fn point_cloud_matches_ideal_projection() {
        let g = ApparatusGeometry::paper().with_sigma_axial(0.0).unwrap();
        let b = PoincareBasis::from_degrees(64.0, 180.0).unwrap();
        let mix = averaged_projection(&signal(), &b, &g).unwrap();
        let c = CouplingParams::resonant(g.eta0() / 2.0).unwrap();
        let ideal = project(&build_joint_state(&signal(), &c), &b);
        assert_eq!(mix.p1_avg, ideal.p1);
        assert_eq!(mix.avg_phase, Some(0.0));
        assert_eq!(mix.fringe_contrast, Some(1.0));
        let n_prime = ideal.conditional_photon_number().unwrap();
        assert!((mix.avg_gain.unwrap() - n_prime / signal().truncated_photon_number()).abs() < 1e-12);
    }

    #[test]
    fn inhomogeneity_washes_out_phase_flip() {
        let b = PoincareBasis::from_degrees(118.0, 180.0).unwrap();
        let point = ApparatusGeometry::paper().with_sigma_axial(0.0).unwrap();
        let cloud = ApparatusGeometry::paper();
        let ideal = averaged_projection(&signal(), &b, &point).unwrap();
        let mixed = averaged_projection(&signal(), &b, &cloud).unwrap();
        assert_eq!(ideal.avg_phase, Some(PI));
        // Real transmission keeps every class at 0 or π; the mixture can
        // only lose contrast.
        let phase = mixed.avg_phase.unwrap();
        assert!(phase == 0.0 || phase == PI);
        assert!(mixed.fringe_contrast.unwrap() < 1.0);
        assert!(mixed.mean_conditional_amplitude.norm() < ideal.mean_conditional_amplitude.norm());
    }

    #[test]
    fn fock_basis_mixture() {
        let b = PoincareBasis::new(FRAC_PI_2, PI).unwrap();
        let mix = averaged_projection(&signal(), &b, &ApparatusGeometry::paper()).unwrap();
        assert!(mix.fock_projected);
        assert_eq!(mix.conditional_photon_number, 1.0);
        assert!(mix.avg_phase.is_none());
    }

    #[test]
    fn vacuum_signal_has_no_gain() {
        let s = SignalMode::from_mean_photon_number(0.0).unwrap();
        let b = PoincareBasis::from_degrees(64.0, 180.0).unwrap();
        let mix = averaged_projection(&s, &b, &ApparatusGeometry::paper()).unwrap();
        assert!(mix.avg_gain.is_none());
        assert!(mix.avg_phase.is_none());
        assert_eq!(mix.conditional_photon_number, 0.0);
    }

    #[test]
    fn reported_and_fringe_phases() {
        let g = ApparatusGeometry::paper();
        let n = NoiseParams::paper();
        let spec = QuadratureSpec::default();
        let b = PoincareBasis::from_degrees(110.0, 180.0).unwrap();
        let m = measured_outcome(&signal(), &b, &g, &n, &spec).unwrap();
        assert_eq!(m.mixture.avg_phase, Some(PI));
        assert!(m.background_fraction < 0.5);
        assert_eq!(m.phase, Some(PI));
        // The weak flipped field loses to the background field.
        assert_eq!(m.fringe_phase, Some(0.0));
        let ideal = NoiseParams::new(0.0, 0.3, 0.0).unwrap();
        let m = measured_outcome(&signal(), &b, &g, &ideal, &spec).unwrap();
        assert_eq!((m.phase, m.fringe_phase), (Some(PI), Some(PI)));
        let fock = PoincareBasis::new(FRAC_PI_2, PI).unwrap();
        let m = measured_outcome(&signal(), &fock, &g, &n, &spec).unwrap();
        assert_eq!((m.phase, m.fringe_phase), (None, Some(0.0)));
    }

    #[test]
    fn zero_jitter_is_cloud_average() {
        let b = PoincareBasis::from_degrees(70.0, 180.0).unwrap();
        let g = ApparatusGeometry::paper();
        let n = NoiseParams::paper();
        assert_eq!(
            jitter_average(&signal(), &b, &n, &g).unwrap(),
            averaged_projection(&signal(), &b, &g).unwrap()
        );
    }

    #[test]
    fn jitter_about_sigma_minus_keeps_zero_phase() {
        let g = ApparatusGeometry::paper();
        let n = NoiseParams::new(0.02, 0.3, 0.05).unwrap();
        let mix = jitter_average(&signal(), &PoincareBasis::sigma_minus(), &n, &g).unwrap();
        assert_eq!(mix.avg_phase, Some(0.0));
    }

    #[test]
    fn noise_ranges() {
        assert!(NoiseParams::new(1.5, 0.3, 0.0).is_err());
        assert!(NoiseParams::new(0.1, -0.1, 0.0).is_err());
        assert!(NoiseParams::new(0.1, 0.3, -1.0).is_err());
    }
}

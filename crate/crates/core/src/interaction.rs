//! Ideal heralded interaction between the signal and ancilla modes.
//!
//! The signal is a weak coherent state truncated to `|0⟩ + α|1⟩`. A stored
//! signal excitation multiplies the σ⁺ ancilla component by the transmission
//! amplitude `t`, leaving the joint state
//!
//! ```text
//! |Ψ⟩ ∝ |σ⁻⟩(|0⟩ + α|1⟩) + |σ⁺⟩(|0⟩ + tα|1⟩)
//! ```
//!
//! Detecting the ancilla in a basis `(θ, φ)` heralds the signal state
//! `|0⟩ + α′|1⟩` with
//! `α′ = α (cos θ/2 + sin θ/2 e^{iφ} t) / (cos θ/2 + sin θ/2 e^{iφ})`.

use num_complex::Complex64;
use thiserror::Error;

use crate::polarization::{
    arg, overlap, unit_phasor, JonesVector, PoincareBasis, PolarizationError, ZERO_TOL,
};

/// Mean photon number above which the n ≤ 1 truncation is flagged as poor.
pub const WEAK_SIGNAL_LIMIT: f64 = 0.5;

/// Hard cap on the mean photon number of the truncated signal.
pub const MAX_SIGNAL_PHOTONS: f64 = 1.0;

const SERIES_REL_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("cooperativity must be non-negative and finite (got {0})")]
    NegativeCooperativity(f64),
    #[error("transmission amplitude |t| = {0} is outside [0, 1]")]
    TransmissionOutOfRange(f64),
    #[error("mean signal photon number {0} is outside [0, {MAX_SIGNAL_PHOTONS}]")]
    SignalOutOfRange(f64),
    #[error("t = 1 leaves the signal untouched; only the identity target is reachable")]
    DegenerateInteraction,
    #[error("target gain must be positive and finite (got {0})")]
    InvalidTarget(f64),
    #[error("mean ancilla photon number must be non-negative (got {0})")]
    NegativeAncillaFlux(f64),
    #[error(transparent)]
    Polarization(#[from] PolarizationError),
}

/// Resonant transmission amplitude `t = 1/(1 + η)`.
pub fn transmission_amplitude(eta: f64) -> Result<Complex64, ModelError> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(ModelError::NegativeCooperativity(eta));
    }
    Ok(Complex64::new(1.0 / (1.0 + eta), 0.0))
}

/// Atom-cavity coupling, reduced to the σ⁺ transmission amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    eta: Option<f64>,
    t: Complex64,
}

impl CouplingParams {
    /// On-resonance coupling with cooperativity `eta`.
    pub fn resonant(eta: f64) -> Result<Self, ModelError> {
        Ok(Self {
            eta: Some(eta),
            t: transmission_amplitude(eta)?,
        })
    }

    /// Arbitrary (e.g. detuned) complex transmission amplitude.
    pub fn with_transmission(t: Complex64) -> Result<Self, ModelError> {
        let mag = t.norm();
        if !mag.is_finite() || mag > 1.0 + 1e-12 {
            return Err(ModelError::TransmissionOutOfRange(mag));
        }
        Ok(Self { eta: None, t })
    }

    /// Cooperativity, when the coupling was built from one.
    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn t(&self) -> Complex64 {
        self.t
    }
}

/// Weak coherent signal `|α⟩ ≈ |0⟩ + α|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalMode {
    alpha: Complex64,
}

impl SignalMode {
    pub fn new(alpha: Complex64) -> Result<Self, ModelError> {
        let n = alpha.norm_sqr();
        if !n.is_finite() || n > MAX_SIGNAL_PHOTONS {
            return Err(ModelError::SignalOutOfRange(n));
        }
        Ok(Self { alpha })
    }

    /// Real, positive amplitude with `|α|² = mean_photon_number`.
    pub fn from_mean_photon_number(mean_photon_number: f64) -> Result<Self, ModelError> {
        if !(mean_photon_number >= 0.0) {
            return Err(ModelError::SignalOutOfRange(mean_photon_number));
        }
        Self::new(Complex64::new(mean_photon_number.sqrt(), 0.0))
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// True when `|α|²` exceeds [`WEAK_SIGNAL_LIMIT`].
    pub fn beyond_weak_limit(&self) -> bool {
        self.mean_photon_number() > WEAK_SIGNAL_LIMIT
    }

    /// Photon number of the normalized truncated state, `|α|²/(1+|α|²)`.
    pub fn truncated_photon_number(&self) -> f64 {
        let n = self.mean_photon_number();
        n / (1.0 + n)
    }

    /// `⟨a⟩` of the normalized truncated state, `α/(1+|α|²)`.
    pub fn truncated_field(&self) -> Complex64 {
        self.alpha / (1.0 + self.mean_photon_number())
    }
}

/// Normalized two-mode state; amplitudes of `|σ⁻,0⟩, |σ⁻,1⟩, |σ⁺,0⟩, |σ⁺,1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    a_m0: Complex64,
    a_m1: Complex64,
    a_p0: Complex64,
    a_p1: Complex64,
    norm_sq: f64,
    alpha: Complex64,
    t: Complex64,
}

impl JointState {
    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.a_m0, self.a_m1, self.a_p0, self.a_p1]
    }

    /// Squared norm of the unnormalized state, `2 + |α|²(1 + |t|²)`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn t(&self) -> Complex64 {
        self.t
    }
}

pub fn build_joint_state(s: &SignalMode, c: &CouplingParams) -> JointState {
    let alpha = s.alpha();
    let t = c.t();
    let norm_sq = 2.0 + alpha.norm_sqr() * (1.0 + t.norm_sqr());
    let scale = 1.0 / norm_sq.sqrt();
    let one = Complex64::new(scale, 0.0);
    JointState {
        a_m0: one,
        a_m1: alpha * scale,
        a_p0: one,
        a_p1: t * alpha * scale,
        norm_sq,
        alpha,
        t,
    }
}

/// Result of heralding on one ancilla outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOutcome {
    /// Conditional amplitude `α′`; `None` for the Fock-projected basis.
    pub alpha_prime: Option<Complex64>,
    /// Power gain `|α′/α|²`.
    pub gain: Option<f64>,
    /// Conditional phase shift `Arg(α′/α)` in `(−π, π]`.
    pub phase_shift: Option<f64>,
    /// Success probability of the herald.
    pub p1: f64,
    pub p0: f64,
    /// The conditional vacuum amplitude vanished; the signal is `|1⟩`.
    pub fock_projected: bool,
    /// Conditional amplitudes of `|0⟩` and `|1⟩`, normalized so that
    /// `|vacuum|² + |photon|² = p1`.
    pub vacuum: Complex64,
    pub photon: Complex64,
}

impl ProjectionOutcome {
    /// Mean photon number of the normalized conditional state; 1 when
    /// Fock-projected, `None` when the herald is impossible.
    pub fn conditional_photon_number(&self) -> Option<f64> {
        if self.p1 <= 0.0 {
            return None;
        }
        if self.fock_projected {
            return Some(1.0);
        }
        Some(self.photon.norm_sqr() / self.p1)
    }

    /// `⟨a⟩` of the normalized conditional state.
    pub fn conditional_field(&self) -> Option<Complex64> {
        if self.p1 <= 0.0 {
            return None;
        }
        if self.fock_projected {
            return Some(Complex64::new(0.0, 0.0));
        }
        Some(self.vacuum.conj() * self.photon / self.p1)
    }
}

/// Bra coefficients `(cos θ/2, sin θ/2 e^{iφ})` of the detected polarization.
fn bra_coefficients(b: &PoincareBasis) -> (Complex64, Complex64) {
    let half = 0.5 * b.theta();
    (
        Complex64::new(half.cos(), 0.0),
        unit_phasor(b.phi()) * half.sin(),
    )
}

/// Projects `psi` on the ancilla outcome `b` using the closed form for `α′`.
pub fn project(psi: &JointState, b: &PoincareBasis) -> ProjectionOutcome {
    let (c, s) = bra_coefficients(b);
    let vacuum_coeff = c + s;
    let photon_coeff = c + s * psi.t;
    let norm = psi.norm_sq.sqrt();
    let vacuum = vacuum_coeff / norm;
    let photon = psi.alpha * photon_coeff / norm;
    let p1 = ((vacuum_coeff.norm_sqr() + psi.alpha.norm_sqr() * photon_coeff.norm_sqr())
        / psi.norm_sq)
        .clamp(0.0, 1.0);

    let fock_projected = vacuum_coeff.norm() < ZERO_TOL;
    let (alpha_prime, gain, phase_shift) = if fock_projected {
        (None, None, None)
    } else {
        let ratio = photon_coeff / vacuum_coeff;
        (
            Some(psi.alpha * ratio),
            Some(ratio.norm_sqr()),
            Some(arg(ratio)),
        )
    };
    ProjectionOutcome {
        alpha_prime,
        gain,
        phase_shift,
        p1,
        p0: 1.0 - p1,
        fock_projected,
        vacuum,
        photon,
    }
}

/// Conditional `(|0⟩, |1⟩)` amplitudes from overlapping the ancilla branches
/// of the stored state with the detected polarization. Independent of the
/// closed form in [`project`].
///
/// The detected bra carries the coefficients of `|β⟩` unconjugated, so the
/// overlap is taken against the conjugate ket.
pub fn conditional_amplitudes(psi: &JointState, b: &PoincareBasis) -> (Complex64, Complex64) {
    let ket = b.jones().conj();
    let vacuum_branch = JonesVector::new(psi.a_m0, psi.a_p0);
    let photon_branch = JonesVector::new(psi.a_m1, psi.a_p1);
    (
        overlap(&ket, &vacuum_branch),
        overlap(&ket, &photon_branch),
    )
}

/// Basis that heralds the amplitude ratio `r = α′/α` for transmission `t`:
/// `tan(θ/2)e^{iφ} = (r − 1)/(t − r)`.
pub fn invert_target(r: Complex64, t: Complex64) -> Result<PoincareBasis, ModelError> {
    let identity = (r - 1.0).norm() < ZERO_TOL;
    if (t - 1.0).norm() < ZERO_TOL {
        return if identity {
            Ok(PoincareBasis::sigma_minus())
        } else {
            Err(ModelError::DegenerateInteraction)
        };
    }
    Ok(PoincareBasis::from_fraction(r - 1.0, t - r)?)
}

/// Success probability of heralding the signal state with gain `gain` and
/// phase shift `phase`.
pub fn landscape_probability(
    gain: f64,
    phase: f64,
    s: &SignalMode,
    c: &CouplingParams,
) -> Result<f64, ModelError> {
    if !(gain > 0.0) || !gain.is_finite() {
        return Err(ModelError::InvalidTarget(gain));
    }
    let r = unit_phasor(phase) * gain.sqrt();
    let basis = invert_target(r, c.t())?;
    Ok(project(&build_joint_state(s, c), &basis).p1)
}

/// Average effect of an unheralded ancilla pulse on the signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnconditionalChange {
    /// `⟨δn_s⟩/⟨n_s⟩`.
    pub relative_photon_change: f64,
    /// `⟨δφ_s⟩` in radians.
    pub phase_change: f64,
}

/// Poisson-averaged signal change for an ancilla pulse of `n_bar_a` photons
/// in linear polarization; each σ⁺ photon scales the signal amplitude by `t`.
///
/// The signal mode only sets the reference phase; the relative changes do not
/// depend on `|α|`.
pub fn unconditional_change(
    _s: &SignalMode,
    c: &CouplingParams,
    n_bar_a: f64,
) -> Result<UnconditionalChange, ModelError> {
    if !(n_bar_a >= 0.0) || !n_bar_a.is_finite() {
        return Err(ModelError::NegativeAncillaFlux(n_bar_a));
    }
    let t = c.t();
    let power = poisson_generating_sum(0.5 * n_bar_a, Complex64::new(t.norm_sqr(), 0.0));
    let field = poisson_generating_sum(0.5 * n_bar_a, t);
    Ok(UnconditionalChange {
        relative_photon_change: power.re - 1.0,
        phase_change: if field.norm() > 0.0 { arg(field) } else { 0.0 },
    })
}

/// `Σ_k e^{−λ} λ^k/k! · x^k` for `|x| ≤ 1`, summed until a term past the
/// Poisson mode drops below `1e-15` of the running sum.
fn poisson_generating_sum(lambda: f64, x: Complex64) -> Complex64 {
    if lambda == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let ln_lambda = lambda.ln();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut ln_weight = -lambda;
    let mut power = Complex64::new(1.0, 0.0);
    let mut k = 0u64;
    loop {
        let term = power * ln_weight.exp();
        sum += term;
        let past_mode = (k as f64) > lambda;
        if past_mode && term.norm() <= SERIES_REL_TOL * sum.norm().max(f64::MIN_POSITIVE) {
            break;
        }
        k += 1;
        ln_weight += ln_lambda - (k as f64).ln();
        power *= x;
        if past_mode && power.norm() == 0.0 {
            break;
        }
    }
    sum
}

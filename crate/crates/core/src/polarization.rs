//! Polarization algebra for the ancilla mode.
//!
//! States are two-component complex (Jones) vectors in the circular basis
//! `{σ⁻, σ⁺}`. A measurement basis is a point `(θ, φ)` on the Poincaré sphere,
//! `|β⟩ = cos(θ/2)|σ⁻⟩ + sin(θ/2)e^{iφ}|σ⁺⟩`, so `θ = 0` is pure σ⁻ and
//! `θ = π` is pure σ⁺. The detection optics (a half- and a quarter-waveplate in
//! front of a polarizing beamsplitter) select that point.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

/// Magnitude below which a complex amplitude is treated as exactly zero.
pub const ZERO_TOL: f64 = 1e-14;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolarizationError {
    #[error("waveplate fraction is 0/0; the basis is indeterminate")]
    IndeterminateBasis,
    #[error("Jones vector is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("cannot normalize the zero Jones vector")]
    ZeroVector,
    #[error("{name} = {value} is outside its allowed range")]
    InvalidAngle { name: &'static str, value: f64 },
}

/// `e^{iθ}`, exact at integer multiples of π/2.
///
/// `Complex64::from_polar(1.0, PI)` leaves a `1.2e-16` imaginary part, which
/// would smear a conditional phase of exactly π into `π − ε`.
pub fn unit_phasor(angle: f64) -> Complex64 {
    let r = angle.rem_euclid(TAU);
    let quarter = (r / FRAC_PI_2).round();
    if (r - quarter * FRAC_PI_2).abs() < 4.0 * f64::EPSILON * TAU {
        return match quarter as i64 % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, angle)
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let mut r = angle.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    // rem_euclid can return TAU itself for tiny negative inputs.
    if r <= -PI {
        r += TAU;
    }
    r
}

/// Argument of `z` in `(−π, π]`; a negative real axis maps to `+π` regardless
/// of the sign of the zero imaginary part.
pub fn arg(z: Complex64) -> f64 {
    wrap_phase(z.im.atan2(z.re))
}

/// A two-component polarization amplitude in the `{σ⁻, σ⁺}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    minus: Complex64,
    plus: Complex64,
}

impl JonesVector {
    /// Raw components, not normalized.
    pub fn new(minus: Complex64, plus: Complex64) -> Self {
        Self { minus, plus }
    }

    /// Unit-norm vector with the global phase fixed so that the σ⁻ component
    /// is real and non-negative (σ⁺ real positive when σ⁻ vanishes).
    pub fn normalized(minus: Complex64, plus: Complex64) -> Result<Self, PolarizationError> {
        let norm = (minus.norm_sqr() + plus.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(PolarizationError::ZeroVector);
        }
        Ok(Self::new(minus / norm, plus / norm).with_canonical_phase())
    }

    pub fn minus(&self) -> Complex64 {
        self.minus
    }

    pub fn plus(&self) -> Complex64 {
        self.plus
    }

    pub fn norm_sqr(&self) -> f64 {
        self.minus.norm_sqr() + self.plus.norm_sqr()
    }

    pub fn with_canonical_phase(self) -> Self {
        let reference = if self.minus.norm() > 0.0 {
            self.minus
        } else {
            self.plus
        };
        if reference.norm() == 0.0 {
            return self;
        }
        let rot = reference.conj() / reference.norm();
        Self::new(self.minus * rot, self.plus * rot)
    }

    /// The orthogonal polarization `(−conj(c₊), conj(c₋))`.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.plus.conj(), self.minus.conj())
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self::new(self.minus.conj(), self.plus.conj())
    }
}

/// Inner product `⟨a|b⟩ = conj(a₋)b₋ + conj(a₊)b₊`.
pub fn overlap(a: &JonesVector, b: &JonesVector) -> Complex64 {
    a.minus.conj() * b.minus + a.plus.conj() * b.plus
}

/// A measurement basis `(θ, φ)` on the Poincaré sphere.
///
/// `θ ∈ [0, π]`, `φ ∈ [0, 2π)`; at the poles `φ` is set to 0 so that equal
/// polarizations compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareBasis {
    theta: f64,
    phi: f64,
}

impl PoincareBasis {
    pub fn new(theta: f64, phi: f64) -> Result<Self, PolarizationError> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(PolarizationError::InvalidAngle {
                name: "theta",
                value: theta,
            });
        }
        if !phi.is_finite() {
            return Err(PolarizationError::InvalidAngle {
                name: "phi",
                value: phi,
            });
        }
        Ok(Self::canonical(theta, phi))
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self, PolarizationError> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    fn canonical(theta: f64, phi: f64) -> Self {
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        if theta == 0.0 || theta == PI {
            phi = 0.0;
        }
        Self { theta, phi }
    }

    /// Folds an arbitrary real polar angle back onto the sphere:
    /// `(−θ, φ)` and `(2π − θ, φ)` name the same ray as `(θ, φ + π)`.
    pub fn folded(theta: f64, phi: f64) -> Result<Self, PolarizationError> {
        if !theta.is_finite() {
            return Err(PolarizationError::InvalidAngle {
                name: "theta",
                value: theta,
            });
        }
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > PI {
            theta = TAU - theta;
            phi += PI;
        }
        Self::new(theta, phi)
    }

    /// Basis with `tan(θ/2)e^{iφ} = num/den`; `den = 0` gives the σ⁺ pole.
    pub fn from_fraction(num: Complex64, den: Complex64) -> Result<Self, PolarizationError> {
        let (n, d) = (num.norm(), den.norm());
        if !n.is_finite() || !d.is_finite() || (n < ZERO_TOL && d < ZERO_TOL) {
            return Err(PolarizationError::IndeterminateBasis);
        }
        if d < ZERO_TOL {
            return Ok(Self::canonical(PI, 0.0));
        }
        if n < ZERO_TOL {
            return Ok(Self::canonical(0.0, 0.0));
        }
        let theta = 2.0 * n.atan2(d);
        let phi = (num / den).arg();
        Ok(Self::canonical(theta, phi))
    }

    /// Pure σ⁻.
    pub fn sigma_minus() -> Self {
        Self::canonical(0.0, 0.0)
    }

    /// Pure σ⁺.
    pub fn sigma_plus() -> Self {
        Self::canonical(PI, 0.0)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// The antipodal basis `(π − θ, φ + π)`.
    pub fn orthogonal(&self) -> Self {
        Self::canonical(PI - self.theta, self.phi + PI)
    }

    pub fn jones(&self) -> JonesVector {
        jones_from_poincare(self)
    }

    /// Signed polar angle along the `φ ∈ {0, π}` meridian: `+θ` at `φ = π`,
    /// `−θ` at `φ = 0`, `None` off the meridian.
    pub fn meridian_angle(&self, tol: f64) -> Option<f64> {
        if (self.phi - PI).abs() <= tol {
            Some(self.theta)
        } else if self.phi <= tol || TAU - self.phi <= tol {
            Some(-self.theta)
        } else {
            None
        }
    }
}

/// Half- and quarter-waveplate angles of the detection path (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSetting {
    theta_h: f64,
    theta_q: f64,
}

impl WaveplateSetting {
    pub fn new(theta_h: f64, theta_q: f64) -> Result<Self, PolarizationError> {
        for (name, value) in [("theta_h", theta_h), ("theta_q", theta_q)] {
            if !value.is_finite() {
                return Err(PolarizationError::InvalidAngle { name, value });
            }
        }
        Ok(Self {
            theta_h: theta_h.rem_euclid(PI),
            theta_q: theta_q.rem_euclid(PI),
        })
    }

    pub fn theta_h(&self) -> f64 {
        self.theta_h
    }

    pub fn theta_q(&self) -> f64 {
        self.theta_q
    }
}

/// Phase convention of the circular basis relative to the waveplate axes,
/// chosen so the `2θ_h = θ_q` family lies on the `φ ∈ {0, π}` meridian.
const WAVEPLATE_BASIS_PHASE: f64 = -FRAC_PI_4;

/// Poincaré coordinates selected by the waveplates:
/// `tan(θ/2)e^{iφ} ∝ (−i + e^{i2θ_q}) / (e^{i4θ_h} − e^{i2(2θ_h−θ_q)})`.
pub fn basis_from_waveplates(w: &WaveplateSetting) -> Result<PoincareBasis, PolarizationError> {
    let (h, q) = (w.theta_h, w.theta_q);
    let num = Complex64::new(0.0, -1.0) + unit_phasor(2.0 * q);
    let den = unit_phasor(4.0 * h) - unit_phasor(2.0 * (2.0 * h - q));
    PoincareBasis::from_fraction(num * unit_phasor(WAVEPLATE_BASIS_PHASE), den)
}

/// `(cos(θ/2), sin(θ/2)e^{iφ})`.
pub fn jones_from_poincare(b: &PoincareBasis) -> JonesVector {
    let half = 0.5 * b.theta;
    JonesVector::new(
        Complex64::new(half.cos(), 0.0),
        unit_phasor(b.phi) * half.sin(),
    )
}

/// Inverse of [`jones_from_poincare`] up to a global phase.
pub fn poincare_from_jones(v: &JonesVector) -> Result<PoincareBasis, PolarizationError> {
    let norm_sqr = v.norm_sqr();
    if !((norm_sqr - 1.0).abs() <= NORM_TOL) {
        return Err(PolarizationError::NotNormalized { norm_sqr });
    }
    let (m, p) = (v.minus.norm(), v.plus.norm());
    if p == 0.0 {
        return Ok(PoincareBasis::sigma_minus());
    }
    if m == 0.0 {
        return Ok(PoincareBasis::sigma_plus());
    }
    let theta = 2.0 * p.atan2(m);
    let phi = v.plus.arg() - v.minus.arg();
    Ok(PoincareBasis::canonical(theta, phi))
}

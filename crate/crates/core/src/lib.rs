//! Heralded control of a weak signal mode through a cavity-coupled ancilla.
//!
//! The signal (a coherent state truncated to one photon) and an ancilla
//! photon in superposed circular polarizations interact through an atomic
//! ensemble inside a cavity; detecting the ancilla in a chosen elliptical
//! polarization heralds a gain or phase shift on the signal.

pub mod estimators;
pub mod imperfections;
pub mod interaction;
pub mod montecarlo;
pub mod polarization;
pub(crate) mod quadrature;

pub use num_complex::Complex64;

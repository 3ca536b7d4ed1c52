//! Transmission-line observables.
//!
//! The point atom at x = 0 radiates a current `I_g = iJρ21` symmetrically
//! into both directions, `J = sqrt(ħ ω21 Γ21 / Z)`. A probe of amplitude
//! `I_21 = J Ω21/Γ21` travels towards +x, so the transmitted field at x > 0
//! is `I_21 + iJρ'21` and the field reflected to x < 0 is `iJρ'21`.
//!
//! The line itself (phase velocity, per-length inductance and capacitance,
//! wave vector) never enters the steady amplitudes and is not modelled.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{AtomParams, DriveConfig};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

const MHZ: f64 = 1e6;
const GHZ: f64 = 1e9;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Current scale `J = sqrt(ħ ω21 Γ21 / Z)` in amperes.
pub fn j_scale(params: &AtomParams) -> f64 {
    let omega = TAU * params.omega_21 * GHZ;
    let gamma = TAU * params.gamma_pop_21 * MHZ;
    (HBAR * omega * gamma / params.line_impedance).sqrt()
}

/// Emitted current amplitude `iJρ21`, amperes.
pub fn emission_amplitude(params: &AtomParams, rho21: Complex64) -> Complex64 {
    I * j_scale(params) * rho21
}

/// Current amplitudes on the line, amperes, plus the transmission coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldAmplitudes {
    pub j_scale: f64,
    /// Wave launched by the atom into each direction, `iJρ'21`.
    pub i_generated: Complex64,
    /// Incident probe `JΩ21/Γ21`.
    pub i_probe: Complex64,
    /// Net field at x > 0.
    pub i_total_right: Complex64,
    /// Net field at x < 0 (the probe does not propagate there).
    pub i_total_left_reflected: Complex64,
    /// `I_t / I_21`; `None` without a probe.
    pub t: Option<Complex64>,
}

impl FieldAmplitudes {
    /// Reflection coefficient `iJρ'21 / I_21 = t − 1`.
    pub fn r(&self) -> Option<Complex64> {
        self.t.map(|t| t - 1.0)
    }

    pub fn transmission_power(&self) -> Option<f64> {
        self.t.map(|t| t.norm_sqr())
    }

    pub fn t_or_err(&self) -> Result<Complex64> {
        self.t
            .ok_or_else(|| Error::DomainError("transmission undefined without a probe".into()))
    }
}

/// Assembles the line fields from the probe-modified coherence ρ'21.
pub fn total_field(
    params: &AtomParams,
    drives: &DriveConfig,
    rho21_prime: Complex64,
) -> FieldAmplitudes {
    let j = j_scale(params);
    let probe = drives.rabi_21.complex();
    let i_probe = j * probe / params.gamma_pop_21;
    let i_generated = emission_amplitude(params, rho21_prime);
    let t = (!drives.rabi_21.is_off())
        .then(|| Complex64::new(1.0, 0.0) + I * params.gamma_pop_21 * rho21_prime / probe);
    FieldAmplitudes {
        j_scale: j,
        i_generated,
        i_probe,
        i_total_right: i_probe + i_generated,
        i_total_left_reflected: i_generated,
        t,
    }
}

/// |I_t| written as `J |Ω21/Γ21 + iρ'21|`; the same quantity as
/// `|FieldAmplitudes::i_total_right|` along a separate code path.
pub fn total_current_magnitude(
    params: &AtomParams,
    drives: &DriveConfig,
    rho21_prime: Complex64,
) -> f64 {
    j_scale(params) * (drives.rabi_21.complex() / params.gamma_pop_21 + I * rho21_prime).norm()
}

/// Amperes to nanoamperes.
pub fn to_na(amps: f64) -> f64 {
    amps * 1e9
}

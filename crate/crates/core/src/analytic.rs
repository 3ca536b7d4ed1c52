//! Closed-form steady-state expressions for the driven cyclic atom.
//!
//! The resonant populations and the normalizer `A` are exact in the limit
//! Γ21, Γ31 → 0 with γ13 = γ23 = Γ32/2. Outside that limit they are the
//! leading-order approximation for Γ32 ≫ Γ21, Γ31; the numeric solver in
//! [`crate::steady`] is the reference.
//!
//! The general-detuning coherence [`coherence_general`] only uses the
//! coherence equations and is exact for any rates once the populations are
//! known, so it takes them from a numeric steady state.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::model::{AtomParams, DensityMatrix, DriveConfig, Rabi};
use crate::steady::solve_steady;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Resonant steady state from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonantSummary {
    /// Normalizer A, MHz³.
    pub a_norm: f64,
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho21: Complex64,
}

impl ResonantSummary {
    pub fn populations(&self) -> [f64; 3] {
        [self.rho11, self.rho22, self.rho33]
    }
}

fn require_resonant(drives: &DriveConfig) -> Result<()> {
    if drives.is_resonant() {
        Ok(())
    } else {
        Err(Error::DomainError(format!(
            "resonant formula called with detunings ({}, {}) MHz",
            drives.detuning_31, drives.detuning_32
        )))
    }
}

fn require_probe_off(drives: &DriveConfig) -> Result<()> {
    if drives.probe_on() {
        Err(Error::DomainError(
            "formula assumes the probe is off".into(),
        ))
    } else {
        Ok(())
    }
}

/// `A = (6γ12 + Γ32)|Ω32|² + Γ32(|Ω31|² + 2γ12Γ32)`.
pub fn normalizer(params: &AtomParams, drives: &DriveConfig) -> f64 {
    let g12 = params.gamma_coh_12;
    let g32 = params.gamma_pop_32;
    let w31 = drives.rabi_31.mag_mhz.powi(2);
    let w32 = drives.rabi_32.mag_mhz.powi(2);
    (6.0 * g12 + g32) * w32 + g32 * (w31 + 2.0 * g12 * g32)
}

/// Coherence ρ21 at arbitrary Δ = −Δ32 (with Δ31 = 0, probe off), given the
/// steady populations.
pub fn coherence_general(
    params: &AtomParams,
    drives: &DriveConfig,
    rho: &DensityMatrix,
) -> Result<Complex64> {
    if drives.detuning_31 != 0.0 {
        return Err(Error::DomainError(format!(
            "coherence formula requires a resonant 3-1 drive, got {} MHz",
            drives.detuning_31
        )));
    }
    require_probe_off(drives)?;

    let delta = drives.delta();
    let g13 = params.gamma_coh_13;
    let lambda_21 = Complex64::new(params.gamma_coh_12, -delta);
    let lambda_23 = Complex64::new(params.gamma_coh_23, -delta);
    let o31 = drives.rabi_31.complex();
    let o32 = drives.rabi_32.complex();
    let [p1, p2, p3] = rho.populations();

    let numerator = o31 * o32.conj() * (lambda_23 * (p3 - p1) + g13 * (p3 - p2));
    let denominator = o31.norm_sqr() * g13
        + lambda_23 * (o32.norm_sqr() + 4.0 * g13 * lambda_21);
    if denominator == Complex64::new(0.0, 0.0) {
        return Err(Error::DomainError("vanishing denominator".into()));
    }
    Ok(numerator / denominator)
}

pub fn resonant_summary(params: &AtomParams, drives: &DriveConfig) -> Result<ResonantSummary> {
    require_resonant(drives)?;
    require_probe_off(drives)?;

    let a = normalizer(params, drives);
    if !(a > 0.0) {
        return Err(Error::DomainError(format!("normalizer A = {a}")));
    }
    let g12 = params.gamma_coh_12;
    let g32 = params.gamma_pop_32;
    let w31 = drives.rabi_31.mag_mhz.powi(2);
    let w32 = drives.rabi_32.mag_mhz.powi(2);

    Ok(ResonantSummary {
        a_norm: a,
        rho11: (2.0 * g12 + g32) * w32 / a,
        rho22: (2.0 * g12 * w32 + g32 * (w31 + 2.0 * g12 * g32)) / a,
        rho33: 2.0 * g12 * w32 / a,
        rho21: resonant_coherence(params, drives, a),
    })
}

fn resonant_coherence(params: &AtomParams, drives: &DriveConfig, a: f64) -> Complex64 {
    -params.gamma_pop_32 * drives.rabi_31.complex() * drives.rabi_32.complex().conj() / a
}

/// First-order probe coefficient B of `ρ'21 = −Γ32 Ω31 Ω32*/A + Ω21 B`.
pub fn probe_coherence_correction(params: &AtomParams, drives: &DriveConfig) -> Result<Complex64> {
    require_resonant(drives)?;
    let a = normalizer(params, drives);
    let g12 = params.gamma_coh_12;
    let g32 = params.gamma_pop_32;
    let w31 = drives.rabi_31.mag_mhz.powi(2);
    let w32 = drives.rabi_32.mag_mhz.powi(2);
    let denominator = a * (w31 + w32 + 2.0 * g12 * g32);
    if !(denominator > 0.0) {
        return Err(Error::DomainError("vanishing denominator in B".into()));
    }
    let numerator = g32 * (g32 * (w31 - w32) + 2.0 * g12 * (g32 * g32 - w32));
    Ok(I * numerator / denominator)
}

/// Weak-probe coherence `ρ'21 = −Γ32 Ω31 Ω32*/A + Ω21 B` at resonance.
pub fn probe_modified_coherence(params: &AtomParams, drives: &DriveConfig) -> Result<Complex64> {
    let b = probe_coherence_correction(params, drives)?;
    let a = normalizer(params, drives);
    Ok(resonant_coherence(params, drives, a) + drives.rabi_21.complex() * b)
}

/// Parameters of the probe/emission interference at resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interference {
    /// Ratio of drive-induced emission to incident probe amplitude.
    pub alpha: f64,
    /// Loop phase Θ = θ21 + θ32 − θ31.
    pub theta: f64,
    /// `(1 + α² − 2α sin Θ)^{1/2}`; multiply by `J|Ω21|/Γ21` for |I_t|.
    pub factor: f64,
}

/// `α = Γ21 Γ32 |Ω31||Ω32| / (A |Ω21|)`.
pub fn interference_intensity(params: &AtomParams, drives: &DriveConfig) -> Result<Interference> {
    require_resonant(drives)?;
    if drives.rabi_21.mag_mhz == 0.0 {
        return Err(Error::DomainError("probe amplitude is zero".into()));
    }
    let a = normalizer(params, drives);
    let alpha = params.gamma_pop_21
        * params.gamma_pop_32
        * drives.rabi_31.mag_mhz
        * drives.rabi_32.mag_mhz
        / (a * drives.rabi_21.mag_mhz);
    let theta = drives.loop_phase();
    Ok(Interference {
        alpha,
        theta,
        factor: bracket_factor(alpha, theta),
    })
}

/// `(1 + α² − 2α sin Θ)^{1/2}`, clamped at zero against round-off.
pub fn bracket_factor(alpha: f64, theta: f64) -> f64 {
    (1.0 + alpha * alpha - 2.0 * alpha * theta.sin()).max(0.0).sqrt()
}

/// Probe magnitude |Ω21| (MHz) that makes α = 1 for the given strong drives.
pub fn unit_alpha_probe(params: &AtomParams, drives: &DriveConfig) -> f64 {
    params.gamma_pop_21 * params.gamma_pop_32 * drives.rabi_31.mag_mhz * drives.rabi_32.mag_mhz
        / normalizer(params, drives)
}

/// Drive configuration with the α = 1 probe at Θ = π/2 (total switch-off).
pub fn switch_off_drives(params: &AtomParams, drives: &DriveConfig) -> DriveConfig {
    drives
        .with_probe(Rabi::real(unit_alpha_probe(params, drives)))
        .with_loop_phase(FRAC_PI_2)
}

/// Strong-drive limit of |ρ21| with |Ω31| = |Ω32| → ∞: `Γ32 / (6γ12 + 2Γ32)`.
pub fn emission_saturation(params: &AtomParams) -> f64 {
    params.gamma_pop_32 / (6.0 * params.gamma_coh_12 + 2.0 * params.gamma_pop_32)
}

/// Weak-probe transmission of the undriven atom, `1 − (Γ21/2)/(γ12 − iΔ)`,
/// with Δ the probe detuning in MHz.
pub fn two_level_transmission_weak(params: &AtomParams, delta: f64) -> Complex64 {
    let lambda = Complex64::new(params.gamma_coh_12, -delta);
    Complex64::new(1.0, 0.0) - 0.5 * params.gamma_pop_21 / lambda
}

/// Undriven transmission at finite probe strength from the full steady
/// state (saturation included).
pub fn two_level_transmission_exact(
    params: &AtomParams,
    probe: Rabi,
    delta: f64,
) -> Result<Complex64> {
    if probe.is_off() {
        return Err(Error::DomainError("probe amplitude is zero".into()));
    }
    let drives = DriveConfig::off().with_delta(delta).with_probe(probe);
    let rho = solve_steady(&Liouvillian::new(params, &drives))?;
    Ok(transmission_from_coherence(params, probe.complex(), rho.rho21()))
}

/// `t = 1 + iΓ21 ρ'21 / Ω21`.
pub fn transmission_from_coherence(
    params: &AtomParams,
    probe: Complex64,
    rho21: Complex64,
) -> Complex64 {
    Complex64::new(1.0, 0.0) + I * params.gamma_pop_21 * rho21 / probe
}

//! Domain types for the driven three-level atom.
//!
//! Unit convention: every rate, Rabi frequency and detuning is a *linear*
//! frequency in MHz, i.e. the value of `X / 2π` for an angular quantity `X`.
//! Transition frequencies are linear GHz and the line impedance is in ohms.
//! The only place SI units appear is [`crate::waveguide`].
//!
//! Level labels follow the atom: `|1>` is the ground state, `|3>` the top
//! level. Matrix indices are zero based, so `ρ21` lives at `[(1, 0)]`.

use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|ρij − conj(ρji)|` accepted for a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted before a state is declared non-physical.
pub const POSITIVITY_TOL: f64 = -1e-10;

/// Relaxation rates, transition frequencies and line impedance of the atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomParams {
    /// Population decay |3> → |1>, MHz.
    pub gamma_pop_31: f64,
    /// Population decay |3> → |2>, MHz.
    pub gamma_pop_32: f64,
    /// Population decay |2> → |1>, MHz.
    pub gamma_pop_21: f64,
    /// Total decay rate of the 1–2 coherence, MHz.
    pub gamma_coh_12: f64,
    /// Total decay rate of the 1–3 coherence, MHz.
    pub gamma_coh_13: f64,
    /// Total decay rate of the 2–3 coherence, MHz.
    pub gamma_coh_23: f64,
    /// ω21/2π in GHz.
    pub omega_21: f64,
    /// ω32/2π in GHz.
    pub omega_32: f64,
    /// Characteristic impedance of the transmission line, ohms.
    pub line_impedance: f64,
}

impl AtomParams {
    /// Measured flux-qubit parameters at δΦ/Φ0 = 3.5e-3, with Γ31 = 0 and
    /// γ13 = γ23 = Γ32/2.
    pub const fn reference() -> Self {
        Self {
            gamma_pop_31: 0.0,
            gamma_pop_32: 35.0,
            gamma_pop_21: 11.0,
            gamma_coh_12: 18.0,
            gamma_coh_13: 17.5,
            gamma_coh_23: 17.5,
            omega_21: 10.96,
            omega_32: 24.15,
            line_impedance: 50.0,
        }
    }

    /// Pure dephasing of the 1–2 coherence, `γ12 − Γ21/2`.
    pub fn pure_dephasing(&self) -> f64 {
        self.gamma_coh_12 - 0.5 * self.gamma_pop_21
    }

    /// Returns a copy with γ12 chosen so that the pure dephasing equals `dephasing_mhz`.
    pub fn with_pure_dephasing(mut self, dephasing_mhz: f64) -> Self {
        self.gamma_coh_12 = 0.5 * self.gamma_pop_21 + dephasing_mhz;
        self
    }

    /// Coherence decay rate between levels `i` and `j` (1-based, `i != j`).
    pub fn coherence_decay(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (1, 2) => self.gamma_coh_12,
            (1, 3) => self.gamma_coh_13,
            (2, 3) => self.gamma_coh_23,
            _ => panic!("no coherence between levels {i} and {j}"),
        }
    }

    /// Largest rate in the parameter set, MHz.
    pub fn max_rate(&self) -> f64 {
        [
            self.gamma_pop_31,
            self.gamma_pop_32,
            self.gamma_pop_21,
            self.gamma_coh_12,
            self.gamma_coh_13,
            self.gamma_coh_23,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Smallest strictly positive rate, MHz. `None` when every rate is zero.
    pub fn min_positive_rate(&self) -> Option<f64> {
        [
            self.gamma_pop_31,
            self.gamma_pop_32,
            self.gamma_pop_21,
            self.gamma_coh_12,
            self.gamma_coh_13,
            self.gamma_coh_23,
        ]
        .into_iter()
        .filter(|r| *r > 0.0)
        .reduce(f64::min)
    }
}

impl Default for AtomParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Complex Rabi frequency in polar form, `|Ω| e^{iθ}`, magnitude in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rabi {
    pub mag_mhz: f64,
    pub phase_rad: f64,
}

impl Rabi {
    pub const OFF: Rabi = Rabi {
        mag_mhz: 0.0,
        phase_rad: 0.0,
    };

    pub const fn new(mag_mhz: f64, phase_rad: f64) -> Self {
        Self { mag_mhz, phase_rad }
    }

    pub const fn real(mag_mhz: f64) -> Self {
        Self::new(mag_mhz, 0.0)
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.mag_mhz, self.phase_rad)
    }

    pub fn is_off(&self) -> bool {
        self.mag_mhz == 0.0
    }
}

/// The two strong drives, the optional probe, and the drive detunings.
///
/// There is no probe detuning field: the closed loop ν21 = ν31 − ν32 fixes
/// it to `detuning_31 − detuning_32`, see [`DriveConfig::detuning_21`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub rabi_31: Rabi,
    pub rabi_32: Rabi,
    pub rabi_21: Rabi,
    /// Δ31 = ν31 − ω31, MHz.
    #[serde(rename = "detuning_31_mhz")]
    pub detuning_31: f64,
    /// Δ32 = ν32 − ω32, MHz.
    #[serde(rename = "detuning_32_mhz")]
    pub detuning_32: f64,
}

impl DriveConfig {
    /// Both strong drives at 35 MHz, real, resonant; probe off.
    pub const fn reference() -> Self {
        Self {
            rabi_31: Rabi::real(35.0),
            rabi_32: Rabi::real(35.0),
            rabi_21: Rabi::OFF,
            detuning_31: 0.0,
            detuning_32: 0.0,
        }
    }

    pub const fn off() -> Self {
        Self {
            rabi_31: Rabi::OFF,
            rabi_32: Rabi::OFF,
            rabi_21: Rabi::OFF,
            detuning_31: 0.0,
            detuning_32: 0.0,
        }
    }

    /// Probe detuning Δ21 = Δ31 − Δ32.
    pub fn detuning_21(&self) -> f64 {
        self.detuning_31 - self.detuning_32
    }

    /// The spectral variable Δ = −Δ32 (meaningful with Δ31 = 0).
    pub fn delta(&self) -> f64 {
        -self.detuning_32
    }

    /// Sets Δ31 = 0 and Δ32 = −Δ.
    pub fn with_delta(mut self, delta_mhz: f64) -> Self {
        self.detuning_31 = 0.0;
        self.detuning_32 = -delta_mhz;
        self
    }

    pub fn with_probe(mut self, probe: Rabi) -> Self {
        self.rabi_21 = probe;
        self
    }

    /// Gauge-invariant loop phase Θ = θ21 + θ32 − θ31.
    pub fn loop_phase(&self) -> f64 {
        self.rabi_21.phase_rad + self.rabi_32.phase_rad - self.rabi_31.phase_rad
    }

    /// Sets θ21 so that the loop phase equals `theta`.
    pub fn with_loop_phase(mut self, theta: f64) -> Self {
        self.rabi_21.phase_rad = theta - self.rabi_32.phase_rad + self.rabi_31.phase_rad;
        self
    }

    pub fn is_resonant(&self) -> bool {
        self.detuning_31 == 0.0 && self.detuning_32 == 0.0
    }

    pub fn probe_on(&self) -> bool {
        !self.rabi_21.is_off()
    }

    /// Largest drive frequency scale (Rabi magnitudes and detunings), MHz.
    pub fn max_rate(&self) -> f64 {
        [
            self.rabi_31.mag_mhz,
            self.rabi_32.mag_mhz,
            self.rabi_21.mag_mhz,
            self.detuning_31.abs(),
            self.detuning_32.abs(),
            self.detuning_21().abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Atom and drives together; this is the JSON configuration file format.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub atom: AtomParams,
    pub drives: DriveConfig,
}

impl Config {
    pub const fn reference() -> Self {
        Self {
            atom: AtomParams::reference(),
            drives: DriveConfig::reference(),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn validate(&self) -> ValidationReport {
        validate(&self.atom, &self.drives)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeRate { field: &'static str, value: f64 },
    NonPositive { field: &'static str, value: f64 },
    NonFinite { field: &'static str },
    NegativePureDephasing { value: f64 },
    NegativeRabi { field: &'static str, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeRate { field, value } => {
                write!(f, "negative rate: {field} = {value}")
            }
            Violation::NonPositive { field, value } => {
                write!(f, "must be positive: {field} = {value}")
            }
            Violation::NonFinite { field } => write!(f, "non-finite value: {field}"),
            Violation::NegativePureDephasing { value } => write!(
                f,
                "negative pure dephasing: gamma_coh_12 - gamma_pop_21/2 = {value} MHz"
            ),
            Violation::NegativeRabi { field, value } => {
                write!(f, "negative Rabi magnitude: {field} = {value}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// |Ω21| > Γ21/5: first-order probe formulas lose accuracy.
    ProbeNotWeak { probe_mhz: f64, limit_mhz: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::ProbeNotWeak {
                probe_mhz,
                limit_mhz,
            } => write!(
                f,
                "probe not weak: |rabi_21| = {probe_mhz} MHz > gamma_pop_21/5 = {limit_mhz} MHz"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Converts violations into an [`Error::InvalidConfig`]; warnings are dropped.
    pub fn into_result(self) -> Result<Vec<Warning>> {
        if self.is_ok() {
            Ok(self.warnings)
        } else {
            let msg = self
                .violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::InvalidConfig(msg))
        }
    }
}

/// Probe strength above which the weak-probe formulas are flagged, as a
/// fraction of Γ21.
pub const WEAK_PROBE_FRACTION: f64 = 0.2;

pub fn validate(params: &AtomParams, drives: &DriveConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let v = &mut report.violations;

    let rates = [
        ("gamma_pop_31", params.gamma_pop_31),
        ("gamma_pop_32", params.gamma_pop_32),
        ("gamma_pop_21", params.gamma_pop_21),
        ("gamma_coh_12", params.gamma_coh_12),
        ("gamma_coh_13", params.gamma_coh_13),
        ("gamma_coh_23", params.gamma_coh_23),
    ];
    for (field, value) in rates {
        if !value.is_finite() {
            v.push(Violation::NonFinite { field });
        } else if value < 0.0 {
            v.push(Violation::NegativeRate { field, value });
        }
    }
    for (field, value) in [
        ("omega_21", params.omega_21),
        ("omega_32", params.omega_32),
        ("line_impedance", params.line_impedance),
    ] {
        if !value.is_finite() {
            v.push(Violation::NonFinite { field });
        } else if value <= 0.0 {
            v.push(Violation::NonPositive { field, value });
        }
    }
    let dephasing = params.pure_dephasing();
    if dephasing.is_finite() && dephasing < 0.0 {
        v.push(Violation::NegativePureDephasing { value: dephasing });
    }

    for (field, rabi) in [
        ("rabi_31", drives.rabi_31),
        ("rabi_32", drives.rabi_32),
        ("rabi_21", drives.rabi_21),
    ] {
        if !rabi.mag_mhz.is_finite() || !rabi.phase_rad.is_finite() {
            v.push(Violation::NonFinite { field });
        } else if rabi.mag_mhz < 0.0 {
            v.push(Violation::NegativeRabi {
                field,
                value: rabi.mag_mhz,
            });
        }
    }
    for (field, value) in [
        ("detuning_31_mhz", drives.detuning_31),
        ("detuning_32_mhz", drives.detuning_32),
    ] {
        if !value.is_finite() {
            v.push(Violation::NonFinite { field });
        }
    }

    let limit = WEAK_PROBE_FRACTION * params.gamma_pop_21;
    if drives.rabi_21.mag_mhz > limit {
        report.warnings.push(Warning::ProbeNotWeak {
            probe_mhz: drives.rabi_21.mag_mhz,
            limit_mhz: limit,
        });
    }
    report
}

/// 3×3 density matrix of the atom. Construction checks Hermiticity, unit
/// trace and positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Matrix3<Complex64>);

impl DensityMatrix {
    pub fn try_new(rho: Matrix3<Complex64>) -> Result<Self> {
        check_physical(&rho)?;
        Ok(Self(rho))
    }

    /// Projector onto level `level` (1-based).
    pub fn pure_level(level: usize) -> Self {
        assert!((1..=3).contains(&level), "level must be 1, 2 or 3");
        let mut m = Matrix3::zeros();
        m[(level - 1, level - 1)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix3::from_diagonal_element(Complex64::new(1.0 / 3.0, 0.0)))
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }

    /// Element ρij with 1-based level labels.
    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i - 1, j - 1)]
    }

    pub fn rho21(&self) -> Complex64 {
        self.0[(1, 0)]
    }

    /// Populations (ρ11, ρ22, ρ33).
    pub fn populations(&self) -> [f64; 3] {
        [self.0[(0, 0)].re, self.0[(1, 1)].re, self.0[(2, 2)].re]
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        hermitian_eigenvalues(&self.0)
    }

    /// Largest elementwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn hermitian_eigenvalues(m: &Matrix3<Complex64>) -> [f64; 3] {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm).eigenvalues;
    let mut out = [eig[0], eig[1], eig[2]];
    out.sort_by(f64::total_cmp);
    out
}

pub(crate) fn check_physical(rho: &Matrix3<Complex64>) -> Result<()> {
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonPhysicalResult("non-finite matrix element".into()));
    }
    let herm_err = (rho - rho.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_err > HERMITIAN_TOL {
        return Err(Error::NonPhysicalResult(format!(
            "not Hermitian: max |rho - rho^dag| = {herm_err:.3e}"
        )));
    }
    let trace = rho.trace();
    if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::NonPhysicalResult(format!(
            "trace {trace} differs from 1"
        )));
    }
    let min_eig = hermitian_eigenvalues(rho)[0];
    if min_eig < POSITIVITY_TOL {
        return Err(Error::NonPhysicalResult(format!(
            "negative eigenvalue {min_eig:.3e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configuration_is_valid() {
        let report = validate(&AtomParams::reference(), &DriveConfig::reference());
        assert!(report.is_ok(), "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn reference_constants() {
        let p = AtomParams::reference();
        assert_eq!(p.gamma_pop_32, 35.0);
        assert_eq!(p.gamma_pop_21, 11.0);
        assert_eq!(p.gamma_coh_12, 18.0);
        assert_eq!(p.gamma_coh_13, 17.5);
        assert_eq!(p.gamma_coh_23, 17.5);
        assert_eq!(p.gamma_pop_31, 0.0);
        assert_eq!(p.omega_32, 24.15);
        assert_eq!(p.omega_21, 10.96);
        assert_eq!(p.line_impedance, 50.0);
        let d = DriveConfig::reference();
        assert_eq!(d.rabi_31.mag_mhz, 35.0);
        assert_eq!(d.rabi_32.mag_mhz, 35.0);
        assert!(d.rabi_21.is_off());
    }

    #[test]
    fn negative_pure_dephasing_is_a_violation() {
        let p = AtomParams {
            gamma_coh_12: 5.0,
            ..AtomParams::reference()
        };
        let report = validate(&p, &DriveConfig::reference());
        assert!(!report.is_ok());
        assert!(report.violations[0]
            .to_string()
            .contains("negative pure dephasing"));
    }

    #[test]
    fn strong_probe_is_a_warning_only() {
        let d = DriveConfig::reference().with_probe(Rabi::real(10.0));
        let report = validate(&AtomParams::reference(), &d);
        assert!(report.is_ok());
        assert_eq!(report.warnings.len(), 1);
        assert!(report.warnings[0].to_string().contains("probe not weak"));
    }

    #[test]
    fn rejects_bad_fields() {
        let p = AtomParams {
            gamma_pop_32: -1.0,
            line_impedance: 0.0,
            omega_21: f64::NAN,
            ..AtomParams::reference()
        };
        let d = DriveConfig {
            rabi_31: Rabi::real(-3.0),
            ..DriveConfig::reference()
        };
        let report = validate(&p, &d);
        assert_eq!(report.violations.len(), 4, "{:?}", report.violations);
    }

    #[test]
    fn pure_dephasing_values() {
        assert_eq!(AtomParams::reference().pure_dephasing(), 12.5);
        let p = AtomParams {
            gamma_coh_12: 5.5,
            ..AtomParams::reference()
        };
        assert_eq!(p.pure_dephasing(), 0.0);
        let p = AtomParams {
            gamma_coh_12: 7.0,
            ..AtomParams::reference()
        };
        assert_eq!(p.pure_dephasing(), 1.5);
        assert_eq!(
            AtomParams::reference()
                .with_pure_dephasing(3.25)
                .pure_dephasing(),
            3.25
        );
    }

    #[test]
    fn probe_detuning_follows_loop_condition() {
        let d = DriveConfig {
            detuning_31: 4.0,
            detuning_32: -3.0,
            ..DriveConfig::reference()
        };
        assert_eq!(d.detuning_21(), 7.0);
        assert_eq!(DriveConfig::reference().with_delta(12.0).detuning_32, -12.0);
        assert_eq!(DriveConfig::reference().with_delta(12.0).delta(), 12.0);
    }

    #[test]
    fn loop_phase_setter() {
        let d = DriveConfig {
            rabi_31: Rabi::new(35.0, 0.4),
            rabi_32: Rabi::new(35.0, -1.1),
            ..DriveConfig::reference()
        }
        .with_probe(Rabi::real(1.0))
        .with_loop_phase(std::f64::consts::FRAC_PI_2);
        assert!((d.loop_phase() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn json_schema_rejects_unknown_keys() {
        let mut v: serde_json::Value = serde_json::from_str(&Config::reference().to_json()).unwrap();
        v["atom"]["bogus"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<Config>(v).is_err());
        let mut v: serde_json::Value = serde_json::from_str(&Config::reference().to_json()).unwrap();
        v["drives"]["rabi_21"]["freq"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<Config>(v).is_err());
    }

    #[test]
    fn json_schema_key_names() {
        let v: serde_json::Value = serde_json::from_str(&Config::reference().to_json()).unwrap();
        assert_eq!(v["drives"]["rabi_31"]["mag_mhz"], 35.0);
        assert_eq!(v["drives"]["detuning_32_mhz"], 0.0);
        assert_eq!(v["atom"]["line_impedance"], 50.0);
    }

    #[test]
    fn density_matrix_checks() {
        assert!(DensityMatrix::try_new(*DensityMatrix::pure_level(2).matrix()).is_ok());
        let mut m = *DensityMatrix::maximally_mixed().matrix();
        m[(0, 1)] = Complex64::new(0.0, 1e-6);
        assert!(matches!(
            DensityMatrix::try_new(m),
            Err(Error::NonPhysicalResult(_))
        ));
        let m = Matrix3::from_diagonal(&nalgebra::Vector3::new(
            Complex64::new(1.2, 0.0),
            Complex64::new(-0.2, 0.0),
            Complex64::new(0.0, 0.0),
        ));
        assert!(DensityMatrix::try_new(m).is_err());
        let m = Matrix3::from_diagonal_element(Complex64::new(0.5, 0.0));
        assert!(DensityMatrix::try_new(m).is_err());
    }
}

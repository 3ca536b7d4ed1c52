//! Rotating-frame Hamiltonian and the master-equation generator on the
//! vectorized density matrix.
//!
//! The state vector is the row-major flattening of ρ:
//! `(ρ11, ρ12, ρ13, ρ21, ρ22, ρ23, ρ31, ρ32, ρ33)`, i.e. `ρij` sits at index
//! `3(i−1) + (j−1)`. Everything downstream relies on this ordering.
//!
//! Frequencies are stored in linear MHz; the generator multiplies both the
//! commutator and the dissipator by 2π, so time is in microseconds.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;

use crate::model::{AtomParams, DriveConfig};

pub type SuperOp = SMatrix<Complex64, 9, 9>;
pub type StateVec = SVector<Complex64, 9>;

/// Indices of ρ11, ρ22, ρ33 in the vectorized state.
pub const POPULATION_INDICES: [usize; 3] = [0, 4, 8];

/// Position of ρij (zero-based `i`, `j`) in the vectorized state.
#[inline]
pub const fn vec_index(i: usize, j: usize) -> usize {
    3 * i + j
}

pub fn vectorize(rho: &Matrix3<Complex64>) -> StateVec {
    StateVec::from_fn(|k, _| rho[(k / 3, k % 3)])
}

pub fn unvectorize(v: &StateVec) -> Matrix3<Complex64> {
    Matrix3::from_fn(|i, j| v[vec_index(i, j)])
}

/// Transition operator σij = |i><j| with 1-based labels.
pub fn sigma(i: usize, j: usize) -> Matrix3<Complex64> {
    let mut m = Matrix3::zeros();
    m[(i - 1, j - 1)] = Complex64::new(1.0, 0.0);
    m
}

/// H/(2πħ) in MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian(pub Matrix3<Complex64>);

impl Hamiltonian {
    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }
}

/// `H = −Δ21 σ22 − Δ31 σ33 − ½(Ω31 σ31 + Ω32 σ32 + Ω21 σ21 + H.c.)`.
///
/// With Δ31 = 0 the σ22 coefficient is Δ32, which is the two-drive
/// interaction-picture Hamiltonian once the probe is switched off.
pub fn build_hamiltonian(drives: &DriveConfig) -> Hamiltonian {
    let mut h = Matrix3::zeros();
    h[(1, 1)] = Complex64::from(-drives.detuning_21());
    h[(2, 2)] = Complex64::from(-drives.detuning_31);
    for ((i, j), omega) in [
        ((2, 0), drives.rabi_31.complex()),
        ((2, 1), drives.rabi_32.complex()),
        ((1, 0), drives.rabi_21.complex()),
    ] {
        h[(i, j)] = -0.5 * omega;
        h[(j, i)] = -0.5 * omega.conj();
    }
    Hamiltonian(h)
}

/// Dissipative part in rate form, already multiplied by 2π:
///
/// dρ11 = Γ31ρ33 + Γ21ρ22, dρ22 = Γ32ρ33 − Γ21ρ22, dρ33 = −(Γ31+Γ32)ρ33,
/// dρij = −γij ρij for i ≠ j.
pub fn build_dissipator(params: &AtomParams) -> SuperOp {
    let mut d = SuperOp::zeros();
    let c = |x: f64| Complex64::from(TAU * x);
    let (p11, p22, p33) = (vec_index(0, 0), vec_index(1, 1), vec_index(2, 2));

    d[(p11, p33)] = c(params.gamma_pop_31);
    d[(p11, p22)] = c(params.gamma_pop_21);
    d[(p22, p33)] = c(params.gamma_pop_32);
    d[(p22, p22)] = c(-params.gamma_pop_21);
    d[(p33, p33)] = c(-(params.gamma_pop_31 + params.gamma_pop_32));

    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                let k = vec_index(i, j);
                d[(k, k)] = c(-params.coherence_decay(i + 1, j + 1));
            }
        }
    }
    d
}

/// `−i·2π[H, ·]` as a superoperator.
pub fn commutator_superop(h: &Hamiltonian) -> SuperOp {
    let h = h.matrix();
    let mut m = SuperOp::zeros();
    let factor = Complex64::new(0.0, -TAU);
    // (H E_kl)_{il} = H_ik and (E_kl H)_{kj} = H_lj
    for k in 0..3 {
        for l in 0..3 {
            let col = vec_index(k, l);
            for i in 0..3 {
                m[(vec_index(i, l), col)] += factor * h[(i, k)];
            }
            for j in 0..3 {
                m[(vec_index(k, j), col)] -= factor * h[(l, j)];
            }
        }
    }
    m
}

/// Master-equation generator with the rate scales needed by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    m: SuperOp,
    max_rate_mhz: f64,
    min_rate_mhz: Option<f64>,
}

impl Liouvillian {
    pub fn new(params: &AtomParams, drives: &DriveConfig) -> Self {
        let h = build_hamiltonian(drives);
        let m = commutator_superop(&h) + build_dissipator(params);
        let max_rate_mhz = params.max_rate().max(drives.max_rate());
        Self {
            m,
            max_rate_mhz,
            min_rate_mhz: params.min_positive_rate(),
        }
    }

    /// Wraps a raw generator. Rate scales are inferred from the matrix norm.
    pub fn from_matrix(m: SuperOp) -> Self {
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max) / TAU;
        let diag_min = POPULATION_INDICES
            .iter()
            .map(|&k| -m[(k, k)].re / TAU)
            .filter(|r| *r > 0.0)
            .reduce(f64::min);
        Self {
            m,
            max_rate_mhz: scale,
            min_rate_mhz: diag_min,
        }
    }

    pub fn matrix(&self) -> &SuperOp {
        &self.m
    }

    /// Largest rate, Rabi frequency or detuning that went into the generator, MHz.
    pub fn max_rate_mhz(&self) -> f64 {
        self.max_rate_mhz
    }

    /// Smallest positive relaxation rate, MHz.
    pub fn min_rate_mhz(&self) -> Option<f64> {
        self.min_rate_mhz
    }

    /// ‖M‖∞, the maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.m
            .row_iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// dρ/dt for the given state.
    pub fn apply(&self, rho: &Matrix3<Complex64>) -> Matrix3<Complex64> {
        unvectorize(&(self.m * vectorize(rho)))
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Number of singular values at or below `rel_tol · σ_max`.
    pub fn kernel_dimension(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let cutoff = rel_tol * sv[0];
        sv.iter().filter(|s| **s <= cutoff).count()
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        9 - self.kernel_dimension(rel_tol)
    }
}

pub fn build_liouvillian(params: &AtomParams, drives: &DriveConfig) -> Liouvillian {
    Liouvillian::new(params, drives)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rabi;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hamiltonian_detuning_entry() {
        let d = DriveConfig {
            detuning_32: -5.0,
            ..DriveConfig::off()
        };
        let h = build_hamiltonian(&d);
        assert_eq!(h.0[(1, 1)], c(-5.0));
        assert_eq!(h.0[(2, 2)], c(0.0));
    }

    #[test]
    fn hamiltonian_zero_for_no_drives() {
        assert_eq!(build_hamiltonian(&DriveConfig::off()).0, Matrix3::zeros());
    }

    #[test]
    fn hamiltonian_hermitian_pairing() {
        let d = DriveConfig {
            rabi_31: Rabi::new(35.0, PI / 3.0),
            ..DriveConfig::off()
        };
        let h = build_hamiltonian(&d);
        let expected = -17.5 * Complex64::from_polar(1.0, PI / 3.0);
        assert!((h.0[(2, 0)] - expected).norm() < 1e-14);
        assert_eq!(h.0[(0, 2)], h.0[(2, 0)].conj());
    }

    #[test]
    fn hamiltonian_matches_two_drive_form() {
        // ħΔ32 σ22 − ½(Ω31 σ31 + Ω32 σ32 + H.c.)
        let d = DriveConfig {
            rabi_31: Rabi::new(12.0, 0.3),
            rabi_32: Rabi::new(7.0, -2.0),
            detuning_32: 3.5,
            ..DriveConfig::off()
        };
        let o31 = d.rabi_31.complex();
        let o32 = d.rabi_32.complex();
        let expected = sigma(2, 2) * c(3.5)
            - (sigma(3, 1) * o31 + sigma(3, 2) * o32
                + sigma(1, 3) * o31.conj()
                + sigma(2, 3) * o32.conj())
                * c(0.5);
        assert!((build_hamiltonian(&d).0 - expected).norm() < 1e-14);
    }

    fn diss_apply(rho: Matrix3<Complex64>) -> Matrix3<Complex64> {
        let p = AtomParams::reference();
        unvectorize(&(build_dissipator(&p) * vectorize(&rho))) / c(TAU)
    }

    #[test]
    fn dissipator_on_upper_state() {
        let d = diss_apply(sigma(3, 3));
        assert!((d[(1, 1)] - c(35.0)).norm() < 1e-12);
        assert!((d[(2, 2)] - c(-35.0)).norm() < 1e-12);
        assert!(d[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn dissipator_ground_is_dark() {
        assert_eq!(diss_apply(sigma(1, 1)), Matrix3::zeros());
    }

    #[test]
    fn dissipator_coherence_decay() {
        let d = diss_apply(sigma(1, 2) + sigma(2, 1));
        assert!((d[(0, 1)] - c(-18.0)).norm() < 1e-12);
        assert!((d[(1, 0)] - c(-18.0)).norm() < 1e-12);
    }

    #[test]
    fn reference_generator_has_one_dimensional_kernel() {
        let l = Liouvillian::new(&AtomParams::reference(), &DriveConfig::reference());
        assert_eq!(l.rank(1e-8), 8);
    }

    #[test]
    fn undriven_kernel_contains_ground() {
        let l = Liouvillian::new(&AtomParams::reference(), &DriveConfig::off());
        let out = l.apply(&sigma(1, 1));
        assert!(out.norm() < 1e-12);
    }

    #[test]
    fn trace_rows_sum_to_zero() {
        let d = DriveConfig {
            rabi_21: Rabi::new(3.0, 1.0),
            detuning_31: 2.0,
            detuning_32: -7.0,
            ..DriveConfig::reference()
        };
        let l = Liouvillian::new(&AtomParams::reference(), &d);
        for col in 0..9 {
            let s: Complex64 = POPULATION_INDICES.iter().map(|&r| l.matrix()[(r, col)]).sum();
            assert!(s.norm() < 1e-12, "column {col}: {s}");
        }
    }

    #[test]
    fn vectorization_is_row_major() {
        let m = Matrix3::from_fn(|i, j| c((10 * (i + 1) + j + 1) as f64));
        let v = vectorize(&m);
        assert_eq!(v[1], c(12.0));
        assert_eq!(v[3], c(21.0));
        assert_eq!(unvectorize(&v), m);
    }
}

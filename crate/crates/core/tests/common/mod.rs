#![allow(dead_code)]

use std::f64::consts::TAU;

use cyclic_emission::{AtomParams, DriveConfig, Rabi};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pure-dephasing rates (γφ12, γφ13, γφ23) generated by correlated level
/// noise with covariance `C = AᵀA`, which keeps the model completely
/// positive. Independently drawn rates need not be.
pub fn dephasing_from_noise(a: [[f64; 3]; 3]) -> [f64; 3] {
    let c = |i: usize, j: usize| (0..3).map(|k| a[k][i] * a[k][j]).sum::<f64>();
    let g = |i: usize, j: usize| 0.5 * (c(i, i) + c(j, j) - 2.0 * c(i, j));
    [g(0, 1), g(0, 2), g(1, 2)]
}

/// Atom with the given population decays and noise amplitudes.
pub fn atom_from(g31: f64, g32: f64, g21: f64, noise: [[f64; 3]; 3]) -> AtomParams {
    let [d12, d13, d23] = dephasing_from_noise(noise);
    AtomParams {
        gamma_pop_31: g31,
        gamma_pop_32: g32,
        gamma_pop_21: g21,
        gamma_coh_12: g21 / 2.0 + d12,
        gamma_coh_13: (g31 + g32) / 2.0 + d13,
        gamma_coh_23: (g31 + g32 + g21) / 2.0 + d23,
        ..AtomParams::reference()
    }
}

pub fn random_atom<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> AtomParams {
    let g31 = rng.gen_range(lo..hi);
    let g32 = rng.gen_range(lo..hi);
    let g21 = rng.gen_range(lo..hi);
    let amp = hi.sqrt();
    let mut noise = [[0.0; 3]; 3];
    for row in &mut noise {
        for x in row.iter_mut() {
            *x = rng.gen_range(-amp..amp);
        }
    }
    atom_from(g31, g32, g21, noise)
}

pub fn random_rabi<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Rabi {
    Rabi::new(rng.gen_range(lo..hi), rng.gen_range(0.0..TAU))
}

pub fn random_drives<R: Rng>(rng: &mut R, lo: f64, hi: f64, detuning: f64) -> DriveConfig {
    DriveConfig {
        rabi_31: random_rabi(rng, lo, hi),
        rabi_32: random_rabi(rng, lo, hi),
        rabi_21: random_rabi(rng, lo, hi),
        detuning_31: rng.gen_range(-detuning..detuning),
        detuning_32: rng.gen_range(-detuning..detuning),
    }
}

/// Reference atom with the 2→1 and 3→1 channels switched off, the regime
/// where the printed resonant populations are exact.
pub fn cascade_only_atom() -> AtomParams {
    AtomParams {
        gamma_pop_21: 0.0,
        gamma_pop_31: 0.0,
        ..AtomParams::reference()
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

//! Stationary states of the generator.
//!
//! [`solve_steady`] is the production route: a dense LU solve of the 9×9
//! system with the ρ33 row replaced by the trace constraint. [`evolve`] is a
//! fixed-step RK4 integrator that serves as an independent oracle for it.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liouvillian::{unvectorize, vectorize, Liouvillian, StateVec, POPULATION_INDICES};
use crate::model::DensityMatrix;

/// Relative singular-value threshold below which a direction counts as kernel.
pub const KERNEL_REL_TOL: f64 = 1e-8;
/// Accepted residual `‖Mρ‖∞ / ‖M‖∞` of a linear solve.
pub const RESIDUAL_REL_TOL: f64 = 1e-10;
/// Trace drift tolerated over a whole integration.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;
/// Hermiticity error of the raw solve beyond which it is rejected rather
/// than projected.
const RAW_HERMITIAN_TOL: f64 = 1e-9;
/// The explicit step must satisfy `dt ≤ 1 / (STEP_SAFETY · 2π · max rate)`.
pub const STEP_SAFETY: f64 = 50.0;

const TRACE_ROW: usize = POPULATION_INDICES[2];

pub fn solve_steady(l: &Liouvillian) -> Result<DensityMatrix> {
    let sv = l.singular_values();
    let cutoff = KERNEL_REL_TOL * sv[0];
    let kernel_dim = sv.iter().filter(|s| **s <= cutoff).count();
    if kernel_dim > 1 {
        return Err(Error::DegenerateSteadyState {
            kernel_dim,
            smallest: sv[8],
            second: sv[7],
        });
    }

    let mut a = *l.matrix();
    let mut b = StateVec::zeros();
    for col in 0..9 {
        a[(TRACE_ROW, col)] = Complex64::new(0.0, 0.0);
    }
    for &k in &POPULATION_INDICES {
        a[(TRACE_ROW, k)] = Complex64::new(1.0, 0.0);
    }
    b[TRACE_ROW] = Complex64::new(1.0, 0.0);

    let x = a.lu().solve(&b).ok_or(Error::DegenerateSteadyState {
        kernel_dim: 2,
        smallest: sv[8],
        second: sv[7],
    })?;

    let residual = residual_norm(l, &x);
    let norm = l.inf_norm();
    if residual > RESIDUAL_REL_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NonPhysicalResult(format!(
            "steady-state residual {residual:.3e} exceeds {:.3e}",
            RESIDUAL_REL_TOL * norm
        )));
    }

    let raw = unvectorize(&x);
    let herm_err = (raw - raw.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if herm_err > RAW_HERMITIAN_TOL {
        return Err(Error::NonPhysicalResult(format!(
            "solution not Hermitian: {herm_err:.3e}"
        )));
    }
    // strip round-off anti-Hermitian part
    let rho = (raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::try_new(rho)
}

/// `‖Mρ‖∞` for a vectorized state.
pub fn residual_norm(l: &Liouvillian, x: &StateVec) -> f64 {
    (l.matrix() * x).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest stable step for [`evolve`], microseconds.
pub fn max_step(l: &Liouvillian) -> f64 {
    let rate = l.max_rate_mhz();
    if rate > 0.0 {
        1.0 / (STEP_SAFETY * TAU * rate)
    } else {
        f64::INFINITY
    }
}

fn rk4_step(l: &Liouvillian, x: &StateVec, h: f64) -> StateVec {
    let m = l.matrix();
    let hc = Complex64::from(h);
    let k1 = m * x;
    let k2 = m * (x + k1 * (hc * 0.5));
    let k3 = m * (x + k2 * (hc * 0.5));
    let k4 = m * (x + k3 * hc);
    x + (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4) * (hc / 6.0)
}

fn trace_of(x: &StateVec) -> Complex64 {
    POPULATION_INDICES.iter().map(|&k| x[k]).sum()
}

/// Integrates `dρ/dt = Mρ` from `rho0` to `t_final` (microseconds) with
/// fixed-step RK4. The step actually used is `t_final / ceil(t_final / dt)`.
pub fn evolve(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let raw = evolve_raw(l, rho0.matrix(), t_final, dt)?;
    let rho = (raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::try_new(rho)
}

fn evolve_raw(
    l: &Liouvillian,
    rho0: &Matrix3<Complex64>,
    t_final: f64,
    dt: f64,
) -> Result<Matrix3<Complex64>> {
    let bound = max_step(l);
    if !(dt > 0.0) || dt > bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    if !(t_final >= 0.0) {
        return Err(Error::InvalidConfig(format!("t_final = {t_final}")));
    }
    let mut x = vectorize(rho0);
    let tr0 = trace_of(&x);
    let steps = (t_final / dt).ceil() as u64;
    if steps == 0 {
        return Ok(*rho0);
    }
    let h = t_final / steps as f64;
    for _ in 0..steps {
        x = rk4_step(l, &x, h);
        let drift = (trace_of(&x) - tr0).norm();
        if drift > TRACE_DRIFT_TOL {
            return Err(Error::NonPhysicalResult(format!(
                "trace drift {drift:.3e} during integration"
            )));
        }
    }
    Ok(unvectorize(&x))
}

/// Integrates in windows of `1 / min_rate` until successive windows differ
/// by less than `1e-10` elementwise, or `max_time` is reached. Returns the
/// state and the elapsed time.
pub fn relax(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    dt: f64,
    max_time: f64,
) -> Result<(DensityMatrix, f64)> {
    const CONVERGED: f64 = 1e-10;
    let window = 1.0 / l.min_rate_mhz().unwrap_or(1.0);
    let mut rho = *rho0.matrix();
    let mut t = 0.0;
    while t < max_time {
        let next = evolve_raw(l, &rho, window, dt)?;
        t += window;
        let change = (next - rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        rho = next;
        if change < CONVERGED {
            break;
        }
    }
    let rho = DensityMatrix::try_new((rho + rho.adjoint()) * Complex64::new(0.5, 0.0))?;
    Ok((rho, t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Eigenvalues of the generator (rad/µs), sorted by |Re λ| ascending.
    pub eigenvalues: Vec<Complex64>,
    /// Smallest |Re λ| once the stationary eigenvalue is removed, rad/µs.
    pub spectral_gap: f64,
    /// `‖Mρ_ss‖∞` of the linear solve, if it succeeded.
    pub residual: Option<f64>,
    pub steady_error: Option<Error>,
    /// Gap below `1e-6` of the spectral radius.
    pub slow_mixing: bool,
}

impl ConvergenceReport {
    /// Relaxation time 1/gap in microseconds.
    pub fn mixing_time(&self) -> f64 {
        1.0 / self.spectral_gap
    }
}

pub fn eigenvalues(l: &Liouvillian) -> Vec<Complex64> {
    let schur = l.matrix().schur();
    let mut ev: Vec<Complex64> = match schur.eigenvalues() {
        Some(ev) => ev.iter().copied().collect(),
        None => {
            let (_, t) = schur.unpack();
            (0..9).map(|k| t[(k, k)]).collect()
        }
    };
    ev.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()));
    ev
}

pub fn steady_convergence_report(l: &Liouvillian) -> ConvergenceReport {
    let eigenvalues = eigenvalues(l);
    let spectral_gap = eigenvalues[1].re.abs();
    let radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (residual, steady_error) = match solve_steady(l) {
        Ok(rho) => (Some(residual_norm(l, &vectorize(rho.matrix()))), None),
        Err(e) => (None, Some(e)),
    };
    ConvergenceReport {
        spectral_gap,
        slow_mixing: spectral_gap < 1e-6 * radius,
        eigenvalues,
        residual,
        steady_error,
    }
}

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::collapse::CollapseOperatorSet;
use super::require_hermitian;
use super::state::{QuantumState, StateData};
use crate::error::{Error, Result};
use crate::model::{BasisTag, OperatorMatrix};

pub const DEFAULT_LINDBLAD_STEP_NS: f64 = 0.05;

/// Density-matrix evolution is limited to 2^10-dimensional spaces.
pub const MAX_LINDBLAD_SITES: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct LindbladOptions {
    /// Upper bound on the RK4 step (ns).
    pub step_ns: f64,
    /// Allowed |tr ρ − 1| before integration is declared inaccurate.
    pub trace_tol: f64,
    /// Most negative eigenvalue tolerated at a snapshot.
    pub positivity_tol: f64,
    /// Diagonalize each snapshot to monitor positivity.
    pub check_positivity: bool,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        LindbladOptions {
            step_ns: DEFAULT_LINDBLAD_STEP_NS,
            trace_tol: 1e-6,
            positivity_tol: 1e-6,
            check_positivity: true,
        }
    }
}

/// dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ C ρ C†, H_eff = H − (i/2) Σ C†C.
struct Liouvillian<'a> {
    h_eff: OperatorMatrix,
    jumps: Vec<&'a OperatorMatrix>,
}

impl<'a> Liouvillian<'a> {
    fn new(h: &OperatorMatrix, collapse: &'a CollapseOperatorSet) -> Result<Self> {
        let mut h_eff = h.clone();
        for c in collapse.iter() {
            let cc = c.adjoint().matmul(c)?;
            let shifted = cc
                .entries()
                .iter()
                .map(|&(r, col, v)| (r, col, v * C64::new(0.0, -0.5)));
            let decay = OperatorMatrix::from_triplets(h.basis(), h.dim(), shifted.collect::<Vec<_>>())?;
            h_eff = h_eff.add(&decay)?;
        }
        Ok(Liouvillian {
            h_eff,
            jumps: collapse.iter().collect(),
        })
    }

    fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let minus_i = C64::new(0.0, -1.0);
        let mut out = (self.h_eff.mul_dense(rho) - self.h_eff.dense_mul_adjoint(rho)) * minus_i;
        for c in &self.jumps {
            out += c.dense_mul_adjoint(&c.mul_dense(rho));
        }
        out
    }

    fn rk4(&self, rho: &DMatrix<C64>, h: f64) -> DMatrix<C64> {
        let hc = C64::new(h, 0.0);
        let half = C64::new(0.5 * h, 0.0);
        let k1 = self.apply(rho);
        let k2 = self.apply(&(rho + &k1 * half));
        let k3 = self.apply(&(rho + &k2 * half));
        let k4 = self.apply(&(rho + &k3 * hc));
        let sixth = C64::new(h / 6.0, 0.0);
        let next = rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
        (&next + next.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Integrates the Lindblad master equation with classical RK4 and the
/// default tolerances, see [`evolve_lindblad_with`].
pub fn evolve_lindblad(
    h: &OperatorMatrix,
    collapse: &CollapseOperatorSet,
    rho0: &QuantumState,
    times: &[f64],
    step_ns: f64,
) -> Result<Vec<QuantumState>> {
    let opts = LindbladOptions {
        step_ns,
        ..Default::default()
    };
    evolve_lindblad_with(h, collapse, rho0, times, &opts)
}

/// Snapshots of ρ(t) at non-decreasing times (ns).
///
/// Between consecutive snapshot times the interval is split into the fewest
/// equal sub-steps no longer than `step_ns`, so every snapshot lands exactly
/// on its requested time. ρ is re-symmetrized after every step. Pure initial
/// states are promoted to |ψ⟩⟨ψ|.
pub fn evolve_lindblad_with(
    h: &OperatorMatrix,
    collapse: &CollapseOperatorSet,
    rho0: &QuantumState,
    times: &[f64],
    opts: &LindbladOptions,
) -> Result<Vec<QuantumState>> {
    require_hermitian(h)?;
    if !(opts.step_ns > 0.0 && opts.step_ns.is_finite()) {
        return Err(Error::domain(format!("integration step {} must be > 0", opts.step_ns)));
    }
    let BasisTag::Full { n_sites } = rho0.basis() else {
        return Err(Error::domain(format!(
            "Lindblad evolution runs on the full space, got {}",
            rho0.basis()
        )));
    };
    if n_sites > MAX_LINDBLAD_SITES {
        return Err(Error::domain(format!(
            "{n_sites} sites exceed the density-matrix limit of {MAX_LINDBLAD_SITES}"
        )));
    }
    if h.basis() != rho0.basis() || collapse.iter().any(|c| c.basis() != rho0.basis()) {
        return Err(Error::domain("Hamiltonian, collapse operators and state differ in basis"));
    }
    let rho_init = rho0.to_density();
    // validates Hermiticity, trace and positivity
    let rho_init = QuantumState::density(rho0.basis(), rho_init.matrix().unwrap().clone())?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("snapshot times must be finite, non-negative and non-decreasing"));
    }

    let liou = Liouvillian::new(h, collapse)?;
    let mut rho = rho_init.matrix().unwrap().clone();
    let mut t_now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t_now;
        if span > 0.0 {
            let n = (span / opts.step_ns - 1e-9).ceil().max(1.0) as usize;
            let dt = span / n as f64;
            for _ in 0..n {
                rho = liou.rk4(&rho, dt);
            }
            check_accuracy(&rho, target, opts)?;
            t_now = target;
        }
        let snap = QuantumState::from_parts(rho0.basis(), StateData::Density(rho.clone()));
        if opts.check_positivity {
            let min = snap.min_eigenvalue();
            if min < -opts.positivity_tol {
                return Err(Error::IntegrationAccuracy(format!(
                    "eigenvalue {min:e} at t = {target} ns violates positivity"
                )));
            }
        }
        out.push(snap);
    }
    Ok(out)
}

fn check_accuracy(rho: &DMatrix<C64>, t: f64, opts: &LindbladOptions) -> Result<()> {
    let tr = rho.trace();
    // tr ρ² ≤ 1 for any density matrix; growth beyond signals instability
    let purity = rho.norm_squared();
    if !tr.re.is_finite() || (tr - 1.0).norm() > opts.trace_tol || purity > 1.0 + opts.trace_tol {
        return Err(Error::IntegrationAccuracy(format!(
            "at t = {t} ns trace = {tr}, purity = {purity}; reduce the step"
        )));
    }
    Ok(())
}

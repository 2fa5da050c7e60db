use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::require_hermitian;
use super::state::{QuantumState, StateData};
use crate::error::{Error, Result};
use crate::model::OperatorMatrix;

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Maximum Lanczos subspace dimension.
    pub max_dim: usize,
    /// Local error budget per step, relative to the state norm.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            max_dim: 30,
            tol: 1e-12,
        }
    }
}

struct Lanczos {
    basis: Vec<DVector<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// β after the last vector; zero when the subspace is invariant.
    residual: f64,
}

fn lanczos(h: &OperatorMatrix, v: &DVector<C64>, max_dim: usize) -> Lanczos {
    let norm = v.norm();
    let mut q = vec![v / C64::new(norm, 0.0)];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let scale = h.max_abs().max(1e-300);
    loop {
        let k = q.len() - 1;
        let mut w = h.apply(&q[k]);
        let a = q[k].dotc(&w).re;
        alpha.push(a);
        // full reorthogonalisation, twice
        for _ in 0..2 {
            for qi in &q {
                let c = qi.dotc(&w);
                w -= qi * c;
            }
        }
        let b = w.norm();
        if b <= 1e-13 * scale || q.len() == max_dim.min(v.len()) {
            return Lanczos {
                basis: q,
                alpha,
                beta,
                residual: if b <= 1e-13 * scale { 0.0 } else { b },
            };
        }
        beta.push(b);
        q.push(w / C64::new(b, 0.0));
    }
}

impl Lanczos {
    /// e^{−iT dt} e₁ in the Krylov basis.
    fn small_exp(&self, eig: &SymmetricEigen<f64, nalgebra::Dyn>, dt: f64) -> DVector<C64> {
        let m = self.alpha.len();
        let s = &eig.eigenvectors;
        DVector::from_fn(m, |i, _| {
            (0..m)
                .map(|k| s[(i, k)] * s[(0, k)] * C64::from_polar(1.0, -eig.eigenvalues[k] * dt))
                .sum()
        })
    }

    fn tridiagonal(&self) -> DMatrix<f64> {
        let m = self.alpha.len();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.alpha[i]
            } else if i + 1 == j {
                self.beta[i]
            } else if j + 1 == i {
                self.beta[j]
            } else {
                0.0
            }
        })
    }
}

/// Unitary snapshots by adaptive Lanczos stepping. Times are visited in the
/// order given, each continuing from the previous snapshot.
pub fn evolve_krylov(
    h: &OperatorMatrix,
    psi0: &QuantumState,
    times: &[f64],
    opts: &KrylovOptions,
) -> Result<Vec<QuantumState>> {
    require_hermitian(h)?;
    if h.basis() != psi0.basis() {
        return Err(Error::domain("Hamiltonian and state live in different bases"));
    }
    let mut psi = psi0
        .vector()
        .ok_or_else(|| Error::domain("Krylov evolution needs a pure state"))?
        .clone();
    let mut t_now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        if !target.is_finite() {
            return Err(Error::domain("non-finite snapshot time"));
        }
        while t_now != target {
            let remaining = target - t_now;
            let norm = psi.norm();
            let lz = lanczos(h, &psi, opts.max_dim.max(2));
            let eig = SymmetricEigen::new(lz.tridiagonal());
            let m = lz.alpha.len();
            let mut dt = remaining;
            let coeffs = loop {
                let c = lz.small_exp(&eig, dt);
                let err = lz.residual * c[m - 1].norm();
                if err <= opts.tol || dt.abs() < 1e-9 * remaining.abs() {
                    break c;
                }
                dt *= 0.5;
            };
            let mut next = DVector::zeros(psi.len());
            for (qk, ck) in lz.basis.iter().zip(coeffs.iter()) {
                next += qk * (ck * norm);
            }
            psi = next;
            t_now = if dt == remaining { target } else { t_now + dt };
        }
        out.push(QuantumState::from_parts(psi0.basis(), StateData::Pure(psi.clone())));
    }
    Ok(out)
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::krylov::{evolve_krylov, KrylovOptions};
use super::require_hermitian;
use super::state::{QuantumState, StateData};
use crate::error::{Error, Result};
use crate::model::{BasisTag, OperatorMatrix, MAX_DENSE_DIM};

/// Spectral decomposition H = V diag(E) V† used to apply e^{−iHt}.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    basis: BasisTag,
    energies: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl SpectralPropagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        require_hermitian(h)?;
        let (energies, vectors) = match h.to_dense_real()? {
            Some(real) => {
                let eig = SymmetricEigen::new(real);
                (eig.eigenvalues, eig.eigenvectors.map(|x| C64::new(x, 0.0)))
            }
            None => {
                let dense = h.to_dense()?;
                let herm = (&dense + dense.adjoint()) * C64::new(0.5, 0.0);
                let eig = SymmetricEigen::new(herm);
                (eig.eigenvalues, eig.eigenvectors)
            }
        };
        Ok(SpectralPropagator {
            basis: h.basis(),
            energies,
            vectors,
        })
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Eigenbasis coefficients V†ψ.
    pub fn coefficients(&self, psi: &DVector<C64>) -> DVector<C64> {
        self.vectors.ad_mul(psi)
    }

    /// V (e^{−iEt} ∘ c) for coefficients `c` from [`coefficients`](Self::coefficients).
    pub fn from_coefficients(&self, coeffs: &DVector<C64>, t: f64) -> DVector<C64> {
        let phased = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.energies.iter())
                .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
        );
        &self.vectors * phased
    }

    pub fn evolve(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        if t == 0.0 {
            return psi.clone();
        }
        self.from_coefficients(&self.coefficients(psi), t)
    }

    /// Dense e^{−iHt}.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let phases = DVector::from_iterator(
            self.energies.len(),
            self.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)),
        );
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * phases[j]
        });
        scaled * self.vectors.adjoint()
    }
}

/// Snapshots ψ(t) = e^{−iHt}ψ₀ at each requested time (ns).
///
/// Uses the spectral decomposition for dimensions up to
/// [`MAX_DENSE_DIM`], Krylov stepping beyond. `t = 0` returns ψ₀ unchanged.
pub fn evolve_unitary(
    h: &OperatorMatrix,
    psi0: &QuantumState,
    times: &[f64],
) -> Result<Vec<QuantumState>> {
    require_hermitian(h)?;
    if h.basis() != psi0.basis() {
        return Err(Error::domain(format!(
            "Hamiltonian acts on {} but the state lives in {}",
            h.basis(),
            psi0.basis()
        )));
    }
    let psi = psi0
        .vector()
        .ok_or_else(|| Error::domain("unitary evolution needs a pure state"))?;
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("non-finite snapshot time"));
    }
    if h.dim() > MAX_DENSE_DIM {
        return evolve_krylov(h, psi0, times, &KrylovOptions::default());
    }
    let prop = SpectralPropagator::new(h)?;
    let coeffs = prop.coefficients(psi);
    Ok(times
        .iter()
        .map(|&t| {
            let v = if t == 0.0 {
                psi.clone()
            } else {
                prop.from_coefficients(&coeffs, t)
            };
            QuantumState::from_parts(psi0.basis(), StateData::Pure(v))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::prepare_initial_state;
    use crate::model::{build_xy_hamiltonian, DeviceParams, LatticeBasis, PotentialSpec};
    use crate::units::mhz_to_angular;

    #[test]
    fn two_level_swap() {
        let p = DeviceParams::paper_device().prefix(2).unwrap();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::flat(), &LatticeBasis::full(2)).unwrap();
        let psi0 = prepare_initial_state("10", 2).unwrap();
        let g = mhz_to_angular(14.60);
        let t_swap = std::f64::consts::FRAC_PI_2 / g;
        assert!((t_swap - 17.123).abs() < 1e-3);
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).chain([t_swap]).collect();
        let snaps = evolve_unitary(&h, &psi0, &times).unwrap();
        for (t, s) in times.iter().zip(&snaps) {
            let p2 = s.vector().unwrap()[1].norm_sqr();
            assert!((p2 - (g * t).sin().powi(2)).abs() < 1e-10, "t={t}");
        }
        assert!((snaps.last().unwrap().vector().unwrap()[1].norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_time_is_identity() {
        let p = DeviceParams::paper_device();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::linear(5.0), &LatticeBasis::full(5)).unwrap();
        let psi0 = prepare_initial_state("X+X+000", 5).unwrap();
        let snaps = evolve_unitary(&h, &psi0, &[0.0]).unwrap();
        assert_eq!(snaps[0], psi0);
    }

    #[test]
    fn rejects_non_hermitian() {
        let tag = BasisTag::Full { n_sites: 1 };
        let h = OperatorMatrix::from_triplets(tag, 2, [(0, 1, C64::new(1.0, 0.0))]).unwrap();
        let psi0 = prepare_initial_state("0", 1).unwrap();
        assert!(matches!(evolve_unitary(&h, &psi0, &[1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_basis_mismatch() {
        let p = DeviceParams::paper_device();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::flat(), &LatticeBasis::sector(5, 1).unwrap()).unwrap();
        let psi0 = prepare_initial_state("10000", 5).unwrap();
        assert!(evolve_unitary(&h, &psi0, &[1.0]).is_err());
    }

    #[test]
    fn unitary_matrix_is_unitary() {
        let p = DeviceParams::paper_device();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::linear(10.0), &LatticeBasis::sector(5, 2).unwrap()).unwrap();
        let u = SpectralPropagator::new(&h).unwrap().unitary(37.0);
        let id = DMatrix::<C64>::identity(10, 10);
        assert!((u.adjoint() * &u - id).norm() < 1e-12);
    }
}

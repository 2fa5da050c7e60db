use num_complex::Complex64 as C64;

use super::basis::LatticeBasis;
use super::device::{DeviceParams, PotentialSpec};
use super::operator::OperatorMatrix;
use crate::error::{Error, Result};

/// Hard-core truncation: occupations {0, 1} per site.
pub const DEFAULT_FOCK_CUTOFF: usize = 2;

const HERMITIAN_TOL: f64 = 1e-12;

/// Action of an operator on one occupation configuration.
pub(crate) type Action = Vec<(Vec<u8>, C64)>;

/// Assembles `⟨occ'|O|occ⟩` from a per-configuration action. Targets whose
/// occupations exceed the local cutoff are truncated away; targets that exist
/// in the product space but not in this basis (a sector) are an error.
pub(crate) fn build_operator(
    basis: &LatticeBasis,
    mut action: impl FnMut(&[u8], &mut Action),
) -> Result<OperatorMatrix> {
    let local = basis.local_dim() as u8;
    let mut triplets = Vec::new();
    let mut out = Vec::new();
    for col in 0..basis.dim() {
        let occ = basis.occupations(col);
        out.clear();
        action(&occ, &mut out);
        for (target, amp) in out.drain(..) {
            if target.iter().any(|&n| n >= local) {
                continue;
            }
            let row = basis.index_of(&target).ok_or_else(|| {
                Error::domain(format!(
                    "operator maps into states outside {}",
                    basis.tag()
                ))
            })?;
            triplets.push((row, col, amp));
        }
    }
    OperatorMatrix::from_triplets(basis.tag(), basis.dim(), triplets)
}

/// `a†_to a_from` applied to `occ` (sites 0-based); no cutoff applied here.
pub(crate) fn hop(occ: &[u8], to: usize, from: usize) -> Option<(Vec<u8>, f64)> {
    if occ[from] == 0 {
        return None;
    }
    let mut next = occ.to_vec();
    let amp = (occ[from] as f64).sqrt();
    next[from] -= 1;
    let amp = amp * ((next[to] + 1) as f64).sqrt();
    next[to] += 1;
    Some((next, amp))
}

/// Hamiltonian with nearest-neighbour hopping g_{j,j+1}, on-site interaction
/// (U_j/2) n_j(n_j − 1) and potential h_j n_j on any lattice basis. In a
/// hard-core basis the interaction vanishes identically and the result is the
/// isotropic XY chain.
pub fn build_hamiltonian_on(
    basis: &LatticeBasis,
    params: &DeviceParams,
    potential: &PotentialSpec,
) -> Result<OperatorMatrix> {
    params.validate()?;
    let l = params.n_qubits;
    if basis.n_sites() != l {
        return Err(Error::domain(format!(
            "basis has {} sites but the device has {l}",
            basis.n_sites()
        )));
    }
    let g: Vec<f64> = (1..l).map(|b| params.coupling_angular(b)).collect();
    let u: Vec<f64> = (1..=l).map(|s| params.anharmonicity_angular(s)).collect();
    let h: Vec<f64> = (1..=l).map(|s| potential.offset_angular(s)).collect();

    let op = build_operator(basis, |occ, out| {
        let diag: f64 = (0..l)
            .map(|s| {
                let n = occ[s] as f64;
                0.5 * u[s] * n * (n - 1.0) + h[s] * n
            })
            .sum();
        if diag != 0.0 {
            out.push((occ.to_vec(), C64::new(diag, 0.0)));
        }
        for (b, &gb) in g.iter().enumerate() {
            for (to, from) in [(b, b + 1), (b + 1, b)] {
                if let Some((next, amp)) = hop(occ, to, from) {
                    out.push((next, C64::new(gb * amp, 0.0)));
                }
            }
        }
    })?;
    op.into_hermitian(HERMITIAN_TOL)
}

/// Isotropic XY Hamiltonian Σ g(σ⁺σ⁻ + h.c.) + Σ h_j σ⁺_jσ⁻_j in rad/ns on a
/// hard-core basis (full space or a fixed-excitation sector).
pub fn build_xy_hamiltonian(
    params: &DeviceParams,
    potential: &PotentialSpec,
    basis: &LatticeBasis,
) -> Result<OperatorMatrix> {
    if !basis.is_hard_core() {
        return Err(Error::domain(
            "XY Hamiltonian requires a hard-core basis; use build_bose_hubbard_hamiltonian",
        ));
    }
    build_hamiltonian_on(basis, params, potential)
}

/// Bose-Hubbard Hamiltonian on the truncated product space with occupations
/// 0..fock_cutoff−1 per site.
pub fn build_bose_hubbard_hamiltonian(
    params: &DeviceParams,
    potential: &PotentialSpec,
    fock_cutoff: usize,
) -> Result<OperatorMatrix> {
    let basis = LatticeBasis::bosonic(params.n_qubits, fock_cutoff)?;
    build_hamiltonian_on(&basis, params, potential)
}

/// Σ_j n_j on the given basis.
pub fn total_excitation_operator(basis: &LatticeBasis) -> Result<OperatorMatrix> {
    build_operator(basis, |occ, out| {
        let n: f64 = occ.iter().map(|&x| x as f64).sum();
        if n != 0.0 {
            out.push((occ.to_vec(), C64::new(n, 0.0)));
        }
    })?
    .into_hermitian(HERMITIAN_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::basis::build_sector_basis;
    use crate::units::mhz_to_angular;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense_real(op: &OperatorMatrix) -> DMatrix<f64> {
        op.to_dense_real().unwrap().unwrap()
    }

    fn sorted_eigs(m: DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    #[test]
    fn two_site_swap_block() {
        let p = DeviceParams::paper_device().prefix(2).unwrap();
        let basis = LatticeBasis::sector(2, 1).unwrap();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::flat(), &basis).unwrap();
        let g = mhz_to_angular(14.60);
        let m = dense_real(&h);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, g, g, 0.0]));
    }

    #[test]
    fn five_site_tilted_block() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::sector(5, 1).unwrap();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::linear(15.0), &basis).unwrap();
        let m = dense_real(&h);
        let f = mhz_to_angular(15.0);
        for j in 0..5 {
            assert!((m[(j, j)] - f * (j + 1) as f64).abs() < 1e-15);
            for k in 0..5usize {
                if k.abs_diff(j) > 1 {
                    assert_eq!(m[(j, k)], 0.0);
                }
            }
        }
        for b in 0..4 {
            let g = mhz_to_angular(p.couplings_mhz[b]);
            assert_eq!(m[(b, b + 1)], g);
            assert_eq!(m[(b + 1, b)], g);
        }
    }

    #[test]
    fn hard_core_bose_hubbard_matches_xy_spectrum() {
        let p = DeviceParams::paper_device();
        let v = PotentialSpec::linear(7.5);
        let xy = build_xy_hamiltonian(&p, &v, &LatticeBasis::full(5)).unwrap();
        let bh = build_bose_hubbard_hamiltonian(&p, &v, 2).unwrap();
        // Same index convention, so the matrices coincide outright.
        assert_eq!(dense_real(&xy), dense_real(&bh));
        let a = sorted_eigs(dense_real(&xy));
        let b = sorted_eigs(dense_real(&bh));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn doublon_diagonal_is_u1() {
        let p = DeviceParams::paper_device();
        let h = build_bose_hubbard_hamiltonian(&p, &PotentialSpec::flat(), 3).unwrap();
        let basis = LatticeBasis::bosonic(5, 3).unwrap();
        let i = basis.index_of(&[2, 0, 0, 0, 0]).unwrap();
        let want = mhz_to_angular(-242.0);
        assert!((h.get(i, i).re - want).abs() < 1e-12);
    }

    #[test]
    fn single_excitation_block_independent_of_cutoff() {
        let p = DeviceParams::paper_device();
        let v = PotentialSpec::linear(10.0);
        let xy = build_xy_hamiltonian(&p, &v, &LatticeBasis::sector(5, 1).unwrap()).unwrap();
        let xy = xy.to_dense().unwrap();
        for cutoff in [2, 3, 4] {
            let basis = LatticeBasis::bosonic(5, cutoff).unwrap();
            let bh = build_bose_hubbard_hamiltonian(&p, &v, cutoff).unwrap();
            // sector order: 10000, 01000, ...
            let idx: Vec<usize> = (0..5)
                .map(|s| {
                    let mut occ = vec![0u8; 5];
                    occ[s] = 1;
                    basis.index_of(&occ).unwrap()
                })
                .collect();
            assert!((bh.submatrix(&idx) - &xy).norm() < 1e-12);
        }
    }

    #[test]
    fn cutoff_below_two_rejected() {
        let p = DeviceParams::paper_device();
        assert!(matches!(
            build_bose_hubbard_hamiltonian(&p, &PotentialSpec::flat(), 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn site_mismatch_rejected() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::Sector(build_sector_basis(4, 1).unwrap());
        assert!(build_xy_hamiltonian(&p, &PotentialSpec::flat(), &basis).is_err());
    }

    #[test]
    fn xy_is_block_diagonal_in_excitation_number() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::full(5);
        let h = build_xy_hamiltonian(&p, &PotentialSpec::linear(3.0), &basis).unwrap();
        for &(r, c, _) in h.entries() {
            let nr: u8 = basis.occupations(r).iter().sum();
            let nc: u8 = basis.occupations(c).iter().sum();
            assert_eq!(nr, nc);
        }
    }

    #[test]
    fn flat_potential_has_zero_diagonal() {
        let p = DeviceParams::paper_device();
        let h = build_xy_hamiltonian(&p, &PotentialSpec::flat(), &LatticeBasis::full(5)).unwrap();
        assert!(h.entries().iter().all(|&(r, c, _)| r != c));
    }
}

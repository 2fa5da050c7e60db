//! Free-fermion solver for the hard-core XY chain.
//!
//! The nearest-neighbour XY chain maps onto non-interacting fermions. Within
//! the one- and two-excitation sectors the string operators only ever act on
//! ordered configurations and contribute no signs, so densities and pair
//! correlations follow from the L×L single-particle propagator alone.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{DeviceParams, PotentialSpec};
use crate::observables::TrajectoryTable;
use crate::units::mhz_to_angular;

/// Real symmetric tridiagonal hopping matrix in rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleHamiltonian {
    matrix: DMatrix<f64>,
}

/// Builds the single-particle matrix of an `l`-site device: couplings on the
/// off-diagonals, h_j = F·j on the diagonal.
pub fn single_particle_matrix(
    params: &DeviceParams,
    potential: &PotentialSpec,
    l: usize,
) -> Result<SingleParticleHamiltonian> {
    if l < 2 {
        return Err(Error::domain(format!("chain length {l} < 2")));
    }
    params.validate()?;
    if params.n_qubits != l {
        return Err(Error::domain(format!(
            "device has {} qubits, requested {l}",
            params.n_qubits
        )));
    }
    let couplings: Vec<f64> = (1..l).map(|b| params.coupling_angular(b)).collect();
    Ok(SingleParticleHamiltonian::from_parts(&couplings, potential))
}

impl SingleParticleHamiltonian {
    /// Chain of `l` sites with identical coupling g/2π in MHz.
    pub fn uniform(l: usize, coupling_mhz: f64, potential: &PotentialSpec) -> Result<Self> {
        if l < 2 {
            return Err(Error::domain(format!("chain length {l} < 2")));
        }
        if !(coupling_mhz > 0.0) {
            return Err(Error::domain("coupling must be positive"));
        }
        let g = mhz_to_angular(coupling_mhz);
        Ok(Self::from_parts(&vec![g; l - 1], potential))
    }

    fn from_parts(couplings: &[f64], potential: &PotentialSpec) -> Self {
        let l = couplings.len() + 1;
        let mut m = DMatrix::zeros(l, l);
        for j in 0..l {
            m[(j, j)] = potential.offset_angular(j + 1);
        }
        for (b, &g) in couplings.iter().enumerate() {
            m[(b, b + 1)] = g;
            m[(b + 1, b)] = g;
        }
        SingleParticleHamiltonian { matrix: m }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn propagator(&self) -> FreePropagator {
        let eig = SymmetricEigen::new(self.matrix.clone());
        FreePropagator {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }
}

/// Spectral form of e^{−iht} for the single-particle matrix.
#[derive(Debug, Clone)]
pub struct FreePropagator {
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl FreePropagator {
    /// Column `site0` (0-based) of e^{−iht}: the amplitudes of a particle
    /// started on `site0`.
    pub fn column(&self, site0: usize, t: f64) -> DVector<C64> {
        let l = self.energies.len();
        let phased: Vec<C64> = (0..l)
            .map(|k| C64::from_polar(self.vectors[(site0, k)], -self.energies[k] * t))
            .collect();
        DVector::from_fn(l, |j, _| {
            (0..l).map(|k| phased[k] * self.vectors[(j, k)]).sum()
        })
    }

    pub fn matrix(&self, t: f64) -> DMatrix<C64> {
        let l = self.energies.len();
        DMatrix::from_fn(l, l, |i, j| {
            (0..l)
                .map(|k| {
                    C64::from_polar(self.vectors[(i, k)] * self.vectors[(j, k)], -self.energies[k] * t)
                })
                .sum()
        })
    }
}

fn check_site(site: usize, l: usize) -> Result<usize> {
    if site == 0 || site > l {
        return Err(Error::domain(format!("site {site} outside 1..={l}")));
    }
    Ok(site - 1)
}

/// P_j(t) = |(e^{−iht})_{j,site0}|² for a single excitation started on the
/// 1-based `site0`; columns are named `P1..PL`.
pub fn propagate_single_particle(
    h: &SingleParticleHamiltonian,
    site0: usize,
    times: &[f64],
) -> Result<TrajectoryTable> {
    let l = h.size();
    let s0 = check_site(site0, l)?;
    let prop = h.propagator();
    let rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| prop.column(s0, t).iter().map(|a| a.norm_sqr()).collect())
        .collect();
    let mut table = TrajectoryTable::new(times.to_vec());
    for j in 0..l {
        table.push_column(format!("P{}", j + 1), rows.iter().map(|r| r[j]).collect())?;
    }
    Ok(table)
}

/// Densities and pair correlations of two hard-core excitations.
#[derive(Debug, Clone)]
pub struct PairDynamics {
    pub times: Vec<f64>,
    /// `densities[k][j]` = P_{j+1}(t_k)
    pub densities: Vec<Vec<f64>>,
    /// `pair_correlations[k][(i, j)]` = ⟨n_{i+1} n_{j+1}⟩(t_k), symmetric with
    /// zero diagonal.
    pub pair_correlations: Vec<DMatrix<f64>>,
}

impl PairDynamics {
    pub fn to_table(&self) -> Result<TrajectoryTable> {
        let l = self.densities.first().map_or(0, Vec::len);
        let mut table = TrajectoryTable::new(self.times.clone());
        for j in 0..l {
            table.push_column(format!("P{}", j + 1), self.densities.iter().map(|r| r[j]).collect())?;
        }
        Ok(table)
    }
}

/// Two-excitation dynamics from 2×2 Slater determinants of single-particle
/// propagator columns. `sites0` are 1-based and must differ.
pub fn two_excitation_slater(
    h: &SingleParticleHamiltonian,
    sites0: (usize, usize),
    times: &[f64],
) -> Result<PairDynamics> {
    let l = h.size();
    let a = check_site(sites0.0, l)?;
    let b = check_site(sites0.1, l)?;
    if a == b {
        return Err(Error::domain(format!("both excitations start on site {}", a + 1)));
    }
    let prop = h.propagator();
    let mut densities = Vec::with_capacity(times.len());
    let mut pairs = Vec::with_capacity(times.len());
    for &t in times {
        let ua = prop.column(a, t);
        let ub = prop.column(b, t);
        let mut corr = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in (i + 1)..l {
                let amp = ua[i] * ub[j] - ua[j] * ub[i];
                let p = amp.norm_sqr();
                corr[(i, j)] = p;
                corr[(j, i)] = p;
            }
        }
        densities.push((0..l).map(|j| corr.row(j).sum()).collect());
        pairs.push(corr);
    }
    Ok(PairDynamics {
        times: times.to_vec(),
        densities,
        pair_correlations: pairs,
    })
}

/// ξ_WS = 2g/F in lattice sites.
pub fn wsl_length_analytic(coupling_mhz: f64, gradient_mhz: f64) -> Result<f64> {
    if !(gradient_mhz > 0.0) {
        return Err(Error::domain(format!(
            "gradient {gradient_mhz} MHz: localization length undefined for F <= 0"
        )));
    }
    if !(coupling_mhz > 0.0) {
        return Err(Error::domain("coupling must be positive"));
    }
    Ok(2.0 * coupling_mhz / gradient_mhz)
}

/// Exponentially localized single-particle amplitude profile centred on a
/// site.
#[derive(Debug, Clone, PartialEq)]
pub struct WslProfile {
    pub center: usize,
    pub xi: f64,
    /// Normalized amplitudes ∝ e^{−|j−center|/ξ}, site 1 first.
    pub amplitudes: Vec<f64>,
}

impl WslProfile {
    pub fn new(l: usize, center: usize, xi: f64) -> Result<Self> {
        check_site(center, l)?;
        if !(xi > 0.0) {
            return Err(Error::domain("localization length must be positive"));
        }
        let raw: Vec<f64> = (1..=l)
            .map(|j| (-(j.abs_diff(center) as f64) / xi).exp())
            .collect();
        let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        Ok(WslProfile {
            center,
            xi,
            amplitudes: raw.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn densities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }
}

/// Mean of P_j(t) over `n_samples` uniformly spaced times in
/// `[t_start, t_end]` for a particle started on the 1-based `site0`.
pub fn time_averaged_profile(
    h: &SingleParticleHamiltonian,
    site0: usize,
    t_start: f64,
    t_end: f64,
    n_samples: usize,
) -> Result<Vec<f64>> {
    let s0 = check_site(site0, h.size())?;
    if n_samples < 2 || !(t_end > t_start) {
        return Err(Error::domain("need t_end > t_start and at least two samples"));
    }
    let prop = h.propagator();
    let mut acc = vec![0.0; h.size()];
    for k in 0..n_samples {
        let t = t_start + (t_end - t_start) * k as f64 / (n_samples - 1) as f64;
        for (a, amp) in acc.iter_mut().zip(prop.column(s0, t).iter()) {
            *a += amp.norm_sqr();
        }
    }
    Ok(acc.into_iter().map(|a| a / n_samples as f64).collect())
}

/// Averaging window [5·T_B, 10·T_B] in ns for a gradient F/2π in MHz.
pub fn averaging_window_ns(gradient_mhz: f64) -> (f64, f64) {
    let tb = crate::units::bloch_period_ns(gradient_mhz);
    (5.0 * tb, 10.0 * tb)
}

/// Largest fitted distance: min(⌊3ξ_guess⌋, L/2 − 1).
pub fn default_fit_distance(l: usize, xi_guess: f64) -> usize {
    ((3.0 * xi_guess).floor() as usize).min((l / 2).saturating_sub(1))
}

/// Lengths above this are reported as a flat-profile fit error.
pub const MAX_FITTED_XI: f64 = 1e6;

/// Fits the amplitude decay length of a density profile around the 1-based
/// `center`.
///
/// Uses every site at distance 1..=`max_distance` on both sides, skipping the
/// two sites nearest each boundary, and regresses ln√P_j on the distance.
/// Returns −1/slope, so an exact profile P_j ∝ e^{−2|j−n|/ξ} yields ξ.
pub fn fit_localization_length(profile: &[f64], center: usize, max_distance: usize) -> Result<f64> {
    let l = profile.len();
    let c = check_site(center, l)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for d in 1..=max_distance {
        for j in [c.checked_sub(d), Some(c + d)].into_iter().flatten() {
            if j < 2 || j + 2 >= l {
                continue;
            }
            let p = profile[j];
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Fit(format!(
                    "non-positive density {p} at site {} in the tail",
                    j + 1
                )));
            }
            xs.push(d as f64);
            ys.push(0.5 * p.ln());
        }
    }
    let distinct = {
        let mut d: Vec<_> = xs.iter().map(|x| *x as usize).collect();
        d.dedup();
        d.len()
    };
    if xs.len() < 4 || distinct < 2 {
        return Err(Error::Fit(format!(
            "{} tail sites available, at least 4 at two distances needed",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let xi = -1.0 / slope;
    if !(xi > 0.0) || xi > MAX_FITTED_XI {
        return Err(Error::Fit(format!(
            "tail slope {slope:e} does not decay; profile is flat or growing"
        )));
    }
    Ok(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_device_off_diagonals() {
        let p = DeviceParams::paper_device();
        let h = single_particle_matrix(&p, &PotentialSpec::flat(), 5).unwrap();
        for (b, g) in [14.60, 14.65, 14.17, 14.26].iter().enumerate() {
            assert_eq!(h.matrix()[(b, b + 1)], mhz_to_angular(*g));
        }
        assert!(single_particle_matrix(&p, &PotentialSpec::flat(), 4).is_err());
    }

    #[test]
    fn three_site_spectrum() {
        let h = SingleParticleHamiltonian::uniform(3, 10.0, &PotentialSpec::flat()).unwrap();
        let g = mhz_to_angular(10.0);
        let e = h.eigenvalues();
        let s2 = std::f64::consts::SQRT_2;
        for (x, y) in e.iter().zip([-s2 * g, 0.0, s2 * g]) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_site_has_full_weight() {
        let h = SingleParticleHamiltonian::uniform(7, 14.0, &PotentialSpec::linear(5.0)).unwrap();
        let tab = propagate_single_particle(&h, 4, &[0.0]).unwrap();
        assert!((tab.column("P4").unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_site_transfer() {
        let h = SingleParticleHamiltonian::uniform(2, 14.6, &PotentialSpec::flat()).unwrap();
        let g = mhz_to_angular(14.6);
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let tab = propagate_single_particle(&h, 1, &times).unwrap();
        for (t, p) in times.iter().zip(tab.column("P2").unwrap()) {
            assert!((p - (g * t).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn slater_initial_and_conservation() {
        let h = SingleParticleHamiltonian::uniform(6, 14.0, &PotentialSpec::linear(8.0)).unwrap();
        let d = two_excitation_slater(&h, (2, 5), &[0.0, 13.0, 170.0]).unwrap();
        assert!((d.densities[0][1] - 1.0).abs() < 1e-14);
        assert!((d.densities[0][4] - 1.0).abs() < 1e-14);
        assert!((d.pair_correlations[0][(1, 4)] - 1.0).abs() < 1e-14);
        for row in &d.densities {
            assert!((row.iter().sum::<f64>() - 2.0).abs() < 1e-10);
        }
        assert!(two_excitation_slater(&h, (3, 3), &[0.0]).is_err());
    }

    #[test]
    fn analytic_length() {
        assert!((wsl_length_analytic(14.4, 15.0).unwrap() - 1.92).abs() < 1e-12);
        assert_eq!(wsl_length_analytic(7.5, 15.0).unwrap(), 1.0);
        assert!(wsl_length_analytic(14.4, 0.0).is_err());
        assert!(wsl_length_analytic(14.4, -1.0).is_err());
    }

    #[test]
    fn profile_normalized() {
        let p = WslProfile::new(11, 6, 1.5).unwrap();
        let norm: f64 = p.amplitudes.iter().map(|a| a * a).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((p.amplitudes[6] / p.amplitudes[5] - (-1.0f64 / 1.5).exp()).abs() < 1e-12);
    }

    #[test]
    fn exact_profile_fit() {
        let prof = WslProfile::new(41, 21, 2.0).unwrap().densities();
        let xi = fit_localization_length(&prof, 21, default_fit_distance(41, 2.0)).unwrap();
        assert!((xi - 2.0).abs() < 1e-10);
    }

    #[test]
    fn flat_profile_rejected() {
        let prof = vec![1.0 / 41.0; 41];
        assert!(matches!(fit_localization_length(&prof, 21, 6), Err(Error::Fit(_))));
        let mut holes = WslProfile::new(41, 21, 2.0).unwrap().densities();
        holes[23] = 0.0;
        assert!(matches!(fit_localization_length(&holes, 21, 6), Err(Error::Fit(_))));
        assert!(fit_localization_length(&holes, 21, 1).is_err());
    }

    #[test]
    fn fit_window() {
        assert_eq!(default_fit_distance(41, 2.0), 6);
        assert_eq!(default_fit_distance(41, 10.0), 19);
        assert_eq!(default_fit_distance(41, 1.0 / 0.6 * 2.0), 10);
    }
}

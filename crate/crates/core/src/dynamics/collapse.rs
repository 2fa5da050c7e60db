use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceParams, LatticeBasis, OperatorMatrix};
use crate::units::us_to_ns;

/// How the dephasing operators A_n are scaled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DephasingModel {
    /// A_n = √(1/T2*) n̂_n.
    #[default]
    T2Star,
    /// A_n = √(2γ_φ) n̂_n with γ_φ = 1/T2* − 1/(2T1), so that together with
    /// relaxation the coherence decays at 1/T2*.
    Pure,
}

/// Leakage (Γ_n = √(1/T1) σ⁻_n) and dephasing operators, one of each per
/// site, already scaled by the square root of their rates (ns⁻¹).
#[derive(Debug, Clone, Default)]
pub struct CollapseOperatorSet {
    pub leakage: Vec<OperatorMatrix>,
    pub leakage_rates: Vec<f64>,
    pub dephasing: Vec<OperatorMatrix>,
    pub dephasing_rates: Vec<f64>,
}

impl CollapseOperatorSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.leakage.is_empty() && self.dephasing.is_empty()
    }

    pub fn without_dephasing(&self) -> Self {
        CollapseOperatorSet {
            leakage: self.leakage.clone(),
            leakage_rates: self.leakage_rates.clone(),
            ..Default::default()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &OperatorMatrix> {
        self.leakage.iter().chain(self.dephasing.iter())
    }
}

/// Builds the per-site collapse operators on the full hard-core space.
pub fn make_collapse_ops(
    params: &DeviceParams,
    basis: &LatticeBasis,
    model: DephasingModel,
) -> Result<CollapseOperatorSet> {
    let LatticeBasis::Full { n_sites } = *basis else {
        return Err(Error::domain(format!(
            "collapse operators need the full space; {} is not closed under leakage",
            basis.tag()
        )));
    };
    params.validate()?;
    if n_sites != params.n_qubits {
        return Err(Error::domain(format!(
            "basis has {n_sites} sites but the device has {}",
            params.n_qubits
        )));
    }
    let tag = basis.tag();
    let dim = basis.dim();
    let mut set = CollapseOperatorSet::default();
    for s in 0..n_sites {
        let bit = 1usize << (n_sites - 1 - s);
        let t1 = us_to_ns(params.t1_us[s]);
        let t2 = us_to_ns(params.t2_star_us[s]);
        let gamma = 1.0 / t1;
        let dephasing = match model {
            DephasingModel::T2Star => 1.0 / t2,
            DephasingModel::Pure => {
                let phi = 1.0 / t2 - 0.5 / t1;
                if phi < 0.0 {
                    return Err(Error::domain(format!(
                        "site {}: T2* = {} us exceeds 2·T1, pure dephasing rate negative",
                        s + 1,
                        params.t2_star_us[s]
                    )));
                }
                2.0 * phi
            }
        };
        let lower = (0..dim)
            .filter(|i| i & bit != 0)
            .map(|i| (i & !bit, i, C64::new(gamma.sqrt(), 0.0)));
        set.leakage.push(OperatorMatrix::from_triplets(tag, dim, lower)?);
        set.leakage_rates.push(gamma);
        let number = (0..dim)
            .filter(|i| i & bit != 0)
            .map(|i| (i, i, C64::new(dephasing.sqrt(), 0.0)));
        set.dephasing.push(OperatorMatrix::from_triplets(tag, dim, number)?);
        set.dephasing_rates.push(dephasing);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_leakage() {
        let p = DeviceParams::paper_device().prefix(1).unwrap();
        let set = make_collapse_ops(&p, &LatticeBasis::full(1), DephasingModel::T2Star).unwrap();
        assert_eq!(set.leakage.len(), 1);
        let g = &set.leakage[0];
        assert!((g.get(0, 1).re - (1.0f64 / 17000.0).sqrt()).abs() < 1e-15);
        let gg = g.adjoint().matmul(g).unwrap();
        assert_eq!(gg.nnz(), 1);
        assert!((gg.get(1, 1).re - 1.0 / 17000.0).abs() < 1e-18);
    }

    #[test]
    fn counts_per_site() {
        let p = DeviceParams::paper_device().prefix(2).unwrap();
        let set = make_collapse_ops(&p, &LatticeBasis::full(2), DephasingModel::T2Star).unwrap();
        assert_eq!(set.leakage.len(), 2);
        assert_eq!(set.dephasing.len(), 2);
        assert!((set.dephasing_rates[1] - 1.0 / 4390.0).abs() < 1e-15);
    }

    #[test]
    fn pure_dephasing_rate() {
        let p = DeviceParams::paper_device().prefix(1).unwrap();
        let set = make_collapse_ops(&p, &LatticeBasis::full(1), DephasingModel::Pure).unwrap();
        let want = 2.0 * (1.0 / 1530.0 - 0.5 / 17000.0);
        assert!((set.dephasing_rates[0] - want).abs() < 1e-15);
    }

    #[test]
    fn sector_basis_rejected() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::sector(5, 1).unwrap();
        assert!(matches!(
            make_collapse_ops(&p, &basis, DephasingModel::T2Star),
            Err(Error::Domain(_))
        ));
    }
}

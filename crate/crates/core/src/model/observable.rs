use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::basis::LatticeBasis;
use super::device::{DeviceParams, PotentialSpec};
use super::hamiltonian::{build_operator, hop};
use super::operator::OperatorMatrix;
use crate::error::{Error, Result};

/// Pauli axis. Matrices are the standard ones in the computational
/// `(|0⟩, |1⟩)` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'X' | 'x' => Ok(Axis::X),
            'Y' | 'y' => Ok(Axis::Y),
            'Z' | 'z' => Ok(Axis::Z),
            other => Err(Error::domain(format!("invalid measurement axis `{other}`"))),
        }
    }

    /// σᵃ|bit⟩ = amp·|bit'⟩.
    fn act(self, bit: u8) -> (u8, C64) {
        match (self, bit) {
            (Axis::X, b) => (1 - b, C64::new(1.0, 0.0)),
            (Axis::Y, 0) => (1, C64::new(0.0, 1.0)),
            (Axis::Y, _) => (0, C64::new(0.0, -1.0)),
            (Axis::Z, 0) => (0, C64::new(1.0, 0.0)),
            (Axis::Z, _) => (1, C64::new(-1.0, 0.0)),
        }
    }
}

/// The observables tracked in trajectories. Indices are 1-based; bond `j`
/// joins sites `j` and `j+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservableKind {
    /// n̂_j = σ⁺_jσ⁻_j
    Density(usize),
    /// (g_{j,j+1}/2)(σˣσˣ + σʸσʸ) on bond j
    Kinetic(usize),
    /// h_j n̂_j + h_{j+1} n̂_{j+1}
    Potential(usize),
    /// i(σ⁺_jσ⁻_{j+1} − σ⁻_jσ⁺_{j+1}), positive for flow towards j+1
    SpinCurrent(usize),
    /// σᵃ_jσᵃ_{j+1}
    PauliPair(Axis, usize),
}

impl ObservableKind {
    /// Column name: `P{j}`, `K{j}`, `V{j}`, `J{j}`, or `XX{j}`/`YY{j}`/`ZZ{j}`.
    pub fn name(&self) -> String {
        match *self {
            ObservableKind::Density(j) => format!("P{j}"),
            ObservableKind::Kinetic(j) => format!("K{j}"),
            ObservableKind::Potential(j) => format!("V{j}"),
            ObservableKind::SpinCurrent(j) => format!("J{j}"),
            ObservableKind::PauliPair(a, j) => format!("{0}{0}{j}", a.as_char()),
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            ObservableKind::Density(j)
            | ObservableKind::Kinetic(j)
            | ObservableKind::Potential(j)
            | ObservableKind::SpinCurrent(j)
            | ObservableKind::PauliPair(_, j) => j,
        }
    }

    pub fn is_bond(&self) -> bool {
        !matches!(self, ObservableKind::Density(_))
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let split = s
            .find(|c: char| c.is_ascii_digit())
            .ok_or_else(|| Error::Parse(format!("observable `{s}` has no index")))?;
        let (prefix, digits) = s.split_at(split);
        let j: usize = digits
            .parse()
            .map_err(|_| Error::Parse(format!("observable `{s}` has a malformed index")))?;
        Ok(match prefix {
            "P" => ObservableKind::Density(j),
            "K" => ObservableKind::Kinetic(j),
            "V" => ObservableKind::Potential(j),
            "J" => ObservableKind::SpinCurrent(j),
            "XX" => ObservableKind::PauliPair(Axis::X, j),
            "YY" => ObservableKind::PauliPair(Axis::Y, j),
            "ZZ" => ObservableKind::PauliPair(Axis::Z, j),
            _ => return Err(Error::Parse(format!("unknown observable `{s}`"))),
        })
    }
}

/// Matrix of an observable on `basis`. Energies are in rad/ns.
pub fn build_observable(
    kind: ObservableKind,
    params: &DeviceParams,
    potential: &PotentialSpec,
    basis: &LatticeBasis,
) -> Result<OperatorMatrix> {
    let l = basis.n_sites();
    if l != params.n_qubits {
        return Err(Error::domain(format!(
            "basis has {l} sites but the device has {}",
            params.n_qubits
        )));
    }
    let j = kind.index();
    let upper = if kind.is_bond() { l.saturating_sub(1) } else { l };
    if j == 0 || j > upper {
        return Err(Error::domain(format!(
            "{} index {j} outside 1..={upper}",
            if kind.is_bond() { "bond" } else { "site" }
        )));
    }
    let s = j - 1;
    let op = match kind {
        ObservableKind::Density(_) => build_operator(basis, |occ, out| {
            if occ[s] > 0 {
                out.push((occ.to_vec(), C64::new(occ[s] as f64, 0.0)));
            }
        })?,
        ObservableKind::Kinetic(_) => {
            let g = params.coupling_angular(j);
            build_operator(basis, |occ, out| {
                for (to, from) in [(s, s + 1), (s + 1, s)] {
                    if let Some((next, amp)) = hop(occ, to, from) {
                        out.push((next, C64::new(g * amp, 0.0)));
                    }
                }
            })?
        }
        ObservableKind::Potential(_) => {
            let (h0, h1) = (potential.offset_angular(j), potential.offset_angular(j + 1));
            build_operator(basis, |occ, out| {
                let v = h0 * occ[s] as f64 + h1 * occ[s + 1] as f64;
                if v != 0.0 {
                    out.push((occ.to_vec(), C64::new(v, 0.0)));
                }
            })?
        }
        ObservableKind::SpinCurrent(_) => build_operator(basis, |occ, out| {
            if let Some((next, amp)) = hop(occ, s, s + 1) {
                out.push((next, C64::new(0.0, amp)));
            }
            if let Some((next, amp)) = hop(occ, s + 1, s) {
                out.push((next, C64::new(0.0, -amp)));
            }
        })?,
        ObservableKind::PauliPair(axis, _) => {
            if !basis.is_hard_core() {
                return Err(Error::domain("Pauli operators need a hard-core basis"));
            }
            build_operator(basis, |occ, out| {
                let (b0, a0) = axis.act(occ[s]);
                let (b1, a1) = axis.act(occ[s + 1]);
                let mut next = occ.to_vec();
                next[s] = b0;
                next[s + 1] = b1;
                out.push((next, a0 * a1));
            })?
        }
    };
    op.into_hermitian(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz_to_angular;
    use nalgebra::DVector;

    fn expect(op: &OperatorMatrix, psi: &DVector<C64>) -> C64 {
        psi.dotc(&op.apply(psi))
    }

    fn x_plus_x_plus_000() -> DVector<C64> {
        let basis = LatticeBasis::full(5);
        let mut psi = DVector::zeros(32);
        for occ in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
            let i = basis.index_of(&[occ[0], occ[1], 0, 0, 0]).unwrap();
            psi[i] = C64::new(0.5, 0.0);
        }
        psi
    }

    #[test]
    fn density_on_excited_site() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::sector(5, 1).unwrap();
        let n1 = build_observable(ObservableKind::Density(1), &p, &PotentialSpec::flat(), &basis).unwrap();
        let mut psi = DVector::zeros(5);
        psi[0] = C64::new(1.0, 0.0);
        assert_eq!(expect(&n1, &psi), C64::new(1.0, 0.0));
    }

    #[test]
    fn kinetic_on_x_plus_pair() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::full(5);
        let psi = x_plus_x_plus_000();
        let v = PotentialSpec::flat();
        let k1 = build_observable(ObservableKind::Kinetic(1), &p, &v, &basis).unwrap();
        let k4 = build_observable(ObservableKind::Kinetic(4), &p, &v, &basis).unwrap();
        let want = mhz_to_angular(7.30);
        assert!((expect(&k1, &psi).re - want).abs() < 1e-15);
        assert_eq!(expect(&k4, &psi).re, 0.0);
    }

    #[test]
    fn kinetic_equals_pauli_form() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::full(5);
        let v = PotentialSpec::flat();
        for j in 1..=4 {
            let k = build_observable(ObservableKind::Kinetic(j), &p, &v, &basis).unwrap();
            let xx = build_observable(ObservableKind::PauliPair(Axis::X, j), &p, &v, &basis).unwrap();
            let yy = build_observable(ObservableKind::PauliPair(Axis::Y, j), &p, &v, &basis).unwrap();
            let pauli = xx.add(&yy).unwrap().scaled(0.5 * p.coupling_angular(j));
            assert!((k.to_dense().unwrap() - pauli.to_dense().unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn current_equals_pauli_commutator_form() {
        // σ⁺ = |1⟩⟨0| corresponds to (σˣ − iσʸ)/2 with the standard σʸ, so the
        // current reads −(σˣσʸ − σʸσˣ)/2 in standard Pauli matrices.
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::full(2);
        let p2 = p.prefix(2).unwrap();
        let v = PotentialSpec::flat();
        let j = build_observable(ObservableKind::SpinCurrent(1), &p2, &v, &basis).unwrap();
        let x = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|r| C64::new(r, 0.0)));
        let y = nalgebra::DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
        );
        let xy = x.kronecker(&y) - y.kronecker(&x);
        assert!((j.to_dense().unwrap() + xy * C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn potential_density_counts_both_sites() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::full(5);
        let v = PotentialSpec::linear(10.0);
        let op = build_observable(ObservableKind::Potential(2), &p, &v, &basis).unwrap();
        let i = basis.index_of(&[0, 1, 1, 0, 0]).unwrap();
        assert!((op.get(i, i).re - mhz_to_angular(50.0)).abs() < 1e-15);
    }

    #[test]
    fn bond_out_of_range() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::full(5);
        let v = PotentialSpec::flat();
        for kind in [ObservableKind::Kinetic(5), ObservableKind::SpinCurrent(0), ObservableKind::Density(6)] {
            assert!(matches!(build_observable(kind, &p, &v, &basis), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn pauli_xx_leaves_sector() {
        let p = DeviceParams::paper_device();
        let basis = LatticeBasis::sector(5, 1).unwrap();
        let v = PotentialSpec::flat();
        assert!(build_observable(ObservableKind::PauliPair(Axis::X, 1), &p, &v, &basis).is_err());
        assert!(build_observable(ObservableKind::PauliPair(Axis::Z, 1), &p, &v, &basis).is_ok());
    }

    #[test]
    fn names_round_trip() {
        for kind in [
            ObservableKind::Density(3),
            ObservableKind::Kinetic(1),
            ObservableKind::Potential(2),
            ObservableKind::SpinCurrent(4),
            ObservableKind::PauliPair(Axis::Y, 2),
        ] {
            assert_eq!(kind.name().parse::<ObservableKind>().unwrap(), kind);
        }
        assert!("Q1".parse::<ObservableKind>().is_err());
        assert!("P".parse::<ObservableKind>().is_err());
    }
}

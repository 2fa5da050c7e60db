//! Expectation values and time series of observables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    evolve_lindblad_with, evolve_unitary, CollapseOperatorSet, LindbladOptions, QuantumState,
    StateData,
};
use crate::error::{Error, Result};
use crate::model::OperatorMatrix;

/// Imaginary parts below this are treated as rounding noise.
pub const IMAG_DISCARD_TOL: f64 = 1e-10;
/// Imaginary parts at or above this indicate an inconsistent computation.
pub const IMAG_ERROR_TOL: f64 = 1e-8;

/// ⟨ψ|O|ψ⟩ or tr(ρO) for a Hermitian observable.
pub fn expectation(state: &QuantumState, obs: &OperatorMatrix) -> Result<f64> {
    if state.basis() != obs.basis() {
        return Err(Error::domain(format!(
            "observable on {} applied to a state on {}",
            obs.basis(),
            state.basis()
        )));
    }
    if !(obs.is_flagged_hermitian() || obs.check_hermitian(1e-12)) {
        return Err(Error::domain("observable is not Hermitian"));
    }
    let value = match state.data() {
        StateData::Pure(psi) => psi.dotc(&obs.apply(psi)),
        StateData::Density(rho) => obs
            .entries()
            .iter()
            .map(|&(r, c, v)| v * rho[(c, r)])
            .sum(),
    };
    if value.im.abs() >= IMAG_ERROR_TOL {
        return Err(Error::Numerical(format!(
            "expectation value has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Time series of named observables, optionally with per-point standard
/// deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTable {
    times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    errors: Vec<Option<Vec<f64>>>,
}

impl TrajectoryTable {
    pub fn new(times: Vec<f64>) -> Self {
        TrajectoryTable {
            times,
            names: Vec::new(),
            columns: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.times.len() {
            return Err(Error::domain(format!(
                "column `{name}` has {} values for {} times",
                values.len(),
                self.times.len()
            )));
        }
        if self.names.contains(&name) {
            return Err(Error::domain(format!("duplicate column `{name}`")));
        }
        self.names.push(name);
        self.columns.push(values);
        self.errors.push(None);
        Ok(())
    }

    /// Attaches standard deviations to an existing column.
    pub fn set_errors(&mut self, name: &str, errors: Vec<f64>) -> Result<()> {
        let i = self.position(name)?;
        if errors.len() != self.times.len() {
            return Err(Error::domain(format!("error column `{name}` has the wrong length")));
        }
        if errors.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::domain(format!("error column `{name}` has negative entries")));
        }
        self.errors[i] = Some(errors);
        Ok(())
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::domain(format!("no column `{name}`")))
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.position(name).ok().map(|i| self.columns[i].as_slice())
    }

    pub fn errors(&self, name: &str) -> Option<&[f64]> {
        self.position(name).ok().and_then(|i| self.errors[i].as_deref())
    }

    pub fn has_errors(&self) -> bool {
        self.errors.iter().any(Option::is_some)
    }

    /// Multiplies a column (and its errors) by a constant, e.g. for unit changes.
    pub fn scale_column(&mut self, name: &str, factor: f64) -> Result<()> {
        let i = self.position(name)?;
        self.columns[i].iter_mut().for_each(|v| *v *= factor);
        if let Some(e) = &mut self.errors[i] {
            e.iter_mut().for_each(|v| *v *= factor.abs());
        }
        Ok(())
    }

    /// CSV with header `t_ns,<names...>`; error columns follow as
    /// `<name>_err`. Numbers use 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ns");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        for (name, err) in self.names.iter().zip(&self.errors) {
            if err.is_some() {
                let _ = write!(out, ",{name}_err");
            }
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&format_sig(*t));
            for col in &self.columns {
                out.push(',');
                out.push_str(&format_sig(col[k]));
            }
            for err in self.errors.iter().flatten() {
                out.push(',');
                out.push_str(&format_sig(err[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Formats with 9 significant digits in scientific notation.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0"
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// How a trajectory is evolved.
#[derive(Debug, Clone)]
pub enum EvolutionMode {
    Unitary,
    Lindblad {
        collapse: CollapseOperatorSet,
        options: LindbladOptions,
    },
}

/// Evolves the initial state and records noise-free expectations of every
/// named observable at each time.
pub fn trajectory(
    h: &OperatorMatrix,
    initial: &QuantumState,
    times: &[f64],
    observables: &[(String, OperatorMatrix)],
    mode: &EvolutionMode,
) -> Result<TrajectoryTable> {
    let snapshots = evolve(h, initial, times, mode)?;
    table_from_snapshots(times, &snapshots, observables)
}

pub fn evolve(
    h: &OperatorMatrix,
    initial: &QuantumState,
    times: &[f64],
    mode: &EvolutionMode,
) -> Result<Vec<QuantumState>> {
    match mode {
        EvolutionMode::Unitary => evolve_unitary(h, initial, times),
        EvolutionMode::Lindblad { collapse, options } => {
            evolve_lindblad_with(h, collapse, initial, times, options)
        }
    }
}

pub fn table_from_snapshots(
    times: &[f64],
    snapshots: &[QuantumState],
    observables: &[(String, OperatorMatrix)],
) -> Result<TrajectoryTable> {
    let mut table = TrajectoryTable::new(times.to_vec());
    for (name, op) in observables {
        let values = snapshots
            .iter()
            .map(|s| expectation(s, op))
            .collect::<Result<Vec<_>>>()?;
        table.push_column(name.clone(), values)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::prepare_initial_state;
    use crate::model::{build_observable, build_xy_hamiltonian, DeviceParams, LatticeBasis, ObservableKind, PotentialSpec};
    use num_complex::Complex64 as C64;

    fn setup(f: f64) -> (DeviceParams, PotentialSpec, LatticeBasis, OperatorMatrix) {
        let p = DeviceParams::paper_device();
        let v = PotentialSpec::linear(f);
        let b = LatticeBasis::full(5);
        let h = build_xy_hamiltonian(&p, &v, &b).unwrap();
        (p, v, b, h)
    }

    #[test]
    fn density_expectations() {
        let (p, v, b, _) = setup(0.0);
        let s = prepare_initial_state("10000", 5).unwrap();
        let n1 = build_observable(ObservableKind::Density(1), &p, &v, &b).unwrap();
        assert_eq!(expectation(&s, &n1).unwrap(), 1.0);
        let x = prepare_initial_state("X+X+000", 5).unwrap();
        let n3 = build_observable(ObservableKind::Density(3), &p, &v, &b).unwrap();
        assert_eq!(expectation(&x, &n3).unwrap(), 0.0);
        assert_eq!(expectation(&x.to_density(), &n3).unwrap(), 0.0);
    }

    #[test]
    fn kinetic_on_swap_state_matches_dense_arithmetic() {
        let p = DeviceParams::paper_device().prefix(2).unwrap();
        let v = PotentialSpec::flat();
        let b = LatticeBasis::full(2);
        let h = build_xy_hamiltonian(&p, &v, &b).unwrap();
        let k = build_observable(ObservableKind::Kinetic(1), &p, &v, &b).unwrap();
        let g = p.coupling_angular(1);
        let t = std::f64::consts::FRAC_PI_4 / g;
        let s = &evolve_unitary(&h, &prepare_initial_state("10", 2).unwrap(), &[t]).unwrap()[0];
        // dense oracle: ψ = cos(gt)|10⟩ − i sin(gt)|01⟩, K = g(|10⟩⟨01| + h.c.)
        let (c, sn) = ((g * t).cos(), (g * t).sin());
        let psi = [C64::new(0.0, 0.0), C64::new(0.0, -sn), C64::new(c, 0.0), C64::new(0.0, 0.0)];
        let mut kd = [[C64::new(0.0, 0.0); 4]; 4];
        kd[1][2] = C64::new(g, 0.0);
        kd[2][1] = C64::new(g, 0.0);
        let mut want = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                want += psi[i].conj() * kd[i][j] * psi[j];
            }
        }
        assert!((expectation(s, &k).unwrap() - want.re).abs() < 1e-14);
        assert!(want.re.abs() < 1e-14);
    }

    #[test]
    fn imaginary_residue_is_an_error() {
        // A non-Hermitian operator slips through only via a flagged-free path;
        // exercise the check with a state that makes ⟨O⟩ complex.
        let tag = crate::model::BasisTag::Full { n_sites: 1 };
        let o = OperatorMatrix::from_triplets(tag, 2, [(0, 1, C64::new(0.0, 1.0))]).unwrap();
        let s = prepare_initial_state("X+", 1).unwrap();
        assert!(expectation(&s, &o).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut t = TrajectoryTable::new(vec![0.0, 2.0]);
        t.push_column("P1", vec![1.0, 0.5]).unwrap();
        t.push_column("P2", vec![0.0, 0.25]).unwrap();
        t.set_errors("P1", vec![0.0, 0.01]).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t_ns,P1,P2,P1_err");
        assert_eq!(lines.next().unwrap(), "0.00000000e0,1.00000000e0,0.00000000e0,0.00000000e0");
        assert_eq!(lines.next().unwrap(), "2.00000000e0,5.00000000e-1,2.50000000e-1,1.00000000e-2");
        assert!(t.push_column("P3", vec![1.0]).is_err());
        assert!(t.set_errors("P2", vec![-1.0, 0.0]).is_err());
    }

    #[test]
    fn populations_sum_to_one_under_unitary() {
        let (p, v, b, h) = setup(0.0);
        let obs: Vec<_> = (1..=5)
            .map(|j| {
                let k = ObservableKind::Density(j);
                (k.name(), build_observable(k, &p, &v, &b).unwrap())
            })
            .collect();
        let times: Vec<f64> = (0..=150).map(|k| 2.0 * k as f64).collect();
        let psi0 = prepare_initial_state("10000", 5).unwrap();
        let tab = trajectory(&h, &psi0, &times, &obs, &EvolutionMode::Unitary).unwrap();
        for k in 0..times.len() {
            let s: f64 = (1..=5).map(|j| tab.column(&format!("P{j}")).unwrap()[k]).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

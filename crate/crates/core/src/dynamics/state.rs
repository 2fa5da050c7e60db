use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{BasisTag, LatticeBasis, SectorBasis};

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Pure(DVector<C64>),
    Density(DMatrix<C64>),
}

/// A pure state vector or density matrix tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    data: StateData,
    basis: BasisTag,
}

impl QuantumState {
    /// Validated pure state (‖ψ‖ = 1 to 1e-10).
    pub fn pure(basis: BasisTag, psi: DVector<C64>) -> Result<Self> {
        if psi.len() != basis.dim() {
            return Err(Error::domain(format!(
                "vector of length {} does not fit {basis} (dim {})",
                psi.len(),
                basis.dim()
            )));
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("state norm {norm} differs from 1")));
        }
        Ok(QuantumState {
            data: StateData::Pure(psi),
            basis,
        })
    }

    /// Validated density matrix: Hermitian, unit trace, positive semidefinite.
    pub fn density(basis: BasisTag, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::domain(format!(
                "{}x{} matrix does not fit {basis}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let herm = hermiticity_defect(&rho);
        if herm > HERMITIAN_TOL {
            return Err(Error::domain(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::domain(format!("density matrix trace {tr} differs from 1")));
        }
        let min = min_eigenvalue(&rho);
        if min < -POSITIVITY_TOL {
            return Err(Error::domain(format!("density matrix has eigenvalue {min:e} < 0")));
        }
        Ok(QuantumState {
            data: StateData::Density(rho),
            basis,
        })
    }

    pub(crate) fn from_parts(basis: BasisTag, data: StateData) -> Self {
        QuantumState { data, basis }
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn vector(&self) -> Option<&DVector<C64>> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn matrix(&self) -> Option<&DMatrix<C64>> {
        match &self.data {
            StateData::Pure(_) => None,
            StateData::Density(m) => Some(m),
        }
    }

    /// |ψ⟩⟨ψ| for pure states; density matrices are returned as is.
    pub fn to_density(&self) -> QuantumState {
        match &self.data {
            StateData::Pure(v) => QuantumState {
                data: StateData::Density(v * v.adjoint()),
                basis: self.basis,
            },
            StateData::Density(_) => self.clone(),
        }
    }

    pub fn norm(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm(),
            StateData::Density(m) => m.trace().re,
        }
    }

    pub fn trace(&self) -> C64 {
        match &self.data {
            StateData::Pure(v) => C64::new(v.norm_squared(), 0.0),
            StateData::Density(m) => m.trace(),
        }
    }

    /// Probability of each basis state.
    pub fn populations(&self) -> Vec<f64> {
        match &self.data {
            StateData::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect(),
            StateData::Density(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 0.0,
            StateData::Density(m) => hermiticity_defect(m),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 0.0,
            StateData::Density(m) => min_eigenvalue(m),
        }
    }

    /// Restricts a full-space pure state to a sector. Fails when more than
    /// 1e-10 of the norm lies outside the sector.
    pub fn project_to_sector(&self, sector: &SectorBasis) -> Result<QuantumState> {
        let n = sector.n_sites();
        if self.basis != (BasisTag::Full { n_sites: n }) {
            return Err(Error::domain(format!(
                "sector projection needs a full-space state, got {}",
                self.basis
            )));
        }
        let psi = self
            .vector()
            .ok_or_else(|| Error::domain("sector projection of a density matrix"))?;
        let sub = DVector::from_iterator(sector.len(), sector.states().iter().map(|&m| psi[m as usize]));
        let outside = (psi.norm_squared() - sub.norm_squared()).abs();
        if outside > NORM_TOL {
            return Err(Error::domain(format!(
                "state has weight {outside:e} outside {}",
                sector.tag()
            )));
        }
        QuantumState::pure(sector.tag(), sub)
    }

    /// Embeds a sector state back into the full hard-core space.
    pub fn embed_in_full(&self, sector: &SectorBasis) -> Result<QuantumState> {
        if self.basis != sector.tag() {
            return Err(Error::domain(format!(
                "state lives in {}, not {}",
                self.basis,
                sector.tag()
            )));
        }
        let psi = self
            .vector()
            .ok_or_else(|| Error::domain("embedding a density matrix"))?;
        let full = LatticeBasis::full(sector.n_sites());
        let mut out = DVector::zeros(full.dim());
        for (i, &m) in sector.states().iter().enumerate() {
            out[m as usize] = psi[i];
        }
        Ok(QuantumState {
            data: StateData::Pure(out),
            basis: full.tag(),
        })
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Single-site preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteState {
    Zero,
    One,
    /// (|0⟩ + |1⟩)/√2, prepared by an X/2 pulse.
    XPlus,
    /// (|0⟩ − |1⟩)/√2
    XMinus,
}

impl SiteState {
    fn amplitudes(self) -> [f64; 2] {
        match self {
            SiteState::Zero => [1.0, 0.0],
            SiteState::One => [0.0, 1.0],
            SiteState::XPlus => [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            SiteState::XMinus => [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        }
    }

    fn token(self) -> &'static str {
        match self {
            SiteState::Zero => "0",
            SiteState::One => "1",
            SiteState::XPlus => "X+",
            SiteState::XMinus => "X-",
        }
    }
}

/// Product-state preparation, written site 1 first with tokens `0`, `1`,
/// `X+` and `X-`; e.g. `10000` or `X+X+000`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpec {
    sites: Vec<SiteState>,
}

impl StateSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sites = Vec::new();
        let mut chars = text.trim().chars().peekable();
        while let Some(c) = chars.next() {
            let site = match c {
                '0' => SiteState::Zero,
                '1' => SiteState::One,
                'X' | 'x' => match chars.next() {
                    Some('+') => SiteState::XPlus,
                    Some('-') => SiteState::XMinus,
                    other => {
                        return Err(Error::Parse(format!(
                            "expected `+` or `-` after `X`, found {other:?}"
                        )))
                    }
                },
                other => return Err(Error::Parse(format!("unexpected character `{other}` in state spec"))),
            };
            sites.push(site);
        }
        if sites.is_empty() {
            return Err(Error::Parse("empty state spec".into()));
        }
        Ok(StateSpec { sites })
    }

    pub fn sites(&self) -> &[SiteState] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Excitation number when every site is `0` or `1`.
    pub fn excitation_number(&self) -> Option<usize> {
        self.sites
            .iter()
            .map(|s| match s {
                SiteState::Zero => Some(0),
                SiteState::One => Some(1),
                _ => None,
            })
            .sum()
    }

    /// The product state in the full 2^L basis.
    pub fn to_state(&self) -> QuantumState {
        let n = self.sites.len();
        let mut psi = DVector::from_element(1, C64::new(1.0, 0.0));
        for site in &self.sites {
            let [a0, a1] = site.amplitudes();
            let mut next = DVector::zeros(psi.len() * 2);
            for (i, &amp) in psi.iter().enumerate() {
                next[2 * i] = amp * a0;
                next[2 * i + 1] = amp * a1;
            }
            psi = next;
        }
        QuantumState {
            data: StateData::Pure(psi),
            basis: BasisTag::Full { n_sites: n },
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StateSpec::parse(s)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sites {
            f.write_str(s.token())?;
        }
        Ok(())
    }
}

/// Parses `spec` and prepares the product state on `n_sites` sites in the
/// full basis.
pub fn prepare_initial_state(spec: &str, n_sites: usize) -> Result<QuantumState> {
    let parsed = StateSpec::parse(spec)?;
    if parsed.n_sites() != n_sites {
        return Err(Error::Parse(format!(
            "state spec `{spec}` has {} sites, expected {n_sites}",
            parsed.n_sites()
        )));
    }
    Ok(parsed.to_state())
}

//! Time evolution of pure states and density matrices under a fixed
//! Hamiltonian.

mod collapse;
mod krylov;
mod lindblad;
mod state;
mod unitary;

pub use collapse::{make_collapse_ops, CollapseOperatorSet, DephasingModel};
pub use krylov::{evolve_krylov, KrylovOptions};
pub use lindblad::{evolve_lindblad, evolve_lindblad_with, LindbladOptions, DEFAULT_LINDBLAD_STEP_NS, MAX_LINDBLAD_SITES};
pub use state::{prepare_initial_state, QuantumState, SiteState, StateData, StateSpec};
pub use unitary::{evolve_unitary, SpectralPropagator};

use crate::error::{Error, Result};
use crate::model::OperatorMatrix;

pub(crate) fn require_hermitian(h: &OperatorMatrix) -> Result<()> {
    if h.is_flagged_hermitian() || h.check_hermitian(1e-12) {
        Ok(())
    } else {
        Err(Error::domain("Hamiltonian is not Hermitian"))
    }
}

//! Lattice model: device parameters, occupation bases, sparse operators,
//! Hamiltonians and observables.

mod basis;
mod device;
mod hamiltonian;
mod observable;
mod operator;

pub use basis::{BasisTag, LatticeBasis, SectorBasis, build_sector_basis};
pub use device::{DeviceParams, PotentialSpec, PAPER_DEVICE};
pub use hamiltonian::{
    build_bose_hubbard_hamiltonian, build_hamiltonian_on, build_xy_hamiltonian,
    total_excitation_operator, DEFAULT_FOCK_CUTOFF,
};
pub use observable::{build_observable, Axis, ObservableKind};
pub use operator::{OperatorMatrix, MAX_DENSE_DIM};

//! One and two bosons in a tight-binding lattice with a weak parabolic trap.
//!
//! Builds Bose-Hubbard Hamiltonians in the one-boson, two-boson and effective
//! dimer sectors, diagonalizes them densely, prepares wavepackets and
//! propagates them in time.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod spectral;
pub mod wavepacket;

pub use dynamics::{
    center_of_mass, chebyshev_evolve, density, estimate_period, evolve, monomer_admixture, pair_projection,
    uniform_times, Trajectory,
};
pub use error::{Error, Result};
pub use model::{
    build_dimer_hamiltonian, build_single_hamiltonian, build_two_boson_hamiltonian, default_half_width, FockBasis,
    FockState, HamiltonianMatrix, Provenance, Sector, SystemSpec,
};
pub use spectral::{classify_spectrum, diagonalize, BandClassification, SpectralDecomposition};
pub use wavepacket::{lift_dimer_state, localized_packet, shifted_ground_state, symmetrized_product, QuantumState};

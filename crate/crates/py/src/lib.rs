//! Python bindings for the `qlattice` core crate.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qlattice::dynamics::{self, Revival};
use qlattice::spectral::{self, LevelClass};
use qlattice::wavepacket;
use qlattice::Error;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_sector(name: &str) -> PyResult<qlattice::Sector> {
    match name {
        "one-boson" | "single" => Ok(qlattice::Sector::Single),
        "two-boson" => Ok(qlattice::Sector::TwoBoson),
        "dimer" => Ok(qlattice::Sector::Dimer),
        other => Err(PyValueError::new_err(format!(
            "unknown sector `{other}`; expected one-boson, two-boson or dimer"
        ))),
    }
}

/// Lattice parameters `J`, `Omega`, `U` and half-width `M`.
#[pyclass(name = "SystemSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PySystemSpec(qlattice::SystemSpec);

#[pymethods]
impl PySystemSpec {
    #[new]
    #[pyo3(signature = (J, Omega, U, M))]
    #[allow(non_snake_case)]
    fn new(J: f64, Omega: f64, U: f64, M: usize) -> PyResult<Self> {
        qlattice::SystemSpec::new(J, Omega, U, M).map(Self).map_err(to_py)
    }

    /// `J = 1` and `Omega = 1 / ratio`.
    #[staticmethod]
    #[pyo3(signature = (ratio, U, M))]
    #[allow(non_snake_case)]
    fn from_ratio(ratio: f64, U: f64, M: usize) -> PyResult<Self> {
        qlattice::SystemSpec::from_ratio(ratio, U, M).map(Self).map_err(to_py)
    }

    /// Smallest safe half-width for the given parameters and sector.
    #[staticmethod]
    #[pyo3(signature = (J, Omega, U, sector = "one-boson"))]
    #[allow(non_snake_case)]
    fn default_half_width(J: f64, Omega: f64, U: f64, sector: &str) -> PyResult<usize> {
        qlattice::default_half_width(J, Omega, U, parse_sector(sector)?).map_err(to_py)
    }

    #[getter(J)]
    fn hopping(&self) -> f64 {
        self.0.hopping
    }

    #[getter(Omega)]
    fn trap(&self) -> f64 {
        self.0.trap
    }

    #[getter(U)]
    fn interaction(&self) -> f64 {
        self.0.interaction
    }

    #[getter(M)]
    fn half_width(&self) -> usize {
        self.0.half_width
    }

    fn num_sites(&self) -> usize {
        self.0.num_sites()
    }

    fn __repr__(&self) -> String {
        let s = &self.0;
        format!("SystemSpec(J={}, Omega={}, U={}, M={})", s.hopping, s.trap, s.interaction, s.half_width)
    }
}

/// Sparse Hamiltonian in one sector.
#[pyclass(name = "Hamiltonian", frozen)]
struct PyHamiltonian(qlattice::HamiltonianMatrix);

#[pymethods]
impl PyHamiltonian {
    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn sector(&self) -> String {
        self.0.basis().sector().to_string()
    }

    /// Energy added to every diagonal entry (dimer internal energy or 0).
    #[getter]
    fn energy_offset(&self) -> f64 {
        self.0.energy_offset()
    }

    /// Basis labels such as `|3>`, `|1,2>` or `|2_0>`.
    fn basis_labels(&self) -> Vec<String> {
        self.0.basis().states().iter().map(|s| s.to_string()).collect()
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        self.0.to_dense().rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn expectation(&self, state: &PyState) -> PyResult<f64> {
        if state.0.len() != self.0.dim() {
            return Err(PyValueError::new_err("state and Hamiltonian have different dimensions"));
        }
        Ok(self.0.expectation(state.0.amplitudes()))
    }
}

/// One-boson chain `Omega j^2 - J (hops)`.
#[pyfunction]
fn build_single_hamiltonian(spec: &PySystemSpec) -> PyResult<PyHamiltonian> {
    qlattice::build_single_hamiltonian(&spec.0).map(PyHamiltonian).map_err(to_py)
}

/// Two-boson Bose-Hubbard Hamiltonian on symmetrized Fock states.
#[pyfunction]
fn build_two_boson_hamiltonian(spec: &PySystemSpec) -> PyResult<PyHamiltonian> {
    qlattice::build_two_boson_hamiltonian(&spec.0).map(PyHamiltonian).map_err(to_py)
}

/// Effective dimer chain; `internal_energy` adds `U - J2` to the diagonal.
#[pyfunction]
#[pyo3(signature = (spec, internal_energy = false))]
fn build_dimer_hamiltonian(spec: &PySystemSpec, internal_energy: bool) -> PyResult<PyHamiltonian> {
    qlattice::build_dimer_hamiltonian(&spec.0, internal_energy)
        .map(PyHamiltonian)
        .map_err(to_py)
}

/// Eigenpairs in ascending energy order.
#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum(qlattice::SpectralDecomposition);

#[pymethods]
impl PySpectrum {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    fn energy(&self, k: usize) -> PyResult<f64> {
        self.check(k)?;
        Ok(self.0.energy(k))
    }

    fn eigenvector(&self, k: usize) -> PyResult<Vec<f64>> {
        self.check(k)?;
        Ok(self.0.eigenvector(k).to_vec())
    }

    fn state(&self, k: usize) -> PyResult<PyState> {
        self.check(k)?;
        Ok(PyState(self.0.state(k)))
    }

    /// `"even"`, `"odd"` or `"mixed"` under `j -> -j`.
    fn parity(&self, k: usize) -> PyResult<String> {
        self.check(k)?;
        Ok(self.0.parity(k).to_string())
    }

    fn orthonormality_error(&self) -> f64 {
        self.0.orthonormality_error()
    }

    fn classify(&self) -> PyResult<PyClassification> {
        spectral::classify_spectrum(&self.0).map(PyClassification).map_err(to_py)
    }
}

impl PySpectrum {
    fn check(&self, k: usize) -> PyResult<()> {
        if k >= self.0.len() {
            return Err(PyIndexError::new_err(format!("level {k} out of range ({} levels)", self.0.len())));
        }
        Ok(())
    }
}

#[pyfunction]
fn diagonalize(h: &PyHamiltonian) -> PyResult<PySpectrum> {
    qlattice::diagonalize(&h.0).map(PySpectrum).map_err(to_py)
}

/// Band, localized-pair and crossover labels for a trapped spectrum.
#[pyclass(name = "Classification", frozen)]
struct PyClassification(qlattice::BandClassification);

#[pymethods]
impl PyClassification {
    #[getter]
    fn band_count(&self) -> usize {
        self.0.band_count
    }

    #[getter]
    fn predicted_band_count(&self) -> Option<usize> {
        self.0.predicted_count
    }

    #[getter]
    fn j_max(&self) -> Option<f64> {
        self.0.j_max
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.0.classes.iter().map(|c| c.to_string()).collect()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.0.energies.clone()
    }

    /// `(lower, upper, centre, energy, splitting)` per degenerate pair.
    #[getter]
    fn localized_pairs(&self) -> Vec<(usize, usize, usize, f64, f64)> {
        self.0
            .localized_pairs
            .iter()
            .map(|p| (p.lower, p.upper, p.center, p.energy, p.splitting))
            .collect()
    }

    #[getter]
    fn localized_count(&self) -> usize {
        self.0.count(LevelClass::Localized)
    }

    #[getter]
    fn warning(&self) -> Option<String> {
        self.0.warning.clone()
    }
}

/// Normalized state vector in a Fock basis.
#[pyclass(name = "State", frozen)]
struct PyState(qlattice::QuantumState);

#[pymethods]
impl PyState {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn sector(&self) -> String {
        self.0.sector().to_string()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn norm(&self) -> f64 {
        self.0.norm()
    }

    fn overlap(&self, other: &PyState) -> PyResult<Complex64> {
        self.0.overlap(&other.0).map_err(to_py)
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        self.0.fidelity(&other.0).map_err(to_py)
    }

    /// Mean occupation per site, `-M..=M`.
    fn density(&self) -> Vec<f64> {
        dynamics::density(&self.0)
    }

    fn center_of_mass(&self) -> f64 {
        dynamics::center_of_mass(&self.0)
    }

    /// Weight on doubly occupied sites; two-boson states only.
    fn pair_projection(&self) -> PyResult<f64> {
        dynamics::pair_projection(&self.0).map_err(to_py)
    }

    /// Basis state `k` of the same basis as `like`.
    #[staticmethod]
    fn basis_state(like: &PyState, k: usize) -> PyResult<PyState> {
        if k >= like.0.len() {
            return Err(PyIndexError::new_err(format!("basis index {k} out of range")));
        }
        Ok(PyState(qlattice::QuantumState::basis_state(Arc::clone(like.0.basis()), k)))
    }
}

/// Trap ground state translated by `shift` sites.
#[pyfunction]
#[pyo3(signature = (spec, shift, sector = "one-boson", staggered = false))]
fn shifted_ground_state(spec: &PySystemSpec, shift: i64, sector: &str, staggered: bool) -> PyResult<PyState> {
    wavepacket::shifted_ground_state(&spec.0, shift, parse_sector(sector)?, staggered)
        .map(PyState)
        .map_err(to_py)
}

/// Superposition of the lowest `levels` eigenstates maximizing weight on `target`.
#[pyfunction]
fn localized_packet(spectrum: &PySpectrum, target: i64, levels: usize) -> PyResult<PyState> {
    qlattice::localized_packet(&spectrum.0, target, levels)
        .map(PyState)
        .map_err(to_py)
}

/// Two-boson state from two one-boson states.
#[pyfunction]
fn symmetrized_product(psi1: &PyState, psi2: &PyState) -> PyResult<PyState> {
    qlattice::symmetrized_product(&psi1.0, &psi2.0).map(PyState).map_err(to_py)
}

/// Dimer amplitudes placed on `|2_j>` of the two-boson basis.
#[pyfunction]
fn lift_dimer_state(dimer: &PyState) -> PyResult<PyState> {
    qlattice::lift_dimer_state(&dimer.0).map(PyState).map_err(to_py)
}

/// Sampled time evolution.
#[pyclass(name = "Trajectory", frozen)]
struct PyTrajectory(qlattice::Trajectory);

#[pymethods]
impl PyTrajectory {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    fn state(&self, i: usize) -> PyResult<PyState> {
        if i >= self.0.len() {
            return Err(PyIndexError::new_err(format!("sample {i} out of range")));
        }
        Ok(PyState(self.0.state(i)))
    }

    /// One row of site densities per sample.
    fn densities(&self) -> Vec<Vec<f64>> {
        self.0.densities().rows().into_iter().map(|r| r.to_vec()).collect()
    }

    fn centers_of_mass(&self) -> Vec<f64> {
        self.0.centers_of_mass()
    }

    fn pair_projections(&self) -> PyResult<Vec<f64>> {
        self.0.pair_projections().map_err(to_py)
    }

    fn fidelities(&self, reference: &PyState) -> PyResult<Vec<f64>> {
        self.0.fidelities(&reference.0).map_err(to_py)
    }

    /// Largest occupancy of the two outermost sites and when it occurred.
    fn max_edge_occupancy(&self) -> (f64, f64) {
        self.0.max_edge_occupancy()
    }

    /// Dominant period of the centre of mass, if one stands out of the noise.
    fn period(&self) -> PyResult<Option<f64>> {
        self.0.period().map_err(to_py)
    }

    /// `(norm_drift, energy_drift)` against `h`.
    fn drifts(&self, h: &PyHamiltonian) -> PyResult<(f64, f64)> {
        let r = self.0.check_invariants(&h.0).map_err(to_py)?;
        Ok((r.norm_drift, r.energy_drift))
    }
}

/// Exact propagation in the eigenbasis of `spectrum` at the given times.
#[pyfunction]
fn evolve(spectrum: &PySpectrum, psi0: &PyState, times: Vec<f64>) -> PyResult<PyTrajectory> {
    qlattice::evolve(&spectrum.0, &psi0.0, &times).map(PyTrajectory).map_err(to_py)
}

/// `samples` equally spaced times from 0 to `t_max`.
#[pyfunction]
fn uniform_times(t_max: f64, samples: usize) -> PyResult<Vec<f64>> {
    qlattice::uniform_times(t_max, samples).map_err(to_py)
}

/// Harmonic oscillation period for the sector's effective trap.
#[pyfunction]
#[pyo3(signature = (spec, sector = "one-boson"))]
fn nominal_period(spec: &PySystemSpec, sector: &str) -> PyResult<f64> {
    dynamics::nominal_period(&spec.0, parse_sector(sector)?).map_err(to_py)
}

/// Centre-of-mass period measured over a window of several nominal periods.
#[pyfunction]
fn measure_period(spectrum: &PySpectrum, psi0: &PyState, nominal: f64) -> PyResult<Option<f64>> {
    dynamics::measure_period(&spectrum.0, &psi0.0, nominal).map_err(to_py)
}

/// `(at_nominal, best, best_time)` return probabilities near `tau`.
#[pyfunction]
fn revival(spectrum: &PySpectrum, psi0: &PyState, tau: f64) -> PyResult<(f64, f64, f64)> {
    let Revival {
        at_nominal,
        best,
        best_time,
    } = dynamics::revival(&spectrum.0, &psi0.0, tau).map_err(to_py)?;
    Ok((at_nominal, best, best_time))
}

#[pymodule]
fn qlattice_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySystemSpec>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyClassification>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(build_single_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(build_two_boson_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(build_dimer_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(diagonalize, m)?)?;
    m.add_function(wrap_pyfunction!(shifted_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(localized_packet, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrized_product, m)?)?;
    m.add_function(wrap_pyfunction!(lift_dimer_state, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_times, m)?)?;
    m.add_function(wrap_pyfunction!(nominal_period, m)?)?;
    m.add_function(wrap_pyfunction!(measure_period, m)?)?;
    m.add_function(wrap_pyfunction!(revival, m)?)?;
    Ok(())
}

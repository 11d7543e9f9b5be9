//! Executes a resolved run and writes its artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{Experiment, InitialState, ResolvedRun};
use crate::dynamics::{self, Trajectory, BOUNDARY_LIMIT};
use crate::error::Result;
use crate::model::{
    build_dimer_hamiltonian, build_single_hamiltonian, build_two_boson_hamiltonian, HamiltonianMatrix, Sector,
    SystemSpec,
};
use crate::spectral::{self, classify_spectrum, diagonalize, SpectralDecomposition};
use crate::wavepacket::{self, QuantumState};

/// Random coefficient vectors drawn for the localized-packet optimality check.
pub const OPTIMALITY_SAMPLES: usize = 100_000;

pub fn hamiltonian(spec: &SystemSpec, sector: Sector) -> Result<HamiltonianMatrix> {
    match sector {
        Sector::Single => build_single_hamiltonian(spec),
        Sector::TwoBoson => build_two_boson_hamiltonian(spec),
        Sector::Dimer => build_dimer_hamiltonian(spec, true),
    }
}

/// Initial state for `init`, built in the sector of `dec`.
pub fn initial_state(init: &InitialState, dec: &SpectralDecomposition) -> Result<QuantumState> {
    let spec = dec.spec();
    match *init {
        InitialState::ShiftedGround { shift } => wavepacket::shifted_ground_state(spec, shift, Sector::Single, false),
        InitialState::LocalizedPacket { j_prime, levels } => wavepacket::localized_packet(dec, j_prime, levels),
        InitialState::Product { shifts: [a, b] } => {
            let psi1 = wavepacket::shifted_ground_state(spec, a, Sector::Single, false)?;
            let psi2 = wavepacket::shifted_ground_state(spec, b, Sector::Single, false)?;
            wavepacket::symmetrized_product(&psi1, &psi2)
        }
        InitialState::DimerAttractive { shift } | InitialState::DimerRepulsive { shift } => {
            let staggered = matches!(init, InitialState::DimerRepulsive { .. });
            let dimer = wavepacket::shifted_ground_state(spec, shift, Sector::Dimer, staggered)?;
            match dec.sector() {
                Sector::TwoBoson => wavepacket::lift_dimer_state(&dimer),
                _ => Ok(dimer),
            }
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Artifacts of a finished run.
#[derive(Debug)]
pub struct RunOutcome {
    pub output: PathBuf,
    pub metadata: Value,
}

pub fn execute(run: &ResolvedRun, out: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out)?;
    let measured = if run.experiment.is_spectrum() {
        spectrum(run, out)?
    } else {
        evolution(run, out)?
    };
    let mut config = run.to_config();
    config.output = Some(out.to_path_buf());
    let metadata = json!({
        "library": "qlattice",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "measured": measured,
    });
    write_json(&out.join("metadata.json"), &metadata)?;
    Ok(RunOutcome {
        output: out.to_path_buf(),
        metadata,
    })
}

fn spectrum(run: &ResolvedRun, out: &Path) -> Result<Value> {
    let h = hamiltonian(&run.spec, run.sector)?;
    let dec = diagonalize(&h)?;
    let mut csv = create(&out.join("spectrum.csv"))?;
    let measured = if run.sector == Sector::TwoBoson {
        writeln!(csv, "k,energy,parity,class")?;
        for k in 0..dec.len() {
            writeln!(csv, "{k},{:.16e},{},", dec.energy(k), dec.parity(k))?;
        }
        json!({ "levels": dec.len(), "ground_energy": dec.energy(0) })
    } else if run.spec.trap == 0.0 {
        writeln!(csv, "k,energy,parity,class")?;
        for k in 0..dec.len() {
            writeln!(csv, "{k},{:.16e},{},band", dec.energy(k), dec.parity(k))?;
        }
        json!({ "levels": dec.len(), "ground_energy": dec.energy(0) })
    } else {
        let class = classify_spectrum(&dec)?;
        class.write_csv(&mut csv)?;
        let max_splitting = class.degeneracy_splittings().into_iter().fold(0.0, f64::max);
        json!({
            "levels": dec.len(),
            "band_count": class.band_count,
            "predicted_band_count": class.predicted_count,
            "j_max": class.j_max,
            "ground_energy": class.energies[0],
            "harmonic_ground_energy": spectral::harmonic_energy(&run.spec, 0, run.sector)?,
            "localized_pairs": class.localized_pairs.len(),
            "crossover_levels": class.count(spectral::LevelClass::Crossover),
            "max_pair_splitting": max_splitting,
            "warning": class.warning,
        })
    };
    csv.flush()?;
    Ok(measured)
}

fn write_trajectory(traj: &Trajectory, out: &Path, stem: &str) -> Result<()> {
    let mut csv = create(&out.join(format!("{stem}.csv")))?;
    traj.write_csv(&mut csv)?;
    csv.flush()?;
    write_json(&out.join(format!("{stem}.json")), &traj.sidecar())
}

/// Evolves, checks the invariants and the boundary guard, and summarizes.
fn evolve_checked(
    h: &HamiltonianMatrix,
    dec: &SpectralDecomposition,
    psi0: &QuantumState,
    times: &[f64],
) -> Result<(Trajectory, Value)> {
    let traj = dynamics::evolve(dec, psi0, times)?;
    let drift = traj.check_invariants(h)?;
    let trapped = h.spec().trap > 0.0;
    if trapped {
        traj.check_boundary(BOUNDARY_LIMIT)?;
    }
    let mut summary = json!({
        "norm_drift": drift.norm_drift,
        "energy_drift": drift.energy_drift,
        "max_edge_occupancy": traj.max_edge_occupancy().0,
        "max_density_drift": traj.max_density_drift(),
    });
    if traj.sector() == Sector::TwoBoson {
        let pp = traj.pair_projections()?;
        summary["pair_projection_initial"] = json!(pp[0]);
        summary["pair_projection_max"] = json!(pp.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        summary["monomer_admixture_max"] = json!(pp.iter().map(|p| 1.0 - p).fold(f64::NEG_INFINITY, f64::max));
    }
    Ok((traj, summary))
}

fn evolution(run: &ResolvedRun, out: &Path) -> Result<Value> {
    let init = run.initial_state.as_ref().expect("resolved evolve runs carry a state");
    let times = dynamics::uniform_times(run.t_max.expect("t_max"), run.samples.expect("samples"))?;
    let h = hamiltonian(&run.spec, run.sector)?;
    let dec = diagonalize(&h)?;
    let psi0 = initial_state(init, &dec)?;
    let (traj, mut measured) = evolve_checked(&h, &dec, &psi0, &times)?;
    write_trajectory(&traj, out, "trajectory")?;

    if let InitialState::LocalizedPacket { j_prime, levels } = *init {
        let check = wavepacket::random_packet_search(&dec, j_prime, levels, OPTIMALITY_SAMPLES, run.seed)?;
        measured["target_probability"] = json!(check.optimum);
        measured["optimality"] = serde_json::to_value(check)?;
    }

    if run.spec.trap > 0.0 {
        let osc = if init.is_dimer() { Sector::Dimer } else { Sector::Single };
        let tau = dynamics::nominal_period(&run.spec, osc)?;
        measured["nominal_period"] = json!(tau);
        measured["period"] = json!(dynamics::measure_period(&dec, &psi0, tau)?);
        measured["revival"] = serde_json::to_value(dynamics::revival(&dec, &psi0, tau)?)?;
        if osc == Sector::Dimer {
            measured["j_max_dimer"] = json!(spectral::j_max(&run.spec, Sector::Dimer)?);
        }
    }

    if run.experiment == Experiment::Fig6 {
        let hd = hamiltonian(&run.spec, Sector::Dimer)?;
        let decd = diagonalize(&hd)?;
        let psid = initial_state(init, &decd)?;
        let (trajd, mut effective) = evolve_checked(&hd, &decd, &psid, &times)?;
        write_trajectory(&trajd, out, "trajectory_effective")?;
        let tau = dynamics::nominal_period(&run.spec, Sector::Dimer)?;
        effective["period"] = json!(dynamics::measure_period(&decd, &psid, tau)?);
        effective["max_density_deviation"] = json!(traj.max_density_deviation(&trajd)?);
        measured["effective"] = effective;
    }
    Ok(measured)
}

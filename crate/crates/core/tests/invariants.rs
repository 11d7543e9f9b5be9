//! Module-level invariants at the paper's parameters (J/Omega = 140).

use qlattice::dynamics::pair_projection;
use qlattice::spectral::{harmonic_energy, hermite_gauss_state, j_max};
use qlattice::wavepacket::shifted_ground_state;
use qlattice::*;

fn spec(u: f64, m: usize) -> SystemSpec {
    SystemSpec::from_ratio(140.0, u, m).unwrap()
}

#[test]
fn low_band_is_linear_within_five_percent_of_a_quantum() {
    let s = spec(0.0, 31);
    let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
    let quantum = 2.0 * (s.hopping * s.trap).sqrt();
    let errors: Vec<f64> = (0..=5)
        .map(|k| (dec.energy(k) - harmonic_energy(&s, k, Sector::Single).unwrap()).abs() / quantum)
        .collect();
    assert!(errors.windows(2).all(|w| w[1] > w[0]), "errors not monotone: {errors:?}");
    for (k, e) in errors.iter().enumerate() {
        assert!(*e <= 0.05, "k = {k}: |E_k - harmonic| = {e:.4} quanta; all: {errors:.4?}");
    }
}

#[test]
fn far_localized_levels_are_degenerate_pairs() {
    let s = spec(0.0, 31);
    let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
    let class = classify_spectrum(&dec).unwrap();
    let jm = j_max(&s, Sector::Single).unwrap();
    let far: Vec<_> = class
        .localized_pairs
        .iter()
        .filter(|p| p.center as f64 >= jm + 3.0)
        .collect();
    assert!(!far.is_empty());
    for p in far {
        assert!(p.splitting < 1e-6 * s.hopping, "{p:?}");
    }
}

#[test]
fn hermite_gauss_states_approximate_low_eigenstates() {
    let s = spec(0.0, 31);
    let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
    for k in 0..3 {
        let approx = hermite_gauss_state(&s, k, Sector::Single, false).unwrap();
        let f = approx.fidelity(&dec.state(k)).unwrap();
        assert!(f > 0.99, "k = {k}: fidelity {f}");
    }
}

/// Overlap of a lifted dimer Gaussian with the lowest eigenstate whose weight
/// on `|2_j>` exceeds one half.
fn lifted_overlap(u: f64, staggered: bool) -> f64 {
    let s = spec(u, 31);
    let dec = diagonalize(&build_two_boson_hamiltonian(&s).unwrap()).unwrap();
    let dimer = shifted_ground_state(&s, 0, Sector::Dimer, staggered).unwrap();
    let lifted = lift_dimer_state(&dimer).unwrap();
    assert!((lifted.norm() - 1.0).abs() < 1e-12);
    let k = (0..dec.len())
        .find(|&k| pair_projection(&dec.state(k)).unwrap() > 0.5)
        .expect("a pair-dominated level");
    lifted.fidelity(&dec.state(k)).unwrap()
}

#[test]
fn lifted_attractive_dimer_overlaps_exact_ground_state() {
    let f = lifted_overlap(-10.0, false);
    assert!(f >= 0.99, "overlap {f:.4}");
}

#[test]
fn lifted_repulsive_dimer_overlaps_lowest_bound_state() {
    let f = lifted_overlap(10.0, true);
    assert!(f >= 0.99, "overlap {f:.4}");
}

#[test]
fn constructors_emit_unit_norm_states() {
    let s = spec(10.0, 31);
    let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
    let states = [
        shifted_ground_state(&s, 7, Sector::Single, false).unwrap(),
        shifted_ground_state(&s, -3, Sector::Dimer, true).unwrap(),
        localized_packet(&dec, -7, 21).unwrap(),
        symmetrized_product(
            &shifted_ground_state(&s, -7, Sector::Single, false).unwrap(),
            &shifted_ground_state(&s, 7, Sector::Single, false).unwrap(),
        )
        .unwrap(),
        lift_dimer_state(&shifted_ground_state(&s, 3, Sector::Dimer, true).unwrap()).unwrap(),
    ];
    for st in states {
        assert!((st.norm() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn identical_packets_populate_doubles_like_sum_a4() {
    let s = spec(-10.0, 31);
    let psi = shifted_ground_state(&s, 7, Sector::Single, false).unwrap();
    let two = symmetrized_product(&psi, &psi).unwrap();
    let a4: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr().powi(2)).sum();
    let pp = pair_projection(&two).unwrap();
    assert!((pp - a4).abs() <= 0.1 * a4, "{pp} vs {a4}");
}

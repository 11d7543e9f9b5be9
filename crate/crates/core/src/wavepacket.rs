//! Initial states: shifted Gaussians, localized multi-level packets,
//! symmetrized two-particle products and dimer states lifted into the
//! two-boson basis.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FockBasis, FockState, Sector, SystemSpec};
use crate::spectral::{self, SpectralDecomposition};

/// Weight allowed on the two outermost sites at each end when a state is built.
pub const EDGE_WEIGHT_LIMIT: f64 = 1e-8;

/// Complex amplitudes over a [`FockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    basis: Arc<FockBasis>,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Wraps amplitudes as given; no normalization.
    pub fn from_amplitudes(basis: Arc<FockBasis>, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(basis.len(), amplitudes.len(), "amplitude count must match the basis");
        QuantumState { basis, amplitudes }
    }

    /// Basis state `k` with amplitude one.
    pub fn basis_state(basis: Arc<FockBasis>, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        QuantumState { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn sector(&self) -> Sector {
        self.basis.sector()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("cannot normalize a zero state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(self)
    }

    fn check_same_basis(&self, other: &QuantumState) -> Result<()> {
        if *self.basis != *other.basis {
            return Err(Error::BasisMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &QuantumState) -> Result<Complex64> {
        self.check_same_basis(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Amplitude on `|1_j>` (or `|1D_j>`) in a one-site-per-state sector.
    pub fn site_amplitude(&self, site: i64) -> Option<Complex64> {
        match self.sector() {
            Sector::Single | Sector::Dimer => self.basis.site_state(site).map(|k| self.amplitudes[k]),
            Sector::TwoBoson => None,
        }
    }

    /// Probability on the two outermost sites at either end.
    pub fn edge_weight(&self) -> f64 {
        edge_occupancy(&self.basis, &self.amplitudes)
    }

    /// CSV with header `index,description,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,description,re,im")?;
        for (k, a) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{k},{},{:.16e},{:.16e}", self.basis.state(k), a.re, a.im)?;
        }
        Ok(())
    }
}

/// Probability that some particle sits on one of the two outermost sites at
/// either end of the lattice.
pub(crate) fn edge_occupancy(basis: &FockBasis, amplitudes: &[Complex64]) -> f64 {
    let m = basis.half_width() as i64;
    let at_edge = |j: i64| j.abs() >= m - 1;
    basis
        .states()
        .iter()
        .zip(amplitudes)
        .filter(|(state, _)| match **state {
            FockState::Single(j) | FockState::Double(j) | FockState::Dimer(j) => at_edge(j),
            FockState::Pair(i, j) => at_edge(i) || at_edge(j),
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Gaussian ground-state approximation translated by `shift` sites.
///
/// `sector` selects the one-boson width `(J/Omega)^{1/4}` or the dimer width
/// `(J^2/(Omega |U|))^{1/4}`; `staggered` multiplies the dimer profile by
/// `(-1)^j` before translating. Dimer states stay in the dimer sector, see
/// [`lift_dimer_state`].
pub fn shifted_ground_state(
    spec: &SystemSpec,
    shift: i64,
    sector: Sector,
    staggered: bool,
) -> Result<QuantumState> {
    if sector == Sector::TwoBoson {
        return Err(Error::InvalidArgument(
            "shifted ground states are built in the one-boson or dimer sector".into(),
        ));
    }
    if !spec.contains_site(shift) {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} lies outside the lattice of half-width {}",
            spec.half_width
        )));
    }
    let amps = spectral::hermite_gauss_amplitudes(spec, 0, sector, staggered, shift)?;
    let basis = Arc::new(FockBasis::new(spec.half_width, sector));
    let state = QuantumState::from_amplitudes(basis, amps);
    let edge = state.edge_weight();
    if edge > EDGE_WEIGHT_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} leaves weight {edge:.2e} on the boundary sites; increase M"
        )));
    }
    Ok(state)
}

/// Coefficients `A_k` over the lowest `levels` eigenstates that maximize the
/// probability on `target`: by Cauchy-Schwarz, `A_k` is proportional to the
/// eigenvector amplitude at that site.
pub fn localized_packet_coefficients(
    dec: &SpectralDecomposition,
    target: i64,
    levels: usize,
) -> Result<Vec<f64>> {
    if dec.sector() != Sector::Single {
        return Err(Error::SectorMismatch {
            expected: Sector::Single,
            found: dec.sector(),
        });
    }
    let spec = dec.spec();
    let jm = spectral::j_max(spec, Sector::Single)?;
    if (target.abs() as f64) >= jm {
        return Err(Error::InvalidArgument(format!(
            "target site {target} must satisfy |j'| < j_max = {jm:.3}"
        )));
    }
    let band = spectral::classify_spectrum(dec)?.band_count;
    if levels == 0 || levels > band {
        return Err(Error::InvalidArgument(format!(
            "{levels} levels requested but the band holds {band}"
        )));
    }
    let row = spec.site_index(target);
    let mut coeffs: Vec<f64> = (0..levels).map(|k| dec.eigenvectors()[[row, k]]).collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    coeffs.iter_mut().for_each(|c| *c /= norm);
    Ok(coeffs)
}

/// `sum_k A_k |chi_k>` for the given coefficients.
pub fn superpose_levels(dec: &SpectralDecomposition, coeffs: &[Complex64]) -> QuantumState {
    let v = dec.eigenvectors();
    let amps = (0..dec.len())
        .map(|r| coeffs.iter().enumerate().map(|(k, c)| c * v[[r, k]]).sum())
        .collect();
    QuantumState::from_amplitudes(dec.basis().clone(), amps)
}

/// Packet built from the lowest `levels` exact eigenstates with the largest
/// possible probability on site `target`.
pub fn localized_packet(dec: &SpectralDecomposition, target: i64, levels: usize) -> Result<QuantumState> {
    let coeffs: Vec<Complex64> = localized_packet_coefficients(dec, target, levels)?
        .into_iter()
        .map(|c| Complex64::new(c, 0.0))
        .collect();
    superpose_levels(dec, &coeffs).normalized()
}

/// `|a_target|^2` for a unit coefficient vector over the lowest levels.
pub fn site_probability(dec: &SpectralDecomposition, coeffs: &[Complex64], target: i64) -> f64 {
    let row = dec.spec().site_index(target);
    let v = dec.eigenvectors();
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c * v[[row, k]])
        .sum::<Complex64>()
        .norm_sqr()
}

/// Outcome of comparing the analytic packet against random superpositions.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct OptimalityCheck {
    pub optimum: f64,
    pub best_random: f64,
    pub samples: usize,
    pub seed: u64,
}

impl OptimalityCheck {
    pub fn holds(&self) -> bool {
        self.best_random <= self.optimum + 1e-12
    }
}

/// Draws random complex unit coefficient vectors and records the best
/// `|a_target|^2` they reach.
pub fn random_packet_search(
    dec: &SpectralDecomposition,
    target: i64,
    levels: usize,
    samples: usize,
    seed: u64,
) -> Result<OptimalityCheck> {
    let coeffs = localized_packet_coefficients(dec, target, levels)?;
    let exact: Vec<Complex64> = coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let optimum = site_probability(dec, &exact, target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_random: f64 = 0.0;
    let mut draw = vec![Complex64::new(0.0, 0.0); levels];
    for _ in 0..samples {
        for c in draw.iter_mut() {
            *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let norm = draw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        draw.iter_mut().for_each(|c| *c /= norm);
        best_random = best_random.max(site_probability(dec, &draw, target));
    }
    Ok(OptimalityCheck {
        optimum,
        best_random,
        samples,
        seed,
    })
}

/// Bosonic product of two one-particle states.
///
/// `|1_i 1_j>` receives `psi1_i psi2_j + psi1_j psi2_i` and `|2_j>` receives
/// `sqrt(2) psi1_j psi2_j`, then the result is normalized.
pub fn symmetrized_product(psi1: &QuantumState, psi2: &QuantumState) -> Result<QuantumState> {
    for psi in [psi1, psi2] {
        if psi.sector() != Sector::Single {
            return Err(Error::SectorMismatch {
                expected: Sector::Single,
                found: psi.sector(),
            });
        }
    }
    if psi1.basis() != psi2.basis() {
        return Err(Error::BasisMismatch {
            left: psi1.len(),
            right: psi2.len(),
        });
    }
    let m = psi1.basis().half_width();
    let basis = Arc::new(FockBasis::new(m, Sector::TwoBoson));
    let at = |psi: &QuantumState, j: i64| psi.amplitudes()[(j + m as i64) as usize];
    let amps = basis
        .states()
        .iter()
        .map(|state| match *state {
            FockState::Pair(i, j) => at(psi1, i) * at(psi2, j) + at(psi1, j) * at(psi2, i),
            FockState::Double(j) => at(psi1, j) * at(psi2, j) * std::f64::consts::SQRT_2,
            _ => unreachable!(),
        })
        .collect();
    QuantumState::from_amplitudes(basis, amps).normalized()
}

/// Maps a dimer-sector state onto `|2_j>` in the two-boson basis.
pub fn lift_dimer_state(dimer: &QuantumState) -> Result<QuantumState> {
    if dimer.sector() != Sector::Dimer {
        return Err(Error::SectorMismatch {
            expected: Sector::Dimer,
            found: dimer.sector(),
        });
    }
    let m = dimer.basis().half_width();
    let basis = Arc::new(FockBasis::new(m, Sector::TwoBoson));
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.len()];
    for (k, a) in dimer.amplitudes().iter().enumerate() {
        let site = k as i64 - m as i64;
        amps[basis.site_state(site).expect("double state in basis")] = *a;
    }
    Ok(QuantumState::from_amplitudes(basis, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_single_hamiltonian;
    use crate::spectral::diagonalize;

    fn spec() -> SystemSpec {
        SystemSpec::from_ratio(140.0, 10.0, 31).unwrap()
    }

    fn single_basis(m: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(m, Sector::Single))
    }

    #[test]
    fn shifted_gaussian_is_centred_and_normalized() {
        let s = spec();
        let psi = shifted_ground_state(&s, 7, Sector::Single, false).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let peak = (0..psi.len())
            .max_by(|&a, &b| psi.amplitudes()[a].norm().total_cmp(&psi.amplitudes()[b].norm()))
            .unwrap();
        assert_eq!(peak as i64 - 31, 7);
        // e^{-zeta^2/2} drops by e^{-1/2} one width away from the centre.
        let width = 140f64.powf(0.25);
        assert!((width - 3.4398).abs() < 1e-4);
        let ratio = (psi.site_amplitude(7 + 3).unwrap() / psi.site_amplitude(7).unwrap()).re;
        assert!((ratio - (-0.5 * (3.0 / width).powi(2)).exp()).abs() < 1e-12);
    }

    #[test]
    fn staggered_dimer_gaussian() {
        let s = spec();
        let psi = shifted_ground_state(&s, 3, Sector::Dimer, true).unwrap();
        let width = (1.0 / (s.trap * 10.0)).powf(0.25);
        assert!((width - 1.9343).abs() < 1e-4);
        let a3 = psi.site_amplitude(3).unwrap().re;
        let a4 = psi.site_amplitude(4).unwrap().re;
        assert!(a3 > 0.0 && a4 < 0.0);
        assert!((a4 / a3 + (-0.5 / (width * width)).exp()).abs() < 1e-12);
    }

    #[test]
    fn shift_too_close_to_edge_is_rejected() {
        let s = SystemSpec::from_ratio(140.0, 0.0, 12).unwrap();
        assert!(shifted_ground_state(&s, 7, Sector::Single, false).is_err());
        assert!(shifted_ground_state(&s, 0, Sector::TwoBoson, false).is_err());
    }

    #[test]
    fn single_level_packet_is_the_ground_state() {
        let s = spec();
        let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
        let packet = localized_packet(&dec, 0, 1).unwrap();
        assert!((packet.fidelity(&dec.state(0)).unwrap() - 1.0).abs() < 1e-12);
        assert!(localized_packet(&dec, 7, 40).is_err());
        assert!(localized_packet(&dec, 16, 5).is_err());
    }

    #[test]
    fn packet_probability_equals_sum_of_squared_amplitudes() {
        let s = spec();
        let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
        let packet = localized_packet(&dec, 7, 21).unwrap();
        let row = s.site_index(7);
        let expected: f64 = (0..21).map(|k| dec.eigenvectors()[[row, k]].powi(2)).sum();
        assert!((packet.site_amplitude(7).unwrap().norm_sqr() - expected).abs() < 1e-12);
    }

    #[test]
    fn products_of_localized_states() {
        let b = single_basis(2);
        let zero = QuantumState::basis_state(b.clone(), 2);
        let one = QuantumState::basis_state(b.clone(), 3);
        let pair = symmetrized_product(&zero, &one).unwrap();
        let k = pair.basis().two_boson_index(0, 1).unwrap();
        assert!((pair.amplitudes()[k].re - 1.0).abs() < 1e-15);
        assert!((pair.norm() - 1.0).abs() < 1e-15);

        let double = symmetrized_product(&zero, &zero).unwrap();
        let k = double.basis().two_boson_index(0, 0).unwrap();
        assert!((double.amplitudes()[k].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_gaussians_put_sum_a4_on_doubles() {
        let s = spec();
        let psi = shifted_ground_state(&s, 7, Sector::Single, false).unwrap();
        let two = symmetrized_product(&psi, &psi).unwrap();
        let pair_weight: f64 = two
            .basis()
            .states()
            .iter()
            .zip(two.amplitudes())
            .filter(|(st, _)| matches!(st, FockState::Double(_)))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let a4: f64 = psi.amplitudes().iter().map(|a| a.norm_sqr().powi(2)).sum();
        assert!((pair_weight - a4).abs() <= 0.1 * a4);
    }

    #[test]
    fn lifting_keeps_norm_and_only_fills_doubles() {
        let s = spec();
        let dimer = shifted_ground_state(&s, 0, Sector::Dimer, true).unwrap();
        let lifted = lift_dimer_state(&dimer).unwrap();
        assert!((lifted.norm() - 1.0).abs() < 1e-12);
        let b = lifted.basis();
        assert_eq!(lifted.amplitudes()[b.two_boson_index(0, 0).unwrap()], dimer.site_amplitude(0).unwrap());
        for (st, a) in b.states().iter().zip(lifted.amplitudes()) {
            if let FockState::Pair(..) = st {
                assert_eq!(a.norm(), 0.0);
            }
        }
        let single = QuantumState::basis_state(single_basis(2), 0);
        assert!(lift_dimer_state(&single).is_err());
    }

    #[test]
    fn state_csv_uses_occupation_labels() {
        let b = Arc::new(FockBasis::new(1, Sector::TwoBoson));
        let st = QuantumState::basis_state(b, 4);
        let mut buf = Vec::new();
        st.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,description,re,im\n0,1_-1 1_0,"));
        assert!(text.contains("4,2_0,1.0000000000000000e0,0.0000000000000000e0"));
    }
}

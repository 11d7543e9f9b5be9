//! System parameters, Fock bases and Hamiltonian builders.
//!
//! Sites are labelled `j = -M ..= M`. Energies are in units of the tunnel
//! coupling `J` and `hbar = 1`, so times come out in units of `hbar / J`.
//!
//! Basis orderings are fixed:
//!
//! * one-boson and dimer sectors: `|1_j>` (or `|1D_j>`) sorted by `j`;
//! * two-boson sector: all pair states `|1_i 1_j>` with `i < j` in
//!   lexicographic order, followed by the doubly occupied `|2_j>` sorted by `j`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Physical parameters of the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    /// Tunnel coupling `J` between neighbouring sites.
    #[serde(rename = "J")]
    pub hopping: f64,
    /// Parabolic trap strength `Omega`; site `j` sits at energy `Omega j^2`.
    #[serde(rename = "Omega")]
    pub trap: f64,
    /// On-site interaction `U` (signed).
    #[serde(rename = "U")]
    pub interaction: f64,
    /// Lattice half-width `M`; the lattice has `2M + 1` sites.
    #[serde(rename = "M")]
    pub half_width: usize,
}

impl SystemSpec {
    pub fn new(hopping: f64, trap: f64, interaction: f64, half_width: usize) -> Result<Self> {
        let spec = SystemSpec {
            hopping,
            trap,
            interaction,
            half_width,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parameters given as the ratio `J / Omega` with `J = 1`.
    pub fn from_ratio(j_over_omega: f64, interaction: f64, half_width: usize) -> Result<Self> {
        if !(j_over_omega.is_finite() && j_over_omega > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "J/Omega must be positive and finite, got {j_over_omega}"
            )));
        }
        Self::new(1.0, 1.0 / j_over_omega, interaction, half_width)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hopping.is_finite() && self.hopping > 0.0) {
            return Err(Error::InvalidSpec(format!("J must be positive, got {}", self.hopping)));
        }
        if !(self.trap.is_finite() && self.trap >= 0.0) {
            return Err(Error::InvalidSpec(format!("Omega must be non-negative, got {}", self.trap)));
        }
        if !self.interaction.is_finite() {
            return Err(Error::InvalidSpec("U must be finite".into()));
        }
        if self.half_width < 1 {
            return Err(Error::InvalidSpec("M must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_half_width(mut self, half_width: usize) -> Self {
        self.half_width = half_width;
        self
    }

    pub fn with_interaction(mut self, interaction: f64) -> Self {
        self.interaction = interaction;
        self
    }

    pub fn num_sites(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> + Clone {
        let m = self.half_width as i64;
        -m..=m
    }

    /// Position of site `j` in a site-resolved vector.
    pub fn site_index(&self, site: i64) -> usize {
        (site + self.half_width as i64) as usize
    }

    pub fn contains_site(&self, site: i64) -> bool {
        site.unsigned_abs() as usize <= self.half_width
    }

    /// Effective dimer tunnelling `J2 = -2 J^2 / U`.
    pub fn dimer_hopping(&self) -> Result<f64> {
        if self.interaction == 0.0 {
            return Err(Error::InvalidSpec(
                "the dimer tunnelling -2J^2/U is undefined for U = 0".into(),
            ));
        }
        Ok(-2.0 * self.hopping * self.hopping / self.interaction)
    }

    /// Trap strength seen by a dimer, `2 Omega`.
    pub fn dimer_trap(&self) -> f64 {
        2.0 * self.trap
    }

    /// Internal energy `U - J2` of a dimer.
    pub fn dimer_internal_energy(&self) -> Result<f64> {
        Ok(self.interaction - self.dimer_hopping()?)
    }
}

/// Particle-number sector of a basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    #[serde(rename = "one-boson")]
    Single,
    TwoBoson,
    Dimer,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Single => "one-boson",
            Sector::TwoBoson => "two-boson",
            Sector::Dimer => "dimer",
        })
    }
}

/// Occupation pattern of a basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FockState {
    /// `|1_j>`
    Single(i64),
    /// `|1_i 1_j>` with `i < j`
    Pair(i64, i64),
    /// `|2_j>`
    Double(i64),
    /// `|1D_j>`, a single dimer at `j`
    Dimer(i64),
}

impl FockState {
    /// Mirror image under `j -> -j`.
    pub fn reflect(self) -> FockState {
        match self {
            FockState::Single(j) => FockState::Single(-j),
            FockState::Pair(i, j) => FockState::Pair(-j, -i),
            FockState::Double(j) => FockState::Double(-j),
            FockState::Dimer(j) => FockState::Dimer(-j),
        }
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FockState::Single(j) => write!(f, "1_{j}"),
            FockState::Pair(i, j) => write!(f, "1_{i} 1_{j}"),
            FockState::Double(j) => write!(f, "2_{j}"),
            FockState::Dimer(j) => write!(f, "1D_{j}"),
        }
    }
}

/// Ordered enumeration of basis states with the inverse lookup.
#[derive(Clone, Debug)]
pub struct FockBasis {
    sector: Sector,
    half_width: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.sector == other.sector && self.half_width == other.half_width
    }
}

impl FockBasis {
    pub fn new(half_width: usize, sector: Sector) -> Self {
        let m = half_width as i64;
        let states: Vec<FockState> = match sector {
            Sector::Single => (-m..=m).map(FockState::Single).collect(),
            Sector::Dimer => (-m..=m).map(FockState::Dimer).collect(),
            Sector::TwoBoson => {
                let mut states = Vec::with_capacity((2 * half_width + 1) * (2 * half_width + 2) / 2);
                for i in -m..=m {
                    for j in (i + 1)..=m {
                        states.push(FockState::Pair(i, j));
                    }
                }
                states.extend((-m..=m).map(FockState::Double));
                states
            }
        };
        let index = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
        FockBasis {
            sector,
            half_width,
            states,
            index,
        }
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn num_sites(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> FockState {
        self.states[k]
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Index of the mirror image of state `k`.
    pub fn reflected_index(&self, k: usize) -> usize {
        self.index[&self.states[k].reflect()]
    }

    /// Index of `|1_j>` / `|1D_j>` in a one-site-per-state basis, or of `|2_j>`.
    pub fn site_state(&self, site: i64) -> Option<usize> {
        let state = match self.sector {
            Sector::Single => FockState::Single(site),
            Sector::Dimer => FockState::Dimer(site),
            Sector::TwoBoson => FockState::Double(site),
        };
        self.index_of(&state)
    }

    /// Index of the two-boson state with particles on sites `a` and `b`.
    pub fn two_boson_index(&self, a: i64, b: i64) -> Option<usize> {
        let state = match a.cmp(&b) {
            std::cmp::Ordering::Equal => FockState::Double(a),
            std::cmp::Ordering::Less => FockState::Pair(a, b),
            std::cmp::Ordering::Greater => FockState::Pair(b, a),
        };
        self.index_of(&state)
    }
}

/// Which Hamiltonian a matrix (and anything derived from it) came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactSingle,
    ExactTwoBoson,
    EffectiveDimer,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::ExactSingle => "exact-single",
            Provenance::ExactTwoBoson => "exact-two-boson",
            Provenance::EffectiveDimer => "effective-dimer",
        })
    }
}

/// Real symmetric sparse matrix over a [`FockBasis`], stored row-wise.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    spec: SystemSpec,
    basis: Arc<FockBasis>,
    provenance: Provenance,
    energy_offset: f64,
    rows: Vec<Vec<(usize, f64)>>,
}

impl HamiltonianMatrix {
    fn from_rows(
        spec: SystemSpec,
        basis: Arc<FockBasis>,
        provenance: Provenance,
        energy_offset: f64,
        mut rows: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
        }
        HamiltonianMatrix {
            spec,
            basis,
            provenance,
            energy_offset,
            rows,
        }
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Constant added to every diagonal entry (the dimer internal energy when
    /// requested, zero otherwise).
    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.rows[r];
        row.binary_search_by_key(&c, |&(col, _)| col)
            .map(|p| row[p].1)
            .unwrap_or(0.0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(r, row)| row.iter().all(|&(c, v)| self.get(c, r) == v))
    }

    /// `P H P = H` exactly, with `P` the reflection `j -> -j`.
    pub fn is_reflection_symmetric(&self) -> bool {
        self.rows.iter().enumerate().all(|(r, row)| {
            let pr = self.basis.reflected_index(r);
            row.iter()
                .all(|&(c, v)| self.get(pr, self.basis.reflected_index(c)) == v)
        })
    }

    /// Largest absolute row sum; an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        self.rows.iter().enumerate().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (r, row)| {
                let diag = self.get(r, r);
                let radius: f64 = row.iter().filter(|&&(c, _)| c != r).map(|&(_, v)| v.abs()).sum();
                (lo.min(diag - radius), hi.max(diag + radius))
            },
        )
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.dim();
        let mut dense = Array2::zeros((n, n));
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                dense[[r, c]] = v;
            }
        }
        dense
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| x[c] * v).sum())
            .collect()
    }

    /// `<x|H|x>` for a (not necessarily normalized) vector.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        self.rows
            .iter()
            .zip(x)
            .map(|(row, xr)| {
                let hx: Complex64 = row.iter().map(|&(c, v)| x[c] * v).sum();
                (xr.conj() * hx).re
            })
            .sum()
    }

    /// Coordinate-format dump: one `row col value` line per nonzero.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(out, "{r} {c} {v:.16e}")?;
            }
        }
        Ok(())
    }
}

pub fn build_basis(spec: &SystemSpec, sector: Sector) -> FockBasis {
    FockBasis::new(spec.half_width, sector)
}

/// One particle: `Omega j^2` on the diagonal, `-J` between neighbours, open ends.
pub fn build_single_hamiltonian(spec: &SystemSpec) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    let basis = Arc::new(build_basis(spec, Sector::Single));
    let rows = nearest_neighbour_rows(spec, spec.trap, spec.hopping, 0.0);
    Ok(HamiltonianMatrix::from_rows(
        *spec,
        basis,
        Provenance::ExactSingle,
        0.0,
        rows,
    ))
}

/// Two bosons in the symmetrized basis.
///
/// Hopping between two singly occupied configurations carries `-J`; hopping
/// into or out of a doubly occupied site carries `-sqrt(2) J` since
/// `b^dag |1> = sqrt(2) |2>`.
pub fn build_two_boson_hamiltonian(spec: &SystemSpec) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    let basis = Arc::new(build_basis(spec, Sector::TwoBoson));
    let (omega, hop, u) = (spec.trap, spec.hopping, spec.interaction);
    let enhanced = std::f64::consts::SQRT_2 * hop;
    let sq = |j: i64| (j * j) as f64;

    let rows = basis
        .states()
        .iter()
        .enumerate()
        .map(|(k, state)| {
            let mut row = Vec::with_capacity(5);
            match *state {
                FockState::Pair(i, j) => {
                    row.push((k, omega * (sq(i) + sq(j))));
                    for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                        if !spec.contains_site(a) || !spec.contains_site(b) {
                            continue;
                        }
                        let target = basis.two_boson_index(a, b).expect("state in basis");
                        let amp = if a == b { -enhanced } else { -hop };
                        row.push((target, amp));
                    }
                }
                FockState::Double(j) => {
                    row.push((k, 2.0 * omega * sq(j) + u));
                    for b in [j - 1, j + 1] {
                        if spec.contains_site(b) {
                            let target = basis.two_boson_index(j, b).expect("state in basis");
                            row.push((target, -enhanced));
                        }
                    }
                }
                _ => unreachable!("two-boson basis holds only pair and double states"),
            }
            row
        })
        .collect();

    Ok(HamiltonianMatrix::from_rows(
        *spec,
        basis,
        Provenance::ExactTwoBoson,
        0.0,
        rows,
    ))
}

/// Effective single-dimer Hamiltonian: trap `2 Omega`, tunnelling
/// `J2 = -2J^2/U` entering as `-J2` off the diagonal, and optionally the
/// internal energy `U - J2` on the diagonal.
pub fn build_dimer_hamiltonian(
    spec: &SystemSpec,
    include_internal_energy: bool,
) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    let dimer_hop = spec.dimer_hopping()?;
    let offset = if include_internal_energy {
        spec.dimer_internal_energy()?
    } else {
        0.0
    };
    let basis = Arc::new(build_basis(spec, Sector::Dimer));
    let rows = nearest_neighbour_rows(spec, spec.dimer_trap(), dimer_hop, offset);
    Ok(HamiltonianMatrix::from_rows(
        *spec,
        basis,
        Provenance::EffectiveDimer,
        offset,
        rows,
    ))
}

fn nearest_neighbour_rows(
    spec: &SystemSpec,
    trap: f64,
    hop: f64,
    offset: f64,
) -> Vec<Vec<(usize, f64)>> {
    let n = spec.num_sites();
    spec.sites()
        .enumerate()
        .map(|(k, j)| {
            let mut row = Vec::with_capacity(3);
            if k > 0 {
                row.push((k - 1, -hop));
            }
            row.push((k, trap * (j * j) as f64 + offset));
            if k + 1 < n {
                row.push((k + 1, -hop));
            }
            row
        })
        .collect()
}

/// Lattice half-width used when a run asks for `M = auto`.
///
/// A single particle gets `ceil(2 j_max)`. Two-boson and dimer runs use the
/// same width: the monomer part of a two-boson state explores the whole
/// single-particle band region, and the dimer run shares the lattice so
/// densities can be compared site by site.
pub fn default_half_width(hopping: f64, trap: f64, interaction: f64, sector: Sector) -> Result<usize> {
    let probe = SystemSpec::new(hopping, trap, interaction, 1)?;
    let single = spectral::j_max(&probe, Sector::Single)?;
    let width = match sector {
        Sector::Single => (2.0 * single).ceil(),
        // Without interaction there is no bound pair to make room for.
        Sector::TwoBoson if interaction == 0.0 => (2.0 * single).ceil(),
        Sector::TwoBoson | Sector::Dimer => {
            let dimer = spectral::j_max(&probe, Sector::Dimer)?;
            (2.0 * single).ceil().max((2.0 * dimer).ceil() + 5.0)
        }
    };
    Ok(width.max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize) -> SystemSpec {
        SystemSpec::from_ratio(140.0, -10.0, m).unwrap()
    }

    #[test]
    fn one_boson_basis_for_m1() {
        let b = build_basis(&spec(1), Sector::Single);
        assert_eq!(
            b.states(),
            &[FockState::Single(-1), FockState::Single(0), FockState::Single(1)]
        );
    }

    #[test]
    fn two_boson_basis_sizes() {
        let b = build_basis(&spec(1), Sector::TwoBoson);
        assert_eq!(b.len(), 6);
        assert_eq!(
            b.states(),
            &[
                FockState::Pair(-1, 0),
                FockState::Pair(-1, 1),
                FockState::Pair(0, 1),
                FockState::Double(-1),
                FockState::Double(0),
                FockState::Double(1),
            ]
        );
        assert_eq!(build_basis(&spec(15), Sector::TwoBoson).len(), 496);
    }

    #[test]
    fn index_is_inverse_of_state() {
        for sector in [Sector::Single, Sector::TwoBoson, Sector::Dimer] {
            let b = build_basis(&spec(4), sector);
            for k in 0..b.len() {
                assert_eq!(b.index_of(&b.state(k)), Some(k));
            }
        }
    }

    #[test]
    fn single_particle_entries() {
        let h = build_single_hamiltonian(&spec(10)).unwrap();
        let s = h.spec();
        let k7 = s.site_index(7);
        assert!((h.get(k7, k7) - 0.35).abs() < 1e-15);
        assert_eq!(h.get(k7, k7 + 1), -1.0);
        assert_eq!(h.get(0, h.dim() - 1), 0.0, "no wrap-around");
        assert!(h.row(0).len() == 2 && h.row(5).len() == 3);
    }

    #[test]
    fn two_boson_entries() {
        let s = spec(5);
        let h = build_two_boson_hamiltonian(&s).unwrap();
        let b = h.basis();
        let d0 = b.two_boson_index(0, 0).unwrap();
        let p01 = b.two_boson_index(0, 1).unwrap();
        assert!((h.get(d0, p01) + std::f64::consts::SQRT_2).abs() < 1e-15);
        let d3 = b.two_boson_index(3, 3).unwrap();
        assert!((h.get(d3, d3) - (18.0 / 140.0 - 10.0)).abs() < 1e-12);
        let p = b.two_boson_index(-2, 3).unwrap();
        assert!((h.get(p, p) - 13.0 / 140.0).abs() < 1e-15);
        assert_eq!(h.get(p, b.two_boson_index(-2, 4).unwrap()), -1.0);
        assert!(h.rows.iter().all(|r| r.len() <= 5));
    }

    #[test]
    fn dimer_couplings_follow_sign_convention() {
        let attractive = build_dimer_hamiltonian(&spec(5), false).unwrap();
        assert!((attractive.spec().dimer_hopping().unwrap() - 0.2).abs() < 1e-15);
        assert!((attractive.get(0, 1) + 0.2).abs() < 1e-15);

        let repulsive = build_dimer_hamiltonian(&spec(5).with_interaction(10.0), false).unwrap();
        assert!((repulsive.get(0, 1) - 0.2).abs() < 1e-15);
        assert!((repulsive.spec().dimer_trap() - 1.0 / 70.0).abs() < 1e-15);
        assert_eq!(repulsive.energy_offset(), 0.0);

        let with_internal = build_dimer_hamiltonian(&spec(5).with_interaction(10.0), true).unwrap();
        let centre = with_internal.spec().site_index(0);
        assert!((with_internal.get(centre, centre) - 10.2).abs() < 1e-12);
    }

    #[test]
    fn dimer_rejects_zero_interaction() {
        let s = spec(3).with_interaction(0.0);
        assert!(matches!(build_dimer_hamiltonian(&s, false), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(SystemSpec::new(0.0, 0.1, 0.0, 3).is_err());
        assert!(SystemSpec::new(1.0, -0.1, 0.0, 3).is_err());
        assert!(SystemSpec::new(1.0, 0.1, 0.0, 0).is_err());
        assert!(SystemSpec::new(1.0, 0.0, 0.0, 3).is_ok());
    }

    #[test]
    fn builders_are_symmetric_and_reflection_invariant() {
        let s = spec(6);
        for h in [
            build_single_hamiltonian(&s).unwrap(),
            build_two_boson_hamiltonian(&s).unwrap(),
            build_dimer_hamiltonian(&s, true).unwrap(),
        ] {
            assert!(h.is_symmetric());
            assert!(h.is_reflection_symmetric());
        }
    }

    #[test]
    fn coordinate_dump_has_one_line_per_nonzero() {
        let h = build_single_hamiltonian(&spec(2)).unwrap();
        let mut buf = Vec::new();
        h.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), h.nnz());
        // 17 significant digits: Omega (-2)^2 survives the round trip.
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("0 0 {:.16e}", 4.0 * spec(2).trap));
        let value: f64 = first.split(' ').nth(2).unwrap().parse().unwrap();
        assert_eq!(value, h.get(0, 0));
    }

    #[test]
    fn default_widths() {
        let single = default_half_width(1.0, 1.0 / 140.0, 0.0, Sector::Single).unwrap();
        assert_eq!(single, 31);
        let two = default_half_width(1.0, 1.0 / 140.0, 10.0, Sector::TwoBoson).unwrap();
        assert_eq!(two, 31);
        assert_eq!(default_half_width(1.0, 1.0 / 140.0, 0.0, Sector::TwoBoson).unwrap(), 31);
        assert!(default_half_width(1.0, 1.0 / 140.0, 0.0, Sector::Dimer).is_err());
    }
}

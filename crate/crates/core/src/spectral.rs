//! Diagonalization, band classification and closed-form approximations.
//!
//! Reflection-symmetric matrices (every matrix the builders produce) are
//! split into even and odd blocks before the dense solve, so each returned
//! eigenvector has definite parity and the cost drops roughly fourfold.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FockBasis, HamiltonianMatrix, Provenance, Sector, SystemSpec};
use crate::wavepacket::QuantumState;

const BAND_EDGE_FACTOR: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;

/// Splitting (in units of the relevant tunnelling) below which two adjacent
/// levels above the band count as a degenerate localized pair.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    spec: SystemSpec,
    basis: Arc<FockBasis>,
    provenance: Provenance,
    energy_offset: f64,
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn sector(&self) -> Sector {
        self.basis.sector()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.eigenvalues[k]
    }

    pub fn eigenvector(&self, k: usize) -> ArrayView1<'_, f64> {
        self.eigenvectors.column(k)
    }

    /// Eigenstate `k` as a [`QuantumState`].
    pub fn state(&self, k: usize) -> QuantumState {
        let amps = self
            .eigenvector(k)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        QuantumState::from_amplitudes(self.basis.clone(), amps)
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.t().dot(&self.eigenvectors);
        gram.indexed_iter()
            .map(|((a, b), &g)| (g - if a == b { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    /// `max_k ||H v_k - E_k v_k||`.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.eigenvector(k);
                let e = self.eigenvalues[k];
                (0..h.dim())
                    .map(|r| {
                        let hv: f64 = h.row(r).iter().map(|&(c, x)| x * v[c]).sum();
                        (hv - e * v[r]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Parity of eigenvector `k` under `j -> -j`.
    pub fn parity(&self, k: usize) -> Parity {
        parity_of(&self.basis, self.eigenvector(k))
    }

    /// Site with the largest weight in eigenvector `k` (one-site-per-state sectors).
    fn peak_site(&self, k: usize) -> i64 {
        let v = self.eigenvector(k);
        let (idx, _) = v
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &x)| if x * x > best.1 { (i, x * x) } else { best });
        idx as i64 - self.spec.half_width as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        })
    }
}

fn parity_of(basis: &FockBasis, v: ArrayView1<'_, f64>) -> Parity {
    let (mut even, mut odd) = (0.0, 0.0);
    for k in 0..v.len() {
        let p = v[basis.reflected_index(k)];
        even += (v[k] - p).powi(2);
        odd += (v[k] + p).powi(2);
    }
    if even.sqrt() < 1e-8 {
        Parity::Even
    } else if odd.sqrt() < 1e-8 {
        Parity::Odd
    } else {
        Parity::Mixed
    }
}

/// Full eigendecomposition with ascending eigenvalues.
///
/// Each eigenvector is signed so that its largest-magnitude entry (the first
/// one, on ties) is positive.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    if !h.is_symmetric() {
        return Err(Error::InvalidArgument("matrix is not symmetric".into()));
    }
    let n = h.dim();
    let (values, vectors) = if n > 1 && h.is_reflection_symmetric() {
        diagonalize_by_parity(h)?
    } else {
        dense_eigh(h.to_dense())?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&k| values[k]).collect::<Array1<f64>>();
    let mut eigenvectors = vectors.select(Axis(1), &order);
    for mut col in eigenvectors.columns_mut() {
        let peak = col.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        let lead = col
            .iter()
            .copied()
            .find(|x| x.abs() >= peak * (1.0 - 1e-10))
            .unwrap_or(0.0);
        if lead < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }

    Ok(SpectralDecomposition {
        spec: *h.spec(),
        basis: h.basis().clone(),
        provenance: h.provenance(),
        energy_offset: h.energy_offset(),
        eigenvalues,
        eigenvectors,
    })
}

fn dense_eigh(matrix: Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let (rows, cols) = matrix.dim();
    if rows == 0 {
        return Ok((Vec::new(), Array2::zeros((0, 0))));
    }
    let (values, vectors) = matrix.eigh(UPLO::Lower).map_err(|e| Error::Solver {
        rows,
        cols,
        message: e.to_string(),
    })?;
    Ok((values.to_vec(), vectors))
}

/// Solves the even and odd reflection blocks separately and maps the
/// eigenvectors back onto the original basis.
fn diagonalize_by_parity(h: &HamiltonianMatrix) -> Result<(Vec<f64>, Array2<f64>)> {
    let basis = h.basis();
    let n = h.dim();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    // Symmetry-adapted vectors as sparse (index, coefficient) lists.
    let mut even: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut odd: Vec<Vec<(usize, f64)>> = Vec::new();
    for k in 0..n {
        let p = basis.reflected_index(k);
        if p == k {
            even.push(vec![(k, 1.0)]);
        } else if k < p {
            even.push(vec![(k, inv_sqrt2), (p, inv_sqrt2)]);
            odd.push(vec![(k, inv_sqrt2), (p, -inv_sqrt2)]);
        }
    }

    let mut values = Vec::with_capacity(n);
    let mut vectors = Array2::zeros((n, n));
    let mut column = 0;
    for block in [&even, &odd] {
        let m = block.len();
        if m == 0 {
            continue;
        }
        // Every basis state appears in at most one vector of a block.
        let mut member: Vec<Option<(usize, f64)>> = vec![None; n];
        for (b, vec_b) in block.iter().enumerate() {
            for &(k, coef) in vec_b {
                member[k] = Some((b, coef));
            }
        }
        let mut reduced = Array2::<f64>::zeros((m, m));
        for (a, vec_a) in block.iter().enumerate() {
            for &(k, ca) in vec_a {
                for &(c, hv) in h.row(k) {
                    if let Some((b, cb)) = member[c] {
                        reduced[[b, a]] += cb * hv * ca;
                    }
                }
            }
        }
        let (vals, vecs) = dense_eigh(reduced)?;
        for (idx, &e) in vals.iter().enumerate() {
            values.push(e);
            for (a, vec_a) in block.iter().enumerate() {
                let w = vecs[[a, idx]];
                for &(k, ca) in vec_a {
                    vectors[[k, column]] += ca * w;
                }
            }
            column += 1;
        }
    }
    debug_assert_eq!(column, n);
    Ok((values, vectors))
}

/// Half-width of the region supporting the modified Bloch band,
/// `sqrt((1 + 1/sqrt2) J / Omega)`; the dimer version uses `|J2|` and `2 Omega`.
pub fn j_max(spec: &SystemSpec, sector: Sector) -> Result<f64> {
    if spec.trap <= 0.0 {
        return Err(Error::InvalidArgument(
            "j_max is undefined without a trap (Omega = 0)".into(),
        ));
    }
    match sector {
        Sector::Single => Ok((BAND_EDGE_FACTOR * spec.hopping / spec.trap).sqrt()),
        Sector::Dimer => {
            Ok((BAND_EDGE_FACTOR * spec.dimer_hopping()?.abs() / spec.dimer_trap()).sqrt())
        }
        Sector::TwoBoson => Err(Error::InvalidArgument(
            "j_max is defined for the one-boson and dimer sectors".into(),
        )),
    }
}

/// `2 floor(j_max) + 1`, the expected number of band levels.
pub fn predicted_band_count(spec: &SystemSpec, sector: Sector) -> Result<usize> {
    Ok(2 * j_max(spec, sector)?.floor() as usize + 1)
}

/// Tunnelling and trap strength felt by the particle of a sector.
fn effective_scales(spec: &SystemSpec, sector: Sector) -> Result<(f64, f64)> {
    match sector {
        Sector::Single => Ok((spec.hopping, spec.trap)),
        Sector::Dimer => Ok((spec.dimer_hopping()?.abs(), spec.dimer_trap())),
        Sector::TwoBoson => Err(Error::SectorMismatch {
            expected: Sector::Single,
            found: Sector::TwoBoson,
        }),
    }
}

/// Harmonic-oscillator estimate `-2J + 2 sqrt(J Omega) (k + 1/2)`.
///
/// For the dimer sector `|J2|` and `2 Omega` replace `J` and `Omega`, and the
/// result is measured from the internal energy `U - J2`.
pub fn harmonic_energy(spec: &SystemSpec, k: usize, sector: Sector) -> Result<f64> {
    let (hop, trap) = effective_scales(spec, sector)?;
    Ok(-2.0 * hop + 2.0 * (hop * trap).sqrt() * (k as f64 + 0.5))
}

/// Normalized Hermite functions `(2^k k!)^{-1/2} H_k(x)` for `k = 0..=kmax`,
/// by the three-term recurrence.
pub fn scaled_hermite(kmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax >= 1 {
        out.push(std::f64::consts::SQRT_2 * x);
    }
    for k in 1..kmax {
        let kf = k as f64;
        let next = x * out[k] * (2.0 / (kf + 1.0)).sqrt() - out[k - 1] * (kf / (kf + 1.0)).sqrt();
        out.push(next);
    }
    out
}

/// Discrete coordinate scale: `(Omega/J)^{1/4}` for a particle,
/// `(Omega |U| / J^2)^{1/4}` for a dimer.
pub fn coordinate_scale(spec: &SystemSpec, sector: Sector) -> Result<f64> {
    let (hop, trap) = effective_scales(spec, sector)?;
    if trap <= 0.0 {
        return Err(Error::InvalidArgument("Hermite-Gauss states need Omega > 0".into()));
    }
    Ok((trap / hop).powf(0.25))
}

pub(crate) fn hermite_gauss_amplitudes(
    spec: &SystemSpec,
    k: usize,
    sector: Sector,
    staggered: bool,
    shift: i64,
) -> Result<Vec<Complex64>> {
    if staggered && sector != Sector::Dimer {
        return Err(Error::InvalidArgument(
            "the staggered phase applies only to dimer states".into(),
        ));
    }
    let scale = coordinate_scale(spec, sector)?;
    let mut amps: Vec<Complex64> = spec
        .sites()
        .map(|j| {
            let rel = j - shift;
            let x = rel as f64 * scale;
            let mut a = scaled_hermite(k, x)[k] * (-0.5 * x * x).exp();
            if staggered && rel.rem_euclid(2) == 1 {
                a = -a;
            }
            Complex64::new(a, 0.0)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Hermite-Gauss state k = {k} has no weight on the lattice"
        )));
    }
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(amps)
}

/// Hermite-Gauss approximation to the `k`-th trapped eigenstate.
pub fn hermite_gauss_state(
    spec: &SystemSpec,
    k: usize,
    sector: Sector,
    staggered: bool,
) -> Result<QuantumState> {
    let amps = hermite_gauss_amplitudes(spec, k, sector, staggered, 0)?;
    let basis = Arc::new(FockBasis::new(spec.half_width, sector));
    Ok(QuantumState::from_amplitudes(basis, amps))
}

/// Eigenpair of a uniform open chain of `nbar` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochState {
    pub energy: f64,
    /// Amplitudes on sites `l = 1..=nbar`.
    pub amplitudes: Vec<f64>,
}

/// `E_k = -2J cos(pi (k+1)/(nbar+1))` with sine-wave amplitudes.
///
/// With `negative_hopping` the coupling is `-|J|`: the energies flip sign and
/// the lowest level is `k = nbar - 1`, whose amplitudes alternate in sign.
pub fn flat_bloch(nbar: usize, k: usize, hopping: f64, negative_hopping: bool) -> Result<BlochState> {
    if k >= nbar {
        return Err(Error::InvalidArgument(format!(
            "Bloch index {k} out of range for {nbar} sites"
        )));
    }
    let signed = if negative_hopping { -hopping.abs() } else { hopping.abs() };
    let q = std::f64::consts::PI * (k + 1) as f64 / (nbar + 1) as f64;
    let norm = (2.0 / (nbar + 1) as f64).sqrt();
    let amplitudes = (1..=nbar).map(|l| norm * (l as f64 * q).sin()).collect();
    Ok(BlochState {
        energy: -2.0 * signed * q.cos(),
        amplitudes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelClass {
    Band,
    Localized,
    Crossover,
}

impl fmt::Display for LevelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LevelClass::Band => "band",
            LevelClass::Localized => "localized",
            LevelClass::Crossover => "crossover",
        })
    }
}

/// A doubly degenerate pair of levels localized at `+-center`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizedPair {
    pub lower: usize,
    pub upper: usize,
    /// `|j|` of the peak site.
    pub center: usize,
    /// Mean energy of the pair, measured from the internal energy for dimers.
    pub energy: f64,
    /// Trap offset at the center, `Omega j^2` (or `2 Omega j^2`).
    pub predicted_energy: f64,
    pub splitting: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BandClassification {
    pub band_levels: Vec<usize>,
    pub band_count: usize,
    /// `2 floor(j_max) + 1`; `None` for a flat lattice.
    pub predicted_count: Option<usize>,
    pub j_max: Option<f64>,
    pub localized_pairs: Vec<LocalizedPair>,
    pub classes: Vec<LevelClass>,
    pub parities: Vec<Parity>,
    /// Energies measured from the internal energy (dimers) in units of `J`.
    pub energies: Vec<f64>,
    pub warning: Option<String>,
}

impl BandClassification {
    pub fn degeneracy_splittings(&self) -> Vec<f64> {
        self.localized_pairs.iter().map(|p| p.splitting).collect()
    }

    pub fn count(&self, class: LevelClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// CSV with header `k,energy,parity,class`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,energy,parity,class")?;
        for (k, ((e, p), c)) in self
            .energies
            .iter()
            .zip(&self.parities)
            .zip(&self.classes)
            .enumerate()
        {
            writeln!(out, "{k},{e:.16e},{p},{c}")?;
        }
        Ok(())
    }
}

/// Splits a one-boson or dimer spectrum into the modified Bloch band
/// (`E <= 2J`, or `2|J2|` for dimers), degenerate localized pairs and the
/// crossover levels in between.
pub fn classify_spectrum(dec: &SpectralDecomposition) -> Result<BandClassification> {
    let spec = dec.spec();
    let sector = dec.sector();
    let (hop, trap) = effective_scales(spec, sector)?;
    let top = 2.0 * hop;
    let energies: Vec<f64> = dec.eigenvalues().iter().map(|e| e - dec.energy_offset()).collect();
    let parities: Vec<Parity> = (0..dec.len()).map(|k| dec.parity(k)).collect();

    let band_levels: Vec<usize> = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= -top && e <= top)
        .map(|(k, _)| k)
        .collect();
    let mut classes = vec![LevelClass::Crossover; energies.len()];
    for &k in &band_levels {
        classes[k] = LevelClass::Band;
    }

    let (predicted_count, jm) = if trap > 0.0 {
        (Some(predicted_band_count(spec, sector)?), Some(j_max(spec, sector)?))
    } else {
        (None, None)
    };

    let mut localized_pairs = Vec::new();
    let mut warning = None;
    if trap > 0.0 {
        let above: Vec<usize> = (0..energies.len()).filter(|&k| energies[k] > top).collect();
        if above.is_empty() {
            warning = Some(format!(
                "no level exceeds the band top {top}; M = {} is too small to show localized states",
                spec.half_width
            ));
        }
        let mut i = 0;
        while i + 1 < above.len() {
            let (lo, hi) = (above[i], above[i + 1]);
            let splitting = energies[hi] - energies[lo];
            let (c_lo, c_hi) = (dec.peak_site(lo).unsigned_abs(), dec.peak_site(hi).unsigned_abs());
            if hi == lo + 1 && splitting < DEGENERACY_THRESHOLD * hop && c_lo == c_hi {
                classes[lo] = LevelClass::Localized;
                classes[hi] = LevelClass::Localized;
                let center = c_lo as usize;
                localized_pairs.push(LocalizedPair {
                    lower: lo,
                    upper: hi,
                    center,
                    energy: 0.5 * (energies[lo] + energies[hi]),
                    predicted_energy: trap * (center * center) as f64,
                    splitting,
                });
                i += 2;
            } else {
                i += 1;
            }
        }
    }

    Ok(BandClassification {
        band_count: band_levels.len(),
        band_levels,
        predicted_count,
        j_max: jm,
        localized_pairs,
        classes,
        parities,
        energies,
        warning,
    })
}

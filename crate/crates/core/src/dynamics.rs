//! Time evolution and the observables read off trajectories.

use std::io::Write;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FockBasis, FockState, HamiltonianMatrix, Provenance, Sector, SystemSpec};
use crate::spectral::SpectralDecomposition;
use crate::wavepacket::{edge_occupancy, QuantumState};

pub const NORM_DRIFT_LIMIT: f64 = 1e-10;
/// Energy drift limit, relative to the norm bound of `H`.
pub const ENERGY_DRIFT_LIMIT: f64 = 1e-9;
pub const BOUNDARY_LIMIT: f64 = 1e-6;

/// Windows used when measuring a period: long enough that slow dephasing of
/// anharmonic levels does not bias a two-period fit.
pub const PERIOD_WINDOW: f64 = 6.0;
pub const PERIOD_SAMPLES: usize = 400;

/// Harmonic period `2 pi / omega`: `(pi/J) sqrt(J/Omega)` for a particle,
/// `(pi/2J) sqrt(|U|/Omega)` for a dimer.
pub fn nominal_period(spec: &SystemSpec, sector: Sector) -> Result<f64> {
    if spec.trap <= 0.0 {
        return Err(Error::InvalidArgument("no oscillation period without a trap".into()));
    }
    match sector {
        Sector::Single => Ok(std::f64::consts::PI / (spec.hopping * spec.trap).sqrt()),
        Sector::Dimer => Ok(std::f64::consts::PI / (spec.dimer_hopping()?.abs() * spec.dimer_trap()).sqrt()),
        Sector::TwoBoson => Err(Error::InvalidArgument(
            "the two-boson sector has no single harmonic period".into(),
        )),
    }
}

/// Period of `<j>(t)` measured over [`PERIOD_WINDOW`] nominal periods.
pub fn measure_period(dec: &SpectralDecomposition, psi0: &QuantumState, nominal: f64) -> Result<Option<f64>> {
    let times = uniform_times(PERIOD_WINDOW * nominal, PERIOD_SAMPLES)?;
    evolve(dec, psi0, &times)?.period()
}

/// Return-probability `|<psi0|psi(t)>|^2` around a nominal period.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Revival {
    pub at_nominal: f64,
    pub best: f64,
    pub best_time: f64,
}

/// Fidelity at `tau` and its maximum over `[0.9 tau, 1.1 tau]`.
pub fn revival(dec: &SpectralDecomposition, psi0: &QuantumState, tau: f64) -> Result<Revival> {
    const POINTS: usize = 201;
    let mut times: Vec<f64> = (0..POINTS)
        .map(|i| tau * (0.9 + 0.2 * i as f64 / (POINTS - 1) as f64))
        .collect();
    times[POINTS / 2] = tau;
    let fid = evolve(dec, psi0, &times)?.fidelities(psi0)?;
    let (idx, best) = fid
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, f)| if f > acc.1 { (i, f) } else { acc });
    Ok(Revival {
        at_nominal: fid[POINTS / 2],
        best,
        best_time: times[idx],
    })
}

/// `samples` equally spaced times from 0 to `t_max` inclusive.
pub fn uniform_times(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need t_max > 0 and at least 2 samples, got t_max = {t_max}, samples = {samples}"
        )));
    }
    let last = (samples - 1) as f64;
    Ok((0..samples).map(|i| t_max * i as f64 / last).collect())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no sample times given".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("sample times must be finite and strictly ascending".into()));
    }
    Ok(())
}

/// States sampled at ascending times. Row `i` of `amplitudes` is `psi(t_i)`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    spec: SystemSpec,
    basis: Arc<FockBasis>,
    provenance: Provenance,
    times: Vec<f64>,
    amplitudes: Array2<Complex64>,
}

/// Largest deviations seen by [`Trajectory::check_invariants`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DriftReport {
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub energy_limit: f64,
}

/// `psi(t) = sum_k exp(-i E_k t) <chi_k|psi0> |chi_k>`.
pub fn evolve(dec: &SpectralDecomposition, psi0: &QuantumState, times: &[f64]) -> Result<Trajectory> {
    if **dec.basis() != **psi0.basis() {
        return Err(Error::BasisMismatch {
            left: dec.len(),
            right: psi0.len(),
        });
    }
    check_times(times)?;
    let v = dec.eigenvectors();
    let n = dec.len();
    let re = ndarray::Array1::from_iter(psi0.amplitudes().iter().map(|a| a.re));
    let im = ndarray::Array1::from_iter(psi0.amplitudes().iter().map(|a| a.im));
    let (cr, ci) = (v.t().dot(&re), v.t().dot(&im));

    // Phased coefficients for every time as real n x T blocks, then one gemm each.
    let mut dr = Array2::<f64>::zeros((n, times.len()));
    let mut di = Array2::<f64>::zeros((n, times.len()));
    for k in 0..n {
        let e = dec.energy(k);
        for (i, &t) in times.iter().enumerate() {
            let (s, c) = (e * t).sin_cos();
            // (cr + i ci)(c - i s)
            dr[[k, i]] = cr[k] * c + ci[k] * s;
            di[[k, i]] = ci[k] * c - cr[k] * s;
        }
    }
    let (pr, pi) = (v.dot(&dr), v.dot(&di));
    let amplitudes = Array2::from_shape_fn((times.len(), n), |(i, r)| Complex64::new(pr[[r, i]], pi[[r, i]]));
    Ok(Trajectory {
        spec: *dec.spec(),
        basis: dec.basis().clone(),
        provenance: dec.provenance(),
        times: times.to_vec(),
        amplitudes,
    })
}

/// Bessel functions `J_0(x) ..= J_nmax(x)` by Miller's backward recurrence.
pub fn bessel_j_sequence(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = nmax.max(ax as usize) + 30 + (ax.sqrt() * 10.0) as usize;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0;
    for n in (0..=start).rev() {
        if n <= nmax {
            out[n] = cur;
        }
        if n % 2 == 0 {
            norm += if n == 0 { cur } else { 2.0 * cur };
        }
        if n == 0 {
            break;
        }
        let prev = 2.0 * n as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            next *= scale;
            norm *= scale;
            out.iter_mut().for_each(|v| *v *= scale);
        }
    }
    out.iter_mut().for_each(|v| *v /= norm);
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// One Chebyshev step `exp(-i H dt) psi`.
fn chebyshev_step(h: &HamiltonianMatrix, centre: f64, radius: f64, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
    let x = radius * dt;
    let nmax = (x + 10.0 * x.cbrt() + 40.0) as usize;
    let bessel = bessel_j_sequence(nmax, x);
    let scaled = |v: &[Complex64]| -> Vec<Complex64> {
        h.apply(v)
            .into_iter()
            .zip(v)
            .map(|(hv, &vv)| (hv - vv * centre) / radius)
            .collect()
    };
    let mut prev = psi.to_vec();
    let mut cur = scaled(psi);
    let mut acc: Vec<Complex64> = prev.iter().map(|&p| p * bessel[0]).collect();
    let mut phase = Complex64::new(0.0, -1.0);
    for (n, &jn) in bessel.iter().enumerate().skip(1) {
        let coef = phase * (2.0 * jn);
        acc.iter_mut().zip(&cur).for_each(|(a, &c)| *a += c * coef);
        if n == nmax {
            break;
        }
        let hs = scaled(&cur);
        let next: Vec<Complex64> = hs.iter().zip(&prev).map(|(&a, &b)| a * 2.0 - b).collect();
        prev = std::mem::replace(&mut cur, next);
        phase *= Complex64::new(0.0, -1.0);
    }
    let global = Complex64::from_polar(1.0, -centre * dt);
    acc.iter_mut().for_each(|a| *a *= global);
    acc
}

/// Chebyshev-expansion propagator stepping between consecutive sample times.
/// Needs only matrix-vector products, so it avoids the dense eigensolve.
pub fn chebyshev_evolve(h: &HamiltonianMatrix, psi0: &QuantumState, times: &[f64]) -> Result<Trajectory> {
    if **h.basis() != **psi0.basis() {
        return Err(Error::BasisMismatch {
            left: h.dim(),
            right: psi0.len(),
        });
    }
    check_times(times)?;
    if times[0] < 0.0 {
        return Err(Error::InvalidArgument("Chebyshev propagation runs forward from t = 0".into()));
    }
    let (lo, hi) = h.spectral_bounds();
    let centre = 0.5 * (lo + hi);
    let radius = (0.5 * (hi - lo)).max(1e-12) * 1.01;
    let n = h.dim();
    let mut amplitudes = Array2::<Complex64>::zeros((times.len(), n));
    let mut psi = psi0.amplitudes().to_vec();
    let mut t_prev = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if t > t_prev {
            psi = chebyshev_step(h, centre, radius, &psi, t - t_prev);
            t_prev = t;
        }
        amplitudes.row_mut(i).iter_mut().zip(&psi).for_each(|(a, &p)| *a = p);
    }
    Ok(Trajectory {
        spec: *h.spec(),
        basis: h.basis().clone(),
        provenance: h.provenance(),
        times: times.to_vec(),
        amplitudes,
    })
}

/// Site density: `|a_j|^2` for one boson, number-operator expectation for two,
/// atom density `2 |a_j|^2` for the dimer sector.
pub fn density(psi: &QuantumState) -> Vec<f64> {
    density_of(psi.basis(), psi.amplitudes())
}

fn density_of(basis: &FockBasis, amps: &[Complex64]) -> Vec<f64> {
    let m = basis.half_width() as i64;
    let mut rho = vec![0.0; basis.num_sites()];
    let idx = |j: i64| (j + m) as usize;
    for (state, a) in basis.states().iter().zip(amps) {
        let p = a.norm_sqr();
        match *state {
            FockState::Single(j) => rho[idx(j)] += p,
            FockState::Pair(i, j) => {
                rho[idx(i)] += p;
                rho[idx(j)] += p;
            }
            FockState::Double(j) | FockState::Dimer(j) => rho[idx(j)] += 2.0 * p,
        }
    }
    rho
}

/// `sum_j |<2_j|psi>|^2`.
pub fn pair_projection(psi: &QuantumState) -> Result<f64> {
    pair_projection_of(psi.basis(), psi.amplitudes())
}

fn pair_projection_of(basis: &FockBasis, amps: &[Complex64]) -> Result<f64> {
    if basis.sector() != Sector::TwoBoson {
        return Err(Error::SectorMismatch {
            expected: Sector::TwoBoson,
            found: basis.sector(),
        });
    }
    Ok(basis
        .states()
        .iter()
        .zip(amps)
        .filter(|(s, _)| matches!(s, FockState::Double(_)))
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// `1 - pair_projection`.
pub fn monomer_admixture(psi: &QuantumState) -> Result<f64> {
    Ok(1.0 - pair_projection(psi)?)
}

/// `<j> = sum_j j rho_j / sum_j rho_j`.
pub fn center_of_mass(psi: &QuantumState) -> f64 {
    com_of_density(&density(psi), psi.basis().half_width())
}

fn com_of_density(rho: &[f64], half_width: usize) -> f64 {
    let total: f64 = rho.iter().sum();
    let moment: f64 = rho
        .iter()
        .enumerate()
        .map(|(i, r)| (i as f64 - half_width as f64) * r)
        .sum();
    moment / total
}

/// Period of the dominant oscillation in a uniformly sampled series.
///
/// The mean is removed, the series is zero padded and Fourier transformed,
/// and the largest peak at frequency `>= 1/T` (`T` the window length) is
/// refined by quadratic interpolation. Returns `None` when the signal is flat
/// or no peak stands out from the rest of the spectrum.
pub fn estimate_period(times: &[f64], values: &[f64]) -> Result<Option<f64>> {
    if times.len() != values.len() {
        return Err(Error::InvalidArgument("times and values differ in length".into()));
    }
    if times.len() < 4 {
        return Err(Error::InvalidArgument("at least 4 samples are needed".into()));
    }
    check_times(times)?;
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidArgument("period estimation needs uniform sampling".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let spread = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if spread <= 1e-9 * (1.0 + mean.abs()) {
        return Ok(None);
    }

    const PAD: usize = 32;
    let len = (n * PAD).next_power_of_two();
    let mut buf: Vec<Complex64> = values
        .iter()
        .map(|v| Complex64::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(len)
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mag: Vec<f64> = buf[..len / 2].iter().map(|c| c.norm()).collect();

    // Bin spacing is 1/(len dt); the window frequency 1/(n dt) sits at len/n.
    let first = (len as f64 / n as f64).ceil() as usize;
    if first + 2 >= mag.len() {
        return Ok(None);
    }
    let (peak, &height) = mag[first..mag.len() - 1]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, h)| (i + first, h))
        .expect("nonempty search range");
    let mut sorted = mag[first..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if height < 5.0 * median || mag[peak - 1] > height {
        return Ok(None);
    }
    let (a, b, c) = (mag[peak - 1], height, mag[peak + 1]);
    let denom = a - 2.0 * b + c;
    let delta = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let freq = (peak as f64 + delta) / (len as f64 * dt);
    Ok(Some(1.0 / freq))
}

impl Trajectory {
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

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    pub fn state(&self, i: usize) -> QuantumState {
        QuantumState::from_amplitudes(self.basis.clone(), self.amplitudes.row(i).to_vec())
    }

    fn rows(&self) -> impl Iterator<Item = &[Complex64]> + '_ {
        self.amplitudes
            .axis_iter(Axis(0))
            .map(|row| row.to_slice().expect("rows are contiguous"))
    }

    /// Site densities, one row per sample.
    pub fn densities(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.len(), self.basis.num_sites()));
        for (mut dst, amps) in out.axis_iter_mut(Axis(0)).zip(self.rows()) {
            for (d, r) in dst.iter_mut().zip(density_of(&self.basis, amps)) {
                *d = r;
            }
        }
        out
    }

    pub fn pair_projections(&self) -> Result<Vec<f64>> {
        self.rows().map(|a| pair_projection_of(&self.basis, a)).collect()
    }

    pub fn monomer_admixtures(&self) -> Result<Vec<f64>> {
        Ok(self.pair_projections()?.into_iter().map(|p| 1.0 - p).collect())
    }

    pub fn centers_of_mass(&self) -> Vec<f64> {
        self.densities()
            .axis_iter(Axis(0))
            .map(|rho| com_of_density(rho.as_slice().expect("contiguous"), self.basis.half_width()))
            .collect()
    }

    /// `|<reference|psi(t)>|^2` at every sample.
    pub fn fidelities(&self, reference: &QuantumState) -> Result<Vec<f64>> {
        if **reference.basis() != *self.basis {
            return Err(Error::BasisMismatch {
                left: reference.len(),
                right: self.basis.len(),
            });
        }
        Ok(self
            .rows()
            .map(|amps| {
                reference
                    .amplitudes()
                    .iter()
                    .zip(amps)
                    .map(|(r, a)| r.conj() * a)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect())
    }

    /// Period of `<j>(t)`, `None` if aperiodic.
    pub fn period(&self) -> Result<Option<f64>> {
        estimate_period(&self.times, &self.centers_of_mass())
    }

    /// `max_{t,j} |rho_j(t) - rho_j(0)|`.
    pub fn max_density_drift(&self) -> f64 {
        let rho = self.densities();
        let first = rho.row(0).to_owned();
        rho.axis_iter(Axis(0))
            .flat_map(|row| row.iter().zip(first.iter()).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }

    /// `max_{t,j} |rho_j - rho'_j|` against a trajectory on the same lattice
    /// and times (sectors may differ).
    pub fn max_density_deviation(&self, other: &Trajectory) -> Result<f64> {
        if self.basis.half_width() != other.basis.half_width() {
            return Err(Error::BasisMismatch {
                left: self.basis.num_sites(),
                right: other.basis.num_sites(),
            });
        }
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::InvalidArgument("trajectories are sampled at different times".into()));
        }
        let (a, b) = (self.densities(), other.densities());
        Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Norm and energy drift over all samples; errors past the fixed limits.
    pub fn check_invariants(&self, h: &HamiltonianMatrix) -> Result<DriftReport> {
        if **h.basis() != *self.basis {
            return Err(Error::BasisMismatch {
                left: h.dim(),
                right: self.basis.len(),
            });
        }
        let mut norm_drift: f64 = 0.0;
        let mut energies = Vec::with_capacity(self.len());
        for amps in self.rows() {
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            norm_drift = norm_drift.max((norm - 1.0).abs());
            energies.push(h.expectation(amps));
        }
        let energy_drift = energies.iter().map(|e| (e - energies[0]).abs()).fold(0.0, f64::max);
        let report = DriftReport {
            norm_drift,
            energy_drift,
            energy_limit: ENERGY_DRIFT_LIMIT * h.norm_bound(),
        };
        if norm_drift > NORM_DRIFT_LIMIT {
            return Err(Error::Invariant(format!("norm drift {norm_drift:.3e} exceeds {NORM_DRIFT_LIMIT:.0e}")));
        }
        if energy_drift > report.energy_limit {
            return Err(Error::Invariant(format!(
                "energy drift {energy_drift:.3e} exceeds {:.3e}",
                report.energy_limit
            )));
        }
        Ok(report)
    }

    /// Largest occupancy of the two outermost sites at either end.
    pub fn max_edge_occupancy(&self) -> (f64, f64) {
        self.rows()
            .zip(&self.times)
            .map(|(amps, &t)| (edge_occupancy(&self.basis, amps), t))
            .fold((0.0, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
    }

    /// Errors with advice to enlarge the lattice if the edges ever hold more
    /// than `limit`.
    pub fn check_boundary(&self, limit: f64) -> Result<f64> {
        let (occupancy, time) = self.max_edge_occupancy();
        if occupancy >= limit {
            return Err(Error::BoundaryGuard { occupancy, limit, time });
        }
        Ok(occupancy)
    }

    /// CSV `t,rho_-M,...,rho_M[,pair_proj],com`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let m = self.basis.half_width() as i64;
        let two = self.sector() == Sector::TwoBoson;
        let mut header = String::from("t");
        for j in -m..=m {
            header.push_str(&format!(",rho_{j}"));
        }
        if two {
            header.push_str(",pair_proj");
        }
        header.push_str(",com");
        writeln!(out, "{header}")?;
        let rho = self.densities();
        let pairs = if two { Some(self.pair_projections()?) } else { None };
        for (i, row) in rho.axis_iter(Axis(0)).enumerate() {
            let mut line = format!("{:.16e}", self.times[i]);
            for r in row.iter() {
                line.push_str(&format!(",{r:.16e}"));
            }
            if let Some(p) = &pairs {
                line.push_str(&format!(",{:.16e}", p[i]));
            }
            let com = com_of_density(row.as_slice().expect("contiguous"), m as usize);
            line.push_str(&format!(",{com:.16e}"));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Sidecar describing the Hamiltonian behind the trajectory.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "system": self.spec,
            "sector": self.sector(),
            "provenance": self.provenance,
            "samples": self.len(),
            "t_max": self.times.last().copied().unwrap_or(0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_single_hamiltonian, build_two_boson_hamiltonian};
    use crate::spectral::diagonalize;

    fn single(m: usize) -> (HamiltonianMatrix, SpectralDecomposition) {
        let s = SystemSpec::from_ratio(140.0, 0.0, m).unwrap();
        let h = build_single_hamiltonian(&s).unwrap();
        let dec = diagonalize(&h).unwrap();
        (h, dec)
    }

    #[test]
    fn eigenstates_are_stationary() {
        let (h, dec) = single(20);
        let psi = dec.state(3);
        let traj = evolve(&dec, &psi, &uniform_times(50.0, 11).unwrap()).unwrap();
        for f in traj.fidelities(&psi).unwrap() {
            assert!((f - 1.0).abs() < 1e-12);
        }
        traj.check_invariants(&h).unwrap();
    }

    #[test]
    fn two_level_beat() {
        let (_, dec) = single(20);
        let amps: Vec<Complex64> = (0..dec.len())
            .map(|r| Complex64::new((dec.eigenvectors()[[r, 0]] + dec.eigenvectors()[[r, 1]]) / 2f64.sqrt(), 0.0))
            .collect();
        let psi = QuantumState::from_amplitudes(dec.basis().clone(), amps);
        let w = dec.energy(1) - dec.energy(0);
        let period = 2.0 * std::f64::consts::PI / w;
        let times = uniform_times(12.0 * period, 1200).unwrap();
        let traj = evolve(&dec, &psi, &times).unwrap();
        let est = traj.period().unwrap().unwrap();
        assert!((est / period - 1.0).abs() < 2e-3, "{est} vs {period}");
        // rho_j(t) = (v0^2 + v1^2)/2 + v0 v1 cos(w t)
        let row = dec.spec().site_index(2);
        let (v0, v1) = (dec.eigenvectors()[[row, 0]], dec.eigenvectors()[[row, 1]]);
        let rho = traj.densities();
        for (i, &t) in times.iter().enumerate() {
            let expected = 0.5 * (v0 * v0 + v1 * v1) + v0 * v1 * (w * t).cos();
            assert!((rho[[i, row]] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_aperiodic() {
        let (_, dec) = single(20);
        let traj = evolve(&dec, &dec.state(0), &uniform_times(100.0, 200).unwrap()).unwrap();
        for c in traj.centers_of_mass() {
            assert!(c.abs() < 1e-12);
        }
        assert_eq!(traj.period().unwrap(), None);
    }

    #[test]
    fn pure_sine_period() {
        let times = uniform_times(100.0, 401).unwrap();
        let values: Vec<f64> = times.iter().map(|t| 3.0 + (2.0 * std::f64::consts::PI * t / 13.7 + 0.4).sin()).collect();
        let p = estimate_period(&times, &values).unwrap().unwrap();
        assert!((p - 13.7).abs() < 0.05, "{p}");
        assert!(estimate_period(&times, &vec![1.0; 401]).unwrap().is_none());
        assert!(estimate_period(&times[..3], &values[..3]).is_err());
    }

    #[test]
    fn bessel_reference_values() {
        let j1 = bessel_j_sequence(3, 1.0);
        assert!((j1[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j1[2] - 0.114_903_484_931_900_5).abs() < 1e-15);
        let j10 = bessel_j_sequence(5, 10.0);
        assert!((j10[0] + 0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j10[5] + 0.234_061_528_186_793_6).abs() < 1e-14);
        let big = bessel_j_sequence(400, 300.0);
        let sum: f64 = big[0] + 2.0 * big.iter().skip(2).step_by(2).sum::<f64>();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(bessel_j_sequence(2, 0.0), vec![1.0, 0.0, 0.0]);
        let neg = bessel_j_sequence(2, -1.0);
        assert!((neg[1] + j1[1]).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_matches_spectral() {
        let s = SystemSpec::from_ratio(140.0, -10.0, 8).unwrap();
        let h = build_two_boson_hamiltonian(&s).unwrap();
        let dec = diagonalize(&h).unwrap();
        let psi = QuantumState::basis_state(dec.basis().clone(), 5);
        let times = uniform_times(40.0, 9).unwrap();
        let a = evolve(&dec, &psi, &times).unwrap();
        let b = chebyshev_evolve(&h, &psi, &times).unwrap();
        let dist = (a.amplitudes() - b.amplitudes())
            .axis_iter(Axis(0))
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        assert!(dist < 1e-8, "{dist}");
    }

    #[test]
    fn fock_state_observables() {
        let b = Arc::new(FockBasis::new(4, Sector::TwoBoson));
        let double = QuantumState::basis_state(b.clone(), b.two_boson_index(3, 3).unwrap());
        let rho = density(&double);
        assert_eq!(rho[7], 2.0);
        assert_eq!(rho.iter().sum::<f64>(), 2.0);
        assert_eq!(pair_projection(&double).unwrap(), 1.0);
        assert_eq!(center_of_mass(&double), 3.0);

        let pair = QuantumState::basis_state(b.clone(), b.two_boson_index(0, 1).unwrap());
        let rho = density(&pair);
        assert_eq!((rho[4], rho[5]), (1.0, 1.0));
        assert_eq!(pair_projection(&pair).unwrap(), 0.0);
        assert_eq!(monomer_admixture(&pair).unwrap(), 1.0);

        let dimer = QuantumState::basis_state(Arc::new(FockBasis::new(4, Sector::Dimer)), 0);
        assert_eq!(density(&dimer)[0], 2.0);
        assert!(pair_projection(&dimer).is_err());
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let (_, dec) = single(10);
        let other = QuantumState::basis_state(Arc::new(FockBasis::new(11, Sector::Single)), 0);
        assert!(matches!(evolve(&dec, &other, &[0.0]), Err(Error::BasisMismatch { .. })));
        assert!(evolve(&dec, &dec.state(0), &[1.0, 0.5]).is_err());
    }

    #[test]
    fn boundary_guard_trips_on_small_lattice() {
        // A particle released from one site spreads ballistically to the edges.
        let s = SystemSpec::from_ratio(140.0, 0.0, 10).unwrap();
        let dec = diagonalize(&build_single_hamiltonian(&s).unwrap()).unwrap();
        let psi = dec.basis().site_state(0).map(|k| QuantumState::basis_state(dec.basis().clone(), k)).unwrap();
        assert!(psi.edge_weight() < 1e-8);
        let traj = evolve(&dec, &psi, &uniform_times(40.0, 80).unwrap()).unwrap();
        let err = traj.check_boundary(BOUNDARY_LIMIT).unwrap_err();
        assert!(err.to_string().contains("increase M"));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn csv_layout() {
        let (_, dec) = single(2);
        let traj = evolve(&dec, &dec.state(0), &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,rho_-2,rho_-1,rho_0,rho_1,rho_2,com");
        assert_eq!(lines.next().unwrap().split(',').count(), 7);
        assert!(text.lines().nth(2).unwrap().starts_with("1.0000000000000000e0,"));
    }
}

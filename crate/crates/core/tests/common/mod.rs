//! Independent reference computations shared by the integration targets.
//! Nothing here calls the library's matrix builders or eigensolver.

#![allow(dead_code)]

use ndarray::Array2;
use qlattice::{FockBasis, FockState};

/// Diagonal and off-diagonal of the trapped tight-binding chain, written out
/// directly: `Omega j^2` on the diagonal and `-J` between neighbours.
pub fn chain(hopping: f64, trap: f64, half_width: usize) -> (Vec<f64>, Vec<f64>) {
    let m = half_width as i64;
    let diag = (-m..=m).map(|j| trap * (j * j) as f64).collect();
    let off = vec![-hopping; 2 * half_width];
    (diag, off)
}

/// Number of eigenvalues of a symmetric tridiagonal matrix strictly below `x`
/// (Sturm sequence via the LDL^T pivots).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * (off[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue by bisection on the Sturm count.
pub fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let radius = off.iter().map(|o| 2.0 * o.abs()).fold(0.0, f64::max);
    let mut lo = diag.iter().copied().fold(f64::INFINITY, f64::min) - radius;
    let mut hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + radius;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Two-boson Hamiltonian obtained by building `H1 x 1 + 1 x H1 + U P_same`
/// on the distinguishable-particle space and projecting onto symmetrized
/// states `(|ij> + |ji>)/sqrt2` and `|jj>`, ordered like `basis`.
pub fn tensor_product_two_boson(hopping: f64, trap: f64, interaction: f64, basis: &FockBasis) -> Array2<f64> {
    let m = basis.half_width() as i64;
    let l = basis.num_sites();
    let idx = |j: i64| (j + m) as usize;
    let mut h1 = Array2::<f64>::zeros((l, l));
    for j in -m..=m {
        h1[[idx(j), idx(j)]] = trap * (j * j) as f64;
        if j < m {
            h1[[idx(j), idx(j + 1)]] = -hopping;
            h1[[idx(j + 1), idx(j)]] = -hopping;
        }
    }
    let n = l * l;
    let mut big = Array2::<f64>::zeros((n, n));
    for a in 0..l {
        for b in 0..l {
            let row = a * l + b;
            for c in 0..l {
                big[[row, c * l + b]] += h1[[a, c]];
                big[[row, a * l + c]] += h1[[b, c]];
            }
            if a == b {
                big[[row, row]] += interaction;
            }
        }
    }
    // Columns of the isometry from the symmetric subspace.
    let dim = basis.len();
    let mut iso = Array2::<f64>::zeros((n, dim));
    for (k, state) in basis.states().iter().enumerate() {
        match *state {
            FockState::Pair(i, j) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                iso[[idx(i) * l + idx(j), k]] = s;
                iso[[idx(j) * l + idx(i), k]] = s;
            }
            FockState::Double(j) => iso[[idx(j) * l + idx(j), k]] = 1.0,
            _ => panic!("not a two-boson state"),
        }
    }
    iso.t().dot(&big).dot(&iso)
}

/// Mean spacing of upward mean-crossings, located by linear interpolation.
pub fn crossing_period(times: &[f64], values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let x: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let mut crossings = Vec::new();
    for i in 0..x.len() - 1 {
        if x[i] < 0.0 && x[i + 1] >= 0.0 {
            let frac = -x[i] / (x[i + 1] - x[i]);
            crossings.push(times[i] + frac * (times[i + 1] - times[i]));
        }
    }
    assert!(crossings.len() >= 2, "fewer than two crossings");
    (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
}

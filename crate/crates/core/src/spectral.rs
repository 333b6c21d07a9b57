//! Spectral measures of Jacobi matrices.
//!
//! The spectral measure of `J` is `sum_j w_j delta(lambda_j)` with
//! `w_j = v_j(1)^2`, the squared first component of the unit eigenvector.
//! Eigenvalues and first components come from an implicit QL iteration
//! that carries only the first row of the eigenvector matrix, so the cost
//! is `O(n^2)` with `O(n)` memory.

use crate::error::{invalid, Error, Result};
use crate::matproc::{symmetrize, BidiagonalMatrix, JacobiMatrix};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const MAX_QL_ITER: usize = 60;
/// Relative separation below which neighbouring eigenvalues of a generic
/// Jacobi matrix count as tied.
const TIE_TOL: f64 = 1e-13;
/// Separation enforced after a tie is detected, relative to the spectral scale.
pub const TIE_JITTER: f64 = 1e-12;

/// A weighted point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: f64,
    pub weight: f64,
}

/// Anything that is a finite sum of point masses.
pub trait AtomicMeasure {
    fn atoms(&self) -> Vec<Atom>;

    /// `k`-th moment. Atoms `i` and `len-1-i` are summed together first, so
    /// an exactly symmetric measure gives exactly zero odd moments.
    fn moment(&self, k: u32) -> f64 {
        let atoms = self.atoms();
        let m = atoms.len();
        let term = |a: &Atom| a.weight * a.point.powi(k as i32);
        let mut s = 0.0;
        for i in 0..m / 2 {
            s += term(&atoms[i]) + term(&atoms[m - 1 - i]);
        }
        if m % 2 == 1 {
            s += term(&atoms[m / 2]);
        }
        s
    }

    fn total_mass(&self) -> f64 {
        self.atoms().iter().map(|a| a.weight).sum()
    }
}

/// Spectral measure, atoms sorted by decreasing point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
}

impl SpectralMeasure {
    pub fn points(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.point).collect()
    }
    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }
    pub fn len(&self) -> usize {
        self.atoms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
    /// `sum_{j <= k} w_j` over the `k` largest points.
    pub fn partial_weight(&self, k: usize) -> f64 {
        self.atoms[..k].iter().map(|a| a.weight).sum()
    }
    pub fn to_csv(&self) -> String {
        let mut s = String::from("point,weight\n");
        for a in &self.atoms {
            let _ = writeln!(s, "{:?},{:?}", a.point, a.weight);
        }
        s
    }
}

impl AtomicMeasure for SpectralMeasure {
    fn atoms(&self) -> Vec<Atom> {
        self.atoms.clone()
    }
}

/// Empirical eigenvalue measure: mass `1/n` at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub points: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn to_csv(&self) -> String {
        let mut s = String::from("point\n");
        for p in &self.points {
            let _ = writeln!(s, "{p:?}");
        }
        s
    }
}

impl AtomicMeasure for EmpiricalMeasure {
    fn atoms(&self) -> Vec<Atom> {
        let w = 1.0 / self.points.len() as f64;
        self.points.iter().map(|&point| Atom { point, weight: w }).collect()
    }
}

/// Eigenvalues (decreasing) and absolute first components of the unit eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigen {
    pub values: Vec<f64>,
    pub first: Vec<f64>,
    /// Whether ties had to be separated by [`TIE_JITTER`].
    pub jittered: bool,
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
pub fn eigen_tridiagonal(j: &JacobiMatrix) -> Result<TridiagEigen> {
    let n = j.n();
    if j.diag.iter().chain(&j.offdiag).any(|v| !v.is_finite()) {
        return Err(invalid("matrix", "entries must be finite"));
    }
    let mut d = j.diag.clone();
    let mut e = j.offdiag.clone();
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITER {
                return Err(Error::NoConvergence {
                    iterations: MAX_QL_ITER,
                    diag: j.diag.clone(),
                    offdiag: j.offdiag.clone(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + c * fz;
                z[i] = c * z[i] - s * fz;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let mut values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let first = order.iter().map(|&i| z[i].abs()).collect();

    let mut jittered = false;
    if j.is_generic() && n > 1 {
        // A Jacobi matrix has simple spectrum; a numerical tie is separated
        // so downstream code can rely on strict ordering.
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 1..n {
            if values[k - 1] - values[k] < TIE_TOL * scale {
                values[k] = values[k - 1] - TIE_JITTER * scale;
                jittered = true;
            }
        }
        if jittered {
            log::warn!("eigenvalue tie in a Jacobi matrix of size {n}; separated by {TIE_JITTER:e} relative jitter");
        }
    }
    Ok(TridiagEigen { values, first, jittered })
}

/// Spectral measure of `J`. Weights are renormalized to sum to one.
pub fn spectral_measure(j: &JacobiMatrix) -> Result<SpectralMeasure> {
    let eig = eigen_tridiagonal(j)?;
    let total: f64 = eig.first.iter().map(|q| q * q).sum();
    let atoms = eig
        .values
        .iter()
        .zip(&eig.first)
        .map(|(&point, &q)| Atom {
            point,
            weight: q * q / total,
        })
        .collect();
    Ok(SpectralMeasure { atoms })
}

/// Empirical eigenvalue measure of `J`.
pub fn empirical_eigen_measure(j: &JacobiMatrix) -> Result<EmpiricalMeasure> {
    Ok(EmpiricalMeasure {
        points: eigen_tridiagonal(j)?.values,
    })
}

/// Eigenvalues of the `2n x 2n` embedding as exact `±sigma` pairs, with the
/// matching first components averaged across each pair.
fn paired_spectrum(l: &BidiagonalMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = l.n();
    let eig = eigen_tridiagonal(&symmetrize(l))?;
    let mut sigma = Vec::with_capacity(n);
    let mut q2 = Vec::with_capacity(n);
    for k in 0..n {
        let hi = eig.values[k];
        let lo = eig.values[2 * n - 1 - k];
        sigma.push((0.5 * (hi - lo)).max(0.0));
        q2.push(0.5 * (eig.first[k].powi(2) + eig.first[2 * n - 1 - k].powi(2)));
    }
    Ok((sigma, q2))
}

/// Singular values of `L` in decreasing order.
pub fn singular_values(l: &BidiagonalMatrix) -> Result<Vec<f64>> {
    Ok(paired_spectrum(l)?.0)
}

/// Spectral measure of the symmetrized matrix: atoms `±sigma_j`, each with
/// half the weight of `sigma_j^2` in the Wishart measure. Exactly even.
pub fn symmetrized_spectral_measure(l: &BidiagonalMatrix) -> Result<SpectralMeasure> {
    let (sigma, q2) = paired_spectrum(l)?;
    let total: f64 = 2.0 * q2.iter().sum::<f64>();
    let n = sigma.len();
    let mut atoms = Vec::with_capacity(2 * n);
    for k in 0..n {
        atoms.push(Atom {
            point: sigma[k],
            weight: q2[k] / total,
        });
    }
    for k in (0..n).rev() {
        atoms.push(Atom {
            point: -sigma[k],
            weight: q2[k] / total,
        });
    }
    Ok(SpectralMeasure { atoms })
}

/// Law of `sqrt(lambda)` under the spectral measure of `L^T L`: atoms at the
/// singular values carrying the Wishart weights.
pub fn wishart_sqrt_measure(l: &BidiagonalMatrix) -> Result<SpectralMeasure> {
    let (sigma, q2) = paired_spectrum(l)?;
    let total: f64 = q2.iter().sum();
    Ok(SpectralMeasure {
        atoms: sigma
            .iter()
            .zip(&q2)
            .map(|(&point, &q)| Atom { point, weight: q / total })
            .collect(),
    })
}

/// `(e_1, J^k e_1)` by repeated multiplication.
pub fn first_moment_power(j: &JacobiMatrix, k: u32) -> f64 {
    let n = j.n();
    let half = k / 2;
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    for _ in 0..half {
        v = j.mul_vec(&v);
    }
    if k.is_multiple_of(2) {
        v.iter().map(|x| x * x).sum()
    } else {
        let w = j.mul_vec(&v);
        v.iter().zip(&w).map(|(a, b)| a * b).sum()
    }
}

/// Rebuilds the Jacobi matrix whose spectral measure is `mu` (Lanczos on
/// `diag(lambda)` started at `sqrt(w)`, with full reorthogonalization).
pub fn jacobi_from_measure(mu: &SpectralMeasure) -> Result<JacobiMatrix> {
    let n = mu.len();
    if n == 0 {
        return Err(invalid("mu", "measure has no atoms"));
    }
    if mu.atoms.iter().any(|a| a.weight <= 0.0) {
        return Err(invalid("mu", "all weights must be positive"));
    }
    let lam = mu.points();
    let total: f64 = mu.atoms.iter().map(|a| a.weight).sum();
    let mut q: Vec<f64> = mu.atoms.iter().map(|a| (a.weight / total).sqrt()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        let mut w: Vec<f64> = q.iter().zip(&lam).map(|(x, l)| x * l).collect();
        let alpha: f64 = w.iter().zip(&q).map(|(a, b)| a * b).sum();
        diag.push(alpha);
        basis.push(q.clone());
        if k + 1 == n {
            break;
        }
        // two passes of Gram-Schmidt against every previous vector
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta == 0.0 {
            return Err(invalid("mu", "atoms are not distinct"));
        }
        offdiag.push(beta);
        q = w.iter().map(|x| x / beta).collect();
    }
    JacobiMatrix::new(diag, offdiag)
}

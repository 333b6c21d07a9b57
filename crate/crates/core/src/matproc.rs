//! Matrix-valued processes assembled from independent one-dimensional kernels.
//!
//! * β-Hermite: symmetric tridiagonal `J` with diagonal `U_i / sqrt(beta)`
//!   (OU processes) and off-diagonal `R_j / sqrt(2 beta)` where `R_j` is a
//!   generalized Bessel process of dimension `(n - j) beta`.
//! * β-Laguerre: upper bidiagonal `L` with diagonal `R / sqrt(beta)` of
//!   dimension `(a + n - i + 1) beta` and superdiagonal of dimension
//!   `(n - i) beta`. The β-Wishart process is `J = L^T L`.
//!
//! All kernels use the canonical clock `(a, sigma) = (1/2, 1)`, so
//! `rho(t) = 1 - e^{-t}`. Off-diagonal index `j` (1-based) always carries
//! dimension `(n - j) beta`; in the zero-based storage that is
//! `offdiag[j0]` with dimension `(n - 1 - j0) beta`.

use crate::error::{invalid, Result};
use crate::kernels::{
    bessel_sample_step, log_bessel_transition_density, log_chi_density, ou_sample_step, BesselParams, OuParams,
};
use crate::rng::{stream, Stream};
use crate::special::log_gamma;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Symmetric tridiagonal matrix in compact storage. A Jacobi matrix in the
/// strict sense has every off-diagonal entry positive; see [`JacobiMatrix::is_generic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("diag", "matrix must have at least one row"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(invalid(
                "offdiag",
                format!("expected {} entries, got {}", diag.len() - 1, offdiag.len()),
            ));
        }
        Ok(Self { diag, offdiag })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            offdiag: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// All off-diagonal entries strictly positive.
    pub fn is_generic(&self) -> bool {
        self.offdiag.iter().all(|&b| b > 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Every entry divided by `sqrt(n)`.
    pub fn scale_by_sqrt(&self, n: usize) -> Self {
        let s = 1.0 / (n as f64).sqrt();
        Self {
            diag: self.diag.iter().map(|v| v * s).collect(),
            offdiag: self.offdiag.iter().map(|v| v * s).collect(),
        }
    }

    /// `J / sqrt(n)` with `n` the matrix size.
    pub fn scale_by_sqrt_n(&self) -> Self {
        self.scale_by_sqrt(self.n())
    }

    /// Leading principal `m x m` submatrix.
    pub fn leading(&self, m: usize) -> Self {
        Self {
            diag: self.diag[..m].to_vec(),
            offdiag: self.offdiag[..m.saturating_sub(1)].to_vec(),
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.offdiag[i];
                m[i + 1][i] = self.offdiag[i];
            }
        }
        m
    }

    /// `y = J x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.offdiag[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `tr J^2 = sum a_i^2 + 2 sum b_i^2`.
    pub fn trace_sq(&self) -> f64 {
        self.diag.iter().map(|a| a * a).sum::<f64>() + 2.0 * self.offdiag.iter().map(|b| b * b).sum::<f64>()
    }

    /// Two-row CSV: `diag,...` then `offdiag,...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write_row(&mut s, "diag", &self.diag);
        write_row(&mut s, "offdiag", &self.offdiag);
        s
    }
}

/// Upper bidiagonal matrix: diagonal `x`, superdiagonal `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidiagonalMatrix {
    pub diag: Vec<f64>,
    pub superdiag: Vec<f64>,
}

impl BidiagonalMatrix {
    pub fn new(diag: Vec<f64>, superdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("diag", "matrix must have at least one row"));
        }
        if superdiag.len() + 1 != diag.len() {
            return Err(invalid(
                "superdiag",
                format!("expected {} entries, got {}", diag.len() - 1, superdiag.len()),
            ));
        }
        Ok(Self { diag, superdiag })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            superdiag: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn scale_by_sqrt(&self, n: usize) -> Self {
        let s = 1.0 / (n as f64).sqrt();
        Self {
            diag: self.diag.iter().map(|v| v * s).collect(),
            superdiag: self.superdiag.iter().map(|v| v * s).collect(),
        }
    }

    pub fn scale_by_sqrt_n(&self) -> Self {
        self.scale_by_sqrt(self.n())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.superdiag[i];
            }
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write_row(&mut s, "diag", &self.diag);
        write_row(&mut s, "superdiag", &self.superdiag);
        s
    }
}

fn write_row(out: &mut String, label: &str, values: &[f64]) {
    out.push_str(label);
    for v in values {
        // shortest round-trip representation keeps the file deterministic and lossless
        let _ = write!(out, ",{v:?}");
    }
    out.push('\n');
}

/// `J = L^T L` for upper bidiagonal `L`:
/// `J_11 = x_1^2`, `J_ii = x_i^2 + y_{i-1}^2`, `J_{i,i+1} = x_i y_i`.
pub fn wishart_of(l: &BidiagonalMatrix) -> JacobiMatrix {
    let n = l.n();
    let diag = (0..n)
        .map(|i| {
            let x = l.diag[i];
            if i == 0 {
                x * x
            } else {
                x * x + l.superdiag[i - 1] * l.superdiag[i - 1]
            }
        })
        .collect();
    let offdiag = (0..n.saturating_sub(1)).map(|i| l.diag[i] * l.superdiag[i]).collect();
    JacobiMatrix { diag, offdiag }
}

/// Golub–Kahan embedding: the `2n x 2n` zero-diagonal tridiagonal matrix with
/// off-diagonal `(x_1, y_1, x_2, y_2, ..., x_n)`. Its eigenvalues are
/// `±` the singular values of `L`.
pub fn symmetrize(l: &BidiagonalMatrix) -> JacobiMatrix {
    let n = l.n();
    let mut offdiag = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        offdiag.push(l.diag[i]);
        if i + 1 < n {
            offdiag.push(l.superdiag[i]);
        }
    }
    JacobiMatrix {
        diag: vec![0.0; 2 * n],
        offdiag,
    }
}

fn check_n_beta(n: usize, beta: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n", "matrix size must be at least 1"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("{beta} must be positive")));
    }
    Ok(())
}

fn check_a(a: f64) -> Result<()> {
    if !(a > -1.0 && a.is_finite()) {
        return Err(invalid("a", format!("{a} must be > -1")));
    }
    Ok(())
}

/// Bessel dimension of Hermite off-diagonal `j0` (zero-based).
pub fn hermite_offdiag_dim(n: usize, beta: f64, j0: usize) -> f64 {
    (n - 1 - j0) as f64 * beta
}

/// Bessel dimension of Laguerre diagonal `i0` (zero-based): `(a + n - i) beta`.
pub fn laguerre_diag_dim(n: usize, beta: f64, a: f64, i0: usize) -> f64 {
    (a + (n - i0) as f64) * beta
}

/// Bessel dimension of Laguerre superdiagonal `i0` (zero-based): `(n - i) beta`.
pub fn laguerre_superdiag_dim(n: usize, beta: f64, i0: usize) -> f64 {
    (n - 1 - i0) as f64 * beta
}

fn canonical(dim: f64) -> BesselParams {
    BesselParams {
        dim,
        clock: OuParams::CANONICAL,
    }
}

/// State of the β-Hermite process: the raw kernel values plus the random
/// stream driving them.
#[derive(Debug, Clone)]
pub struct HermiteProcess {
    n: usize,
    beta: f64,
    t: f64,
    /// OU values `U_i`
    ou: Vec<f64>,
    /// Bessel values `R_j`
    bessel: Vec<f64>,
    rng: Stream,
}

impl HermiteProcess {
    /// Zero state at `t = 0` on stream `(seed, 0)`.
    pub fn new(n: usize, beta: f64, seed: u64) -> Result<Self> {
        Self::with_stream(n, beta, stream(seed, 0))
    }

    pub fn with_stream(n: usize, beta: f64, rng: Stream) -> Result<Self> {
        check_n_beta(n, beta)?;
        Ok(Self {
            n,
            beta,
            t: 0.0,
            ou: vec![0.0; n],
            bessel: vec![0.0; n - 1],
            rng,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Advances every entry by its exact kernel over `dt`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let ou = OuParams::CANONICAL;
        for u in &mut self.ou {
            *u = ou_sample_step(*u, dt, &ou, &mut self.rng);
        }
        for (j0, r) in self.bessel.iter_mut().enumerate() {
            let p = canonical(hermite_offdiag_dim(self.n, self.beta, j0));
            *r = bessel_sample_step(*r, dt, &p, &mut self.rng);
        }
        self.t += dt;
        Ok(())
    }

    /// Current matrix `J_beta(t)`.
    pub fn matrix(&self) -> JacobiMatrix {
        let sd = 1.0 / self.beta.sqrt();
        let so = 1.0 / (2.0 * self.beta).sqrt();
        JacobiMatrix {
            diag: self.ou.iter().map(|u| u * sd).collect(),
            offdiag: self.bessel.iter().map(|r| r * so).collect(),
        }
    }
}

/// Zero β-Hermite state.
pub fn hermite_init(n: usize, beta: f64, seed: u64) -> Result<HermiteProcess> {
    HermiteProcess::new(n, beta, seed)
}

/// Advances the β-Hermite process by `dt`.
pub fn hermite_step(mut state: HermiteProcess, dt: f64) -> Result<HermiteProcess> {
    state.step(dt)?;
    Ok(state)
}

/// `J_beta(t)` started from zero, in one exact step.
pub fn sample_hermite(n: usize, beta: f64, t: f64, rng: Stream) -> Result<JacobiMatrix> {
    let mut p = HermiteProcess::with_stream(n, beta, rng)?;
    p.step(t)?;
    Ok(p.matrix())
}

/// State of the β-Laguerre process.
#[derive(Debug, Clone)]
pub struct LaguerreProcess {
    n: usize,
    beta: f64,
    a: f64,
    t: f64,
    diag: Vec<f64>,
    superdiag: Vec<f64>,
    rng: Stream,
}

impl LaguerreProcess {
    pub fn new(n: usize, beta: f64, a: f64, seed: u64) -> Result<Self> {
        Self::with_stream(n, beta, a, stream(seed, 0))
    }

    pub fn with_stream(n: usize, beta: f64, a: f64, rng: Stream) -> Result<Self> {
        check_n_beta(n, beta)?;
        check_a(a)?;
        Ok(Self {
            n,
            beta,
            a,
            t: 0.0,
            diag: vec![0.0; n],
            superdiag: vec![0.0; n - 1],
            rng,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        for (i0, r) in self.diag.iter_mut().enumerate() {
            let p = canonical(laguerre_diag_dim(self.n, self.beta, self.a, i0));
            *r = bessel_sample_step(*r, dt, &p, &mut self.rng);
        }
        for (i0, r) in self.superdiag.iter_mut().enumerate() {
            let p = canonical(laguerre_superdiag_dim(self.n, self.beta, i0));
            *r = bessel_sample_step(*r, dt, &p, &mut self.rng);
        }
        self.t += dt;
        Ok(())
    }

    /// Current matrix `L_{beta,a}(t)`.
    pub fn matrix(&self) -> BidiagonalMatrix {
        let s = 1.0 / self.beta.sqrt();
        BidiagonalMatrix {
            diag: self.diag.iter().map(|r| r * s).collect(),
            superdiag: self.superdiag.iter().map(|r| r * s).collect(),
        }
    }
}

/// Zero β-Laguerre state; rejects `a <= -1`.
pub fn laguerre_init(n: usize, beta: f64, a: f64, seed: u64) -> Result<LaguerreProcess> {
    LaguerreProcess::new(n, beta, a, seed)
}

pub fn laguerre_step(mut state: LaguerreProcess, dt: f64) -> Result<LaguerreProcess> {
    state.step(dt)?;
    Ok(state)
}

/// `L_{beta,a}(t)` started from zero, in one exact step.
pub fn sample_laguerre(n: usize, beta: f64, a: f64, t: f64, rng: Stream) -> Result<BidiagonalMatrix> {
    let mut p = LaguerreProcess::with_stream(n, beta, a, rng)?;
    p.step(t)?;
    Ok(p.matrix())
}

fn log_normal(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - x * x / (2.0 * var)
}

/// Log joint density of the independent entries of `J` when each entry has
/// its law at variance clock `rho` (product of per-entry densities).
/// `rho = rho(t)` gives the marginal at time `t`; `rho = 1` the stationary
/// β-Hermite ensemble.
pub fn hermite_entries_log_density(j: &JacobiMatrix, beta: f64, rho: f64) -> f64 {
    let n = j.n();
    if j.offdiag.iter().any(|&b| b <= 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut s: f64 = j.diag.iter().map(|&a| log_normal(a, rho / beta)).sum();
    for (j0, &b) in j.offdiag.iter().enumerate() {
        s += log_chi_density(b, hermite_offdiag_dim(n, beta, j0), rho / (2.0 * beta));
    }
    s
}

/// Log joint density of the entries of `J_beta(t)` started from zero.
pub fn hermite_entry_density(t: f64, j: &JacobiMatrix, beta: f64) -> Result<f64> {
    crate::kernels::require_time(t)?;
    check_n_beta(j.n(), beta)?;
    Ok(hermite_entries_log_density(j, beta, OuParams::CANONICAL.rho(t)))
}

/// The same density written in closed form with the normalizing constant
/// `c_{n beta}` and `rho(t)^{-n/2 - beta n(n-1)/4} exp(-beta tr J^2 / (2 rho))`.
pub fn hermite_entry_density_closed_form(t: f64, j: &JacobiMatrix, beta: f64) -> Result<f64> {
    crate::kernels::require_time(t)?;
    let n = j.n();
    check_n_beta(n, beta)?;
    if !j.is_generic() {
        return Ok(f64::NEG_INFINITY);
    }
    let nf = n as f64;
    let r = OuParams::CANONICAL.rho(t);
    let mut log_c = (nf / 2.0 - 1.0) * 2.0_f64.ln() + (nf / 2.0 + beta / 4.0 * nf * (nf - 1.0)) * beta.ln()
        - nf / 2.0 * PI.ln();
    for k in 1..n {
        log_c -= log_gamma(k as f64 * beta / 2.0)?;
    }
    let mut s = log_c - (nf / 2.0 + beta / 4.0 * nf * (nf - 1.0)) * r.ln();
    // b_{n-k}^{k beta - 1}: zero-based offdiag j0 = n-1-k
    for k in 1..n {
        s += (k as f64 * beta - 1.0) * j.offdiag[n - 1 - k].ln();
    }
    s -= beta / (2.0 * r) * j.trace_sq();
    Ok(s)
}

/// Log transition density `J~ -> J` over time `t`, as the product of the
/// per-entry kernels with their Jacobians (`sqrt(beta)` per diagonal entry,
/// `sqrt(2 beta)` per off-diagonal entry).
pub fn hermite_transition_log_density(t: f64, from: &JacobiMatrix, to: &JacobiMatrix, beta: f64) -> Result<f64> {
    crate::kernels::require_time(t)?;
    let n = to.n();
    check_n_beta(n, beta)?;
    if from.n() != n {
        return Err(invalid("from", "matrix sizes differ"));
    }
    let ou = OuParams::CANONICAL;
    let sb = beta.sqrt();
    let s2b = (2.0 * beta).sqrt();
    let mut s = 0.0;
    for i in 0..n {
        let mean = sb * from.diag[i] * ou.decay(t);
        s += sb.ln() + log_normal(sb * to.diag[i] - mean, ou.rho(t));
    }
    for j0 in 0..n - 1 {
        if to.offdiag[j0] <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        let p = canonical(hermite_offdiag_dim(n, beta, j0));
        s += s2b.ln() + log_bessel_transition_density(t, s2b * from.offdiag[j0], s2b * to.offdiag[j0], &p);
    }
    Ok(s)
}

/// Log joint density of the entries of `L` with each entry at variance clock `rho`.
pub fn laguerre_entries_log_density(l: &BidiagonalMatrix, beta: f64, a: f64, rho: f64) -> f64 {
    let n = l.n();
    if l.diag.iter().chain(&l.superdiag).any(|&v| v <= 0.0) {
        return f64::NEG_INFINITY;
    }
    let var = rho / beta;
    let mut s = 0.0;
    for (i0, &x) in l.diag.iter().enumerate() {
        s += log_chi_density(x, laguerre_diag_dim(n, beta, a, i0), var);
    }
    for (i0, &y) in l.superdiag.iter().enumerate() {
        s += log_chi_density(y, laguerre_superdiag_dim(n, beta, i0), var);
    }
    s
}

/// Log joint density of the entries of `L_{beta,a}(t)` started from zero.
pub fn laguerre_entry_density(t: f64, l: &BidiagonalMatrix, beta: f64, a: f64) -> Result<f64> {
    crate::kernels::require_time(t)?;
    check_n_beta(l.n(), beta)?;
    check_a(a)?;
    Ok(laguerre_entries_log_density(l, beta, a, OuParams::CANONICAL.rho(t)))
}

/// Closed form with constant `d_{n beta}` and `rho(t)^{-beta(na + n^2)/2}`.
pub fn laguerre_entry_density_closed_form(t: f64, l: &BidiagonalMatrix, beta: f64, a: f64) -> Result<f64> {
    crate::kernels::require_time(t)?;
    let n = l.n();
    check_n_beta(n, beta)?;
    check_a(a)?;
    if l.diag.iter().chain(&l.superdiag).any(|&v| v <= 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let nf = n as f64;
    let r = OuParams::CANONICAL.rho(t);
    let expo = beta * (nf * a + nf * nf) / 2.0;
    let mut log_d = (2.0 * nf - 1.0) * 2.0_f64.ln() + expo * (beta / 2.0).ln();
    for j in 1..n {
        log_d -= log_gamma(j as f64 * beta / 2.0)?;
    }
    for j in 1..=n {
        log_d -= log_gamma((a + j as f64) * beta / 2.0)?;
    }
    let mut s = log_d - expo * r.ln();
    for (i0, &x) in l.diag.iter().enumerate() {
        s += (laguerre_diag_dim(n, beta, a, i0) - 1.0) * x.ln() - beta * x * x / (2.0 * r);
    }
    for (i0, &y) in l.superdiag.iter().enumerate() {
        s += (laguerre_superdiag_dim(n, beta, i0) - 1.0) * y.ln() - beta * y * y / (2.0 * r);
    }
    Ok(s)
}

/// Log transition density of the β-Laguerre process (product of kernels,
/// Jacobian `sqrt(beta)` per entry).
pub fn laguerre_transition_log_density(
    t: f64,
    from: &BidiagonalMatrix,
    to: &BidiagonalMatrix,
    beta: f64,
    a: f64,
) -> Result<f64> {
    crate::kernels::require_time(t)?;
    let n = to.n();
    check_n_beta(n, beta)?;
    check_a(a)?;
    if from.n() != n {
        return Err(invalid("from", "matrix sizes differ"));
    }
    let sb = beta.sqrt();
    let mut s = 0.0;
    for i0 in 0..n {
        let p = canonical(laguerre_diag_dim(n, beta, a, i0));
        s += sb.ln() + log_bessel_transition_density(t, sb * from.diag[i0], sb * to.diag[i0], &p);
    }
    for i0 in 0..n - 1 {
        let p = canonical(laguerre_superdiag_dim(n, beta, i0));
        s += sb.ln() + log_bessel_transition_density(t, sb * from.superdiag[i0], sb * to.superdiag[i0], &p);
    }
    Ok(s)
}

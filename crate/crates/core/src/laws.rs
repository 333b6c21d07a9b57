//! Closed-form reference laws: eigenvalue joint densities, spectral weight
//! laws, limit laws, the Marchenko–Pastur Stieltjes transform, the
//! orthonormal polynomials of the semicircle and the limiting Jacobi operators.

use crate::error::{domain, invalid, Error, Result};
use crate::kernels::OuParams;
use crate::matproc::JacobiMatrix;
use crate::quad::integrate;
use crate::special::{log_beta, log_gamma};
use crate::spectral::first_moment_power;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use std::f64::consts::{FRAC_PI_2, PI};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const QUAD_TOL: f64 = 1e-14;
/// Largest moment order supported by [`limit_moments`].
pub const MAX_MOMENT: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Hermite,
    Wishart,
}

/// Parameters of an eigenvalue joint density at time `t` (canonical clock).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenJpdfParams {
    pub kind: EnsembleKind,
    pub n: usize,
    pub beta: f64,
    /// Laguerre parameter; ignored for Hermite.
    #[serde(default)]
    pub a: f64,
    pub t: f64,
}

impl EigenJpdfParams {
    pub fn hermite(n: usize, beta: f64, t: f64) -> Result<Self> {
        Self {
            kind: EnsembleKind::Hermite,
            n,
            beta,
            a: 0.0,
            t,
        }
        .validated()
    }

    pub fn wishart(n: usize, beta: f64, a: f64, t: f64) -> Result<Self> {
        Self {
            kind: EnsembleKind::Wishart,
            n,
            beta,
            a,
            t,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("{} must be positive", self.beta)));
        }
        if self.kind == EnsembleKind::Wishart && !(self.a > -1.0 && self.a.is_finite()) {
            return Err(invalid("a", format!("{} must be > -1", self.a)));
        }
        crate::kernels::require_time(self.t)?;
        Ok(self)
    }

    pub fn rho(&self) -> f64 {
        OuParams::CANONICAL.rho(self.t)
    }
}

fn log_abs_vandermonde(lambda: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..lambda.len() {
        for j in i + 1..lambda.len() {
            s += (lambda[i] - lambda[j]).abs().ln();
        }
    }
    s
}

/// `W(t, lambda) = sum lambda_i^2 / (2 rho) - sum_{i<j} log|lambda_i - lambda_j|`.
pub fn hermite_energy(t: f64, lambda: &[f64]) -> f64 {
    let r = OuParams::CANONICAL.rho(t);
    lambda.iter().map(|l| l * l).sum::<f64>() / (2.0 * r) - log_abs_vandermonde(lambda)
}

/// `log C_{n beta}` of the Hermite eigenvalue density.
pub fn hermite_log_constant(n: usize, beta: f64) -> Result<f64> {
    let nf = n as f64;
    let mut c = -nf / 2.0 * LN_2PI + (nf / 2.0 + beta / 4.0 * nf * (nf - 1.0)) * beta.ln();
    let g1 = log_gamma(1.0 + beta / 2.0)?;
    for j in 1..=n {
        c += g1 - log_gamma(1.0 + j as f64 * beta / 2.0)?;
    }
    Ok(c)
}

/// Log joint density of the unordered eigenvalues of `J_beta(t)`.
pub fn hermite_eigen_log_jpdf(lambda: &[f64], params: &EigenJpdfParams) -> Result<f64> {
    let p = params.validated()?;
    if lambda.len() != p.n {
        return Err(invalid("lambda", format!("expected {} eigenvalues", p.n)));
    }
    let (n, beta, r) = (p.n as f64, p.beta, p.rho());
    let v = log_abs_vandermonde(lambda);
    if v == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(hermite_log_constant(p.n, beta)? - (n / 2.0 + beta / 4.0 * n * (n - 1.0)) * r.ln()
        - beta * hermite_energy(p.t, lambda))
}

/// Which algebraic form of the Wishart eigenvalue density to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WishartJpdfForm {
    /// Image of the bidiagonal entry density under `J = L^T L`: exponent
    /// linear in `lambda`, constant `(beta / 2 rho)^{beta n (a + n) / 2}`.
    #[default]
    PushForward,
    /// The textbook expression with `lambda_i^2` in the exponent and the
    /// halved power of `beta / 2` and `rho`. Not a normalized density; kept
    /// for comparison only.
    Verbatim,
}

/// Log joint density of the unordered eigenvalues of `J_{beta,a}(t)`.
pub fn wishart_eigen_log_jpdf(lambda: &[f64], params: &EigenJpdfParams) -> Result<f64> {
    wishart_eigen_log_jpdf_with(lambda, params, WishartJpdfForm::PushForward)
}

pub fn wishart_eigen_log_jpdf_with(lambda: &[f64], params: &EigenJpdfParams, form: WishartJpdfForm) -> Result<f64> {
    let p = params.validated()?;
    if lambda.len() != p.n {
        return Err(invalid("lambda", format!("expected {} eigenvalues", p.n)));
    }
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return Ok(f64::NEG_INFINITY);
    }
    let v = log_abs_vandermonde(lambda);
    if v == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let (n, beta, a, r) = (p.n as f64, p.beta, p.a, p.rho());
    let g1 = log_gamma(1.0 + beta / 2.0)?;
    let mut log_c = 0.0;
    for j in 1..=p.n {
        let jf = j as f64;
        log_c += g1 - log_gamma(1.0 + jf * beta / 2.0)? - log_gamma((a + jf) * beta / 2.0)?;
    }
    let sum_log: f64 = lambda.iter().map(|l| l.ln()).sum();
    let body = beta * v + (beta / 2.0 * (a + 1.0) - 1.0) * sum_log;
    Ok(match form {
        WishartJpdfForm::PushForward => {
            let expo = beta * n * (a + n) / 2.0;
            log_c + expo * (beta / (2.0 * r)).ln() + body - beta / (2.0 * r) * lambda.iter().sum::<f64>()
        }
        WishartJpdfForm::Verbatim => {
            let expo = beta / 4.0 * a * n + beta / 4.0 * n * n;
            log_c + expo * (beta / 2.0).ln() - expo * r.ln() + body
                - beta / (2.0 * r) * lambda.iter().map(|l| l * l).sum::<f64>()
        }
    })
}

/// Which spectral weights a [`weight_distribution`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Hermite,
    Wishart,
    /// Positive-atom weights of the Golub–Kahan symmetrized measure.
    Symmetrized,
}

/// Distribution of spectral weights or of their partial sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw {
    /// Law of the full weight vector on the simplex.
    Dirichlet { alpha: Vec<f64> },
    Beta { a: f64, b: f64 },
    /// `Y / 2` with `Y ~ Beta(a, b)`, supported on `[0, 1/2]`.
    GeneralizedBetaHalf { a: f64, b: f64 },
    /// Degenerate law, e.g. the sum of all `n` weights.
    PointMass { at: f64 },
}

/// Law of `sum_{j <= k} mu_j` for an `n x n` ensemble.
pub fn weight_distribution(kind: WeightKind, n: usize, beta: f64, k: usize) -> Result<WeightLaw> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("{beta} must be positive")));
    }
    if k == 0 || k > n {
        return Err(invalid("k", format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let scale = if kind == WeightKind::Symmetrized { 0.5 } else { 1.0 };
    if k == n {
        return Ok(WeightLaw::PointMass { at: scale });
    }
    let a = k as f64 * beta / 2.0;
    let b = (n - k) as f64 * beta / 2.0;
    Ok(match kind {
        WeightKind::Symmetrized => WeightLaw::GeneralizedBetaHalf { a, b },
        _ => WeightLaw::Beta { a, b },
    })
}

/// Dirichlet law of the full weight vector.
pub fn weight_vector_law(n: usize, beta: f64) -> Result<WeightLaw> {
    if n == 0 || !(beta > 0.0) {
        return Err(invalid("beta", "need n >= 1 and beta > 0"));
    }
    Ok(WeightLaw::Dirichlet {
        alpha: vec![beta / 2.0; n],
    })
}

impl WeightLaw {
    fn scalar(&self) -> Result<(f64, f64, f64)> {
        match *self {
            WeightLaw::Beta { a, b } => Ok((a, b, 1.0)),
            WeightLaw::GeneralizedBetaHalf { a, b } => Ok((a, b, 0.5)),
            _ => Err(invalid("law", "not a scalar Beta-type law")),
        }
    }

    /// Density of a scalar law (zero outside the support).
    pub fn pdf(&self, x: f64) -> Result<f64> {
        let (a, b, s) = self.scalar()?;
        let y = x / s;
        if !(y > 0.0 && y < 1.0) {
            return Ok(0.0);
        }
        let lp = (a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - log_beta(a, b)?;
        Ok(lp.exp() / s)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if let WeightLaw::PointMass { at } = *self {
            return Ok(if x >= at { 1.0 } else { 0.0 });
        }
        let (a, b, s) = self.scalar()?;
        let y = x / s;
        Ok(if y <= 0.0 {
            0.0
        } else if y >= 1.0 {
            1.0
        } else {
            beta_reg(a, b, y)
        })
    }

    /// `E[X^r]`; for Beta this is `Gamma(a + r) Gamma(a + b) / (Gamma(a) Gamma(a + b + r))`.
    pub fn raw_moment(&self, r: u32) -> Result<f64> {
        if let WeightLaw::PointMass { at } = *self {
            return Ok(at.powi(r as i32));
        }
        let (a, b, s) = self.scalar()?;
        // the Gamma ratio telescopes to a finite product for integer r
        let m: f64 = (0..r).map(|i| (a + i as f64) / (a + b + i as f64)).product();
        Ok(s.powi(r as i32) * m)
    }

    pub fn mean(&self) -> Result<f64> {
        self.raw_moment(1)
    }

    pub fn variance(&self) -> Result<f64> {
        if let WeightLaw::PointMass { .. } = self {
            return Ok(0.0);
        }
        let (a, b, s) = self.scalar()?;
        Ok(s * s * a * b / ((a + b).powi(2) * (a + b + 1.0)))
    }

    /// Fourth central moment in closed form.
    pub fn central_moment4(&self) -> Result<f64> {
        if let WeightLaw::PointMass { .. } = self {
            return Ok(0.0);
        }
        let (a, b, sc) = self.scalar()?;
        let s = a + b;
        let m4 = 3.0 * a * b * (a * b * (s + 2.0) + 2.0 * (b - a).powi(2))
            / (s.powi(4) * (s + 1.0) * (s + 2.0) * (s + 3.0));
        Ok(sc.powi(4) * m4)
    }

    /// Upper end of the support.
    pub fn upper(&self) -> f64 {
        match *self {
            WeightLaw::GeneralizedBetaHalf { .. } => 0.5,
            WeightLaw::PointMass { at } => at,
            _ => 1.0,
        }
    }

    /// Dirichlet log density of the first `n - 1` coordinates of a point on the simplex.
    pub fn dirichlet_log_pdf(&self, w: &[f64]) -> Result<f64> {
        let WeightLaw::Dirichlet { alpha } = self else {
            return Err(invalid("law", "not a Dirichlet law"));
        };
        if w.len() != alpha.len() {
            return Err(invalid("w", "dimension mismatch"));
        }
        if w.iter().any(|&x| !(x > 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Ok(f64::NEG_INFINITY);
        }
        let mut l = log_gamma(alpha.iter().sum())?;
        for (&x, &al) in w.iter().zip(alpha) {
            l += (al - 1.0) * x.ln() - log_gamma(al)?;
        }
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    /// `sqrt(2 rho - x^2) / (pi rho)` on `[-sqrt(2 rho), sqrt(2 rho)]`
    Semicircle,
    /// `sqrt((4 rho - x) / x) / (2 pi rho)` on `(0, 4 rho)`
    Mp,
    /// `sqrt(4 rho - x^2) / (pi rho)` on `[0, 2 sqrt(rho)]`
    Quarter,
    /// `sqrt(4 rho - x^2) / (2 pi rho)` on `[-2 sqrt(rho), 2 sqrt(rho)]`
    Symmetrized,
}

/// A limit law with its clock value `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub kind: LimitKind,
    pub rho: f64,
}

impl LimitLaw {
    pub fn new(kind: LimitKind, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid("rho", format!("{rho} must be positive")));
        }
        Ok(Self { kind, rho })
    }

    /// Law at time `t` on the canonical clock.
    pub fn at_time(kind: LimitKind, t: f64) -> Result<Self> {
        Self::new(kind, OuParams::CANONICAL.rho(t))
    }

    pub fn support(&self) -> (f64, f64) {
        let r = self.rho;
        match self.kind {
            LimitKind::Semicircle => (-(2.0 * r).sqrt(), (2.0 * r).sqrt()),
            LimitKind::Mp => (0.0, 4.0 * r),
            LimitKind::Quarter => (0.0, 2.0 * r.sqrt()),
            LimitKind::Symmetrized => (-2.0 * r.sqrt(), 2.0 * r.sqrt()),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let r = self.rho;
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return if self.kind == LimitKind::Quarter && x == 0.0 {
                2.0 / (PI * r.sqrt())
            } else {
                0.0
            };
        }
        match self.kind {
            LimitKind::Semicircle => (2.0 * r - x * x).sqrt() / (PI * r),
            LimitKind::Mp => ((4.0 * r - x) / x).sqrt() / (2.0 * PI * r),
            LimitKind::Quarter => (4.0 * r - x * x).sqrt() / (PI * r),
            LimitKind::Symmetrized => (4.0 * r - x * x).sqrt() / (2.0 * PI * r),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let circ = |x: f64, rad: f64| (x * (rad * rad - x * x).sqrt() + rad * rad * (x / rad).asin()) / (PI * rad * rad);
        match self.kind {
            LimitKind::Semicircle | LimitKind::Symmetrized => 0.5 + circ(x, hi),
            LimitKind::Quarter => 2.0 * circ(x, hi),
            LimitKind::Mp => {
                let phi = (x / (4.0 * self.rho)).sqrt().asin();
                (2.0 / PI) * (phi + phi.sin() * phi.cos())
            }
        }
    }

    /// Inverse CDF by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain("quantile", format!("probability {p} outside [0, 1]")));
        }
        let (mut lo, mut hi) = self.support();
        if p == 0.0 {
            return Ok(lo);
        }
        if p == 1.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `int f dmu`, through the substitution that makes the density smooth:
    /// `x = R cos(theta)` for the circular laws, `x = 4 rho sin^2(phi)` for MP.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        let (_, hi) = self.support();
        match self.kind {
            LimitKind::Semicircle | LimitKind::Symmetrized => {
                integrate(|th: f64| f(hi * th.cos()) * (2.0 / PI) * th.sin().powi(2), 0.0, PI, tol)
            }
            LimitKind::Quarter => {
                integrate(|th: f64| f(hi * th.cos()) * (4.0 / PI) * th.sin().powi(2), 0.0, FRAC_PI_2, tol)
            }
            LimitKind::Mp => integrate(
                |ph: f64| f(hi * ph.sin().powi(2)) * (4.0 / PI) * ph.cos().powi(2),
                0.0,
                FRAC_PI_2,
                tol,
            ),
        }
    }

    /// `k`-th moment by quadrature of the density.
    pub fn quadrature_moment(&self, k: u32) -> Result<f64> {
        let scale = self.support().1.powi(k as i32).max(1.0);
        self.expect(|x| x.powi(k as i32), QUAD_TOL * scale)
    }

    /// `k`-th moment as `(e_1, J^k e_1)` of a truncated limiting operator.
    /// `None` for odd moments of the quarter-circle law, which are not
    /// moments of either operator.
    pub fn operator_moment(&self, k: u32) -> Option<f64> {
        let m = k as usize + 2;
        match self.kind {
            LimitKind::Semicircle => Some(first_moment_power(&limiting_operator(EnsembleKind::Hermite, self.rho, m), k)),
            LimitKind::Symmetrized => Some(first_moment_power(
                &limiting_operator(EnsembleKind::Hermite, 2.0 * self.rho, m),
                k,
            )),
            LimitKind::Mp => Some(first_moment_power(&limiting_operator(EnsembleKind::Wishart, self.rho, m), k)),
            LimitKind::Quarter => k.is_multiple_of(2).then(|| {
                first_moment_power(&limiting_operator(EnsembleKind::Wishart, self.rho, m), k / 2)
            }),
        }
    }

    /// Atoms at the `(i - 1/2) / m` quantiles, each of mass `1 / m`.
    pub fn quantile_grid(&self, m: usize) -> Result<Vec<f64>> {
        (0..m).map(|i| self.quantile((i as f64 + 0.5) / m as f64)).collect()
    }
}

/// Agreement required between the two moment routes, relative to `max(1, |m_k|)`.
pub const MOMENT_AGREEMENT: f64 = 1e-9;

/// `k`-th moment of a limit law. Computed by quadrature and, where an
/// operator route exists, cross-checked against `(e_1, J^k e_1)`.
pub fn limit_moments(law: &LimitLaw, k: u32) -> Result<f64> {
    if k > MAX_MOMENT {
        return Err(invalid("k", format!("moment order {k} above {MAX_MOMENT}")));
    }
    let q = law.quadrature_moment(k)?;
    if let Some(op) = law.operator_moment(k) {
        if (q - op).abs() > MOMENT_AGREEMENT * op.abs().max(1.0) {
            return Err(Error::MeasureMismatch(format!(
                "moment {k} of {:?}: quadrature {q:e} vs operator {op:e}",
                law.kind
            )));
        }
    }
    Ok(q)
}

/// Density of a limit law at `x`.
pub fn limit_density(law: &LimitLaw, x: f64) -> f64 {
    law.density(x)
}

/// Truncated limiting Jacobi operator of size `m`.
pub fn limiting_operator(kind: EnsembleKind, rho: f64, m: usize) -> JacobiMatrix {
    let m = m.max(1);
    match kind {
        EnsembleKind::Hermite => JacobiMatrix {
            diag: vec![0.0; m],
            offdiag: vec![(rho / 2.0).sqrt(); m - 1],
        },
        EnsembleKind::Wishart => {
            let mut diag = vec![2.0 * rho; m];
            diag[0] = rho;
            JacobiMatrix {
                diag,
                offdiag: vec![rho; m - 1],
            }
        }
    }
}

fn check_off_cut(z: Complex64, rho: f64) -> Result<()> {
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("{rho} must be positive")));
    }
    if z.im == 0.0 && z.re >= 0.0 && z.re <= 4.0 * rho {
        return Err(Error::BranchCut {
            re: z.re,
            im: z.im,
            edge: 4.0 * rho,
        });
    }
    Ok(())
}

/// `sqrt(z) sqrt(z - 4 rho)` with principal roots: the branch of
/// `sqrt((z - 2 rho)^2 - 4 rho^2)` that is positive for real `z > 4 rho`.
fn mp_root(z: Complex64, rho: f64) -> Complex64 {
    z.sqrt() * (z - 4.0 * rho).sqrt()
}

/// Tail function `F(z) = (z - 2 rho - sqrt(z) sqrt(z - 4 rho)) / 2`, the
/// solution of `F = rho^2 / (z - 2 rho - F)` that vanishes at infinity.
pub fn mp_tail(z: Complex64, rho: f64) -> Result<Complex64> {
    check_off_cut(z, rho)?;
    Ok((z - 2.0 * rho - mp_root(z, rho)) / 2.0)
}

/// Stieltjes transform `int dmu(x) / (z - x)` of the MP law in closed form.
pub fn stieltjes_mp(z: Complex64, rho: f64) -> Result<Complex64> {
    check_off_cut(z, rho)?;
    Ok(1.0 / (z / 2.0 + mp_root(z, rho) / 2.0))
}

/// Levels used by [`stieltjes_mp_continued_fraction`].
pub const CF_LEVELS: usize = 200;

/// The same transform from the continued fraction of the limiting Wishart
/// operator, evaluated by backward recurrence over `levels` levels.
pub fn stieltjes_mp_continued_fraction(z: Complex64, rho: f64, levels: usize) -> Result<Complex64> {
    check_off_cut(z, rho)?;
    let mut f = Complex64::new(0.0, 0.0);
    for _ in 0..levels {
        f = rho * rho / (z - 2.0 * rho - f);
    }
    Ok(1.0 / (z - rho - f))
}

/// Orthonormal polynomial `P_n(x) = sin(n theta) / sin(theta)` for the
/// semicircle at time `t`, with `x = sqrt(2 rho(t)) cos(theta)`; `n >= 1`.
pub fn chebyshev_polys(n: usize, t: f64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "polynomials are indexed from 1"));
    }
    let r = OuParams::CANONICAL.rho(t);
    let rad = (2.0 * r).sqrt();
    if !(x.abs() <= rad) {
        return Err(domain("chebyshev_polys", format!("|x| = {} exceeds {rad}", x.abs())));
    }
    // U_{n-1}(y) by the three-term recurrence: exact at the endpoints
    let y = x / rad;
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 1..n {
        let next = 2.0 * y * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::log_chi_density;
    use approx::assert_relative_eq;

    const RHOS: [f64; 3] = [1.0, 0.632_120_558_828_557_7, 0.2];

    #[test]
    fn hermite_jpdf_n1_is_gaussian() {
        for &t in &[0.3, 1.0, 5.0] {
            for &beta in &[1.0, 2.0, 3.3] {
                let p = EigenJpdfParams::hermite(1, beta, t).unwrap();
                let r = p.rho();
                let x = 0.7;
                let g = -0.5 * (2.0 * PI * r / beta).ln() - beta * x * x / (2.0 * r);
                assert_relative_eq!(hermite_eigen_log_jpdf(&[x], &p).unwrap(), g, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn hermite_jpdf_normalizes_n2() {
        let p = EigenJpdfParams::hermite(2, 2.0, 1.0).unwrap();
        let s = (p.rho() / 2.0).sqrt();
        let lim = 12.0 * s;
        let mass = integrate(
            |x| {
                crate::quad::integrate_pieces(
                    |y| hermite_eigen_log_jpdf(&[x, y], &p).unwrap().exp(),
                    &[-lim, x, lim],
                    1e-10,
                )
                .unwrap()
            },
            -lim,
            lim,
            1e-9,
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }

    #[test]
    fn hermite_jpdf_coincident_and_scaling() {
        let p = EigenJpdfParams::hermite(3, 1.5, 2.0).unwrap();
        assert_eq!(hermite_eigen_log_jpdf(&[0.1, 0.1, 0.3], &p).unwrap(), f64::NEG_INFINITY);
        // P(t, lambda) = rho^{-n/2} P(inf, lambda / sqrt(rho))
        let lam = [0.9, -0.2, 0.4];
        let r = p.rho();
        let inf = EigenJpdfParams::hermite(3, 1.5, 60.0).unwrap();
        let scaled: Vec<f64> = lam.iter().map(|l| l / r.sqrt()).collect();
        let lhs = hermite_eigen_log_jpdf(&lam, &p).unwrap();
        let rhs = hermite_eigen_log_jpdf(&scaled, &inf).unwrap() - 1.5 * r.ln();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        assert!(EigenJpdfParams::hermite(3, 1.0, 0.0).is_err());
    }

    #[test]
    fn wishart_jpdf_n1_push_forward() {
        for &(beta, a, t) in &[(1.0, 0.0, 1.0), (2.0, 0.5, 0.4), (4.0, 2.0, 3.0)] {
            let p = EigenJpdfParams::wishart(1, beta, a, t).unwrap();
            let r = p.rho();
            for &lam in &[0.05, 0.6, 2.3] {
                let x: f64 = f64::sqrt(lam);
                // density of x = chi, Jacobian d lambda = 2 x dx
                let expect = log_chi_density(x, (a + 1.0) * beta, r / beta) - (2.0 * x).ln();
                assert_relative_eq!(wishart_eigen_log_jpdf(&[lam], &p).unwrap(), expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn wishart_jpdf_normalizes_n2() {
        let p = EigenJpdfParams::wishart(2, 1.0, 0.0, 1.0).unwrap();
        let hi = 40.0 * p.rho();
        let mass = integrate(
            |x| {
                crate::quad::integrate_pieces(
                    |y| wishart_eigen_log_jpdf(&[x, y], &p).unwrap().exp(),
                    &[0.0, x, hi],
                    1e-10,
                )
                .unwrap()
            },
            0.0,
            hi,
            1e-9,
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
        // the verbatim form is not normalized
        let v = integrate(
            |x| {
                crate::quad::integrate_pieces(
                    |y| wishart_eigen_log_jpdf_with(&[x, y], &p, WishartJpdfForm::Verbatim).unwrap().exp(),
                    &[0.0, x, hi],
                    1e-10,
                )
                .unwrap()
            },
            0.0,
            hi,
            1e-9,
        )
        .unwrap();
        assert!((v - 1.0).abs() > 1e-2, "{v}");
        assert_eq!(wishart_eigen_log_jpdf(&[-1.0, 1.0], &p).unwrap(), f64::NEG_INFINITY);
        assert!(EigenJpdfParams::wishart(2, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn weight_law_examples() {
        let u = weight_distribution(WeightKind::Hermite, 2, 2.0, 1).unwrap();
        assert_eq!(u, WeightLaw::Beta { a: 1.0, b: 1.0 });
        for &x in &[0.1, 0.5, 0.9] {
            assert_relative_eq!(u.pdf(x).unwrap(), 1.0, max_relative = 1e-13);
            assert_relative_eq!(u.cdf(x).unwrap(), x, max_relative = 1e-13);
        }
        for &(n, k, beta) in &[(3, 1, 2.0), (6, 3, 1.0), (10, 7, 4.0)] {
            let w = weight_distribution(WeightKind::Wishart, n, beta, k).unwrap();
            assert_relative_eq!(w.mean().unwrap(), k as f64 / n as f64, max_relative = 1e-13);
            let s = weight_distribution(WeightKind::Symmetrized, n, beta, k).unwrap();
            assert_relative_eq!(s.mean().unwrap(), k as f64 / (2 * n) as f64, max_relative = 1e-13);
            assert_eq!(s.cdf(0.5).unwrap(), 1.0);
            assert_eq!(s.pdf(0.6).unwrap(), 0.0);
        }
        assert_eq!(
            weight_distribution(WeightKind::Hermite, 4, 1.0, 4).unwrap(),
            WeightLaw::PointMass { at: 1.0 }
        );
        assert!(weight_distribution(WeightKind::Hermite, 4, 1.0, 0).is_err());
        assert!(weight_distribution(WeightKind::Hermite, 4, 1.0, 5).is_err());
    }

    #[test]
    fn weight_cdf_matches_pdf_quadrature() {
        let w = weight_distribution(WeightKind::Symmetrized, 6, 2.5, 2).unwrap();
        for &x in &[0.05, 0.2, 0.33, 0.49] {
            let q = integrate(|y| w.pdf(y).unwrap(), 0.0, x, 1e-12).unwrap();
            assert!((q - w.cdf(x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fourth_central_moment_two_ways() {
        for &(n, k, beta) in &[(3usize, 1usize, 2.0), (8, 3, 1.0), (256, 100, 2.0), (5, 4, 0.5)] {
            let w = weight_distribution(WeightKind::Hermite, n, beta, k).unwrap();
            let m: Vec<f64> = (1..=4).map(|r| w.raw_moment(r).unwrap()).collect();
            let via_raw = m[3] - 4.0 * m[0] * m[2] + 6.0 * m[0] * m[0] * m[1] - 3.0 * m[0].powi(4);
            let closed = w.central_moment4().unwrap();
            assert!((via_raw - closed).abs() < 1e-9 * closed.max(1e-12), "{via_raw} {closed}");
            // O(k (n - k) / n^4) with a constant independent of n
            let kk = k as f64;
            let nn = n as f64;
            assert!(closed <= 12.0 / (beta * beta) * kk * (nn - kk) / nn.powi(4) * 4.0);
        }
    }

    #[test]
    fn dirichlet_density() {
        let d = weight_vector_law(2, 2.0).unwrap();
        // Dir(1, 1) is uniform on the 1-simplex
        assert_relative_eq!(d.dirichlet_log_pdf(&[0.3, 0.7]).unwrap(), 0.0, epsilon = 1e-14);
        assert_eq!(d.dirichlet_log_pdf(&[0.3, 0.6]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn limit_density_examples() {
        for &r in &RHOS {
            let sc = LimitLaw::new(LimitKind::Semicircle, r).unwrap();
            assert_relative_eq!(sc.density(0.0), (2.0 * r).sqrt() / (PI * r), max_relative = 1e-15);
            let q = LimitLaw::new(LimitKind::Quarter, r).unwrap();
            assert_relative_eq!(q.quadrature_moment(1).unwrap(), 8.0 * r.sqrt() / (3.0 * PI), max_relative = 1e-12);
            for x in [-3.0, 5.0 * r + 1.0] {
                assert_eq!(sc.density(x), 0.0);
            }
        }
        assert!(LimitLaw::new(LimitKind::Mp, 0.0).is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        for &r in &RHOS {
            for kind in [LimitKind::Semicircle, LimitKind::Mp, LimitKind::Quarter, LimitKind::Symmetrized] {
                let law = LimitLaw::new(kind, r).unwrap();
                let (lo, hi) = law.support();
                let mass = if kind == LimitKind::Mp {
                    // x = u^2 removes the hard-edge singularity
                    integrate(|u| law.density(u * u) * 2.0 * u, 0.0, hi.sqrt(), 1e-11).unwrap()
                } else {
                    integrate(|x| law.density(x), lo, hi, 1e-11).unwrap()
                };
                assert!((mass - 1.0).abs() < 1e-8, "{kind:?} {r}: {mass}");
            }
        }
    }

    #[test]
    fn cdf_and_quantile() {
        for &r in &RHOS {
            for kind in [LimitKind::Semicircle, LimitKind::Mp, LimitKind::Quarter, LimitKind::Symmetrized] {
                let law = LimitLaw::new(kind, r).unwrap();
                let (lo, hi) = law.support();
                for i in 1..10 {
                    let x = lo + (hi - lo) * i as f64 / 10.0;
                    let q = if kind == LimitKind::Mp {
                        integrate(|u| law.density(u * u) * 2.0 * u, 0.0, x.sqrt(), 1e-13).unwrap()
                    } else {
                        integrate(|y| law.density(y), lo, x, 1e-13).unwrap()
                    };
                    assert!((q - law.cdf(x)).abs() < 1e-10, "{kind:?}");
                    let p = law.cdf(x);
                    assert!((law.quantile(p).unwrap() - x).abs() < 1e-10 * (hi - lo));
                }
            }
        }
    }

    #[test]
    fn moment_routes_agree() {
        for &r in &RHOS {
            for kind in [LimitKind::Semicircle, LimitKind::Mp, LimitKind::Symmetrized, LimitKind::Quarter] {
                let law = LimitLaw::new(kind, r).unwrap();
                for k in 0..=10 {
                    let m = limit_moments(&law, k).unwrap();
                    if k == 0 {
                        assert_relative_eq!(m, 1.0, max_relative = 1e-13);
                    }
                }
            }
            let sc = LimitLaw::new(LimitKind::Semicircle, r).unwrap();
            assert_relative_eq!(limit_moments(&sc, 2).unwrap(), r / 2.0, max_relative = 1e-12);
            assert_relative_eq!(limit_moments(&sc, 4).unwrap(), r * r / 2.0, max_relative = 1e-12);
            for k in [1, 3, 5] {
                assert!(limit_moments(&sc, k).unwrap().abs() < 1e-14);
            }
            let mp = LimitLaw::new(LimitKind::Mp, r).unwrap();
            assert_relative_eq!(limit_moments(&mp, 1).unwrap(), r, max_relative = 1e-12);
            assert_relative_eq!(limit_moments(&mp, 2).unwrap(), 2.0 * r * r, max_relative = 1e-12);
        }
        let sc = LimitLaw::new(LimitKind::Semicircle, 1.0).unwrap();
        assert!(limit_moments(&sc, 21).is_err());
        assert_relative_eq!(limit_moments(&sc, 20).unwrap(), 16796.0 / 1024.0, max_relative = 1e-10);
    }

    #[test]
    fn symmetrized_and_quarter_identities() {
        for &r in &RHOS {
            let sym = LimitLaw::new(LimitKind::Symmetrized, r).unwrap();
            let sc2 = LimitLaw::new(LimitKind::Semicircle, 2.0 * r).unwrap();
            let q = LimitLaw::new(LimitKind::Quarter, r).unwrap();
            for i in 0..50 {
                let x = -2.1 * r.sqrt() + 4.2 * r.sqrt() * i as f64 / 49.0;
                assert_relative_eq!(sym.density(x), sc2.density(x), max_relative = 1e-14);
                if x > 0.0 {
                    assert_relative_eq!(q.density(x), 2.0 * sym.density(x), max_relative = 1e-14);
                }
            }
        }
    }

    #[test]
    fn limiting_operator_examples() {
        let r = 0.7;
        let h = limiting_operator(EnsembleKind::Hermite, r, 2);
        let eig = crate::spectral::eigen_tridiagonal(&h).unwrap();
        assert_relative_eq!(eig.values[0], (r / 2.0).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(eig.values[1], -(r / 2.0).sqrt(), max_relative = 1e-14);
        let w = limiting_operator(EnsembleKind::Wishart, r, 1);
        assert_eq!(w.diag, vec![r]);
        assert!(w.offdiag.is_empty());
        let w = limiting_operator(EnsembleKind::Wishart, r, 4);
        assert_eq!(w.diag, vec![r, 2.0 * r, 2.0 * r, 2.0 * r]);
    }

    #[test]
    fn stieltjes_real_points_match_quadrature() {
        for &r in &RHOS {
            let law = LimitLaw::new(LimitKind::Mp, r).unwrap();
            for &z in &[4.5 * r, 6.0 * r, 10.0 * r, 40.0 * r, -2.0 * r] {
                let q = law.expect(|x| 1.0 / (z - x), 1e-14).unwrap();
                let s = stieltjes_mp(Complex64::new(z, 0.0), r).unwrap();
                assert!((s.re - q).abs() < 1e-8, "{z}: {} vs {q}", s.re);
                assert_eq!(s.im, 0.0);
                let cf = stieltjes_mp_continued_fraction(Complex64::new(z, 0.0), r, CF_LEVELS).unwrap();
                assert!((cf - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn stieltjes_asymptotics_and_fixed_point() {
        let r = 0.8;
        let z = Complex64::new(1e9, 0.0);
        assert!((z * stieltjes_mp(z, r).unwrap() - 1.0).norm() < 1e-8);
        for z in [Complex64::new(5.0, 0.0), Complex64::new(1.0, 0.5), Complex64::new(-3.0, -2.0)] {
            let f = mp_tail(z, r).unwrap();
            assert!((f - r * r / (z - 2.0 * r - f)).norm() < 1e-12);
            let cf = stieltjes_mp_continued_fraction(z, r, CF_LEVELS).unwrap();
            assert!((cf - stieltjes_mp(z, r).unwrap()).norm() < 1e-10);
        }
        assert!(matches!(stieltjes_mp(Complex64::new(1.0, 0.0), r), Err(Error::BranchCut { .. })));
        assert!(stieltjes_mp(Complex64::new(0.0, 0.0), r).is_err());
    }

    #[test]
    fn stieltjes_inversion_recovers_density() {
        let r = 1.0;
        let law = LimitLaw::new(LimitKind::Mp, r).unwrap();
        for &x in &[0.3, 1.0, 2.0, 3.5] {
            let q = stieltjes_mp(Complex64::new(x, 1e-6), r).unwrap();
            let p = -q.im / PI;
            assert!((p - law.density(x)).abs() < 1e-4, "{x}: {p} vs {}", law.density(x));
        }
    }

    #[test]
    fn chebyshev_examples_and_orthonormality() {
        let t = 1.0;
        let r = OuParams::CANONICAL.rho(t);
        let rad = (2.0 * r).sqrt();
        assert_eq!(chebyshev_polys(1, t, 0.0).unwrap(), 1.0);
        assert_relative_eq!(chebyshev_polys(2, t, rad).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(chebyshev_polys(5, t, rad).unwrap(), 5.0, max_relative = 1e-15);
        assert!(chebyshev_polys(2, t, rad * 1.01).is_err());
        let th: f64 = 0.77;
        assert_relative_eq!(
            chebyshev_polys(4, t, rad * th.cos()).unwrap(),
            (4.0 * th).sin() / th.sin(),
            max_relative = 1e-12
        );
        let law = LimitLaw::new(LimitKind::Semicircle, r).unwrap();
        for m in 1..=5 {
            for n in 1..=5 {
                let v = integrate(
                    |x| chebyshev_polys(m, t, x).unwrap() * chebyshev_polys(n, t, x).unwrap() * law.density(x),
                    -rad,
                    rad,
                    1e-11,
                )
                .unwrap();
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-8, "{m} {n}: {v}");
            }
        }
    }

    #[test]
    fn descriptors_round_trip_json() {
        let law = LimitLaw::new(LimitKind::Quarter, 0.5).unwrap();
        let s = serde_json::to_string(&law).unwrap();
        assert_eq!(s, r#"{"kind":"quarter","rho":0.5}"#);
        assert_eq!(serde_json::from_str::<LimitLaw>(&s).unwrap(), law);
        let w = WeightLaw::GeneralizedBetaHalf { a: 1.0, b: 2.0 };
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(serde_json::from_str::<WeightLaw>(&s).unwrap(), w);
    }
}

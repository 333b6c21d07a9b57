//! One-dimensional building blocks: the Ornstein–Uhlenbeck process and the
//! generalized Bessel process (a deterministic time change of a Bessel
//! process of real dimension `dim`).
//!
//! Both are sampled exactly from their transition kernels, so paths on any
//! time grid carry no discretization error. The squared Bessel kernel is a
//! scaled noncentral chi-square, drawn as a Poisson mixture of gammas. For
//! `0 < dim < 2` the origin is instantaneously reflecting; the mixture
//! representation already has that boundary behaviour, so there is no
//! boundary handling here.

use crate::error::{invalid, Error, Result};
use crate::quad::integrate;
use crate::special::{laguerre_poly, log_bessel_i, log_gamma};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Poisson means above this switch to the large-noncentrality route.
const POISSON_MEAN_CAP: f64 = 1e12;
const QUAD_TOL: f64 = 1e-10;

/// Mean-reversion rate `a > 0` and noise amplitude `sigma != 0` of
/// `dv = -a v dt + sigma db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub a: f64,
    pub sigma: f64,
}

impl OuParams {
    /// `(a, sigma) = (1/2, 1)`: stationary law N(0, 1), `rho(t) = 1 - e^{-t}`.
    pub const CANONICAL: OuParams = OuParams { a: 0.5, sigma: 1.0 };

    pub fn new(a: f64, sigma: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid("a", format!("{a} must be positive")));
        }
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(invalid("sigma", format!("{sigma} must be nonzero and finite")));
        }
        Ok(Self { a, sigma })
    }

    /// Variance clock `sigma^2 (1 - e^{-2at}) / (2a)`.
    pub fn rho(&self, t: f64) -> f64 {
        -self.sigma * self.sigma / (2.0 * self.a) * (-2.0 * self.a * t).exp_m1()
    }

    pub fn rho_inf(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.a)
    }

    /// Mean decay factor `e^{-a t}`.
    pub fn decay(&self, t: f64) -> f64 {
        (-self.a * t).exp()
    }
}

impl Default for OuParams {
    fn default() -> Self {
        Self::CANONICAL
    }
}

/// Generalized Bessel process of dimension `dim > 0` driven by the clock of
/// an OU process with parameters `clock`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselParams {
    pub dim: f64,
    pub clock: OuParams,
}

impl BesselParams {
    pub fn new(dim: f64, a: f64, sigma: f64) -> Result<Self> {
        if !(dim > 0.0 && dim.is_finite()) {
            return Err(invalid("dim", format!("{dim} must be positive")));
        }
        Ok(Self {
            dim,
            clock: OuParams::new(a, sigma)?,
        })
    }

    pub fn canonical(dim: f64) -> Result<Self> {
        Self::new(dim, 0.5, 1.0)
    }

    fn nu(&self) -> f64 {
        0.5 * self.dim - 1.0
    }
}

/// `rho(t)` for the given OU parameters.
pub fn rho(t: f64, params: &OuParams) -> f64 {
    params.rho(t)
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var)
}

/// Gaussian transition density of the OU process from `x0` to `x` over time `t`.
pub fn ou_transition_density(t: f64, x0: f64, x: f64, params: &OuParams) -> f64 {
    if t.is_infinite() {
        return ou_stationary_density(x, params);
    }
    log_normal_pdf(x, x0 * params.decay(t), params.rho(t)).exp()
}

/// Density of N(0, rho(inf)).
pub fn ou_stationary_density(x: f64, params: &OuParams) -> f64 {
    log_normal_pdf(x, 0.0, params.rho_inf()).exp()
}

/// One exact OU transition: `x0 e^{-a dt} + sqrt(rho(dt)) Z`.
pub fn ou_sample_step<R: Rng + ?Sized>(x0: f64, dt: f64, params: &OuParams, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    x0 * params.decay(dt) + params.rho(dt).sqrt() * z
}

/// Log of the scaled chi density with `dim` degrees of freedom and variance
/// parameter `var`: `2^{1-dim/2} var^{-dim/2} / Gamma(dim/2) x^{dim-1} e^{-x^2/(2 var)}`.
pub fn log_chi_density(x: f64, dim: f64, var: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return if dim < 1.0 {
            f64::INFINITY
        } else if dim == 1.0 {
            (2.0 / (PI * var)).sqrt().ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    let half = 0.5 * dim;
    (1.0 - half) * 2.0_f64.ln() - half * var.ln() - log_gamma(half).expect("dim > 0")
        + (dim - 1.0) * x.ln()
        - x * x / (2.0 * var)
}

/// CDF of the same scaled chi law, through the regularized lower gamma function.
pub fn chi_cdf(x: f64, dim: f64, var: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(0.5 * dim, x * x / (2.0 * var))
}

/// Log transition density of the generalized Bessel process.
pub fn log_bessel_transition_density(t: f64, x0: f64, x: f64, params: &BesselParams) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if t.is_infinite() {
        return log_chi_density(x, params.dim, params.clock.rho_inf());
    }
    let r = params.clock.rho(t);
    let m = x0 * params.clock.decay(t);
    if m == 0.0 {
        return log_chi_density(x, params.dim, r);
    }
    let nu = params.nu();
    if x == 0.0 {
        // small-argument limit of the Bessel factor: density ~ x^{dim-1}
        return if params.dim > 1.0 {
            f64::NEG_INFINITY
        } else if params.dim == 1.0 {
            (2.0 / (PI * r)).sqrt().ln() - m * m / (2.0 * r)
        } else {
            f64::INFINITY
        };
    }
    let z = x * m / r;
    -r.ln() + nu * (x.ln() - m.ln()) + x.ln() - (x * x + m * m) / (2.0 * r)
        + log_bessel_i(nu, z).expect("nu > -1 and z >= 0")
}

/// Transition density of the generalized Bessel process from `x0` to `x`
/// over time `t`; the `x0 = 0` case is the marginal started at the origin.
pub fn bessel_transition_density(t: f64, x0: f64, x: f64, params: &BesselParams) -> f64 {
    log_bessel_transition_density(t, x0, x, params).exp()
}

/// Marginal density at time `t` of the process started at 0.
pub fn bessel_marginal_density(t: f64, x: f64, params: &BesselParams) -> f64 {
    log_chi_density(x, params.dim, params.clock.rho(t)).exp()
}

/// Stationary density: a chi law with `dim` degrees of freedom and variance
/// parameter `rho(inf)`. Under the canonical clock this is the `chi_dim` pdf.
pub fn bessel_stationary_density(x: f64, params: &BesselParams) -> f64 {
    log_chi_density(x, params.dim, params.clock.rho_inf()).exp()
}

/// One exact transition of the generalized Bessel process.
///
/// With `m = x0 e^{-a dt}` and `lambda = m^2 / rho(dt)`, the squared value
/// divided by `rho(dt)` is noncentral chi-square with `dim` degrees of freedom
/// and noncentrality `lambda`; it is drawn as `Gamma(dim/2 + K, 2)` with
/// `K ~ Poisson(lambda / 2)`.
pub fn bessel_sample_step<R: Rng + ?Sized>(x0: f64, dt: f64, params: &BesselParams, rng: &mut R) -> f64 {
    let r = params.clock.rho(dt);
    if r <= 0.0 {
        return x0;
    }
    let m = x0 * params.clock.decay(dt);
    let lambda = m * m / r;
    let half_dim = 0.5 * params.dim;
    let chi2 = if lambda == 0.0 {
        sample_gamma(half_dim, rng)
    } else if 0.5 * lambda <= POISSON_MEAN_CAP {
        let k: f64 = Poisson::new(0.5 * lambda).expect("finite positive mean").sample(rng);
        sample_gamma(half_dim + k, rng)
    } else if params.dim >= 1.0 {
        // chi'^2_dim(lambda) = (Z + sqrt(lambda))^2 + chi^2_{dim-1}
        let z: f64 = StandardNormal.sample(rng);
        let shifted = z + lambda.sqrt();
        let rest = if params.dim > 1.0 {
            sample_gamma(0.5 * (params.dim - 1.0), rng)
        } else {
            0.0
        };
        shifted * shifted + rest
    } else {
        // lambda > 2e12: the normal approximation error is far below sampling noise
        let z: f64 = StandardNormal.sample(rng);
        let mean = params.dim + lambda;
        (mean + (2.0 * (params.dim + 2.0 * lambda)).sqrt() * z).max(0.0)
    };
    (r * chi2).sqrt()
}

/// `Gamma(shape, scale = 2)`.
fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 2.0).expect("positive shape").sample(rng)
}

/// Which normalization of the Laguerre-series arguments to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVariant {
    /// Arguments `x^2 / (2 rho(t))`, as the expansion is usually quoted for
    /// this process.
    Verbatim,
    /// Arguments `x^2 / (2 rho(inf))`: the Sturm–Liouville eigenfunction
    /// expansion about the stationary law.
    Corrected,
}

/// Partial sum of the Laguerre eigenfunction expansion of the Bessel kernel,
/// `p_inf(x) sum_{n<N} c_n e^{-2ant} L_n(u0) L_n(u)` with
/// `c_n = n! Gamma(dim/2) / Gamma(n + dim/2)` (the `n -> 0` limit of
/// `n B(n, dim/2)`, so `c_0 = 1`) and `alpha = dim/2 - 1`.
pub fn bessel_transition_laguerre_series(
    t: f64,
    x0: f64,
    x: f64,
    params: &BesselParams,
    n_terms: usize,
    variant: SeriesVariant,
) -> Result<f64> {
    if n_terms == 0 {
        return Err(invalid("n_terms", "must be at least 1"));
    }
    if !(t > 0.0) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    let scale = match variant {
        SeriesVariant::Verbatim => params.clock.rho(t),
        SeriesVariant::Corrected => params.clock.rho_inf(),
    };
    let alpha = params.nu();
    let u0 = x0 * x0 / (2.0 * scale);
    let u = x * x / (2.0 * scale);
    let lg_half = log_gamma(0.5 * params.dim)?;
    let mut sum = 0.0;
    let mut log_fact = 0.0;
    for n in 0..n_terms {
        let nf = n as f64;
        if n > 0 {
            log_fact += nf.ln();
        }
        let log_c = log_fact + lg_half - log_gamma(nf + 0.5 * params.dim)? - 2.0 * params.clock.a * nf * t;
        sum += log_c.exp() * laguerre_poly(n, alpha, u0) * laguerre_poly(n, alpha, u);
    }
    Ok(bessel_stationary_density(x, params) * sum)
}

/// Process kind for the stationarity integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationarityKind {
    Ou(OuParams),
    Bessel(BesselParams),
}

/// `int p_inf(x0) p_t(x0, x) dx0` by adaptive quadrature. Equals the
/// stationary density at `x` when `p_inf` is invariant for the kernel.
pub fn stationarity_integral_check(t: f64, x: f64, kind: StationarityKind) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    match kind {
        StationarityKind::Ou(p) => {
            let half = 12.0 * p.rho_inf().sqrt() + x.abs();
            integrate(
                |x0| ou_stationary_density(x0, &p) * ou_transition_density(t, x0, x, &p),
                -half,
                half,
                QUAD_TOL,
            )
        }
        StationarityKind::Bessel(p) => {
            let hi = 12.0 * p.clock.rho_inf().sqrt() + x + p.dim.sqrt();
            integrate(
                |x0| bessel_stationary_density(x0, &p) * bessel_transition_density(t, x0, x, &p),
                0.0,
                hi,
                QUAD_TOL,
            )
        }
    }
}

/// Stationary density matching a [`StationarityKind`].
pub fn stationary_density(x: f64, kind: StationarityKind) -> f64 {
    match kind {
        StationarityKind::Ou(p) => ou_stationary_density(x, &p),
        StationarityKind::Bessel(p) => bessel_stationary_density(x, &p),
    }
}

pub(crate) fn require_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name: "t",
            msg: format!("{t} must be positive and finite"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use crate::rng::stream;
    use crate::verify::{ks_one_sample, ks_two_sample};
    use approx::assert_relative_eq;

    const ALPHA: f64 = 0.01;

    #[test]
    fn rho_values() {
        let p = OuParams::CANONICAL;
        assert_eq!(p.rho(0.0), 0.0);
        assert_relative_eq!(p.rho(2.0_f64.ln()), 0.5, max_relative = 1e-15);
        assert_relative_eq!(p.rho(60.0), 1.0, max_relative = 1e-15);
        let q = OuParams::new(2.0, 3.0).unwrap();
        assert_relative_eq!(q.rho(0.25), 9.0 / 4.0 * (1.0 - (-1.0_f64).exp()), max_relative = 1e-15);
        assert!(OuParams::new(0.0, 1.0).is_err());
        assert!(OuParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn ou_density_properties() {
        let p = OuParams::new(0.8, 1.3).unwrap();
        let t = 0.6;
        let r = p.rho(t);
        assert_relative_eq!(ou_transition_density(t, 0.0, 0.0, &p), 1.0 / (2.0 * PI * r).sqrt(), max_relative = 1e-14);
        let half = 12.0 * r.sqrt();
        let mass = integrate(|x| ou_transition_density(t, 0.4, x, &p), 0.4 * p.decay(t) - half, 0.4 * p.decay(t) + half, 1e-12).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
        assert_relative_eq!(
            ou_transition_density(f64::INFINITY, 3.0, 0.7, &p),
            ou_stationary_density(0.7, &p),
            max_relative = 1e-15
        );
        assert_relative_eq!(ou_transition_density(80.0, 3.0, 0.7, &p), ou_stationary_density(0.7, &p), max_relative = 1e-12);
    }

    #[test]
    fn bessel_rayleigh_case() {
        let p = BesselParams::canonical(2.0).unwrap();
        for &t in &[0.3, 1.0, 4.0] {
            let r = p.clock.rho(t);
            for &x in &[0.1, 0.9, 2.2] {
                let rayleigh = x / r * (-x * x / (2.0 * r)).exp();
                assert_relative_eq!(bessel_transition_density(t, 0.0, x, &p), rayleigh, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn bessel_density_normalizes() {
        let p = BesselParams::canonical(2.5).unwrap();
        let (t, x0) = (0.7, 1.3);
        let hi = 12.0 * p.clock.rho(t).sqrt() + x0;
        let mass = integrate(|x| bessel_transition_density(t, x0, x, &p), 0.0, hi, 1e-12).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
        // non-canonical clock and dimension below 2
        let p = BesselParams::new(1.4, 1.7, 0.6).unwrap();
        let hi = 12.0 * p.clock.rho_inf().sqrt() + 2.0;
        let mass = integrate(|x| bessel_transition_density(0.2, 2.0, x, &p), 0.0, hi, 1e-11).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn bessel_density_large_argument_is_stable() {
        let p = BesselParams::canonical(7.0).unwrap();
        let v = bessel_transition_density(1e-3, 40.0, 40.0, &p);
        assert!(v.is_finite() && v > 0.0);
        // approximately Gaussian around the decayed start with variance rho
        let r = p.clock.rho(1e-3);
        let m = 40.0 * p.clock.decay(1e-3);
        let g = log_normal_pdf(m, m, r).exp();
        assert_relative_eq!(bessel_transition_density(1e-3, 40.0, m, &p), g, max_relative = 1e-2);
    }

    #[test]
    fn bessel_stationary_density_values() {
        let p = BesselParams::canonical(2.0).unwrap();
        assert_relative_eq!(bessel_stationary_density(1.3, &p), 1.3 * (-0.845_f64).exp(), max_relative = 1e-14);
        let p1 = BesselParams::canonical(1.0).unwrap();
        assert_relative_eq!(bessel_stationary_density(1e-12, &p1), (2.0 / PI).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(bessel_stationary_density(0.0, &p1), (2.0 / PI).sqrt(), max_relative = 1e-14);
        for &d in &[1.0, 3.3, 9.0] {
            let p = BesselParams::new(d, 0.9, 1.4).unwrap();
            let m = integrate(|x| bessel_stationary_density(x, &p), 0.0, 14.0 * p.clock.rho_inf().sqrt() + d, 1e-12).unwrap();
            assert!((m - 1.0).abs() < 1e-9, "dim={d} mass={m}");
        }
    }

    #[test]
    fn bessel_converges_to_stationary() {
        let p = BesselParams::canonical(3.0).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..=80 {
            let x = 0.05 * i as f64;
            for &x0 in &[0.0, 0.5, 2.0, 4.0] {
                sup = sup.max((bessel_transition_density(20.0, x0, x, &p) - bessel_stationary_density(x, &p)).abs());
            }
        }
        assert!(sup <= 1e-4, "{sup}");
        assert_relative_eq!(
            bessel_transition_density(f64::INFINITY, 1.0, 1.0, &p),
            bessel_stationary_density(1.0, &p),
            max_relative = 1e-15
        );
    }

    #[test]
    fn chi_cdf_matches_quadrature() {
        for &(d, v) in &[(1.0, 0.5), (2.5, 1.0), (7.0, 0.2)] {
            for &x in &[0.1, 0.6, 1.7] {
                let q = integrate(|u| log_chi_density(u, d, v).exp(), 0.0, x, 1e-13).unwrap();
                assert!((q - chi_cdf(x, d, v)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ou_sampler_matches_gaussian() {
        let p = OuParams::new(1.5, 0.7).unwrap();
        let dt = 0.4;
        let mut rng = stream(11, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| ou_sample_step(0.0, dt, &p, &mut rng)).collect();
        let r = p.rho(dt);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(mean.abs() < 4.0 * (r / 1e4).sqrt());
        assert!((var / r - 1.0).abs() < 0.05);
        let normal = statrs::distribution::Normal::new(0.0, r.sqrt()).unwrap();
        let ks = ks_one_sample(&xs, |x| statrs::distribution::ContinuousCDF::cdf(&normal, x));
        assert!(ks.p_value > ALPHA, "{ks:?}");
    }

    #[test]
    fn ou_sampler_is_deterministic_and_continuous_at_zero() {
        let p = OuParams::CANONICAL;
        let a: Vec<f64> = {
            let mut r = stream(5, 2);
            (0..20).map(|_| ou_sample_step(1.0, 0.1, &p, &mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = stream(5, 2);
            (0..20).map(|_| ou_sample_step(1.0, 0.1, &p, &mut r)).collect()
        };
        assert_eq!(a, b);
        let mut r = stream(5, 3);
        let x = ou_sample_step(3.0, 1e-16, &p, &mut r);
        assert!((x - 3.0).abs() < 1e-6);
    }

    #[test]
    fn ou_chapman_kolmogorov() {
        let p = OuParams::CANONICAL;
        let mut r1 = stream(21, 0);
        let mut r2 = stream(21, 1);
        let two: Vec<f64> = (0..10_000)
            .map(|_| {
                let y = ou_sample_step(3.0, 0.3, &p, &mut r1);
                ou_sample_step(y, 0.4, &p, &mut r1)
            })
            .collect();
        let one: Vec<f64> = (0..10_000).map(|_| ou_sample_step(3.0, 0.7, &p, &mut r2)).collect();
        assert!(ks_two_sample(&two, &one).p_value > ALPHA);
    }

    #[test]
    fn bessel_sampler_from_origin_is_chi() {
        for &d in &[0.6, 1.0, 3.7] {
            let p = BesselParams::canonical(d).unwrap();
            let dt = 0.5;
            let r = p.clock.rho(dt);
            let mut rng = stream(3, d.to_bits());
            let xs: Vec<f64> = (0..10_000)
                .map(|_| bessel_sample_step(0.0, dt, &p, &mut rng) / r.sqrt())
                .collect();
            let ks = ks_one_sample(&xs, |x| chi_cdf(x, d, 1.0));
            assert!(ks.p_value > ALPHA, "dim={d} {ks:?}");
        }
    }

    #[test]
    fn bessel_dim_one_is_reflected_gaussian() {
        let p = BesselParams::canonical(1.0).unwrap();
        let dt = 0.8;
        let r = p.clock.rho(dt);
        let mut rng = stream(4, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| bessel_sample_step(0.0, dt, &p, &mut rng)).collect();
        let normal = statrs::distribution::Normal::new(0.0, r.sqrt()).unwrap();
        let ks = ks_one_sample(&xs, |x| 2.0 * statrs::distribution::ContinuousCDF::cdf(&normal, x) - 1.0);
        assert!(ks.p_value > ALPHA, "{ks:?}");
    }

    #[test]
    fn bessel_chapman_kolmogorov() {
        let p = BesselParams::canonical(2.4).unwrap();
        let mut r1 = stream(31, 0);
        let mut r2 = stream(31, 1);
        let two: Vec<f64> = (0..10_000)
            .map(|_| {
                let y = bessel_sample_step(0.8, 0.3, &p, &mut r1);
                bessel_sample_step(y, 0.4, &p, &mut r1)
            })
            .collect();
        let one: Vec<f64> = (0..10_000).map(|_| bessel_sample_step(0.8, 0.7, &p, &mut r2)).collect();
        assert!(ks_two_sample(&two, &one).p_value > ALPHA);
    }

    #[test]
    fn bessel_sampler_matches_transition_density_from_nonzero_start() {
        let p = BesselParams::canonical(1.5).unwrap();
        let (t, x0) = (0.35, 1.2);
        let mut rng = stream(8, 0);
        let mut xs: Vec<f64> = (0..10_000).map(|_| bessel_sample_step(x0, t, &p, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        // CDF by piecewise quadrature of the closed-form density along the sorted sample
        let mut cdf = Vec::with_capacity(xs.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &x in &xs {
            acc += integrate(|u| bessel_transition_density(t, x0, u, &p), prev, x, 1e-12).unwrap();
            cdf.push(acc);
            prev = x;
        }
        let n = xs.len() as f64;
        let d = cdf
            .iter()
            .enumerate()
            .map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
            .fold(0.0, f64::max);
        assert!(crate::verify::kolmogorov_p_value(d, n) > ALPHA, "D={d}");
    }

    #[test]
    fn bessel_sampler_edge_cases() {
        let p = BesselParams::canonical(0.4).unwrap();
        let mut rng = stream(9, 0);
        assert_eq!(bessel_sample_step(2.0, 0.0, &p, &mut rng), 2.0);
        let x = bessel_sample_step(2.0, 1e-15, &p, &mut rng);
        assert!((x - 2.0).abs() < 1e-6);
        // huge noncentrality routes stay finite and positive
        for &d in &[0.4, 3.0] {
            let p = BesselParams::canonical(d).unwrap();
            let x = bessel_sample_step(1e4, 1e-9, &p, &mut rng);
            assert!((x / 1e4 - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn laguerre_series_leading_term_and_closed_form() {
        let p = BesselParams::canonical(3.0).unwrap();
        for v in [SeriesVariant::Verbatim, SeriesVariant::Corrected] {
            let s = bessel_transition_laguerre_series(2.0, 1.0, 1.5, &p, 1, v).unwrap();
            assert_relative_eq!(s, bessel_stationary_density(1.5, &p), max_relative = 1e-14);
        }
        let closed = bessel_transition_density(2.0, 1.0, 1.5, &p);
        let corr = bessel_transition_laguerre_series(2.0, 1.0, 1.5, &p, 50, SeriesVariant::Corrected).unwrap();
        assert!((corr - closed).abs() < 1e-6);
        // frozen high-precision value of the closed form at this point
        assert_relative_eq!(closed, 0.601_036_404_962_200_1, max_relative = 1e-12);
        let verbatim = bessel_transition_laguerre_series(2.0, 1.0, 1.5, &p, 50, SeriesVariant::Verbatim).unwrap();
        assert!((verbatim - closed).abs() > 1e-3);
        // large t: both reduce to the stationary density
        let far = bessel_transition_laguerre_series(30.0, 1.0, 1.5, &p, 10, SeriesVariant::Verbatim).unwrap();
        assert!((far - bessel_stationary_density(1.5, &p)).abs() < 1e-12);
        assert!(bessel_transition_laguerre_series(2.0, 1.0, 1.5, &p, 0, SeriesVariant::Verbatim).is_err());
    }

    #[test]
    fn stationarity_integrals() {
        let ou = StationarityKind::Ou(OuParams::CANONICAL);
        let v = stationarity_integral_check(1.0, 0.7, ou).unwrap();
        assert!((v - stationary_density(0.7, ou)).abs() < 1e-7);
        for &(d, t, x) in &[(4.0, 0.5, 1.1), (1.0, 3.0, 0.2)] {
            let k = StationarityKind::Bessel(BesselParams::canonical(d).unwrap());
            let v = stationarity_integral_check(t, x, k).unwrap();
            assert!((v - stationary_density(x, k)).abs() < 1e-7, "d={d}: {v}");
        }
        assert!(stationarity_integral_check(0.0, 1.0, ou).is_err());
    }
}

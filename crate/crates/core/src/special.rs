//! Scalar special functions: log-gamma, log-beta, modified Bessel functions
//! of the first kind of real order, and generalized Laguerre polynomials.
//!
//! Everything that feeds a density is available in log form, since the
//! gamma ratios and Bessel factors in the matrix densities overflow in
//! linear space long before the matrices get interesting.

use crate::error::{domain, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const CF_MAXIT: usize = 2_000_000;

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("log_gamma", format!("x = {x} must be positive and finite")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// `ln B(a, b)` for `a, b > 0`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

fn check_bessel_args(nu: f64, z: f64) -> Result<()> {
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(domain("bessel_i", format!("order nu = {nu} must be > -1")));
    }
    if !(z >= 0.0) || z.is_nan() {
        return Err(domain("bessel_i", format!("argument z = {z} must be nonnegative")));
    }
    Ok(())
}

/// `ln I_nu(z)` for `nu > -1`, `z >= 0`.
///
/// Power series (summed in log space) when `z <= max(30, nu)`, the Hankel
/// large-argument series when `z > max(1e4, 2 nu^2)`, and otherwise the
/// Steed/Temme continued-fraction scheme for the `I`/`K` pair with the
/// Wronskian fixing the normalization. Orders in `(-1, 0)` use the
/// reflection `I_{-m} = I_m + (2/pi) sin(m pi) K_m` outside the series region.
pub fn log_bessel_i(nu: f64, z: f64) -> Result<f64> {
    check_bessel_args(nu, z)?;
    if z == 0.0 {
        return Ok(if nu == 0.0 {
            0.0
        } else if nu > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        });
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if z <= 30.0_f64.max(nu) {
        return log_bessel_i_series(nu, z);
    }
    if z > 1e4_f64.max(2.0 * nu * nu) {
        return Ok(z + log_bessel_i_scaled_hankel(nu, z));
    }
    let m = nu.abs();
    let (log_i_m, k_scaled) = log_bessel_ik_cf(m, z);
    if nu >= 0.0 {
        Ok(log_i_m)
    } else {
        // e^{-z} I_nu = e^{-z} I_m + (2/pi) sin(m pi) e^{-2z} (e^z K_m)
        let scaled_i = (log_i_m - z).exp();
        let corr = 2.0 / std::f64::consts::PI * (m * std::f64::consts::PI).sin() * (-2.0 * z).exp() * k_scaled;
        Ok(z + (scaled_i + corr).ln())
    }
}

/// `I_nu(z)`; overflow beyond the representable range is reported as an error.
pub fn bessel_i(nu: f64, z: f64) -> Result<f64> {
    let l = log_bessel_i(nu, z)?;
    if l > f64::MAX.ln() && l.is_finite() {
        return Err(domain("bessel_i", format!("I_{nu}({z}) overflows (log = {l}); use bessel_i_scaled")));
    }
    Ok(l.exp())
}

/// Exponentially scaled `e^{-z} I_nu(z)`, finite for all `z >= 0` when `nu >= 0`.
pub fn bessel_i_scaled(nu: f64, z: f64) -> Result<f64> {
    let l = log_bessel_i(nu, z)?;
    Ok((l - z).exp())
}

fn log_bessel_i_series(nu: f64, z: f64) -> Result<f64> {
    let q = 0.25 * z * z;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_offset = 0.0_f64;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            log_offset += 250.0 * std::f64::consts::LN_10;
        }
        if k * (k + nu) > q && term < EPS * sum {
            break;
        }
    }
    let lead = nu * (0.5 * z).ln() - log_gamma(nu + 1.0)?;
    Ok(lead + sum.ln() + log_offset)
}

fn log_bessel_i_scaled_hankel(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * z);
        if term.abs() > prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum.ln() - 0.5 * (2.0 * std::f64::consts::PI * z).ln()
}

/// Returns `(ln I_nu(x), e^x K_nu(x))` for `nu >= 0`, `x >= 2`.
fn log_bessel_ik_cf(nu: f64, x: f64) -> (f64, f64) {
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xmu2 = xmu * xmu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // CF1 for I'_nu / I_nu
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 1..CF_MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }

    // downward recurrence nu -> xmu, rescaled to stay in range
    let ril1 = FPMIN;
    let mut ril = FPMIN;
    let mut ripl = h * ril;
    let mut fact = nu * xi;
    let mut log_scale = 0.0;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
        if ril.abs() > 1e200 {
            ril *= 1e-200;
            ripl *= 1e-200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
    }
    let f = ripl / ril;

    // Steed's CF2 for K_mu, kept scaled by e^x
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - xmu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..CF_MAXIT {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let rkmu = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let mut rk1 = rkmu * (xmu + x + 0.5 - h) * xi;
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);

    let log_i = rimu.ln() + x + ril1.ln() - ril.abs().ln() - log_scale;

    let mut rkm = rkmu;
    for i in 1..=nl {
        let rktemp = (xmu + i as f64) * xi2 * rk1 + rkm;
        rkm = rk1;
        rk1 = rktemp;
    }
    (log_i, rkm)
}

/// Generalized Laguerre polynomial `L_n^alpha(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}`.
pub fn laguerre_poly(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

//! Statistical verification: Kolmogorov–Smirnov tests, distances between
//! atomic measures, and the Monte Carlo convergence experiments.

use crate::error::{invalid, Error, Result};
use crate::kernels::{bessel_sample_step, chi_cdf, ou_sample_step, BesselParams, OuParams};
use crate::laws::{
    hermite_eigen_log_jpdf, weight_distribution, wishart_eigen_log_jpdf, EigenJpdfParams, EnsembleKind, LimitKind,
    LimitLaw, WeightKind, WeightLaw,
};
use crate::quad::{integrate, integrate_pieces};
use crate::matproc::{
    hermite_offdiag_dim, laguerre_diag_dim, laguerre_superdiag_dim, sample_hermite, sample_laguerre, wishart_of,
};
use crate::rng::{stream, subseed};
use crate::spectral::{
    eigen_tridiagonal, empirical_eigen_measure, singular_values, spectral_measure, symmetrized_spectral_measure, Atom, AtomicMeasure,
    EmpiricalMeasure, SpectralMeasure,
};
use ordered_float::OrderedFloat;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Result of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// `n` for one sample, `n m / (n + m)` for two.
    pub n_eff: f64,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// `sup_x |F_n(x) - F(x)|` for a sorted sample.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Kolmogorov survival function `Q(lambda) = P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small arguments
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (-j * j * PI * PI / (8.0 * lambda * lambda)).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value of statistic `d` at effective size `n_eff`, with
/// Stephens' small-sample correction.
pub fn kolmogorov_p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample test of `sample` against `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsResult {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let statistic = ks_statistic(&s, cdf);
    let n_eff = s.len() as f64;
    KsResult {
        statistic,
        p_value: kolmogorov_p_value(statistic, n_eff),
        n_eff,
    }
}

/// Two-sample test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: kolmogorov_p_value(d, n_eff),
        n_eff,
    }
}

/// `max_k |sum_{j <= k} mu_j - k/n|` for a spectral measure and the
/// empirical measure on the same eigenvalues. This bounds the Lévy–Prohorov
/// distance between them.
pub fn sup_cdf_distance(mu: &SpectralMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    let n = mu.len();
    if nu.len() != n {
        return Err(Error::MeasureMismatch(format!("{n} spectral atoms vs {} empirical", nu.len())));
    }
    let scale = nu.points.iter().fold(0.0_f64, |m, p| m.max(p.abs())).max(f64::MIN_POSITIVE);
    for (a, &p) in mu.atoms.iter().zip(&nu.points) {
        if (a.point - p).abs() > 1e-12 * scale {
            return Err(Error::MeasureMismatch(format!("atom {} vs {p}", a.point)));
        }
    }
    let mut cum = 0.0;
    let mut d: f64 = 0.0;
    for (k, a) in mu.atoms.iter().enumerate() {
        cum += a.weight;
        d = d.max((cum - (k + 1) as f64 / n as f64).abs());
    }
    Ok(d)
}

/// Largest combined atom count accepted by [`bounded_lipschitz_distance`].
pub const MAX_BL_ATOMS: usize = 100_000;
const GOLDEN_ITERS: usize = 100;

/// `sup { int f d(mu - nu) : ||f||_L + ||f||_inf <= 1 }` for atomic measures.
///
/// Only the values of `f` at the atoms matter, and any values with
/// `|f_i| <= 1 - L` and `|f_i - f_j| <= L |z_i - z_j|` extend to a function
/// of the same norms, so the distance is `max_L g(L)` with `g(L)` the
/// optimum of that linear program. For fixed `L` the program is a chain and
/// is solved exactly by a dynamic program over concave piecewise-linear
/// value functions; `g` is concave in `L` and is maximized by golden section.
pub fn bounded_lipschitz_distance<A, B>(mu: &A, nu: &B) -> Result<f64>
where
    A: AtomicMeasure + ?Sized,
    B: AtomicMeasure + ?Sized,
{
    let a = mu.atoms();
    let b = nu.atoms();
    let total = a.len() + b.len();
    if total > MAX_BL_ATOMS {
        return Err(Error::TooManyAtoms {
            atoms: total,
            cap: MAX_BL_ATOMS,
        });
    }
    let mut signed: Vec<(f64, f64)> = a.iter().map(|x| (x.point, x.weight)).collect();
    signed.extend(b.iter().map(|x| (x.point, -x.weight)));
    if signed.iter().any(|(p, w)| !p.is_finite() || !w.is_finite()) {
        return Err(invalid("measure", "atoms must be finite"));
    }
    signed.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut z: Vec<f64> = Vec::with_capacity(signed.len());
    let mut w: Vec<f64> = Vec::with_capacity(signed.len());
    for (p, m) in signed {
        if z.last() == Some(&p) {
            *w.last_mut().expect("nonempty") += m;
        } else {
            z.push(p);
            w.push(m);
        }
    }
    if z.is_empty() {
        return Ok(0.0);
    }
    let g = |lip: f64| bl_chain_value(&z, &w, lip);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    let mut best = f1.max(f2);
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        }
        best = best.max(f1).max(f2);
        if hi - lo < 1e-15 {
            break;
        }
    }
    // g(0) = g(1) = 0, so the end points need no evaluation
    Ok(best.max(0.0))
}

/// `max sum w_i f_i` subject to `|f_i| <= 1 - lip` and
/// `|f_{i+1} - f_i| <= lip (z_{i+1} - z_i)`.
///
/// `V_i(y)`, the best partial sum with `f_i = y`, is concave and piecewise
/// linear on `[-M, M]`. It is stored as its value at `-M` and the multiset
/// of its slopes (a sorted map from slope to segment length, with a lazy
/// additive offset). Passing to the next atom takes a windowed maximum over
/// `[y - h, y + h]` (insert a flat piece of length `2h`, then trim `h` from
/// each end) and adds the linear term `w_i y` (shift every slope).
fn bl_chain_value(z: &[f64], w: &[f64], lip: f64) -> f64 {
    let m_box = 1.0 - lip;
    if m_box <= 0.0 {
        return 0.0;
    }
    let mut segs: BTreeMap<OrderedFloat<f64>, f64> = BTreeMap::new();
    let mut shift = 0.0;
    let mut v0 = 0.0;
    segs.insert(OrderedFloat(0.0), 2.0 * m_box);
    for i in 0..z.len() {
        if i > 0 {
            let h = lip * (z[i] - z[i - 1]);
            if h > 0.0 {
                *segs.entry(OrderedFloat(-shift)).or_insert(0.0) += 2.0 * h;
                let mut rem = h;
                while rem > 0.0 {
                    let Some((&k, &len)) = segs.iter().next_back() else { break };
                    let take = len.min(rem);
                    v0 += (k.0 + shift) * take;
                    if take >= len {
                        segs.remove(&k);
                    } else {
                        segs.insert(k, len - take);
                    }
                    rem -= take;
                }
                let mut rem = h;
                while rem > 0.0 {
                    let Some((&k, &len)) = segs.iter().next() else { break };
                    let take = len.min(rem);
                    if take >= len {
                        segs.remove(&k);
                    } else {
                        segs.insert(k, len - take);
                    }
                    rem -= take;
                }
            }
        }
        shift += w[i];
        v0 -= w[i] * m_box;
    }
    v0 + segs.iter().map(|(k, len)| (k.0 + shift).max(0.0) * len).sum::<f64>()
}

/// Image of an atomic measure under `x -> |x|`.
pub fn fold_measure<A: AtomicMeasure + ?Sized>(mu: &A) -> Vec<Atom> {
    mu.atoms()
        .into_iter()
        .map(|a| Atom {
            point: a.point.abs(),
            weight: a.weight,
        })
        .collect()
}

impl AtomicMeasure for [Atom] {
    fn atoms(&self) -> Vec<Atom> {
        self.to_vec()
    }
}

impl AtomicMeasure for Vec<Atom> {
    fn atoms(&self) -> Vec<Atom> {
        self.clone()
    }
}

/// Atoms of mass `1/m` at the midpoint quantiles of a limit law.
pub fn discretize_limit_law(law: &LimitLaw, grid: usize) -> Result<Vec<Atom>> {
    let w = 1.0 / grid as f64;
    Ok(law
        .quantile_grid(grid)?
        .into_iter()
        .map(|point| Atom { point, weight: w })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ks,
    SupCdf,
    BoundedLipschitz,
    MomentVector,
}

/// A single distance measurement with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub metric: Metric,
    pub value: f64,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

/// One point of a [`ConvergenceCurve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub replicates: usize,
    /// Median distance, or exceedance probability for entry curves.
    pub value: f64,
    pub q25: Option<f64>,
    pub q75: Option<f64>,
    /// Replicate means of the first two moments of the simulated measure.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub moments: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCurve {
    pub metric: String,
    pub points: Vec<CurvePoint>,
    /// Least-squares slope of `log value` against `log n`.
    pub slope: Option<f64>,
}

impl ConvergenceCurve {
    fn new(metric: impl Into<String>, points: Vec<CurvePoint>) -> Self {
        let xy: Vec<(f64, f64)> = points
            .iter()
            .filter(|p| p.value > 0.0)
            .map(|p| ((p.n as f64).ln(), p.value.ln()))
            .collect();
        Self {
            metric: metric.into(),
            slope: log_log_slope(&xy),
            points,
        }
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.n).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].value < w[0].value)
    }

    /// `n,median_distance,q25,q75`; empty cells where a quartile does not apply.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,median_distance,q25,q75\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for p in &self.points {
            let _ = writeln!(s, "{},{:?},{},{}", p.n, p.value, cell(p.q25), cell(p.q75));
        }
        s
    }
}

fn log_log_slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_grid", "must be nonempty, positive and strictly increasing"));
    }
    Ok(())
}

/// Replicate counts interpolated geometrically in `log n` from `first` at
/// the smallest size to `last` at the largest.
pub fn scaled_replicates(n_grid: &[usize], first: usize, last: usize) -> Vec<usize> {
    if n_grid.len() < 2 {
        return vec![first; n_grid.len()];
    }
    let l0 = (n_grid[0] as f64).ln();
    let l1 = (n_grid[n_grid.len() - 1] as f64).ln();
    let expo = (last as f64 / first as f64).ln() / (l1 - l0);
    n_grid
        .iter()
        .map(|&n| (first as f64 * (((n as f64).ln() - l0) * expo).exp()).round().max(1.0) as usize)
        .collect()
}

/// Entries whose scaled versions converge in probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    HermiteDiag,
    HermiteOffdiag,
    LaguerreDiag,
    LaguerreSuperdiag,
    WishartDiag,
    WishartOffdiag,
}

/// Deterministic limit of entry `k` (1-based) of the scaled matrix.
pub fn entry_limit(kind: EntryKind, k: usize, rho: f64) -> f64 {
    match kind {
        EntryKind::HermiteDiag => 0.0,
        EntryKind::HermiteOffdiag => (rho / 2.0).sqrt(),
        EntryKind::LaguerreDiag | EntryKind::LaguerreSuperdiag => rho.sqrt(),
        EntryKind::WishartDiag if k == 1 => rho,
        EntryKind::WishartDiag => 2.0 * rho,
        EntryKind::WishartOffdiag => rho,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryConvergenceParams {
    pub kind: EntryKind,
    /// 1-based entry index.
    pub k: usize,
    pub t: f64,
    pub beta: f64,
    #[serde(default)]
    pub a: f64,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    0.05
}

fn bessel(dim: f64) -> BesselParams {
    BesselParams {
        dim,
        clock: OuParams::CANONICAL,
    }
}

/// One draw of entry `k` of the matrix divided by `sqrt(n)`, from the zero state.
fn sample_scaled_entry(p: &EntryConvergenceParams, n: usize, rng: &mut crate::rng::Stream) -> f64 {
    let (t, beta, a, k) = (p.t, p.beta, p.a, p.k);
    let sn = (n as f64).sqrt();
    let lag_x = |i: usize, rng: &mut crate::rng::Stream| {
        bessel_sample_step(0.0, t, &bessel(laguerre_diag_dim(n, beta, a, i - 1)), rng) / (beta.sqrt() * sn)
    };
    let lag_y = |i: usize, rng: &mut crate::rng::Stream| {
        bessel_sample_step(0.0, t, &bessel(laguerre_superdiag_dim(n, beta, i - 1)), rng) / (beta.sqrt() * sn)
    };
    match p.kind {
        EntryKind::HermiteDiag => ou_sample_step(0.0, t, &OuParams::CANONICAL, rng) / (beta.sqrt() * sn),
        EntryKind::HermiteOffdiag => {
            bessel_sample_step(0.0, t, &bessel(hermite_offdiag_dim(n, beta, k - 1)), rng) / ((2.0 * beta).sqrt() * sn)
        }
        EntryKind::LaguerreDiag => lag_x(k, rng),
        EntryKind::LaguerreSuperdiag => lag_y(k, rng),
        EntryKind::WishartDiag => {
            let x = lag_x(k, rng);
            if k == 1 {
                x * x
            } else {
                let y = lag_y(k - 1, rng);
                x * x + y * y
            }
        }
        EntryKind::WishartOffdiag => lag_x(k, rng) * lag_y(k, rng),
    }
}

/// Monte Carlo estimate of `P(|entry - limit| > eps)` along the size grid.
pub fn scaled_entry_convergence(p: &EntryConvergenceParams) -> Result<ConvergenceCurve> {
    check_grid(&p.n_grid)?;
    if !(p.beta > 0.0) || !(p.t > 0.0) || !(p.a > -1.0) || p.k == 0 || p.replicates == 0 {
        return Err(invalid("params", "need beta > 0, t > 0, a > -1, k >= 1, replicates >= 1"));
    }
    let off_diag = matches!(
        p.kind,
        EntryKind::HermiteOffdiag | EntryKind::LaguerreSuperdiag | EntryKind::WishartOffdiag
    );
    let rho = OuParams::CANONICAL.rho(p.t);
    let limit = entry_limit(p.kind, p.k, rho);
    let mut points = Vec::new();
    for &n in &p.n_grid {
        if p.k > n || (off_diag && p.k >= n) {
            return Err(invalid("k", format!("entry {} does not exist at n = {n}", p.k)));
        }
        let seed = subseed(p.seed, n as u64);
        let hits: usize = (0..p.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(seed, r as u64);
                usize::from((sample_scaled_entry(p, n, &mut rng) - limit).abs() > p.eps)
            })
            .sum();
        points.push(CurvePoint {
            n,
            replicates: p.replicates,
            value: hits as f64 / p.replicates as f64,
            q25: None,
            q75: None,
            moments: None,
        });
    }
    Ok(ConvergenceCurve::new(format!("exceedance_eps_{}", p.eps), points))
}

/// The measure tracked by a limit-law experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitExperiment {
    HermiteSpectral,
    HermiteEmpirical,
    WishartSpectral,
    WishartEmpirical,
    LaguerreSingular,
}

impl LimitExperiment {
    pub fn target(self) -> LimitKind {
        match self {
            LimitExperiment::HermiteSpectral | LimitExperiment::HermiteEmpirical => LimitKind::Semicircle,
            LimitExperiment::WishartSpectral | LimitExperiment::WishartEmpirical => LimitKind::Mp,
            LimitExperiment::LaguerreSingular => LimitKind::Quarter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConvergenceParams {
    pub kind: LimitExperiment,
    pub t: f64,
    pub beta: f64,
    #[serde(default)]
    pub a: f64,
    pub n_grid: Vec<usize>,
    /// Replicates per grid point.
    pub replicates: Vec<usize>,
    pub seed: u64,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    2000
}

/// Simulated measure at size `n` for one replicate.
pub fn simulate_measure(
    kind: LimitExperiment,
    n: usize,
    beta: f64,
    a: f64,
    t: f64,
    rng: crate::rng::Stream,
) -> Result<Vec<Atom>> {
    Ok(match kind {
        LimitExperiment::HermiteSpectral => spectral_measure(&sample_hermite(n, beta, t, rng)?.scale_by_sqrt(n))?.atoms,
        LimitExperiment::HermiteEmpirical => {
            empirical_eigen_measure(&sample_hermite(n, beta, t, rng)?.scale_by_sqrt(n))?.atoms()
        }
        LimitExperiment::WishartSpectral => {
            spectral_measure(&wishart_of(&sample_laguerre(n, beta, a, t, rng)?.scale_by_sqrt(n)))?.atoms
        }
        LimitExperiment::WishartEmpirical => {
            empirical_eigen_measure(&wishart_of(&sample_laguerre(n, beta, a, t, rng)?.scale_by_sqrt(n)))?.atoms()
        }
        LimitExperiment::LaguerreSingular => EmpiricalMeasure {
            points: singular_values(&sample_laguerre(n, beta, a, t, rng)?.scale_by_sqrt(n))?,
        }
        .atoms(),
    })
}

/// Median bounded-Lipschitz distance between the simulated measure and its
/// limit law (discretized on a quantile grid), along the size grid.
pub fn limit_law_convergence(p: &LimitConvergenceParams) -> Result<ConvergenceCurve> {
    check_grid(&p.n_grid)?;
    if p.replicates.len() != p.n_grid.len() || p.replicates.contains(&0) {
        return Err(invalid("replicates", "need one positive count per grid point"));
    }
    if !(p.beta > 0.0) || !(p.t > 0.0) || !(p.a > -1.0) || p.grid == 0 {
        return Err(invalid("params", "need beta > 0, t > 0, a > -1, grid >= 1"));
    }
    let law = LimitLaw::at_time(p.kind.target(), p.t)?;
    let target = discretize_limit_law(&law, p.grid)?;
    let mut points = Vec::new();
    for (&n, &reps) in p.n_grid.iter().zip(&p.replicates) {
        let seed = subseed(p.seed, n as u64);
        let runs: Vec<(f64, f64, f64)> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let atoms = simulate_measure(p.kind, n, p.beta, p.a, p.t, stream(seed, r as u64))?;
                let d = bounded_lipschitz_distance(&atoms, &target)?;
                Ok((d, atoms.moment(1), atoms.moment(2)))
            })
            .collect::<Result<_>>()?;
        let mut d: Vec<f64> = runs.iter().map(|r| r.0).collect();
        d.sort_by(f64::total_cmp);
        let m1 = runs.iter().map(|r| r.1).sum::<f64>() / reps as f64;
        let m2 = runs.iter().map(|r| r.2).sum::<f64>() / reps as f64;
        points.push(CurvePoint {
            n,
            replicates: reps,
            value: quantile_sorted(&d, 0.5),
            q25: Some(quantile_sorted(&d, 0.25)),
            q75: Some(quantile_sorted(&d, 0.75)),
            moments: Some([m1, m2]),
        });
    }
    Ok(ConvergenceCurve::new("bounded_lipschitz", points))
}

/// Mean of `max_k |sum_{j<=k} mu_j - k/n|` over Hermite replicates, along the size grid.
pub fn spectral_empirical_gap(
    n_grid: &[usize],
    beta: f64,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<ConvergenceCurve> {
    check_grid(n_grid)?;
    let mut points = Vec::new();
    for &n in n_grid {
        let s = subseed(seed, n as u64);
        let mut d: Vec<f64> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let j = sample_hermite(n, beta, t, stream(s, r as u64))?;
                let mu = spectral_measure(&j)?;
                let nu = EmpiricalMeasure { points: mu.points() };
                sup_cdf_distance(&mu, &nu)
            })
            .collect::<Result<_>>()?;
        let mean = d.iter().sum::<f64>() / replicates as f64;
        d.sort_by(f64::total_cmp);
        points.push(CurvePoint {
            n,
            replicates,
            value: mean,
            q25: Some(quantile_sorted(&d, 0.25)),
            q75: Some(quantile_sorted(&d, 0.75)),
            moments: None,
        });
    }
    Ok(ConvergenceCurve::new("mean_sup_cdf", points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCheckParams {
    pub kind: WeightKind,
    pub n: usize,
    pub beta: f64,
    #[serde(default)]
    pub a: f64,
    pub k: usize,
    pub t: f64,
    /// Second time for the time-invariance comparison.
    pub t_alt: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightCheckReport {
    pub law: WeightLaw,
    pub distance: DistanceReport,
    pub ks: KsResult,
    /// Two-sample test between the samples at `t` and `t_alt`.
    pub time_invariance: KsResult,
    pub mean: f64,
    pub std_error: f64,
    pub expected_mean: f64,
    /// Largest sampled value (support check).
    pub max_value: f64,
    pub pass: bool,
}

/// `sum_{j <= k} mu_j` of one sampled matrix.
pub fn sample_partial_weight(
    kind: WeightKind,
    n: usize,
    beta: f64,
    a: f64,
    k: usize,
    t: f64,
    rng: crate::rng::Stream,
) -> Result<f64> {
    Ok(match kind {
        WeightKind::Hermite => spectral_measure(&sample_hermite(n, beta, t, rng)?)?.partial_weight(k),
        WeightKind::Wishart => spectral_measure(&wishart_of(&sample_laguerre(n, beta, a, t, rng)?))?.partial_weight(k),
        WeightKind::Symmetrized => symmetrized_spectral_measure(&sample_laguerre(n, beta, a, t, rng)?)?.partial_weight(k),
    })
}

fn partial_weight_sample(p: &WeightCheckParams, t: f64, seed: u64) -> Result<Vec<f64>> {
    (0..p.replicates)
        .into_par_iter()
        .map(|r| sample_partial_weight(p.kind, p.n, p.beta, p.a, p.k, t, stream(seed, r as u64)))
        .collect()
}

/// KS of the sampled partial weight sums against their Beta-type law, the
/// `k/n` mean identity, and a two-sample comparison across times.
pub fn weight_law_check(p: &WeightCheckParams) -> Result<WeightCheckReport> {
    if p.replicates < 2 || !(p.t > 0.0) || !(p.t_alt > 0.0) {
        return Err(invalid("params", "need replicates >= 2 and positive times"));
    }
    let law = weight_distribution(p.kind, p.n, p.beta, p.k)?;
    let xs = partial_weight_sample(p, p.t, subseed(p.seed, 1))?;
    let ys = partial_weight_sample(p, p.t_alt, subseed(p.seed, 2))?;
    let ks = ks_one_sample(&xs, |x| law.cdf(x).expect("scalar law"));
    let time_invariance = ks_two_sample(&xs, &ys);
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    let std_error = (var / r).sqrt();
    let expected_mean = law.mean()?;
    let max_value = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_ok = (mean - expected_mean).abs() <= 3.0 * std_error.max(f64::EPSILON);
    let support_ok = max_value <= law.upper() + 1e-12;
    let pass = ks.passes(p.alpha) && time_invariance.passes(p.alpha) && mean_ok && support_ok;
    Ok(WeightCheckReport {
        law,
        distance: DistanceReport {
            metric: Metric::Ks,
            value: ks.statistic,
            n: p.n,
            replicates: p.replicates,
            seed: p.seed,
        },
        ks,
        time_invariance,
        mean,
        std_error,
        expected_mean,
        max_value,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionBoundReport {
    pub n: usize,
    pub beta: f64,
    pub eps: f64,
    pub replicates: usize,
    pub exceedances: usize,
    pub measured: f64,
    /// `sum_k E|S_k - k/n|^4 / eps^4` from the exact Beta fourth moments.
    pub bound: f64,
}

/// Measured `P(max_k |sum_{j<=k} mu_j - k/n| > eps)` for the Hermite
/// ensemble against the fourth-moment union bound.
pub fn union_bound_check(n: usize, beta: f64, t: f64, eps: f64, replicates: usize, seed: u64) -> Result<UnionBoundReport> {
    if n < 2 || !(eps > 0.0) || replicates == 0 {
        return Err(invalid("params", "need n >= 2, eps > 0, replicates >= 1"));
    }
    let mut bound = 0.0;
    for k in 1..n {
        bound += weight_distribution(WeightKind::Hermite, n, beta, k)?.central_moment4()?;
    }
    bound /= eps.powi(4);
    let exceedances: usize = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mu = spectral_measure(&sample_hermite(n, beta, t, stream(seed, r as u64))?)?;
            let nu = EmpiricalMeasure { points: mu.points() };
            Ok(usize::from(sup_cdf_distance(&mu, &nu)? > eps))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(UnionBoundReport {
        n,
        beta,
        eps,
        replicates,
        exceedances,
        measured: exceedances as f64 / replicates as f64,
        bound,
    })
}

/// One KS comparison of a matrix entry against its marginal law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryKs {
    pub entry: String,
    pub ks: KsResult,
}

/// Samples the zero-started matrix at time `t` and tests every entry
/// against its marginal law: `N(0, rho / beta)` on the Hermite diagonal and
/// scaled chi laws elsewhere. `laguerre_a = None` selects the Hermite model.
pub fn entry_law_check(
    n: usize,
    beta: f64,
    laguerre_a: Option<f64>,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<EntryKs>> {
    let rho = OuParams::CANONICAL.rho(t);
    let mats: Vec<(Vec<f64>, Vec<f64>)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let rng = stream(seed, r as u64);
            Ok(match laguerre_a {
                None => {
                    let j = sample_hermite(n, beta, t, rng)?;
                    (j.diag, j.offdiag)
                }
                Some(a) => {
                    let l = sample_laguerre(n, beta, a, t, rng)?;
                    (l.diag, l.superdiag)
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let column = |first: bool, i: usize| -> Vec<f64> { mats.iter().map(|m| if first { m.0[i] } else { m.1[i] }).collect() };
    for i in 0..n {
        let xs = column(true, i);
        let ks = match laguerre_a {
            None => {
                let sd = (rho / beta).sqrt();
                ks_one_sample(&xs, |x| 0.5 * erfc(-x / (sd * std::f64::consts::SQRT_2)))
            }
            Some(a) => ks_one_sample(&xs, |x| chi_cdf(x, laguerre_diag_dim(n, beta, a, i), rho / beta)),
        };
        out.push(EntryKs {
            entry: format!("diag[{}]", i + 1),
            ks,
        });
    }
    for j in 0..n - 1 {
        let xs = column(false, j);
        let ks = match laguerre_a {
            None => ks_one_sample(&xs, |x| chi_cdf(x, hermite_offdiag_dim(n, beta, j), rho / (2.0 * beta))),
            Some(_) => ks_one_sample(&xs, |x| chi_cdf(x, laguerre_superdiag_dim(n, beta, j), rho / beta)),
        };
        out.push(EntryKs {
            entry: format!("offdiag[{}]", j + 1),
            ks,
        });
    }
    Ok(out)
}

/// CDF of one unordered eigenvalue for `n` in `{1, 2}`, by quadrature of
/// the joint density. Wishart eigenvalues are integrated in `s = sqrt(lambda)`
/// to tame the hard edge. The CDF is tabulated on a fine grid in `s`.
pub fn eigen_marginal_cdf(p: &EigenJpdfParams) -> Result<impl Fn(f64) -> f64> {
    let p = p.validated()?;
    if p.n > 2 {
        return Err(invalid("n", "marginal by quadrature is only available for n <= 2"));
    }
    let wishart = p.kind == EnsembleKind::Wishart;
    let log_jpdf = move |l: &[f64]| -> f64 {
        let v = if wishart {
            wishart_eigen_log_jpdf(l, &p)
        } else {
            hermite_eigen_log_jpdf(l, &p)
        };
        v.map(f64::exp).unwrap_or(0.0)
    };
    let r = p.rho();
    let (lo, hi) = if wishart {
        (0.0, (60.0 * r * (1.0 + p.a.max(0.0)) * p.n as f64 / p.beta.min(1.0)).sqrt())
    } else {
        let l = 12.0 * (r / p.beta).sqrt() * (1.0 + p.n as f64);
        (-l, l)
    };
    // x(s) and x'(s)
    let map = move |s: f64| if wishart { (s * s, 2.0 * s) } else { (s, 1.0) };
    let marginal = |s: f64| -> f64 {
        let (x, dx) = map(s);
        if p.n == 1 {
            return log_jpdf(&[x]) * dx;
        }
        integrate_pieces(
            |q| {
                let (y, dy) = map(q);
                log_jpdf(&[x, y]) * dy
            },
            &[lo, s, hi],
            1e-12,
        )
        .unwrap_or(f64::NAN)
            * dx
    };
    let grid = 1500;
    let h = (hi - lo) / grid as f64;
    let mut table = vec![0.0; grid + 1];
    let dens: Vec<f64> = (0..=grid).map(|k| marginal(lo + k as f64 * h)).collect();
    for k in 0..grid {
        let a = lo + k as f64 * h;
        table[k + 1] = table[k] + integrate(marginal, a, a + h, 1e-12)?;
    }
    if !table[grid].is_finite() || (table[grid] - 1.0).abs() > 1e-6 {
        return Err(Error::MeasureMismatch(format!("marginal mass {} differs from 1", table[grid])));
    }
    Ok(move |x: f64| {
        let s = if wishart {
            if x <= 0.0 {
                return 0.0;
            }
            x.sqrt()
        } else {
            x
        };
        let u = (s - lo) / h;
        if u <= 0.0 {
            return 0.0;
        }
        let k = u.floor() as usize;
        if k >= grid {
            return table[grid];
        }
        // cubic Hermite interpolation with the tabulated density as slope
        let f = u - k as f64;
        let (f2, f3) = (f * f, f * f * f);
        table[k] * (2.0 * f3 - 3.0 * f2 + 1.0)
            + dens[k] * h * (f3 - 2.0 * f2 + f)
            + table[k + 1] * (3.0 * f2 - 2.0 * f3)
            + dens[k + 1] * h * (f3 - f2)
    })
}

/// KS test of one uniformly chosen eigenvalue per sampled matrix against
/// [`eigen_marginal_cdf`].
pub fn eigen_marginal_check(p: &EigenJpdfParams, replicates: usize, seed: u64) -> Result<KsResult> {
    let cdf = eigen_marginal_cdf(p)?;
    let picks = subseed(seed, 7);
    let xs: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let rng = stream(seed, r as u64);
            let j = match p.kind {
                EnsembleKind::Hermite => sample_hermite(p.n, p.beta, p.t, rng)?,
                EnsembleKind::Wishart => wishart_of(&sample_laguerre(p.n, p.beta, p.a, p.t, rng)?),
            };
            let values = eigen_tridiagonal(&j)?.values;
            let k = stream(picks, r as u64).random_range(0..p.n);
            Ok(values[k])
        })
        .collect::<Result<_>>()?;
    Ok(ks_one_sample(&xs, cdf))
}

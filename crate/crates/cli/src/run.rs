//! Experiment orchestration: `sample` writes matrix snapshots, `verify`
//! runs one named check and always writes `report.json`.

use crate::config::{ConvergeTarget, ExperimentConfig, ExperimentType, Format, ProcessKind};
use crate::output::Writer;
use anyhow::{bail, Result};
use betaproc::kernels::{
    bessel_transition_density, bessel_transition_laguerre_series, stationarity_integral_check, stationary_density,
    BesselParams, OuParams, SeriesVariant, StationarityKind,
};
use betaproc::laws::{stieltjes_mp, stieltjes_mp_continued_fraction, EigenJpdfParams, LimitKind, LimitLaw, CF_LEVELS};
use betaproc::matproc::{wishart_of, BidiagonalMatrix, HermiteProcess, JacobiMatrix, LaguerreProcess};
use betaproc::rng::{stream, subseed};
use betaproc::spectral::{singular_values, spectral_measure};
use betaproc::verify::{
    eigen_marginal_check, entry_law_check, limit_law_convergence, scaled_entry_convergence, weight_law_check,
    ConvergenceCurve, EntryConvergenceParams, KsResult, LimitConvergenceParams, WeightCheckParams,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;

/// Stieltjes transform against quadrature of the density.
const STIELTJES_QUAD_TOL: f64 = 1e-8;
/// Density recovered from the transform just above the real axis.
const STIELTJES_INVERSION_TOL: f64 = 1e-4;
const STIELTJES_INVERSION_EPS: f64 = 1e-6;
/// Residual of the tail fixed-point equation.
const FIXED_POINT_TOL: f64 = 1e-12;

enum Snapshot {
    Hermite(JacobiMatrix),
    Laguerre(BidiagonalMatrix),
}

impl Snapshot {
    fn scaled(self, on: bool) -> Self {
        match (self, on) {
            (Snapshot::Hermite(j), true) => Snapshot::Hermite(j.scale_by_sqrt_n()),
            (Snapshot::Laguerre(l), true) => Snapshot::Laguerre(l.scale_by_sqrt_n()),
            (s, false) => s,
        }
    }
}

/// Runs one replicate along the time grid from the zero state.
fn trajectory(cfg: &ExperimentConfig, r: usize) -> Result<Vec<Snapshot>> {
    let rng = stream(cfg.seed, r as u64);
    let mut out = Vec::with_capacity(cfg.t_grid.len());
    let mut t = 0.0;
    match cfg.process {
        ProcessKind::Hermite => {
            let mut p = HermiteProcess::with_stream(cfg.n, cfg.beta, rng)?;
            for &ti in &cfg.t_grid {
                p.step(ti - t)?;
                t = ti;
                out.push(Snapshot::Hermite(p.matrix()).scaled(cfg.scale_by_sqrt_n));
            }
        }
        ProcessKind::Laguerre => {
            let mut p = LaguerreProcess::with_stream(cfg.n, cfg.beta, cfg.a, rng)?;
            for &ti in &cfg.t_grid {
                p.step(ti - t)?;
                t = ti;
                out.push(Snapshot::Laguerre(p.matrix()).scaled(cfg.scale_by_sqrt_n));
            }
        }
    }
    Ok(out)
}

/// Simulates all replicates in parallel, then writes serially in a fixed order.
pub fn cmd_sample(cfg: &ExperimentConfig, w: &mut Writer) -> Result<()> {
    let runs: Vec<Vec<Snapshot>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| trajectory(cfg, r))
        .collect::<Result<_>>()?;
    for (r, snaps) in runs.iter().enumerate() {
        for (i, s) in snaps.iter().enumerate() {
            let t = cfg.t_grid[i];
            let stem = format!("snapshot_r{r}_t{i}");
            match (s, cfg.format) {
                (Snapshot::Hermite(j), Format::Csv) => w.csv(&format!("{stem}.csv"), &j.to_csv())?,
                (Snapshot::Laguerre(l), Format::Csv) => w.csv(&format!("{stem}.csv"), &l.to_csv())?,
                (Snapshot::Hermite(j), Format::Json) => {
                    w.json(&format!("{stem}.json"), "hermite_snapshot", &json!({"t": t, "matrix": j}))?
                }
                (Snapshot::Laguerre(l), Format::Json) => {
                    w.json(&format!("{stem}.json"), "laguerre_snapshot", &json!({"t": t, "matrix": l}))?
                }
            };
            if cfg.spectra {
                write_spectra(cfg, w, s, r, i, t)?;
            }
        }
    }
    Ok(())
}

/// Spectral measure (`point,weight`) of the Hermite matrix or of the
/// Wishart matrix `L^T L`; singular values (`point`) of `L` as well.
fn write_spectra(cfg: &ExperimentConfig, w: &mut Writer, s: &Snapshot, r: usize, i: usize, t: f64) -> Result<()> {
    let (mu, sv) = match s {
        Snapshot::Hermite(j) => (spectral_measure(j)?, None),
        Snapshot::Laguerre(l) => (spectral_measure(&wishart_of(l))?, Some(singular_values(l)?)),
    };
    match cfg.format {
        Format::Csv => {
            w.csv(&format!("spectrum_r{r}_t{i}.csv"), &mu.to_csv())?;
            if let Some(sv) = &sv {
                let mut body = String::from("point\n");
                for x in sv {
                    body.push_str(&format!("{x:?}\n"));
                }
                w.csv(&format!("singular_r{r}_t{i}.csv"), &body)?;
            }
        }
        Format::Json => {
            w.json(
                &format!("spectrum_r{r}_t{i}.json"),
                "spectrum",
                &json!({"t": t, "measure": mu, "singular_values": sv}),
            )?;
        }
    }
    Ok(())
}

/// Result of one verification run.
#[derive(Debug, Serialize)]
pub struct Report {
    pub experiment: ExperimentType,
    pub pass: bool,
    pub details: Value,
}

/// KS tests judged as one family at level `alpha` (Bonferroni); the raw
/// per-test failures at `alpha` are reported alongside.
fn ks_family(tests: &[(String, KsResult)], alpha: f64) -> (bool, Value) {
    let m = tests.len().max(1);
    let per_test = alpha / m as f64;
    let raw_failures = tests.iter().filter(|(_, k)| !k.passes(alpha)).count();
    let pass = tests.iter().all(|(_, k)| k.passes(per_test));
    let rows: Vec<Value> = tests
        .iter()
        .map(|(name, k)| json!({"test": name, "statistic": k.statistic, "p_value": k.p_value, "n_eff": k.n_eff}))
        .collect();
    (
        pass,
        json!({"family_alpha": alpha, "per_test_alpha": per_test, "tests": m, "raw_failures": raw_failures, "results": rows}),
    )
}

pub fn cmd_verify(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Report> {
    let (pass, details) = match cfg.experiment {
        ExperimentType::Sample => bail!("`sample` is not a verification; use the sample subcommand"),
        ExperimentType::EntryDensity => verify_entries(cfg)?,
        ExperimentType::EigenJpdf => verify_eigen(cfg)?,
        ExperimentType::Weights => verify_weights(cfg)?,
        ExperimentType::Converge => verify_converge(cfg, w)?,
        ExperimentType::Stationarity => verify_stationarity(cfg)?,
        ExperimentType::LimitLaw => verify_limit_laws(cfg)?,
        ExperimentType::SeriesCheck => verify_series(cfg)?,
    };
    let report = Report {
        experiment: cfg.experiment,
        pass,
        details,
    };
    w.json("report.json", "verify_report", &report)?;
    Ok(report)
}

fn verify_entries(cfg: &ExperimentConfig) -> Result<(bool, Value)> {
    let a = (cfg.process == ProcessKind::Laguerre).then_some(cfg.a);
    let mut tests = Vec::new();
    for (i, &t) in cfg.t_grid.iter().enumerate() {
        for e in entry_law_check(cfg.n, cfg.beta, a, t, cfg.replicates, subseed(cfg.seed, i as u64))? {
            tests.push((format!("t={t:?} {}", e.entry), e.ks));
        }
    }
    Ok(ks_family(&tests, cfg.alpha))
}

fn verify_eigen(cfg: &ExperimentConfig) -> Result<(bool, Value)> {
    let mut tests = Vec::new();
    for (i, &t) in cfg.t_grid.iter().enumerate() {
        let p = match cfg.process {
            ProcessKind::Hermite => EigenJpdfParams::hermite(cfg.n, cfg.beta, t)?,
            ProcessKind::Laguerre => EigenJpdfParams::wishart(cfg.n, cfg.beta, cfg.a, t)?,
        };
        let ks = eigen_marginal_check(&p, cfg.replicates, subseed(cfg.seed, i as u64))?;
        tests.push((format!("t={t:?} eigenvalue marginal"), ks));
    }
    Ok(ks_family(&tests, cfg.alpha))
}

fn verify_weights(cfg: &ExperimentConfig) -> Result<(bool, Value)> {
    let r = weight_law_check(&WeightCheckParams {
        kind: cfg.weight_kind,
        n: cfg.n,
        beta: cfg.beta,
        a: cfg.a,
        k: cfg.k,
        t: cfg.t_grid[0],
        t_alt: cfg.t_grid[1],
        replicates: cfg.replicates,
        seed: cfg.seed,
        alpha: cfg.alpha,
    })?;
    Ok((r.pass, serde_json::to_value(&r)?))
}

fn verify_converge(cfg: &ExperimentConfig, w: &mut Writer) -> Result<(bool, Value)> {
    let t = cfg.t_grid[0];
    let curve: ConvergenceCurve = match cfg.converge {
        ConvergeTarget::Limit => limit_law_convergence(&LimitConvergenceParams {
            kind: cfg.limit,
            t,
            beta: cfg.beta,
            a: cfg.a,
            n_grid: cfg.n_grid.clone(),
            replicates: cfg.replicate_schedule(),
            seed: cfg.seed,
            grid: cfg.quantile_grid,
        })?,
        ConvergeTarget::Entry => scaled_entry_convergence(&EntryConvergenceParams {
            kind: cfg.entry,
            k: cfg.k,
            t,
            beta: cfg.beta,
            a: cfg.a,
            n_grid: cfg.n_grid.clone(),
            replicates: cfg.replicates,
            seed: cfg.seed,
            eps: cfg.eps,
        })?,
    };
    match cfg.format {
        Format::Csv => w.csv("curve.csv", &curve.to_csv())?,
        Format::Json => w.json("curve.json", "convergence_curve", &curve)?,
    };
    let v = curve.values();
    let pass = match cfg.converge {
        ConvergeTarget::Limit => curve.strictly_decreasing(),
        // exceedance probabilities may reach zero and stay there
        ConvergeTarget::Entry => v.windows(2).all(|p| p[1] <= p[0]) && v.last() < v.first(),
    };
    Ok((pass, serde_json::to_value(&curve)?))
}

fn verify_stationarity(cfg: &ExperimentConfig) -> Result<(bool, Value)> {
    let kind = if cfg.dim == 0.0 {
        StationarityKind::Ou(OuParams::CANONICAL)
    } else {
        StationarityKind::Bessel(BesselParams::canonical(cfg.dim)?)
    };
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &cfg.t_grid {
        for &x in &cfg.x_grid {
            let got = stationarity_integral_check(t, x, kind)?;
            let want = stationary_density(x, kind);
            let err = (got - want).abs();
            worst = worst.max(err);
            rows.push(json!({"t": t, "x": x, "integral": got, "stationary": want, "abs_error": err}));
        }
    }
    let pass = worst <= cfg.tolerance;
    Ok((pass, json!({"tolerance": cfg.tolerance, "max_abs_error": worst, "points": rows})))
}

fn verify_series(cfg: &ExperimentConfig) -> Result<(bool, Value)> {
    let p = BesselParams::canonical(cfg.dim)?;
    let mut rows = Vec::new();
    let (mut worst_corrected, mut worst_verbatim): (f64, f64) = (0.0, 0.0);
    for &t in &cfg.t_grid {
        for &x0 in &cfg.x0_grid {
            for &x in &cfg.x_grid {
                let exact = bessel_transition_density(t, x0, x, &p);
                let corrected = bessel_transition_laguerre_series(t, x0, x, &p, cfg.series_terms, SeriesVariant::Corrected)?;
                let verbatim = bessel_transition_laguerre_series(t, x0, x, &p, cfg.series_terms, SeriesVariant::Verbatim)?;
                worst_corrected = worst_corrected.max((corrected - exact).abs());
                worst_verbatim = worst_verbatim.max((verbatim - exact).abs());
                rows.push(json!({
                    "t": t, "x0": x0, "x": x, "closed_form": exact,
                    "corrected_series": corrected, "verbatim_series": verbatim,
                    "corrected_error": (corrected - exact).abs(), "verbatim_error": (verbatim - exact).abs(),
                }));
            }
        }
    }
    // only the corrected series is held to the tolerance
    let pass = worst_corrected <= cfg.tolerance;
    Ok((
        pass,
        json!({
            "dim": cfg.dim, "terms": cfg.series_terms, "tolerance": cfg.tolerance,
            "max_corrected_error": worst_corrected, "max_verbatim_error": worst_verbatim, "points": rows,
        }),
    ))
}

/// Stieltjes checks at real points beyond the soft edge and just above the cut.
pub fn stieltjes_checks(law: &LimitLaw) -> Result<(bool, Value)> {
    let r = law.rho;
    let mut rows = Vec::new();
    let mut pass = true;
    for f in [1.1, 1.5, 2.0, 4.0, 10.0] {
        let z = 4.0 * r * f;
        let closed = stieltjes_mp(Complex64::new(z, 0.0), r)?;
        let quad = law.expect(|x| 1.0 / (z - x), 1e-13)?;
        let cf = stieltjes_mp_continued_fraction(Complex64::new(z, 0.0), r, CF_LEVELS)?;
        let tail = betaproc::laws::mp_tail(Complex64::new(z, 0.0), r)?;
        let residual = (tail - r * r / (z - 2.0 * r - tail)).norm();
        let ok = (closed.re - quad).abs() <= STIELTJES_QUAD_TOL
            && (closed - cf).norm() <= STIELTJES_QUAD_TOL
            && residual <= FIXED_POINT_TOL;
        pass &= ok;
        rows.push(json!({"z": z, "closed_form": closed.re, "quadrature": quad, "continued_fraction": cf.re, "fixed_point_residual": residual, "pass": ok}));
    }
    let mut inv = Vec::new();
    for f in [0.05, 0.25, 0.5, 0.875] {
        let x = 4.0 * r * f;
        let q = stieltjes_mp(Complex64::new(x, STIELTJES_INVERSION_EPS), r)?;
        let got = -q.im / PI;
        let want = law.density(x);
        let ok = (got - want).abs() <= STIELTJES_INVERSION_TOL;
        pass &= ok;
        inv.push(json!({"x": x, "inverted": got, "density": want, "pass": ok}));
    }
    Ok((pass, json!({"real_points": rows, "inversion": inv})))
}

fn verify_limit_laws(cfg: &ExperimentConfig) -> Result<(bool, Value)> {
    let mut pass = true;
    let mut out = Vec::new();
    for &t in &cfg.t_grid {
        for kind in [LimitKind::Semicircle, LimitKind::Mp, LimitKind::Quarter, LimitKind::Symmetrized] {
            let law = LimitLaw::at_time(kind, t)?;
            let mass = law.expect(|_| 1.0, 1e-13)?;
            let mut ok = (mass - 1.0).abs() <= cfg.tolerance;
            let mut moments = Vec::new();
            for k in 1..=cfg.max_moment {
                let q = law.quadrature_moment(k)?;
                let op = law.operator_moment(k);
                let agree = op.is_none_or(|o| (o - q).abs() <= cfg.tolerance * q.abs().max(1.0));
                ok &= agree;
                moments.push(json!({"k": k, "quadrature": q, "operator": op, "pass": agree}));
            }
            let stieltjes = if kind == LimitKind::Mp {
                let (s_ok, s) = stieltjes_checks(&law)?;
                ok &= s_ok;
                Some(s)
            } else {
                None
            };
            pass &= ok;
            out.push(json!({
                "t": t, "law": kind, "rho": law.rho, "support": law.support(), "mass": mass,
                "moments": moments, "stieltjes": stieltjes, "pass": ok,
            }));
        }
    }
    Ok((pass, json!({"tolerance": cfg.tolerance, "laws": out})))
}

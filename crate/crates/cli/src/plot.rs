//! Static SVG plots: weighted histograms of a measure table with an optional
//! limit-density overlay, and convergence curves on log-log axes.

use crate::output::read_csv;
use anyhow::{bail, Context, Result};
use betaproc::laws::LimitLaw;
use std::fmt::Write as _;
use std::path::Path;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;
/// Samples of the overlay density curve.
const CURVE_POINTS: usize = 400;

/// Parsed input table.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotInput {
    /// `(point, weight)` atoms; weights are uniform for a `point` table.
    Measure(Vec<(f64, f64)>),
    /// `(n, value)` pairs of a convergence curve.
    Curve(Vec<(f64, f64)>),
}

fn num(cell: &str, path: &Path) -> Result<f64> {
    cell.parse::<f64>()
        .with_context(|| format!("{}: `{cell}` is not a number", path.display()))
}

/// Reads a table written by `sample` (spectrum, singular values) or by a
/// convergence run, rejecting anything else.
pub fn read_input(path: &Path) -> Result<PlotInput> {
    let (header, rows) = read_csv(path)?;
    if rows.is_empty() {
        bail!("{} has no data rows", path.display());
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let width = header.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        bail!("{}: row {} has {} columns, header has {width}", path.display(), bad + 1, rows[bad].len());
    }
    match h.as_slice() {
        ["point", "weight"] => Ok(PlotInput::Measure(
            rows.iter()
                .map(|r| Ok((num(&r[0], path)?, num(&r[1], path)?)))
                .collect::<Result<_>>()?,
        )),
        ["point"] => {
            let w = 1.0 / rows.len() as f64;
            Ok(PlotInput::Measure(
                rows.iter().map(|r| Ok((num(&r[0], path)?, w))).collect::<Result<_>>()?,
            ))
        }
        ["n", "median_distance", ..] => {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| Ok((num(&r[0], path)?, num(&r[1], path)?)))
                .collect::<Result<_>>()?;
            if pts.iter().any(|&(n, v)| !(n > 0.0) || !(v > 0.0)) {
                bail!("{}: log-log axes need positive sizes and values", path.display());
            }
            Ok(PlotInput::Curve(pts))
        }
        _ => bail!(
            "{}: unrecognized columns `{}`; expected `point,weight`, `point` or `n,median_distance,...`",
            path.display(),
            header.join(",")
        ),
    }
}

fn map(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

fn frame(s: &mut String, title: &str, stamp: &str) {
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<!-- {stamp} -->");
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{title}</text>",
        W / 2.0
    );
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
}

fn axis_labels(s: &mut String, xlo: &str, xhi: &str, ylo: &str, yhi: &str) {
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let style = "font-family=\"sans-serif\" font-size=\"11\"";
    let _ = writeln!(s, "<text x=\"{l}\" y=\"{}\" {style}>{xlo}</text>", b + 16.0);
    let _ = writeln!(s, "<text x=\"{r}\" y=\"{}\" {style} text-anchor=\"end\">{xhi}</text>", b + 16.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{b}\" {style} text-anchor=\"end\">{ylo}</text>", l - 4.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" {style} text-anchor=\"end\">{yhi}</text>", l - 4.0, t + 10.0);
}

/// Histogram with `bins` bars. With a law, the x-range is its support
/// (widened to cover the data) and the density is drawn on the support only,
/// clipped to the plot height where it blows up at a hard edge.
pub fn measure_svg(atoms: &[(f64, f64)], bins: usize, law: Option<&LimitLaw>, stamp: &str) -> Result<String> {
    if atoms.is_empty() || bins == 0 {
        bail!("nothing to plot");
    }
    let dmin = atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
    let dmax = atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = law.map_or((dmin, dmax), |l| l.support());
    lo = lo.min(dmin);
    hi = hi.max(dmax);
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut mass = vec![0.0; bins];
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    for &(x, w) in atoms {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        mass[b] += w / total;
    }
    let heights: Vec<f64> = mass.iter().map(|m| m / width).collect();
    let curve: Vec<(f64, f64)> = law.map_or_else(Vec::new, |l| {
        let (a, b) = l.support();
        (0..CURVE_POINTS)
            .map(|i| {
                let x = a + (b - a) * (i as f64 + 0.5) / CURVE_POINTS as f64;
                (x, l.density(x))
            })
            .collect()
    });
    let hmax = heights.iter().copied().fold(0.0, f64::max);
    // a hard-edge singularity would flatten everything else
    let cmax = curve
        .iter()
        .skip(CURVE_POINTS / 20)
        .take(CURVE_POINTS - CURVE_POINTS / 10)
        .map(|c| c.1)
        .fold(0.0, f64::max);
    let ymax = 1.1 * hmax.max(cmax).max(f64::MIN_POSITIVE);
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let mut s = String::new();
    let title = law.map_or("spectral histogram".to_string(), |l| {
        format!("histogram vs {:?} law, rho = {:.6}", l.kind, l.rho)
    });
    frame(&mut s, &title, stamp);
    for (i, h) in heights.iter().enumerate() {
        let x0 = map(lo + i as f64 * width, lo, hi, l, r);
        let x1 = map(lo + (i + 1) as f64 * width, lo, hi, l, r);
        let y = map(h.min(ymax), 0.0, ymax, b, t);
        let _ = writeln!(
            s,
            "<rect x=\"{x0:.3}\" y=\"{y:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\"/>",
            x1 - x0,
            b - y
        );
    }
    if !curve.is_empty() {
        let pts: Vec<String> = curve
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", map(x, lo, hi, l, r), map(y.min(ymax), 0.0, ymax, b, t)))
            .collect();
        let _ = writeln!(
            s,
            "<polyline class=\"density\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
    }
    axis_labels(&mut s, &format!("{lo:.4}"), &format!("{hi:.4}"), "0", &format!("{ymax:.4}"));
    s.push_str("</svg>\n");
    Ok(s)
}

/// Median distance against `n` on log-log axes.
pub fn curve_svg(points: &[(f64, f64)], stamp: &str) -> Result<String> {
    if points.is_empty() {
        bail!("nothing to plot");
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let (xlo, xhi) = pad(
        lx.iter().copied().fold(f64::INFINITY, f64::min),
        lx.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (ylo, yhi) = pad(
        ly.iter().copied().fold(f64::INFINITY, f64::min),
        ly.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let (l, r, t, b) = (MARGIN + 10.0, W - MARGIN - 10.0, MARGIN + 10.0, H - MARGIN - 10.0);
    let mut s = String::new();
    frame(&mut s, "convergence (log-log)", stamp);
    let xy: Vec<(f64, f64)> = lx
        .iter()
        .zip(&ly)
        .map(|(&x, &y)| (map(x, xlo, xhi, l, r), map(y, ylo, yhi, b, t)))
        .collect();
    let pts: Vec<String> = xy.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    let _ = writeln!(
        s,
        "<polyline class=\"curve\" fill=\"none\" stroke=\"#3182bd\" stroke-width=\"1.5\" points=\"{}\"/>",
        pts.join(" ")
    );
    for (x, y) in &xy {
        let _ = writeln!(s, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\" fill=\"#3182bd\"/>");
    }
    axis_labels(
        &mut s,
        &format!("n = {:.0}", 10f64.powf(xlo)),
        &format!("n = {:.0}", 10f64.powf(xhi)),
        &format!("{:.3e}", 10f64.powf(ylo)),
        &format!("{:.3e}", 10f64.powf(yhi)),
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// The `#` stamp line of an input file, carried into the plot.
pub fn input_stamp(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .find_map(|l| l.strip_prefix("# "))
        .unwrap_or("unstamped input")
        .to_string())
}

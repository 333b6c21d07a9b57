//! Experiment configuration: a single TOML file per run.

use anyhow::{Context, Result};
use betaproc::laws::WeightKind;
use betaproc::verify::{EntryKind, LimitExperiment};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentType {
    Sample,
    EntryDensity,
    EigenJpdf,
    Weights,
    Converge,
    Stationarity,
    LimitLaw,
    SeriesCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Hermite,
    Laguerre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// What a `converge` run tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeTarget {
    /// Bounded-Lipschitz distance of a measure to its limit law.
    Limit,
    /// Exceedance probability of one scaled matrix entry.
    Entry,
}

/// Every field has an explicit default, so `config-template` prints the full
/// set and a config file may list only what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentType,
    pub process: ProcessKind,
    pub n: usize,
    pub n_grid: Vec<usize>,
    pub beta: f64,
    /// Laguerre parameter, `a > -1`.
    pub a: f64,
    pub t_grid: Vec<f64>,
    pub replicates: usize,
    /// Replicates at the largest size of `n_grid`; counts in between are
    /// interpolated geometrically in `log n`.
    pub replicates_last: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    /// `sample`: also write eigenvalue and weight tables.
    pub spectra: bool,
    /// `sample`: divide matrices by `sqrt(n)` before writing.
    pub scale_by_sqrt_n: bool,
    /// Partial-sum index for `weights`, entry index for entry convergence.
    pub k: usize,
    pub weight_kind: WeightKind,
    pub converge: ConvergeTarget,
    pub limit: LimitExperiment,
    pub entry: EntryKind,
    pub eps: f64,
    pub alpha: f64,
    pub quantile_grid: usize,
    /// Bessel dimension for `stationarity` and `series-check`; `0` selects
    /// the OU kernel in `stationarity`.
    pub dim: f64,
    pub x0_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub series_terms: usize,
    pub tolerance: f64,
    pub max_moment: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentType::Sample,
            process: ProcessKind::Hermite,
            n: 4,
            n_grid: vec![64, 256, 1024],
            beta: 2.0,
            a: 0.0,
            t_grid: vec![1.0],
            replicates: 1,
            replicates_last: 0,
            seed: 7,
            out: PathBuf::from("out"),
            format: Format::Csv,
            spectra: false,
            scale_by_sqrt_n: false,
            k: 1,
            weight_kind: WeightKind::Hermite,
            converge: ConvergeTarget::Limit,
            limit: LimitExperiment::HermiteEmpirical,
            entry: EntryKind::HermiteDiag,
            eps: 0.05,
            alpha: 0.01,
            quantile_grid: 2000,
            dim: 3.0,
            x0_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            x_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            series_terms: 50,
            tolerance: 1e-6,
            max_moment: 10,
        }
    }
}

/// Defaults suited to each experiment type, used by `config-template`.
pub fn template(kind: ExperimentType) -> ExperimentConfig {
    let base = ExperimentConfig {
        experiment: kind,
        ..ExperimentConfig::default()
    };
    match kind {
        ExperimentType::Sample => base,
        ExperimentType::EntryDensity => ExperimentConfig {
            n: 8,
            t_grid: vec![0.5, 2.0],
            replicates: 10_000,
            ..base
        },
        ExperimentType::EigenJpdf => ExperimentConfig {
            n: 2,
            replicates: 10_000,
            ..base
        },
        ExperimentType::Weights => ExperimentConfig {
            n: 3,
            t_grid: vec![0.5, 3.0],
            replicates: 10_000,
            ..base
        },
        ExperimentType::Converge => ExperimentConfig {
            replicates: 500,
            replicates_last: 50,
            ..base
        },
        ExperimentType::Stationarity => ExperimentConfig {
            t_grid: vec![0.25, 1.0, 4.0],
            x_grid: vec![0.3, 1.0, 2.2],
            tolerance: 1e-7,
            ..base
        },
        ExperimentType::LimitLaw => ExperimentConfig {
            tolerance: 1e-9,
            ..base
        },
        ExperimentType::SeriesCheck => ExperimentConfig {
            t_grid: vec![0.5, 2.0],
            ..base
        },
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow::anyhow!("invalid value for `{name}`: {msg}")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks every parameter domain before any computation starts.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(field("n", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(field("beta", format!("{} must be positive", self.beta)));
        }
        if !(self.a > -1.0 && self.a.is_finite()) {
            return Err(field("a", format!("{} must be > -1", self.a)));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(field("t_grid", "needs at least one time, all positive and finite"));
        }
        if self.replicates == 0 {
            return Err(field("replicates", "must be at least 1"));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field("n_grid", "must be nonempty, positive and strictly increasing"));
        }
        if !(self.eps > 0.0) {
            return Err(field("eps", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(field("alpha", "must lie in (0, 1)"));
        }
        if !(self.tolerance > 0.0) {
            return Err(field("tolerance", "must be positive"));
        }
        if self.quantile_grid == 0 {
            return Err(field("quantile_grid", "must be at least 1"));
        }
        match self.experiment {
            ExperimentType::Sample => {
                if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(field("t_grid", "sample times must be strictly increasing"));
                }
            }
            ExperimentType::Weights => {
                if self.k == 0 || self.k > self.n {
                    return Err(field("k", format!("need 1 <= k <= n = {}", self.n)));
                }
                if self.t_grid.len() != 2 {
                    return Err(field("t_grid", "weights needs exactly two times for the time-invariance test"));
                }
                if self.replicates < 2 {
                    return Err(field("replicates", "weights needs at least 2"));
                }
            }
            ExperimentType::EigenJpdf => {
                if self.n > 2 {
                    return Err(field("n", "eigen-jpdf marginals are computed for n <= 2"));
                }
            }
            ExperimentType::Converge => {
                if self.k == 0 {
                    return Err(field("k", "entry index starts at 1"));
                }
            }
            ExperimentType::Stationarity | ExperimentType::SeriesCheck => {
                let need_dim = self.experiment == ExperimentType::SeriesCheck || self.dim != 0.0;
                if need_dim && !(self.dim > 0.0 && self.dim.is_finite()) {
                    return Err(field("dim", format!("{} must be positive", self.dim)));
                }
                if self.x_grid.is_empty() {
                    return Err(field("x_grid", "must not be empty"));
                }
                if self.experiment == ExperimentType::SeriesCheck {
                    if self.x0_grid.is_empty() {
                        return Err(field("x0_grid", "must not be empty"));
                    }
                    if self.series_terms == 0 {
                        return Err(field("series_terms", "must be at least 1"));
                    }
                }
            }
            ExperimentType::LimitLaw => {
                if self.max_moment > betaproc::laws::MAX_MOMENT {
                    return Err(field("max_moment", format!("must be at most {}", betaproc::laws::MAX_MOMENT)));
                }
            }
            ExperimentType::EntryDensity => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, excluding the output directory
    /// so that identical experiments written to different places share a hash.
    pub fn hash(&self) -> String {
        let canon = ExperimentConfig {
            out: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(canon.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Replicate counts along `n_grid`.
    pub fn replicate_schedule(&self) -> Vec<usize> {
        if self.replicates_last == 0 {
            vec![self.replicates; self.n_grid.len()]
        } else {
            betaproc::verify::scaled_replicates(&self.n_grid, self.replicates, self.replicates_last)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_round_trip() {
        for kind in [
            ExperimentType::Sample,
            ExperimentType::EntryDensity,
            ExperimentType::EigenJpdf,
            ExperimentType::Weights,
            ExperimentType::Converge,
            ExperimentType::Stationarity,
            ExperimentType::LimitLaw,
            ExperimentType::SeriesCheck,
        ] {
            let cfg = template(kind);
            cfg.validate().unwrap();
            let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
        }
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: ExperimentConfig = toml::from_str("experiment = \"weights\"\nn = 6\nt_grid = [0.5, 3.0]\nk = 3\nreplicates = 100\n").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.beta, 2.0);
        assert_eq!(cfg.k, 3);
    }

    #[test]
    fn field_level_errors() {
        let err = toml::from_str::<ExperimentConfig>("beta = \"two\"").unwrap_err().to_string();
        assert!(err.contains("beta"), "{err}");
        let err = toml::from_str::<ExperimentConfig>("bogus = 1").unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let cfg: ExperimentConfig = toml::from_str("beta = -1.0").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("`beta`"));
        let cfg: ExperimentConfig = toml::from_str("a = -1.0").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("`a`"));
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = template(ExperimentType::Sample);
        let b = ExperimentConfig {
            out: PathBuf::from("elsewhere"),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { seed: 8, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn schedule() {
        let cfg = template(ExperimentType::Converge);
        assert_eq!(cfg.replicate_schedule(), vec![500, 158, 50]);
    }
}

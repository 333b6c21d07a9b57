use anyhow::{Context, Result};
use betaproc::laws::{LimitKind, LimitLaw};
use betaproc_cli::config::{self, ExperimentConfig, ExperimentType, Format};
use betaproc_cli::output::Writer;
use betaproc_cli::{plot, run};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "betaproc", version, about = "Simulate and verify beta-ensemble matrix processes")]
struct Cli {
    /// Cap on worker threads for replicate loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write matrix snapshots along the time grid.
    Sample(RunArgs),
    /// Run the configured check; exits 1 if it fails, `report.json` is always written.
    Verify(RunArgs),
    /// Render a measure or convergence CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        /// Overlay this limit density: semicircle, mp, quarter or symmetrized.
        #[arg(long, value_parser = parse_law)]
        law: Option<LimitKind>,
        /// Variance clock of the overlay; defaults to its value at `--t`.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 60)]
        bins: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print a config with every default spelled out.
    ConfigTemplate {
        #[arg(long, value_enum, default_value = "sample")]
        experiment: ExperimentType,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_law(s: &str) -> Result<LimitKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown law `{s}`; expected semicircle, mp, quarter or symmetrized"))
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::init();
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.cmd {
        Cmd::Sample(args) => {
            let cfg = load(&args)?;
            if cfg.experiment != ExperimentType::Sample {
                anyhow::bail!("config describes a verification; run it with `verify`");
            }
            let mut w = Writer::new(&cfg.out, &cfg.hash())?;
            run::cmd_sample(&cfg, &mut w)?;
            println!("wrote {} files to {}", w.written().len(), cfg.out.display());
            Ok(true)
        }
        Cmd::Verify(args) => {
            let cfg = load(&args)?;
            let mut w = Writer::new(&cfg.out, &cfg.hash())?;
            let report = run::cmd_verify(&cfg, &mut w)?;
            println!(
                "{}: {}",
                serde_json::to_string(&report.experiment)?.trim_matches('"'),
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(report.pass)
        }
        Cmd::Plot {
            input,
            law,
            rho,
            t,
            bins,
            out,
        } => {
            let data = plot::read_input(&input)?;
            let stamp = plot::input_stamp(&input)?;
            let svg = match data {
                plot::PlotInput::Measure(atoms) => {
                    let law = law
                        .map(|k| match rho {
                            Some(r) => LimitLaw::new(k, r),
                            None => LimitLaw::at_time(k, t),
                        })
                        .transpose()?;
                    plot::measure_svg(&atoms, bins, law.as_ref(), &stamp)?
                }
                plot::PlotInput::Curve(pts) => plot::curve_svg(&pts, &stamp)?,
            };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let stem = input.file_stem().context("input has no file name")?;
            let path = out.join(stem).with_extension("svg");
            std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Cmd::ConfigTemplate { experiment, out } => {
            let text = config::template(experiment).to_toml();
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

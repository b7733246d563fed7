use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pcesa::config::RunConfig;
use pcesa::pipeline::{self, FitOverrides};
use sparse_pce::ResponseScale;

#[derive(Parser)]
#[command(name = "pcesa", version, about = "Sparse polynomial chaos surrogates and Sobol' sensitivity analysis")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Original,
    Log,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw the LHS design (and its nested enrichment).
    Sample(Common),
    /// Evaluate the model on design files; resumes interrupted runs.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Design CSVs (default: those written by `sample`).
        designs: Vec<PathBuf>,
    },
    /// Fit a sparse PCE by adaptive hybrid LAR.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scale: Option<Scale>,
        /// Train on design plus enrichment.
        #[arg(long)]
        joint: bool,
        /// Report name (writes <out>/<name>.json).
        #[arg(long)]
        name: Option<String>,
    },
    /// Sobol' indices, rankings, group sums and univariate effects of a fit.
    Sobol {
        #[command(flatten)]
        common: Common,
        /// Fit report (default: <out>/pce.json).
        #[arg(long)]
        pce: Option<PathBuf>,
    },
    /// Repeated-subsample robustness study of the total indices.
    Study(Common),
    /// Nominal run of the bundled aquifer model with field export.
    Demo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out/demo")]
        out: PathBuf,
    },
    /// sample, evaluate, fit, sobol, study.
    Full(Common),
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(o) = &self.out {
            c.output.dir = o.clone();
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Sample(c) => {
            let o = pipeline::cmd_sample(&c.load()?)?;
            println!("wrote {}", o.design.display());
            if let Some(e) = o.enrichment {
                println!("wrote {}", e.display());
            }
        }
        Cmd::Evaluate { common, designs } => {
            let config = common.load()?;
            let designs = if designs.is_empty() { pipeline::default_designs(&config) } else { designs };
            let mut failed = 0;
            for (path, o) in designs.iter().zip(pipeline::cmd_evaluate(&config, &designs)?) {
                println!(
                    "{}: {} rows, {} evaluated now, {} failed",
                    path.display(),
                    o.responses.len(),
                    o.computed,
                    o.failures.len()
                );
                for (row, e) in &o.failures {
                    eprintln!("  row {row}: {e}");
                }
                failed += o.failures.len();
            }
            if failed > 0 {
                bail!("{failed} rows failed; rerun `evaluate` to retry them");
            }
        }
        Cmd::Fit {
            common,
            scale,
            joint,
            name,
        } => {
            let overrides = FitOverrides {
                scale: scale.map(|s| match s {
                    Scale::Original => ResponseScale::Original,
                    Scale::Log => ResponseScale::Log,
                }),
                joint: joint.then_some(true),
                name,
            };
            let (path, r) = pipeline::cmd_fit(&common.load()?, &overrides)?;
            let pce = &r.pce;
            println!(
                "{}: p = {}, {} terms of {}, err_LOO = {:.4e}, corrected = {:.4e}{}",
                path.display(),
                pce.degree(),
                pce.active_set().len(),
                pce.candidate_size(),
                pce.err_loo(),
                pce.err_loo_corrected(),
                pce.err_gen().map(|e| format!(", err_gen = {e:.4e}")).unwrap_or_default()
            );
        }
        Cmd::Sobol { common, pce } => {
            let config = common.load()?;
            let path = pce.unwrap_or_else(|| config.output.dir.join("pce.json"));
            let o = pipeline::cmd_sobol(&config, &path)?;
            println!("{:<24} {:>10} {:>10}", "variable", "S_i", "S_i^T");
            for (name, t) in &o.top_total {
                let i = o.report.names.iter().position(|n| n == name).expect("known name");
                println!("{name:<24} {:>10.4} {t:>10.4}", o.report.first_order[i]);
            }
            println!(
                "{} of {} variables below the threshold {}",
                o.screening.unimportant.len(),
                o.report.names.len(),
                o.report.threshold
            );
            println!("wrote {}", pipeline::sobol_dir(&path).display());
        }
        Cmd::Study(c) => {
            let s = pipeline::cmd_study(&c.load()?)?;
            println!("{:<24} {:>10} {:>10} {:>10}", "variable", "q25", "median", "q75");
            for (n, b) in s.names.iter().zip(&s.stats) {
                println!("{n:<24} {:>10.4} {:>10.4} {:>10.4}", b.q25, b.median, b.q75);
            }
        }
        Cmd::Demo { config, out } => {
            let config = config.map(|p| RunConfig::load(&p)).transpose()?;
            let s = pipeline::cmd_demo(config.as_ref(), &out)?;
            println!("target-zone lifetime: {:.0} years", s.response_years);
            for (zone, f) in &s.outflow_fractions {
                println!("outflow {zone}: {:.1}%", 100.0 * f);
            }
            println!("wrote {}", out.display());
        }
        Cmd::Full(c) => {
            let o = pipeline::cmd_full(&c.load()?)?;
            println!(
                "p = {}, {} terms, err_LOO = {:.4e}; {} of {} variables below threshold",
                o.fit.pce.degree(),
                o.fit.pce.active_set().len(),
                o.fit.pce.err_loo(),
                o.sobol.screening.unimportant.len(),
                o.sobol.report.names.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

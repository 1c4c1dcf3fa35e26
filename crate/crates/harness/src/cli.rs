//! Command line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gim_morl::env::Scenario;
use gim_morl::skills::Sampler;
use serde::Serialize;

use crate::compare::{compare_methods, load_all};
use crate::config::{ExperimentConfig, Method, Phase};
use crate::error::{HarnessError, Result};
use crate::output::write_json;
use crate::phase1::{load_skill_sets, run_phase1};
use crate::phase2::run_phase2;
use crate::plotdata::write_plot_data;

#[derive(Debug, Parser)]
#[command(name = "gim-morl", version, about = "Two-phase skill learning and multi-objective RL experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML experiment configuration; unspecified keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// static, sar, ts or rg.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    #[arg(long, global = true)]
    pub nonstationary: bool,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn the generic skill set.
    Skills {
        /// gime or random.
        #[arg(long)]
        sampler: Option<String>,
    },
    /// Train and test a method over the preference schedule.
    Morl {
        /// gim_morl or flat_ddpg_baseline.
        #[arg(long)]
        method: Option<String>,
        /// Phase-one output directory holding run-<r> skill checkpoints.
        #[arg(long)]
        skills: Option<PathBuf>,
        #[arg(long)]
        sampler: Option<String>,
    },
    /// Compare the methods found under <out>/morl.
    Compare,
    /// Write plot tables under <out>/plots.
    Plotdata,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    version: &'a str,
    elapsed_seconds: f64,
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

fn parse_method(s: &str) -> Result<Method> {
    match s {
        "gim_morl" | "gim-morl" => Ok(Method::GimMorl),
        "flat_ddpg_baseline" | "flat-ddpg-baseline" | "flat" => Ok(Method::FlatDdpgBaseline),
        _ => Err(HarnessError::invalid("method", format!("unknown method `{s}`"))),
    }
}

fn sampler_name(s: Sampler) -> &'static str {
    match s {
        Sampler::Gime => "gime",
        Sampler::Random => "random",
    }
}

/// Configuration after applying the file and the command line overrides.
pub fn resolve_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if let Some(s) = &common.scenario {
        config.scenario = Scenario::parse(s).map_err(|e| HarnessError::invalid("scenario", e.to_string()))?;
    }
    if common.nonstationary {
        config.nonstationary = true;
    }
    if let Some(o) = &common.out {
        config.output_dir = o.clone();
    }
    if let Some(r) = common.runs {
        config.runs = r;
    }
    config.validate()?;
    Ok(config)
}

fn record(dir: &Path, command: &str, config: &ExperimentConfig, start: Instant, files: &[PathBuf]) -> Result<()> {
    write_json(
        &dir.join("record.json"),
        &RunRecord {
            command,
            version: env!("CARGO_PKG_VERSION"),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            config,
            files: files.iter().map(|p| p.display().to_string()).collect(),
        },
    )
}

pub fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let mut config = resolve_config(&cli.common)?;
    let out = config.output_dir.clone();
    match cli.command {
        Command::Skills { sampler } => {
            if let Some(s) = sampler {
                config.sampler = Sampler::parse(&s).map_err(|e| HarnessError::invalid("sampler", e.to_string()))?;
            }
            if config.phase == Phase::Morl {
                config.phase = Phase::Skills;
            }
            let dir = out.join("skills").join(sampler_name(config.sampler));
            let report = run_phase1(&config)?;
            let files = report.write(&dir)?;
            record(&dir, "skills", &config, start, &files)?;
            for s in report.summary().skills {
                println!(
                    "{:<14} success {:.3} ± {:.3}  exploration {:.3} ± {:.3}",
                    s.skill, s.success_mean, s.success_stdev, s.exploration_mean, s.exploration_stdev
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Morl { method, skills, sampler } => {
            if let Some(m) = method {
                config.method = parse_method(&m)?;
            }
            if let Some(s) = sampler {
                config.sampler = Sampler::parse(&s).map_err(|e| HarnessError::invalid("sampler", e.to_string()))?;
            }
            let skill_sets = match config.method {
                Method::GimMorl => {
                    let dir = skills.unwrap_or_else(|| out.join("skills").join(sampler_name(config.sampler)));
                    if !dir.exists() {
                        return Err(HarnessError::invalid(
                            "skills",
                            format!("no skill checkpoints at {}; run `gim-morl skills` first", dir.display()),
                        ));
                    }
                    Some(load_skill_sets(&dir, config.runs)?)
                }
                Method::FlatDdpgBaseline => None,
            };
            let dir = out.join("morl").join(config.method.name());
            let report = run_phase2(&config, skill_sets.as_deref())?;
            let files = report.write(&dir)?;
            record(&dir, "morl", &config, start, &files)?;
            for r in &report.runs {
                println!(
                    "run {}: hypervolume {:.3} (normalized {:.3}), {} policy points",
                    r.run,
                    r.hypervolume,
                    r.normalized_hypervolume,
                    r.points.len()
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Compare => {
            let results = load_all(&out.join("morl"))?;
            let comparison = compare_methods(&results)?;
            let dir = out.join("compare");
            let path = dir.join("comparison.json");
            write_json(&path, &comparison)?;
            for m in &comparison.methods {
                println!(
                    "{:<20} sum of medians {:.3} ± {:.3}  normalized hypervolume median {:.3}",
                    m.method.name(),
                    m.sum_of_medians_mean,
                    m.sum_of_medians_stdev,
                    m.normalized_hypervolume_median
                );
            }
            for p in &comparison.pairwise {
                println!(
                    "{} vs {}: p(sum of medians) {:.4}  p(normalized hypervolume) {:.4}",
                    p.a.name(),
                    p.b.name(),
                    p.sum_of_medians_p,
                    p.normalized_hypervolume_p
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Plotdata => {
            let files = write_plot_data(&out)?;
            if files.is_empty() {
                return Err(HarnessError::invalid("out", format!("no phase outputs under {}", out.display())));
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

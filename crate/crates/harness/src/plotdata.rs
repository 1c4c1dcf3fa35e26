//! Ready-to-plot aggregates: per-skill success and exploration boxplot
//! data, per-preference median rewards and hypervolume per run.

use std::path::{Path, PathBuf};

use gim_morl::skills::{Sampler, SKILLS};
use serde::{Deserialize, Serialize};

use crate::compare::{compare_methods, MethodResults};
use crate::config::Method;
use crate::error::Result;
use crate::output::{read_json, write_csv};
use crate::phase1::Phase1Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillPoint {
    pub sampler: Sampler,
    pub run: usize,
    pub skill: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianPoint {
    pub method: Method,
    pub preference_index: usize,
    pub w1: f64,
    pub w2: f64,
    pub mean_median: f64,
    pub stdev_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypervolumePoint {
    pub method: Method,
    pub run: usize,
    pub hypervolume: f64,
    pub normalized_hypervolume: f64,
}

fn sampler_dir(skills_dir: &Path, s: Sampler) -> PathBuf {
    skills_dir.join(match s {
        Sampler::Gime => "gime",
        Sampler::Random => "random",
    })
}

/// Reads whatever phase outputs exist under `out` and writes the plot
/// tables into `out/plots`.
pub fn write_plot_data(out: &Path) -> Result<Vec<PathBuf>> {
    let plots = out.join("plots");
    let mut written = Vec::new();

    let mut success = Vec::new();
    let mut exploration = Vec::new();
    for sampler in [Sampler::Gime, Sampler::Random] {
        let path = sampler_dir(&out.join("skills"), sampler).join("summary.json");
        if !path.exists() {
            continue;
        }
        let summary: Phase1Summary = read_json(&path)?;
        for r in &summary.runs {
            for s in SKILLS.iter() {
                success.push(SkillPoint {
                    sampler,
                    run: r.run,
                    skill: s.name.to_string(),
                    value: r.success[s.id],
                });
                exploration.push(SkillPoint {
                    sampler,
                    run: r.run,
                    skill: s.name.to_string(),
                    value: r.exploration[s.id],
                });
            }
        }
    }
    if !success.is_empty() {
        for (name, rows) in [("skill_success.csv", &success), ("skill_exploration.csv", &exploration)] {
            let p = plots.join(name);
            write_csv(&p, rows)?;
            written.push(p);
        }
    }

    let mut results = Vec::new();
    for m in [Method::GimMorl, Method::FlatDdpgBaseline] {
        let d = out.join("morl").join(m.name());
        if d.join("summary.json").exists() {
            results.push(MethodResults::load(&d)?);
        }
    }
    if !results.is_empty() {
        let comparison = compare_methods(&results)?;
        let mut medians = Vec::new();
        let mut hv = Vec::new();
        for m in &comparison.methods {
            for p in &m.preferences {
                medians.push(MedianPoint {
                    method: m.method,
                    preference_index: p.index,
                    w1: p.weights[0],
                    w2: p.weights[1],
                    mean_median: p.mean,
                    stdev_median: p.stdev,
                });
            }
            for (run, (&h, &n)) in m.hypervolume.iter().zip(&m.normalized_hypervolume).enumerate() {
                hv.push(HypervolumePoint {
                    method: m.method,
                    run,
                    hypervolume: h,
                    normalized_hypervolume: n,
                });
            }
        }
        let p = plots.join("median_rewards.csv");
        write_csv(&p, &medians)?;
        written.push(p);
        let p = plots.join("hypervolume.csv");
        write_csv(&p, &hv)?;
        written.push(p);
    }
    Ok(written)
}

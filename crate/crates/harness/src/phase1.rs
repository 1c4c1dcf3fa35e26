//! Phase one: skill curriculum runs and their reports.

use std::path::{Path, PathBuf};

use gim_morl::metrics::{mean, sample_stdev};
use gim_morl::seed::seed_tree;
use gim_morl::skills::{run_skill_curriculum, CurriculumReport, Sampler, SkillSet, SKILLS, SKILL_COUNT};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Phase};
use crate::error::{HarnessError, Result};
use crate::output::{write_csv, write_json};
use crate::pool::{run_indexed, worker_count};

#[derive(Debug, Clone)]
pub struct Phase1Run {
    pub run: usize,
    pub seed: u64,
    pub report: CurriculumReport,
}

#[derive(Debug, Clone)]
pub struct Phase1Report {
    pub sampler: Sampler,
    pub runs: Vec<Phase1Run>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub run: usize,
    pub cycle: usize,
    pub skill: usize,
    pub skill_name: String,
    pub mean_reward: f64,
    pub progress: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSkillStats {
    pub run: usize,
    pub seed: u64,
    pub success: Vec<f64>,
    pub exploration: Vec<f64>,
    pub checksums: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillStat {
    pub skill: String,
    pub success_mean: f64,
    pub success_stdev: f64,
    pub exploration_mean: f64,
    pub exploration_stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Summary {
    pub sampler: Sampler,
    pub runs: Vec<RunSkillStats>,
    pub skills: Vec<SkillStat>,
}

/// Run seed of phase one; distinct runs never share streams.
pub fn phase1_seed(config: &ExperimentConfig, run: usize) -> u64 {
    seed_tree(config.seed, run as u64, "phase1")
}

pub fn run_phase1(config: &ExperimentConfig) -> Result<Phase1Report> {
    config.validate()?;
    if config.phase == Phase::Morl {
        return Err(HarnessError::invalid("phase", "phase one needs phase = \"skills\" or \"both\""));
    }
    let curriculum = config.curriculum();
    let runs = run_indexed(config.runs, worker_count(), |run| -> Result<Phase1Run> {
        let seed = phase1_seed(config, run);
        Ok(Phase1Run {
            run,
            seed,
            report: run_skill_curriculum(&curriculum, seed)?,
        })
    })?;
    Ok(Phase1Report {
        sampler: config.sampler,
        runs,
    })
}

impl Phase1Report {
    pub fn skill_sets(&self) -> Vec<SkillSet> {
        self.runs.iter().map(|r| r.report.skill_set.clone()).collect()
    }

    /// Mean success ratio of each skill across runs.
    pub fn mean_success(&self) -> [f64; SKILL_COUNT] {
        let mut out = [0.0; SKILL_COUNT];
        for (i, o) in out.iter_mut().enumerate() {
            *o = mean(&self.runs.iter().map(|r| r.report.success[i]).collect::<Vec<_>>());
        }
        out
    }

    pub fn mean_exploration(&self) -> [f64; SKILL_COUNT] {
        let mut out = [0.0; SKILL_COUNT];
        for (i, o) in out.iter_mut().enumerate() {
            *o = mean(&self.runs.iter().map(|r| r.report.exploration[i]).collect::<Vec<_>>());
        }
        out
    }

    pub fn cycle_rows(&self) -> Vec<CycleRow> {
        self.runs
            .iter()
            .flat_map(|r| {
                r.report.cycles.iter().map(move |c| CycleRow {
                    run: r.run,
                    cycle: c.cycle,
                    skill: c.skill,
                    skill_name: SKILLS[c.skill].name.to_string(),
                    mean_reward: c.mean_reward,
                    progress: c.progress,
                })
            })
            .collect()
    }

    pub fn summary(&self) -> Phase1Summary {
        let runs = self
            .runs
            .iter()
            .map(|r| RunSkillStats {
                run: r.run,
                seed: r.seed,
                success: r.report.success.to_vec(),
                exploration: r.report.exploration.to_vec(),
                checksums: r.report.skill_set.checksums(),
            })
            .collect();
        let skills = SKILLS
            .iter()
            .map(|s| {
                let succ: Vec<f64> = self.runs.iter().map(|r| r.report.success[s.id]).collect();
                let expl: Vec<f64> = self.runs.iter().map(|r| r.report.exploration[s.id]).collect();
                SkillStat {
                    skill: s.name.to_string(),
                    success_mean: mean(&succ),
                    success_stdev: sample_stdev(&succ),
                    exploration_mean: mean(&expl),
                    exploration_stdev: sample_stdev(&expl),
                }
            })
            .collect();
        Phase1Summary {
            sampler: self.sampler,
            runs,
            skills,
        }
    }

    /// Writes skill checkpoints per run, `cycles.csv` and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for r in &self.runs {
            let d = skill_dir(dir, r.run);
            r.report.skill_set.save(&d)?;
            written.push(d);
        }
        let cycles = dir.join("cycles.csv");
        write_csv(&cycles, &self.cycle_rows())?;
        written.push(cycles);
        let summary = dir.join("summary.json");
        write_json(&summary, &self.summary())?;
        written.push(summary);
        Ok(written)
    }
}

/// Checkpoint directory of one run's skill set.
pub fn skill_dir(dir: &Path, run: usize) -> PathBuf {
    dir.join(format!("run-{run}"))
}

/// Loads the skill sets of runs `0..runs` from a phase-one output directory.
pub fn load_skill_sets(dir: &Path, runs: usize) -> Result<Vec<SkillSet>> {
    (0..runs)
        .map(|r| {
            let set = SkillSet::load(skill_dir(dir, r))?;
            set.require_complete()?;
            Ok(set)
        })
        .collect()
}

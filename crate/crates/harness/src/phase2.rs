//! Phase two: preference-schedule training, frozen testing and the flat
//! baseline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gim_morl::baseline::{evaluate_flat, train_flat, FlatLearner};
use gim_morl::env::Environment;
use gim_morl::hddpg::{evaluate_hierarchical, run_hddpg, EpisodeReturn, PolicyParams};
use gim_morl::metrics::{hypervolume, mean, normalized_hypervolume, HypervolumeInput, PolicyPoint};
use gim_morl::morl::{fuzzy_membership, rfpb_transition, store_if_more_robust, CoverageSet, FuzzyRegion, SteppingstonePolicy, ThetaSource};
use gim_morl::nn::Network;
use gim_morl::seed::seed_tree;
use gim_morl::skills::SkillSet;
use serde::{Deserialize, Serialize};

use crate::checkpoint::save_coverage;
use crate::config::{ExperimentConfig, Method};
use crate::error::{HarnessError, Result};
use crate::output::{write_csv, write_json};
use crate::pool::{run_indexed, worker_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Train,
    Test,
}

/// One episode's returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub run: usize,
    pub stage: Stage,
    pub episode: usize,
    pub preference_index: usize,
    pub w1: f64,
    pub scalarized: f64,
    pub r1: f64,
    pub r2: f64,
}

/// One preference switch during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub run: usize,
    pub episode: usize,
    pub from_index: usize,
    pub to_index: usize,
    pub source: String,
    pub new_region: String,
    pub old_region: String,
    pub stored_beta: f64,
    pub stored_current: bool,
}

/// Trained policies of one run.
#[derive(Debug, Clone)]
pub enum TrainedPolicies {
    Coverage(CoverageSet<PolicyParams>),
    Flat(Network<f64>),
}

#[derive(Debug, Clone)]
pub struct Phase2Run {
    pub run: usize,
    pub seed: u64,
    pub train_rows: Vec<EpisodeRow>,
    pub test_rows: Vec<EpisodeRow>,
    pub transitions: Vec<TransitionRow>,
    pub policies: Option<TrainedPolicies>,
    /// Per-objective mean returns of each distinct test policy under its
    /// best preference.
    pub points: Vec<PolicyPoint<f64>>,
    pub hypervolume: f64,
    pub normalized_hypervolume: f64,
    pub skill_checksums_before: Vec<(usize, u64)>,
    pub skill_checksums_after: Vec<(usize, u64)>,
}

#[derive(Debug, Clone)]
pub struct Phase2Report {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub preferences: Vec<[f64; 2]>,
    pub reference: [f64; 2],
    pub ideal: [f64; 2],
    pub runs: Vec<Phase2Run>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub points: Vec<[f64; 2]>,
    pub hypervolume: f64,
    pub normalized_hypervolume: f64,
    pub regions: Vec<String>,
    pub skills_frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Summary {
    pub method: Method,
    pub version: String,
    pub preferences: Vec<[f64; 2]>,
    pub reference: [f64; 2],
    pub ideal: [f64; 2],
    pub runs: Vec<RunSummary>,
}

pub fn phase2_seed(config: &ExperimentConfig, run: usize) -> u64 {
    seed_tree(config.seed, run as u64, "phase2")
}

fn row(run: usize, stage: Stage, episode: usize, index: usize, w1: f64, r: &EpisodeReturn) -> EpisodeRow {
    EpisodeRow {
        run,
        stage,
        episode,
        preference_index: index,
        w1,
        scalarized: r.scalarized,
        r1: r.components[0],
        r2: r.components[1],
    }
}

fn source_name(s: ThetaSource) -> String {
    match s {
        ThetaSource::Fresh => "fresh".into(),
        ThetaSource::Region(r) => format!("region:{r}"),
        ThetaSource::Neighbor(r) => format!("neighbor:{r}"),
    }
}

/// Test-time policy for a preference: its own region, else the more robust
/// neighbour, else the most robust stored policy.
pub fn select_test_policy(
    coverage: &CoverageSet<PolicyParams>,
    region: FuzzyRegion,
) -> Result<&SteppingstonePolicy<PolicyParams>> {
    if let Some(p) = coverage.get(&region) {
        return Ok(p);
    }
    let (lo, hi) = region.neighbors();
    let mut candidates: Vec<_> = [lo, hi].into_iter().flatten().filter_map(|r| coverage.get(&r)).collect();
    if candidates.is_empty() {
        candidates = coverage.iter().map(|(_, p)| p).collect();
    }
    let mut best: Option<(&SteppingstonePolicy<PolicyParams>, f64)> = None;
    for p in candidates {
        let b = p.beta()?;
        if best.is_none_or(|(_, bb)| b > bb) {
            best = Some((p, b));
        }
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| gim_morl::Error::Precondition("coverage set is empty".into()).into())
}

/// Hypervolume points from test rows: rows are grouped by the policy that
/// produced them; each group contributes its per-objective mean returns
/// under the preference with the highest mean scalarized return.
pub fn policy_points(rows: &[EpisodeRow], policy_of: &BTreeMap<usize, usize>) -> Vec<PolicyPoint<f64>> {
    let mut by_policy: BTreeMap<usize, BTreeMap<usize, Vec<&EpisodeRow>>> = BTreeMap::new();
    for r in rows {
        let key = policy_of.get(&r.preference_index).copied().unwrap_or(0);
        by_policy.entry(key).or_default().entry(r.preference_index).or_default().push(r);
    }
    let mut points = Vec::new();
    for per_pref in by_policy.values() {
        let mut best: Option<(f64, PolicyPoint<f64>)> = None;
        for rs in per_pref.values() {
            let s = mean(&rs.iter().map(|r| r.scalarized).collect::<Vec<_>>());
            let p = [
                mean(&rs.iter().map(|r| r.r1).collect::<Vec<_>>()),
                mean(&rs.iter().map(|r| r.r2).collect::<Vec<_>>()),
            ];
            if best.is_none_or(|(bs, _)| s > bs) {
                best = Some((s, p));
            }
        }
        points.extend(best.map(|b| b.1));
    }
    points
}

fn hv_of(points: &[PolicyPoint<f64>], reference: [f64; 2], ideal: [f64; 2]) -> Result<(f64, f64)> {
    let input = HypervolumeInput::new(points, reference)?;
    Ok((hypervolume(&input), normalized_hypervolume(&input, ideal)?))
}

struct RunContext<'a> {
    config: &'a ExperimentConfig,
    run: usize,
    seed: u64,
}

impl RunContext<'_> {
    fn env(&self, label: &str) -> Result<Environment> {
        Ok(Environment::new(self.config.scenario_config()?, seed_tree(self.seed, 0, label))?)
    }
}

fn train_gim(ctx: &RunContext, skills: &SkillSet) -> Result<(CoverageSet<PolicyParams>, Vec<EpisodeRow>, Vec<TransitionRow>)> {
    let prefs = ctx.config.preferences();
    let cfg = &ctx.config.morl.hddpg;
    let mut env = ctx.env("train-env")?;
    let mut coverage = CoverageSet::new();
    let mut rows = Vec::new();
    let mut transitions = Vec::new();
    let mut current: Option<(usize, SteppingstonePolicy<PolicyParams>)> = None;
    let mut episode = 0;
    for (k, (idx, span)) in ctx.config.training_chunks().into_iter().enumerate() {
        let pref = prefs[idx];
        let init = match current.take() {
            None => None,
            Some((prev, policy)) => {
                let t = rfpb_transition(&pref, &prefs[prev], policy, &mut coverage)?;
                transitions.push(TransitionRow {
                    run: ctx.run,
                    episode,
                    from_index: prev,
                    to_index: idx,
                    source: source_name(t.source),
                    new_region: t.new_region.label(),
                    old_region: t.old_region.label(),
                    stored_beta: t.stored_beta,
                    stored_current: t.stored_current,
                });
                t.init
            }
        };
        let seed = seed_tree(ctx.seed, k as u64, "hddpg");
        let (policy, trace) = run_hddpg(&pref, init.as_ref(), &mut env, skills, span, episode, cfg, seed)?;
        for (i, r) in trace.iter().enumerate() {
            rows.push(row(ctx.run, Stage::Train, episode + i, idx, pref.weights()[0], r));
        }
        episode += span;
        current = Some((idx, policy));
    }
    if let Some((prev, mut policy)) = current {
        policy.region = fuzzy_membership(&prefs[prev]);
        store_if_more_robust(policy, &mut coverage)?;
    }
    Ok((coverage, rows, transitions))
}

/// Frozen testing of a coverage set over the schedule.
pub fn test_gim(
    config: &ExperimentConfig,
    run: usize,
    coverage: &CoverageSet<PolicyParams>,
    skills: &SkillSet,
) -> Result<(Vec<EpisodeRow>, BTreeMap<usize, usize>)> {
    let ctx = RunContext {
        config,
        run,
        seed: phase2_seed(config, run),
    };
    let mut env = ctx.env("test-env")?;
    let mut rows = Vec::new();
    let mut policy_of = BTreeMap::new();
    let mut episode = config.morl.training_episodes;
    for (idx, (pref, entry)) in config.preferences().iter().zip(&config.morl.schedule).enumerate() {
        let policy = select_test_policy(coverage, fuzzy_membership(pref))?;
        policy_of.insert(idx, policy.region.index());
        let out = evaluate_hierarchical(&policy.params.actor, pref, &mut env, skills, entry.span, episode, config.morl.hddpg.k_exec)?;
        for (i, r) in out.iter().enumerate() {
            rows.push(row(run, Stage::Test, episode + i, idx, pref.weights()[0], r));
        }
        episode += entry.span;
    }
    Ok((rows, policy_of))
}

fn train_flat_baseline(ctx: &RunContext) -> Result<(Network<f64>, Vec<EpisodeRow>)> {
    let prefs = ctx.config.preferences();
    let b = &ctx.config.morl.baseline;
    let mut env = ctx.env("train-env")?;
    let mut learner = FlatLearner::new(b.ddpg, b.noise, seed_tree(ctx.seed, 0, "flat"))?;
    let mut rows = Vec::new();
    let mut episode = 0;
    for (idx, span) in ctx.config.training_chunks() {
        let pref = prefs[idx];
        let trace = train_flat(&mut env, &mut learner, &pref, span, episode)?;
        for (i, r) in trace.iter().enumerate() {
            rows.push(row(ctx.run, Stage::Train, episode + i, idx, pref.weights()[0], r));
        }
        episode += span;
    }
    Ok((learner.agent.actor, rows))
}

pub fn test_flat(config: &ExperimentConfig, run: usize, actor: &Network<f64>) -> Result<Vec<EpisodeRow>> {
    let ctx = RunContext {
        config,
        run,
        seed: phase2_seed(config, run),
    };
    let mut env = ctx.env("test-env")?;
    let mut rows = Vec::new();
    let mut episode = config.morl.training_episodes;
    for (idx, (pref, entry)) in config.preferences().iter().zip(&config.morl.schedule).enumerate() {
        let out = evaluate_flat(actor, pref, &mut env, entry.span, episode)?;
        for (i, r) in out.iter().enumerate() {
            rows.push(row(run, Stage::Test, episode + i, idx, pref.weights()[0], r));
        }
        episode += entry.span;
    }
    Ok(rows)
}

/// Trains and tests one run of the configured method.
pub fn run_phase2_single(config: &ExperimentConfig, run: usize, skills: Option<&SkillSet>) -> Result<Phase2Run> {
    let seed = phase2_seed(config, run);
    let ctx = RunContext { config, run, seed };
    let (reference, ideal) = config.scenario_config()?.return_bounds();
    let before = skills.map(|s| s.checksums()).unwrap_or_default();
    let (policies, train_rows, test_rows, transitions, policy_of) = match config.method {
        Method::GimMorl => {
            let skills = skills.ok_or_else(|| HarnessError::invalid("skills", "gim_morl needs a trained skill set"))?;
            skills.require_complete()?;
            let (coverage, train, transitions) = train_gim(&ctx, skills)?;
            let (test, policy_of) = test_gim(config, run, &coverage, skills)?;
            (TrainedPolicies::Coverage(coverage), train, test, transitions, policy_of)
        }
        Method::FlatDdpgBaseline => {
            let (actor, train) = train_flat_baseline(&ctx)?;
            let test = test_flat(config, run, &actor)?;
            (TrainedPolicies::Flat(actor), train, test, Vec::new(), BTreeMap::new())
        }
    };
    let points = policy_points(&test_rows, &policy_of);
    let (hv, nhv) = hv_of(&points, reference, ideal)?;
    Ok(Phase2Run {
        run,
        seed,
        train_rows,
        test_rows,
        transitions,
        policies: Some(policies),
        points,
        hypervolume: hv,
        normalized_hypervolume: nhv,
        skill_checksums_before: before,
        skill_checksums_after: skills.map(|s| s.checksums()).unwrap_or_default(),
    })
}

/// All runs of the configured method. `skills[r]` is used by run `r`.
pub fn run_phase2(config: &ExperimentConfig, skills: Option<&[SkillSet]>) -> Result<Phase2Report> {
    config.validate()?;
    if let Some(s) = skills {
        if s.len() < config.runs {
            return Err(HarnessError::invalid("runs", format!("{} runs but only {} skill sets", config.runs, s.len())));
        }
    }
    let runs = run_indexed(config.runs, worker_count(), |run| {
        run_phase2_single(config, run, skills.map(|s| &s[run]))
    })?;
    let (reference, ideal) = config.scenario_config()?.return_bounds();
    Ok(Phase2Report {
        method: config.method,
        seeds: runs.iter().map(|r| r.seed).collect(),
        preferences: config.morl.schedule.iter().map(|e| e.weights).collect(),
        reference,
        ideal,
        runs,
    })
}

impl Phase2Report {
    pub fn test_rows(&self) -> Vec<EpisodeRow> {
        self.runs.iter().flat_map(|r| r.test_rows.iter().cloned()).collect()
    }

    pub fn summary(&self) -> Phase2Summary {
        Phase2Summary {
            method: self.method,
            version: env!("CARGO_PKG_VERSION").to_string(),
            preferences: self.preferences.clone(),
            reference: self.reference,
            ideal: self.ideal,
            runs: self
                .runs
                .iter()
                .map(|r| RunSummary {
                    run: r.run,
                    seed: r.seed,
                    points: r.points.clone(),
                    hypervolume: r.hypervolume,
                    normalized_hypervolume: r.normalized_hypervolume,
                    regions: match &r.policies {
                        Some(TrainedPolicies::Coverage(c)) => c.regions().iter().map(|g| g.label()).collect(),
                        _ => Vec::new(),
                    },
                    skills_frozen: r.skill_checksums_before == r.skill_checksums_after,
                })
                .collect(),
        }
    }

    /// Writes per-run checkpoints and rows, the merged `episodes.csv`,
    /// `transitions.csv` and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut all = Vec::new();
        let mut transitions = Vec::new();
        for r in &self.runs {
            let rd = dir.join(format!("run-{}", r.run));
            let rows: Vec<EpisodeRow> = r.train_rows.iter().chain(&r.test_rows).cloned().collect();
            let path = rd.join("episodes.csv");
            write_csv(&path, &rows)?;
            written.push(path);
            match &r.policies {
                Some(TrainedPolicies::Coverage(c)) => {
                    let cd = rd.join("coverage");
                    save_coverage(&cd, c)?;
                    written.push(cd);
                }
                Some(TrainedPolicies::Flat(actor)) => {
                    let p = rd.join("flat-actor.json");
                    crate::output::create_dir(&rd)?;
                    actor.save(&p)?;
                    written.push(p);
                }
                None => {}
            }
            all.extend(rows);
            transitions.extend(r.transitions.iter().cloned());
        }
        let path = dir.join("episodes.csv");
        write_csv(&path, &all)?;
        written.push(path);
        let path = dir.join("transitions.csv");
        write_csv(&path, &transitions)?;
        written.push(path);
        let path = dir.join("summary.json");
        write_json(&path, &self.summary())?;
        written.push(path);
        Ok(written)
    }
}

//! Cross-method comparison: median-reward summaries, hypervolumes and
//! rank-sum tests over shared-seed runs.

use std::collections::BTreeMap;
use std::path::Path;

use gim_morl::metrics::{median, median_reward_summary, rank_sum_test, GroupedReturns, MedianSummary};
use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::error::{HarnessError, Result};
use crate::output::{read_csv, read_json};
use crate::phase2::{EpisodeRow, Phase2Report, Phase2Summary, Stage};

/// What the comparison needs from one method's phase-two output.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResults {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub preferences: Vec<[f64; 2]>,
    pub test_rows: Vec<EpisodeRow>,
    pub hypervolume: Vec<f64>,
    pub normalized_hypervolume: Vec<f64>,
}

impl MethodResults {
    pub fn from_report(report: &Phase2Report) -> Self {
        Self {
            method: report.method,
            seeds: report.seeds.clone(),
            preferences: report.preferences.clone(),
            test_rows: report.test_rows(),
            hypervolume: report.runs.iter().map(|r| r.hypervolume).collect(),
            normalized_hypervolume: report.runs.iter().map(|r| r.normalized_hypervolume).collect(),
        }
    }

    /// Reads `summary.json` and `episodes.csv` written by
    /// [`Phase2Report::write`].
    pub fn load(dir: &Path) -> Result<Self> {
        let summary: Phase2Summary = read_json(&dir.join("summary.json"))?;
        let rows: Vec<EpisodeRow> = read_csv(&dir.join("episodes.csv"))?;
        Ok(Self {
            method: summary.method,
            seeds: summary.runs.iter().map(|r| r.seed).collect(),
            preferences: summary.preferences,
            test_rows: rows.into_iter().filter(|r| r.stage == Stage::Test).collect(),
            hypervolume: summary.runs.iter().map(|r| r.hypervolume).collect(),
            normalized_hypervolume: summary.runs.iter().map(|r| r.normalized_hypervolume).collect(),
        })
    }

    pub fn grouped_returns(&self) -> GroupedReturns {
        let mut groups = GroupedReturns::new();
        for r in &self.test_rows {
            groups.entry((r.run, r.preference_index)).or_default().push(r.scalarized);
        }
        groups
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMedian {
    pub index: usize,
    pub weights: [f64; 2],
    pub mean: f64,
    pub stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub preferences: Vec<PreferenceMedian>,
    /// Sum of per-preference medians of each run, by run index.
    pub run_sums: Vec<f64>,
    pub sum_of_medians_mean: f64,
    pub sum_of_medians_stdev: f64,
    pub hypervolume: Vec<f64>,
    pub normalized_hypervolume: Vec<f64>,
    pub normalized_hypervolume_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: Method,
    pub b: Method,
    pub sum_of_medians_p: f64,
    pub hypervolume_p: f64,
    pub normalized_hypervolume_p: f64,
    /// Runs in which `a`'s sum of medians is at least `b`'s.
    pub a_at_least_b_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    pub pairwise: Vec<PairwiseTest>,
}

fn summarize(r: &MethodResults) -> Result<MethodSummary> {
    let s: MedianSummary = median_reward_summary(&r.grouped_returns())?;
    let preferences = r
        .preferences
        .iter()
        .enumerate()
        .map(|(index, &weights)| {
            let (mean, stdev) = s.per_preference.get(&index).copied().unwrap_or((f64::NAN, f64::NAN));
            PreferenceMedian {
                index,
                weights,
                mean,
                stdev,
            }
        })
        .collect();
    Ok(MethodSummary {
        method: r.method,
        preferences,
        run_sums: s.run_sums.values().copied().collect(),
        sum_of_medians_mean: s.mean,
        sum_of_medians_stdev: s.stdev,
        hypervolume: r.hypervolume.clone(),
        normalized_hypervolume: r.normalized_hypervolume.clone(),
        normalized_hypervolume_median: median(&r.normalized_hypervolume)?,
    })
}

/// Compares methods run with the same seeds; runs are paired by index.
pub fn compare_methods(results: &[MethodResults]) -> Result<Comparison> {
    let first = results
        .first()
        .ok_or_else(|| HarnessError::invalid("methods", "nothing to compare"))?;
    for r in results {
        if r.seeds != first.seeds {
            return Err(HarnessError::invalid(
                "seed",
                format!("{} and {} were run with different seeds", first.method.name(), r.method.name()),
            ));
        }
        if r.preferences != first.preferences {
            return Err(HarnessError::invalid(
                "morl.schedule",
                format!("{} and {} used different preferences", first.method.name(), r.method.name()),
            ));
        }
    }
    let methods = results.iter().map(summarize).collect::<Result<Vec<_>>>()?;
    let mut pairwise = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            let (a, b) = (&methods[i], &methods[j]);
            pairwise.push(PairwiseTest {
                a: a.method,
                b: b.method,
                sum_of_medians_p: rank_sum_test(&a.run_sums, &b.run_sums)?,
                hypervolume_p: rank_sum_test(&a.hypervolume, &b.hypervolume)?,
                normalized_hypervolume_p: rank_sum_test(&a.normalized_hypervolume, &b.normalized_hypervolume)?,
                a_at_least_b_runs: a.run_sums.iter().zip(&b.run_sums).filter(|(x, y)| x >= y).count(),
            });
        }
    }
    Ok(Comparison {
        seeds: first.seeds.clone(),
        methods,
        pairwise,
    })
}

/// Loads every method directory under `morl_dir`, in method order.
pub fn load_all(morl_dir: &Path) -> Result<Vec<MethodResults>> {
    let mut found = BTreeMap::new();
    for m in [Method::GimMorl, Method::FlatDdpgBaseline] {
        let d = morl_dir.join(m.name());
        if d.join("summary.json").exists() {
            found.insert(m, MethodResults::load(&d)?);
        }
    }
    if found.len() < 2 {
        return Err(HarnessError::invalid(
            "methods",
            format!("compare needs two method outputs under {}", morl_dir.display()),
        ));
    }
    Ok(found.into_values().collect())
}

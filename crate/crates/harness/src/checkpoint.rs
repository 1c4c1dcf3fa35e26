//! Coverage-set checkpoints: one parameter file per region plus a manifest.

use std::path::Path;

use gim_morl::hddpg::PolicyParams;
use gim_morl::morl::{CoverageSet, FuzzyRegion, Preference, SteppingstonePolicy};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::{read_json, write_json};

pub const COVERAGE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEntry {
    pub region: String,
    pub file: String,
    pub beta: f64,
    pub lambda: f64,
    pub eval_history: Vec<(Preference<f64>, f64)>,
    pub actor_checksum: u64,
    pub critic_checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageManifest {
    pub format_version: u32,
    pub regions: Vec<RegionEntry>,
}

pub fn save_coverage(dir: &Path, coverage: &CoverageSet<PolicyParams>) -> Result<()> {
    let mut regions = Vec::new();
    for (region, policy) in coverage.iter() {
        let file = format!("region-{}.json", region.label());
        write_json(&dir.join(&file), &policy.params)?;
        regions.push(RegionEntry {
            region: region.label(),
            file,
            beta: policy.beta()?,
            lambda: policy.lambda,
            eval_history: policy.eval_history.clone(),
            actor_checksum: policy.params.actor.checksum(),
            critic_checksum: policy.params.critic.checksum(),
        });
    }
    write_json(
        &dir.join("manifest.json"),
        &CoverageManifest {
            format_version: COVERAGE_FORMAT_VERSION,
            regions,
        },
    )
}

pub fn load_coverage(dir: &Path) -> Result<CoverageSet<PolicyParams>> {
    let manifest: CoverageManifest = read_json(&dir.join("manifest.json"))?;
    if manifest.format_version != COVERAGE_FORMAT_VERSION {
        return Err(gim_morl::Error::Format(format!("unsupported coverage version {}", manifest.format_version)).into());
    }
    let mut coverage = CoverageSet::new();
    for e in manifest.regions {
        let region = FuzzyRegion::parse(&e.region)?;
        let params: PolicyParams = read_json(&dir.join(&e.file))?;
        if params.actor.checksum() != e.actor_checksum || params.critic.checksum() != e.critic_checksum {
            return Err(HarnessError::invalid(e.file, "checksum does not match the manifest"));
        }
        let mut policy = SteppingstonePolicy::new(params, region);
        policy.eval_history = e.eval_history;
        policy.lambda = e.lambda;
        coverage.insert(policy)?;
    }
    Ok(coverage)
}

//! Experiment configuration with documented defaults for every key.

use std::path::{Path, PathBuf};

use gim_morl::ddpg::DdpgConfig;
use gim_morl::env::{default_config, LayoutFile, Scenario, ScenarioConfig};
use gim_morl::hddpg::HddpgConfig;
use gim_morl::morl::{Preference, TEST_PREFERENCES};
use gim_morl::skills::{CurriculumConfig, GimeConfig, NoiseConfig, Sampler, SkillRewardConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Skills,
    Morl,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GimMorl,
    FlatDdpgBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GimMorl => "gim_morl",
            Method::FlatDdpgBaseline => "flat_ddpg_baseline",
        }
    }
}

/// One preference of the schedule and the number of episodes it is held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub weights: [f64; 2],
    pub span: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkillsConfig {
    pub cycles: usize,
    pub episodes_per_cycle: usize,
    pub success_window: usize,
    pub episode_length: usize,
    pub ddpg: DdpgConfig,
    pub noise: NoiseConfig,
    pub reward: SkillRewardConfig,
    pub gime: GimeConfig,
}

impl Default for SkillsConfig {
    fn default() -> Self {
        Self {
            cycles: 15,
            episodes_per_cycle: 50,
            success_window: 10,
            episode_length: 150,
            ddpg: DdpgConfig::default(),
            noise: NoiseConfig::default(),
            reward: SkillRewardConfig::default(),
            gime: GimeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub ddpg: DdpgConfig,
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorlConfig {
    pub training_episodes: usize,
    pub testing_episodes: usize,
    pub episode_length: usize,
    pub relocation_fraction: f64,
    pub relocation_period: usize,
    /// Layout JSON replacing the built-in scenario layout.
    pub layout: Option<PathBuf>,
    pub hddpg: HddpgConfig,
    pub baseline: BaselineConfig,
    pub schedule: Vec<ScheduleEntry>,
}

impl Default for MorlConfig {
    fn default() -> Self {
        Self {
            training_episodes: 300,
            testing_episodes: 300,
            episode_length: 150,
            relocation_fraction: 0.25,
            relocation_period: 100,
            layout: None,
            hddpg: HddpgConfig::default(),
            baseline: BaselineConfig::default(),
            schedule: table3_schedule(30),
        }
    }
}

/// The ten Table 3 preferences, each held for `span` episodes.
pub fn table3_schedule(span: usize) -> Vec<ScheduleEntry> {
    TEST_PREFERENCES
        .iter()
        .map(|&weights| ScheduleEntry { weights, span })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phase: Phase,
    pub scenario: Scenario,
    pub sampler: Sampler,
    pub method: Method,
    pub runs: usize,
    pub seed: u64,
    pub nonstationary: bool,
    pub output_dir: PathBuf,
    pub skills: SkillsConfig,
    pub morl: MorlConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phase: Phase::Both,
            scenario: Scenario::Ts,
            sampler: Sampler::Gime,
            method: Method::GimMorl,
            runs: 5,
            seed: 0,
            nonstationary: false,
            output_dir: PathBuf::from("results"),
            skills: SkillsConfig::default(),
            morl: MorlConfig::default(),
        }
    }
}

fn positive(key: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(HarnessError::invalid(key, "must be positive"));
    }
    Ok(())
}

fn nested(key: &str, r: gim_morl::Result<()>) -> Result<()> {
    r.map_err(|e| HarnessError::invalid(key, e.to_string()))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::invalid("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        positive("runs", self.runs)?;
        let s = &self.skills;
        positive("skills.cycles", s.cycles)?;
        positive("skills.episodes_per_cycle", s.episodes_per_cycle)?;
        positive("skills.success_window", s.success_window)?;
        positive("skills.episode_length", s.episode_length)?;
        nested("skills.ddpg", s.ddpg.validate())?;
        nested("skills.noise", s.noise.process(1).map(|_| ()))?;
        nested("skills.gime", s.gime.validate())?;
        if !(s.reward.prox_threshold >= 0.0 && s.reward.prox_threshold <= 1.0) {
            return Err(HarnessError::invalid("skills.reward.prox_threshold", "must lie in [0, 1]"));
        }
        if !(s.reward.force_tolerance >= 0.0) {
            return Err(HarnessError::invalid("skills.reward.force_tolerance", "must be non-negative"));
        }
        if !(s.reward.max_rpm > 0.0) {
            return Err(HarnessError::invalid("skills.reward.max_rpm", "must be positive"));
        }

        let m = &self.morl;
        positive("morl.training_episodes", m.training_episodes)?;
        positive("morl.testing_episodes", m.testing_episodes)?;
        positive("morl.episode_length", m.episode_length)?;
        positive("morl.relocation_period", m.relocation_period)?;
        if !(0.0..=1.0).contains(&m.relocation_fraction) {
            return Err(HarnessError::invalid("morl.relocation_fraction", "must lie in [0, 1]"));
        }
        nested("morl.hddpg", m.hddpg.validate())?;
        nested("morl.baseline.ddpg", m.baseline.ddpg.validate())?;
        nested("morl.baseline.noise", m.baseline.noise.process(1).map(|_| ()))?;
        if m.schedule.is_empty() {
            return Err(HarnessError::invalid("morl.schedule", "needs at least one preference"));
        }
        for (i, e) in m.schedule.iter().enumerate() {
            let key = format!("morl.schedule[{i}]");
            if e.span == 0 {
                return Err(HarnessError::invalid(format!("{key}.span"), "must be positive"));
            }
            Preference::new(&e.weights).map_err(|err| HarnessError::invalid(format!("{key}.weights"), err.to_string()))?;
        }
        let total: usize = m.schedule.iter().map(|e| e.span).sum();
        if total != m.testing_episodes {
            return Err(HarnessError::invalid(
                "morl.schedule",
                format!("spans sum to {total} but testing_episodes is {}", m.testing_episodes),
            ));
        }
        Ok(())
    }

    pub fn curriculum(&self) -> CurriculumConfig {
        let s = &self.skills;
        let mut arena = default_config(Scenario::Static);
        arena.episode_length = s.episode_length;
        CurriculumConfig {
            cycles: s.cycles,
            episodes_per_cycle: s.episodes_per_cycle,
            sampler: self.sampler,
            gime: s.gime,
            ddpg: s.ddpg,
            noise: s.noise,
            reward: s.reward,
            success_window: s.success_window,
            arena,
        }
    }

    /// Scenario of phase two with the run-level overrides applied.
    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let m = &self.morl;
        let mut config = match &m.layout {
            Some(path) => LayoutFile::load(path)?,
            None => default_config(self.scenario),
        };
        if config.scenario != self.scenario {
            return Err(HarnessError::invalid(
                "morl.layout",
                format!("layout is for {} but scenario is {}", config.scenario.name(), self.scenario.name()),
            ));
        }
        config.nonstationary = self.nonstationary;
        config.episode_length = m.episode_length;
        config.relocation_fraction = m.relocation_fraction;
        config.relocation_period = m.relocation_period;
        config.validate()?;
        Ok(config)
    }

    pub fn preferences(&self) -> Vec<Preference<f64>> {
        self.morl
            .schedule
            .iter()
            .map(|e| Preference::new(&e.weights).expect("validated weights"))
            .collect()
    }

    /// Training chunks `(schedule index, episodes)`: the schedule repeated
    /// round-robin until the training budget is spent. Adjacent chunks with
    /// equal weights are merged.
    pub fn training_chunks(&self) -> Vec<(usize, usize)> {
        let schedule = &self.morl.schedule;
        let mut out: Vec<(usize, usize)> = Vec::new();
        let mut left = self.morl.training_episodes;
        let mut i = 0;
        while left > 0 {
            let idx = i % schedule.len();
            let n = schedule[idx].span.min(left);
            match out.last_mut() {
                Some((prev, m)) if schedule[*prev].weights == schedule[idx].weights => *m += n,
                _ => out.push((idx, n)),
            }
            left -= n;
            i += 1;
        }
        out
    }
}

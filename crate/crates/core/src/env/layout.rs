use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Entity, EntityKind, RobotParams, Scenario, ScenarioConfig, SpawnRegion};
use crate::error::{Error, Result};

pub const LAYOUT_FORMAT_VERSION: u32 = 1;

const DEFAULT_EPISODE_LENGTH: usize = 150;
const DEFAULT_VICTIM_DEATH_PROB: f64 = 0.001;
const DEFAULT_ATTACK_PROB: f64 = 0.10;
const PLACEMENT_ATTEMPTS: usize = 10_000;

/// A row of touching pillars approximating a wall segment.
fn wall(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Entity> {
    let radius = 0.2;
    let len = (x1 - x0).hypot(y1 - y0);
    let n = (len / (1.5 * radius)).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            Entity::new(EntityKind::Obstacle, x0 + t * (x1 - x0), y0 + t * (y1 - y0), radius)
        })
        .collect()
}

fn base(scenario: Scenario, entities: Vec<Entity>, spawn: SpawnRegion) -> ScenarioConfig {
    ScenarioConfig {
        scenario,
        arena_size: 10.0,
        entities,
        spawn,
        victim_death_probs: Vec::new(),
        enemy_attack_prob: 0.0,
        nonstationary: false,
        relocation_fraction: 0.25,
        relocation_period: 100,
        episode_length: DEFAULT_EPISODE_LENGTH,
        robot: RobotParams::default(),
    }
}

/// Built-in layout of a scenario.
pub fn default_config(scenario: Scenario) -> ScenarioConfig {
    use EntityKind::*;
    match scenario {
        Scenario::Static => {
            let pillars = [
                (2.5, 2.5),
                (7.5, 2.5),
                (2.5, 7.5),
                (7.5, 7.5),
                (5.0, 1.8),
                (5.0, 8.2),
                (1.8, 5.0),
                (8.2, 5.0),
            ];
            let entities = pillars.iter().map(|&(x, y)| Entity::new(Obstacle, x, y, 0.4)).collect();
            let spawn = SpawnRegion {
                x_min: 3.5,
                x_max: 6.5,
                y_min: 3.5,
                y_max: 6.5,
            };
            base(scenario, entities, spawn)
        }
        Scenario::Sar => {
            let mut entities = vec![
                Entity::new(Victim, 2.0, 8.0, 0.5),
                Entity::new(Victim, 8.0, 8.0, 0.5),
                Entity::new(Victim, 8.0, 2.0, 0.5),
                Entity::new(Fire, 5.0, 6.5, 0.6),
                Entity::new(Fire, 6.5, 4.0, 0.6),
                Entity::new(Fire, 3.0, 4.5, 0.6),
            ];
            entities.extend(wall(4.0, 8.5, 4.0, 9.8));
            entities.extend(wall(6.0, 0.2, 6.0, 1.5));
            entities.extend(wall(8.5, 5.5, 9.8, 5.5));
            entities.extend(wall(0.2, 6.0, 1.2, 6.0));
            let spawn = SpawnRegion {
                x_min: 0.7,
                x_max: 2.0,
                y_min: 0.7,
                y_max: 2.0,
            };
            let mut c = base(scenario, entities, spawn);
            c.victim_death_probs = vec![DEFAULT_VICTIM_DEATH_PROB; 3];
            c
        }
        Scenario::Ts => {
            let mut entities = vec![
                Entity::new(Treasure, 3.0, 1.5, 0.4).with_value(1.0),
                Entity::new(Treasure, 2.0, 5.0, 0.4).with_value(3.0),
                Entity::new(Treasure, 6.5, 4.5, 0.4).with_value(5.0),
                Entity::new(Treasure, 8.5, 8.5, 0.4).with_value(8.0),
            ];
            entities.extend(wall(4.5, 0.2, 4.5, 2.5));
            entities.extend(wall(0.2, 3.5, 2.5, 3.5));
            entities.extend(wall(5.0, 6.5, 7.0, 6.5));
            entities.extend(wall(7.5, 2.0, 7.5, 4.0));
            let spawn = SpawnRegion {
                x_min: 0.7,
                x_max: 1.5,
                y_min: 0.7,
                y_max: 1.5,
            };
            base(scenario, entities, spawn)
        }
        Scenario::Rg => {
            let mut entities = vec![
                Entity::new(Home, 1.5, 1.5, 0.6),
                Entity::new(Gold, 4.0, 1.5, 0.3),
                Entity::new(Gold, 1.5, 5.0, 0.3),
                Entity::new(Gem, 7.0, 7.0, 0.3),
                Entity::new(Gem, 8.0, 3.5, 0.3),
                Entity::new(Enemy, 5.5, 5.5, 1.0),
            ];
            entities.extend(wall(3.0, 3.0, 3.0, 4.5));
            entities.extend(wall(6.0, 1.0, 6.0, 2.5));
            entities.extend(wall(3.5, 7.5, 5.0, 7.5));
            let spawn = SpawnRegion {
                x_min: 1.0,
                x_max: 2.2,
                y_min: 1.0,
                y_max: 2.2,
            };
            let mut c = base(scenario, entities, spawn);
            c.enemy_attack_prob = DEFAULT_ATTACK_PROB;
            c
        }
    }
}

/// Moves exactly `⌈fraction·M⌉` of the `M` movable entities to fresh
/// uniform positions that overlap no other entity.
pub fn relocate_entities<R: Rng + ?Sized>(layout: &[Entity], fraction: f64, arena: f64, rng: &mut R) -> Result<Vec<Entity>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Validation {
            constraint: "relocation fraction",
            detail: format!("{fraction} outside [0, 1]"),
        });
    }
    let movable: Vec<usize> = (0..layout.len()).filter(|&i| layout[i].kind.is_movable()).collect();
    let count = ((fraction * movable.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    let chosen: Vec<usize> = sample(rng, movable.len(), count).into_iter().map(|k| movable[k]).collect();

    let mut out = layout.to_vec();
    let mut placed: Vec<bool> = (0..layout.len()).map(|i| !chosen.contains(&i)).collect();
    for &i in &chosen {
        let r = out[i].radius;
        if 2.0 * r >= arena {
            return Err(Error::Config(format!("{:?} entity does not fit the arena", out[i].kind)));
        }
        let mut found = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let x = rng.random_range(r..arena - r);
            let y = rng.random_range(r..arena - r);
            let clear = out
                .iter()
                .zip(&placed)
                .enumerate()
                .all(|(j, (e, &p))| j == i || !p || !e.overlaps(x, y, r));
            if clear {
                out[i].x = x;
                out[i].y = y;
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Config("no free space to relocate an entity".into()));
        }
        placed[i] = true;
    }
    Ok(out)
}

/// Versioned layout document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub config: ScenarioConfig,
}

impl LayoutFile {
    pub fn new(config: ScenarioConfig) -> Self {
        Self {
            format_version: LAYOUT_FORMAT_VERSION,
            config,
        }
    }

    pub fn parse(s: &str) -> Result<ScenarioConfig> {
        let file: LayoutFile = serde_json::from_str(s)?;
        if file.format_version != LAYOUT_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported layout version {}", file.format_version)));
        }
        file.config.validate()?;
        Ok(file.config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

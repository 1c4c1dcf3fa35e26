//! Deterministic 2D differential-drive robot world.
//!
//! A circular robot moves in a bounded square arena populated with circular
//! entities. It perceives sixteen ray-cast proximity readings and an
//! egocentric 64×64 top-down camera grid, and acts through two wheel force
//! commands with a rotation direction each. The three multi-objective
//! scenarios attach a two-component reward vector to every step; the static
//! scenario returns zeros and is used for skill training.

mod layout;
mod sensors;

pub use layout::{default_config, relocate_entities, LayoutFile, LAYOUT_FORMAT_VERSION};
pub use sensors::{render_camera, sense_proximity};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROXIMITY_SENSORS: usize = 16;
pub const CAMERA_SIDE: usize = 64;
pub const CAMERA_CELLS: usize = CAMERA_SIDE * CAMERA_SIDE;
pub const REWARD_DIM: usize = 2;

/// Physical constants of the simulated robot and its sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Wheel ground speed at full force, m/s.
    pub max_wheel_speed: f64,
    pub wheel_base: f64,
    pub wheel_radius: f64,
    pub body_radius: f64,
    pub timestep: f64,
    pub sensor_range: f64,
    /// Side of the square camera window ahead of the robot, m.
    pub camera_extent: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            max_wheel_speed: 0.5,
            wheel_base: 0.38,
            wheel_radius: 0.0975,
            body_radius: 0.2,
            timestep: 0.1,
            sensor_range: 1.0,
            camera_extent: 4.0,
        }
    }
}

impl RobotParams {
    /// Wheel rpm at full force.
    pub fn max_rpm(&self) -> f64 {
        wheel_rpm(self.max_wheel_speed, self.wheel_radius)
    }
}

fn wheel_rpm(speed: f64, wheel_radius: f64) -> f64 {
    speed / (2.0 * PI * wheel_radius) * 60.0
}

/// Wraps an angle into `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub left_rpm: f64,
    pub right_rpm: f64,
}

impl RobotState {
    pub fn at(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
            left_rpm: 0.0,
            right_rpm: 0.0,
        }
    }
}

/// Wheel rotation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    /// Forward for nonnegative values.
    pub fn of_sign(v: f64) -> Self {
        if v >= 0.0 {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }
}

/// Wheel command: normalized forces in `[0, 1]` and a direction per wheel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    f_left: f64,
    f_right: f64,
    d_left: Direction,
    d_right: Direction,
}

impl Action {
    pub fn new(f_left: f64, f_right: f64, d_left: Direction, d_right: Direction) -> Result<Self> {
        for f in [f_left, f_right] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Validation {
                    constraint: "force range",
                    detail: format!("wheel force {f} outside [0, 1]"),
                });
            }
        }
        Ok(Self {
            f_left,
            f_right,
            d_left,
            d_right,
        })
    }

    pub fn stop() -> Self {
        Self {
            f_left: 0.0,
            f_right: 0.0,
            d_left: Direction::Forward,
            d_right: Direction::Forward,
        }
    }

    pub fn f_left(&self) -> f64 {
        self.f_left
    }

    pub fn f_right(&self) -> f64 {
        self.f_right
    }

    pub fn d_left(&self) -> Direction {
        self.d_left
    }

    pub fn d_right(&self) -> Direction {
        self.d_right
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Obstacle,
    Victim,
    Fire,
    Treasure,
    Enemy,
    Gold,
    Gem,
    Home,
}

impl EntityKind {
    /// Camera cell value for this kind.
    pub fn camera_code(self) -> f64 {
        match self {
            EntityKind::Obstacle => 0.2,
            EntityKind::Victim => 0.4,
            EntityKind::Fire => 0.5,
            EntityKind::Treasure => 0.6,
            EntityKind::Enemy => 0.7,
            EntityKind::Gold | EntityKind::Gem => 0.8,
            EntityKind::Home => 0.9,
        }
    }

    /// Whether relocation may move entities of this kind.
    pub fn is_movable(self) -> bool {
        !matches!(self, EntityKind::Obstacle | EntityKind::Home)
    }

    pub fn is_resource(self) -> bool {
        matches!(self, EntityKind::Gold | EntityKind::Gem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    #[serde(default)]
    pub value: f64,
    #[serde(default = "yes")]
    pub active: bool,
}

fn yes() -> bool {
    true
}

impl Entity {
    pub fn new(kind: EntityKind, x: f64, y: f64, radius: f64) -> Self {
        Self {
            kind,
            x,
            y,
            radius,
            value: 0.0,
            active: true,
        }
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x - x).hypot(self.y - y) <= self.radius
    }

    fn overlaps(&self, x: f64, y: f64, radius: f64) -> bool {
        (self.x - x).hypot(self.y - y) < self.radius + radius
    }
}

/// Proximity readings plus the flattened camera grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub proximity: Vec<f64>,
    pub camera: Vec<f64>,
}

/// Side of the pooled camera grid fed to the networks.
pub const POOLED_SIDE: usize = 8;
/// Width of [`Observation::features`].
pub const FEATURE_WIDTH: usize = PROXIMITY_SENSORS + POOLED_SIDE * POOLED_SIDE;

impl Observation {
    pub fn empty() -> Self {
        Self {
            proximity: vec![1.0; PROXIMITY_SENSORS],
            camera: vec![0.0; CAMERA_CELLS],
        }
    }

    /// Network input: the proximity readings followed by the camera grid
    /// max-pooled to 8×8 blocks.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(FEATURE_WIDTH);
        out.extend_from_slice(&self.proximity);
        let block = CAMERA_SIDE / POOLED_SIDE;
        for br in 0..POOLED_SIDE {
            for bc in 0..POOLED_SIDE {
                let mut m = 0.0f64;
                for r in br * block..(br + 1) * block {
                    let row = &self.camera[r * CAMERA_SIDE + bc * block..r * CAMERA_SIDE + (bc + 1) * block];
                    m = row.iter().copied().fold(m, f64::max);
                }
                out.push(m);
            }
        }
        out
    }

    pub fn min_proximity(&self) -> f64 {
        self.proximity.iter().copied().fold(1.0, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Static,
    Sar,
    Ts,
    Rg,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "static" => Ok(Scenario::Static),
            "sar" => Ok(Scenario::Sar),
            "ts" => Ok(Scenario::Ts),
            "rg" => Ok(Scenario::Rg),
            other => Err(Error::Config(format!("unknown scenario {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Static => "static",
            Scenario::Sar => "sar",
            Scenario::Ts => "ts",
            Scenario::Rg => "rg",
        }
    }
}

/// Axis-aligned box the robot spawns in, with a uniformly random heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnRegion {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub arena_size: f64,
    pub entities: Vec<Entity>,
    pub spawn: SpawnRegion,
    /// Per-step death probability of each victim, in victim order.
    #[serde(default)]
    pub victim_death_probs: Vec<f64>,
    #[serde(default)]
    pub enemy_attack_prob: f64,
    #[serde(default)]
    pub nonstationary: bool,
    pub relocation_fraction: f64,
    pub relocation_period: usize,
    pub episode_length: usize,
    #[serde(default)]
    pub robot: RobotParams,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} probability {p} outside [0, 1]")))
            }
        };
        if !(self.arena_size > 0.0) {
            return Err(Error::Config("arena size must be positive".into()));
        }
        for &p in &self.victim_death_probs {
            prob(p, "victim death")?;
        }
        prob(self.enemy_attack_prob, "enemy attack")?;
        prob(self.relocation_fraction, "relocation fraction")?;
        if self.relocation_period == 0 || self.episode_length == 0 {
            return Err(Error::Config("relocation period and episode length must be positive".into()));
        }
        let victims = self.entities.iter().filter(|e| e.kind == EntityKind::Victim).count();
        if !self.victim_death_probs.is_empty() && self.victim_death_probs.len() != victims {
            return Err(Error::Config(format!(
                "{} victim death probabilities for {victims} victims",
                self.victim_death_probs.len()
            )));
        }
        for e in &self.entities {
            if !(e.radius > 0.0) {
                return Err(Error::Config(format!("{:?} entity with non-positive radius", e.kind)));
            }
            if e.x < 0.0 || e.y < 0.0 || e.x > self.arena_size || e.y > self.arena_size {
                return Err(Error::Config(format!("{:?} entity outside the arena", e.kind)));
            }
        }
        if self.scenario == Scenario::Rg {
            let homes = self.entities.iter().filter(|e| e.kind == EntityKind::Home).count();
            if homes != 1 {
                return Err(Error::Config(format!("resource gathering needs one home, found {homes}")));
            }
        }
        let s = &self.spawn;
        if !(s.x_min <= s.x_max && s.y_min <= s.y_max) {
            return Err(Error::Config("empty spawn region".into()));
        }
        Ok(())
    }

    /// Minimum and maximum achievable per-objective episode returns.
    pub fn return_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let t = self.episode_length as f64;
        let count = |k: EntityKind| self.entities.iter().filter(|e| e.kind == k).count() as f64;
        match self.scenario {
            Scenario::Static => ([0.0, 0.0], [1.0, 1.0]),
            Scenario::Sar => ([0.0, -5.0 * t], [3.0 * count(EntityKind::Victim), 0.0]),
            Scenario::Ts => {
                let best = self
                    .entities
                    .iter()
                    .filter(|e| e.kind == EntityKind::Treasure)
                    .map(|e| e.value)
                    .fold(0.0, f64::max);
                ([-t, 0.0], [-1.0, best])
            }
            Scenario::Rg => {
                let resources = self.entities.iter().filter(|e| e.kind.is_resource()).count() as f64;
                ([0.0, -t], [resources, 0.0])
            }
        }
    }
}

/// Everything [`scenario_rewards`] needs about the step just taken.
#[derive(Debug)]
pub struct TransitionContext<'a> {
    pub scenario: Scenario,
    pub state: &'a mut RobotState,
    pub entities: &'a mut [Entity],
    pub carried: &'a mut u32,
    pub victim_death_probs: &'a [f64],
    pub enemy_attack_prob: f64,
}

/// Scenario reward vector for the robot's post-move position; updates
/// entity activity, carried resources and (on an enemy attack) the pose.
/// Returns the reward and whether the scenario reached a terminal event.
pub fn scenario_rewards<R: Rng + ?Sized>(ctx: TransitionContext<'_>, rng: &mut R) -> ([f64; 2], bool) {
    let (x, y) = (ctx.state.x, ctx.state.y);
    match ctx.scenario {
        Scenario::Static => ([0.0, 0.0], false),
        Scenario::Sar => {
            let mut r_victim = 0.0;
            let mut r_fire = 0.0;
            for e in ctx.entities.iter_mut().filter(|e| e.active) {
                match e.kind {
                    EntityKind::Victim if e.contains(x, y) => {
                        r_victim += 3.0;
                        e.active = false;
                    }
                    EntityKind::Fire if e.contains(x, y) => r_fire -= 5.0,
                    _ => {}
                }
            }
            let victims = ctx.entities.iter_mut().filter(|e| e.kind == EntityKind::Victim);
            for (i, e) in victims.enumerate() {
                let p = ctx.victim_death_probs.get(i).copied().unwrap_or(0.0);
                if e.active && p > 0.0 && rng.random::<f64>() < p {
                    e.active = false;
                }
            }
            ([r_victim, r_fire], false)
        }
        Scenario::Ts => {
            let captured = ctx
                .entities
                .iter_mut()
                .filter(|e| e.active && e.kind == EntityKind::Treasure && e.contains(x, y))
                .min_by(|a, b| {
                    let da = (a.x - x).hypot(a.y - y);
                    let db = (b.x - x).hypot(b.y - y);
                    da.total_cmp(&db)
                });
            match captured {
                Some(t) => {
                    t.active = false;
                    ([-1.0, t.value], true)
                }
                None => ([-1.0, 0.0], false),
            }
        }
        Scenario::Rg => {
            for e in ctx.entities.iter_mut() {
                if e.active && e.kind.is_resource() && e.contains(x, y) {
                    e.active = false;
                    *ctx.carried += 1;
                }
            }
            let home = ctx
                .entities
                .iter()
                .find(|e| e.kind == EntityKind::Home)
                .copied();
            let in_enemy = ctx
                .entities
                .iter()
                .any(|e| e.active && e.kind == EntityKind::Enemy && e.contains(x, y));
            if in_enemy && ctx.enemy_attack_prob > 0.0 && rng.random::<f64>() < ctx.enemy_attack_prob {
                *ctx.carried = 0;
                if let Some(h) = home {
                    ctx.state.x = h.x;
                    ctx.state.y = h.y;
                }
                return ([0.0, -1.0], false);
            }
            match home {
                Some(h) if h.contains(x, y) && *ctx.carried > 0 => {
                    let delivered = *ctx.carried as f64;
                    *ctx.carried = 0;
                    ([delivered, 0.0], true)
                }
                _ => ([0.0, 0.0], false),
            }
        }
    }
}

/// Differential-drive update followed by collision resolution.
///
/// Wheel speeds are `F·D·v_max`; the pose advances as a unicycle over one
/// timestep. The robot is then pushed out of any obstacle it penetrates and
/// clamped inside the arena.
pub fn kinematic_step(state: &RobotState, action: &Action, entities: &[Entity], arena: f64, params: &RobotParams) -> RobotState {
    let vl = action.f_left * action.d_left.sign() * params.max_wheel_speed;
    let vr = action.f_right * action.d_right.sign() * params.max_wheel_speed;
    let v = 0.5 * (vl + vr);
    let omega = (vr - vl) / params.wheel_base;
    let dt = params.timestep;
    let mut next = RobotState {
        x: state.x + v * state.heading.cos() * dt,
        y: state.y + v * state.heading.sin() * dt,
        heading: normalize_angle(state.heading + omega * dt),
        left_rpm: wheel_rpm(vl, params.wheel_radius),
        right_rpm: wheel_rpm(vr, params.wheel_radius),
    };
    resolve_collisions(&mut next, entities, arena, params.body_radius);
    next
}

fn resolve_collisions(state: &mut RobotState, entities: &[Entity], arena: f64, body: f64) {
    for _ in 0..8 {
        let mut moved = false;
        for e in entities.iter().filter(|e| e.kind == EntityKind::Obstacle) {
            let dx = state.x - e.x;
            let dy = state.y - e.y;
            let d = dx.hypot(dy);
            let min = e.radius + body;
            if d < min {
                let (ux, uy) = if d > 1e-12 { (dx / d, dy / d) } else { (1.0, 0.0) };
                state.x = e.x + ux * min;
                state.y = e.y + uy * min;
                moved = true;
            }
        }
        state.x = state.x.clamp(body, arena - body);
        state.y = state.y.clamp(body, arena - body);
        if !moved {
            break;
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: [f64; 2],
    pub done: bool,
}

/// A scenario instance with its own random stream.
#[derive(Debug, Clone)]
pub struct Environment {
    config: ScenarioConfig,
    /// Persistent layout; relocation edits it in place.
    layout: Vec<Entity>,
    /// Per-episode copy whose activity flags change during play.
    entities: Vec<Entity>,
    state: RobotState,
    carried: u32,
    steps: usize,
    done: bool,
    rng: ChaCha8Rng,
}

const SPAWN_ATTEMPTS: usize = 10_000;

impl Environment {
    pub fn new(config: ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = config.entities.clone();
        let state = RobotState::at(config.arena_size / 2.0, config.arena_size / 2.0, 0.0);
        Ok(Self {
            entities: layout.clone(),
            layout,
            config,
            state,
            carried: 0,
            steps: 0,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn layout(&self) -> &[Entity] {
        &self.layout
    }

    pub fn carried(&self) -> u32 {
        self.carried
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts episode `episode_index` (zero based). In a non-stationary
    /// configuration the layout is relocated first whenever the index is a
    /// positive multiple of the relocation period.
    pub fn reset(&mut self, episode_index: usize) -> Result<Observation> {
        let c = &self.config;
        if c.nonstationary && episode_index > 0 && episode_index.is_multiple_of(c.relocation_period) {
            self.layout = relocate_entities(&self.layout, c.relocation_fraction, c.arena_size, &mut self.rng)?;
        }
        self.entities = self.layout.clone();
        for e in &mut self.entities {
            e.active = true;
        }
        self.state = self.spawn()?;
        self.carried = 0;
        self.steps = 0;
        self.done = false;
        Ok(self.observe())
    }

    /// Places the robot at a given pose, for scripted tests and evaluation.
    pub fn place(&mut self, state: RobotState) -> Observation {
        self.state = state;
        self.observe()
    }

    fn spawn(&mut self) -> Result<RobotState> {
        let s = self.config.spawn;
        let body = self.config.robot.body_radius;
        let arena = self.config.arena_size;
        for _ in 0..SPAWN_ATTEMPTS {
            let x = sample_range(&mut self.rng, s.x_min, s.x_max);
            let y = sample_range(&mut self.rng, s.y_min, s.y_max);
            let heading = self.rng.random_range(-PI..PI);
            if x < body || y < body || x > arena - body || y > arena - body {
                continue;
            }
            let blocked = self
                .entities
                .iter()
                .filter(|e| e.kind != EntityKind::Home)
                .any(|e| e.overlaps(x, y, body));
            if !blocked {
                return Ok(RobotState::at(x, y, heading));
            }
        }
        Err(Error::Config("no free spawn position in the spawn region".into()))
    }

    pub fn observe(&self) -> Observation {
        Observation {
            proximity: sense_proximity(&self.state, &self.entities, self.config.arena_size, &self.config.robot),
            camera: render_camera(&self.state, &self.entities, &self.config.robot),
        }
    }

    /// Advances one timestep.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Precondition("step called on a finished episode".into()));
        }
        let c = &self.config;
        self.state = kinematic_step(&self.state, action, &self.entities, c.arena_size, &c.robot);
        let (reward, terminal) = scenario_rewards(
            TransitionContext {
                scenario: c.scenario,
                state: &mut self.state,
                entities: &mut self.entities,
                carried: &mut self.carried,
                victim_death_probs: &c.victim_death_probs,
                enemy_attack_prob: c.enemy_attack_prob,
            },
            &mut self.rng,
        );
        self.steps += 1;
        self.done = terminal || self.steps >= self.config.episode_length;
        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            done: self.done,
        })
    }
}

fn sample_range<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

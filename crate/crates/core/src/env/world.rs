use std::cmp::Ordering;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::collision::OrientedRect;
use super::traffic::{self, Occupant, TrafficVehicle};
use super::{
    ego_controller, ego_target_lane, Action, LaneGeometry, LaneKeeping, RewardConfig,
    TrafficConfig,
};
use crate::kinematics::{
    integrate_step, relative_state, KinematicsError, KinematicsParams, VehicleState,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid environment configuration: {0}")]
    Config(String),
    #[error("episode already finished; call reset first")]
    EpisodeFinished,
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Everything that shapes an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig {
    pub kinematics: KinematicsParams,
    pub road: LaneGeometry,
    pub traffic: TrafficConfig,
    pub reward: RewardConfig,
    pub lane_keeping: LaneKeeping,
    /// Decision steps per episode.
    pub horizon: usize,
    /// Kinematic substeps per decision step.
    pub substeps: usize,
    /// Acceleration magnitude of the ACCELERATE / DECELERATE actions (m/s²).
    pub ego_accel: f64,
    pub ego_speed_range: (f64, f64),
    pub ego_start_lane: u8,
    /// Neighbour slots in the observation.
    pub neighbors: usize,
    pub obs_range: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            kinematics: KinematicsParams::default(),
            road: LaneGeometry::default(),
            traffic: TrafficConfig::default(),
            reward: RewardConfig::default(),
            lane_keeping: LaneKeeping::default(),
            horizon: 20,
            substeps: 10,
            ego_accel: 3.0,
            ego_speed_range: (23.0, 25.0),
            ego_start_lane: 2,
            neighbors: 6,
            obs_range: 100.0,
        }
    }
}

impl EnvConfig {
    pub fn obs_dim(&self) -> usize {
        2 + 4 * self.neighbors
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        fn bad(msg: &str) -> Result<(), EnvError> {
            Err(EnvError::Config(msg.to_string()))
        }
        self.kinematics.validate()?;
        let t = &self.traffic;
        let (gap_lo, gap_hi) = t.spawn_gap_range;
        if !(gap_lo > 0.0 && gap_lo <= gap_hi) {
            return bad("spawn_gap_range must satisfy 0 < lo <= hi");
        }
        if gap_lo <= VehicleState::DEFAULT_LENGTH {
            return bad("spawn gaps shorter than a vehicle cannot fit the traffic without overlap");
        }
        let (v_lo, v_hi) = t.traffic_speed_range;
        if !(v_lo >= self.kinematics.v_min && v_lo <= v_hi && v_hi <= self.kinematics.v_max) {
            return bad("traffic_speed_range must lie within [v_min, v_max]");
        }
        let (e_lo, e_hi) = self.ego_speed_range;
        if !(e_lo >= self.kinematics.v_min && e_lo <= e_hi && e_hi <= self.kinematics.v_max) {
            return bad("ego_speed_range must lie within [v_min, v_max]");
        }
        if !(0.0..=1.0).contains(&t.lane_change_prob) {
            return bad("lane_change_prob must be in [0, 1]");
        }
        if !(t.safe_gap_front > 0.0 && t.safe_gap_rear > 0.0) {
            return bad("safe gaps must be positive");
        }
        if self.road.num_lanes == 0 || !(self.road.lane_width > 0.0) {
            return bad("road needs at least one lane of positive width");
        }
        if !self.road.contains_lane(self.ego_start_lane) {
            return bad("ego_start_lane is not a lane of the road");
        }
        if !(self.reward.collision_penalty < 0.0) {
            return bad("collision_penalty must be negative");
        }
        if !(self.reward.v_ref_min < self.reward.v_ref_max) {
            return bad("need v_ref_min < v_ref_max");
        }
        if self.horizon == 0 || self.substeps == 0 {
            return bad("horizon and substeps must be positive");
        }
        let lk = &self.lane_keeping;
        if !(self.obs_range > 0.0 && lk.lookahead_min > 0.0 && lk.lookahead_time >= 0.0) {
            return bad("obs_range and lookahead_min must be positive, lookahead_time non-negative");
        }
        Ok(())
    }
}

/// Flat observation vector.
///
/// Layout: `[v / v_max, y / road_width]` followed by one block
/// `[present, dx / obs_range, dy / road_width, dv / v_max]` per neighbour slot,
/// nearest `|dx|` first, unused slots zero. `dx` is clipped to `±obs_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Observation {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub collided: bool,
    /// Longitudinal distance covered since reset (m).
    pub distance_m: f64,
    /// Time-averaged ego speed since reset (m/s).
    pub mean_speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Episode state of the highway. One instance is driven by one thread.
#[derive(Debug, Clone, PartialEq)]
pub struct HighwayWorld {
    config: EnvConfig,
    ego: VehicleState,
    ego_target_lane: u8,
    others: Vec<TrafficVehicle>,
    step_index: usize,
    rng: ChaCha8Rng,
    start_x: f64,
    speed_sum: f64,
    speed_samples: usize,
    collided: bool,
    done: bool,
}

impl HighwayWorld {
    /// Builds a world and resets it with seed 0.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let ego = VehicleState::new(0.0, 0.0, 0.0, &config.road);
        let mut world = Self {
            config,
            ego,
            ego_target_lane: ego.lane,
            others: Vec::new(),
            step_index: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            start_x: 0.0,
            speed_sum: 0.0,
            speed_samples: 0,
            collided: false,
            done: false,
        };
        world.reset(0);
        Ok(world)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Starts a new episode. All randomness of the episode derives from `seed`.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let cfg = &self.config;
        let road = cfg.road;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let v0 = uniform(&mut self.rng, cfg.ego_speed_range);
        self.ego = VehicleState::new(0.0, road.lane_center(cfg.ego_start_lane), v0, &road);
        self.ego_target_lane = cfg.ego_start_lane;

        self.others.clear();
        for lane in 1..=road.num_lanes {
            let mut x = self.ego.x;
            for _ in 0..cfg.traffic.n_per_lane {
                x += uniform(&mut self.rng, cfg.traffic.spawn_gap_range);
                let v = uniform(&mut self.rng, cfg.traffic.traffic_speed_range);
                let state = VehicleState::new(x, road.lane_center(lane), v, &road);
                self.others.push(TrafficVehicle::cruising(state));
            }
        }

        self.step_index = 0;
        self.start_x = self.ego.x;
        self.speed_sum = 0.0;
        self.speed_samples = 0;
        self.collided = false;
        self.done = false;
        self.observe()
    }

    /// Advances one decision period holding `action`.
    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let road = self.config.road;
        self.ego_target_lane = ego_target_lane(action, self.ego_target_lane, &road);
        self.decide_traffic_lane_changes();

        for _ in 0..self.config.substeps {
            self.substep(action);
            self.speed_sum += self.ego.v;
            self.speed_samples += 1;
            if self.check_collision() {
                self.collided = true;
                break;
            }
        }

        self.step_index += 1;
        self.done = self.collided || self.step_index >= self.config.horizon;
        let reward = self.config.reward.reward(self.ego.v, self.collided);
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.done,
            info: self.info(),
        })
    }

    fn decide_traffic_lane_changes(&mut self) {
        let road = self.config.road;
        let mut occupants = self.occupants();
        for i in 0..self.others.len() {
            if !self.others[i].is_settled(&road) {
                continue;
            }
            // ego is occupant 0
            let slot = i + 1;
            if let Some(lane) =
                traffic::decide_lane_change(&occupants, slot, &road, &self.config.traffic, &mut self.rng)
            {
                self.others[i].target_lane = lane;
                occupants[slot].target_lane = lane;
            }
        }
    }

    /// Controls are computed from the pre-substep state for every vehicle, then all
    /// vehicles are integrated together.
    fn substep(&mut self, action: Action) {
        let cfg = &self.config;
        let occupants = self.occupants();
        let (ego_accel, ego_delta) = ego_controller(
            action,
            &self.ego,
            self.ego_target_lane,
            cfg.ego_accel,
            &cfg.lane_keeping,
            &cfg.road,
            &cfg.kinematics,
        );
        let commands: Vec<(f64, f64)> = self
            .others
            .iter()
            .enumerate()
            .map(|(i, veh)| {
                let (front_here, _) = traffic::lane_gaps(&occupants, i + 1, veh.state.lane);
                let (front_there, _) = traffic::lane_gaps(&occupants, i + 1, veh.target_lane);
                let accel = traffic::longitudinal_accel(
                    veh.state.v,
                    veh.target_speed,
                    front_here.min(front_there),
                    &cfg.traffic,
                );
                let delta = cfg
                    .lane_keeping
                    .steer(&veh.state, veh.target_lane, &cfg.road, &cfg.kinematics);
                (accel, delta)
            })
            .collect();

        self.ego = integrate_step(&self.ego, ego_accel, ego_delta, &cfg.kinematics, &cfg.road);
        for (veh, (accel, delta)) in self.others.iter_mut().zip(commands) {
            veh.state = integrate_step(&veh.state, accel, delta, &cfg.kinematics, &cfg.road);
        }
    }

    /// Ego first, then traffic in storage order.
    fn occupants(&self) -> Vec<Occupant> {
        std::iter::once(Occupant::new(&self.ego, self.ego_target_lane))
            .chain(self.others.iter().map(|v| Occupant::new(&v.state, v.target_lane)))
            .collect()
    }

    /// Ego body overlaps another vehicle, or the ego centre has left the road.
    pub fn check_collision(&self) -> bool {
        let (lo, hi) = self.config.road.lateral_bounds();
        if self.ego.y < lo || self.ego.y > hi {
            return true;
        }
        let ego_rect = OrientedRect::of_vehicle(&self.ego);
        self.others
            .iter()
            .any(|o| ego_rect.intersects(&OrientedRect::of_vehicle(&o.state)))
    }

    pub fn observe(&self) -> Observation {
        let cfg = &self.config;
        let v_max = cfg.kinematics.v_max;
        let road_width = cfg.road.road_width();
        let mut obs = Vec::with_capacity(cfg.obs_dim());
        obs.push(self.ego.v / v_max);
        obs.push(self.ego.y / road_width);

        let mut rel: Vec<_> = self
            .others
            .iter()
            .map(|o| relative_state(&self.ego, &o.state))
            .collect();
        rel.sort_by(|a, b| {
            a.dx.abs()
                .total_cmp(&b.dx.abs())
                .then_with(|| a.dx.total_cmp(&b.dx))
                .then_with(|| a.dy.total_cmp(&b.dy))
                .then_with(|| a.dv.total_cmp(&b.dv))
                .then(Ordering::Equal)
        });
        for r in rel.iter().take(cfg.neighbors) {
            obs.push(1.0);
            obs.push(r.dx.clamp(-cfg.obs_range, cfg.obs_range) / cfg.obs_range);
            obs.push(r.dy / road_width);
            obs.push(r.dv / v_max);
        }
        obs.resize(cfg.obs_dim(), 0.0);
        Observation(obs)
    }

    pub fn info(&self) -> StepInfo {
        StepInfo {
            collided: self.collided,
            distance_m: self.ego.x - self.start_x,
            mean_speed_mps: if self.speed_samples == 0 {
                self.ego.v
            } else {
                self.speed_sum / self.speed_samples as f64
            },
        }
    }

    pub fn ego(&self) -> &VehicleState {
        &self.ego
    }

    /// Direct access for scenario construction; the observation is not refreshed.
    pub fn ego_mut(&mut self) -> &mut VehicleState {
        &mut self.ego
    }

    pub fn ego_target_lane(&self) -> u8 {
        self.ego_target_lane
    }

    pub fn traffic(&self) -> &[TrafficVehicle] {
        &self.others
    }

    /// Direct access for scenario construction.
    pub fn traffic_mut(&mut self) -> &mut Vec<TrafficVehicle> {
        &mut self.others
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Plain-text snapshot: one row per lane, 2 m per column, `E` for the ego and `o`
    /// for traffic, from 20 m behind to 100 m ahead of the ego.
    pub fn render(&self) -> String {
        const BEHIND: f64 = 20.0;
        const COLUMN: f64 = 2.0;
        const COLUMNS: usize = 60;
        let road = &self.config.road;
        let mut rows = vec![vec!['.'; COLUMNS]; usize::from(road.num_lanes)];
        let mut mark = |v: &VehicleState, c: char| {
            let col = ((v.x - self.ego.x + BEHIND) / COLUMN).floor();
            if col >= 0.0 && (col as usize) < COLUMNS {
                rows[usize::from(v.lane - 1)][col as usize] = c;
            }
        };
        for o in &self.others {
            mark(&o.state, 'o');
        }
        mark(&self.ego, 'E');
        let mut out = String::new();
        for (i, row) in rows.iter().enumerate() {
            out.push_str(&format!("L{} |", i + 1));
            out.extend(row.iter());
            out.push_str("|\n");
        }
        out
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

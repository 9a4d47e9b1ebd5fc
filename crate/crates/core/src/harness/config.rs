//! Flat `key = value` run configuration.
//!
//! Every key is optional and defaults to the value in [`RunConfig::default`]. `#` starts
//! a comment. Unknown keys and malformed values are errors.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::agent::AgentConfig;
use crate::env::{EnvConfig, RewardMode};
use crate::nn::{Aggregation, OptimizerKind};
use crate::par::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Complete parameterization of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub episodes: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Episodes between periodic checkpoints; 0 disables them.
    pub checkpoint_every: usize,
    /// Write real wall-clock times to the metrics; off keeps metrics byte-reproducible.
    pub record_wall_time: bool,
    pub parallel: bool,
    /// Trailing moving-average window for reports.
    pub smoothing_window: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            agent: AgentConfig::default(),
            episodes: 2000,
            seed: 0,
            out_dir: PathBuf::from("runs"),
            checkpoint_every: 500,
            record_wall_time: false,
            parallel: true,
            smoothing_window: 100,
        }
    }
}

fn parse<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: Display,
{
    value.parse::<T>().map_err(|e| e.to_string())
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

fn parse_list(value: &str) -> Result<Vec<usize>, String> {
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| parse::<usize>(s.trim())).collect()
}

fn reward_mode_name(mode: RewardMode) -> &'static str {
    match mode {
        RewardMode::Normalized => "normalized",
        RewardMode::SquaredShortfall => "squared_shortfall",
    }
}

impl RunConfig {
    pub fn exec(&self) -> Exec {
        if self.parallel {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        let env = &mut self.env;
        let agent = &mut self.agent;
        match key {
            "wheelbase_l" => env.kinematics.l = parse(value)?,
            "dt" => env.kinematics.dt = parse(value)?,
            "v_min" => env.kinematics.v_min = parse(value)?,
            "v_max" => env.kinematics.v_max = parse(value)?,
            "delta_max" => env.kinematics.delta_max = parse(value)?,
            "lane_width" => env.road.lane_width = parse(value)?,
            "n_per_lane" => env.traffic.n_per_lane = parse(value)?,
            "spawn_gap_min" => env.traffic.spawn_gap_range.0 = parse(value)?,
            "spawn_gap_max" => env.traffic.spawn_gap_range.1 = parse(value)?,
            "traffic_speed_min" => env.traffic.traffic_speed_range.0 = parse(value)?,
            "traffic_speed_max" => env.traffic.traffic_speed_range.1 = parse(value)?,
            "lane_change_prob" => env.traffic.lane_change_prob = parse(value)?,
            "safe_gap_front" => env.traffic.safe_gap_front = parse(value)?,
            "safe_gap_rear" => env.traffic.safe_gap_rear = parse(value)?,
            "traffic_speed_gain" => env.traffic.speed_gain = parse(value)?,
            "traffic_accel_limit" => env.traffic.accel_limit = parse(value)?,
            "traffic_hard_brake" => env.traffic.hard_brake = parse(value)?,
            "reward_mode" => {
                env.reward.mode = match value {
                    "normalized" => RewardMode::Normalized,
                    "squared_shortfall" => RewardMode::SquaredShortfall,
                    _ => return Err("expected normalized or squared_shortfall".into()),
                }
            }
            "collision_penalty" => env.reward.collision_penalty = parse(value)?,
            "v_ref_max" => env.reward.v_ref_max = parse(value)?,
            "v_ref_min" => env.reward.v_ref_min = parse(value)?,
            "k_lat" => env.lane_keeping.k_lat = parse(value)?,
            "lookahead_time" => env.lane_keeping.lookahead_time = parse(value)?,
            "lookahead_min" => env.lane_keeping.lookahead_min = parse(value)?,
            "k_head" => env.lane_keeping.k_head = parse(value)?,
            "horizon" => env.horizon = parse(value)?,
            "substeps" => env.substeps = parse(value)?,
            "ego_accel" => env.ego_accel = parse(value)?,
            "ego_speed_min" => env.ego_speed_range.0 = parse(value)?,
            "ego_speed_max" => env.ego_speed_range.1 = parse(value)?,
            "ego_start_lane" => env.ego_start_lane = parse(value)?,
            "neighbors" => env.neighbors = parse(value)?,
            "obs_range" => env.obs_range = parse(value)?,
            "algo" => agent.algo = parse(value)?,
            "gamma" => agent.gamma = parse(value)?,
            "batch_size" => agent.batch_size = parse(value)?,
            "buffer_capacity" => agent.buffer_capacity = parse(value)?,
            "target_sync_every" => agent.target_sync_every = parse(value)?,
            "learn_start" => agent.learn_start = parse(value)?,
            "hidden" => agent.hidden = parse_list(value)?,
            "aggregation" => {
                agent.aggregation = match value {
                    "max" => Aggregation::Max,
                    "mean" => Aggregation::Mean,
                    _ => return Err("expected max or mean".into()),
                }
            }
            "optimizer" => {
                agent.optimizer = match value {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    _ => return Err("expected adam or sgd".into()),
                }
            }
            "learning_rate" => agent.learning_rate = parse(value)?,
            "eps_start" => agent.epsilon.eps_start = parse(value)?,
            "eps_end" => agent.epsilon.eps_end = parse(value)?,
            "eps_tau" => agent.epsilon.tau = parse(value)?,
            "episodes" => self.episodes = parse(value)?,
            "seed" => self.seed = parse(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "checkpoint_every" => self.checkpoint_every = parse(value)?,
            "record_wall_time" => self.record_wall_time = parse_bool(value)?,
            "parallel" => self.parallel = parse_bool(value)?,
            "smoothing_window" => self.smoothing_window = parse(value)?,
            _ => return Err(SetError::UnknownKey),
        }
        Ok(())
    }

    /// Every key with its current value, in a stable order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let e = &self.env;
        let a = &self.agent;
        let hidden = if a.hidden.is_empty() {
            "none".to_string()
        } else {
            a.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(",")
        };
        vec![
            ("wheelbase_l", e.kinematics.l.to_string()),
            ("dt", e.kinematics.dt.to_string()),
            ("v_min", e.kinematics.v_min.to_string()),
            ("v_max", e.kinematics.v_max.to_string()),
            ("delta_max", e.kinematics.delta_max.to_string()),
            ("lane_width", e.road.lane_width.to_string()),
            ("n_per_lane", e.traffic.n_per_lane.to_string()),
            ("spawn_gap_min", e.traffic.spawn_gap_range.0.to_string()),
            ("spawn_gap_max", e.traffic.spawn_gap_range.1.to_string()),
            ("traffic_speed_min", e.traffic.traffic_speed_range.0.to_string()),
            ("traffic_speed_max", e.traffic.traffic_speed_range.1.to_string()),
            ("lane_change_prob", e.traffic.lane_change_prob.to_string()),
            ("safe_gap_front", e.traffic.safe_gap_front.to_string()),
            ("safe_gap_rear", e.traffic.safe_gap_rear.to_string()),
            ("traffic_speed_gain", e.traffic.speed_gain.to_string()),
            ("traffic_accel_limit", e.traffic.accel_limit.to_string()),
            ("traffic_hard_brake", e.traffic.hard_brake.to_string()),
            ("reward_mode", reward_mode_name(e.reward.mode).to_string()),
            ("collision_penalty", e.reward.collision_penalty.to_string()),
            ("v_ref_max", e.reward.v_ref_max.to_string()),
            ("v_ref_min", e.reward.v_ref_min.to_string()),
            ("k_lat", e.lane_keeping.k_lat.to_string()),
            ("lookahead_time", e.lane_keeping.lookahead_time.to_string()),
            ("lookahead_min", e.lane_keeping.lookahead_min.to_string()),
            ("k_head", e.lane_keeping.k_head.to_string()),
            ("horizon", e.horizon.to_string()),
            ("substeps", e.substeps.to_string()),
            ("ego_accel", e.ego_accel.to_string()),
            ("ego_speed_min", e.ego_speed_range.0.to_string()),
            ("ego_speed_max", e.ego_speed_range.1.to_string()),
            ("ego_start_lane", e.ego_start_lane.to_string()),
            ("neighbors", e.neighbors.to_string()),
            ("obs_range", e.obs_range.to_string()),
            ("algo", a.algo.to_string()),
            ("gamma", a.gamma.to_string()),
            ("batch_size", a.batch_size.to_string()),
            ("buffer_capacity", a.buffer_capacity.to_string()),
            ("target_sync_every", a.target_sync_every.to_string()),
            ("learn_start", a.learn_start.to_string()),
            ("hidden", hidden),
            (
                "aggregation",
                match a.aggregation {
                    Aggregation::Max => "max",
                    Aggregation::Mean => "mean",
                }
                .to_string(),
            ),
            (
                "optimizer",
                match a.optimizer {
                    OptimizerKind::Adam => "adam",
                    OptimizerKind::Sgd => "sgd",
                }
                .to_string(),
            ),
            ("learning_rate", a.learning_rate.to_string()),
            ("eps_start", a.epsilon.eps_start.to_string()),
            ("eps_end", a.epsilon.eps_end.to_string()),
            ("eps_tau", a.epsilon.tau.to_string()),
            ("episodes", self.episodes.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("record_wall_time", self.record_wall_time.to_string()),
            ("parallel", self.parallel.to_string()),
            ("smoothing_window", self.smoothing_window.to_string()),
        ]
    }

    /// Parses a configuration document on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.into(),
                });
            }
            cfg.set(key, value).map_err(|e| match e {
                SetError::UnknownKey => ConfigError::UnknownKey {
                    line,
                    key: key.into(),
                },
                SetError::BadValue(msg) => ConfigError::BadValue {
                    line,
                    key: key.into(),
                    msg,
                },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.agent.validate().map_err(ConfigError::Invalid)?;
        if self.episodes == 0 {
            return Err(ConfigError::Invalid("episodes must be positive".into()));
        }
        if self.smoothing_window == 0 {
            return Err(ConfigError::Invalid("smoothing_window must be positive".into()));
        }
        Ok(())
    }

    /// The configuration as a document that [`RunConfig::parse`] reads back exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# highway run configuration\n");
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SetError {
    #[error("unknown key")]
    UnknownKey,
    #[error("{0}")]
    BadValue(String),
}

impl From<String> for SetError {
    fn from(msg: String) -> Self {
        SetError::BadValue(msg)
    }
}

impl From<&str> for SetError {
    fn from(msg: &str) -> Self {
        SetError::BadValue(msg.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Algo;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.agent.hidden = vec![64, 32, 16];
        cfg.agent.algo = Algo::Dqn;
        cfg.agent.learning_rate = 3.3e-4;
        cfg.env.reward.mode = RewardMode::SquaredShortfall;
        cfg.env.kinematics.delta_max = 0.1 + 0.2;
        cfg.seed = u64::MAX;
        cfg.parallel = false;
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        cfg.agent.hidden.clear();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn entries_cover_every_settable_key() {
        let cfg = RunConfig::default();
        let mut scratch = RunConfig::default();
        for (k, v) in cfg.entries() {
            scratch.set(k, &v).unwrap_or_else(|e| panic!("{k}: {e}"));
        }
        assert_eq!(scratch, cfg);
    }

    #[test]
    fn values_and_comments() {
        let cfg = RunConfig::parse("episodes = 5 # short\nalgo=dqn\nhidden = 64, 64\n").unwrap();
        assert_eq!(cfg.episodes, 5);
        assert_eq!(cfg.agent.algo, Algo::Dqn);
        assert_eq!(cfg.agent.hidden, vec![64, 64]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            RunConfig::parse("bogus = 1"),
            Err(ConfigError::UnknownKey { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("\nepisodes = lots"),
            Err(ConfigError::BadValue { line: 2, .. })
        ));
        assert!(matches!(RunConfig::parse("episodes"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(
            RunConfig::parse("seed = 1\nseed = 2"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(RunConfig::parse("gamma = 1.5"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("lane_change_prob = 2"), Err(ConfigError::Invalid(_))));
    }
}

//! The three-lane highway MDP.

mod action;
pub mod collision;
mod controller;
mod reward;
mod road;
pub mod traffic;
mod world;

pub use action::{Action, InvalidAction};
pub use collision::OrientedRect;
pub use controller::{ego_controller, ego_target_lane, LaneKeeping};
pub use reward::{RewardConfig, RewardMode};
pub use road::LaneGeometry;
pub use traffic::TrafficConfig;
pub use world::{EnvConfig, EnvError, HighwayWorld, Observation, StepInfo, StepResult};

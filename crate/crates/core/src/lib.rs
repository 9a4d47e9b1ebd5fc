//! Highway overtaking decision making with deep Q-learning.
//!
//! The crate is split along the lines of the system it models:
//!
//! * [`kinematics`] is the kinematic bicycle model every vehicle follows.
//! * [`env`] is the three-lane highway MDP: traffic, collisions, observations, reward.
//! * [`nn`] is a small dense Q-network with an optional dueling head, written out by hand.
//! * [`agent`] holds the replay buffer, exploration schedule, Bellman targets and TD updates.
//! * [`harness`] runs experiments: configuration files, training, evaluation, comparison,
//!   metrics CSVs and checkpoints.
//!
//! Batch-shaped work (per-sample gradients, evaluation episodes, comparison cells) goes
//! through [`par::Exec`], which uses rayon when the `parallel` feature is on and a plain
//! loop otherwise. Both paths produce bitwise-identical results.

// `!(x > 0.0)` style checks are deliberate: they reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod env;
pub mod harness;
pub mod kinematics;
pub mod nn;
pub mod par;

pub use agent::{Agent, AgentConfig, Algo, EpsilonSchedule, ReplayBuffer, Transition};
pub use env::{Action, EnvConfig, HighwayWorld, Observation, StepResult};
pub use kinematics::{KinematicsParams, VehicleState};
pub use nn::{HeadKind, Optimizer, QFunctionNet};
pub use par::Exec;

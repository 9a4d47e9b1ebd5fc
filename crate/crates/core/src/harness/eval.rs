//! Greedy evaluation of a trained network.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::metrics::format_float;
use super::HarnessError;
use crate::agent::greedy_action;
use crate::env::{Action, EnvConfig, HighwayWorld};
use crate::nn::QFunctionNet;
use crate::par::Exec;

/// Evaluation seeds come from their own stream so they never coincide with the
/// episode seeds a training run with the same master seed used.
const EVAL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode {
    pub seed: u64,
    pub total_reward: f64,
    pub steps: usize,
    pub distance_m: f64,
    pub mean_speed_mps: f64,
    pub collided: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub mean_return: f64,
    pub collision_rate: f64,
    pub mean_speed_mps: f64,
    pub mean_distance_m: f64,
    pub episodes: Vec<EvalEpisode>,
}

impl EvalSummary {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "episodes = {}\nmean_return = {}\ncollision_rate = {}\nmean_speed_mps = {}\nmean_distance_m = {}\n",
            self.episodes.len(),
            format_float(self.mean_return),
            format_float(self.collision_rate),
            format_float(self.mean_speed_mps),
            format_float(self.mean_distance_m),
        );
        out.push_str("\nepisode,seed,total_reward,steps,distance_m,mean_speed_mps,collided\n");
        for (i, e) in self.episodes.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                i + 1,
                e.seed,
                format_float(e.total_reward),
                e.steps,
                format_float(e.distance_m),
                format_float(e.mean_speed_mps),
                u8::from(e.collided)
            ));
        }
        out
    }
}

fn run_episode(net: &QFunctionNet, world: &mut HighwayWorld, seed: u64) -> Result<EvalEpisode, HarnessError> {
    let mut obs = world.reset(seed);
    let mut total_reward = 0.0;
    let mut steps = 0;
    loop {
        let a = greedy_action(net, &obs)?;
        let r = world.step(Action::from_code(a)?)?;
        total_reward += r.reward;
        steps += 1;
        obs = r.observation;
        if r.done {
            return Ok(EvalEpisode {
                seed,
                total_reward,
                steps,
                distance_m: r.info.distance_m,
                mean_speed_mps: r.info.mean_speed_mps,
                collided: r.info.collided,
            });
        }
    }
}

/// Runs `episodes` greedy episodes (ε = 0) with seeds drawn from `seed`.
pub fn evaluate(
    net: &QFunctionNet,
    env: &EnvConfig,
    episodes: usize,
    seed: u64,
    exec: Exec,
) -> Result<EvalSummary, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::Usage("evaluation needs at least one episode".into()));
    }
    if net.input_dim() != env.obs_dim() || net.n_actions() != Action::COUNT {
        return Err(HarnessError::Usage(format!(
            "network maps {} inputs to {} actions; the environment needs {} to {}",
            net.input_dim(),
            net.n_actions(),
            env.obs_dim(),
            Action::COUNT
        )));
    }
    let world = HighwayWorld::new(*env)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(EVAL_STREAM);
    let seeds: Vec<u64> = (0..episodes).map(|_| rng.next_u64()).collect();
    let rows = exec
        .map(&seeds, |&s| run_episode(net, &mut world.clone(), s))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let n = rows.len() as f64;
    let mean = |f: fn(&EvalEpisode) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(EvalSummary {
        mean_return: mean(|e| e.total_reward),
        collision_rate: mean(|e| f64::from(u8::from(e.collided))),
        mean_speed_mps: mean(|e| e.mean_speed_mps),
        mean_distance_m: mean(|e| e.distance_m),
        episodes: rows,
    })
}

/// Loads a checkpoint and evaluates its network in the environment it was trained on.
pub fn cmd_eval(checkpoint: &Path, episodes: usize, seed: u64) -> Result<EvalSummary, HarnessError> {
    let ck = Checkpoint::load(checkpoint).map_err(|e| match e {
        super::CheckpointError::Io(io) => HarnessError::io(checkpoint, io),
        other => other.into(),
    })?;
    evaluate(&ck.net, &ck.config.env, episodes, seed, ck.config.exec())
}

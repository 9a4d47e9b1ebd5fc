//! The training loop and the `train` command.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::Checkpoint;
use super::config::RunConfig;
use super::metrics::{EpisodeMetrics, METRICS_HEADER};
use super::HarnessError;
use crate::agent::{Agent, Transition};
use crate::env::{Action, HighwayWorld};
use crate::par::Exec;

const ENV_STREAM: u64 = 1;
const AGENT_STREAM: u64 = 2;

/// Independent environment and agent streams derived from the master seed. Episode
/// seeds come from the first, network init, exploration and replay sampling from the
/// second, so the algorithm never perturbs the traffic an episode sees.
pub fn seed_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut env = ChaCha8Rng::seed_from_u64(seed);
    env.set_stream(ENV_STREAM);
    let mut agent = ChaCha8Rng::seed_from_u64(seed);
    agent.set_stream(AGENT_STREAM);
    (env, agent)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<EpisodeMetrics>,
    pub agent: Agent,
}

impl TrainOutcome {
    pub fn checkpoint(&self, config: &RunConfig) -> Checkpoint {
        Checkpoint {
            config: config.clone(),
            net: self.agent.net().clone(),
            optimizer: self.agent.optimizer().clone(),
            global_step: self.agent.env_steps(),
        }
    }
}

/// Runs `config.episodes` episodes. `on_episode` sees every finished row together with
/// the agent; an error from it stops training.
pub fn train_with<F>(config: &RunConfig, exec: Exec, mut on_episode: F) -> Result<TrainOutcome, HarnessError>
where
    F: FnMut(&EpisodeMetrics, &Agent) -> Result<(), HarnessError>,
{
    config.validate()?;
    let (mut env_rng, agent_rng) = seed_streams(config.seed);
    let mut world = HighwayWorld::new(config.env)?;
    let mut agent =
        Agent::new(config.agent.clone(), config.env.obs_dim(), Action::COUNT, agent_rng)?.with_exec(exec);
    let mut metrics = Vec::with_capacity(config.episodes);

    for episode in 1..=config.episodes {
        let started = Instant::now();
        let mut obs = world.reset(env_rng.next_u64()).into_inner();
        let mut total_reward = 0.0;
        let mut steps = 0;
        let mut td_sum = 0.0;
        let mut updates = 0usize;
        let info = loop {
            let a = agent.act(&obs)?;
            let result = world.step(Action::from_code(a)?)?;
            let s_next = result.observation.into_inner();
            agent.remember(Transition {
                s: std::mem::take(&mut obs),
                a,
                r: result.reward,
                s_next: s_next.clone(),
                done: result.done,
            });
            if let Some(stats) = agent.learn()? {
                td_sum += stats.mean_abs;
                updates += 1;
            }
            total_reward += result.reward;
            steps += 1;
            obs = s_next;
            if result.done {
                break result.info;
            }
        };
        let row = EpisodeMetrics {
            episode,
            total_reward,
            steps,
            distance_m: info.distance_m,
            mean_speed_mps: info.mean_speed_mps,
            collided: info.collided,
            epsilon: agent.epsilon(),
            mean_td_error: (updates > 0).then(|| td_sum / updates as f64),
            wall_ms: if config.record_wall_time {
                started.elapsed().as_millis() as u64
            } else {
                0
            },
        };
        on_episode(&row, &agent)?;
        metrics.push(row);
    }
    Ok(TrainOutcome { metrics, agent })
}

pub fn train(config: &RunConfig) -> Result<TrainOutcome, HarnessError> {
    train_with(config, config.exec(), |_, _| Ok(()))
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), HarnessError> {
    ck.save(path).map_err(|e| match e {
        super::CheckpointError::Io(io) => HarnessError::io(path, io),
        other => other.into(),
    })
}

/// Trains and writes `config.txt`, `metrics.csv` (flushed after every row),
/// `checkpoint_ep<N>.txt` every `checkpoint_every` episodes and `checkpoint_final.txt`
/// into `config.out_dir`.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutcome, HarnessError> {
    run_into_dir(config, config.exec())
}

pub(crate) fn run_into_dir(config: &RunConfig, exec: Exec) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let config_path = dir.join("config.txt");
    fs::write(&config_path, config.to_text()).map_err(|e| HarnessError::io(&config_path, e))?;

    let metrics_path = dir.join("metrics.csv");
    let file = fs::File::create(&metrics_path).map_err(|e| HarnessError::io(&metrics_path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{METRICS_HEADER}")
        .and_then(|_| out.flush())
        .map_err(|e| HarnessError::io(&metrics_path, e))?;

    let outcome = train_with(config, exec, |row, agent| {
        writeln!(out, "{}", row.csv_row())
            .and_then(|_| out.flush())
            .map_err(|e| HarnessError::io(&metrics_path, e))?;
        if config.checkpoint_every > 0 && row.episode % config.checkpoint_every == 0 {
            let ck = Checkpoint {
                config: config.clone(),
                net: agent.net().clone(),
                optimizer: agent.optimizer().clone(),
                global_step: agent.env_steps(),
            };
            write_checkpoint(&dir.join(format!("checkpoint_ep{}.txt", row.episode)), &ck)?;
        }
        Ok(())
    })?;
    write_checkpoint(&dir.join("checkpoint_final.txt"), &outcome.checkpoint(config))?;
    Ok(outcome)
}

//! Deep Q-learning agent: replay, exploration, Bellman targets and target-network sync.

mod replay;
mod schedule;
mod td;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{Aggregation, HeadKind, NnError, Optimizer, OptimizerKind, QFunctionNet};
use crate::par::Exec;

pub use replay::{ReplayBuffer, Transition};
pub use schedule::EpsilonSchedule;
pub use td::{
    bellman_target, discounted_return, greedy_action, select_action, sync_target, td_gradient,
    td_update, TdStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Dqn,
    Ddqn,
}

impl Algo {
    pub const ALL: [Algo; 2] = [Algo::Dqn, Algo::Ddqn];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Dqn => "dqn",
            Algo::Ddqn => "ddqn",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dqn" => Ok(Algo::Dqn),
            "ddqn" => Ok(Algo::Ddqn),
            other => Err(format!("unknown algo `{other}` (expected dqn or ddqn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub algo: Algo,
    /// Discount factor.
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps between hard target syncs.
    pub target_sync_every: u64,
    /// Transitions required in the buffer before the first update.
    pub learn_start: usize,
    pub hidden: Vec<usize>,
    pub aggregation: Aggregation,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algo: Algo::Ddqn,
            gamma: 0.8,
            batch_size: 32,
            buffer_capacity: 15_000,
            target_sync_every: 50,
            learn_start: 500,
            hidden: vec![128, 128],
            aggregation: Aggregation::Max,
            optimizer: OptimizerKind::Adam,
            learning_rate: 5e-4,
            epsilon: EpsilonSchedule::default(),
        }
    }
}

impl AgentConfig {
    pub fn head_kind(&self) -> HeadKind {
        match self.algo {
            Algo::Dqn => HeadKind::Plain,
            Algo::Ddqn => HeadKind::Dueling(self.aggregation),
        }
    }

    /// `[obs_dim, hidden...]`
    pub fn layer_dims(&self, obs_dim: usize) -> Vec<usize> {
        std::iter::once(obs_dim).chain(self.hidden.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err("gamma must lie in (0, 1)".into());
        }
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return Err("need 0 < batch_size <= buffer_capacity".into());
        }
        if self.target_sync_every == 0 {
            return Err("target_sync_every must be positive".into());
        }
        if self.hidden.contains(&0) {
            return Err("hidden layer sizes must be positive".into());
        }
        if !(self.learning_rate > 0.0) {
            return Err("learning_rate must be positive".into());
        }
        if !self.epsilon.is_valid() {
            return Err("epsilon schedule needs 1 >= eps_start >= eps_end > 0 and tau > 0".into());
        }
        Ok(())
    }
}

/// Single-owner learning unit: online and target networks, optimizer, replay and rng.
#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    net: QFunctionNet,
    target: QFunctionNet,
    optimizer: Optimizer,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    env_steps: u64,
    grad_steps: u64,
    exec: Exec,
}

impl Agent {
    /// Initializes the online network from `rng` and copies it into the target.
    pub fn new(
        config: AgentConfig,
        obs_dim: usize,
        n_actions: usize,
        mut rng: ChaCha8Rng,
    ) -> Result<Self, NnError> {
        let net = QFunctionNet::new(&config.layer_dims(obs_dim), n_actions, config.head_kind(), &mut rng)?;
        Ok(Self::from_parts(config, net, None, 0, rng))
    }

    /// Rebuilds an agent around existing parameters (e.g. from a checkpoint).
    pub fn from_parts(
        config: AgentConfig,
        net: QFunctionNet,
        optimizer: Option<Optimizer>,
        env_steps: u64,
        rng: ChaCha8Rng,
    ) -> Self {
        let optimizer = optimizer
            .unwrap_or_else(|| Optimizer::new(config.optimizer, config.learning_rate, net.num_params()));
        Self {
            target: net.clone(),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            net,
            optimizer,
            rng,
            env_steps,
            grad_steps: 0,
            exec: Exec::default(),
        }
    }

    /// Agent rng seeded from a plain integer.
    pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn net(&self) -> &QFunctionNet {
        &self.net
    }

    pub fn target_net(&self) -> &QFunctionNet {
        &self.target
    }

    pub fn optimizer(&self) -> &Optimizer {
        &self.optimizer
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon.epsilon_at(self.env_steps)
    }

    /// Epsilon-greedy action at the current exploration rate.
    pub fn act(&mut self, obs: &[f64]) -> Result<usize, NnError> {
        let eps = self.epsilon();
        select_action(&self.net, obs, eps, &mut self.rng)
    }

    pub fn greedy(&self, obs: &[f64]) -> Result<usize, NnError> {
        greedy_action(&self.net, obs)
    }

    /// Stores a transition and advances the environment step counter.
    pub fn remember(&mut self, t: Transition) {
        self.buffer.push(t);
        self.env_steps += 1;
    }

    /// One TD update on a replay sample once enough experience is stored; syncs the
    /// target network every `target_sync_every` updates.
    pub fn learn(&mut self) -> Result<Option<TdStats>, NnError> {
        let needed = self.config.learn_start.max(self.config.batch_size);
        if self.buffer.len() < needed {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.config.batch_size, &mut self.rng);
        let stats = td_update(
            &mut self.net,
            &self.target,
            &batch,
            &mut self.optimizer,
            self.config.gamma,
            self.exec,
        )?;
        self.grad_steps += 1;
        if self.grad_steps.is_multiple_of(self.config.target_sync_every) {
            sync_target(&self.net, &mut self.target)?;
        }
        Ok(Some(stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Aggregation;

    /// Two states, two actions, deterministic:
    /// state 0: a0 -> (0, r=0), a1 -> (1, r=1); state 1: a0 -> (0, r=2), a1 -> (1, r=0.5).
    const NEXT: [[usize; 2]; 2] = [[0, 1], [0, 1]];
    const REWARD: [[f64; 2]; 2] = [[0.0, 1.0], [2.0, 0.5]];

    fn one_hot(s: usize) -> Vec<f64> {
        let mut v = vec![0.0; 2];
        v[s] = 1.0;
        v
    }

    fn value_iteration(gamma: f64, iters: usize) -> [[f64; 2]; 2] {
        let mut q = [[0.0f64; 2]; 2];
        for _ in 0..iters {
            let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
            let mut next = [[0.0; 2]; 2];
            for s in 0..2 {
                for a in 0..2 {
                    next[s][a] = REWARD[s][a] + gamma * v[NEXT[s][a]];
                }
            }
            q = next;
        }
        q
    }

    #[test]
    fn toy_mdp_converges_to_value_iteration() {
        let config = AgentConfig {
            hidden: vec![],
            algo: Algo::Dqn,
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.02,
            learn_start: 64,
            batch_size: 32,
            buffer_capacity: 2000,
            target_sync_every: 20,
            epsilon: EpsilonSchedule {
                eps_start: 1.0,
                eps_end: 1.0,
                tau: 1.0,
            },
            ..AgentConfig::default()
        };
        let mut agent = Agent::new(config, 2, 2, Agent::seeded_rng(11)).unwrap();
        let mut s = 0;
        for _ in 0..6000 {
            let a = agent.act(&one_hot(s)).unwrap();
            let s_next = NEXT[s][a];
            agent.remember(Transition {
                s: one_hot(s),
                a,
                r: REWARD[s][a],
                s_next: one_hot(s_next),
                done: false,
            });
            agent.learn().unwrap();
            s = s_next;
        }
        let oracle = value_iteration(0.8, 100);
        for s in 0..2 {
            let q = agent.net().q(&one_hot(s)).unwrap();
            for a in 0..2 {
                assert!((q[a] - oracle[s][a]).abs() < 1e-3, "s={s} a={a}: {} vs {}", q[a], oracle[s][a]);
            }
        }
    }

    #[test]
    fn learning_waits_for_learn_start() {
        let config = AgentConfig {
            hidden: vec![4],
            learn_start: 10,
            batch_size: 4,
            ..AgentConfig::default()
        };
        let mut agent = Agent::new(config, 2, 5, Agent::seeded_rng(0)).unwrap();
        let params = agent.net().params().to_vec();
        for i in 0..9 {
            agent.remember(Transition {
                s: vec![0.0, 1.0],
                a: i % 5,
                r: 1.0,
                s_next: vec![1.0, 0.0],
                done: false,
            });
            assert_eq!(agent.learn().unwrap(), None);
        }
        assert_eq!(agent.net().params(), params.as_slice());
        agent.remember(Transition {
            s: vec![0.0, 1.0],
            a: 0,
            r: 1.0,
            s_next: vec![1.0, 0.0],
            done: false,
        });
        assert!(agent.learn().unwrap().is_some());
        assert_eq!(agent.grad_steps(), 1);
        assert_eq!(agent.env_steps(), 10);
    }

    #[test]
    fn target_syncs_on_schedule() {
        let config = AgentConfig {
            hidden: vec![4],
            learn_start: 1,
            batch_size: 1,
            target_sync_every: 3,
            ..AgentConfig::default()
        };
        let mut agent = Agent::new(config, 2, 5, Agent::seeded_rng(0)).unwrap();
        agent.remember(Transition {
            s: vec![0.5, 1.0],
            a: 2,
            r: 1.0,
            s_next: vec![1.0, 0.0],
            done: false,
        });
        let initial = agent.target_net().clone();
        agent.learn().unwrap();
        agent.learn().unwrap();
        assert_eq!(agent.target_net(), &initial);
        assert_ne!(agent.net(), &initial);
        agent.learn().unwrap();
        assert_eq!(agent.target_net(), agent.net());
    }

    #[test]
    fn advantage_shift_keeps_greedy_choice() {
        let config = AgentConfig {
            hidden: vec![16],
            aggregation: Aggregation::Max,
            ..AgentConfig::default()
        };
        let agent = Agent::new(config, 4, 5, Agent::seeded_rng(5)).unwrap();
        let mut shifted = agent.net().clone();
        let adv = shifted.named_layers()[2].1;
        let bias_start = adv.offset + adv.fan_in * adv.fan_out;
        for p in &mut shifted.params_mut()[bias_start..bias_start + 5] {
            *p += 7.5;
        }
        let mut r = Agent::seeded_rng(6);
        for _ in 0..200 {
            let obs: Vec<f64> = (0..4).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect();
            assert_eq!(greedy_action(agent.net(), &obs).unwrap(), greedy_action(&shifted, &obs).unwrap());
        }
    }

    #[test]
    fn config_validation() {
        assert!(AgentConfig::default().validate().is_ok());
        let bad = AgentConfig {
            gamma: 1.0,
            ..AgentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AgentConfig {
            batch_size: 20_000,
            ..AgentConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("ddqn".parse::<Algo>().unwrap(), Algo::Ddqn);
        assert!("a2c".parse::<Algo>().is_err());
    }
}

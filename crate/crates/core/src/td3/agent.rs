use std::io::{Read, Write};

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::nn::{tail_columns, Activation, Adam, Mlp};
use super::replay::{ReplayBuffer, Transition};
use crate::env::ActionCmd;
use crate::{Error, Result};

pub const ACTION_DIM: usize = 2;
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    /// Exploration noise std at episode 0, in normalised action units.
    pub exploration_noise_std: f64,
    /// Per-episode multiplicative decay of the exploration noise std.
    pub noise_decay: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub batch_size: usize,
    /// Learning starts once the buffer holds more than this many transitions.
    pub learn_start: usize,
    pub max_episodes: usize,
    pub hidden_sizes: Vec<usize>,
    pub replay_capacity: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            exploration_noise_std: 0.6,
            noise_decay: 0.999,
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            batch_size: 256,
            learn_start: 2000,
            max_episodes: 8000,
            hidden_sizes: vec![256, 256],
            replay_capacity: 1_000_000,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if self.policy_delay == 0 {
            return fail("policy_delay must be at least 1".into());
        }
        if self.batch_size == 0 || self.batch_size > self.learn_start.max(1) {
            return fail(format!(
                "batch_size must lie in [1, learn_start], got {} with learn_start {}",
                self.batch_size, self.learn_start
            ));
        }
        if !(self.exploration_noise_std >= 0.0 && self.noise_decay > 0.0 && self.noise_decay <= 1.0) {
            return fail("exploration noise std must be ≥ 0 and decay in (0, 1]".into());
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return fail("learning rates must be positive".into());
        }
        if self.replay_capacity == 0 {
            return fail("replay capacity must be positive".into());
        }
        Ok(())
    }

    /// Exploration noise std used during `episode` (0-based).
    pub fn noise_std_at(&self, episode: usize) -> f64 {
        self.exploration_noise_std * self.noise_decay.powi(episode as i32)
    }
}

/// TD regression targets `r + γ (1 − done) min(q1, q2)`.
pub fn td_targets(
    rewards: &Array1<f64>,
    dones: &Array1<f64>,
    q1: &Array1<f64>,
    q2: &Array1<f64>,
    gamma: f64,
) -> Array1<f64> {
    let mut y = rewards.clone();
    for i in 0..y.len() {
        y[i] += gamma * (1.0 - dones[i]) * q1[i].min(q2[i]);
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    /// Present on updates where the actor and targets moved.
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Agent {
    config: Td3Config,
    obs_dim: usize,
    actor: Mlp,
    critic1: Mlp,
    critic2: Mlp,
    actor_target: Mlp,
    critic1_target: Mlp,
    critic2_target: Mlp,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    updates: u64,
    rng: ChaCha8Rng,
}

struct Batch {
    obs: Array2<f64>,
    actions: Array2<f64>,
    rewards: Array1<f64>,
    next_obs: Array2<f64>,
    dones: Array1<f64>,
}

impl Batch {
    fn gather(items: &[&Transition], obs_dim: usize) -> Self {
        let n = items.len();
        let mut obs = Array2::zeros((n, obs_dim));
        let mut next_obs = Array2::zeros((n, obs_dim));
        let mut actions = Array2::zeros((n, ACTION_DIM));
        let mut rewards = Array1::zeros(n);
        let mut dones = Array1::zeros(n);
        for (i, t) in items.iter().enumerate() {
            obs.row_mut(i).assign(&ArrayView2::from_shape((1, obs_dim), &t.obs).unwrap().row(0));
            next_obs
                .row_mut(i)
                .assign(&ArrayView2::from_shape((1, obs_dim), &t.next_obs).unwrap().row(0));
            actions[[i, 0]] = t.action[0];
            actions[[i, 1]] = t.action[1];
            rewards[i] = t.reward;
            dones[i] = if t.done { 1.0 } else { 0.0 };
        }
        Self {
            obs,
            actions,
            rewards,
            next_obs,
            dones,
        }
    }
}

fn critic_input(obs: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
    concatenate![Axis(1), *obs, *actions]
}

fn column(x: &Array2<f64>) -> Array1<f64> {
    x.column(0).to_owned()
}

impl Td3Agent {
    /// Fresh networks from `seed`; targets start as exact copies.
    pub fn new(obs_dim: usize, config: Td3Config, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend(&config.hidden_sizes);
            s.push(output);
            s
        };
        let actor = Mlp::new(&sizes(obs_dim, ACTION_DIM), Activation::Relu, Activation::Tanh, &mut rng);
        let critic_sizes = sizes(obs_dim + ACTION_DIM, 1);
        let critic1 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng);
        let critic2 = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng);
        Ok(Self {
            actor_opt: Adam::new(&actor, config.actor_lr),
            critic1_opt: Adam::new(&critic1, config.critic_lr),
            critic2_opt: Adam::new(&critic2, config.critic_lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            config,
            obs_dim,
            updates: 0,
            rng,
        })
    }

    pub fn config(&self) -> &Td3Config {
        &self.config
    }

    /// Changes the episode budget, e.g. when extending a resumed run.
    pub fn set_max_episodes(&mut self, max_episodes: usize) {
        self.config.max_episodes = max_episodes;
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> (&Mlp, &Mlp) {
        (&self.critic1, &self.critic2)
    }

    pub fn targets(&self) -> (&Mlp, &Mlp, &Mlp) {
        (&self.actor_target, &self.critic1_target, &self.critic2_target)
    }

    /// Deterministic policy output in `[−1, 1]²`.
    pub fn policy(&self, obs: &[f64]) -> [f64; 2] {
        let x = ArrayView2::from_shape((1, obs.len()), obs).expect("observation row");
        let out = self.actor.forward(x);
        [out[[0, 0]], out[[0, 1]]]
    }

    /// Policy output plus Gaussian noise, clipped to `[−1, 1]²`.
    pub fn explore(&mut self, obs: &[f64], noise_std: f64) -> [f64; 2] {
        let mut a = self.policy(obs);
        if noise_std > 0.0 {
            let normal = Normal::new(0.0, noise_std).expect("finite std");
            for v in &mut a {
                *v = (*v + normal.sample(&mut self.rng)).clamp(-1.0, 1.0);
            }
        }
        a
    }

    /// Exploratory action, returned both normalised and as a heading/speed command.
    pub fn select_action(&mut self, obs: &[f64], noise_std: f64, v_max: f64) -> ([f64; 2], ActionCmd) {
        let raw = self.explore(obs, noise_std);
        (raw, ActionCmd::from_normalized(raw, v_max))
    }

    /// Q-value of critic 1 for one state-action pair.
    pub fn q1(&self, obs: &[f64], action: [f64; 2]) -> f64 {
        let mut row = obs.to_vec();
        row.extend(action);
        let x = ArrayView2::from_shape((1, row.len()), &row).expect("critic row");
        self.critic1.forward(x)[[0, 0]]
    }

    fn smoothed_target_actions(&mut self, next_obs: &Array2<f64>) -> Array2<f64> {
        let mut a = self.actor_target.forward(next_obs.view());
        if self.config.target_noise_std > 0.0 {
            let normal = Normal::new(0.0, self.config.target_noise_std).expect("finite std");
            let clip = self.config.target_noise_clip;
            for v in a.iter_mut() {
                let eps = normal.sample(&mut self.rng).clamp(-clip, clip);
                *v = (*v + eps).clamp(-1.0, 1.0);
            }
        }
        a
    }

    /// TD targets for a batch using the target networks and smoothed target actions.
    pub fn critic_targets(&mut self, batch: &[&Transition]) -> Array1<f64> {
        let b = Batch::gather(batch, self.obs_dim);
        self.targets_for(&b)
    }

    fn targets_for(&mut self, b: &Batch) -> Array1<f64> {
        let next_actions = self.smoothed_target_actions(&b.next_obs);
        let x = critic_input(&b.next_obs, &next_actions);
        let q1 = column(&self.critic1_target.forward(x.view()));
        let q2 = column(&self.critic2_target.forward(x.view()));
        td_targets(&b.rewards, &b.dones, &q1, &q2, self.config.gamma)
    }

    /// One TD3 update from a uniformly sampled minibatch.
    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<UpdateReport> {
        let picks = buffer.sample(self.config.batch_size, &mut self.rng);
        if picks.is_empty() {
            return Err(Error::InvalidParameter("cannot update from an empty buffer".into()));
        }
        let batch = Batch::gather(&picks, self.obs_dim);
        let n = batch.rewards.len() as f64;
        let y = self.targets_for(&batch).insert_axis(Axis(1));
        let x = critic_input(&batch.obs, &batch.actions);

        let mut losses = [0.0; 2];
        for (k, loss) in losses.iter_mut().enumerate() {
            let (critic, opt) = if k == 0 {
                (&mut self.critic1, &mut self.critic1_opt)
            } else {
                (&mut self.critic2, &mut self.critic2_opt)
            };
            let cache = critic.forward_cached(x.view());
            let err = cache.output() - &y;
            *loss = err.mapv(|e| e * e).sum() / n;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "critic {} loss {} at update {}",
                    k + 1,
                    loss,
                    self.updates
                )));
            }
            let (grads, _) = critic.backward(&cache, &(err * (2.0 / n)));
            opt.step(critic, &grads);
        }
        self.updates += 1;

        let mut actor_loss = None;
        if self.updates % self.config.policy_delay == 0 {
            let actor_cache = self.actor.forward_cached(batch.obs.view());
            let q_in = critic_input(&batch.obs, actor_cache.output());
            let q_cache = self.critic1.forward_cached(q_in.view());
            let loss = -q_cache.output().sum() / n;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "actor loss {} at update {}",
                    loss, self.updates
                )));
            }
            let grad_q = Array2::from_elem((batch.obs.nrows(), 1), -1.0 / n);
            let (_, grad_in) = self.critic1.backward(&q_cache, &grad_q);
            let grad_action = tail_columns(&grad_in, ACTION_DIM);
            let (grads, _) = self.actor.backward(&actor_cache, &grad_action);
            self.actor_opt.step(&mut self.actor, &grads);

            let tau = self.config.tau;
            self.actor_target.soft_update_from(&self.actor, tau);
            self.critic1_target.soft_update_from(&self.critic1, tau);
            self.critic2_target.soft_update_from(&self.critic2, tau);
            actor_loss = Some(loss);
        }
        Ok(UpdateReport {
            critic1_loss: losses[0],
            critic2_loss: losses[1],
            actor_loss,
        })
    }

    /// Updates only once the buffer holds more than `learn_start` transitions.
    pub fn train_step(&mut self, buffer: &ReplayBuffer) -> Result<Option<UpdateReport>> {
        if buffer.len() > self.config.learn_start {
            self.update(buffer).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Everything needed to resume training bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub agent: Td3Agent,
    pub buffer: ReplayBuffer,
    /// Number of finished training episodes.
    pub episodes_done: usize,
}

impl Checkpoint {
    pub fn new(agent: Td3Agent, buffer: ReplayBuffer, episodes_done: usize) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            agent,
            buffer,
            episodes_done,
        }
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self> {
        let ck: Self = serde_json::from_reader(reader)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: ck.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        Ok(ck)
    }
}

//! The training loop: episodes of act, store, update until the episode budget runs out.

use serde::{Deserialize, Serialize};
use uavlc::env::{ActionCmd, Environment, EpisodeLog};
use uavlc::td3::{Checkpoint, ReplayBuffer, Td3Agent, Td3Config, Transition};

use crate::error::{HarnessError, Result};

/// One row of the convergence CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub steps: usize,
    pub distance: f64,
    pub success: bool,
    pub served: usize,
    pub noise_std: f64,
}

pub struct Trainer {
    env: Environment,
    agent: Td3Agent,
    buffer: ReplayBuffer,
    episodes_done: usize,
}

impl Trainer {
    pub fn new(env: Environment, td3: Td3Config, seed: u64) -> Result<Self> {
        let buffer = ReplayBuffer::new(td3.replay_capacity);
        let agent = Td3Agent::new(env.obs_dim(), td3, seed)?;
        Ok(Self {
            env,
            agent,
            buffer,
            episodes_done: 0,
        })
    }

    pub fn resume(env: Environment, checkpoint: Checkpoint) -> Result<Self> {
        if checkpoint.agent.obs_dim() != env.obs_dim() {
            return Err(HarnessError::Config(format!(
                "checkpoint expects observations of length {}, the configured world gives {}",
                checkpoint.agent.obs_dim(),
                env.obs_dim()
            )));
        }
        Ok(Self {
            env,
            agent: checkpoint.agent,
            buffer: checkpoint.buffer,
            episodes_done: checkpoint.episodes_done,
        })
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn agent(&self) -> &Td3Agent {
        &self.agent
    }

    pub fn set_max_episodes(&mut self, max_episodes: usize) {
        self.agent.set_max_episodes(max_episodes);
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.agent.clone(), self.buffer.clone(), self.episodes_done)
    }

    /// Runs one exploratory episode, learning after every slot.
    pub fn run_episode(&mut self) -> Result<EpisodeRow> {
        let noise = self.agent.config().noise_std_at(self.episodes_done);
        let v_max = self.env.world().v_max();
        let mut state = self.env.reset();
        let mut obs = self.env.observe(&state);
        let mut ret = 0.0;
        loop {
            let (raw, cmd) = self.agent.select_action(&obs, noise, v_max);
            let rec = self.env.step(&mut state, cmd);
            let next_obs = self.env.observe(&state);
            self.buffer.push(Transition {
                obs: std::mem::replace(&mut obs, next_obs.clone()),
                action: raw,
                reward: rec.reward,
                next_obs,
                done: rec.done && !rec.truncated,
            });
            self.agent.train_step(&self.buffer)?;
            ret += rec.reward;
            if rec.done {
                break;
            }
        }
        let row = EpisodeRow {
            episode: self.episodes_done + 1,
            episode_return: ret,
            steps: state.step_index,
            distance: state.cumulative_distance,
            success: state.all_served(),
            served: state.served_count(),
            noise_std: noise,
        };
        self.episodes_done += 1;
        Ok(row)
    }
}

/// Noise-free rollout of the actor.
pub fn greedy_rollout(env: &Environment, agent: &Td3Agent) -> EpisodeLog {
    let v_max = env.world().v_max();
    env.run_episode(|_, obs| ActionCmd::from_normalized(agent.policy(obs), v_max))
}

/// First episode count `e ≥ window` at which the success rate over episodes
/// `e − window + 1 ..= e` reaches `threshold`.
pub fn episodes_to_converge(successes: &[bool], window: usize, threshold: f64) -> Option<usize> {
    if window == 0 || successes.len() < window {
        return None;
    }
    let need = (threshold * window as f64 - 1e-9).ceil() as usize;
    let mut hits = successes[..window].iter().filter(|&&s| s).count();
    if hits >= need {
        return Some(window);
    }
    for e in window..successes.len() {
        hits += successes[e] as usize;
        hits -= successes[e - window] as usize;
        if hits >= need {
            return Some(e + 1);
        }
    }
    None
}

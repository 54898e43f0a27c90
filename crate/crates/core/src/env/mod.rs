//! Episodic data-collection environment.
//!
//! One UAV flies at a fixed altitude over a square arena and must serve
//! every ground user (GU) once. Each slot the agent picks a heading and a
//! speed; the environment moves the UAV, recomputes coverage from the link
//! gain, serves up to `k_up` waiting GUs (strongest gain first), updates the
//! pheromone and emits the shaped reward.

mod log;
mod reward;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{LinkGeometry, VlcParams};
use crate::{Error, Result};

pub use self::log::{replay_pheromone, validate_episode, ConstraintViolation, EpisodeLog, StepRecord};
pub use self::reward::{
    approach_sum, in_annulus, pheromone_update, reward, shaped_reward, RewardParams, Shaping,
};

/// Positions closer than this to the arena edge are not counted as a boundary hit.
const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldInstance {
    pub arena_side: f64,
    pub gu_positions: Vec<[f64; 2]>,
    pub altitude: f64,
    pub h_min: f64,
    /// Maximum horizontal distance per slot.
    pub d_max: f64,
    /// Maximum number of GUs served in one slot.
    pub k_up: usize,
    pub slot_duration: f64,
    pub start: [f64; 2],
    /// Episode length limit in slots.
    pub step_cap: usize,
    pub rng_seed: u64,
}

impl WorldInstance {
    /// A world with the usual kinematic limits: `h_min = 10`, `d_max = 2`,
    /// `k_up = 1`, unit slots, start at the origin corner, 2000-slot cap.
    pub fn new(arena_side: f64, gu_positions: Vec<[f64; 2]>, altitude: f64) -> Self {
        Self {
            arena_side,
            gu_positions,
            altitude,
            h_min: 10.0,
            d_max: 2.0,
            k_up: 1,
            slot_duration: 1.0,
            start: [0.0, 0.0],
            step_cap: 2000,
            rng_seed: 0,
        }
    }

    /// `count` GUs drawn uniformly from the arena with a seeded stream.
    pub fn uniform_gus(arena_side: f64, count: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                [
                    rng.random_range(0.0..=arena_side),
                    rng.random_range(0.0..=arena_side),
                ]
            })
            .collect()
    }

    pub fn gu_count(&self) -> usize {
        self.gu_positions.len()
    }

    /// Maximum speed in metres per slot time unit.
    pub fn v_max(&self) -> f64 {
        self.d_max / self.slot_duration
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0.0..=self.arena_side).contains(&p[0]) && (0.0..=self.arena_side).contains(&p[1])
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.arena_side > 0.0) {
            return fail(format!("arena side must be positive, got {}", self.arena_side));
        }
        if self.gu_positions.is_empty() {
            return fail("at least one ground user is required".into());
        }
        if let Some((i, p)) = self.gu_positions.iter().enumerate().find(|(_, p)| !self.contains(**p)) {
            return fail(format!("ground user {i} at {p:?} lies outside the arena"));
        }
        if !self.contains(self.start) {
            return fail(format!("start {:?} lies outside the arena", self.start));
        }
        if self.k_up == 0 {
            return fail("k_up must be at least 1".into());
        }
        if !(self.d_max > 0.0 && self.slot_duration > 0.0) {
            return fail("d_max and slot duration must be positive".into());
        }
        if !(self.h_min > 0.0) {
            return fail(format!("h_min must be positive, got {}", self.h_min));
        }
        if !(self.altitude >= self.h_min) {
            return fail(format!(
                "altitude {} is below the safe minimum {}",
                self.altitude, self.h_min
            ));
        }
        if self.step_cap == 0 {
            return fail("step cap must be at least 1".into());
        }
        Ok(())
    }
}

/// Heading (radians, `(0, 2π]`) and speed (metres per slot time unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCmd {
    pub heading: f64,
    pub speed: f64,
}

impl ActionCmd {
    /// Maps a normalised action in `[−1, 1]²` onto heading and speed.
    /// `(1, 1)` is `(2π, v_max)`; `−1` on the heading axis wraps to `2π`.
    pub fn from_normalized(raw: [f64; 2], v_max: f64) -> Self {
        let a = raw.map(|x| x.clamp(-1.0, 1.0));
        let mut heading = std::f64::consts::PI * (a[0] + 1.0);
        if heading <= 0.0 {
            heading = TAU;
        }
        Self {
            heading,
            speed: v_max * 0.5 * (a[1] + 1.0),
        }
    }

    /// Heading pointing from `from` to `to`, at the speed that lands there in one slot.
    pub fn toward(from: [f64; 2], to: [f64; 2], slot_duration: f64) -> Self {
        let dx = to[0] - from[0];
        let dy = to[1] - from[1];
        let mut heading = dy.atan2(dx);
        if heading <= 0.0 {
            heading += TAU;
        }
        Self {
            heading,
            speed: dx.hypot(dy) / slot_duration,
        }
    }

    /// Brings the command into range; the flag reports whether anything changed.
    pub fn clamped(self, v_max: f64) -> (Self, bool) {
        if !self.heading.is_finite() || !self.speed.is_finite() {
            return (
                Self {
                    heading: TAU,
                    speed: 0.0,
                },
                true,
            );
        }
        let mut heading = self.heading.rem_euclid(TAU);
        if heading == 0.0 {
            heading = TAU;
        }
        let speed = self.speed.clamp(0.0, v_max);
        let changed = heading != self.heading || speed != self.speed;
        (Self { heading, speed }, changed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub uav_xy: [f64; 2],
    /// `b_i`: link gain meets the threshold at the current position.
    pub covered: Vec<bool>,
    /// `c_i`: served at some earlier or the current slot.
    pub served: Vec<bool>,
    pub pheromone: f64,
    pub step_index: usize,
    pub cumulative_distance: f64,
    /// Horizontal distance to each GU at the current position.
    pub distances: Vec<f64>,
}

impl EnvState {
    pub fn served_count(&self) -> usize {
        self.served.iter().filter(|&&c| c).count()
    }

    pub fn all_served(&self) -> bool {
        self.served.iter().all(|&c| c)
    }
}

/// World, link model and reward settings with the radii precomputed.
#[derive(Debug, Clone)]
pub struct Environment {
    world: WorldInstance,
    vlc: VlcParams,
    reward: RewardParams,
    gain_threshold: f64,
    comm_radius: f64,
    reception_radius: f64,
}

impl Environment {
    pub fn new(world: WorldInstance, vlc: VlcParams, reward: RewardParams) -> Result<Self> {
        world.validate()?;
        vlc.validate()?;
        reward.validate()?;
        let comm_radius = vlc.comm_radius(world.altitude)?;
        if comm_radius <= 0.0 {
            return Err(Error::InfeasibleAltitude {
                altitude: world.altitude,
            });
        }
        Ok(Self {
            gain_threshold: vlc.gain_threshold(),
            reception_radius: vlc.reception_radius(world.altitude),
            comm_radius,
            world,
            vlc,
            reward,
        })
    }

    /// Same environment with a different episode length limit.
    pub fn with_step_cap(&self, step_cap: usize) -> Self {
        let mut env = self.clone();
        env.world.step_cap = step_cap.max(1);
        env
    }

    pub fn world(&self) -> &WorldInstance {
        &self.world
    }

    pub fn vlc(&self) -> &VlcParams {
        &self.vlc
    }

    pub fn reward_params(&self) -> &RewardParams {
        &self.reward
    }

    pub fn comm_radius(&self) -> f64 {
        self.comm_radius
    }

    pub fn reception_radius(&self) -> f64 {
        self.reception_radius
    }

    pub fn gain_threshold(&self) -> f64 {
        self.gain_threshold
    }

    /// Observation length: coverage bits, served bits, x, y, pheromone.
    pub fn obs_dim(&self) -> usize {
        2 * self.world.gu_count() + 3
    }

    pub fn horizontal_distances(&self, xy: [f64; 2]) -> Vec<f64> {
        self.world
            .gu_positions
            .iter()
            .map(|w| (xy[0] - w[0]).hypot(xy[1] - w[1]))
            .collect()
    }

    pub fn gain_at(&self, d_xy: f64) -> f64 {
        // Altitude ≥ h_min > 0, so the geometry is always defined.
        self.vlc
            .channel_gain(LinkGeometry::new(self.world.altitude, d_xy))
            .unwrap_or(0.0)
    }

    pub fn reset(&self) -> EnvState {
        let distances = self.horizontal_distances(self.world.start);
        let covered = distances.iter().map(|&d| self.gain_at(d) >= self.gain_threshold).collect();
        EnvState {
            uav_xy: self.world.start,
            covered,
            served: vec![false; self.world.gu_count()],
            pheromone: 0.0,
            step_index: 0,
            cumulative_distance: 0.0,
            distances,
        }
    }

    /// `b_i = 1` iff the gain at the state's position reaches the threshold.
    pub fn coverage_bits(&self, state: &EnvState) -> Vec<bool> {
        self.horizontal_distances(state.uav_xy)
            .into_iter()
            .map(|d| self.gain_at(d) >= self.gain_threshold)
            .collect()
    }

    /// GUs designated for service this slot: covered, not yet served, at
    /// most `k_up` of them, strongest gain first, lower index on ties.
    pub fn select_served(&self, state: &EnvState, coverage: &[bool]) -> Vec<bool> {
        let distances = self.horizontal_distances(state.uav_xy);
        let mut candidates: Vec<(usize, f64)> = coverage
            .iter()
            .zip(&state.served)
            .enumerate()
            .filter(|(_, (&b, &c))| b && !c)
            .map(|(i, _)| (i, self.gain_at(distances[i])))
            .collect();
        candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut chosen = vec![false; coverage.len()];
        for &(i, _) in candidates.iter().take(self.world.k_up) {
            chosen[i] = true;
        }
        chosen
    }

    /// Advances one slot. Out-of-range commands are clamped and flagged.
    pub fn step(&self, state: &mut EnvState, action: ActionCmd) -> StepRecord {
        let world = &self.world;
        let (action, action_clamped) = action.clamped(world.v_max());
        let travel = action.speed * world.slot_duration;
        let candidate = [
            state.uav_xy[0] + travel * action.heading.cos(),
            state.uav_xy[1] + travel * action.heading.sin(),
        ];
        let side = world.arena_side;
        let boundary_hit = candidate
            .iter()
            .any(|&c| c < -BOUNDARY_TOL || c > side + BOUNDARY_TOL);
        let next = candidate.map(|c| c.clamp(0.0, side));
        let step_distance = (next[0] - state.uav_xy[0]).hypot(next[1] - state.uav_xy[1]);

        let prev_distances = std::mem::take(&mut state.distances);
        state.uav_xy = next;
        state.distances = self.horizontal_distances(next);
        state.covered = state
            .distances
            .iter()
            .map(|&d| self.gain_at(d) >= self.gain_threshold)
            .collect();
        let chosen = self.select_served(state, &state.covered);
        let served_ids: Vec<usize> = chosen
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect();
        for &i in &served_ids {
            state.served[i] = true;
        }

        let approach = approach_sum(
            &self.reward,
            &prev_distances,
            &state.distances,
            &state.served,
            self.comm_radius,
            self.reception_radius,
        );
        state.pheromone = pheromone_update(
            state.pheromone,
            &self.reward,
            served_ids.len(),
            approach,
            boundary_hit,
        );
        state.cumulative_distance += step_distance;
        state.step_index += 1;

        let all_served = state.all_served();
        let r = reward(
            &self.reward,
            state.pheromone,
            world.gu_count(),
            state.cumulative_distance,
            all_served,
        );
        let truncated = !all_served && state.step_index >= world.step_cap;

        StepRecord {
            step: state.step_index,
            x: next[0],
            y: next[1],
            v: action.speed,
            theta: action.heading,
            zeta: state.pheromone,
            reward: r,
            served_ids,
            boundary_hit,
            action_clamped,
            distance: step_distance,
            done: all_served || truncated,
            truncated,
        }
    }

    /// Flat observation `[b_1..b_I, c_1..c_I, x/D, y/D, tanh(ζ / (I κ_cov))]`.
    pub fn observe(&self, state: &EnvState) -> Vec<f64> {
        let bit = |b: bool| if b { 1.0 } else { 0.0 };
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.extend(state.covered.iter().map(|&b| bit(b)));
        obs.extend(state.served.iter().map(|&c| bit(c)));
        obs.push(state.uav_xy[0] / self.world.arena_side);
        obs.push(state.uav_xy[1] / self.world.arena_side);
        let scale = self.world.gu_count() as f64 * self.reward.kappa_cov;
        obs.push((state.pheromone / scale).tanh());
        obs
    }

    /// Runs one episode to completion or the step cap.
    pub fn run_episode<P>(&self, mut policy: P) -> EpisodeLog
    where
        P: FnMut(&EnvState, &[f64]) -> ActionCmd,
    {
        let mut state = self.reset();
        let mut log = EpisodeLog::new(self.world.start);
        loop {
            let obs = self.observe(&state);
            let action = policy(&state, &obs);
            let record = self.step(&mut state, action);
            let done = record.done;
            log.push(record);
            if done {
                return log;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn vlc() -> VlcParams {
        VlcParams {
            capacity_threshold: 6.19,
            ..VlcParams::reference()
        }
    }

    fn env_with(gus: Vec<[f64; 2]>, k_up: usize) -> Environment {
        let mut world = WorldInstance::new(100.0, gus, 13.0);
        world.k_up = k_up;
        Environment::new(world, vlc(), RewardParams::default()).unwrap()
    }

    #[test]
    fn reset_is_clean_and_repeatable() {
        let gus = WorldInstance::uniform_gus(100.0, 7, 3);
        assert_eq!(gus, WorldInstance::uniform_gus(100.0, 7, 3));
        let env = env_with(gus, 1);
        let a = env.reset();
        assert_eq!(a, env.reset());
        assert_eq!(a.cumulative_distance, 0.0);
        assert_eq!(a.served, vec![false; 7]);
        assert_eq!(a.pheromone, 0.0);
        assert_eq!(a.step_index, 0);
    }

    #[test]
    fn coverage_above_and_beyond() {
        let env = env_with(vec![[50.0, 50.0], [90.0, 90.0]], 1);
        let mut s = env.reset();
        s.uav_xy = [50.0, 50.0];
        assert_eq!(env.coverage_bits(&s), vec![true, false]);
        s.uav_xy = [50.0 + env.reception_radius() + 1.0, 50.0];
        assert_eq!(env.coverage_bits(&s), vec![false, false]);
    }

    #[test]
    fn coverage_flips_at_comm_radius() {
        let env = env_with(vec![[50.0, 50.0]], 1);
        let r = env.comm_radius();
        let mut s = env.reset();
        s.uav_xy = [50.0 + r * (1.0 - 1e-9), 50.0];
        assert_eq!(env.coverage_bits(&s), vec![true]);
        s.uav_xy = [50.0 + r * (1.0 + 1e-9), 50.0];
        assert_eq!(env.coverage_bits(&s), vec![false]);
    }

    #[test]
    fn nearest_gu_wins_single_slot() {
        let env = env_with(vec![[55.0, 50.0], [47.0, 50.0]], 1);
        let mut s = env.reset();
        s.uav_xy = [50.0, 50.0];
        let cov = env.coverage_bits(&s);
        assert_eq!(cov, vec![true, true]);
        assert_eq!(env.select_served(&s, &cov), vec![false, true]);
        s.served[1] = true;
        assert_eq!(env.select_served(&s, &cov), vec![true, false]);
        s.uav_xy = [0.0, 0.0];
        let cov = env.coverage_bits(&s);
        assert_eq!(env.select_served(&s, &cov), vec![false, false]);
    }

    #[test]
    fn equal_gain_ties_go_to_lower_index() {
        let env = env_with(vec![[53.0, 50.0], [47.0, 50.0], [50.0, 53.0]], 2);
        let mut s = env.reset();
        s.uav_xy = [50.0, 50.0];
        let cov = env.coverage_bits(&s);
        assert_eq!(env.select_served(&s, &cov), vec![true, true, false]);
    }

    #[test]
    fn zero_speed_stays_put() {
        let env = env_with(vec![[90.0, 90.0]], 1);
        let mut s = env.reset();
        let rec = env.step(&mut s, ActionCmd { heading: 1.0, speed: 0.0 });
        assert_eq!(s.uav_xy, [0.0, 0.0]);
        assert_eq!(rec.distance, 0.0);
        assert!(!rec.boundary_hit);
        assert_eq!(rec.zeta, -0.01);
    }

    #[test]
    fn wall_clamps_and_penalises() {
        let env = env_with(vec![[90.0, 90.0]], 1);
        let mut s = env.reset();
        s.uav_xy = [0.0, 40.0];
        s.distances = env.horizontal_distances(s.uav_xy);
        let rec = env.step(&mut s, ActionCmd { heading: PI, speed: 2.0 });
        assert!(rec.boundary_hit);
        assert!(s.uav_xy[0] == 0.0 && (s.uav_xy[1] - 40.0).abs() < 1e-12);
        assert!((rec.zeta - (-0.01 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_action_is_clamped_and_flagged() {
        let env = env_with(vec![[90.0, 90.0]], 1);
        let mut s = env.reset();
        let rec = env.step(&mut s, ActionCmd { heading: PI / 4.0, speed: 50.0 });
        assert!(rec.action_clamped);
        assert!((rec.distance - 2.0).abs() < 1e-12);
        let rec = env.step(&mut s, ActionCmd { heading: f64::NAN, speed: 1.0 });
        assert!(rec.action_clamped);
        assert_eq!(rec.distance, 0.0);
    }

    #[test]
    fn completing_adds_distance_bonus() {
        let env = env_with(vec![[20.0, 0.0]], 1);
        let mut s = env.reset();
        // comm radius ≈ 13: after 4 slots east the UAV is at 8 m, 12 m from the GU.
        let mut last = None;
        for _ in 0..4 {
            last = Some(env.step(&mut s, ActionCmd { heading: TAU, speed: 2.0 }));
        }
        let rec = last.unwrap();
        assert!(rec.done && !rec.truncated);
        assert_eq!(rec.served_ids, vec![0]);
        let r_tanh = shaped_reward(rec.zeta, 1, 1.0);
        assert!((rec.reward - (r_tanh + 1.0 / 8.0)).abs() < 1e-12);
    }

    #[test]
    fn step_cap_truncates() {
        let mut world = WorldInstance::new(100.0, vec![[90.0, 90.0]], 13.0);
        world.step_cap = 3;
        let env = Environment::new(world, vlc(), RewardParams::default()).unwrap();
        let log = env.run_episode(|_, _| ActionCmd { heading: 1.0, speed: 0.0 });
        assert_eq!(log.steps.len(), 3);
        assert!(log.steps[2].truncated && !log.success());
    }

    #[test]
    fn observation_layout() {
        let env = env_with(WorldInstance::uniform_gus(100.0, 6, 1), 1);
        let s = env.reset();
        let obs = env.observe(&s);
        assert_eq!(obs.len(), 2 * 6 + 3);
        assert!(obs[6..12].iter().all(|&c| c == 0.0));
        assert_eq!(obs[14], 0.0);
        assert!(obs[12..14].iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn normalized_action_endpoints() {
        let a = ActionCmd::from_normalized([1.0, 1.0], 2.0);
        assert_eq!(a, ActionCmd { heading: TAU, speed: 2.0 });
        let a = ActionCmd::from_normalized([-1.0, -1.0], 2.0);
        assert_eq!(a, ActionCmd { heading: TAU, speed: 0.0 });
        let a = ActionCmd::from_normalized([0.0, 0.0], 2.0);
        assert_eq!(a, ActionCmd { heading: PI, speed: 1.0 });
    }

    #[test]
    fn infeasible_altitude_rejected() {
        let world = WorldInstance::new(100.0, vec![[1.0, 1.0]], 10.0);
        let err = Environment::new(world, VlcParams::reference(), RewardParams::default());
        assert!(matches!(err, Err(Error::InfeasibleAltitude { .. })));
    }

    #[test]
    fn world_validation() {
        let mut w = WorldInstance::new(100.0, vec![[1.0, 1.0]], 13.0);
        assert!(w.validate().is_ok());
        w.altitude = 5.0;
        assert!(w.validate().is_err());
        let w = WorldInstance::new(100.0, vec![[101.0, 1.0]], 13.0);
        assert!(w.validate().is_err());
        let w = WorldInstance::new(100.0, vec![], 13.0);
        assert!(w.validate().is_err());
    }
}

//! Classical benchmark planners.
//!
//! Every planner flies its route through [`Environment`] one slot at a time,
//! so coverage, service and distance are accounted exactly as for the learned
//! policy. The recorded positions form the [`PlannedPath`]; [`execute_plan`]
//! replays it into an [`EpisodeLog`] and checks the mission constraints.

mod aco;
mod rrt;
mod scan;
mod tour;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{validate_episode, ActionCmd, ConstraintViolation, EnvState, Environment, EpisodeLog};
use crate::{Error, Result};

pub use self::aco::{aco_order, AcoConfig, AcoResult};
pub use self::rrt::{cut_at_disk, densify, path_length, rrt_connect, shortcut, RrtConfig};
pub use self::scan::{scan_corners, scan_rows, scan_sweep_length};
pub use self::tour::{brute_force_order, disk_entry, greedy_order, tour_length};

use self::tour::dist;

/// Goal disks are shrunk by this factor so that reaching one is never
/// undone by rounding at the exact communication radius.
const GOAL_SHRINK: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Planner {
    #[serde(rename = "SCAN")]
    Scan,
    #[serde(rename = "GREEDY-RRT")]
    GreedyRrt,
    #[serde(rename = "ACO-RRT")]
    AcoRrt,
}

impl Planner {
    pub const ALL: [Planner; 3] = [Planner::Scan, Planner::GreedyRrt, Planner::AcoRrt];

    pub fn name(self) -> &'static str {
        match self {
            Planner::Scan => "SCAN",
            Planner::GreedyRrt => "GREEDY-RRT",
            Planner::AcoRrt => "ACO-RRT",
        }
    }
}

impl std::fmt::Display for Planner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub aco: AcoConfig,
    pub rrt: RrtConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    /// UAV position after every slot, starting with the world's start point.
    pub waypoints: Vec<[f64; 2]>,
    pub total_length: f64,
    /// `(gu, waypoint index)` for every service.
    pub service_events: Vec<(usize, usize)>,
}

impl PlannedPath {
    /// Checks spacing, bounds and one in-range service per GU.
    pub fn validate(&self, env: &Environment) -> Result<()> {
        let world = env.world();
        for (k, w) in self.waypoints.windows(2).enumerate() {
            let d = dist(w[0], w[1]);
            if d > world.d_max + 1e-9 {
                return Err(ConstraintViolation::StepTooLong {
                    step: k + 1,
                    distance: d,
                    d_max: world.d_max,
                }
                .into());
            }
        }
        if let Some((k, p)) = self.waypoints.iter().enumerate().find(|(_, p)| !world.contains(**p)) {
            return Err(ConstraintViolation::OutOfBounds { step: k, x: p[0], y: p[1] }.into());
        }
        let mut seen = vec![false; world.gu_count()];
        for &(gu, k) in &self.service_events {
            if gu >= seen.len() {
                return Err(ConstraintViolation::UnknownGu { step: k, gu }.into());
            }
            if std::mem::replace(&mut seen[gu], true) {
                return Err(ConstraintViolation::ServedTwice { step: k, gu }.into());
            }
            let p = self.waypoints[k];
            if dist(p, world.gu_positions[gu]) > env.comm_radius() {
                return Err(ConstraintViolation::ServedOutOfRange { step: k, gu }.into());
            }
        }
        let served = seen.iter().filter(|&&s| s).count();
        if served != seen.len() {
            return Err(ConstraintViolation::Incomplete {
                served,
                total: seen.len(),
            }
            .into());
        }
        Ok(())
    }
}

/// Slot-by-slot flight recorder used by all planners.
struct Flight {
    env: Environment,
    state: EnvState,
    waypoints: Vec<[f64; 2]>,
    events: Vec<(usize, usize)>,
}

impl Flight {
    fn new(env: &Environment) -> Self {
        let env = env.with_step_cap(usize::MAX);
        let state = env.reset();
        Self {
            waypoints: vec![state.uav_xy],
            state,
            env,
            events: Vec::new(),
        }
    }

    fn done(&self) -> bool {
        self.state.all_served()
    }

    fn at(&self) -> [f64; 2] {
        self.state.uav_xy
    }

    fn slot(&mut self, action: ActionCmd) {
        let rec = self.env.step(&mut self.state, action);
        self.waypoints.push(self.state.uav_xy);
        let k = self.waypoints.len() - 1;
        self.events.extend(rec.served_ids.iter().map(|&g| (g, k)));
    }

    /// Flies through points at most `d_max` apart, stopping once every GU is served.
    fn follow(&mut self, points: &[[f64; 2]]) {
        let delta = self.env.world().slot_duration;
        for &p in points {
            if self.done() {
                return;
            }
            self.slot(ActionCmd::toward(self.at(), p, delta));
        }
    }

    /// Hovers until `gu` is served; only slot contention can delay it.
    fn hover_until_served(&mut self, gu: usize) -> Result<()> {
        for _ in 0..=self.env.world().gu_count() {
            if self.state.served[gu] {
                return Ok(());
            }
            self.slot(ActionCmd {
                heading: std::f64::consts::TAU,
                speed: 0.0,
            });
        }
        if self.state.served[gu] {
            Ok(())
        } else {
            Err(Error::PlanningFailure { iterations: 0 })
        }
    }

    fn finish(self) -> PlannedPath {
        PlannedPath {
            total_length: path_length(&self.waypoints),
            waypoints: self.waypoints,
            service_events: self.events,
        }
    }
}

/// Visits GUs in `order` with one RRT leg per still-unserved GU.
pub fn plan_order(env: &Environment, order: &[usize], rrt: &RrtConfig, seed: u64) -> Result<PlannedPath> {
    let world = env.world();
    let goal = env.comm_radius() * GOAL_SHRINK;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flight = Flight::new(env);
    for &gu in order {
        if flight.done() {
            break;
        }
        if flight.state.served[gu] {
            continue;
        }
        let leg = rrt_connect(
            world.arena_side,
            flight.at(),
            world.gu_positions[gu],
            goal,
            world.d_max,
            rrt,
            &mut rng,
        )?;
        flight.follow(&leg[1..]);
        flight.hover_until_served(gu)?;
    }
    Ok(flight.finish())
}

/// Lawnmower sweep with row spacing `2 · comm_radius`, cut at the last
/// service. Slot sampling can step over a thin sliver of a disk between two
/// rows; any GU missed that way is then visited directly.
pub fn scan_plan(env: &Environment) -> Result<PlannedPath> {
    let world = env.world();
    let mut route = vec![world.start];
    route.extend(scan_corners(world.arena_side, env.comm_radius()));
    let route = densify(&route, world.d_max);
    let mut flight = Flight::new(env);
    flight.follow(&route[1..]);
    let goal = env.comm_radius() * GOAL_SHRINK;
    while !flight.done() {
        let left: Vec<usize> = (0..world.gu_count()).filter(|&i| !flight.state.served[i]).collect();
        let positions: Vec<[f64; 2]> = left.iter().map(|&i| world.gu_positions[i]).collect();
        let gu = left[greedy_order(&positions, flight.at(), goal)[0]];
        let target = disk_entry(flight.at(), world.gu_positions[gu], goal);
        let leg = densify(&[flight.at(), target], world.d_max);
        flight.follow(&leg[1..]);
        flight.hover_until_served(gu)?;
    }
    Ok(flight.finish())
}

/// The sweep SCAN would fly with no early stop, densified to slot steps.
pub fn scan_waypoints(env: &Environment) -> Vec<[f64; 2]> {
    let world = env.world();
    let mut route = vec![world.start];
    route.extend(scan_corners(world.arena_side, env.comm_radius()));
    densify(&route, world.d_max)
}

/// Runs one of the benchmark planners. `seed` drives RRT sampling and is
/// mixed into the ACO seed.
pub fn plan(planner: Planner, env: &Environment, config: &BaselineConfig, seed: u64) -> Result<PlannedPath> {
    let world = env.world();
    let r = env.comm_radius();
    match planner {
        Planner::Scan => scan_plan(env),
        Planner::GreedyRrt => {
            let order = greedy_order(&world.gu_positions, world.start, r);
            plan_order(env, &order, &config.rrt, seed)
        }
        Planner::AcoRrt => {
            let aco = AcoConfig {
                rng_seed: config.aco.rng_seed ^ seed,
                ..config.aco.clone()
            };
            let order = aco_order(&world.gu_positions, world.start, r, &aco)?.order;
            plan_order(env, &order, &config.rrt, seed)
        }
    }
}

/// Replays a path through a fresh episode, one waypoint per slot, and checks
/// the mission constraints including completion.
pub fn execute_plan(env: &Environment, path: &PlannedPath) -> Result<EpisodeLog> {
    let env = env.with_step_cap(usize::MAX);
    let mut state = env.reset();
    let mut log = EpisodeLog::new(env.world().start);
    let delta = env.world().slot_duration;
    for &p in path.waypoints.iter().skip(1) {
        let action = ActionCmd::toward(state.uav_xy, p, delta);
        let rec = env.step(&mut state, action);
        let done = rec.done;
        log.push(rec);
        if done {
            break;
        }
    }
    validate_episode(&env, &log)?;
    if !log.success() {
        return Err(ConstraintViolation::Incomplete {
            served: state.served_count(),
            total: env.world().gu_count(),
        }
        .into());
    }
    Ok(log)
}

/// Plans and replays in one go.
pub fn run_planner(
    planner: Planner,
    env: &Environment,
    config: &BaselineConfig,
    seed: u64,
) -> Result<(PlannedPath, EpisodeLog)> {
    let path = plan(planner, env, config, seed)?;
    path.validate(env)?;
    let log = execute_plan(env, &path)?;
    Ok((path, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::VlcParams;
    use crate::env::{RewardParams, WorldInstance};

    fn env(gus: Vec<[f64; 2]>) -> Environment {
        let vlc = VlcParams {
            capacity_threshold: 6.19,
            ..VlcParams::reference()
        };
        Environment::new(WorldInstance::new(100.0, gus, 13.0), vlc, RewardParams::default()).unwrap()
    }

    #[test]
    fn every_planner_serves_everyone() {
        for seed in 0..5 {
            let e = env(WorldInstance::uniform_gus(100.0, 12, seed));
            for planner in Planner::ALL {
                let (path, log) = run_planner(planner, &e, &BaselineConfig::default(), seed).unwrap();
                assert!(log.success(), "{planner} seed {seed}");
                assert_eq!(path.service_events.len(), 12);
                assert_eq!(log.len() + 1, path.waypoints.len());
                assert!((log.total_distance() - path.total_length).abs() < 1e-6);
                for (rec, w) in log.steps.iter().zip(&path.waypoints[1..]) {
                    assert!((rec.x - w[0]).abs() < 1e-9 && (rec.y - w[1]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn scan_ignores_layout_until_truncation() {
        let a = env(WorldInstance::uniform_gus(100.0, 10, 1));
        let b = env(WorldInstance::uniform_gus(100.0, 30, 2));
        assert_eq!(path_length(&scan_waypoints(&a)), path_length(&scan_waypoints(&b)));
        let full = scan_sweep_length(100.0, a.comm_radius());
        assert!((path_length(&scan_waypoints(&a)) - full).abs() < 1e-9);
        assert!(scan_plan(&a).unwrap().total_length <= full + 200.0);
    }

    #[test]
    fn scan_stops_at_once_for_a_gu_at_the_start() {
        let p = scan_plan(&env(vec![[1.0, 1.0]])).unwrap();
        assert_eq!(p.waypoints.len(), 2);
        assert_eq!(p.service_events, vec![(0, 1)]);
    }

    #[test]
    fn scan_cleans_up_gus_between_rows() {
        // Exactly midway between the first two rows, at an odd x so that no
        // slot lands on the disk's single touching point.
        let r = env(vec![[0.0, 0.0]]).comm_radius();
        let e = env(vec![[51.3, r]]);
        let p = scan_plan(&e).unwrap();
        p.validate(&e).unwrap();
        execute_plan(&e, &p).unwrap();
    }

    #[test]
    fn execute_rejects_a_path_that_misses_a_gu() {
        let e = env(vec![[90.0, 90.0]]);
        let path = PlannedPath {
            waypoints: vec![[0.0, 0.0], [2.0, 0.0]],
            total_length: 2.0,
            service_events: vec![],
        };
        assert!(matches!(
            execute_plan(&e, &path),
            Err(Error::Constraint(ConstraintViolation::Incomplete { .. }))
        ));
        assert!(path.validate(&e).is_err());
    }

    #[test]
    fn contention_resolved_by_hovering() {
        let e = env(vec![[30.0, 0.0]; 3]);
        let (path, log) = run_planner(Planner::GreedyRrt, &e, &BaselineConfig::default(), 0).unwrap();
        assert!(log.steps.iter().all(|s| s.served_ids.len() <= 1));
        let last = path.waypoints.len() - 1;
        assert_eq!(path.waypoints[last], path.waypoints[last - 2]);
    }

    #[test]
    fn planners_are_deterministic() {
        let e = env(WorldInstance::uniform_gus(100.0, 15, 9));
        for planner in Planner::ALL {
            let a = plan(planner, &e, &BaselineConfig::default(), 4).unwrap();
            let b = plan(planner, &e, &BaselineConfig::default(), 4).unwrap();
            assert_eq!(a, b);
        }
    }
}

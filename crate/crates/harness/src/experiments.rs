//! Experiments behind the subcommands. Each returns plain rows; writing
//! them out is left to [`crate::output`].

use rayon::prelude::*;
use serde::Serialize;
use uavlc::altitude::ORACLE_STEP;
use uavlc::baselines::{path_length, plan, run_planner, scan_waypoints, PlannedPath, Planner};
use uavlc::env::{validate_episode, Environment, EpisodeLog};
use uavlc::td3::Td3Agent;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::train::greedy_rollout;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AltitudeRow {
    pub lambertian_order: f64,
    pub lambda: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h0: f64,
    /// Empty for a first-order LED, where the inflection point does not exist.
    pub h00: Option<f64>,
    pub h_star: f64,
    pub f_h_star: f64,
    pub oracle_argmax: f64,
    pub comm_radius: f64,
    pub reception_radius: f64,
}

pub fn altitude_report(cfg: &ExperimentConfig) -> Result<AltitudeRow> {
    let p = cfg.altitude_problem()?;
    let sp = p.stationary_points()?;
    let h_star = p.optimal_altitude_in_range()?;
    let vlc = cfg.vlc.params();
    Ok(AltitudeRow {
        lambertian_order: p.lambertian_order,
        lambda: p.lambda_coeff,
        h_min: p.h_min,
        h_max: p.h_max,
        h0: sp.h0,
        h00: sp.h00,
        h_star,
        f_h_star: p.f_of_h(h_star),
        oracle_argmax: p.oracle_grid_argmax(ORACLE_STEP)?,
        comm_radius: vlc.comm_radius(h_star)?,
        reception_radius: vlc.reception_radius(h_star),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gu_count: usize,
    pub altitude: f64,
    pub planner: Planner,
    /// `ok`, or `infeasible` when the communication radius vanishes.
    pub status: &'static str,
    pub comm_radius: f64,
    pub mean_distance: Option<f64>,
    pub std_distance: Option<f64>,
    pub runs: usize,
    /// Marks the closed-form optimal altitude's nearest grid point.
    pub is_h_star: bool,
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Planner flight distance versus altitude for every configured GU count.
pub fn altitude_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let altitudes = cfg.sweep.altitudes();
    let h_star = cfg.altitude_problem()?.optimal_altitude_in_range()?;
    let nearest = altitudes
        .iter()
        .copied()
        .min_by(|a, b| (a - h_star).abs().total_cmp(&(b - h_star).abs()))
        .unwrap_or(h_star);
    let vlc = cfg.vlc.params();
    let seeds = cfg.sweep.seed_list();
    let points: Vec<(usize, f64)> = cfg
        .sweep
        .gu_counts
        .iter()
        .flat_map(|&n| altitudes.iter().map(move |&h| (n, h)))
        .collect();
    points
        .par_iter()
        .map(|&(n, h)| {
            let comm = vlc.comm_radius(h)?;
            let mut row = SweepRow {
                gu_count: n,
                altitude: h,
                planner: cfg.sweep.planner,
                status: "ok",
                comm_radius: comm,
                mean_distance: None,
                std_distance: None,
                runs: 0,
                is_h_star: h == nearest,
            };
            if comm <= 0.0 {
                row.status = "infeasible";
                return Ok(row);
            }
            let mut lengths = Vec::with_capacity(seeds.len());
            for &seed in &seeds {
                let env = cfg.random_environment(n, seed, h)?;
                lengths.push(plan(cfg.sweep.planner, &env, &cfg.baseline, seed)?.total_length);
            }
            let (m, s) = mean_std(&lengths);
            row.mean_distance = Some(m);
            row.std_distance = Some(s);
            row.runs = lengths.len();
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    #[serde(rename = "I")]
    pub gu_count: usize,
    pub algorithm: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    /// Runs that did not serve every GU; excluded from mean and std.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainedMapRow {
    pub algorithm: String,
    pub distance: f64,
    pub steps: usize,
    pub success: bool,
    /// `(distance − ACO-RRT distance) / ACO-RRT distance`.
    pub gap_vs_aco: f64,
}

/// Distance SCAN reports: the full sweep, which does not depend on the GUs.
pub fn scan_full_length(env: &Environment) -> f64 {
    path_length(&scan_waypoints(env))
}

/// Baselines over random layouts for every configured GU count, plus the
/// learned policy on its own map when a policy is given.
pub fn compare(cfg: &ExperimentConfig, policy: Option<&Td3Agent>) -> Result<(Vec<CompareRow>, Vec<TrainedMapRow>)> {
    let h = cfg.flight_altitude()?;
    let seeds = cfg.sweep.seed_list();
    let jobs: Vec<(usize, Planner)> = cfg
        .sweep
        .gu_counts
        .iter()
        .flat_map(|&n| Planner::ALL.into_iter().map(move |p| (n, p)))
        .collect();
    let mut rows: Vec<CompareRow> = jobs
        .par_iter()
        .map(|&(n, planner)| {
            let mut lengths = Vec::with_capacity(seeds.len());
            for &seed in &seeds {
                let env = cfg.random_environment(n, seed, h)?;
                let len = match planner {
                    Planner::Scan => {
                        run_planner(planner, &env, &cfg.baseline, seed)?;
                        scan_full_length(&env)
                    }
                    _ => run_planner(planner, &env, &cfg.baseline, seed)?.0.total_length,
                };
                lengths.push(len);
            }
            let (mean, std) = mean_std(&lengths);
            Ok(CompareRow {
                gu_count: n,
                algorithm: planner.name().to_string(),
                mean,
                std,
                runs: lengths.len(),
                failures: 0,
            })
        })
        .collect::<Result<_>>()?;

    let mut trained = Vec::new();
    if let Some(agent) = policy {
        let env = cfg.environment()?;
        check_policy_fits(&env, agent)?;
        let mut entries: Vec<(String, f64, usize, bool)> = Vec::new();
        for planner in Planner::ALL {
            let (path, log) = run_planner(planner, &env, &cfg.baseline, cfg.world.seed)?;
            entries.push((planner.name().to_string(), path.total_length, log.len(), true));
        }
        let log = greedy_rollout(&env, agent);
        validate_episode(&env, &log).map_err(uavlc::Error::from)?;
        entries.push(("TD3".to_string(), log.total_distance(), log.len(), log.success()));
        let aco = entries[2].1;
        trained = entries
            .into_iter()
            .map(|(algorithm, distance, steps, success)| TrainedMapRow {
                algorithm,
                gap_vs_aco: (distance - aco) / aco,
                distance,
                steps,
                success,
            })
            .collect();
        let td3 = trained.last().expect("TD3 row");
        rows.push(CompareRow {
            gu_count: env.world().gu_count(),
            algorithm: "TD3".into(),
            mean: if td3.success { td3.distance } else { f64::NAN },
            std: 0.0,
            runs: 1,
            failures: usize::from(!td3.success),
        });
    }
    Ok((rows, trained))
}

pub fn check_policy_fits(env: &Environment, agent: &Td3Agent) -> Result<()> {
    if agent.obs_dim() != env.obs_dim() {
        return Err(HarnessError::Config(format!(
            "policy was trained for {} GUs, the configured world has {}",
            (agent.obs_dim().saturating_sub(3)) / 2,
            env.world().gu_count()
        )));
    }
    Ok(())
}

/// One planner on the configured world.
pub fn baseline(cfg: &ExperimentConfig, planner: Planner) -> Result<(PlannedPath, EpisodeLog)> {
    let env = cfg.environment()?;
    Ok(run_planner(planner, &env, &cfg.baseline, cfg.world.seed)?)
}

/// Noise-free rollout of a trained policy on the configured world, checked
/// against the mission constraints.
pub fn evaluate(cfg: &ExperimentConfig, agent: &Td3Agent) -> Result<(Environment, EpisodeLog)> {
    let env = cfg.environment()?;
    check_policy_fits(&env, agent)?;
    let log = greedy_rollout(&env, agent);
    validate_episode(&env, &log).map_err(uavlc::Error::from)?;
    Ok((env, log))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuRow {
    pub gu: usize,
    pub x: f64,
    pub y: f64,
    pub comm_radius: f64,
    pub reception_radius: f64,
    /// Slot in which the GU was served; empty when it never was.
    pub served_step: Option<usize>,
}

pub fn gu_rows(env: &Environment, log: &EpisodeLog) -> Vec<GuRow> {
    let mut served = vec![None; env.world().gu_count()];
    for s in &log.steps {
        for &g in &s.served_ids {
            served[g] = Some(s.step);
        }
    }
    env.world()
        .gu_positions
        .iter()
        .enumerate()
        .map(|(i, p)| GuRow {
            gu: i,
            x: p[0],
            y: p[1],
            comm_radius: env.comm_radius(),
            reception_radius: env.reception_radius(),
            served_step: served[i],
        })
        .collect()
}

//! Command-line front end. [`run`] does the work so tests can drive it in-process.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use uavlc::baselines::Planner;
use uavlc::td3::{Checkpoint, ReplayBuffer, Td3Agent};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{self, mean_std};
use crate::output::{self, file_name, Manifest};
use crate::train::{episodes_to_converge, EpisodeRow, Trainer};

#[derive(Debug, Parser)]
#[command(name = "uavlc", version, about = "UAV visible-light data collection experiments")]
pub struct Cli {
    /// JSON config file; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    /// Override one config key, e.g. `--set world.gu_count=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Output directory; wins over the config file and UAVLC_OUT_DIR.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form optimal altitude next to the grid-search oracle.
    Altitude,
    /// Planner flight distance against altitude.
    Sweep,
    /// Train the TD3 planner on the configured world.
    Train {
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Episode budget; overrides td3.max_episodes.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Noise-free rollout of a trained policy.
    Eval {
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Run one benchmark planner on the configured world.
    Baseline { planner: PlannerArg },
    /// Benchmark planners (and the policy, when available) across GU counts.
    Compare {
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Trajectory of a trained policy with per-GU radii.
    DumpTraj {
        #[arg(long)]
        policy: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PlannerArg {
    Scan,
    Greedy,
    Aco,
}

impl From<PlannerArg> for Planner {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Scan => Planner::Scan,
            PlannerArg::Greedy => Planner::GreedyRrt,
            PlannerArg::Aco => Planner::AcoRrt,
        }
    }
}

pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const POLICY_FILE: &str = "policy.json";

/// Loads the config and runs the command; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let dir = cfg.output_dir.clone();
    output::ensure_dir(&dir)?;
    match &cli.command {
        Command::Altitude => altitude(&cfg, &dir),
        Command::Sweep => sweep(&cfg, &dir),
        Command::Train { resume, episodes } => {
            if let Some(n) = episodes {
                cfg.td3.max_episodes = *n;
            }
            train(&cfg, &dir, resume.as_deref())
        }
        Command::Eval { policy } => eval(&cfg, &dir, policy.as_deref()),
        Command::Baseline { planner } => baseline(&cfg, &dir, (*planner).into()),
        Command::Compare { policy } => compare(&cfg, &dir, policy.as_deref()),
        Command::DumpTraj { policy } => dump_traj(&cfg, &dir, policy.as_deref()),
    }
}

fn finish(mut manifest: Manifest<'_>, dir: &Path, mut files: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    manifest.outputs = files.iter().map(|p| file_name(p)).collect();
    files.push(manifest.write(dir)?);
    Ok(files)
}

fn altitude(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let row = experiments::altitude_report(cfg)?;
    let path = dir.join("altitude.csv");
    output::write_rows(&path, std::slice::from_ref(&row))?;
    print!("{}", std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?);
    let mut m = Manifest::new("altitude", cfg);
    m.summary = json!({ "h_star": row.h_star, "oracle_argmax": row.oracle_argmax });
    finish(m, dir, vec![path])
}

fn sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = experiments::altitude_sweep(cfg)?;
    let path = dir.join("sweep.csv");
    output::write_rows(&path, &rows)?;
    let mut m = Manifest::new("sweep", cfg);
    m.seeds = cfg.sweep.seed_list();
    let mut minima = serde_json::Map::new();
    for &n in &cfg.sweep.gu_counts {
        let best = rows
            .iter()
            .filter(|r| r.gu_count == n && r.mean_distance.is_some())
            .min_by(|a, b| a.mean_distance.unwrap().total_cmp(&b.mean_distance.unwrap()));
        if let Some(b) = best {
            eprintln!("I = {n}: shortest mean distance {:.1} m at h = {}", b.mean_distance.unwrap(), b.altitude);
            minima.insert(n.to_string(), json!(b.altitude));
        }
    }
    m.summary = json!({ "argmin_altitude": minima });
    finish(m, dir, vec![path])
}

/// Reads back the first `keep` rows of an earlier convergence file.
fn previous_rows(path: &Path, keep: usize) -> Result<Vec<EpisodeRow>> {
    let f = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rows = Vec::with_capacity(keep);
    for r in csv::Reader::from_reader(f).deserialize().take(keep) {
        rows.push(r?);
    }
    if rows.len() < keep {
        return Err(HarnessError::Runtime(format!(
            "{} has {} rows but the checkpoint is at episode {keep}",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows)
}

/// Training with convergence rows; resumes bit-for-bit from a checkpoint.
pub fn train(cfg: &ExperimentConfig, dir: &Path, resume: Option<&Path>) -> Result<Vec<PathBuf>> {
    let env = cfg.environment()?;
    let conv_path = dir.join(CONVERGENCE_CSV);
    let ck_path = dir.join(CHECKPOINT_FILE);
    let (mut trainer, mut rows) = match resume {
        Some(p) => {
            let ck = output::load_checkpoint(p)?;
            let rows = previous_rows(&conv_path, ck.episodes_done)?;
            let mut t = Trainer::resume(env, ck)?;
            t.set_max_episodes(cfg.td3.max_episodes);
            (t, rows)
        }
        None => (Trainer::new(env, cfg.td3.clone(), cfg.train.seed)?, Vec::new()),
    };
    let t = &cfg.train;
    let mut successes: Vec<bool> = rows.iter().map(|r| r.success).collect();
    let mut converged = episodes_to_converge(&successes, t.success_window, t.success_threshold);
    while trainer.episodes_done() < cfg.td3.max_episodes {
        if t.stop_at_convergence && converged.is_some() {
            break;
        }
        let row = match trainer.run_episode() {
            Ok(r) => r,
            Err(e) => {
                let failed = dir.join("checkpoint_failed.json");
                output::save_checkpoint(&failed, &trainer.checkpoint())?;
                output::write_rows(&conv_path, &rows)?;
                return Err(HarnessError::Runtime(format!(
                    "training stopped in episode {}: {e}; state saved to {}",
                    trainer.episodes_done() + 1,
                    failed.display()
                )));
            }
        };
        successes.push(row.success);
        rows.push(row);
        if converged.is_none() {
            converged = episodes_to_converge(&successes, t.success_window, t.success_threshold);
        }
        let done = trainer.episodes_done();
        if t.checkpoint_every > 0 && done % t.checkpoint_every == 0 {
            output::save_checkpoint(&ck_path, &trainer.checkpoint())?;
            output::write_rows(&conv_path, &rows)?;
        }
        if done % 100 == 0 {
            let recent = &successes[done.saturating_sub(t.success_window)..];
            let rate = recent.iter().filter(|&&s| s).count() as f64 / recent.len() as f64;
            eprintln!("episode {done}: rolling success {rate:.2}");
        }
    }
    output::write_rows(&conv_path, &rows)?;
    output::save_checkpoint(&ck_path, &trainer.checkpoint())?;
    let policy_path = dir.join(POLICY_FILE);
    let policy = Checkpoint::new(trainer.agent().clone(), ReplayBuffer::new(1), trainer.episodes_done());
    output::save_checkpoint(&policy_path, &policy)?;

    let mut m = Manifest::new("train", cfg);
    m.seeds = vec![cfg.world.seed, cfg.train.seed];
    m.summary = json!({
        "episodes": trainer.episodes_done(),
        "episodes_to_converge": converged,
        "success_window": t.success_window,
        "success_threshold": t.success_threshold,
    });
    finish(m, dir, vec![conv_path, ck_path, policy_path])
}

fn load_policy(dir: &Path, policy: Option<&Path>) -> Result<Td3Agent> {
    let path = policy.map_or_else(|| dir.join(POLICY_FILE), Path::to_path_buf);
    Ok(output::load_checkpoint(&path)?.agent)
}

fn eval(cfg: &ExperimentConfig, dir: &Path, policy: Option<&Path>) -> Result<Vec<PathBuf>> {
    let agent = load_policy(dir, policy)?;
    let (_, log) = experiments::evaluate(cfg, &agent)?;
    let path = dir.join("eval_log.csv");
    output::write_log(&path, &log)?;
    eprintln!(
        "served {}/{} in {} slots, {:.2} m",
        log.served_total(),
        cfg.environment()?.world().gu_count(),
        log.len(),
        log.total_distance()
    );
    let mut m = Manifest::new("eval", cfg);
    m.seeds = vec![cfg.world.seed];
    m.summary = json!({
        "success": log.success(),
        "steps": log.len(),
        "distance": log.total_distance(),
        "return": log.total_reward(),
    });
    finish(m, dir, vec![path])
}

fn baseline(cfg: &ExperimentConfig, dir: &Path, planner: Planner) -> Result<Vec<PathBuf>> {
    let (path, log) = experiments::baseline(cfg, planner)?;
    let slug = planner.name().to_lowercase().replace('-', "_");
    let file = dir.join(format!("baseline_{slug}.csv"));
    output::write_log(&file, &log)?;
    eprintln!("{planner}: {:.2} m in {} slots", path.total_length, log.len());
    let command = format!("baseline {slug}");
    let mut m = Manifest::new(&command, cfg);
    m.seeds = vec![cfg.world.seed];
    m.summary = json!({ "planner": planner.name(), "distance": path.total_length, "steps": log.len() });
    finish(m, dir, vec![file])
}

fn compare(cfg: &ExperimentConfig, dir: &Path, policy: Option<&Path>) -> Result<Vec<PathBuf>> {
    let agent = match load_policy(dir, policy) {
        Ok(a) => Some(a),
        Err(e) => {
            eprintln!("warning: no usable policy ({e}); the TD3 row is omitted");
            None
        }
    };
    let (rows, trained) = experiments::compare(cfg, agent.as_ref())?;
    let path = dir.join("compare.csv");
    output::write_rows(&path, &rows)?;
    let mut files = vec![path];
    let mut summary = serde_json::Map::new();
    if !trained.is_empty() {
        let p = dir.join("compare_trained_map.csv");
        output::write_rows(&p, &trained)?;
        files.push(p);
        let td3 = trained.last().expect("TD3 row");
        eprintln!("TD3 vs ACO-RRT on the trained map: {:+.1}%", 100.0 * td3.gap_vs_aco);
        summary.insert("td3_gap_vs_aco".into(), json!(td3.gap_vs_aco));
    }
    for planner in Planner::ALL {
        let means: Vec<f64> = rows.iter().filter(|r| r.algorithm == planner.name()).map(|r| r.mean).collect();
        let (m, _) = mean_std(&means);
        summary.insert(format!("{}_mean_over_counts", planner.name()), json!(m));
    }
    let mut m = Manifest::new("compare", cfg);
    m.seeds = cfg.sweep.seed_list();
    m.summary = serde_json::Value::Object(summary);
    finish(m, dir, files)
}

fn dump_traj(cfg: &ExperimentConfig, dir: &Path, policy: Option<&Path>) -> Result<Vec<PathBuf>> {
    let agent = load_policy(dir, policy)?;
    let (env, log) = experiments::evaluate(cfg, &agent)?;
    let traj = dir.join("trajectory.csv");
    write_trajectory(&traj, &log, env.comm_radius(), env.reception_radius())?;
    let gus = dir.join("trajectory_gus.csv");
    output::write_rows(&gus, &experiments::gu_rows(&env, &log))?;
    let mut m = Manifest::new("dump-traj", cfg);
    m.seeds = vec![cfg.world.seed];
    m.summary = json!({
        "success": log.success(),
        "steps": log.len(),
        "distance": log.total_distance(),
        "start": env.world().start,
        "altitude": env.world().altitude,
    });
    finish(m, dir, vec![traj, gus])
}

/// Episode-log columns plus the two radii, one row per slot.
fn write_trajectory(path: &Path, log: &uavlc::env::EpisodeLog, comm: f64, recep: f64) -> Result<()> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("csv output is UTF-8");
    let mut out = String::with_capacity(text.len() + 40 * log.len());
    for (k, line) in text.lines().enumerate() {
        out.push_str(line);
        if k == 0 {
            out.push_str(",comm_radius,reception_radius\n");
        } else {
            out.push_str(&format!(",{comm},{recep}\n"));
        }
    }
    std::fs::write(path, out).map_err(|e| HarnessError::io(path, e))
}

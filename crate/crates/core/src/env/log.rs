use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{approach_sum, pheromone_update, Environment};
use crate::Result;

/// Slack on the per-slot distance bound to absorb trigonometric round-off.
const DISTANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub theta: f64,
    pub zeta: f64,
    pub reward: f64,
    pub served_ids: Vec<usize>,
    pub boundary_hit: bool,
    pub action_clamped: bool,
    /// Distance flown in this slot.
    pub distance: f64,
    pub done: bool,
    /// Ended by the step cap rather than by completion.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub start: [f64; 2],
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    step: usize,
    x: f64,
    y: f64,
    v: f64,
    theta: f64,
    zeta: f64,
    reward: f64,
    served_ids: String,
    boundary_hit: u8,
}

impl EpisodeLog {
    pub fn new(start: [f64; 2]) -> Self {
        Self {
            start,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, record: StepRecord) {
        self.steps.push(record);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_distance(&self) -> f64 {
        self.steps.iter().map(|s| s.distance).sum()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    pub fn success(&self) -> bool {
        self.steps.last().is_some_and(|s| s.done && !s.truncated)
    }

    pub fn served_total(&self) -> usize {
        self.steps.iter().map(|s| s.served_ids.len()).sum()
    }

    /// Positions including the start, one more entry than there are steps.
    pub fn positions(&self) -> Vec<[f64; 2]> {
        std::iter::once(self.start)
            .chain(self.steps.iter().map(|s| [s.x, s.y]))
            .collect()
    }

    /// Header `step,x,y,v,theta,zeta,reward,served_ids,boundary_hit`;
    /// served ids are `;`-separated. Floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        for s in &self.steps {
            w.serialize(CsvRow {
                step: s.step,
                x: s.x,
                y: s.y,
                v: s.v,
                theta: s.theta,
                zeta: s.zeta,
                reward: s.reward,
                served_ids: join_ids(&s.served_ids),
                boundary_hit: s.boundary_hit as u8,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a log written by [`write_csv`](Self::write_csv). Per-slot
    /// distances are recomputed from positions; `done` is set on the final
    /// row when every one of `gu_count` GUs has been served.
    pub fn read_csv<R: Read>(reader: R, start: [f64; 2], gu_count: usize) -> Result<Self> {
        let mut log = Self::new(start);
        let mut prev = start;
        let mut served = 0usize;
        for row in csv::Reader::from_reader(reader).deserialize() {
            let row: CsvRow = row?;
            let served_ids = split_ids(&row.served_ids)?;
            served += served_ids.len();
            log.push(StepRecord {
                step: row.step,
                x: row.x,
                y: row.y,
                v: row.v,
                theta: row.theta,
                zeta: row.zeta,
                reward: row.reward,
                served_ids,
                boundary_hit: row.boundary_hit != 0,
                action_clamped: false,
                distance: (row.x - prev[0]).hypot(row.y - prev[1]),
                done: false,
                truncated: false,
            });
            prev = [row.x, row.y];
        }
        if let Some(last) = log.steps.last_mut() {
            last.done = served == gu_count;
        }
        Ok(log)
    }
}

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

fn split_ids(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|t| {
            t.parse()
                .map_err(|_| crate::Error::InvalidParameter(format!("bad served id {t:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintViolation {
    #[error("step {step}: {count} GUs served, more than k_up = {k_up}")]
    TooManyServed { step: usize, count: usize, k_up: usize },
    #[error("all GUs served = {served}/{total} at the end of a completed episode")]
    Incomplete { served: usize, total: usize },
    #[error("step {step}: flew {distance} m, more than d_max = {d_max}")]
    StepTooLong { step: usize, distance: f64, d_max: f64 },
    #[error("step {step}: position ({x}, {y}) outside the arena")]
    OutOfBounds { step: usize, x: f64, y: f64 },
    #[error("altitude {altitude} below h_min = {h_min}")]
    BelowMinAltitude { altitude: f64, h_min: f64 },
    #[error("step {step}: GU {gu} served outside its communication radius")]
    ServedOutOfRange { step: usize, gu: usize },
    #[error("step {step}: GU {gu} served twice")]
    ServedTwice { step: usize, gu: usize },
    #[error("step {step}: unknown GU {gu}")]
    UnknownGu { step: usize, gu: usize },
}

/// Checks a log against the mission constraints: at most `k_up` GUs per
/// slot, completion when the log claims done, per-slot distance within
/// `d_max`, positions inside the arena, altitude at or above `h_min`. Also
/// rejects GUs served twice or served without sufficient link gain.
pub fn validate_episode(env: &Environment, log: &EpisodeLog) -> Result<(), ConstraintViolation> {
    let world = env.world();
    if !(world.altitude >= world.h_min) {
        return Err(ConstraintViolation::BelowMinAltitude {
            altitude: world.altitude,
            h_min: world.h_min,
        });
    }
    let total = world.gu_count();
    let mut served = vec![false; total];
    let mut prev = log.start;
    for s in &log.steps {
        if s.served_ids.len() > world.k_up {
            return Err(ConstraintViolation::TooManyServed {
                step: s.step,
                count: s.served_ids.len(),
                k_up: world.k_up,
            });
        }
        let distance = (s.x - prev[0]).hypot(s.y - prev[1]);
        if distance > world.d_max + DISTANCE_TOL {
            return Err(ConstraintViolation::StepTooLong {
                step: s.step,
                distance,
                d_max: world.d_max,
            });
        }
        if !world.contains([s.x, s.y]) {
            return Err(ConstraintViolation::OutOfBounds {
                step: s.step,
                x: s.x,
                y: s.y,
            });
        }
        let distances = env.horizontal_distances([s.x, s.y]);
        for &gu in &s.served_ids {
            if gu >= total {
                return Err(ConstraintViolation::UnknownGu { step: s.step, gu });
            }
            if served[gu] {
                return Err(ConstraintViolation::ServedTwice { step: s.step, gu });
            }
            if env.gain_at(distances[gu]) < env.gain_threshold() {
                return Err(ConstraintViolation::ServedOutOfRange { step: s.step, gu });
            }
            served[gu] = true;
        }
        prev = [s.x, s.y];
    }
    let count = served.iter().filter(|&&c| c).count();
    let claims_done = log.steps.last().is_some_and(|s| s.done && !s.truncated);
    if claims_done && count != total {
        return Err(ConstraintViolation::Incomplete {
            served: count,
            total,
        });
    }
    Ok(())
}

/// Recomputes the pheromone sequence from the logged positions, served ids
/// and boundary flags alone.
pub fn replay_pheromone(env: &Environment, log: &EpisodeLog) -> Vec<f64> {
    let gus = env.world().gu_count();
    let mut served = vec![false; gus];
    let mut prev_d = env.horizontal_distances(log.start);
    let mut zeta = 0.0;
    log.steps
        .iter()
        .map(|s| {
            let d = env.horizontal_distances([s.x, s.y]);
            for &i in &s.served_ids {
                served[i] = true;
            }
            let approach = approach_sum(
                env.reward_params(),
                &prev_d,
                &d,
                &served,
                env.comm_radius(),
                env.reception_radius(),
            );
            zeta = pheromone_update(
                zeta,
                env.reward_params(),
                s.served_ids.len(),
                approach,
                s.boundary_hit,
            );
            prev_d = d;
            zeta
        })
        .collect()
}

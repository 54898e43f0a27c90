//! Goal-biased RRT towards a disk, with shortcut smoothing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tour::{disk_entry, dist};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RrtConfig {
    /// Tree extension length in metres; `None` uses the world's `d_max`.
    pub step: Option<f64>,
    /// Probability of sampling the goal centre instead of a uniform point.
    pub goal_bias: f64,
    pub max_iterations: usize,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            step: None,
            goal_bias: 0.1,
            max_iterations: 100_000,
        }
    }
}

impl RrtConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!("RRT step must be positive, got {s}")));
            }
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(Error::InvalidParameter(format!(
                "goal bias must lie in [0, 1], got {}",
                self.goal_bias
            )));
        }
        Ok(())
    }
}

/// Plans from `from` to any point of the disk `(center, radius)` inside the
/// square `[0, side]²`. The returned waypoints start at `from`, end inside
/// the disk and are at most `max_segment` apart.
pub fn rrt_connect<R: Rng + ?Sized>(
    side: f64,
    from: [f64; 2],
    center: [f64; 2],
    radius: f64,
    max_segment: f64,
    config: &RrtConfig,
    rng: &mut R,
) -> Result<Vec<[f64; 2]>> {
    config.validate()?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("goal radius must be positive, got {radius}")));
    }
    let inside = |p: [f64; 2]| (0.0..=side).contains(&p[0]) && (0.0..=side).contains(&p[1]);
    if !inside(from) {
        return Err(Error::InvalidParameter(format!("start {from:?} lies outside the arena")));
    }
    if dist(from, center) <= radius {
        return Ok(vec![from]);
    }
    let step = config.step.unwrap_or(max_segment);

    let mut nodes = vec![from];
    let mut parent = vec![usize::MAX];
    for _ in 0..config.max_iterations {
        let sample = if rng.random::<f64>() < config.goal_bias {
            center
        } else {
            [rng.random_range(0.0..=side), rng.random_range(0.0..=side)]
        };
        let (near, d) = nodes
            .iter()
            .enumerate()
            .map(|(i, &p)| (i, dist(p, sample)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if d == 0.0 {
            continue;
        }
        let t = (step / d).min(1.0);
        let base = nodes[near];
        let new = [
            base[0] + t * (sample[0] - base[0]),
            base[1] + t * (sample[1] - base[1]),
        ];
        nodes.push(new);
        parent.push(near);
        if dist(new, center) <= radius {
            let mut path = vec![new];
            let mut i = nodes.len() - 1;
            while parent[i] != usize::MAX {
                i = parent[i];
                path.push(nodes[i]);
            }
            path.reverse();
            let free = |a, b| inside(a) && inside(b);
            let path = shortcut(&path, free);
            let mut path = cut_at_disk(&path, center, radius);
            // Shortcut into the goal region itself: the last leg may end at
            // the nearest point of the disk instead of wherever the tree hit it.
            if path.len() >= 2 {
                let last = path.len() - 1;
                let prev = path[last - 1];
                let nearest = disk_entry(prev, center, radius * (1.0 - 1e-12));
                if dist(nearest, center) <= radius && free(prev, nearest) {
                    path[last] = nearest;
                }
            }
            return Ok(densify(&path, max_segment));
        }
    }
    Err(Error::PlanningFailure {
        iterations: config.max_iterations,
    })
}

/// Greedy shortcutting: from each kept waypoint jump to the furthest later
/// waypoint reachable by a free straight segment.
pub fn shortcut<F>(path: &[[f64; 2]], free: F) -> Vec<[f64; 2]>
where
    F: Fn([f64; 2], [f64; 2]) -> bool,
{
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !free(path[i], path[j]) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Stops the polyline at its first point inside the disk.
pub fn cut_at_disk(path: &[[f64; 2]], center: [f64; 2], radius: f64) -> Vec<[f64; 2]> {
    let mut out = vec![path[0]];
    if dist(path[0], center) <= radius {
        return out;
    }
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let dx = b[0] - a[0];
        let dy = b[1] - a[1];
        let fx = a[0] - center[0];
        let fy = a[1] - center[1];
        let qa = dx * dx + dy * dy;
        let qb = 2.0 * (fx * dx + fy * dy);
        let qc = fx * fx + fy * fy - radius * radius;
        let disc = qb * qb - 4.0 * qa * qc;
        if qa > 0.0 && disc >= 0.0 {
            let t = (-qb - disc.sqrt()) / (2.0 * qa);
            if (0.0..=1.0).contains(&t) {
                let p = [a[0] + t * dx, a[1] + t * dy];
                // Land on the inside of the boundary despite rounding.
                out.push(if dist(p, center) <= radius { p } else { b });
                return out;
            }
        }
        out.push(b);
    }
    out
}

/// Splits every segment into equal pieces no longer than `max_segment`.
pub fn densify(path: &[[f64; 2]], max_segment: f64) -> Vec<[f64; 2]> {
    let mut out = vec![path[0]];
    // Keep pieces a hair under the limit so that rounding never exceeds it.
    let limit = max_segment * (1.0 - 1e-9);
    for w in path.windows(2) {
        let len = dist(w[0], w[1]);
        let pieces = (len / limit).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            let t = k as f64 / pieces as f64;
            out.push([
                w[0][0] + t * (w[1][0] - w[0][0]),
                w[0][1] + t * (w[1][1] - w[0][1]),
            ]);
        }
    }
    out
}

pub fn path_length(path: &[[f64; 2]]) -> f64 {
    path.windows(2).map(|w| dist(w[0], w[1])).sum()
}

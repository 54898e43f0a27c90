//! Ant System over open tours from the UAV start through every GU disk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tour::{dist, tour_length};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcoConfig {
    pub ant_count: usize,
    /// Pheromone exponent α.
    pub pheromone_weight: f64,
    /// Heuristic (inverse distance) exponent β.
    pub heuristic_weight: f64,
    /// Fraction of pheromone lost per iteration.
    pub evaporation: f64,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl Default for AcoConfig {
    fn default() -> Self {
        Self {
            ant_count: 20,
            pheromone_weight: 1.0,
            heuristic_weight: 3.0,
            evaporation: 0.5,
            iterations: 200,
            rng_seed: 0,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ant_count == 0 {
            return Err(Error::InvalidParameter("ACO needs at least one ant".into()));
        }
        if !(self.pheromone_weight > 0.0 && self.heuristic_weight > 0.0) {
            return Err(Error::InvalidParameter("ACO weights must be positive".into()));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "evaporation must lie in (0, 1), got {}",
                self.evaporation
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoResult {
    pub order: Vec<usize>,
    pub length: f64,
    /// Best-so-far tour length after each construction round.
    pub history: Vec<f64>,
}

/// Builds an approximately shortest visiting order. With `iterations = 0`
/// the colony makes a single construction round on uniform pheromone and
/// returns its best ant.
pub fn aco_order(
    gus: &[[f64; 2]],
    start: [f64; 2],
    radius: f64,
    config: &AcoConfig,
) -> Result<AcoResult> {
    config.validate()?;
    let n = gus.len();
    if n <= 1 {
        let order: Vec<usize> = (0..n).collect();
        let length = tour_length(start, gus, &order, radius);
        return Ok(AcoResult {
            order,
            length,
            history: vec![length],
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    // Row 0 is the start, row i + 1 is GU i; columns are GUs.
    let point = |row: usize| if row == 0 { start } else { gus[row - 1] };
    let desirability: Vec<Vec<f64>> = (0..=n)
        .map(|row| {
            (0..n)
                .map(|j| {
                    let d = dist(point(row), gus[j]).max(1e-9);
                    (1.0 / d).powf(config.heuristic_weight)
                })
                .collect()
        })
        .collect();
    let mut pheromone = vec![vec![1.0f64; n]; n + 1];

    let mut best_order: Vec<usize> = Vec::new();
    let mut best_len = f64::INFINITY;
    let mut history = Vec::with_capacity(config.iterations.max(1));
    let mut weights = vec![0.0; n];

    for _ in 0..config.iterations.max(1) {
        let mut tours = Vec::with_capacity(config.ant_count);
        for _ in 0..config.ant_count {
            let mut visited = vec![false; n];
            let mut order = Vec::with_capacity(n);
            let mut row = 0usize;
            for _ in 0..n {
                let mut total = 0.0;
                for j in 0..n {
                    weights[j] = if visited[j] {
                        0.0
                    } else {
                        pheromone[row][j].powf(config.pheromone_weight) * desirability[row][j]
                    };
                    total += weights[j];
                }
                let next = roulette(&weights, total, &visited, &mut rng);
                visited[next] = true;
                order.push(next);
                row = next + 1;
            }
            let len = tour_length(start, gus, &order, radius);
            tours.push((order, len));
        }

        for (order, len) in &tours {
            if *len < best_len {
                best_len = *len;
                best_order = order.clone();
            }
        }
        history.push(best_len);

        if config.iterations > 0 {
            for row in pheromone.iter_mut() {
                for t in row.iter_mut() {
                    *t *= 1.0 - config.evaporation;
                }
            }
            for (order, len) in &tours {
                let deposit = 1.0 / len.max(1e-9);
                let mut row = 0;
                for &j in order {
                    pheromone[row][j] += deposit;
                    row = j + 1;
                }
            }
        }
    }
    Ok(AcoResult {
        order: best_order,
        length: best_len,
        history,
    })
}

fn roulette<R: Rng>(weights: &[f64], total: f64, visited: &[bool], rng: &mut R) -> usize {
    if total > 0.0 && total.is_finite() {
        let mut pick = rng.random::<f64>() * total;
        for (j, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                if pick < w {
                    return j;
                }
                pick -= w;
            }
        }
    }
    // Round-off at the tail, or every weight underflowed: last unvisited.
    visited
        .iter()
        .rposition(|&v| !v)
        .expect("at least one unvisited GU")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::tour::{brute_force_order, greedy_order};

    fn random_gus(n: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)])
            .collect()
    }

    #[test]
    fn three_gus_match_brute_force() {
        for seed in 0..20 {
            let gus = random_gus(3, seed);
            let cfg = AcoConfig {
                rng_seed: seed,
                ..Default::default()
            };
            let res = aco_order(&gus, [0.0, 0.0], 13.0, &cfg).unwrap();
            let (_, best) = brute_force_order(&gus, [0.0, 0.0], 13.0);
            assert!((res.length - best).abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn history_is_monotone_and_sized() {
        let gus = random_gus(12, 3);
        let cfg = AcoConfig {
            iterations: 50,
            ..Default::default()
        };
        let res = aco_order(&gus, [0.0, 0.0], 10.0, &cfg).unwrap();
        assert_eq!(res.history.len(), 50);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        let mut sorted = res.order.clone();
        sorted.sort();
        assert_eq!(sorted, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn zero_iterations_returns_best_initial_ant() {
        let gus = random_gus(8, 4);
        let cfg = AcoConfig {
            iterations: 0,
            ..Default::default()
        };
        let res = aco_order(&gus, [0.0, 0.0], 10.0, &cfg).unwrap();
        assert_eq!(res.history.len(), 1);
        assert_eq!(res.history[0], res.length);
    }

    #[test]
    fn seeded_runs_repeat() {
        let gus = random_gus(10, 5);
        let cfg = AcoConfig::default();
        let a = aco_order(&gus, [0.0, 0.0], 10.0, &cfg).unwrap();
        let b = aco_order(&gus, [0.0, 0.0], 10.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn usually_no_worse_than_greedy() {
        let mut wins = 0;
        for seed in 0..20 {
            let gus = random_gus(20, 100 + seed);
            let cfg = AcoConfig {
                rng_seed: seed,
                ..Default::default()
            };
            let aco = aco_order(&gus, [0.0, 0.0], 13.0, &cfg).unwrap().length;
            let greedy = tour_length([0.0, 0.0], &gus, &greedy_order(&gus, [0.0, 0.0], 13.0), 13.0);
            if aco <= greedy + 1e-9 {
                wins += 1;
            }
        }
        assert!(wins >= 14, "ACO beat greedy on only {wins}/20");
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AcoConfig {
            evaporation: 1.0,
            ..Default::default()
        };
        assert!(aco_order(&random_gus(3, 0), [0.0, 0.0], 1.0, &cfg).is_err());
    }
}

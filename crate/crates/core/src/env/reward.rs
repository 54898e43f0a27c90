//! Pheromone bookkeeping and the shaped reward.
//!
//! The pheromone `ζ` is a running scalar: each slot it gains `κ_cov` per
//! newly served GU, an approach bonus for every unserved GU whose
//! horizontal distance lies in the reception annulus
//! `(comm_radius, reception_radius]`, and loses `κ_dis` plus `P_ob` when the
//! UAV hit the arena boundary. The per-step reward squashes `ζ` through a
//! logistic and adds `1 / Σd` on mission completion.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Shaping {
    /// Serving reward, decay and penalty plus the annulus approach bonus.
    #[default]
    Pheromone,
    /// As above without the annulus approach bonus.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Pheromone gained per served GU.
    pub kappa_cov: f64,
    /// Pheromone lost every slot.
    pub kappa_dis: f64,
    /// Approach bonus per metre of closing distance inside the annulus.
    pub rho: f64,
    /// Boundary penalty.
    pub p_ob: f64,
    /// Use `ρ (d_n − d_{n−1})` (rewards receding) instead of `ρ (d_{n−1} − d_n)`.
    pub literal_sign: bool,
    pub shaping: Shaping,
    /// Upper bound on the completion bonus `1 / Σd`.
    pub r_dis_cap: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            kappa_cov: 1.0,
            kappa_dis: 0.01,
            rho: 0.1,
            p_ob: 0.5,
            literal_sign: false,
            shaping: Shaping::Pheromone,
            r_dis_cap: 1.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa_cov", self.kappa_cov),
            ("kappa_dis", self.kappa_dis),
            ("rho", self.rho),
            ("p_ob", self.p_ob),
            ("r_dis_cap", self.r_dis_cap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Approach bonus `κ^con` for one GU that moved from `d_prev` to `d_now`.
    pub fn approach_bonus(&self, d_prev: f64, d_now: f64) -> f64 {
        if self.literal_sign {
            self.rho * (d_now - d_prev)
        } else {
            self.rho * (d_prev - d_now)
        }
    }
}

/// Annulus indicator: the GU's light is received but too weak to serve,
/// and the GU is still waiting.
pub fn in_annulus(d_xy: f64, comm_radius: f64, reception_radius: f64, served: bool) -> bool {
    !served && comm_radius < d_xy && d_xy <= reception_radius
}

/// Sum of approach bonuses over all GUs, in index order.
pub fn approach_sum(
    params: &RewardParams,
    prev_distances: &[f64],
    distances: &[f64],
    served: &[bool],
    comm_radius: f64,
    reception_radius: f64,
) -> f64 {
    if params.shaping == Shaping::Sparse {
        return 0.0;
    }
    let mut sum = 0.0;
    for ((&d_prev, &d_now), &c) in prev_distances.iter().zip(distances).zip(served) {
        if in_annulus(d_now, comm_radius, reception_radius, c) {
            sum += params.approach_bonus(d_prev, d_now);
        }
    }
    sum
}

/// One pheromone recurrence step.
pub fn pheromone_update(
    previous: f64,
    params: &RewardParams,
    served_count: usize,
    approach_sum: f64,
    boundary_hit: bool,
) -> f64 {
    let penalty = if boundary_hit { params.p_ob } else { 0.0 };
    previous + served_count as f64 * params.kappa_cov + approach_sum - params.kappa_dis - penalty
}

/// Logistic squash `2 / (1 + exp(−ζ / (I κ_cov))) − 1`, in `(−1, 1)`.
pub fn shaped_reward(zeta: f64, gu_count: usize, kappa_cov: f64) -> f64 {
    let x = zeta / (gu_count as f64 * kappa_cov);
    // tanh(x/2) is the same curve without the cancellation near 0.
    (0.5 * x).tanh()
}

/// Per-step reward: the squashed pheromone, plus the capped inverse total
/// distance on the step that completes the mission.
pub fn reward(
    params: &RewardParams,
    zeta: f64,
    gu_count: usize,
    total_distance: f64,
    all_served: bool,
) -> f64 {
    let mut r = shaped_reward(zeta, gu_count, params.kappa_cov);
    if all_served {
        r += if total_distance > 0.0 {
            (1.0 / total_distance).min(params.r_dis_cap)
        } else {
            params.r_dis_cap
        };
    }
    r
}

//! Experiment configuration: one JSON document, overridable key by key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use uavlc::altitude::AltitudeProblem;
use uavlc::baselines::{BaselineConfig, Planner};
use uavlc::channel::{noise_std_from_dbm, VlcParams, CM2};
use uavlc::env::{Environment, RewardParams, WorldInstance};
use uavlc::td3::Td3Config;

use crate::error::{HarnessError, Result};

/// Environment variable that overrides `output_dir`.
pub const OUT_DIR_ENV: &str = "UAVLC_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldSection,
    pub vlc: VlcSection,
    pub reward: RewardParams,
    pub td3: Td3Config,
    pub train: TrainSection,
    pub baseline: BaselineConfig,
    pub sweep: SweepSection,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            world: WorldSection::default(),
            vlc: VlcSection::default(),
            reward: RewardParams::default(),
            td3: Td3Config::default(),
            train: TrainSection::default(),
            baseline: BaselineConfig::default(),
            sweep: SweepSection::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSection {
    /// Arena side `D`, metres.
    pub arena_side: f64,
    pub gu_count: usize,
    /// Seed of the uniform GU placement.
    pub seed: u64,
    /// Explicit GU positions; overrides `gu_count` and `seed` when present.
    pub gu_positions: Option<Vec<[f64; 2]>>,
    /// Flight altitude; the closed-form optimum over `[h_min, altitude_cap]` when absent.
    pub altitude: Option<f64>,
    pub h_min: f64,
    pub altitude_cap: f64,
    pub d_max: f64,
    pub k_up: usize,
    pub slot_duration: f64,
    pub start: [f64; 2],
    pub step_cap: usize,
}

impl Default for WorldSection {
    fn default() -> Self {
        Self {
            arena_side: 100.0,
            gu_count: 10,
            seed: 0,
            gu_positions: None,
            altitude: None,
            h_min: 10.0,
            altitude_cap: 200.0,
            d_max: 2.0,
            k_up: 1,
            slot_duration: 1.0,
            start: [0.0, 0.0],
            step_cap: 2000,
        }
    }
}

/// Link constants in the units they are usually quoted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VlcSection {
    pub semi_angle_deg: f64,
    pub fov_deg: f64,
    pub detector_area_cm2: f64,
    pub refractive_index: f64,
    pub illumination_response: f64,
    pub tx_power_w: f64,
    /// Noise power σ² in dBm.
    pub noise_dbm: f64,
    pub capacity_threshold: f64,
}

impl Default for VlcSection {
    fn default() -> Self {
        Self {
            semi_angle_deg: 60.0,
            fov_deg: 60.0,
            detector_area_cm2: 1.0,
            refractive_index: 1.5,
            illumination_response: 0.9,
            tx_power_w: 10.0,
            noise_dbm: -128.82,
            capacity_threshold: 6.19,
        }
    }
}

impl VlcSection {
    pub fn params(&self) -> VlcParams {
        VlcParams {
            semi_angle_half_power: self.semi_angle_deg.to_radians(),
            fov_half_angle: self.fov_deg.to_radians(),
            detector_area: self.detector_area_cm2 * CM2,
            refractive_index: self.refractive_index,
            illumination_response: self.illumination_response,
            tx_power: self.tx_power_w,
            noise_std: noise_std_from_dbm(self.noise_dbm),
            capacity_threshold: self.capacity_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Seeds network initialisation, exploration and minibatch sampling.
    pub seed: u64,
    /// Episodes in the rolling success window.
    pub success_window: usize,
    /// Rolling success rate that counts as converged.
    pub success_threshold: f64,
    /// Stop as soon as the rolling success rate reaches the threshold.
    pub stop_at_convergence: bool,
    /// Write a resumable checkpoint every this many episodes (0 = only at the end).
    pub checkpoint_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            seed: 0,
            success_window: 20,
            success_threshold: 0.9,
            stop_at_convergence: false,
            checkpoint_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub altitude_start: f64,
    pub altitude_stop: f64,
    pub altitude_step: f64,
    pub gu_counts: Vec<usize>,
    /// Number of GU layouts per grid point, seeded `first_seed ..`.
    pub seeds: usize,
    pub first_seed: u64,
    pub planner: Planner,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            altitude_start: 10.0,
            altitude_stop: 30.0,
            altitude_step: 0.5,
            gu_counts: vec![10, 15, 20, 25, 30],
            seeds: 10,
            first_seed: 0,
            planner: Planner::GreedyRrt,
        }
    }
}

impl SweepSection {
    pub fn altitudes(&self) -> Vec<f64> {
        let n = ((self.altitude_stop - self.altitude_start) / self.altitude_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| self.altitude_start + k as f64 * self.altitude_step)
            .collect()
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|k| self.first_seed + k).collect()
    }
}

impl ExperimentConfig {
    /// Reads a config file (or the defaults when `path` is `None`), applies
    /// `key.path=value` overrides and the output directory variable, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => serde_json::to_string_pretty(&Self::default())?,
        };
        let name = path.map_or_else(|| "<defaults>".to_string(), |p| p.display().to_string());
        let mut config = Self::parse(&text, &name, overrides)?;
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                config.output_dir = PathBuf::from(dir);
            }
        }
        Ok(config)
    }

    /// Parses and validates a JSON document; errors carry line numbers.
    pub fn parse(text: &str, name: &str, overrides: &[String]) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("{name}: {e}")))?;
        let config = if overrides.is_empty() {
            config
        } else {
            let mut value: Value = serde_json::from_str(text)?;
            for o in overrides {
                apply_override(&mut value, o)?;
            }
            serde_json::from_value(value).map_err(|e| HarnessError::Config(format!("override: {e}")))?
        };
        config.validate().map_err(|(key, msg)| {
            let at = locate_key(text, &key).map_or(String::new(), |line| format!(" (line {line})"));
            HarnessError::Config(format!("{name}: {key}{at}: {msg}"))
        })?;
        Ok(config)
    }

    /// Semantic checks; the error names the offending key.
    pub fn validate(&self) -> std::result::Result<(), (String, String)> {
        let key = |k: &str, e: uavlc::Error| (k.to_string(), e.to_string());
        let vlc = self.vlc.params();
        vlc.validate().map_err(|e| key("vlc", e))?;
        self.reward.validate().map_err(|e| key("reward", e))?;
        self.td3.validate().map_err(|e| key("td3", e))?;
        self.baseline.aco.validate().map_err(|e| key("baseline.aco", e))?;
        self.baseline.rrt.validate().map_err(|e| key("baseline.rrt", e))?;
        let w = &self.world;
        if !(w.altitude_cap > w.h_min) {
            return Err(("world.altitude_cap".into(), "must exceed h_min".into()));
        }
        if w.gu_positions.is_none() && w.gu_count == 0 {
            return Err(("world.gu_count".into(), "at least one ground user is required".into()));
        }
        let world = self.world_instance().map_err(|e| {
            let k = match e {
                uavlc::Error::InfeasibleAltitude { .. } => "world.altitude",
                _ => "world",
            };
            key(k, e)
        })?;
        world.validate().map_err(|e| key("world", e))?;

        let s = &self.sweep;
        if !(s.altitude_step > 0.0) {
            return Err(("sweep.altitude_step".into(), "must be positive".into()));
        }
        if !(s.altitude_start >= w.h_min && s.altitude_stop <= w.altitude_cap && s.altitude_start <= s.altitude_stop) {
            return Err((
                "sweep.altitude_start".into(),
                format!(
                    "altitude grid [{}, {}] must lie within [h_min, altitude_cap] = [{}, {}]",
                    s.altitude_start, s.altitude_stop, w.h_min, w.altitude_cap
                ),
            ));
        }
        if s.gu_counts.is_empty() || s.gu_counts.contains(&0) {
            return Err(("sweep.gu_counts".into(), "needs at least one positive GU count".into()));
        }
        if s.seeds == 0 {
            return Err(("sweep.seeds".into(), "must be at least 1".into()));
        }
        let t = &self.train;
        if t.success_window == 0 || !(t.success_threshold > 0.0 && t.success_threshold <= 1.0) {
            return Err((
                "train.success_window".into(),
                "window must be positive and threshold in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn altitude_problem(&self) -> uavlc::Result<AltitudeProblem> {
        AltitudeProblem::from_vlc(&self.vlc.params(), self.world.h_min, self.world.altitude_cap)
    }

    /// The altitude the experiments fly at: configured, else the closed-form optimum.
    pub fn flight_altitude(&self) -> uavlc::Result<f64> {
        match self.world.altitude {
            Some(h) => Ok(h),
            None => self.altitude_problem()?.optimal_altitude_in_range(),
        }
    }

    /// The configured world.
    pub fn world_instance(&self) -> uavlc::Result<WorldInstance> {
        let gus = match &self.world.gu_positions {
            Some(p) => p.clone(),
            None => WorldInstance::uniform_gus(self.world.arena_side, self.world.gu_count, self.world.seed),
        };
        self.world_with(gus, self.flight_altitude()?, self.world.seed)
    }

    /// A world with the configured kinematics but the given GUs, altitude and seed.
    pub fn world_with(&self, gus: Vec<[f64; 2]>, altitude: f64, seed: u64) -> uavlc::Result<WorldInstance> {
        let w = &self.world;
        let world = WorldInstance {
            arena_side: w.arena_side,
            gu_positions: gus,
            altitude,
            h_min: w.h_min,
            d_max: w.d_max,
            k_up: w.k_up,
            slot_duration: w.slot_duration,
            start: w.start,
            step_cap: w.step_cap,
            rng_seed: seed,
        };
        let comm = self.vlc.params().comm_radius(altitude)?;
        if comm <= 0.0 {
            return Err(uavlc::Error::InfeasibleAltitude { altitude });
        }
        Ok(world)
    }

    pub fn environment(&self) -> uavlc::Result<Environment> {
        Environment::new(self.world_instance()?, self.vlc.params(), self.reward)
    }

    /// Environment over `count` uniformly placed GUs from `seed`.
    pub fn random_environment(&self, count: usize, seed: u64, altitude: f64) -> uavlc::Result<Environment> {
        let gus = WorldInstance::uniform_gus(self.world.arena_side, count, seed);
        Environment::new(self.world_with(gus, altitude, seed)?, self.vlc.params(), self.reward)
    }
}

/// Applies one `a.b.c=value` override; the value is JSON when it parses as
/// such and a plain string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("override `{spec}` is not of the form key.path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(HarnessError::Config(format!("override `{spec}` has an empty key")));
    }
    for (i, k) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just created")
            }
            _ => {
                return Err(HarnessError::Config(format!(
                    "override `{spec}`: `{}` is not a section",
                    keys[..i].join(".")
                )))
            }
        };
        if i + 1 == keys.len() {
            obj.insert(k.to_string(), value);
            return Ok(());
        }
        node = obj.entry(k.to_string()).or_insert(Value::Null);
    }
    unreachable!("loop returns on the last key")
}

/// 1-based line of the deepest key of `path` present in the document,
/// searching each segment after the previous one.
pub fn locate_key(text: &str, path: &str) -> Option<usize> {
    let mut from = 0;
    let mut found = None;
    for seg in path.split('.') {
        let needle = format!("\"{seg}\"");
        match text[from..].find(&needle) {
            Some(pos) => {
                from += pos + needle.len();
                found = Some(from);
            }
            None => break,
        }
    }
    found.map(|pos| text[..pos].matches('\n').count() + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_fly_near_thirteen_metres() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let h = c.flight_altitude().unwrap();
        assert!((h - 13.0).abs() < 0.1, "h* = {h}");
    }

    #[test]
    fn round_trips_through_json() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(ExperimentConfig::parse(&text, "t", &[]).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = "{\n  \"world\": {\n    \"arena_side\": 50,\n    \"colour\": 3\n  }\n}";
        let err = ExperimentConfig::parse(text, "cfg.json", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour") && msg.contains("line 4"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let text = "{\n  \"world\": {\n    \"altitude\": 40.0\n  }\n}";
        let msg = ExperimentConfig::parse(text, "cfg.json", &[]).unwrap_err().to_string();
        assert!(msg.contains("world.altitude") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let c = ExperimentConfig::parse(
            "{}",
            "t",
            &[
                "world.gu_count=5".into(),
                "reward.shaping=sparse".into(),
                "td3.hidden_sizes=[32,32]".into(),
                "output_dir=runs/a".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.world.gu_count, 5);
        assert_eq!(c.reward.shaping, uavlc::env::Shaping::Sparse);
        assert_eq!(c.td3.hidden_sizes, vec![32, 32]);
        assert_eq!(c.output_dir, PathBuf::from("runs/a"));
        assert!(ExperimentConfig::parse("{}", "t", &["world.nope=1".into()]).is_err());
        assert!(ExperimentConfig::parse("{}", "t", &["novalue".into()]).is_err());
    }

    #[test]
    fn altitude_grid() {
        let s = SweepSection {
            altitude_start: 10.0,
            altitude_stop: 12.0,
            altitude_step: 0.5,
            ..Default::default()
        };
        assert_eq!(s.altitudes(), vec![10.0, 10.5, 11.0, 11.5, 12.0]);
    }
}

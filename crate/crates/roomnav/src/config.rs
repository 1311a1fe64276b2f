//! Runtime configuration: success radius, sensing, scene building, planning,
//! policy and embodiment profiles, with JSON (de)serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::priors::PriorsTable;

/// Motion/sensing scalars standing in for a robot platform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbodimentProfile {
    pub v_max: f64,
    pub omega_max: f64,
    pub radius: f64,
    pub sensor_range: f64,
}

impl EmbodimentProfile {
    pub fn wheeled() -> Self {
        EmbodimentProfile {
            v_max: 1.0,
            omega_max: 2.0,
            radius: 0.30,
            sensor_range: 6.0,
        }
    }

    pub fn quadruped() -> Self {
        EmbodimentProfile {
            v_max: 1.2,
            omega_max: 2.5,
            radius: 0.35,
            sensor_range: 6.0,
        }
    }

    pub fn humanoid() -> Self {
        EmbodimentProfile {
            v_max: 0.6,
            omega_max: 1.5,
            radius: 0.30,
            sensor_range: 6.0,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "wheeled" => Some(Self::wheeled()),
            "quadruped" => Some(Self::quadruped()),
            "humanoid" => Some(Self::humanoid()),
            _ => None,
        }
    }
}

/// Sensing model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    /// Detection confidence is drawn uniformly from this interval.
    pub confidence_range: (f64, f64),
    /// Per-detection false-negative probability.
    pub p_false_negative: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            confidence_range: (0.7, 1.0),
            p_false_negative: 0.0,
        }
    }
}

/// Scene representation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Occupied-cell dilation radius for room splitting, meters.
    pub dilation_radius_m: f64,
    /// Widest free passage still treated as a door when linking rooms.
    pub door_width_max_m: f64,
    /// Viewpoint coverage distance, meters.
    pub d_cover: f64,
    /// Viewpoint admission threshold: novel coverage must exceed this many cells.
    pub novelty_eps_cells: usize,
    /// Object association: same category within this centroid distance merges.
    pub merge_dist_m: f64,
    /// Spacing between trajectory poses retained for coverage accounting.
    pub traj_sample_dist_m: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            dilation_radius_m: 0.3,
            door_width_max_m: 1.2,
            d_cover: 3.0,
            novelty_eps_cells: 25,
            merge_dist_m: 0.5,
            traj_sample_dist_m: 0.5,
        }
    }
}

/// In-room exploration planner parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Minimum coverage score (cells) for a candidate to stay selectable.
    pub delta: usize,
    /// Restart count for the stochastic selection + tour search.
    pub k_restarts: u32,
    /// Local window side length, meters.
    pub window_m: f64,
    /// Candidate lattice spacing, meters.
    pub sample_spacing_m: f64,
    /// Lattice jitter amplitude in cells.
    pub jitter_cells: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            delta: 3,
            k_restarts: 8,
            window_m: 8.0,
            sample_spacing_m: 1.5,
            jitter_cells: 0.2,
        }
    }
}

/// Cross-room policy parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Early-stop hysteresis margin on priors.
    pub early_stop_margin: f64,
    /// End the episode as soon as every room is covered and the target is
    /// still missing; when false the agent re-sweeps rooms until timeout.
    pub fail_fast_on_exhausted: bool,
    /// Per-candidate bound on information-seeking detours during
    /// verification before the node is set aside.
    pub verify_attempts: u32,
    /// Re-run room segmentation every this many ticks.
    pub segment_every_ticks: u32,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            early_stop_margin: 0.1,
            fail_fast_on_exhausted: false,
            verify_attempts: 3,
            segment_every_ticks: 10,
        }
    }
}

/// Waypoint-following controller parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Rotate in place above this heading error, radians.
    pub rotate_in_place_rad: f64,
    /// Proportional gain on heading error.
    pub heading_gain: f64,
    /// Carrot lookahead distance, meters.
    pub lookahead_m: f64,
    /// A waypoint closer than this counts as reached.
    pub waypoint_tol_m: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            rotate_in_place_rad: 60f64.to_radians(),
            heading_gain: 2.0,
            lookahead_m: 0.4,
            waypoint_tol_m: 0.15,
        }
    }
}

/// Remote reasoner endpoint settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Endpoint URL; overridden by `ROOMNAV_REMOTE_URL` when set.
    pub url: Option<String>,
    pub timeout_s: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            url: None,
            timeout_s: 10.0,
        }
    }
}

/// Top-level configuration for an episode or suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Success distance, meters.
    pub eps_succ: f64,
    /// Simulation tick, seconds.
    pub dt: f64,
    pub sensor: SensorConfig,
    pub scene: SceneConfig,
    pub planner: PlannerConfig,
    pub policy: PolicyConfig,
    pub control: ControlConfig,
    pub remote: RemoteConfig,
    pub profiles: BTreeMap<String, EmbodimentProfile>,
    pub priors: PriorsTable,
}

impl Default for SimConfig {
    fn default() -> Self {
        let mut profiles = BTreeMap::new();
        profiles.insert("wheeled".to_string(), EmbodimentProfile::wheeled());
        profiles.insert("quadruped".to_string(), EmbodimentProfile::quadruped());
        profiles.insert("humanoid".to_string(), EmbodimentProfile::humanoid());
        SimConfig {
            eps_succ: 1.0,
            dt: 0.1,
            sensor: SensorConfig::default(),
            scene: SceneConfig::default(),
            planner: PlannerConfig::default(),
            policy: PolicyConfig::default(),
            control: ControlConfig::default(),
            remote: RemoteConfig::default(),
            profiles,
            priors: PriorsTable::default_desk(),
        }
    }
}

impl SimConfig {
    pub fn profile(&self, name: &str) -> Option<EmbodimentProfile> {
        self.profiles
            .get(name)
            .copied()
            .or_else(|| EmbodimentProfile::by_name(name))
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips() {
        let cfg = SimConfig::default();
        let json = cfg.to_json();
        let back = SimConfig::from_json(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = SimConfig::from_json(r#"{"eps_succ": 0.5}"#).unwrap();
        assert_eq!(cfg.eps_succ, 0.5);
        assert_eq!(cfg.dt, 0.1);
        assert!(cfg.profile("wheeled").is_some());
    }

    #[test]
    fn preset_profiles_match_calibration() {
        let w = EmbodimentProfile::wheeled();
        assert_eq!((w.v_max, w.omega_max, w.radius, w.sensor_range), (1.0, 2.0, 0.30, 6.0));
        let q = EmbodimentProfile::quadruped();
        assert_eq!((q.v_max, q.omega_max, q.radius, q.sensor_range), (1.2, 2.5, 0.35, 6.0));
        let h = EmbodimentProfile::humanoid();
        assert_eq!((h.v_max, h.omega_max, h.radius, h.sensor_range), (0.6, 1.5, 0.30, 6.0));
    }
}

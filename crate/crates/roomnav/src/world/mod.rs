//! Deterministic 2D simulation substrate: maps, objects, sensing,
//! kinematics, and the ground-truth oracles used for evaluation.

pub mod agent;
pub mod gen;
pub mod map;
pub mod path;
pub mod sense;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::{line_of_sight, Pose};
use crate::priors::{eval_relation, PriorsTable, RelationVerdict};

pub use agent::{step, AgentState, Command};
pub use map::{
    load_map, load_map_str, save_map_string, CellLabel, Door, GridMap, GtRoomId, InstanceId,
    MapError, ObjectInstance, Rect, RoomDef, World,
};
pub use path::{goal_region, shortest_path_len};
pub use sense::{sense, Detection, Observation, SenseError};

/// One semantic constraint on the goal instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    /// Named attribute must equal a value, e.g. color = red.
    AttrEq { name: String, value: String },
    /// A spatial relation to some instance of another category must hold.
    Relation { rel: String, category: String },
    /// The instance must sit in a room of the given category.
    InRoom { room: String },
}

/// Navigation goal: target category plus a (possibly empty) constraint set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub category: String,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

impl Goal {
    pub fn plain(category: &str) -> Self {
        Goal {
            category: category.to_string(),
            constraints: Vec::new(),
        }
    }

    pub fn with(category: &str, constraints: Vec<Constraint>) -> Self {
        Goal {
            category: category.to_string(),
            constraints,
        }
    }
}

/// Ground-truth evaluation of `goal` against one instance.
pub fn instance_satisfies(
    world: &World,
    inst: &ObjectInstance,
    goal: &Goal,
    priors: &PriorsTable,
) -> bool {
    if inst.category != goal.category {
        return false;
    }
    goal.constraints.iter().all(|c| match c {
        Constraint::AttrEq { name, value } => inst.attributes.get(name) == Some(value),
        Constraint::Relation { rel, category } => world.objects.iter().any(|other| {
            other.id != inst.id
                && other.category == *category
                && eval_relation(priors, rel, &inst.cells, &other.cells, world.resolution())
                    == RelationVerdict::Holds
        }),
        Constraint::InRoom { room } => world.map.room_label(inst.room_id) == Some(room.as_str()),
    })
}

/// Success rule: some satisfying instance has a footprint cell within
/// `eps_succ` of the pose and is observable (line of sight) from it.
pub fn check_success(
    world: &World,
    pose: Pose,
    goal: &Goal,
    eps_succ: f64,
    priors: &PriorsTable,
) -> bool {
    let dims = world.map.dims;
    let origin = pose.cell(dims.resolution);
    if !dims.contains(origin) {
        return false;
    }
    world.objects.iter().any(|inst| {
        instance_satisfies(world, inst, goal, priors)
            && inst.cells.iter().any(|&f| {
                let (fx, fy) = f.center(dims.resolution);
                let dist = ((fx - pose.x).powi(2) + (fy - pose.y).powi(2)).sqrt();
                dist <= eps_succ
                    && line_of_sight(origin, f, |c| c != f && world.map.is_occupied(c))
            })
    })
}

pub const EPISODE_FORMAT_VERSION: u32 = 1;

/// One benchmark episode: map, start, goal, timeout and rng seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub id: String,
    /// Map file path, relative to the episode file.
    pub map: String,
    /// Start pose `[x, y, heading]`.
    pub start: (f64, f64, f64),
    pub goal: Goal,
    pub timeout_s: f64,
    pub seed: u64,
}

impl EpisodeSpec {
    pub fn start_pose(&self) -> Pose {
        Pose::new(self.start.0, self.start.1, self.start.2)
    }
}

#[derive(Serialize, Deserialize)]
struct EpisodeFile {
    format: u32,
    episodes: Vec<EpisodeSpec>,
}

/// Load a versioned episode suite file.
pub fn load_episodes(path: &Path) -> Result<Vec<EpisodeSpec>, MapError> {
    let text = std::fs::read_to_string(path)?;
    load_episodes_str(&text)
}

pub fn load_episodes_str(text: &str) -> Result<Vec<EpisodeSpec>, MapError> {
    let file: EpisodeFile = serde_json::from_str(text).map_err(|e| MapError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if file.format != EPISODE_FORMAT_VERSION {
        return Err(MapError::Format(file.format));
    }
    Ok(file.episodes)
}

pub fn save_episodes_string(episodes: &[EpisodeSpec]) -> String {
    serde_json::to_string_pretty(&EpisodeFile {
        format: EPISODE_FORMAT_VERSION,
        episodes: episodes.to_vec(),
    })
    .expect("episodes serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Cell;

    fn chair_world(color: &str) -> World {
        let json = serde_json::json!({
            "format": 1,
            "resolution": 0.1,
            "grid": [
                "##########",
                "#........#",
                "#........#",
                "#........#",
                "##########",
            ],
            "rooms": [{"id": 0, "label": "office", "rects": [[1,1,8,3]]}],
            "doors": [],
            "objects": [{"id": 0, "category": "chair", "attributes": {"color": color}, "cells": [[7,2]]}]
        });
        load_map_str(&json.to_string()).unwrap()
    }

    #[test]
    fn success_requires_matching_attribute() {
        let priors = PriorsTable::default_desk();
        let goal = Goal::with(
            "chair",
            vec![Constraint::AttrEq {
                name: "color".into(),
                value: "red".into(),
            }],
        );
        // Pose 0.5 m from the chair footprint.
        let pose = Pose::new(0.25, 0.25, 0.0);
        let red = chair_world("red");
        assert!(check_success(&red, pose, &goal, 1.0, &priors));
        let blue = chair_world("blue");
        assert!(!check_success(&blue, pose, &goal, 1.0, &priors));
    }

    #[test]
    fn success_requires_line_of_sight() {
        let json = serde_json::json!({
            "format": 1,
            "resolution": 0.1,
            "grid": [
                "#######",
                "#..#..#",
                "#..#..#",
                "#..#..#",
                "#.....#",
                "#######",
            ],
            "rooms": [{"id": 0, "label": "office", "rects": [[1,1,5,4]]}],
            "doors": [],
            "objects": [{"id": 0, "category": "chair", "cells": [[4,1]]}]
        });
        let world = load_map_str(&json.to_string()).unwrap();
        let priors = PriorsTable::default_desk();
        let goal = Goal::plain("chair");
        // (1,1) is ~0.3 m from the chair but the wall column blocks sight.
        assert!(!check_success(&world, Pose::new(0.15, 0.15, 0.0), &goal, 1.0, &priors));
        // Directly below the chair there is a clear vertical ray.
        assert!(check_success(&world, Pose::new(0.45, 0.45, 0.0), &goal, 1.0, &priors));
    }

    #[test]
    fn success_respects_distance() {
        let world = chair_world("red");
        let priors = PriorsTable::default_desk();
        let goal = Goal::plain("chair");
        assert!(!check_success(&world, Pose::new(0.15, 0.25, 0.0), &goal, 0.3, &priors));
        assert!(check_success(&world, Pose::new(0.55, 0.25, 0.0), &goal, 0.3, &priors));
    }

    #[test]
    fn relation_constraint_checks_other_instances() {
        let json = serde_json::json!({
            "format": 1,
            "resolution": 0.1,
            "grid": [
                "##############################",
                "#............................#",
                "#............................#",
                "#............................#",
                "##############################",
            ],
            "rooms": [{"id": 0, "label": "kitchen", "rects": [[1,1,28,3]]}],
            "doors": [],
            "objects": [
                {"id": 0, "category": "microwave", "cells": [[2,1]]},
                {"id": 1, "category": "refrigerator", "cells": [[6,1]]},
                {"id": 2, "category": "microwave", "cells": [[28,3]]}
            ]
        });
        let world = load_map_str(&json.to_string()).unwrap();
        let priors = PriorsTable::default_desk();
        let goal = Goal::with(
            "microwave",
            vec![Constraint::Relation {
                rel: "near".into(),
                category: "refrigerator".into(),
            }],
        );
        let near = &world.objects[0];
        let far = &world.objects[2];
        assert!(instance_satisfies(&world, near, &goal, &priors));
        assert!(!instance_satisfies(&world, far, &goal, &priors));
    }

    #[test]
    fn in_room_constraint_uses_gt_labels() {
        let world = chair_world("red");
        let priors = PriorsTable::default_desk();
        let office = Goal::with("chair", vec![Constraint::InRoom { room: "office".into() }]);
        let kitchen = Goal::with("chair", vec![Constraint::InRoom { room: "kitchen".into() }]);
        let inst = &world.objects[0];
        assert!(instance_satisfies(&world, inst, &office, &priors));
        assert!(!instance_satisfies(&world, inst, &kitchen, &priors));
    }

    #[test]
    fn episode_file_round_trips() {
        let eps = vec![EpisodeSpec {
            id: "e0".into(),
            map: "m0.json".into(),
            start: (0.5, 0.5, 0.0),
            goal: Goal::plain("chair"),
            timeout_s: 180.0,
            seed: 7,
        }];
        let s = save_episodes_string(&eps);
        let back = load_episodes_str(&s).unwrap();
        assert_eq!(back, eps);
    }

    #[test]
    fn observability_excludes_the_target_cell_itself() {
        // An occupied footprint cell must not occlude itself.
        let world = chair_world("red");
        let priors = PriorsTable::default_desk();
        assert!(check_success(
            &world,
            Pose::new(0.65, 0.25, 0.0),
            &Goal::plain("chair"),
            1.0,
            &priors
        ));
        let _ = Cell::new(0, 0);
    }
}

//! Abstract semantic-reasoning contract with two implementations: a
//! deterministic rule-based oracle (default) and a JSON-over-HTTP remote
//! client, so every reasoning decision point can run without a VLM.

pub mod oracle;
pub mod remote;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::Cell;
use crate::priors::RelationVerdict;
use crate::world::Goal;

pub use crate::priors::{PriorsTable, RelationRule};
pub use oracle::OracleReasoner;
pub use remote::RemoteReasoner;

/// Slim observation view carried inside reasoner contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtxObservation {
    pub origin: Cell,
    pub visible_cells: Vec<Cell>,
    pub detections: Vec<CtxDetection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtxDetection {
    pub category: String,
    pub cells: Vec<Cell>,
}

/// Scene-graph object fragment inside contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtxObject {
    pub node_id: u32,
    pub category: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    pub cells: Vec<Cell>,
}

/// Scene-graph room fragment inside contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtxRoom {
    pub id: u32,
    pub category: Option<String>,
    pub mask_cells: usize,
    pub centroid_m: (f64, f64),
    pub objects: Vec<CtxObject>,
    /// Shortest known-map path distance from the agent, when relevant.
    pub path_dist_m: Option<f64>,
}

/// Everything a reasoner sees for one decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ReasonerContext {
    /// Keep exploring the current room, or switch to the newly found one?
    EarlyStop {
        current: CtxRoom,
        new_room: CtxRoom,
        goal: Goal,
    },
    /// Which uncovered room is most likely to contain the target?
    RoomQuery {
        uncovered: Vec<CtxRoom>,
        visited_sequence: Vec<u32>,
        goal: Goal,
    },
    /// What room category does this observation show?
    RoomLabel { observation: CtxObservation },
    /// What value does the named attribute take for this object?
    AttributeQuery {
        observation: CtxObservation,
        object: CtxObject,
        name: String,
    },
    /// Does the spatial relation hold between subject and anchor?
    RelationQuery {
        observation: CtxObservation,
        rel: String,
        subject: CtxObject,
        anchor: CtxObject,
    },
}

impl ReasonerContext {
    pub fn variant_name(&self) -> &'static str {
        match self {
            ReasonerContext::EarlyStop { .. } => "early_stop",
            ReasonerContext::RoomQuery { .. } => "room_query",
            ReasonerContext::RoomLabel { .. } => "room_label",
            ReasonerContext::AttributeQuery { .. } => "attribute_query",
            ReasonerContext::RelationQuery { .. } => "relation_query",
        }
    }
}

/// Typed decision, one variant per context variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    /// true = stop here and switch to the new room.
    EarlyStop(bool),
    /// Chosen room id; `None` means every room is covered (exhausted).
    RoomChoice(Option<u32>),
    /// Room category; `None` = unlabeled.
    RoomLabel(Option<String>),
    /// Attribute value; `None` = unknown.
    Attribute(Option<String>),
    Relation(RelationVerdict),
}

/// A semantic reasoner: stateless between calls, deterministic for a fixed
/// seed, and total (every context yields a usable decision).
pub trait Reasoner {
    fn decide(&self, ctx: &ReasonerContext) -> Decision;

    /// Count of decisions issued so far, when the implementation tracks it.
    fn query_count(&self) -> u64 {
        0
    }
}

/// Fallback decisions used when a reasoner backend fails: keep exploring,
/// head for the nearest uncovered room, otherwise admit ignorance.
pub fn fallback_decision(ctx: &ReasonerContext) -> Decision {
    match ctx {
        ReasonerContext::EarlyStop { .. } => Decision::EarlyStop(false),
        ReasonerContext::RoomQuery { uncovered, .. } => {
            let best = uncovered
                .iter()
                .min_by(|a, b| {
                    let da = a.path_dist_m.unwrap_or(f64::INFINITY);
                    let db = b.path_dist_m.unwrap_or(f64::INFINITY);
                    da.partial_cmp(&db)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.id.cmp(&b.id))
                })
                .map(|r| r.id);
            Decision::RoomChoice(best)
        }
        ReasonerContext::RoomLabel { .. } => Decision::RoomLabel(None),
        ReasonerContext::AttributeQuery { .. } => Decision::Attribute(None),
        ReasonerContext::RelationQuery { .. } => Decision::Relation(RelationVerdict::Unsupported),
    }
}

/// SplitMix64; used to derive per-call noise streams from (seed, context).
pub(crate) fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub(crate) fn fold_str(seed: u64, s: &str) -> u64 {
    s.bytes().fold(seed, |acc, b| mix_seed(acc ^ b as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallbacks_are_total() {
        let ctx = ReasonerContext::RoomQuery {
            uncovered: vec![
                CtxRoom {
                    id: 4,
                    category: None,
                    mask_cells: 10,
                    centroid_m: (1.0, 1.0),
                    objects: vec![],
                    path_dist_m: Some(9.0),
                },
                CtxRoom {
                    id: 2,
                    category: None,
                    mask_cells: 10,
                    centroid_m: (2.0, 1.0),
                    objects: vec![],
                    path_dist_m: Some(3.0),
                },
            ],
            visited_sequence: vec![0],
            goal: Goal::plain("bed"),
        };
        assert_eq!(fallback_decision(&ctx), Decision::RoomChoice(Some(2)));
        let empty = ReasonerContext::RoomQuery {
            uncovered: vec![],
            visited_sequence: vec![],
            goal: Goal::plain("bed"),
        };
        assert_eq!(fallback_decision(&empty), Decision::RoomChoice(None));
    }

    #[test]
    fn context_serializes_with_variant_tag() {
        let ctx = ReasonerContext::RoomLabel {
            observation: CtxObservation {
                origin: Cell::new(1, 1),
                visible_cells: vec![Cell::new(1, 1)],
                detections: vec![],
            },
        };
        let v = serde_json::to_value(&ctx).unwrap();
        assert_eq!(v["variant"], "room_label");
    }
}

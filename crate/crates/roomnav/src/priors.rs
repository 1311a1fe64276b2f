//! Object-category-to-room-category likelihoods and spatial relation rules.
//!
//! The priors table makes the commonsense an embodied VLM would supply
//! explicit data: how likely each object category is to appear in each room
//! category, plus the geometric predicates behind relation labels like
//! "near" and "on".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Cell;

#[derive(Debug, Error)]
pub enum PriorsError {
    #[error("object category {0:?} has no nonzero room weight")]
    EmptyRow(String),
    #[error("object category {0:?} has a negative weight for {1:?}")]
    NegativeWeight(String, String),
}

/// Geometric predicate backing a spatial relation label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelationRule {
    /// Centroid distance at most `max_dist_m`.
    Near { max_dist_m: f64 },
    /// 2D stand-in for vertical stacking: footprints touch and the smaller
    /// object's bbox sits inside the larger's bbox dilated by `margin_cells`.
    On { margin_cells: i32 },
}

/// Priors over room categories per object category, plus relation rules.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PriorsTable {
    /// object category -> room category -> weight in [0, 1].
    pub object_room: BTreeMap<String, BTreeMap<String, f64>>,
    /// relation label -> geometric rule.
    pub relations: BTreeMap<String, RelationRule>,
}

impl PriorsTable {
    /// Weight of finding `category` in a room of category `room`.
    /// Unknown categories and unlabeled rooms score zero.
    pub fn prior(&self, category: &str, room: Option<&str>) -> f64 {
        match (self.object_room.get(category), room) {
            (Some(row), Some(room)) => row.get(room).copied().unwrap_or(0.0),
            _ => 0.0,
        }
    }

    pub fn relation_rule(&self, label: &str) -> Option<&RelationRule> {
        self.relations.get(label)
    }

    pub fn validate(&self) -> Result<(), PriorsError> {
        for (cat, row) in &self.object_room {
            if let Some((room, _)) = row.iter().find(|(_, w)| **w < 0.0) {
                return Err(PriorsError::NegativeWeight(cat.clone(), room.clone()));
            }
            if !row.values().any(|w| *w > 0.0) {
                return Err(PriorsError::EmptyRow(cat.clone()));
            }
        }
        Ok(())
    }

    /// Built-in table covering the stock categories and eight room types.
    pub fn default_desk() -> Self {
        let mut t = PriorsTable::default();
        let rows: &[(&str, &[(&str, f64)])] = &[
            ("refrigerator", &[("kitchen", 0.85), ("storage", 0.10), ("dining_room", 0.05)]),
            ("oven", &[("kitchen", 0.95), ("storage", 0.05)]),
            ("microwave", &[("kitchen", 0.80), ("office", 0.10), ("storage", 0.10)]),
            ("sink", &[("kitchen", 0.55), ("bathroom", 0.45)]),
            ("toilet", &[("bathroom", 1.0)]),
            ("shower", &[("bathroom", 1.0)]),
            ("bed", &[("bedroom", 0.95), ("living_room", 0.05)]),
            ("wardrobe", &[("bedroom", 0.75), ("corridor", 0.15), ("storage", 0.10)]),
            ("nightstand", &[("bedroom", 1.0)]),
            ("sofa", &[("living_room", 0.85), ("office", 0.15)]),
            ("tv", &[("living_room", 0.70), ("bedroom", 0.20), ("office", 0.10)]),
            ("coffee_table", &[("living_room", 0.90), ("office", 0.10)]),
            ("desk", &[("office", 0.80), ("bedroom", 0.20)]),
            ("office_chair", &[("office", 0.90), ("bedroom", 0.10)]),
            ("bookshelf", &[("office", 0.55), ("living_room", 0.35), ("bedroom", 0.10)]),
            ("dining_table", &[("dining_room", 0.80), ("kitchen", 0.20)]),
            ("chair", &[("dining_room", 0.35), ("kitchen", 0.25), ("office", 0.20), ("living_room", 0.20)]),
            ("washing_machine", &[("bathroom", 0.55), ("storage", 0.35), ("kitchen", 0.10)]),
            ("plant", &[("living_room", 0.45), ("corridor", 0.25), ("office", 0.20), ("dining_room", 0.10)]),
            ("cabinet", &[("kitchen", 0.35), ("storage", 0.30), ("corridor", 0.20), ("bathroom", 0.15)]),
        ];
        for (cat, row) in rows {
            let mut m = BTreeMap::new();
            for (room, w) in *row {
                m.insert(room.to_string(), *w);
            }
            t.object_room.insert(cat.to_string(), m);
        }
        t.relations
            .insert("near".to_string(), RelationRule::Near { max_dist_m: 1.5 });
        t.relations
            .insert("on".to_string(), RelationRule::On { margin_cells: 1 });
        t
    }

    /// Room categories known to the table.
    pub fn room_categories(&self) -> Vec<String> {
        let mut set: Vec<String> = Vec::new();
        for row in self.object_room.values() {
            for room in row.keys() {
                if !set.contains(room) {
                    set.push(room.clone());
                }
            }
        }
        set.sort();
        set
    }
}

/// Axis-aligned integer bbox over a set of cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellBbox {
    pub min: Cell,
    pub max: Cell,
}

impl CellBbox {
    pub fn of(cells: &[Cell]) -> Option<CellBbox> {
        let first = *cells.first()?;
        let mut b = CellBbox {
            min: first,
            max: first,
        };
        for c in cells {
            b.min.x = b.min.x.min(c.x);
            b.min.y = b.min.y.min(c.y);
            b.max.x = b.max.x.max(c.x);
            b.max.y = b.max.y.max(c.y);
        }
        Some(b)
    }

    pub fn dilate(self, cells: i32) -> CellBbox {
        CellBbox {
            min: Cell::new(self.min.x - cells, self.min.y - cells),
            max: Cell::new(self.max.x + cells, self.max.y + cells),
        }
    }

    pub fn contains_bbox(self, other: CellBbox) -> bool {
        self.min.x <= other.min.x
            && self.min.y <= other.min.y
            && self.max.x >= other.max.x
            && self.max.y >= other.max.y
    }
}

/// Centroid of a cell set in meters.
pub fn cells_centroid(cells: &[Cell], resolution: f64) -> (f64, f64) {
    let n = cells.len().max(1) as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for c in cells {
        let (x, y) = c.center(resolution);
        sx += x;
        sy += y;
    }
    (sx / n, sy / n)
}

/// Outcome of evaluating a relation label between two footprints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationVerdict {
    Holds,
    DoesNotHold,
    /// No rule configured for the label; treated as unsatisfied.
    Unsupported,
}

/// Evaluate `label` with `subject` related to `anchor` (e.g. cup on table:
/// subject = cup). Pure geometry over footprint cells.
pub fn eval_relation(
    rules: &PriorsTable,
    label: &str,
    subject: &[Cell],
    anchor: &[Cell],
    resolution: f64,
) -> RelationVerdict {
    let Some(rule) = rules.relation_rule(label) else {
        return RelationVerdict::Unsupported;
    };
    if subject.is_empty() || anchor.is_empty() {
        return RelationVerdict::DoesNotHold;
    }
    let holds = match rule {
        RelationRule::Near { max_dist_m } => {
            let (ax, ay) = cells_centroid(subject, resolution);
            let (bx, by) = cells_centroid(anchor, resolution);
            ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt() <= *max_dist_m
        }
        RelationRule::On { margin_cells } => {
            let adjacent = subject
                .iter()
                .any(|a| anchor.iter().any(|b| a.chebyshev(*b) <= 1));
            let (sb, ab) = match (CellBbox::of(subject), CellBbox::of(anchor)) {
                (Some(s), Some(a)) => (s, a),
                _ => return RelationVerdict::DoesNotHold,
            };
            // The subject must be the smaller footprint for "on" to make
            // sense in top-down 2D.
            adjacent
                && subject.len() <= anchor.len()
                && ab.dilate(*margin_cells).contains_bbox(sb)
        }
    };
    if holds {
        RelationVerdict::Holds
    } else {
        RelationVerdict::DoesNotHold
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_is_valid() {
        let t = PriorsTable::default_desk();
        t.validate().unwrap();
        assert!(t.prior("refrigerator", Some("kitchen")) > t.prior("refrigerator", Some("bedroom")));
        assert_eq!(t.prior("refrigerator", None), 0.0);
        assert_eq!(t.prior("unheard_of", Some("kitchen")), 0.0);
    }

    #[test]
    fn near_rule_uses_centroid_distance() {
        let t = PriorsTable::default_desk();
        // Centroids 0.8 m apart at 0.1 m resolution.
        let a = vec![Cell::new(0, 0)];
        let b = vec![Cell::new(8, 0)];
        assert_eq!(
            eval_relation(&t, "near", &a, &b, 0.1),
            RelationVerdict::Holds
        );
        let far = vec![Cell::new(60, 0)];
        assert_eq!(
            eval_relation(&t, "near", &a, &far, 0.1),
            RelationVerdict::DoesNotHold
        );
    }

    #[test]
    fn on_rule_requires_adjacency_and_containment() {
        let t = PriorsTable::default_desk();
        let table: Vec<Cell> = (0..3)
            .flat_map(|x| (0..3).map(move |y| Cell::new(x, y)))
            .collect();
        let cup = vec![Cell::new(3, 1)]; // adjacent, inside dilated bbox
        assert_eq!(
            eval_relation(&t, "on", &cup, &table, 0.1),
            RelationVerdict::Holds
        );
        let detached = vec![Cell::new(6, 1)];
        assert_eq!(
            eval_relation(&t, "on", &detached, &table, 0.1),
            RelationVerdict::DoesNotHold
        );
        // A big thing is not "on" a small thing.
        assert_eq!(
            eval_relation(&t, "on", &table, &cup, 0.1),
            RelationVerdict::DoesNotHold
        );
    }

    #[test]
    fn unknown_relation_is_unsupported() {
        let t = PriorsTable::default_desk();
        assert_eq!(
            eval_relation(&t, "behind", &[Cell::new(0, 0)], &[Cell::new(1, 0)], 0.1),
            RelationVerdict::Unsupported
        );
    }

    #[test]
    fn empty_row_rejected() {
        let mut t = PriorsTable::default_desk();
        t.object_room
            .insert("ghost".into(), BTreeMap::from([("kitchen".into(), 0.0)]));
        assert!(t.validate().is_err());
    }
}

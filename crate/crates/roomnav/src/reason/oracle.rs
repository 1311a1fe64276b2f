//! Rule-based reasoner backed by ground truth and the priors table.
//!
//! Every decision is a deterministic function of (context, seed). Optional
//! noise knobs flip answers with seeded pseudo-randomness so degraded
//! perception can be simulated without losing reproducibility.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::priors::{eval_relation, PriorsTable, RelationVerdict};
use crate::reason::{fold_str, mix_seed, Decision, Reasoner, ReasonerContext};
use crate::world::World;

pub struct OracleReasoner<'w> {
    world: &'w World,
    priors: PriorsTable,
    /// Early-stop hysteresis margin on priors.
    pub margin: f64,
    /// Probability of answering an attribute query wrongly.
    pub attr_error_rate: f64,
    /// Probability of mislabeling a room.
    pub label_confusion_rate: f64,
    seed: u64,
    queries: std::sync::atomic::AtomicU64,
}

impl<'w> OracleReasoner<'w> {
    pub fn new(world: &'w World, priors: PriorsTable, margin: f64, seed: u64) -> Self {
        OracleReasoner {
            world,
            priors,
            margin,
            attr_error_rate: 0.0,
            label_confusion_rate: 0.0,
            seed,
            queries: std::sync::atomic::AtomicU64::new(0),
        }
    }

    fn noise_rng(&self, tag: &str, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(fold_str(self.seed, tag) ^ salt))
    }

    fn early_stop(&self, ctx: &ReasonerContext) -> bool {
        let ReasonerContext::EarlyStop {
            current,
            new_room,
            goal,
        } = ctx
        else {
            return false;
        };
        // The new room already shows the target category: always worth it.
        if new_room.objects.iter().any(|o| o.category == goal.category) {
            return true;
        }
        let p_cur = self.priors.prior(&goal.category, current.category.as_deref());
        let p_new = self.priors.prior(&goal.category, new_room.category.as_deref());
        p_new > p_cur + self.margin
    }

    fn select_room(&self, ctx: &ReasonerContext) -> Option<u32> {
        let ReasonerContext::RoomQuery { uncovered, goal, .. } = ctx else {
            return None;
        };
        uncovered
            .iter()
            .max_by(|a, b| {
                let pa = self.priors.prior(&goal.category, a.category.as_deref());
                let pb = self.priors.prior(&goal.category, b.category.as_deref());
                // Higher prior wins; then shorter path; then lower id.
                pa.partial_cmp(&pb)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| {
                        let da = a.path_dist_m.unwrap_or(f64::INFINITY);
                        let db = b.path_dist_m.unwrap_or(f64::INFINITY);
                        db.partial_cmp(&da).unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .then_with(|| b.id.cmp(&a.id))
            })
            .map(|r| r.id)
    }

    fn classify_room(&self, ctx: &ReasonerContext) -> Option<String> {
        let ReasonerContext::RoomLabel { observation } = ctx else {
            return None;
        };
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for &c in &observation.visible_cells {
            if let Some(rid) = self.world.map.gt_room_at(c) {
                if self.world.map.is_free(c) {
                    if let Some(label) = self.world.map.room_label(rid) {
                        *counts.entry(label).or_insert(0) += 1;
                    }
                }
            }
        }
        let majority = counts
            .iter()
            .max_by(|(la, ca), (lb, cb)| ca.cmp(cb).then_with(|| lb.cmp(la)))
            .map(|(l, _)| l.to_string())?;
        if self.label_confusion_rate > 0.0 {
            let mut rng = self.noise_rng("room_label", observation.origin.x as u64 ^ ((observation.origin.y as u64) << 32));
            if rng.gen::<f64>() < self.label_confusion_rate {
                let pool = self.priors.room_categories();
                let others: Vec<&String> = pool.iter().filter(|l| **l != majority).collect();
                if !others.is_empty() {
                    return Some(others[rng.gen_range(0..others.len())].clone());
                }
            }
        }
        Some(majority)
    }

    fn infer_attribute(&self, ctx: &ReasonerContext) -> Option<String> {
        let ReasonerContext::AttributeQuery { object, name, .. } = ctx else {
            return None;
        };
        // Identify the ground-truth instance by footprint overlap.
        let inst = self
            .world
            .objects
            .iter()
            .filter(|o| o.category == object.category)
            .max_by_key(|o| {
                (
                    o.cells.iter().filter(|c| object.cells.contains(c)).count(),
                    std::cmp::Reverse(o.id),
                )
            })?;
        let truth = inst.attributes.get(name).cloned();
        let truth = truth?;
        if self.attr_error_rate > 0.0 {
            let mut rng = self.noise_rng(name, mix_seed(object.node_id as u64));
            if rng.gen::<f64>() < self.attr_error_rate {
                // Answer with some other value seen for this attribute.
                let mut pool: Vec<&String> = self
                    .world
                    .objects
                    .iter()
                    .filter_map(|o| o.attributes.get(name))
                    .filter(|v| **v != truth)
                    .collect();
                pool.sort();
                pool.dedup();
                return Some(if pool.is_empty() {
                    format!("not_{truth}")
                } else {
                    pool[rng.gen_range(0..pool.len())].clone()
                });
            }
        }
        Some(truth)
    }

    fn check_relation(&self, ctx: &ReasonerContext) -> RelationVerdict {
        let ReasonerContext::RelationQuery {
            rel,
            subject,
            anchor,
            ..
        } = ctx
        else {
            return RelationVerdict::Unsupported;
        };
        eval_relation(
            &self.priors,
            rel,
            &subject.cells,
            &anchor.cells,
            self.world.resolution(),
        )
    }
}

impl Reasoner for OracleReasoner<'_> {
    fn decide(&self, ctx: &ReasonerContext) -> Decision {
        self.queries
            .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        match ctx {
            ReasonerContext::EarlyStop { .. } => Decision::EarlyStop(self.early_stop(ctx)),
            ReasonerContext::RoomQuery { .. } => Decision::RoomChoice(self.select_room(ctx)),
            ReasonerContext::RoomLabel { .. } => Decision::RoomLabel(self.classify_room(ctx)),
            ReasonerContext::AttributeQuery { .. } => {
                Decision::Attribute(self.infer_attribute(ctx))
            }
            ReasonerContext::RelationQuery { .. } => Decision::Relation(self.check_relation(ctx)),
        }
    }

    fn query_count(&self) -> u64 {
        self.queries.load(std::sync::atomic::Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Cell;
    use crate::reason::{CtxObject, CtxObservation, CtxRoom};
    use crate::world::{load_map_str, Goal};
    use std::collections::BTreeMap;

    fn room(id: u32, category: Option<&str>, dist: Option<f64>) -> CtxRoom {
        CtxRoom {
            id,
            category: category.map(|s| s.to_string()),
            mask_cells: 100,
            centroid_m: (0.0, 0.0),
            objects: vec![],
            path_dist_m: dist,
        }
    }

    fn test_world() -> World {
        let json = serde_json::json!({
            "format": 1,
            "resolution": 0.1,
            "grid": [
                "############",
                "#..........#",
                "#..........#",
                "#..........#",
                "############",
            ],
            "rooms": [{"id": 0, "label": "kitchen", "rects": [[1,1,10,3]]}],
            "doors": [],
            "objects": [
                {"id": 0, "category": "chair", "attributes": {"color": "red"}, "cells": [[2,2]]},
                {"id": 1, "category": "chair", "attributes": {"color": "blue"}, "cells": [[9,2]]}
            ]
        });
        load_map_str(&json.to_string()).unwrap()
    }

    #[test]
    fn early_stop_follows_prior_margin() {
        let world = test_world();
        let oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 0);
        let goal = Goal::plain("refrigerator");
        let switch = oracle.decide(&ReasonerContext::EarlyStop {
            current: room(0, Some("corridor"), None),
            new_room: room(1, Some("kitchen"), None),
            goal: goal.clone(),
        });
        assert_eq!(switch, Decision::EarlyStop(true));
        // Equal-prior rooms never trigger a switch.
        let stay = oracle.decide(&ReasonerContext::EarlyStop {
            current: room(0, Some("corridor"), None),
            new_room: room(1, Some("corridor"), None),
            goal: Goal::plain("bed"),
        });
        assert_eq!(stay, Decision::EarlyStop(false));
    }

    #[test]
    fn early_stop_fires_when_target_already_listed() {
        let world = test_world();
        let oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 0);
        let mut new_room = room(1, Some("corridor"), None);
        new_room.objects.push(CtxObject {
            node_id: 3,
            category: "refrigerator".into(),
            attributes: BTreeMap::new(),
            cells: vec![Cell::new(5, 5)],
        });
        let d = oracle.decide(&ReasonerContext::EarlyStop {
            current: room(0, Some("kitchen"), None),
            new_room,
            goal: Goal::plain("refrigerator"),
        });
        assert_eq!(d, Decision::EarlyStop(true));
    }

    #[test]
    fn select_room_argmax_and_tiebreaks() {
        let world = test_world();
        let oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 0);
        let goal = Goal::plain("refrigerator");
        let d = oracle.decide(&ReasonerContext::RoomQuery {
            uncovered: vec![
                room(0, Some("bedroom"), Some(1.0)),
                room(1, Some("kitchen"), Some(9.0)),
            ],
            visited_sequence: vec![],
            goal: goal.clone(),
        });
        assert_eq!(d, Decision::RoomChoice(Some(1)));
        // Tied priors: nearer room wins.
        let d = oracle.decide(&ReasonerContext::RoomQuery {
            uncovered: vec![
                room(5, Some("bedroom"), Some(9.0)),
                room(6, Some("bedroom"), Some(3.0)),
            ],
            visited_sequence: vec![],
            goal: Goal::plain("bed"),
        });
        assert_eq!(d, Decision::RoomChoice(Some(6)));
        // Fully tied: lower id.
        let d = oracle.decide(&ReasonerContext::RoomQuery {
            uncovered: vec![
                room(5, Some("bedroom"), Some(3.0)),
                room(6, Some("bedroom"), Some(3.0)),
            ],
            visited_sequence: vec![],
            goal: Goal::plain("bed"),
        });
        assert_eq!(d, Decision::RoomChoice(Some(5)));
        let d = oracle.decide(&ReasonerContext::RoomQuery {
            uncovered: vec![],
            visited_sequence: vec![],
            goal,
        });
        assert_eq!(d, Decision::RoomChoice(None));
    }

    #[test]
    fn select_room_invariant_under_row_rescaling() {
        let world = test_world();
        let mut priors = PriorsTable::default_desk();
        let goal = Goal::plain("refrigerator");
        let uncovered = vec![
            room(0, Some("bedroom"), Some(1.0)),
            room(1, Some("kitchen"), Some(9.0)),
            room(2, Some("storage"), Some(2.0)),
        ];
        let base = OracleReasoner::new(&world, priors.clone(), 0.1, 0).decide(
            &ReasonerContext::RoomQuery {
                uncovered: uncovered.clone(),
                visited_sequence: vec![],
                goal: goal.clone(),
            },
        );
        // Positive rescaling of the refrigerator row must not change argmax.
        if let Some(row) = priors.object_room.get_mut("refrigerator") {
            for w in row.values_mut() {
                *w *= 0.25;
            }
        }
        let scaled = OracleReasoner::new(&world, priors, 0.1, 0).decide(
            &ReasonerContext::RoomQuery {
                uncovered,
                visited_sequence: vec![],
                goal,
            },
        );
        assert_eq!(base, scaled);
    }

    #[test]
    fn classify_room_majority() {
        let world = test_world();
        let oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 0);
        let obs = CtxObservation {
            origin: Cell::new(2, 2),
            visible_cells: vec![Cell::new(1, 1), Cell::new(2, 1), Cell::new(3, 1)],
            detections: vec![],
        };
        assert_eq!(
            oracle.decide(&ReasonerContext::RoomLabel { observation: obs }),
            Decision::RoomLabel(Some("kitchen".into()))
        );
        let empty = CtxObservation {
            origin: Cell::new(0, 0),
            visible_cells: vec![Cell::new(0, 0)], // a wall cell: no room label
            detections: vec![],
        };
        assert_eq!(
            oracle.decide(&ReasonerContext::RoomLabel { observation: empty }),
            Decision::RoomLabel(None)
        );
    }

    #[test]
    fn attribute_oracle_reads_ground_truth() {
        let world = test_world();
        let oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 0);
        let obs = CtxObservation {
            origin: Cell::new(3, 2),
            visible_cells: vec![],
            detections: vec![],
        };
        let red_chair = CtxObject {
            node_id: 0,
            category: "chair".into(),
            attributes: BTreeMap::new(),
            cells: vec![Cell::new(2, 2)],
        };
        assert_eq!(
            oracle.decide(&ReasonerContext::AttributeQuery {
                observation: obs.clone(),
                object: red_chair.clone(),
                name: "color".into(),
            }),
            Decision::Attribute(Some("red".into()))
        );
        // Missing attribute answers Unknown.
        assert_eq!(
            oracle.decide(&ReasonerContext::AttributeQuery {
                observation: obs,
                object: red_chair,
                name: "material".into(),
            }),
            Decision::Attribute(None)
        );
    }

    #[test]
    fn adversarial_attribute_rate_always_misses() {
        let world = test_world();
        let mut oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 9);
        oracle.attr_error_rate = 1.0;
        let obs = CtxObservation {
            origin: Cell::new(3, 2),
            visible_cells: vec![],
            detections: vec![],
        };
        let d = oracle.decide(&ReasonerContext::AttributeQuery {
            observation: obs,
            object: CtxObject {
                node_id: 0,
                category: "chair".into(),
                attributes: BTreeMap::new(),
                cells: vec![Cell::new(2, 2)],
            },
            name: "color".into(),
        });
        match d {
            Decision::Attribute(Some(v)) => assert_ne!(v, "red"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relation_oracle_matches_rules() {
        let world = test_world();
        let oracle = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 0);
        let obs = CtxObservation {
            origin: Cell::new(3, 2),
            visible_cells: vec![],
            detections: vec![],
        };
        let a = CtxObject {
            node_id: 0,
            category: "microwave".into(),
            attributes: BTreeMap::new(),
            cells: vec![Cell::new(2, 2)],
        };
        let b = CtxObject {
            node_id: 1,
            category: "refrigerator".into(),
            attributes: BTreeMap::new(),
            cells: vec![Cell::new(10, 2)],
        };
        let d = oracle.decide(&ReasonerContext::RelationQuery {
            observation: obs.clone(),
            rel: "near".into(),
            subject: a.clone(),
            anchor: b.clone(),
        });
        assert_eq!(d, Decision::Relation(RelationVerdict::Holds));
        let d = oracle.decide(&ReasonerContext::RelationQuery {
            observation: obs,
            rel: "behind".into(),
            subject: a,
            anchor: b,
        });
        assert_eq!(d, Decision::Relation(RelationVerdict::Unsupported));
    }

    #[test]
    fn identical_context_and_seed_identical_decision() {
        let world = test_world();
        let mut o1 = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 5);
        o1.attr_error_rate = 0.5;
        let mut o2 = OracleReasoner::new(&world, PriorsTable::default_desk(), 0.1, 5);
        o2.attr_error_rate = 0.5;
        let ctx = ReasonerContext::AttributeQuery {
            observation: CtxObservation {
                origin: Cell::new(3, 2),
                visible_cells: vec![],
                detections: vec![],
            },
            object: CtxObject {
                node_id: 0,
                category: "chair".into(),
                attributes: BTreeMap::new(),
                cells: vec![Cell::new(2, 2)],
            },
            name: "color".into(),
        };
        for _ in 0..5 {
            assert_eq!(o1.decide(&ctx), o2.decide(&ctx));
        }
    }
}

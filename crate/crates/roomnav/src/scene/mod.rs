//! Three-layer scene representation built incrementally from observations:
//! a belief grid, room nodes, viewpoint nodes and object nodes with six
//! typed edge kinds, plus on-demand attribute and relation inference
//! through a pluggable reasoner.

pub mod segment;
pub mod snapshot;

use std::collections::{BTreeMap, BTreeSet};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::config::SceneConfig;
use crate::geom::{Cell, GridDims, Pose};
use crate::priors::{CellBbox, RelationVerdict};
use crate::reason::{
    CtxDetection, CtxObject, CtxObservation, CtxRoom, Decision, Reasoner, ReasonerContext,
};
use crate::world::path::dijkstra_all;
use crate::world::{Goal, Observation, World};

pub type RoomId = u32;
pub type ViewpointId = u32;
pub type ObjectId = u32;

/// Agent belief about one cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Belief {
    Unknown,
    Free,
    Occupied,
}

#[derive(Clone, Debug)]
pub struct RoomNode {
    pub id: RoomId,
    /// Known-free cells of this room (post-dilation component).
    pub mask: FixedBitSet,
    pub category: Option<String>,
    pub best_view: Option<ViewpointId>,
    /// Viewpoint count at the last best-view evaluation.
    pub(crate) eval_vp_count: usize,
    pub(crate) mask_changed: bool,
}

impl RoomNode {
    pub fn mask_cells(&self) -> usize {
        self.mask.count_ones(..)
    }

    pub fn centroid_m(&self, dims: &GridDims) -> (f64, f64) {
        let n = self.mask.count_ones(..).max(1) as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for idx in self.mask.ones() {
            let (x, y) = dims.cell_at(idx).center(dims.resolution);
            sx += x;
            sy += y;
        }
        (sx / n, sy / n)
    }
}

#[derive(Clone, Debug)]
pub struct ViewpointNode {
    pub id: ViewpointId,
    pub pose: Pose,
    pub cell: Cell,
    /// Cells within the coverage distance with line of sight at capture.
    pub coverage: FixedBitSet,
    pub observation: Observation,
}

/// Attribute inference result attached to an object node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttrState {
    Known(String),
    /// Queried, but the reasoner could not answer.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct ObjectNode {
    pub id: ObjectId,
    pub category: String,
    /// Running max over detection confidences.
    pub confidence: f64,
    /// Union of observed footprint cells, sorted.
    pub cells: Vec<Cell>,
    pub bbox: CellBbox,
    pub attributes: BTreeMap<String, AttrState>,
}

impl ObjectNode {
    pub fn centroid_m(&self, resolution: f64) -> (f64, f64) {
        crate::priors::cells_centroid(&self.cells, resolution)
    }
}

/// Outcome of on-demand relation inference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationOutcome {
    Confirmed,
    Rejected,
    /// No co-observing viewpoint yet; the caller may seek one.
    Undetermined,
}

/// Context request kinds for [`SceneRep::build_context`].
pub enum ContextMode {
    EarlyStop { current: RoomId, new_room: RoomId },
    RoomQuery { uncovered: Vec<RoomId> },
}

#[derive(Clone, Debug)]
pub struct SceneRep {
    pub dims: GridDims,
    belief: Vec<Belief>,
    pub rooms: Vec<RoomNode>,
    pub(crate) next_room_id: RoomId,
    pub viewpoints: Vec<ViewpointNode>,
    pub objects: Vec<ObjectNode>,
    next_object_id: ObjectId,
    /// Union of all viewpoint coverage regions.
    coverage_union: FixedBitSet,
    // Typed edges.
    pub edges_rr: BTreeSet<(RoomId, RoomId)>,
    pub edge_rv: BTreeMap<ViewpointId, RoomId>,
    pub edge_ro: BTreeMap<ObjectId, RoomId>,
    pub edges_vo: BTreeSet<(ViewpointId, ObjectId)>,
    pub edges_oo: BTreeMap<(ObjectId, ObjectId), String>,
    /// Every pose the agent has occupied, in order.
    pub trajectory: Vec<Pose>,
    /// Subsampled visited cells used for surface-coverage accounting.
    pub coverage_poses: Vec<Cell>,
    last_coverage_pose: Option<Pose>,
    // Query caches: one reasoner call per key, ever.
    attr_queried: BTreeSet<(ObjectId, String)>,
    relation_cache: BTreeMap<(ObjectId, ObjectId, String), bool>,
    pub cfg: SceneConfig,
}

impl SceneRep {
    pub fn new(dims: GridDims, cfg: SceneConfig) -> Self {
        SceneRep {
            dims,
            belief: vec![Belief::Unknown; dims.len()],
            rooms: Vec::new(),
            next_room_id: 0,
            viewpoints: Vec::new(),
            objects: Vec::new(),
            next_object_id: 0,
            coverage_union: FixedBitSet::with_capacity(dims.len()),
            edges_rr: BTreeSet::new(),
            edge_rv: BTreeMap::new(),
            edge_ro: BTreeMap::new(),
            edges_vo: BTreeSet::new(),
            edges_oo: BTreeMap::new(),
            trajectory: Vec::new(),
            coverage_poses: Vec::new(),
            last_coverage_pose: None,
            attr_queried: BTreeSet::new(),
            relation_cache: BTreeMap::new(),
            cfg,
        }
    }

    pub fn belief_at(&self, c: Cell) -> Belief {
        if self.dims.contains(c) {
            self.belief[self.dims.index(c)]
        } else {
            Belief::Unknown
        }
    }

    pub fn belief_grid(&self) -> &[Belief] {
        &self.belief
    }

    pub fn known_free(&self, c: Cell) -> bool {
        self.belief_at(c) == Belief::Free
    }

    pub fn room(&self, id: RoomId) -> Option<&RoomNode> {
        self.rooms.iter().find(|r| r.id == id)
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectNode> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn viewpoint(&self, id: ViewpointId) -> Option<&ViewpointNode> {
        self.viewpoints.iter().find(|v| v.id == id)
    }

    /// Room whose mask contains the cell.
    pub fn room_at(&self, c: Cell) -> Option<RoomId> {
        if !self.dims.contains(c) {
            return None;
        }
        let idx = self.dims.index(c);
        self.rooms
            .iter()
            .find(|r| r.mask.contains(idx))
            .map(|r| r.id)
    }

    /// Fuse one observation: belief update, trajectory append, detection
    /// association and merge into object nodes.
    pub fn integrate_observation(&mut self, obs: &Observation) {
        for &(c, label) in &obs.visible {
            let idx = self.dims.index(c);
            let new = match label {
                crate::world::CellLabel::Free => Belief::Free,
                crate::world::CellLabel::Occupied => Belief::Occupied,
            };
            // Occupied overrides Free overrides Unknown.
            let slot = &mut self.belief[idx];
            let rank = |b: Belief| match b {
                Belief::Unknown => 0,
                Belief::Free => 1,
                Belief::Occupied => 2,
            };
            if rank(new) > rank(*slot) {
                *slot = new;
            }
        }
        self.trajectory.push(obs.pose);
        let record = match self.last_coverage_pose {
            None => true,
            Some(last) => last.distance(&obs.pose) >= self.cfg.traj_sample_dist_m,
        };
        if record {
            self.last_coverage_pose = Some(obs.pose);
            if self.coverage_poses.last() != Some(&obs.origin) {
                self.coverage_poses.push(obs.origin);
            }
        }
        for det in &obs.detections {
            self.merge_detection(det);
        }
    }

    /// Merge rule: same category and (footprint overlap or centroid within
    /// the merge distance).
    fn merge_detection(&mut self, det: &crate::world::Detection) {
        let (dx, dy) = crate::priors::cells_centroid(&det.cells, self.dims.resolution);
        let mut matches: Vec<usize> = Vec::new();
        for (i, node) in self.objects.iter().enumerate() {
            if node.category != det.category {
                continue;
            }
            let overlap = det.cells.iter().any(|c| node.cells.binary_search(c).is_ok());
            let (nx, ny) = node.centroid_m(self.dims.resolution);
            let centroid_close =
                ((nx - dx).powi(2) + (ny - dy).powi(2)).sqrt() < self.cfg.merge_dist_m;
            if overlap || centroid_close {
                matches.push(i);
            }
        }
        if matches.is_empty() {
            let mut cells = det.cells.clone();
            cells.sort();
            cells.dedup();
            let bbox = CellBbox::of(&cells).expect("detections are non-empty");
            self.objects.push(ObjectNode {
                id: self.next_object_id,
                category: det.category.clone(),
                confidence: det.confidence,
                cells,
                bbox,
                attributes: BTreeMap::new(),
            });
            self.next_object_id += 1;
            return;
        }
        // Merge into the first (lowest-id) match; a detection bridging
        // several nodes collapses them into one.
        let keep = matches[0];
        let mut absorbed: Vec<ObjectNode> = Vec::new();
        for &i in matches[1..].iter().rev() {
            absorbed.push(self.objects.remove(i));
        }
        let keep_id = self.objects[keep].id;
        for dead in &absorbed {
            self.repoint_object_edges(dead.id, keep_id);
        }
        let node = &mut self.objects[keep];
        for dead in absorbed {
            node.cells.extend_from_slice(&dead.cells);
            node.confidence = node.confidence.max(dead.confidence);
            for (k, v) in dead.attributes {
                node.attributes.entry(k).or_insert(v);
            }
        }
        node.cells.extend_from_slice(&det.cells);
        node.cells.sort();
        node.cells.dedup();
        node.confidence = node.confidence.max(det.confidence);
        node.bbox = CellBbox::of(&node.cells).expect("non-empty");
    }

    fn repoint_object_edges(&mut self, from: ObjectId, to: ObjectId) {
        let vo: Vec<ViewpointId> = self
            .edges_vo
            .iter()
            .filter(|(_, o)| *o == from)
            .map(|(v, _)| *v)
            .collect();
        for v in vo {
            self.edges_vo.remove(&(v, from));
            self.edges_vo.insert((v, to));
        }
        if let Some(r) = self.edge_ro.remove(&from) {
            self.edge_ro.entry(to).or_insert(r);
        }
        let oo: Vec<((ObjectId, ObjectId), String)> = self
            .edges_oo
            .iter()
            .filter(|((a, b), _)| *a == from || *b == from)
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        for ((a, b), rel) in oo {
            self.edges_oo.remove(&(a, b));
            let a2 = if a == from { to } else { a };
            let b2 = if b == from { to } else { b };
            if a2 != b2 {
                self.edges_oo.insert((a2, b2), rel);
            }
        }
        let attrs: Vec<(ObjectId, String)> = self
            .attr_queried
            .iter()
            .filter(|(o, _)| *o == from)
            .cloned()
            .collect();
        for (o, name) in attrs {
            self.attr_queried.remove(&(o, name.clone()));
            self.attr_queried.insert((to, name));
        }
        let rels: Vec<((ObjectId, ObjectId, String), bool)> = self
            .relation_cache
            .iter()
            .filter(|((a, b, _), _)| *a == from || *b == from)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        for ((a, b, rel), v) in rels {
            self.relation_cache.remove(&(a, b, rel.clone()));
            let a2 = if a == from { to } else { a };
            let b2 = if b == from { to } else { b };
            if a2 != b2 {
                self.relation_cache.entry((a2, b2, rel)).or_insert(v);
            }
        }
    }

    /// Coverage region of an observation: visible cells within the
    /// coverage distance of the capture cell.
    pub fn coverage_of_observation(&self, obs: &Observation) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.dims.len());
        let d_cover_cells = self.cfg.d_cover / self.dims.resolution;
        for &(c, _) in &obs.visible {
            if obs.origin.dist_cells(c) < d_cover_cells {
                set.insert(self.dims.index(c));
            }
        }
        set
    }

    /// Viewpoint admission: admit the pose iff its coverage region adds
    /// strictly more than `novelty_eps_cells` new cells beyond the union of
    /// existing viewpoint coverage.
    pub fn maybe_add_viewpoint(&mut self, obs: &Observation) -> Option<ViewpointId> {
        let coverage = self.coverage_of_observation(obs);
        let novel = coverage
            .ones()
            .filter(|&i| !self.coverage_union.contains(i))
            .count();
        if novel > self.cfg.novelty_eps_cells {
            Some(self.add_viewpoint(obs, coverage))
        } else {
            None
        }
    }

    /// Unconditional admission, used when verification needs a stored view
    /// of a specific object regardless of coverage novelty.
    pub fn add_viewpoint_forced(&mut self, obs: &Observation) -> ViewpointId {
        let coverage = self.coverage_of_observation(obs);
        self.add_viewpoint(obs, coverage)
    }

    fn add_viewpoint(&mut self, obs: &Observation, coverage: FixedBitSet) -> ViewpointId {
        let id = self.viewpoints.len() as ViewpointId;
        self.coverage_union.union_with(&coverage);
        // Visibility edges to every object this observation detected.
        for det in &obs.detections {
            if let Some(oid) = self.associate_detection(det) {
                self.edges_vo.insert((id, oid));
            }
        }
        if let Some(rid) = self.room_at(obs.origin) {
            self.edge_rv.insert(id, rid);
        }
        self.viewpoints.push(ViewpointNode {
            id,
            pose: obs.pose,
            cell: obs.origin,
            coverage,
            observation: obs.clone(),
        });
        id
    }

    /// Node holding (part of) this detection's footprint.
    pub fn associate_detection(&self, det: &crate::world::Detection) -> Option<ObjectId> {
        self.objects
            .iter()
            .find(|n| {
                n.category == det.category
                    && det.cells.iter().any(|c| n.cells.binary_search(c).is_ok())
            })
            .map(|n| n.id)
    }

    /// Union of admitted viewpoint coverage.
    pub fn coverage_union(&self) -> &FixedBitSet {
        &self.coverage_union
    }

    // -- Best views ---------------------------------------------------------

    /// Viewpoint seeing the most footprint cells of the object.
    pub fn object_best_view(&self, oid: ObjectId) -> Option<ViewpointId> {
        let node = self.object(oid)?;
        let mut best: Option<(usize, ViewpointId)> = None;
        for &(vid, o) in &self.edges_vo {
            if o != oid {
                continue;
            }
            let vp = self.viewpoint(vid)?;
            let score = node.cells.iter().filter(|c| vp.observation.sees(**c)).count();
            best = match best {
                None => Some((score, vid)),
                Some((s, v)) => {
                    if score > s || (score == s && vid < v) {
                        Some((score, vid))
                    } else {
                        Some((s, v))
                    }
                }
            };
        }
        best.map(|(_, v)| v)
    }

    fn room_best_view(&self, room: &RoomNode) -> Option<ViewpointId> {
        let mut best: Option<(usize, ViewpointId)> = None;
        for vp in &self.viewpoints {
            let score = vp
                .observation
                .visible
                .iter()
                .filter(|(c, _)| self.dims.contains(*c) && room.mask.contains(self.dims.index(*c)))
                .count();
            if score == 0 {
                continue;
            }
            best = match best {
                None => Some((score, vp.id)),
                Some((s, v)) => {
                    if score > s || (score == s && vp.id < v) {
                        Some((score, vp.id))
                    } else {
                        Some((s, v))
                    }
                }
            };
        }
        best.map(|(_, v)| v)
    }

    /// Re-evaluate room best views, querying the reasoner for a category
    /// only when a room's best view changed.
    pub fn update_room_categories(&mut self, reasoner: &dyn Reasoner) {
        for i in 0..self.rooms.len() {
            let room = &self.rooms[i];
            let stale = room.mask_changed || room.eval_vp_count != self.viewpoints.len();
            if !stale {
                continue;
            }
            let new_best = self.room_best_view(&self.rooms[i]);
            let room = &mut self.rooms[i];
            room.eval_vp_count = self.viewpoints.len();
            room.mask_changed = false;
            if new_best == room.best_view {
                continue;
            }
            room.best_view = new_best;
            let Some(vid) = new_best else {
                continue;
            };
            let obs = ctx_observation(&self.viewpoint(vid).expect("live viewpoint").observation);
            let decision = reasoner.decide(&ReasonerContext::RoomLabel { observation: obs });
            if let Decision::RoomLabel(label) = decision {
                self.rooms[i].category = label;
            }
        }
    }

    // -- On-demand inference -------------------------------------------------

    /// Annotate every node of `category` with the named attribute via its
    /// best view. Cached: a (node, attribute) pair is queried at most once.
    /// Nodes without a stored view are skipped (still unqueried).
    pub fn infer_attribute_on_demand(
        &mut self,
        category: &str,
        name: &str,
        reasoner: &dyn Reasoner,
    ) {
        let ids: Vec<ObjectId> = self
            .objects
            .iter()
            .filter(|o| o.category == category)
            .map(|o| o.id)
            .collect();
        for oid in ids {
            let key = (oid, name.to_string());
            if self.attr_queried.contains(&key) {
                continue;
            }
            let Some(vid) = self.object_best_view(oid) else {
                continue;
            };
            let observation =
                ctx_observation(&self.viewpoint(vid).expect("live viewpoint").observation);
            let object = self.ctx_object(oid).expect("live object");
            let decision = reasoner.decide(&ReasonerContext::AttributeQuery {
                observation,
                object,
                name: name.to_string(),
            });
            self.attr_queried.insert(key);
            let state = match decision {
                Decision::Attribute(Some(v)) => AttrState::Known(v),
                _ => AttrState::Unknown,
            };
            if let Some(node) = self.objects.iter_mut().find(|o| o.id == oid) {
                node.attributes.insert(name.to_string(), state);
            }
        }
    }

    /// Viewpoints observing both objects.
    pub fn co_observing(&self, a: ObjectId, b: ObjectId) -> Vec<ViewpointId> {
        self.viewpoints
            .iter()
            .map(|v| v.id)
            .filter(|v| self.edges_vo.contains(&(*v, a)) && self.edges_vo.contains(&(*v, b)))
            .collect()
    }

    /// Decide whether `rel` holds with `subject` relative to `anchor`,
    /// querying from a co-observing viewpoint. On confirmation an
    /// object-object edge is recorded. Undetermined when no viewpoint
    /// observes both.
    pub fn infer_relation_on_demand(
        &mut self,
        subject: ObjectId,
        anchor: ObjectId,
        rel: &str,
        reasoner: &dyn Reasoner,
    ) -> RelationOutcome {
        let key = (subject, anchor, rel.to_string());
        if let Some(&confirmed) = self.relation_cache.get(&key) {
            return if confirmed {
                RelationOutcome::Confirmed
            } else {
                RelationOutcome::Rejected
            };
        }
        let shared = self.co_observing(subject, anchor);
        let Some(&vid) = shared.first() else {
            return RelationOutcome::Undetermined;
        };
        let observation =
            ctx_observation(&self.viewpoint(vid).expect("live viewpoint").observation);
        let (Some(subj), Some(anch)) = (self.ctx_object(subject), self.ctx_object(anchor)) else {
            return RelationOutcome::Undetermined;
        };
        let decision = reasoner.decide(&ReasonerContext::RelationQuery {
            observation,
            rel: rel.to_string(),
            subject: subj,
            anchor: anch,
        });
        let confirmed = decision == Decision::Relation(RelationVerdict::Holds);
        self.relation_cache.insert(key, confirmed);
        if confirmed {
            let pair = (subject.min(anchor), subject.max(anchor));
            self.edges_oo.insert(pair, rel.to_string());
        }
        if confirmed {
            RelationOutcome::Confirmed
        } else {
            RelationOutcome::Rejected
        }
    }

    // -- Context building ----------------------------------------------------

    pub fn ctx_object(&self, oid: ObjectId) -> Option<CtxObject> {
        let node = self.object(oid)?;
        let mut attributes = BTreeMap::new();
        for (k, v) in &node.attributes {
            if let AttrState::Known(val) = v {
                attributes.insert(k.clone(), val.clone());
            }
        }
        Some(CtxObject {
            node_id: node.id,
            category: node.category.clone(),
            attributes,
            cells: node.cells.clone(),
        })
    }

    fn ctx_room(&self, rid: RoomId, path_dist_m: Option<f64>) -> Option<CtxRoom> {
        let room = self.room(rid)?;
        let objects: Vec<CtxObject> = self
            .edge_ro
            .iter()
            .filter(|(_, r)| **r == rid)
            .filter_map(|(o, _)| self.ctx_object(*o))
            .collect();
        Some(CtxRoom {
            id: rid,
            category: room.category.clone(),
            mask_cells: room.mask_cells(),
            centroid_m: room.centroid_m(&self.dims),
            objects,
            path_dist_m,
        })
    }

    /// Room-visit sequence derived from the trajectory under the current
    /// segmentation (consecutive duplicates removed).
    pub fn room_visit_sequence(&self) -> Vec<RoomId> {
        let mut seq = Vec::new();
        for pose in &self.trajectory {
            if let Some(rid) = self.room_at(pose.cell(self.dims.resolution)) {
                if seq.last() != Some(&rid) {
                    seq.push(rid);
                }
            }
        }
        seq
    }

    /// Assemble a reasoner context from the current representation.
    pub fn build_context(&self, mode: &ContextMode, goal: &Goal) -> Option<ReasonerContext> {
        match mode {
            ContextMode::EarlyStop { current, new_room } => Some(ReasonerContext::EarlyStop {
                current: self.ctx_room(*current, None)?,
                new_room: self.ctx_room(*new_room, None)?,
                goal: goal.clone(),
            }),
            ContextMode::RoomQuery { uncovered } => {
                // Known-map path distances from the agent's current cell to
                // each candidate room's nearest mask cell.
                let dist = self.trajectory.last().map(|pose| {
                    dijkstra_all(
                        &self.dims,
                        |c| self.known_free(c),
                        pose.cell(self.dims.resolution),
                    )
                });
                let mut rooms = Vec::new();
                for &rid in uncovered {
                    let d = match (&dist, self.room(rid)) {
                        (Some(dist), Some(room)) => {
                            let best = room
                                .mask
                                .ones()
                                .map(|i| dist[i])
                                .fold(f64::INFINITY, f64::min);
                            best.is_finite().then_some(best)
                        }
                        _ => None,
                    };
                    rooms.push(self.ctx_room(rid, d)?);
                }
                Some(ReasonerContext::RoomQuery {
                    uncovered: rooms,
                    visited_sequence: self.room_visit_sequence(),
                    goal: goal.clone(),
                })
            }
        }
    }

    /// Reveal the full ground-truth occupancy (evaluation helper: lets
    /// tests and tools study segmentation on a fully observed map).
    pub fn reveal_full(&mut self, world: &World) {
        for c in self.dims.iter_cells() {
            let idx = self.dims.index(c);
            self.belief[idx] = if world.map.is_occupied(c) {
                Belief::Occupied
            } else {
                Belief::Free
            };
        }
    }
}

/// Slim context view of a stored observation.
pub fn ctx_observation(obs: &Observation) -> CtxObservation {
    CtxObservation {
        origin: obs.origin,
        visible_cells: obs.visible.iter().map(|(c, _)| *c).collect(),
        detections: obs
            .detections
            .iter()
            .map(|d| CtxDetection {
                category: d.category.clone(),
                cells: d.cells.clone(),
            })
            .collect(),
    }
}
